//! Uniform cell-centered 1-D mesh, finite-difference stencils up to fourth
//! order, and midpoint quadrature.
//!
//! Cell centers sit at `x_j = (j + 1/2) h`. Boundary handling is ghost-based:
//! periodic wrap, even reflection (`NeumannLike`, zero-gradient walls), odd
//! reflection (`DirichletZero`, zero-value walls), or one-sided stencils
//! (`NoBc`, for fields that carry no boundary condition).

use crate::error::{Error, Result};
use std::ops::{Deref, DerefMut};

/// Boundary-condition mode of the whole problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcMode {
    /// L-periodic domain.
    Periodic,
    /// Walls at x = 0, L with (u, chi_x, mu_x) = 0.
    Mixed,
}

/// Per-field boundary closure used by [`diff`] when the grid is `Mixed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Even reflection across the wall (zero normal gradient: chi, mu).
    NeumannLike,
    /// Odd reflection across the wall (zero wall value: u).
    DirichletZero,
    /// No boundary condition; one-sided second-order stencils (rho).
    NoBc,
}

/// Uniform mesh over [0, L] with N cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    cells: usize,
    spacing: f64,
    bc: BcMode,
}

/// Minimum cell count for the five-point stencils to make sense.
pub const MIN_CELLS: usize = 8;

impl Grid {
    /// Build a grid; rejects `n < 8` or non-positive length.
    pub fn new(length: f64, cells: usize, bc: BcMode) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!(
                "grid length must be positive and finite, got {length}"
            )));
        }
        if cells < MIN_CELLS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        Ok(Self {
            length,
            cells,
            spacing: length / cells as f64,
            bc,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bc(&self) -> BcMode {
        self.bc
    }

    /// Cell-center coordinate of cell `j`.
    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing
    }

    /// All cell centers.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.center(j)).collect()
    }
}

/// A scalar field sampled at cell centers. Value-semantic.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Field(vec![value; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Field(values)
    }

    /// Sample `f` at the cell centers of `grid`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Field((0..grid.cells()).map(|j| f(grid.center(j))).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Max-norm distance to another field of the same length.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Ghost-padded copy of a field: two ghost cells on each side.
///
/// Returns `None` for `NoBc` on a mixed grid (no reflection is defined; the
/// caller falls back to one-sided stencils).
fn padded(field: &[f64], bc: BcMode, kind: FieldKind) -> Option<Vec<f64>> {
    let n = field.len();
    let mut g = vec![0.0; n + 4];
    g[2..n + 2].copy_from_slice(field);
    match bc {
        BcMode::Periodic => {
            g[0] = field[n - 2];
            g[1] = field[n - 1];
            g[n + 2] = field[0];
            g[n + 3] = field[1];
        }
        BcMode::Mixed => match kind {
            FieldKind::NeumannLike => {
                g[0] = field[1];
                g[1] = field[0];
                g[n + 2] = field[n - 1];
                g[n + 3] = field[n - 2];
            }
            FieldKind::DirichletZero => {
                g[0] = -field[1];
                g[1] = -field[0];
                g[n + 2] = -field[n - 1];
                g[n + 3] = -field[n - 2];
            }
            FieldKind::NoBc => return None,
        },
    }
    Some(g)
}

/// Centered finite difference of `field`, derivative order 1..=4.
///
/// Interior stencils are second-order accurate: three points for orders 1-2,
/// five points for orders 3-4. On mixed grids the closure is chosen by
/// `kind`; on periodic grids `kind` is ignored.
pub fn diff(field: &Field, order: u8, grid: &Grid, kind: FieldKind) -> Field {
    assert!(
        (1..=4).contains(&order),
        "derivative order must be 1..=4, got {order}"
    );
    assert_eq!(field.len(), grid.cells(), "field/grid size mismatch");
    let n = grid.cells();
    let h = grid.spacing();
    let mut out = vec![0.0; n];

    if let Some(g) = padded(field, grid.bc(), kind) {
        // Uniform interior stencils over the ghost-padded array; cell j maps
        // to padded index j + 2.
        match order {
            1 => {
                let c = 1.0 / (2.0 * h);
                for j in 0..n {
                    out[j] = (g[j + 3] - g[j + 1]) * c;
                }
            }
            2 => {
                let c = 1.0 / (h * h);
                for j in 0..n {
                    out[j] = (g[j + 3] - 2.0 * g[j + 2] + g[j + 1]) * c;
                }
            }
            3 => {
                // difference of second differences: exact zero on constants
                let c = 1.0 / (2.0 * h * h * h);
                let s = |j: usize| g[j + 1] - 2.0 * g[j] + g[j - 1];
                for j in 0..n {
                    out[j] = (s(j + 3) - s(j + 1)) * c;
                }
            }
            4 => {
                let c = 1.0 / (h * h * h * h);
                let s = |j: usize| g[j + 1] - 2.0 * g[j] + g[j - 1];
                for j in 0..n {
                    out[j] = (s(j + 3) - 2.0 * s(j + 2) + s(j + 1)) * c;
                }
            }
            _ => unreachable!(),
        }
        return Field(out);
    }

    // NoBc on a mixed grid: interior centered stencils plus one-sided
    // second-order closures near the walls. Everything is evaluated through
    // nested differences so constants are annihilated exactly.
    let f = &field[..];
    let d1 = |j: usize| f[j + 1] - f[j]; // forward first difference
    let s = |j: usize| f[j + 1] - 2.0 * f[j] + f[j - 1]; // centered second
    let t = |j: usize| d1(j + 2) - 2.0 * d1(j + 1) + d1(j); // third at j..j+3
    let q = |j: usize| s(j + 2) - 2.0 * s(j + 1) + s(j); // fourth at j-1..j+3
    match order {
        1 => {
            let c = 1.0 / (2.0 * h);
            out[0] = (3.0 * d1(0) - d1(1)) * c;
            for j in 1..n - 1 {
                out[j] = (f[j + 1] - f[j - 1]) * c;
            }
            out[n - 1] = (3.0 * d1(n - 2) - d1(n - 3)) * c;
        }
        2 => {
            let c = 1.0 / (h * h);
            out[0] = (2.0 * s(1) - s(2)) * c;
            for j in 1..n - 1 {
                out[j] = s(j) * c;
            }
            out[n - 1] = (2.0 * s(n - 2) - s(n - 3)) * c;
        }
        3 => {
            let c = 1.0 / (2.0 * h * h * h);
            out[0] = (5.0 * t(0) - 3.0 * t(1)) * c;
            out[1] = (3.0 * t(0) - t(1)) * c;
            for j in 2..n - 2 {
                out[j] = (s(j + 1) - s(j - 1)) * c;
            }
            out[n - 2] = (3.0 * t(n - 4) - t(n - 5)) * c;
            out[n - 1] = (5.0 * t(n - 4) - 3.0 * t(n - 5)) * c;
        }
        4 => {
            let c = 1.0 / (h * h * h * h);
            out[0] = (3.0 * q(1) - 2.0 * q(2)) * c;
            out[1] = (2.0 * q(1) - q(2)) * c;
            for j in 2..n - 2 {
                // centered fourth difference spans j-2..j+2, i.e. q(j-1)
                out[j] = q(j - 1) * c;
            }
            out[n - 2] = (2.0 * q(n - 4) - q(n - 5)) * c;
            out[n - 1] = (3.0 * q(n - 4) - 2.0 * q(n - 5)) * c;
        }
        _ => unreachable!(),
    }
    Field(out)
}

/// Midpoint-rule integral: h * sum of cell values, Neumaier-compensated.
///
/// Exact for constants; O(h^2) on smooth integrands. The compensated sum
/// keeps conservation diagnostics from drowning in summation noise.
pub fn integrate(field: &Field, grid: &Grid) -> f64 {
    debug_assert_eq!(field.len(), grid.cells());
    compensated_sum(field) * grid.spacing()
}

/// Neumaier compensated sum of a slice.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
