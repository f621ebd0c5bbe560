//! Direct solvers for tridiagonal and pentadiagonal systems, with cyclic
//! (periodic wrap-around) variants.
//!
//! Non-cyclic systems use banded LU without pivoting, which is stable for
//! the diagonally dominant operators assembled by the time stepper. Cyclic
//! tridiagonal systems use the Sherman-Morrison rank-1 correction; cyclic
//! pentadiagonal systems eliminate the last two unknowns against the
//! non-cyclic factorization (a 2x2 Schur complement). Every solve is checked
//! against its residual bound before being returned.

use crate::error::{Error, Result};

/// A banded N x N system. Bands are row-indexed: `sub1[i] = A[i][i-1]`,
/// `sup2[i] = A[i][i+2]`, and so on, with column indices taken modulo N when
/// `cyclic` is true. Out-of-range entries of non-cyclic systems are ignored.
#[derive(Debug, Clone)]
pub struct BandedSystem {
    pub n: usize,
    /// 1 = tridiagonal, 2 = pentadiagonal.
    pub bandwidth: usize,
    pub cyclic: bool,
    pub sub2: Vec<f64>,
    pub sub1: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup1: Vec<f64>,
    pub sup2: Vec<f64>,
}

/// Relative residual bound of [`solve`]: `|r|_inf <= RESIDUAL_BOUND * |A|_inf * |x|_inf`.
pub const RESIDUAL_BOUND: f64 = 1e-10;

impl BandedSystem {
    pub fn tridiagonal(n: usize, cyclic: bool) -> Self {
        Self {
            n,
            bandwidth: 1,
            cyclic,
            sub2: Vec::new(),
            sub1: vec![0.0; n],
            diag: vec![0.0; n],
            sup1: vec![0.0; n],
            sup2: Vec::new(),
        }
    }

    pub fn pentadiagonal(n: usize, cyclic: bool) -> Self {
        Self {
            n,
            bandwidth: 2,
            cyclic,
            sub2: vec![0.0; n],
            sub1: vec![0.0; n],
            diag: vec![0.0; n],
            sup1: vec![0.0; n],
            sup2: vec![0.0; n],
        }
    }

    /// Add `v` to `A[row][col_offset]` where `col = row + col_offset`.
    #[inline]
    pub fn add(&mut self, row: usize, col_offset: isize, v: f64) {
        let n = self.n as isize;
        let raw = row as isize + col_offset;
        if !self.cyclic && (raw < 0 || raw >= n) {
            return; // outside a non-cyclic matrix: dropped by the closure
        }
        match col_offset {
            -2 => self.sub2[row] += v,
            -1 => self.sub1[row] += v,
            0 => self.diag[row] += v,
            1 => self.sup1[row] += v,
            2 => self.sup2[row] += v,
            _ => panic!("offset {col_offset} outside bandwidth"),
        }
    }

    /// y = A x, honoring the cyclic wrap.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        let idx = |i: isize| -> usize { i.rem_euclid(n as isize) as usize };
        for i in 0..n {
            let ii = i as isize;
            let mut s = self.diag[i] * x[i];
            if self.cyclic || i >= 1 {
                s += self.sub1[i] * x[idx(ii - 1)];
            }
            if self.cyclic || i + 1 < n {
                s += self.sup1[i] * x[idx(ii + 1)];
            }
            if self.bandwidth == 2 {
                if self.cyclic || i >= 2 {
                    s += self.sub2[i] * x[idx(ii - 2)];
                }
                if self.cyclic || i + 2 < n {
                    s += self.sup2[i] * x[idx(ii + 2)];
                }
            }
            y[i] = s;
        }
        y
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        let n = self.n;
        let mut norm = 0.0_f64;
        for i in 0..n {
            let mut s = self.diag[i].abs();
            if self.cyclic || i >= 1 {
                s += self.sub1[i].abs();
            }
            if self.cyclic || i + 1 < n {
                s += self.sup1[i].abs();
            }
            if self.bandwidth == 2 {
                if self.cyclic || i >= 2 {
                    s += self.sub2[i].abs();
                }
                if self.cyclic || i + 2 < n {
                    s += self.sup2[i].abs();
                }
            }
            norm = norm.max(s);
        }
        norm
    }
}

fn check_pivot(row: usize, pivot: f64, scale: f64) -> Result<()> {
    if !pivot.is_finite() || pivot.abs() <= 1e-300 * scale.max(1.0) {
        return Err(Error::SingularSystem { row, pivot });
    }
    Ok(())
}

/// Thomas algorithm for a non-cyclic tridiagonal system.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    check_pivot(0, diag[0], diag[0].abs())?;
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        check_pivot(i, m, diag[i].abs())?;
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Ok(x)
}

/// Cyclic tridiagonal via Sherman-Morrison rank-1 correction.
fn cyclic_thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let alpha = sub[0]; // A[0][n-1]
    let beta = sup[n - 1]; // A[n-1][0]
    if alpha == 0.0 && beta == 0.0 {
        return thomas(sub, diag, sup, rhs);
    }
    let gamma = -diag[0];
    let mut dmod = diag.to_vec();
    dmod[0] = diag[0] - gamma;
    dmod[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let y = thomas(sub, &dmod, sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = beta;
    let z = thomas(sub, &dmod, sup, &u)?;
    let vy = y[0] + alpha / gamma * y[n - 1];
    let vz = z[0] + alpha / gamma * z[n - 1];
    let denom = 1.0 + vz;
    check_pivot(0, denom, 1.0)?;
    let factor = vy / denom;
    Ok(y.iter().zip(z.iter()).map(|(yi, zi)| yi - factor * zi).collect())
}

/// Banded LU for a non-cyclic pentadiagonal system.
///
/// Row i couples x[i-2..=i+2] through (a, b, c, d, e) = (sub2, sub1, diag,
/// sup1, sup2).
fn pdma(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
    e: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = c.len();
    assert!(n >= 5, "pentadiagonal solve needs n >= 5, got {n}");
    let mut mu = vec![0.0; n];
    let mut al = vec![0.0; n];
    let mut be = vec![0.0; n];
    let mut ga = vec![0.0; n];
    let mut z = vec![0.0; n];

    mu[0] = c[0];
    check_pivot(0, mu[0], c[0].abs())?;
    al[0] = d[0] / mu[0];
    be[0] = e[0] / mu[0];
    z[0] = rhs[0] / mu[0];

    ga[1] = b[1];
    mu[1] = c[1] - al[0] * ga[1];
    check_pivot(1, mu[1], c[1].abs())?;
    al[1] = (d[1] - be[0] * ga[1]) / mu[1];
    be[1] = e[1] / mu[1];
    z[1] = (rhs[1] - z[0] * ga[1]) / mu[1];

    for i in 2..n {
        ga[i] = b[i] - al[i - 2] * a[i];
        mu[i] = c[i] - be[i - 2] * a[i] - al[i - 1] * ga[i];
        check_pivot(i, mu[i], c[i].abs())?;
        if i <= n - 2 {
            al[i] = (d[i] - be[i - 1] * ga[i]) / mu[i];
        }
        if i <= n - 3 {
            be[i] = e[i] / mu[i];
        }
        z[i] = (rhs[i] - z[i - 2] * a[i] - z[i - 1] * ga[i]) / mu[i];
    }

    let mut x = z;
    let xi = x[n - 2] - al[n - 2] * x[n - 1];
    x[n - 2] = xi;
    for i in (0..n - 2).rev() {
        let xi = x[i] - al[i] * x[i + 1] - be[i] * x[i + 2];
        x[i] = xi;
    }
    Ok(x)
}

/// Cyclic pentadiagonal: eliminate the last two unknowns against the
/// non-cyclic (n-2) x (n-2) leading block, then solve the 2x2 Schur
/// complement.
fn cyclic_pdma(sys: &BandedSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = sys.n;
    assert!(n >= 8, "cyclic pentadiagonal solve needs n >= 8, got {n}");
    let m = n - 2;

    // Leading block bands (regular couplings only).
    let a = &sys.sub2[..m];
    let b = &sys.sub1[..m];
    let c = &sys.diag[..m];
    // sup1/sup2 of rows m-2, m-1 reach columns >= m; zero them in the block.
    let mut d = sys.sup1[..m].to_vec();
    let mut e = sys.sup2[..m].to_vec();
    d[m - 1] = 0.0;
    e[m - 1] = 0.0;
    e[m - 2] = 0.0;

    // C block: couplings of rows 0..m-1 to columns m, m+1.
    let mut c0 = vec![0.0; m]; // column m   (= x[n-2])
    let mut c1 = vec![0.0; m]; // column m+1 (= x[n-1])
    c0[0] = sys.sub2[0]; // A[0][n-2]
    c1[0] = sys.sub1[0]; // A[0][n-1]
    c1[1] = sys.sub2[1]; // A[1][n-1]
    c0[m - 2] += sys.sup2[m - 2]; // A[m-2][m]
    c0[m - 1] += sys.sup1[m - 1]; // A[m-1][m]
    c1[m - 1] += sys.sup2[m - 1]; // A[m-1][m+1]

    // D block: couplings of rows n-2, n-1 back into columns 0..m-1.
    // row n-2: sub2 -> col n-4, sub1 -> col n-3, sup2 wraps to col 0.
    // row n-1: sub2 -> col n-3, sup1 wraps to col 0, sup2 wraps to col 1.
    let row_a = [
        (m - 2, sys.sub2[n - 2]),
        (m - 1, sys.sub1[n - 2]),
        (0, sys.sup2[n - 2]),
    ];
    let row_b = [
        (m - 1, sys.sub2[n - 1]),
        (0, sys.sup1[n - 1]),
        (1, sys.sup2[n - 1]),
    ];

    // E block (2x2) among x[n-2], x[n-1].
    let e00 = sys.diag[n - 2];
    let e01 = sys.sup1[n - 2];
    let e10 = sys.sub1[n - 1];
    let e11 = sys.diag[n - 1];

    let g = pdma(a, b, c, &d, &e, &rhs[..m])?;
    let w0 = pdma(a, b, c, &d, &e, &c0)?;
    let w1 = pdma(a, b, c, &d, &e, &c1)?;

    let dot = |coeffs: &[(usize, f64)], v: &[f64]| -> f64 {
        coeffs.iter().map(|&(j, coef)| coef * v[j]).sum()
    };

    let s00 = e00 - dot(&row_a, &w0);
    let s01 = e01 - dot(&row_a, &w1);
    let s10 = e10 - dot(&row_b, &w0);
    let s11 = e11 - dot(&row_b, &w1);
    let r0 = rhs[n - 2] - dot(&row_a, &g);
    let r1 = rhs[n - 1] - dot(&row_b, &g);

    let det = s00 * s11 - s01 * s10;
    check_pivot(n - 2, det, (s00.abs() + s11.abs()).max(1.0))?;
    let z0 = (r0 * s11 - r1 * s01) / det;
    let z1 = (r1 * s00 - r0 * s10) / det;

    let mut x = vec![0.0; n];
    for j in 0..m {
        x[j] = g[j] - w0[j] * z0 - w1[j] * z1;
    }
    x[n - 2] = z0;
    x[n - 1] = z1;
    Ok(x)
}

/// Solve `A x = rhs` and verify the residual bound
/// `|rhs - A x|_inf <= 1e-10 * |A|_inf * max(|x|_inf, 1)`.
pub fn solve(sys: &BandedSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(rhs.len(), sys.n);
    let x = match (sys.bandwidth, sys.cyclic) {
        (1, false) => thomas(&sys.sub1, &sys.diag, &sys.sup1, rhs)?,
        (1, true) => cyclic_thomas(&sys.sub1, &sys.diag, &sys.sup1, rhs)?,
        (2, false) => pdma(&sys.sub2, &sys.sub1, &sys.diag, &sys.sup1, &sys.sup2, rhs)?,
        (2, true) => cyclic_pdma(sys, rhs)?,
        (bw, _) => panic!("unsupported bandwidth {bw}"),
    };
    let ax = sys.matvec(&x);
    let mut res = 0.0_f64;
    for i in 0..sys.n {
        res = res.max((rhs[i] - ax[i]).abs());
    }
    let xmax = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bound = RESIDUAL_BOUND * sys.inf_norm() * xmax.max(1.0);
    if res > bound {
        return Err(Error::ResidualTooLarge { residual: res, bound });
    }
    Ok(x)
}
