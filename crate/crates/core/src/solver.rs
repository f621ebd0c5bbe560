//! Semi-implicit time integration of the regularized system.
//!
//! One step advances (rho, u, chi) by a damped Picard fixed-point loop:
//! transport velocities are frozen at the previous iterate while the
//! viscous, potential, and fourth-order interface terms are implicit.
//! Sub-steps within one iteration:
//!
//!   1. continuity: explicit conservative first-order upwind with face
//!      velocities from the previous iterate (positivity under the CFL bound,
//!      exact mass telescoping);
//!   2. concentration: conservative update of rho*chi with the full mu-flux
//!      divergence `Lap((1/eps) df_lambda(chi) - (eps/rho) Lap chi)` implicit,
//!      solved as one pentadiagonal Newton system whose potential block is
//!      the exact Jacobian `Lap diag(d2f_lambda(chi_prev))`;
//!   3. momentum: explicit upwind advective flux plus centered
//!      pressure/capillary flux, implicit viscosity (tridiagonal).
//!
//! All implicit solves are performed in increment form with operator-applied
//! residuals, so constant states are bit-exact fixed points and the converged
//! scheme satisfies the flux-form (telescoping) equations. After convergence
//! the conserved totals are re-pinned to their targets by uniform shifts at
//! floating-point roundoff scale, guarded by [`SHIFT_GUARD`].

use crate::banded::{self, BandedSystem};
use crate::diagnostics::{record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, diff, BcMode, Field, FieldKind, Grid};
use crate::potential::{d2f_lambda, df_lambda, PotentialModel};
use crate::state::{averages, Params, State};
use std::f64::consts::PI;

/// Controls of the per-step fixed-point loop. `dt` is the step size when
/// [`step`] is called directly and the step-size cap when driving [`run`].
#[derive(Debug, Clone, Copy)]
pub struct StepControls {
    pub dt: f64,
    /// Advective CFL safety factor in (0, 1].
    pub cfl: f64,
    pub picard_max: usize,
    /// Relative fixed-point tolerance on all three fields.
    pub picard_tol: f64,
    /// Vacuum guard on min rho.
    pub rho_floor: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            dt: 1e-3,
            cfl: 0.5,
            picard_max: 50,
            picard_tol: 1e-10,
            rho_floor: 1e-6,
        }
    }
}

/// Conserved totals used to re-pin the solver's roundoff drift. Holding the
/// time-0 values fixed across a whole trajectory makes the end-to-end drift
/// independent of the step count.
#[derive(Debug, Clone, Copy)]
pub struct ConservedTotals {
    /// sum of rho (cell sum, not integral)
    pub mass: f64,
    /// sum of rho*u
    pub momentum: f64,
    /// sum of rho*chi
    pub chi_mass: f64,
}

impl ConservedTotals {
    pub fn of(state: &State) -> Self {
        let prod = |a: &Field, b: &Field| -> Vec<f64> {
            a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
        };
        ConservedTotals {
            mass: compensated_sum(&state.rho),
            momentum: compensated_sum(&prod(&state.rho, &state.u)),
            chi_mass: compensated_sum(&prod(&state.rho, &state.chi)),
        }
    }
}

/// Hard cap on the conservation shift per field per iteration. A larger
/// shift means the scheme is leaking, not rounding.
pub const SHIFT_GUARD: f64 = 1e-8;

/// Outcome of one accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: State,
    pub picard_iters: usize,
}

/// Growth rate sigma(k) of mode e^{ikx} of the concentration equation
/// linearized about the constant state (rho_bar, 0, chi_bar):
/// `sigma(k) = -(eps/rho_bar^2) k^4 - ((3 chi_bar^2 - 1)/(eps rho_bar)) k^2`.
pub fn dispersion_growth_rate(params: &Params, rho_bar: f64, chi_bar: f64, k: f64) -> f64 {
    let eps = params.epsilon;
    let k2 = k * k;
    -(eps / (rho_bar * rho_bar)) * k2 * k2
        - (3.0 * chi_bar * chi_bar - 1.0) / (eps * rho_bar) * k2
}

/// Wavenumber maximizing sigma(k); `None` when the constant state is linearly
/// stable (no growing mode).
pub fn most_unstable_wavenumber(params: &Params, rho_bar: f64, chi_bar: f64) -> Option<f64> {
    let drive = 1.0 - 3.0 * chi_bar * chi_bar;
    if drive <= 0.0 {
        return None;
    }
    Some((drive * rho_bar / (2.0 * params.epsilon * params.epsilon)).sqrt())
}

/// Slowest decay rate among the linearized branches (acoustic pair and
/// concentration mode) over the first eight resolved wavenumbers. Used to
/// scale scenario horizons. Returns `None` if some scanned mode grows.
pub fn slowest_decay_rate(
    params: &Params,
    rho_bar: f64,
    chi_bar: f64,
    length: f64,
    bc: BcMode,
) -> Option<f64> {
    let base = match bc {
        BcMode::Periodic => 2.0 * PI / length,
        BcMode::Mixed => PI / length,
    };
    let c2 = params.dpressure(rho_bar);
    let mut slowest = f64::INFINITY;
    for m in 1..=8 {
        let k = base * m as f64;
        let sigma = dispersion_growth_rate(params, rho_bar, chi_bar, k);
        if sigma >= 0.0 {
            return None;
        }
        slowest = slowest.min(-sigma);
        // acoustic pair: mu^2 + (nu k^2 / rho_bar) mu + c^2 k^2 = 0
        let damp = params.nu * k * k / rho_bar;
        let disc = damp * damp - 4.0 * c2 * k * k;
        let rate = if disc >= 0.0 {
            0.5 * (damp - disc.sqrt()) // slow real root
        } else {
            0.5 * damp
        };
        slowest = slowest.min(rate);
    }
    Some(slowest)
}

/// Chemical potential `mu = df_lambda(chi)/eps - (eps/rho) chi_xx`, with the
/// zero-gradient closure for chi on mixed grids.
pub fn chemical_potential(state: &State, params: &Params, grid: &Grid) -> Result<Field> {
    let min_rho = state.rho.min();
    if !(min_rho > 0.0) {
        return Err(Error::Vacuum {
            min_rho,
            floor: 0.0,
            time: state.time,
        });
    }
    let model = PotentialModel::new(params.lambda, params.epsilon)?;
    let chi_xx = diff(&state.chi, 2, grid, FieldKind::NeumannLike);
    let mut mu = vec![0.0; grid.cells()];
    for j in 0..grid.cells() {
        mu[j] = df_lambda(state.chi[j], &model) / params.epsilon
            - params.epsilon / state.rho[j] * chi_xx[j];
    }
    Ok(Field::from_vec(mu))
}

/// Magnitude of the Fourier coefficient of mode index `m` (wavenumber
/// 2 pi m / L periodic, pi m / L mixed).
pub fn mode_amplitude(field: &Field, grid: &Grid, m: usize) -> f64 {
    let n = grid.cells() as f64;
    match grid.bc() {
        BcMode::Periodic => {
            let k = 2.0 * PI * m as f64 / grid.length();
            let mut a = 0.0;
            let mut b = 0.0;
            for (j, v) in field.iter().enumerate() {
                let x = grid.center(j);
                a += v * (k * x).cos();
                b += v * (k * x).sin();
            }
            2.0 / n * a.hypot(b)
        }
        BcMode::Mixed => {
            let k = PI * m as f64 / grid.length();
            let mut a = 0.0;
            for (j, v) in field.iter().enumerate() {
                let x = grid.center(j);
                a += v * (k * x).cos();
            }
            (2.0 / n * a).abs()
        }
    }
}

// ---------------------------------------------------------------------------
// face-based building blocks
// ---------------------------------------------------------------------------

/// Face velocities: arithmetic mean of the adjacent cells; zero at mixed
/// walls. Faces are indexed 0..=n, cell j owning faces j and j+1; for
/// periodic grids faces 0 and n are the same physical face.
fn face_velocities(u: &[f64], bc: BcMode) -> Vec<f64> {
    let n = u.len();
    let mut w = vec![0.0; n + 1];
    for i in 1..n {
        w[i] = 0.5 * (u[i - 1] + u[i]);
    }
    if bc == BcMode::Periodic {
        let wrap = 0.5 * (u[n - 1] + u[0]);
        w[0] = wrap;
        w[n] = wrap;
    }
    w
}

/// First-order upwind flux `F_i = w_i^+ q_left + w_i^- q_right`.
fn upwind_flux(w: &[f64], q: &[f64], bc: BcMode) -> Vec<f64> {
    let n = q.len();
    let mut f = vec![0.0; n + 1];
    for i in 0..=n {
        let wi = w[i];
        if wi > 0.0 {
            let left = if i == 0 {
                debug_assert!(bc == BcMode::Periodic);
                n - 1
            } else {
                i - 1
            };
            f[i] = wi * q[left];
        } else if wi < 0.0 {
            let right = if i == n {
                debug_assert!(bc == BcMode::Periodic);
                0
            } else {
                i
            };
            f[i] = wi * q[right];
        }
    }
    f
}

/// Upwind transport of `q` by precomputed mass fluxes: `F_i * upwind(q)` with
/// the donor side chosen by the face velocity sign. Keeping the mass flux as
/// the carrier makes uniform-q transport exactly consistent with continuity.
fn advect_with_mass_flux(w: &[f64], mass_flux: &[f64], q: &[f64], bc: BcMode) -> Vec<f64> {
    let n = q.len();
    let mut f = vec![0.0; n + 1];
    for i in 0..=n {
        let wi = w[i];
        if wi > 0.0 {
            let left = if i == 0 { n - 1 } else { i - 1 };
            f[i] = mass_flux[i] * q[left];
        } else if wi < 0.0 {
            let right = if i == n { 0 } else { i };
            f[i] = mass_flux[i] * q[right];
        }
    }
    let _ = bc;
    f
}

/// Largest per-cell outflow speed `w_{j+1}^+ - w_j^-`; the CFL-relevant
/// velocity scale of the upwind update.
fn max_outflow_speed(w: &[f64], n: usize) -> f64 {
    let mut v = 0.0_f64;
    for j in 0..n {
        v = v.max(w[j + 1].max(0.0) - w[j].min(0.0));
    }
    v
}

/// Neighbor list of the zero-flux-face Laplacian row j: pairs (column,
/// coefficient * h^2). Interior rows are (j-1, 1), (j, -2), (j+1, 1); mixed
/// wall rows drop the wall face.
fn lap0_row(j: usize, n: usize, bc: BcMode) -> [(usize, f64); 3] {
    match bc {
        BcMode::Periodic => [
            ((j + n - 1) % n, 1.0),
            (j, -2.0),
            ((j + 1) % n, 1.0),
        ],
        BcMode::Mixed => {
            if j == 0 {
                [(0, -1.0), (1, 1.0), (0, 0.0)]
            } else if j == n - 1 {
                [(n - 2, 1.0), (n - 1, -1.0), (n - 1, 0.0)]
            } else {
                [(j - 1, 1.0), (j, -2.0), (j + 1, 1.0)]
            }
        }
    }
}

/// Apply the zero-flux-face Laplacian (scaled by 1/h^2) to `f`.
fn lap0_apply(f: &[f64], h2: f64, bc: BcMode) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for (col, c) in lap0_row(j, n, bc) {
            if c != 0.0 {
                s += c * f[col];
            }
        }
        out[j] = s / h2;
    }
    out
}

/// Uniform additive shift pinning `sum(weight . field)` to `target`.
/// The shift must stay below [`SHIFT_GUARD`]; anything larger signals a
/// genuine conservation leak rather than roundoff.
fn pin_conserved(field: &mut [f64], weight: &[f64], target: f64) -> Result<()> {
    let prods: Vec<f64> = weight.iter().zip(field.iter()).map(|(w, f)| w * f).collect();
    let current = compensated_sum(&prods);
    let wsum = compensated_sum(weight);
    let shift = (target - current) / wsum;
    if !shift.is_finite() || shift.abs() > SHIFT_GUARD {
        return Err(Error::ResidualTooLarge {
            residual: shift.abs(),
            bound: SHIFT_GUARD,
        });
    }
    if shift != 0.0 {
        for f in field.iter_mut() {
            *f += shift;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// the step
// ---------------------------------------------------------------------------

struct ChiSolve {
    matrix: BandedSystem,
    inv_rho: Vec<f64>,
}

/// Assemble the pentadiagonal concentration operator: the Newton matrix of
/// the backward-Euler concentration equation at the current iterate,
/// `A = diag(rho) - (dt/eps) Lap0 diag(d2f_lambda(chi)) + dt eps Lap0 diag(1/rho) Lap0`.
fn assemble_chi_system(
    rho_new: &[f64],
    c_pot: &[f64],
    params: &Params,
    grid: &Grid,
    dt: f64,
) -> ChiSolve {
    let n = grid.cells();
    let bc = grid.bc();
    let cyclic = bc == BcMode::Periodic;
    let h2 = grid.spacing() * grid.spacing();
    let mut sys = BandedSystem::pentadiagonal(n, cyclic);

    let wrap_off = |j: usize, k: usize| -> isize {
        let mut off = k as isize - j as isize;
        if cyclic {
            if off > 2 {
                off -= n as isize;
            } else if off < -2 {
                off += n as isize;
            }
        }
        off
    };

    for j in 0..n {
        sys.diag[j] += rho_new[j];
    }

    // potential term: exact Jacobian of Lap0(df_lambda(chi)), i.e.
    // Lap0 diag(d2f) -- column scaling keeps the zero column sums that make
    // the update conservative
    let s_pot = dt / (params.epsilon * h2);
    for j in 0..n {
        for (m, coef) in lap0_row(j, n, bc) {
            if coef != 0.0 {
                sys.add(j, wrap_off(j, m), -s_pot * coef * c_pot[m]);
            }
        }
    }

    // implicit interface term: dt * eps * Lap0 diag(1/rho) Lap0
    let inv_rho: Vec<f64> = rho_new.iter().map(|r| 1.0 / r).collect();
    let scale = dt * params.epsilon / (h2 * h2);
    for j in 0..n {
        for (m, cjm) in lap0_row(j, n, bc) {
            if cjm == 0.0 {
                continue;
            }
            let wm = scale * cjm * inv_rho[m];
            for (k, cmk) in lap0_row(m, n, bc) {
                if cmk != 0.0 {
                    sys.add(j, wrap_off(j, k), wm * cmk);
                }
            }
        }
    }

    ChiSolve { matrix: sys, inv_rho }
}

/// Action of the backward-Euler concentration operator on `chi`:
/// `rho chi - dt [ (1/eps) Lap0(df_lambda(chi)) - eps Lap0((1/rho) Lap0 chi) ]`,
/// which is exactly `rho chi - dt Lap0(mu(chi))` with the pointwise chemical
/// potential. Implemented with difference operators so that constants are
/// annihilated bit-exactly (the increment solve then leaves fixed points
/// untouched).
fn chi_operator_apply(
    solve: &ChiSolve,
    rho_new: &[f64],
    chi: &[f64],
    params: &Params,
    grid: &Grid,
    dt: f64,
    model: &PotentialModel,
) -> Vec<f64> {
    let n = grid.cells();
    let bc = grid.bc();
    let h2 = grid.spacing() * grid.spacing();
    let df: Vec<f64> = chi.iter().map(|&c| df_lambda(c, model)).collect();
    let pot = lap0_apply(&df, h2, bc);
    let inner = lap0_apply(chi, h2, bc);
    let weighted: Vec<f64> = inner.iter().zip(&solve.inv_rho).map(|(v, w)| v * w).collect();
    let outer = lap0_apply(&weighted, h2, bc);
    (0..n)
        .map(|j| {
            rho_new[j] * chi[j] - dt / params.epsilon * pot[j] + dt * params.epsilon * outer[j]
        })
        .collect()
}

/// Assemble the tridiagonal momentum operator
/// `M = diag(rho) + nu dt (-Lap)`, Dirichlet closure at mixed walls.
fn assemble_u_system(rho_new: &[f64], params: &Params, grid: &Grid, dt: f64) -> BandedSystem {
    let n = grid.cells();
    let bc = grid.bc();
    let cyclic = bc == BcMode::Periodic;
    let h2 = grid.spacing() * grid.spacing();
    let k = params.nu * dt / h2;
    let mut sys = BandedSystem::tridiagonal(n, cyclic);
    for j in 0..n {
        sys.diag[j] = rho_new[j] + 2.0 * k;
        sys.sub1[j] = -k;
        sys.sup1[j] = -k;
    }
    if bc == BcMode::Mixed {
        // odd-reflection ghost: u_{-1} = -u_0 adds one more k to the diagonal
        sys.diag[0] = rho_new[0] + 3.0 * k;
        sys.diag[n - 1] = rho_new[n - 1] + 3.0 * k;
        sys.sub1[0] = 0.0;
        sys.sup1[n - 1] = 0.0;
    }
    sys
}

/// Operator-form action of the momentum system on `u` (difference form).
fn u_operator_apply(rho_new: &[f64], u: &[f64], params: &Params, grid: &Grid, dt: f64) -> Vec<f64> {
    let n = grid.cells();
    let h2 = grid.spacing() * grid.spacing();
    let k = params.nu * dt / h2;
    let mut out = vec![0.0; n];
    for j in 0..n {
        let (left, right) = match grid.bc() {
            BcMode::Periodic => (u[(j + n - 1) % n], u[(j + 1) % n]),
            BcMode::Mixed => {
                let l = if j == 0 { -u[0] } else { u[j - 1] };
                let r = if j == n - 1 { -u[n - 1] } else { u[j + 1] };
                (l, r)
            }
        };
        out[j] = rho_new[j] * u[j] - k * ((right - u[j]) - (u[j] - left));
    }
    out
}

/// Relative max-norm change between iterates.
fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let mut d = 0.0_f64;
    let mut scale = 0.0_f64;
    for (a, b) in new.iter().zip(old.iter()) {
        d = d.max((a - b).abs());
        scale = scale.max(b.abs());
    }
    d / (1.0 + scale)
}

/// Advance one time level `t -> t + controls.dt`.
///
/// `targets` pins the conserved sums; `None` pins them to the pre-step values
/// (the right choice for a standalone step). Fails with `Vacuum` if density
/// touches the floor and `PicardDiverged` if the loop cannot reach the
/// tolerance; both are retriable with a smaller dt.
pub fn step(
    state: &State,
    params: &Params,
    grid: &Grid,
    controls: &StepControls,
) -> Result<StepOutcome> {
    step_with_targets(state, params, grid, controls, None)
}

pub fn step_with_targets(
    state: &State,
    params: &Params,
    grid: &Grid,
    controls: &StepControls,
    targets: Option<&ConservedTotals>,
) -> Result<StepOutcome> {
    let n = grid.cells();
    let h = grid.spacing();
    let bc = grid.bc();
    let dt = controls.dt;
    assert!(dt > 0.0, "step needs a positive dt");
    let model = PotentialModel::new(params.lambda, params.epsilon)?;
    let local_targets = ConservedTotals::of(state);
    let totals = targets.copied().unwrap_or(local_targets);

    let rho0 = &state.rho;
    let u0 = &state.u;
    let chi0 = &state.chi;
    let q0: Vec<f64> = rho0.iter().zip(chi0.iter()).map(|(r, c)| r * c).collect();
    let m0: Vec<f64> = rho0.iter().zip(u0.iter()).map(|(r, v)| r * v).collect();

    let mut rho_prev = rho0.clone();
    let mut u_prev = u0.clone();
    let mut chi_prev = chi0.clone();

    let mut deltas: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    // Damped-Picard relaxation factor. The potential Jacobian coefficient
    // d2f_lambda(chi_prev) swings by order 1/lambda^2 when an iterate
    // crosses an f_lambda knot, which can turn the Newton update into a
    // cycle; shrinking the accepted increment breaks the cycle without
    // moving the fixed point.
    let mut relax = 1.0_f64;
    let mut warned = false;

    while iters < controls.picard_max {
        iters += 1;

        // (1) continuity: explicit upwind with previous-iterate velocities
        let w = face_velocities(&u_prev, bc);
        let mass_flux = upwind_flux(&w, rho0, bc);
        let mut rho_new = vec![0.0; n];
        for j in 0..n {
            rho_new[j] = rho0[j] - dt / h * (mass_flux[j + 1] - mass_flux[j]);
        }
        let min_rho = rho_new.iter().copied().fold(f64::INFINITY, f64::min);
        if min_rho < controls.rho_floor {
            return Err(Error::Vacuum {
                min_rho,
                floor: controls.rho_floor,
                time: state.time,
            });
        }

        // (2) concentration: pentadiagonal increment solve
        let c_pot: Vec<f64> = chi_prev.iter().map(|&c| d2f_lambda(c, &model)).collect();
        let chi_flux = advect_with_mass_flux(&w, &mass_flux, &chi_prev, bc);
        let mut q_star = vec![0.0; n];
        for j in 0..n {
            q_star[j] = q0[j] - dt / h * (chi_flux[j + 1] - chi_flux[j]);
        }
        let chi_solve = assemble_chi_system(&rho_new, &c_pot, params, grid, dt);
        let applied =
            chi_operator_apply(&chi_solve, &rho_new, &chi_prev, params, grid, dt, &model);
        let rhs: Vec<f64> = (0..n).map(|j| q_star[j] - applied[j]).collect();
        let delta_chi = banded::solve(&chi_solve.matrix, &rhs)?;
        let chi_new: Vec<f64> = chi_prev
            .iter()
            .zip(&delta_chi)
            .map(|(c, d)| c + relax * d)
            .collect();

        // (3) momentum: explicit fluxes, implicit viscosity
        let chi_field = Field::from_vec(chi_new.clone());
        let chi_x = diff(&chi_field, 1, grid, FieldKind::NeumannLike);
        let mut p_cell = vec![0.0; n];
        for j in 0..n {
            p_cell[j] =
                params.pressure(rho_new[j]) + 0.5 * params.epsilon * chi_x[j] * chi_x[j];
        }
        let mut p_face = vec![0.0; n + 1];
        for i in 1..n {
            p_face[i] = 0.5 * (p_cell[i - 1] + p_cell[i]);
        }
        match bc {
            BcMode::Periodic => {
                let wrap = 0.5 * (p_cell[n - 1] + p_cell[0]);
                p_face[0] = wrap;
                p_face[n] = wrap;
            }
            BcMode::Mixed => {
                // wall flux is pure pressure (u = 0, chi_x = 0 there);
                // linear extrapolation of p = a rho^gamma to the wall, in
                // difference form so uniform states extrapolate exactly
                let p0 = params.pressure(rho_new[0]);
                let p1 = params.pressure(rho_new[1]);
                let pm1 = params.pressure(rho_new[n - 1]);
                let pm2 = params.pressure(rho_new[n - 2]);
                p_face[0] = (p0 + 0.5 * (p0 - p1)).max(0.0);
                p_face[n] = (pm1 + 0.5 * (pm1 - pm2)).max(0.0);
            }
        }
        let mom_flux = advect_with_mass_flux(&w, &mass_flux, &u_prev, bc);
        let mut m_star = vec![0.0; n];
        for j in 0..n {
            m_star[j] = m0[j]
                - dt / h * ((mom_flux[j + 1] - mom_flux[j]) + (p_face[j + 1] - p_face[j]));
        }
        let u_sys = assemble_u_system(&rho_new, params, grid, dt);
        let u_applied = u_operator_apply(&rho_new, &u_prev, params, grid, dt);
        let u_rhs: Vec<f64> = (0..n).map(|j| m_star[j] - u_applied[j]).collect();
        let delta_u = banded::solve(&u_sys, &u_rhs)?;
        let u_new: Vec<f64> = u_prev
            .iter()
            .zip(&delta_u)
            .map(|(u, d)| u + relax * d)
            .collect();

        // convergence of the fixed point
        let delta = rel_change(&rho_new, &rho_prev)
            .max(rel_change(&chi_new, &chi_prev))
            .max(rel_change(&u_new, &u_prev));
        if let Some(&prev) = deltas.last() {
            if delta > 0.7 * prev && delta > controls.picard_tol {
                if relax > 0.2 {
                    // stagnation or oscillation: damp harder
                    relax *= 0.5;
                } else if !warned {
                    log::warn!(
                        "picard contraction violated at t={}: {} -> {}",
                        state.time,
                        prev,
                        delta
                    );
                    warned = true;
                }
            }
        }
        deltas.push(delta);

        rho_prev = Field::from_vec(rho_new);
        chi_prev = Field::from_vec(chi_new);
        u_prev = Field::from_vec(u_new);

        if delta < controls.picard_tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::PicardDiverged {
            iters,
            last_delta: deltas.last().copied().unwrap_or(f64::NAN),
        });
    }

    // conservation pins: uniform shifts at roundoff scale applied to the
    // accepted iterate only (intermediate iterates need no exact totals)
    let ones = vec![1.0; n];
    let mut rho_final = rho_prev.into_vec();
    pin_conserved(&mut rho_final, &ones, totals.mass)?;
    let mut chi_final = chi_prev.into_vec();
    pin_conserved(&mut chi_final, &rho_final, totals.chi_mass)?;
    let mut u_final = u_prev.into_vec();
    if bc == BcMode::Periodic {
        pin_conserved(&mut u_final, &rho_final, totals.momentum)?;
    }

    Ok(StepOutcome {
        state: State {
            rho: Field::from_vec(rho_final),
            u: Field::from_vec(u_final),
            chi: Field::from_vec(chi_final),
            time: state.time + dt,
        },
        picard_iters: iters,
    })
}

// ---------------------------------------------------------------------------
// trajectory driver
// ---------------------------------------------------------------------------

/// Diagnostic callback invoked on each emitted record.
pub type Sink<'a> = Box<dyn FnMut(&State, &DiagnosticsRecord) + 'a>;

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: State,
    pub steps: usize,
    pub records: usize,
    pub dt_halvings: usize,
}

/// A failed run, carrying the last accepted state for post-mortem output.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub snapshot: State,
}

/// Maximum dt halvings per step before the run aborts.
const MAX_RETRIES: usize = 16;

/// March `state0` to `t_end` with adaptive dt:
/// `dt = min(controls.dt, cfl * h / max_outflow_speed)`, halved on step
/// failure (capped), relaxed again after successes. Emits a diagnostics
/// record at t = 0, every `record_every` accepted steps, and at `t_end`.
/// Deterministic given its inputs.
pub fn run(
    state0: &State,
    params: &Params,
    grid: &Grid,
    controls: &StepControls,
    t_end: f64,
    record_every: usize,
    sinks: &mut [Sink],
) -> std::result::Result<RunSummary, RunFailure> {
    let record_every = record_every.max(1);
    if t_end <= state0.time {
        return Ok(RunSummary {
            final_state: state0.clone(),
            steps: 0,
            records: 0,
            dt_halvings: 0,
        });
    }
    let fail = |error: Error, snapshot: &State| RunFailure {
        error,
        snapshot: snapshot.clone(),
    };

    let avgs = averages(state0, grid).map_err(|e| fail(e, state0))?;
    let totals = ConservedTotals::of(state0);
    let mut state = state0.clone();
    let mut steps = 0usize;
    let mut records = 0usize;
    let mut halvings_total = 0usize;
    let mut dt_cap = controls.dt;

    let mut emit = |state: &State, iters: usize, records: &mut usize| -> Result<()> {
        let rec = record(state, params, grid, &avgs, iters)?;
        for sink in sinks.iter_mut() {
            sink(state, &rec);
        }
        *records += 1;
        Ok(())
    };

    emit(&state, 0, &mut records).map_err(|e| fail(e, &state))?;

    let time_eps = 1e-12 * t_end.abs().max(1.0);
    while t_end - state.time > time_eps {
        let w = face_velocities(&state.u, grid.bc());
        let speed = max_outflow_speed(&w, grid.cells());
        let mut dt = dt_cap.min(controls.dt);
        if speed > 0.0 {
            dt = dt.min(controls.cfl * grid.spacing() / speed);
        }
        dt = dt.min(t_end - state.time);

        let mut attempt = 0usize;
        let outcome = loop {
            let sub = StepControls { dt, ..*controls };
            match step_with_targets(&state, params, grid, &sub, Some(&totals)) {
                Ok(out) => break out,
                Err(e @ (Error::PicardDiverged { .. } | Error::Vacuum { .. })) => {
                    attempt += 1;
                    halvings_total += 1;
                    if attempt > MAX_RETRIES {
                        return Err(fail(
                            Error::RunAborted {
                                time: state.time,
                                retries: attempt - 1,
                                source: Box::new(e),
                            },
                            &state,
                        ));
                    }
                    dt *= 0.5;
                }
                Err(e) => return Err(fail(e, &state)),
            }
        };
        // remember the accepted dt as the cap, relax it again on success
        dt_cap = if attempt > 0 { dt } else { (dt_cap * 2.0).min(controls.dt) };
        let iters = outcome.picard_iters;
        state = outcome.state;
        steps += 1;

        let finished = t_end - state.time <= time_eps;
        if steps.is_multiple_of(record_every) || finished {
            emit(&state, iters, &mut records).map_err(|e| fail(e, &state))?;
        }
    }

    Ok(RunSummary {
        final_state: state,
        steps,
        records,
        dt_halvings: halvings_total,
    })
}
