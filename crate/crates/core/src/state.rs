//! Simulation state, physical parameters, initial-condition builders, and
//! the conserved averages that fix the asymptotic target state.

use crate::error::{Error, Result};
use crate::grid::{integrate, BcMode, Field, Grid};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Physical and regularization constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Viscosity nu > 0.
    pub nu: f64,
    /// Interface thickness epsilon > 0.
    pub epsilon: f64,
    /// Pressure coefficient a > 0 in p = a rho^gamma.
    pub a: f64,
    /// Adiabatic exponent gamma >= 1.
    pub gamma: f64,
    /// Potential regularization lambda in (0,1).
    pub lambda: f64,
}

impl Params {
    pub fn new(nu: f64, epsilon: f64, a: f64, gamma: f64, lambda: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {nu}")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(a > 0.0) {
            return Err(Error::Config(format!("a must be positive, got {a}")));
        }
        if !(gamma >= 1.0) {
            return Err(Error::Config(format!("gamma must be >= 1, got {gamma}")));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Config(format!("lambda must lie in (0,1), got {lambda}")));
        }
        Ok(Self { nu, epsilon, a, gamma, lambda })
    }

    /// Barotropic pressure p = a rho^gamma.
    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    /// Sound speed squared p'(rho) = a gamma rho^(gamma-1).
    #[inline]
    pub fn dpressure(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }
}

impl Default for Params {
    /// Reference parameter set used by the canned scenarios.
    fn default() -> Self {
        Params { nu: 1.0, epsilon: 0.1, a: 1.0, gamma: 2.0, lambda: 1e-3 }
    }
}

/// The (rho, u, chi) triple at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: Field,
    pub u: Field,
    pub chi: Field,
    pub time: f64,
}

impl State {
    pub fn cells(&self) -> usize {
        self.rho.len()
    }
}

/// Conserved averages: the asymptotic constant state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub rho_bar: f64,
    pub u_bar: f64,
    pub chi_bar: f64,
}

/// Mass-weighted averages over the domain.
///
/// `rho_bar = (1/L) int rho`, `u_bar = int(rho u) / int(rho)`,
/// `chi_bar = int(rho chi) / int(rho)`; all three are conserved by the flow,
/// so the time-0 values define the target constant state.
pub fn averages(state: &State, grid: &Grid) -> Result<Averages> {
    let mass = integrate(&state.rho, grid);
    if !(mass > 0.0) {
        return Err(Error::Vacuum { min_rho: state.rho.min(), floor: 0.0, time: state.time });
    }
    let mom_density =
        Field::from_vec(state.rho.iter().zip(state.u.iter()).map(|(r, v)| r * v).collect());
    let chi_density =
        Field::from_vec(state.rho.iter().zip(state.chi.iter()).map(|(r, c)| r * c).collect());
    Ok(Averages {
        rho_bar: mass / grid.length(),
        u_bar: integrate(&mom_density, grid) / mass,
        chi_bar: integrate(&chi_density, grid) / mass,
    })
}

/// One Fourier component of a perturbation: integer mode index, amplitude,
/// phase. On periodic grids the wavenumber is `2 pi m / L`; on mixed grids
/// it is `pi m / L` and the phase is ignored (the closure picks sin or cos).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: usize,
    pub amplitude: f64,
    pub phase: f64,
}

impl Mode {
    pub fn new(index: usize, amplitude: f64, phase: f64) -> Self {
        Self { index, amplitude, phase }
    }
}

/// Initial-condition description.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Uniform fields.
    Constant { rho: f64, u: f64, chi: f64 },
    /// Constant base plus Fourier perturbations per field.
    Perturbed {
        rho: f64,
        u: f64,
        chi: f64,
        rho_modes: Vec<Mode>,
        u_modes: Vec<Mode>,
        chi_modes: Vec<Mode>,
    },
    /// Constant base with band-limited seeded noise on chi (modes up to N/4).
    SeededNoise { rho: f64, u: f64, chi: f64, amplitude: f64, seed: u64 },
    /// Sharp phase split: chi = +1 on the left half, -1 on the right half
    /// (zero mean). The steepest admissible interface data; its relaxation
    /// exercises the constraint penalty.
    PhaseSplit { rho: f64, u: f64 },
}

fn mode_wave(grid: &Grid, m: &Mode, odd: bool) -> Field {
    match grid.bc() {
        BcMode::Periodic => {
            let k = 2.0 * PI * m.index as f64 / grid.length();
            Field::from_fn(grid, |x| m.amplitude * (k * x + m.phase).cos())
        }
        BcMode::Mixed => {
            let k = PI * m.index as f64 / grid.length();
            if odd {
                // vanishes at both walls
                Field::from_fn(grid, |x| m.amplitude * (k * x).sin())
            } else {
                // zero slope at both walls
                Field::from_fn(grid, |x| m.amplitude * (k * x).cos())
            }
        }
    }
}

fn add_modes(base: f64, modes: &[Mode], grid: &Grid, odd: bool) -> Field {
    let mut f = Field::constant(grid.cells(), base);
    for m in modes {
        let w = mode_wave(grid, m, odd);
        for (v, p) in f.iter_mut().zip(w.iter()) {
            *v += p;
        }
    }
    f
}

/// Band-limited noise: cos/sin modes 1..=N/4 with ChaCha-seeded coefficients,
/// rescaled so the max absolute perturbation equals `amplitude`. On mixed
/// grids only wall-compatible cosine modes are used. Bit-deterministic for a
/// fixed seed.
fn chi_noise(grid: &Grid, amplitude: f64, seed: u64) -> Field {
    let n = grid.cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = vec![0.0_f64; n];
    let m_max = (n / 4).max(1);
    for m in 1..=m_max {
        match grid.bc() {
            BcMode::Periodic => {
                let k = 2.0 * PI * m as f64 / grid.length();
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                for (j, v) in noise.iter_mut().enumerate() {
                    let x = grid.center(j);
                    *v += a * (k * x).cos() + b * (k * x).sin();
                }
            }
            BcMode::Mixed => {
                let k = PI * m as f64 / grid.length();
                let a: f64 = rng.gen_range(-1.0..1.0);
                for (j, v) in noise.iter_mut().enumerate() {
                    let x = grid.center(j);
                    *v += a * (k * x).cos();
                }
            }
        }
    }
    let peak = noise.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let s = amplitude / peak;
        for v in &mut noise {
            *v *= s;
        }
    }
    Field::from_vec(noise)
}

/// Build a time-0 state from an initial-condition spec.
///
/// Rejects data with non-positive density or chi outside [-1,1]. On mixed
/// grids u gets sine modes (u = 0 at walls) and chi/rho cosine modes.
pub fn make_initial(grid: &Grid, spec: &InitialSpec) -> Result<State> {
    let n = grid.cells();
    let (rho, u, chi) = match spec {
        InitialSpec::Constant { rho, u, chi } => (
            Field::constant(n, *rho),
            Field::constant(n, *u),
            Field::constant(n, *chi),
        ),
        InitialSpec::Perturbed { rho, u, chi, rho_modes, u_modes, chi_modes } => (
            add_modes(*rho, rho_modes, grid, false),
            add_modes(*u, u_modes, grid, true),
            add_modes(*chi, chi_modes, grid, false),
        ),
        InitialSpec::SeededNoise { rho, u, chi, amplitude, seed } => {
            let mut c = chi_noise(grid, *amplitude, *seed);
            for v in c.iter_mut() {
                *v += *chi;
            }
            (Field::constant(n, *rho), Field::constant(n, *u), c)
        }
        InitialSpec::PhaseSplit { rho, u } => {
            let half = 0.5 * grid.length();
            let c = Field::from_fn(grid, |x| if x < half { 1.0 } else { -1.0 });
            (Field::constant(n, *rho), Field::constant(n, *u), c)
        }
    };

    let min_rho = rho.min();
    if !(min_rho > 0.0) {
        return Err(Error::Config(format!(
            "initial density must be strictly positive, min = {min_rho}"
        )));
    }
    let (cmin, cmax) = (chi.min(), chi.max());
    if cmin < -1.0 || cmax > 1.0 {
        return Err(Error::Config(format!(
            "initial chi must lie in [-1,1], range = [{cmin}, {cmax}]"
        )));
    }
    if !rho.all_finite() || !u.all_finite() || !chi.all_finite() {
        return Err(Error::Config("initial data contains NaN or Inf".into()));
    }
    Ok(State { rho, u, chi, time: 0.0 })
}

/// Validation limits for [`validate`].
#[derive(Debug, Clone, Copy)]
pub struct ValidateLimits {
    /// Vacuum guard on min rho.
    pub rho_floor: f64,
    /// Allowed |chi| bound: 1 + lambda + slack.
    pub chi_bound: f64,
}

impl ValidateLimits {
    /// Standard limits: chi_bound = 1 + lambda + (1e-6 + 10 * scheme_tol).
    pub fn new(rho_floor: f64, lambda: f64, scheme_tol: f64) -> Self {
        Self { rho_floor, chi_bound: 1.0 + lambda + 1e-6 + 10.0 * scheme_tol }
    }
}

/// Health report of a state; `ok` is false on vacuum, chi overshoot, or
/// non-finite entries.
#[derive(Debug, Clone, Copy)]
pub struct ValidationReport {
    pub min_rho: f64,
    pub max_rho: f64,
    pub min_chi: f64,
    pub max_chi: f64,
    pub all_finite: bool,
    pub vacuum_violation: bool,
    pub chi_violation: bool,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.all_finite && !self.vacuum_violation && !self.chi_violation
    }
}

/// Report min/max of rho and chi, NaN/Inf presence, and limit violations.
pub fn validate(state: &State, limits: &ValidateLimits) -> ValidationReport {
    let min_rho = state.rho.min();
    let max_rho = state.rho.max();
    let min_chi = state.chi.min();
    let max_chi = state.chi.max();
    let all_finite =
        state.rho.all_finite() && state.u.all_finite() && state.chi.all_finite();
    ValidationReport {
        min_rho,
        max_rho,
        min_chi,
        max_chi,
        all_finite,
        vacuum_violation: !(min_rho >= limits.rho_floor),
        chi_violation: min_chi < -limits.chi_bound || max_chi > limits.chi_bound,
    }
}
