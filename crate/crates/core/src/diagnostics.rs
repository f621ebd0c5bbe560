//! Energy functionals, conservation integrals, the Kanel density
//! certificate, sup-norm deviations, and decay-rate fitting.

use crate::error::{Error, Result};
use crate::grid::{diff, integrate, Field, FieldKind, Grid};
use crate::potential::{f_lambda, PotentialModel};
use crate::quad;
use crate::state::{Averages, Params, State};

/// Relative pressure potential `G(rho) = rho int_{rho_bar}^{rho} s^-2 (p(s) - p_bar) ds`.
///
/// Closed forms: the logarithmic branch at gamma = 1 and the power branch for
/// gamma > 1. Nonnegative, convex, vanishing at rho_bar.
pub fn g_function(rho: f64, rho_bar: f64, a: f64, gamma: f64) -> Result<f64> {
    if !(rho > 0.0) || !(rho_bar > 0.0) {
        return Err(Error::Domain(format!(
            "g_function needs positive densities, got rho={rho}, rho_bar={rho_bar}"
        )));
    }
    let g = if gamma == 1.0 {
        a * (rho * rho.ln() - rho * (rho_bar.ln() + 1.0) + rho_bar)
    } else {
        a * (rho.powf(gamma) / (gamma - 1.0)
            - gamma * rho_bar.powf(gamma - 1.0) * rho / (gamma - 1.0)
            + rho_bar.powf(gamma))
    };
    // convexity makes G >= 0; clip the roundoff dip near rho_bar
    Ok(g.max(0.0))
}

/// Kanel function `Psi(rho) = int_{rho_bar}^{rho} sqrt(G(s)) / s^(3/2) ds`.
///
/// Signed: negative below rho_bar. Diverges to -inf at vacuum and +inf at
/// infinite density, so a bound on |Psi| brackets the density from both
/// sides. Evaluated by adaptive quadrature; the integrand is continuous (it
/// vanishes like |s - rho_bar| at the lower end).
pub fn kanel_psi(rho: f64, rho_bar: f64, a: f64, gamma: f64) -> Result<f64> {
    if !(rho > 0.0) || !(rho_bar > 0.0) {
        return Err(Error::Domain(format!(
            "kanel_psi needs positive densities, got rho={rho}, rho_bar={rho_bar}"
        )));
    }
    let f = |s: f64| {
        let g = g_function(s, rho_bar, a, gamma).unwrap_or(0.0);
        g.sqrt() / (s * s.sqrt())
    };
    Ok(quad::adaptive_simpson(f, rho_bar, rho, quad::DEFAULT_TOL))
}

/// Total energy of the regularized system:
/// `E = int ( rho u^2 / 2 + eps |chi_x|^2 / 2 + G(rho) + rho f_lambda(chi) / eps ) dx`.
///
/// This is the functional the scheme dissipates; the quartic-potential
/// variant ([`total_energy_quartic`]) is a lower bound of it.
pub fn total_energy(
    state: &State,
    params: &Params,
    grid: &Grid,
    avgs: &Averages,
) -> Result<f64> {
    energy_impl(state, params, grid, avgs, false)
}

/// Energy with the bare double-well `(chi^2-1)^2/4` in place of `f_lambda`.
pub fn total_energy_quartic(
    state: &State,
    params: &Params,
    grid: &Grid,
    avgs: &Averages,
) -> Result<f64> {
    energy_impl(state, params, grid, avgs, true)
}

fn energy_impl(
    state: &State,
    params: &Params,
    grid: &Grid,
    avgs: &Averages,
    quartic: bool,
) -> Result<f64> {
    if !(state.rho.min() > 0.0) {
        return Err(Error::Vacuum {
            min_rho: state.rho.min(),
            floor: 0.0,
            time: state.time,
        });
    }
    let model = PotentialModel::new(params.lambda, params.epsilon)?;
    let chi_x = diff(&state.chi, 1, grid, FieldKind::NeumannLike);
    let n = grid.cells();
    let mut density = vec![0.0; n];
    for j in 0..n {
        let rho = state.rho[j];
        let pot = if quartic {
            crate::potential::double_well(state.chi[j])
        } else {
            f_lambda(state.chi[j], &model)
        };
        density[j] = 0.5 * rho * state.u[j] * state.u[j]
            + 0.5 * params.epsilon * chi_x[j] * chi_x[j]
            + g_function(rho, avgs.rho_bar, params.a, params.gamma)?
            + rho * pot / params.epsilon;
    }
    Ok(integrate(&Field::from_vec(density), grid))
}

/// One time-stamped row of diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    /// int rho dx
    pub mass: f64,
    /// int rho u dx
    pub momentum: f64,
    /// int rho chi dx
    pub chi_mass: f64,
    /// total energy with the f_lambda potential
    pub energy: f64,
    /// (max|rho - rho_bar|, max|u - u_bar|, max|chi - chi_bar|)
    pub sup_dev: (f64, f64, f64),
    pub chi_range: (f64, f64),
    pub rho_range: (f64, f64),
    /// (Psi(min rho), Psi(max rho)); Psi is increasing so this brackets Psi
    pub psi_range: (f64, f64),
    pub picard_iters: usize,
}

/// Populate a full record. `avgs` must be the time-0 averages: conservation
/// fixes them for all time, so they define the asymptotic constant state the
/// sup-deviations are measured against.
pub fn record(
    state: &State,
    params: &Params,
    grid: &Grid,
    avgs: &Averages,
    picard_iters: usize,
) -> Result<DiagnosticsRecord> {
    let mom = Field::from_vec(
        state.rho.iter().zip(state.u.iter()).map(|(r, v)| r * v).collect(),
    );
    let chim = Field::from_vec(
        state.rho.iter().zip(state.chi.iter()).map(|(r, c)| r * c).collect(),
    );
    let sup = |f: &Field, c: f64| f.iter().fold(0.0_f64, |m, v| m.max((v - c).abs()));
    let rho_range = (state.rho.min(), state.rho.max());
    Ok(DiagnosticsRecord {
        time: state.time,
        mass: integrate(&state.rho, grid),
        momentum: integrate(&mom, grid),
        chi_mass: integrate(&chim, grid),
        energy: total_energy(state, params, grid, avgs)?,
        sup_dev: (
            sup(&state.rho, avgs.rho_bar),
            sup(&state.u, avgs.u_bar),
            sup(&state.chi, avgs.chi_bar),
        ),
        chi_range: (state.chi.min(), state.chi.max()),
        rho_range,
        psi_range: (
            kanel_psi(rho_range.0, avgs.rho_bar, params.a, params.gamma)?,
            kanel_psi(rho_range.1, avgs.rho_bar, params.a, params.gamma)?,
        ),
        picard_iters,
    })
}

/// Least-squares slope of `log(value)` versus time over the trailing half of
/// the series. Negative means decay.
pub fn decay_rate(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "need at least 5 samples, got {}",
            series.len()
        )));
    }
    if let Some((t, v)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!(
            "decay_rate needs positive values, got {v} at t={t}"
        )));
    }
    let tail = &series[series.len() / 2..];
    let n = tail.len() as f64;
    let t_mean = tail.iter().map(|(t, _)| t).sum::<f64>() / n;
    let y_mean = tail.iter().map(|(_, v)| v.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut y_var = 0.0;
    for (t, v) in tail {
        let dt = t - t_mean;
        let dy = v.ln() - y_mean;
        num += dt * dy;
        den += dt * dt;
        y_var += dy * dy;
    }
    if den == 0.0 {
        return Err(Error::DegenerateFit("all sample times equal".into()));
    }
    if y_var == 0.0 {
        return Err(Error::DegenerateFit("all values equal".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BcMode;
    use crate::state::{make_initial, InitialSpec};

    #[test]
    fn g_vanishes_at_mean() {
        for gamma in [1.0, 1.4, 2.0, 3.0] {
            let v = g_function(1.3, 1.3, 1.0, gamma).unwrap();
            assert!(v.abs() < 1e-14, "gamma={gamma}: {v}");
        }
    }

    #[test]
    fn g_closed_form_examples() {
        // gamma = 2: 4/1 - 2*2 + 1 = 1
        assert!((g_function(2.0, 1.0, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-14);
        // gamma = 1: 2 ln 2 - 2 + 1
        let expect = 2.0 * 2.0_f64.ln() - 1.0;
        assert!((g_function(2.0, 1.0, 1.0, 1.0).unwrap() - expect).abs() < 1e-14);
    }

    /// Closed forms against adaptive quadrature of the defining integral.
    #[test]
    fn g_matches_quadrature_of_definition() {
        let rho_bar = 1.0;
        for &a in &[1.0, 2.5] {
            for &gamma in &[1.0, 1.4, 2.0, 3.0] {
                let p = |s: f64| a * s.powf(gamma);
                let p_bar = p(rho_bar);
                for i in 0..30 {
                    let rho = 0.1 + i as f64 * 0.33;
                    let oracle = rho
                        * quad::adaptive_simpson(
                            |s| (p(s) - p_bar) / (s * s),
                            rho_bar,
                            rho,
                            1e-12,
                        );
                    let v = g_function(rho, rho_bar, a, gamma).unwrap();
                    let tol = 1e-8 * oracle.abs().max(1e-10);
                    assert!(
                        (v - oracle).abs() <= tol,
                        "a={a} gamma={gamma} rho={rho}: {v} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn g_rejects_nonpositive_density() {
        assert!(g_function(0.0, 1.0, 1.0, 2.0).is_err());
        assert!(g_function(-1.0, 1.0, 1.0, 2.0).is_err());
        assert!(kanel_psi(0.0, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn psi_is_zero_at_mean_and_monotone() {
        for gamma in [1.0, 1.4, 2.0] {
            assert_eq!(kanel_psi(1.0, 1.0, 1.0, gamma).unwrap(), 0.0);
            let samples = [0.2, 0.5, 0.8, 1.2, 1.5, 3.0, 8.0];
            let psis: Vec<f64> = samples
                .iter()
                .map(|&r| kanel_psi(r, 1.0, 2.0, gamma).unwrap())
                .collect();
            for w in psis.windows(2) {
                assert!(w[0] < w[1], "gamma={gamma}: {psis:?}");
            }
            assert!(kanel_psi(0.8, 1.0, 1.0, gamma).unwrap() < 0.0);
            assert!(kanel_psi(1.2, 1.0, 1.0, gamma).unwrap() > 0.0);
        }
    }

    /// Psi grows without bound toward vacuum and infinity.
    #[test]
    fn psi_divergence_probe() {
        let mut up = Vec::new();
        let mut down = Vec::new();
        for k in 1..=4 {
            up.push(kanel_psi(10f64.powi(k), 1.0, 1.0, 2.0).unwrap());
            down.push(kanel_psi(10f64.powi(-k), 1.0, 1.0, 2.0).unwrap());
        }
        for w in up.windows(2) {
            assert!(w[1] > w[0] + 0.1, "up={up:?}");
        }
        for w in down.windows(2) {
            assert!(w[1] < w[0] - 0.1, "down={down:?}");
        }
    }

    #[test]
    fn energy_of_pure_phase_constant_state_is_zero() {
        let g = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let params = Params::default();
        for chi in [1.0, -1.0] {
            let s = make_initial(&g, &InitialSpec::Constant { rho: 1.0, u: 0.0, chi }).unwrap();
            let avgs = crate::state::averages(&s, &g).unwrap();
            let e = total_energy(&s, &params, &g, &avgs).unwrap();
            assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn energy_of_moving_pure_phase_is_kinetic_only() {
        let g = Grid::new(2.0, 32, BcMode::Periodic).unwrap();
        let params = Params::default();
        let (rho, v) = (1.5, 0.7);
        let s = make_initial(&g, &InitialSpec::Constant { rho, u: v, chi: 1.0 }).unwrap();
        let avgs = crate::state::averages(&s, &g).unwrap();
        let e = total_energy(&s, &params, &g, &avgs).unwrap();
        let expect = 0.5 * rho * v * v * g.length();
        assert!((e - expect).abs() < 1e-13 * expect);
    }

    /// Single-term check: rho=1, u=0, chi=0, eps=0.5 gives (1/eps) f(0) L = 0.5,
    /// cross-checked against a direct quadrature of the integrand.
    #[test]
    fn energy_single_term_value() {
        let g = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let params = Params { epsilon: 0.5, ..Params::default() };
        let s = make_initial(&g, &InitialSpec::Constant { rho: 1.0, u: 0.0, chi: 0.0 }).unwrap();
        let avgs = crate::state::averages(&s, &g).unwrap();
        let e = total_energy(&s, &params, &g, &avgs).unwrap();
        assert!((e - 0.5).abs() < 1e-13, "e={e}");
        let model = PotentialModel::new(params.lambda, params.epsilon).unwrap();
        let oracle = quad::adaptive_simpson(
            |_| f_lambda(0.0, &model) / params.epsilon,
            0.0,
            1.0,
            1e-12,
        );
        assert!((e - oracle).abs() < 1e-12);
    }

    #[test]
    fn quartic_energy_is_a_lower_bound() {
        let g = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let params = Params { lambda: 0.2, ..Params::default() };
        let s = State {
            rho: Field::constant(64, 1.0),
            u: Field::zeros(64),
            chi: Field::from_fn(&g, |x| 1.05 + 0.04 * (2.0 * std::f64::consts::PI * x).cos()),
            time: 0.0,
        };
        let avgs = crate::state::averages(&s, &g).unwrap();
        let e = total_energy(&s, &params, &g, &avgs).unwrap();
        let eq = total_energy_quartic(&s, &params, &g, &avgs).unwrap();
        assert!(eq <= e + 1e-14);
    }

    #[test]
    fn record_of_constant_state() {
        let g = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let params = Params::default();
        let s = make_initial(&g, &InitialSpec::Constant { rho: 1.0, u: 0.0, chi: 1.0 }).unwrap();
        let avgs = crate::state::averages(&s, &g).unwrap();
        let r = record(&s, &params, &g, &avgs, 1).unwrap();
        assert_eq!(r.sup_dev, (0.0, 0.0, 0.0));
        assert_eq!(r.energy, 0.0);
        assert!((r.mass - 1.0).abs() < 1e-13);
        assert_eq!(r.psi_range.0, r.psi_range.1);
    }

    #[test]
    fn decay_rate_exact_exponential() {
        let series: Vec<(f64, f64)> =
            (0..10).map(|i| (i as f64 * 0.3, (-2.0 * i as f64 * 0.3).exp())).collect();
        let rate = decay_rate(&series).unwrap();
        assert!((rate + 2.0).abs() < 1e-8, "rate={rate}");
    }

    #[test]
    fn decay_rate_noisy_exponential() {
        let series: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.25;
                (t, 5.0 * (-0.5 * t).exp() * (1.0 + 0.01 * t.sin()))
            })
            .collect();
        let rate = decay_rate(&series).unwrap();
        assert!((rate + 0.5).abs() < 0.02, "rate={rate}");
    }

    #[test]
    fn decay_rate_degenerate_inputs() {
        let flat: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 3.0)).collect();
        assert!(matches!(decay_rate(&flat), Err(Error::DegenerateFit(_))));
        let short = [(0.0, 1.0), (1.0, 0.5)];
        assert!(decay_rate(&short).is_err());
        let negative: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, -1.0)).collect();
        assert!(decay_rate(&negative).is_err());
    }
}
