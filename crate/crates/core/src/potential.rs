//! Regularized double-well free energy.
//!
//! The sharp double well `f(chi) = (chi^2-1)^2/4` (infinite outside [-1,1])
//! is replaced by a C^2 piecewise family `f_lambda` that penalizes |chi| > 1
//! with strength 1/lambda. The penalty function `beta_lambda` measures the
//! constraint violation and collapses to the hinge function `beta` as
//! lambda -> 0, which is the mechanism that recovers chi in [-1,1].

use crate::error::{Error, Result};

/// Parameters of the regularized free-energy family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialModel {
    lambda: f64,
    epsilon: f64,
}

impl PotentialModel {
    pub fn new(lambda: f64, epsilon: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Config(format!(
                "lambda must lie in (0,1), got {lambda}"
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { lambda, epsilon })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Quartic double well `(chi^2-1)^2 / 4`.
#[inline]
pub fn double_well(chi: f64) -> f64 {
    let w = chi * chi - 1.0;
    0.25 * w * w
}

/// Regularized free-energy density `f_lambda(chi)`.
///
/// Five branches, C^2 across the knots chi = +-1 and +-(1+lambda); bounded
/// below by the bare double well for every lambda in (0,1).
pub fn f_lambda(chi: f64, model: &PotentialModel) -> f64 {
    let l = model.lambda;
    let dw = double_well(chi);
    if chi >= 1.0 + l {
        let d = chi - (1.0 + 0.5 * l);
        d * d / (2.0 * l) + dw + l / 24.0
    } else if chi > 1.0 {
        let d = chi - 1.0;
        dw + d * d * d / (6.0 * l * l)
    } else if chi >= -1.0 {
        dw
    } else if chi > -1.0 - l {
        let d = chi + 1.0;
        dw - d * d * d / (6.0 * l * l)
    } else {
        let d = chi + (1.0 + 0.5 * l);
        d * d / (2.0 * l) + dw + l / 24.0
    }
}

/// First derivative `df_lambda/dchi`. Equals `chi^3 - chi` on [-1,1].
pub fn df_lambda(chi: f64, model: &PotentialModel) -> f64 {
    let l = model.lambda;
    let cubic = chi * chi * chi - chi;
    if chi >= 1.0 + l {
        (chi - (1.0 + 0.5 * l)) / l + cubic
    } else if chi > 1.0 {
        let d = chi - 1.0;
        d * d / (2.0 * l * l) + cubic
    } else if chi >= -1.0 {
        cubic
    } else if chi > -1.0 - l {
        let d = chi + 1.0;
        -d * d / (2.0 * l * l) + cubic
    } else {
        (chi + (1.0 + 0.5 * l)) / l + cubic
    }
}

/// Second derivative `d^2 f_lambda/dchi^2`. Equals `3 chi^2 - 1` on [-1,1].
pub fn d2f_lambda(chi: f64, model: &PotentialModel) -> f64 {
    let l = model.lambda;
    let base = 3.0 * chi * chi - 1.0;
    if chi >= 1.0 + l {
        1.0 / l + base
    } else if chi > 1.0 {
        (chi - 1.0) / (l * l) + base
    } else if chi >= -1.0 {
        base
    } else if chi > -1.0 - l {
        -(chi + 1.0) / (l * l) + base
    } else {
        1.0 / l + base
    }
}

/// Penalty function `beta_lambda(chi) = lambda (chi - chi^3 + df_lambda)`.
///
/// Vanishes on \[-1,1\]; monotone non-decreasing with derivative in
/// \[0,1\] (hence 1-Lipschitz).
pub fn beta_lambda(chi: f64, model: &PotentialModel) -> f64 {
    let l = model.lambda;
    if chi >= 1.0 + l {
        chi - (1.0 + 0.5 * l)
    } else if chi > 1.0 {
        let d = chi - 1.0;
        d * d / (2.0 * l)
    } else if chi >= -1.0 {
        0.0
    } else if chi > -1.0 - l {
        let d = chi + 1.0;
        -d * d / (2.0 * l)
    } else {
        chi + (1.0 + 0.5 * l)
    }
}

/// Derivative of `beta_lambda`; piecewise in \[0,1\].
pub fn dbeta_lambda(chi: f64, model: &PotentialModel) -> f64 {
    let l = model.lambda;
    if chi >= 1.0 + l {
        1.0
    } else if chi > 1.0 {
        (chi - 1.0) / l
    } else if chi >= -1.0 {
        0.0
    } else if chi > -1.0 - l {
        -(chi + 1.0) / l
    } else {
        1.0
    }
}

/// Pointwise lambda -> 0 limit of `beta_lambda`: the hinge distance to
/// [-1,1]. `beta(chi) = 0` everywhere is equivalent to chi in [-1,1].
pub fn beta(chi: f64) -> f64 {
    if chi > 1.0 {
        chi - 1.0
    } else if chi < -1.0 {
        chi + 1.0
    } else {
        0.0
    }
}

/// Stability classification of a mean concentration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    Stable,
    Unstable,
    Boundary,
}

/// Default tolerance on `3 chi_bar^2 - 1` for the boundary classification.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Classify a mean concentration by the sign of `3 chi_bar^2 - 1`.
///
/// Positive means the linearized concentration equation is damped at low
/// wavenumber (stable constant state); negative means spinodal growth.
pub fn classify_mean(chi_bar: f64, tol: f64) -> StabilityClass {
    let s = 3.0 * chi_bar * chi_bar - 1.0;
    if s > tol {
        StabilityClass::Stable
    } else if s < -tol {
        StabilityClass::Unstable
    } else {
        StabilityClass::Boundary
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(lambda: f64) -> PotentialModel {
        PotentialModel::new(lambda, 0.1).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PotentialModel::new(0.0, 0.1).is_err());
        assert!(PotentialModel::new(1.0, 0.1).is_err());
        assert!(PotentialModel::new(0.5, 0.0).is_err());
    }

    #[test]
    fn f_lambda_point_values() {
        let m = model(0.5);
        assert!((f_lambda(0.0, &m) - 0.25).abs() < 1e-15);
        assert_eq!(f_lambda(1.0, &m), 0.0);
        assert_eq!(f_lambda(-1.0, &m), 0.0);
        // knot chi = 1 + lambda: both adjacent branches give the same value
        let v = 1.0 / (2.0 * 0.5) * 0.25_f64.powi(2)
            + 0.25 * (1.5_f64.powi(2) - 1.0).powi(2)
            + 0.5 / 24.0;
        assert!((f_lambda(1.5, &m) - v).abs() < 1e-14);
        assert!((f_lambda(1.5, &m) - 0.4739583333333333).abs() < 1e-12);
    }

    #[test]
    fn df_lambda_point_values() {
        let m = model(0.5);
        assert_eq!(df_lambda(0.0, &m), 0.0);
        assert_eq!(df_lambda(-1.0, &m), 0.0);
        // top branch at chi = 2: (1/lambda)(chi - 1 - lambda/2) + chi^3 - chi
        assert!((df_lambda(2.0, &m) - 7.5).abs() < 1e-13);
    }

    #[test]
    fn d2f_lambda_point_values() {
        let m = model(0.5);
        assert!((d2f_lambda(0.0, &m) + 1.0).abs() < 1e-15);
        assert!((d2f_lambda(1.0, &m) - 2.0).abs() < 1e-15);
        // second branch at chi = 1.25: (1/lambda^2)(chi-1) + 3 chi^2 - 1
        assert!((d2f_lambda(1.25, &m) - 4.6875).abs() < 1e-13);
    }

    #[test]
    fn beta_lambda_point_values() {
        let m = model(0.5);
        assert_eq!(beta_lambda(0.5, &m), 0.0);
        assert!((beta_lambda(1.5, &m) - 0.25).abs() < 1e-15);
        assert!((beta_lambda(-3.0, &m) + 1.75).abs() < 1e-15);
        // identity beta_lambda = lambda (chi - chi^3 + df_lambda)
        for &chi in &[-3.0, -1.2, -1.0, 0.3, 1.0, 1.2, 1.5, 2.7] {
            let lhs = beta_lambda(chi, &m);
            let rhs = 0.5 * (chi - chi.powi(3) + df_lambda(chi, &m));
            assert!((lhs - rhs).abs() < 1e-12, "chi={chi}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn beta_point_values() {
        assert_eq!(beta(0.9), 0.0);
        assert!((beta(1.5) - 0.5).abs() < 1e-15);
        assert!((beta(-1.5) + 0.5).abs() < 1e-15);
    }

    /// |beta - beta_lambda| <= lambda/2, sampled densely.
    #[test]
    fn beta_approximation_bound() {
        for &l in &[0.5, 0.1, 0.01] {
            let m = model(l);
            for i in 0..=6000 {
                let chi = -3.0 + i as f64 * 0.001;
                let gap = (beta(chi) - beta_lambda(chi, &m)).abs();
                assert!(gap <= 0.5 * l + 1e-15, "lambda={l} chi={chi} gap={gap}");
            }
        }
    }

    /// All four functions are continuous across the four knots.
    #[test]
    fn branch_continuity_at_knots() {
        for &l in &[0.5, 0.1, 1e-3] {
            let m = model(l);
            let eps = 1e-9 * l.max(1e-3);
            for knot in [1.0, 1.0 + l, -1.0, -1.0 - l] {
                for (name, f) in [
                    ("f", &(|x| f_lambda(x, &m)) as &dyn Fn(f64) -> f64),
                    ("df", &|x| df_lambda(x, &m)),
                    ("d2f", &|x| d2f_lambda(x, &m)),
                    ("beta", &|x| beta_lambda(x, &m)),
                ] {
                    let below = f(knot - eps);
                    let above = f(knot + eps);
                    // d2f jumps by O(eps/lambda^2) within a branch; scale accordingly
                    let scale = if name == "d2f" { eps / (l * l) } else { eps / l };
                    let tol = 1e-12 + 10.0 * scale;
                    assert!(
                        (below - above).abs() < tol,
                        "lambda={l} {name} at knot {knot}: {below} vs {above}"
                    );
                }
            }
        }
    }

    /// df_lambda agrees with central differences of f_lambda at observed
    /// order >= 1.8 under step refinement, away from the knots.
    #[test]
    fn derivative_consistency_by_finite_differences() {
        let m = model(0.1);
        for &chi in &[-2.0, -1.05, -0.5, 0.0, 0.7, 1.04, 1.6] {
            let mut errs = Vec::new();
            for &h in &[1e-3, 5e-4, 2.5e-4] {
                let fd = (f_lambda(chi + h, &m) - f_lambda(chi - h, &m)) / (2.0 * h);
                errs.push((fd - df_lambda(chi, &m)).abs());
            }
            for w in errs.windows(2) {
                if w[0] < 1e-12 {
                    continue; // exactly quadratic branch, FD error at roundoff
                }
                let rate = (w[0] / w[1]).log2();
                assert!(rate >= 1.8, "chi={chi}: rate {rate} (errs {errs:?})");
            }
        }
    }

    #[test]
    fn d2f_consistency_by_finite_differences() {
        let m = model(0.1);
        for &chi in &[-1.5, -0.3, 0.5, 1.5] {
            let h = 1e-4;
            let fd = (df_lambda(chi + h, &m) - df_lambda(chi - h, &m)) / (2.0 * h);
            assert!((fd - d2f_lambda(chi, &m)).abs() < 1e-5, "chi={chi}");
        }
    }

    #[test]
    fn classify_mean_examples() {
        assert_eq!(classify_mean(0.0, CLASSIFY_TOL), StabilityClass::Unstable);
        assert_eq!(classify_mean(0.8, CLASSIFY_TOL), StabilityClass::Stable);
        let threshold = 1.0 / 3.0_f64.sqrt();
        assert_eq!(classify_mean(threshold, 1e-9), StabilityClass::Boundary);
    }

    proptest! {
        /// f_lambda dominates the bare double well.
        #[test]
        fn f_lambda_dominates_double_well(chi in -4.0f64..4.0, l in 1e-3f64..0.999) {
            let m = model(l);
            prop_assert!(f_lambda(chi, &m) >= double_well(chi) - 1e-14);
        }

        /// chi * df_lambda(chi) >= chi^4 - chi^2.
        #[test]
        fn monotonicity_bound(chi in -4.0f64..4.0, l in 1e-3f64..0.999) {
            let m = model(l);
            let lhs = chi * df_lambda(chi, &m);
            let rhs = chi.powi(4) - chi * chi;
            prop_assert!(lhs >= rhs - 1e-12 * rhs.abs().max(1.0));
        }

        /// beta_lambda is non-decreasing, 1-Lipschitz, zero on [-1,1], and its
        /// derivative stays in [0,1].
        #[test]
        fn beta_lambda_shape(a in -4.0f64..4.0, b in -4.0f64..4.0, l in 1e-3f64..0.999) {
            let m = model(l);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let d = beta_lambda(hi, &m) - beta_lambda(lo, &m);
            prop_assert!(d >= -1e-15);
            prop_assert!(d <= (hi - lo) + 1e-12);
            let db = dbeta_lambda(a, &m);
            prop_assert!((-1e-15..=1.0 + 1e-15).contains(&db));
            if (-1.0..=1.0).contains(&a) {
                prop_assert_eq!(beta_lambda(a, &m), 0.0);
            }
        }

        /// classify_mean is even in chi_bar.
        #[test]
        fn classify_mean_is_even(chi_bar in -2.0f64..2.0) {
            prop_assert_eq!(
                classify_mean(chi_bar, CLASSIFY_TOL),
                classify_mean(-chi_bar, CLASSIFY_TOL)
            );
        }
    }
}
