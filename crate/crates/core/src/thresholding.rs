//! Scalar and componentwise thresholding operators.
//!
//! Each operator is determined by a defining function `f_tau` that is odd,
//! strictly increasing above the threshold, and satisfies the bracket
//! `u - c1*tau <= f_tau(u) <= u - c2*tau` for `u >= tau` with constants
//! `0 <= c2 <= c1 <= 1`. The full operator `h_tau` applies `f_tau` to
//! components with magnitude strictly above `tau` and zeroes the rest.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default concavity parameter for the SCAD rule.
pub const DEFAULT_SCAD_A: f64 = 3.7;

/// A named thresholding operator together with its shape parameter.
///
/// `half` and `two_thirds` are the closed-form proximal rules for the
/// `l_{1/2}` and `l_{2/3}` penalties, reparameterized so the operator's jump
/// point sits exactly at the threshold `tau` rather than at a function of the
/// regularization weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdingOperator {
    Hard,
    Soft,
    Half,
    TwoThirds,
    Scad { a: f64 },
}

impl ThresholdingOperator {
    /// Builds an operator from its name. `scad_a` applies only to `"scad"`.
    pub fn from_name(name: &str, scad_a: Option<f64>) -> Result<Self> {
        match name {
            "hard" => Ok(Self::Hard),
            "soft" => Ok(Self::Soft),
            "half" => Ok(Self::Half),
            "two_thirds" => Ok(Self::TwoThirds),
            "scad" => {
                let a = scad_a.unwrap_or(DEFAULT_SCAD_A);
                if !(a > 2.0) {
                    return Err(Error::InvalidConfig(format!(
                        "scad parameter a must exceed 2, got {a}"
                    )));
                }
                Ok(Self::Scad { a })
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown operator {other:?}; expected hard|soft|half|two_thirds|scad"
            ))),
        }
    }

    /// Checks the shape-parameter constraint (`a > 2` for scad); relevant
    /// for operators built by deserialization rather than [`Self::from_name`].
    pub fn validate(&self) -> Result<()> {
        if let Self::Scad { a } = self {
            if !(*a > 2.0) {
                return Err(Error::InvalidConfig(format!(
                    "scad parameter a must exceed 2, got {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Hard => "hard",
            Self::Soft => "soft",
            Self::Half => "half",
            Self::TwoThirds => "two_thirds",
            Self::Scad { .. } => "scad",
        }
    }

    /// Upper boundedness constant `c1` (per-operator table value).
    pub fn c1(&self) -> f64 {
        match self {
            Self::Hard => 0.0,
            Self::Half => 1.0 / 3.0,
            Self::TwoThirds => 0.5,
            Self::Soft => 1.0,
            Self::Scad { .. } => 1.0,
        }
    }

    /// Lower boundedness constant `c2`.
    pub fn c2(&self) -> f64 {
        match self {
            Self::Soft => 1.0,
            _ => 0.0,
        }
    }

    /// All five operators with default parameters.
    pub fn all() -> [Self; 5] {
        [
            Self::Hard,
            Self::Soft,
            Self::Half,
            Self::TwoThirds,
            Self::Scad { a: DEFAULT_SCAD_A },
        ]
    }
}

impl std::fmt::Display for ThresholdingOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluates the defining function `f_tau(u)`.
///
/// Requires `|u| > tau > 0`; callers wanting the gated operator (including
/// the `tau = 0` identity limit) should use [`apply_threshold`].
pub fn apply_defining(op: ThresholdingOperator, u: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!(
            "defining function requires tau > 0, got tau = {tau}"
        )));
    }
    if !(u.abs() > tau) {
        return Err(Error::Domain(format!(
            "defining function requires |u| > tau, got u = {u}, tau = {tau}"
        )));
    }
    Ok(defining_unchecked(op, u, tau))
}

fn defining_unchecked(op: ThresholdingOperator, u: f64, tau: f64) -> f64 {
    let sign = u.signum();
    let mag = u.abs();
    match op {
        ThresholdingOperator::Hard => u,
        ThresholdingOperator::Soft => sign * (mag - tau),
        ThresholdingOperator::Scad { a } => {
            if mag <= 2.0 * tau {
                sign * (mag - tau)
            } else if mag <= a * tau {
                ((a - 1.0) * u - sign * a * tau) / (a - 2.0)
            } else {
                u
            }
        }
        ThresholdingOperator::Half => sign * half_defining(mag, tau),
        ThresholdingOperator::TwoThirds => sign * two_thirds_defining(mag, tau),
    }
}

/// `l_{1/2}` rule for `u > tau > 0`: the largest root of
/// `y^3 - u*y + lambda/2` squared, with `lambda = (2*tau/3)^{3/2}` so the
/// jump point is exactly `tau`. At the jump the value is `2*tau/3`.
fn half_defining(u: f64, tau: f64) -> f64 {
    let w = (tau / u).powf(1.5) / std::f64::consts::SQRT_2;
    let theta = (2.0 / 3.0) * (-w).acos();
    (2.0 * u / 3.0) * (1.0 + theta.cos())
}

/// `l_{2/3}` rule for `u > tau > 0`: `x = y^3` where `y` is the largest root
/// of `y^4 - u*y + 2*lambda/3` and `lambda = (3/2)*(tau/2)^{4/3}`, putting
/// the jump point at `tau` with jump value `tau/2`.
fn two_thirds_defining(u: f64, tau: f64) -> f64 {
    let ratio = u / tau;
    // Resolvent-cubic root of A^3 - (8 lambda / 3) A - u^2, expressed through
    // the scale-free argument (3*sqrt(3)/4) * ratio^2 >= 3*sqrt(3)/4 > 1.
    let arg = 0.75 * 3.0_f64.sqrt() * ratio * ratio;
    let big_a =
        (4.0 * 3.0_f64.sqrt() / 3.0) * (tau / 2.0).powf(2.0 / 3.0) * (arg.acosh() / 3.0).cosh();
    let sqrt_a = big_a.sqrt();
    let radicand = (2.0 * u / sqrt_a - big_a).max(0.0);
    let y = 0.5 * (sqrt_a + radicand.sqrt());
    y.powi(3)
}

/// The gated operator `h_tau(u)`: `f_tau(u)` when `|u| > tau`, else 0.
/// At `tau = 0` every operator reduces to the identity.
pub fn apply_threshold(op: ThresholdingOperator, u: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        u
    } else if u.abs() > tau {
        defining_unchecked(op, u, tau)
    } else {
        0.0
    }
}

/// Componentwise thresholding of a vector.
pub fn apply_vector(op: ThresholdingOperator, z: &DVector<f64>, tau: f64) -> DVector<f64> {
    DVector::from_iterator(z.len(), z.iter().map(|&zi| apply_threshold(op, zi, tau)))
}

/// Grid estimate of the boundedness constants: over all pairs
/// `(u, tau)` from the two grids, `c1_hat = max (u - f_tau(u)) / tau` and
/// `c2_hat = min (u - f_tau(u)) / tau`.
///
/// This is the independent oracle checking the implemented formulas against
/// the declared table constants. Every grid pair must satisfy `u > tau > 0`.
pub fn estimate_boundedness(
    op: ThresholdingOperator,
    u_grid: &[f64],
    tau_grid: &[f64],
) -> Result<(f64, f64)> {
    if u_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::Domain("boundedness grids must be nonempty".into()));
    }
    let mut c1_hat = f64::NEG_INFINITY;
    let mut c2_hat = f64::INFINITY;
    for &tau in tau_grid {
        for &u in u_grid {
            if !(tau > 0.0 && u > tau) {
                return Err(Error::Domain(format!(
                    "boundedness grid point must satisfy u > tau > 0, got u = {u}, tau = {tau}"
                )));
            }
            let ratio = (u - defining_unchecked(op, u, tau)) / tau;
            c1_hat = c1_hat.max(ratio);
            c2_hat = c2_hat.min(ratio);
        }
    }
    Ok((c1_hat, c2_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const OPS: [ThresholdingOperator; 5] = [
        ThresholdingOperator::Hard,
        ThresholdingOperator::Soft,
        ThresholdingOperator::Half,
        ThresholdingOperator::TwoThirds,
        ThresholdingOperator::Scad { a: DEFAULT_SCAD_A },
    ];

    #[test]
    fn soft_and_hard_defining_values() {
        assert_eq!(
            apply_defining(ThresholdingOperator::Soft, 2.0, 1.0).unwrap(),
            1.0
        );
        assert_eq!(
            apply_defining(ThresholdingOperator::Hard, 2.0, 1.0).unwrap(),
            2.0
        );
        assert_eq!(
            apply_defining(ThresholdingOperator::Soft, -2.0, 1.0).unwrap(),
            -1.0
        );
    }

    #[test]
    fn scad_middle_piece_value() {
        // 2*tau < |u| <= a*tau branch: ((a-1)u - a*tau)/(a-2) = 4.4/1.7
        let f = apply_defining(ThresholdingOperator::Scad { a: 3.7 }, 3.0, 1.0).unwrap();
        assert_abs_diff_eq!(f, 4.4 / 1.7, epsilon = 1e-12);
    }

    #[test]
    fn defining_domain_errors() {
        for op in OPS {
            assert!(apply_defining(op, 0.5, 1.0).is_err());
            assert!(apply_defining(op, 1.0, 1.0).is_err());
            assert!(apply_defining(op, 2.0, 0.0).is_err());
            assert!(apply_defining(op, 2.0, -1.0).is_err());
        }
    }

    #[test]
    fn threshold_gating_and_zero_tau() {
        for op in OPS {
            assert_eq!(apply_threshold(op, 0.5, 1.0), 0.0);
            assert_eq!(apply_threshold(op, 0.7, 0.0), 0.7);
            assert_eq!(apply_threshold(op, 0.0, 0.0), 0.0);
            // the gate is strict: |u| = tau maps to zero for every operator
            assert_eq!(apply_threshold(op, 1.0, 1.0), 0.0);
            assert_eq!(apply_threshold(op, -1.0, 1.0), 0.0);
        }
        assert_eq!(apply_threshold(ThresholdingOperator::Soft, 2.0, 1.0), 1.0);
    }

    #[test]
    fn vector_is_componentwise() {
        let z = DVector::from_vec(vec![2.0, -2.0, 0.5]);
        let out = apply_vector(ThresholdingOperator::Soft, &z, 1.0);
        assert_eq!(out, DVector::from_vec(vec![1.0, -1.0, 0.0]));

        let z = DVector::from_vec(vec![3.0, 0.0, -0.2]);
        let out = apply_vector(ThresholdingOperator::Hard, &z, 0.5);
        assert_eq!(out, DVector::from_vec(vec![3.0, 0.0, 0.0]));

        let z = DVector::zeros(4);
        for op in OPS {
            assert_eq!(apply_vector(op, &z, 0.3), DVector::zeros(4));
        }
    }

    #[test]
    fn jump_values_at_threshold() {
        // Right limits at u -> tau+: hard -> tau, soft -> 0, scad -> 0 (soft
        // branch), half -> 2*tau/3, two_thirds -> tau/2.
        let tau = 1.3;
        let u = tau * (1.0 + 1e-9);
        let cases = [
            (ThresholdingOperator::Hard, tau),
            (ThresholdingOperator::Soft, 0.0),
            (ThresholdingOperator::Scad { a: 3.7 }, 0.0),
            (ThresholdingOperator::Half, 2.0 * tau / 3.0),
            (ThresholdingOperator::TwoThirds, tau / 2.0),
        ];
        for (op, expected) in cases {
            let f = apply_defining(op, u, tau).unwrap();
            assert_abs_diff_eq!(f, expected, epsilon = 1e-6);
        }
    }

    /// Brute-force proximal oracle: minimize `0.5*(x-u)^2 + lambda*|x|^q`
    /// over a dense grid with golden-section refinement.
    fn prox_argmin(u: f64, lambda: f64, q: f64) -> f64 {
        let obj = |x: f64| 0.5 * (x - u) * (x - u) + lambda * x.abs().powf(q);
        let mut best_x = 0.0;
        let mut best = obj(0.0);
        let grid = 200_000;
        for i in 1..=grid {
            let x = u * (i as f64) / (grid as f64);
            let v = obj(x);
            if v < best {
                best = v;
                best_x = x;
            }
        }
        // golden-section around the best grid point
        let step = u / grid as f64;
        let (mut lo, mut hi) = ((best_x - step).max(0.0), best_x + step);
        let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if obj(a) < obj(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let x = 0.5 * (lo + hi);
        if obj(x) <= obj(0.0) {
            x
        } else {
            0.0
        }
    }

    #[test]
    fn half_matches_proximal_oracle() {
        let tau = 0.8_f64;
        let lambda = (2.0 * tau / 3.0).powf(1.5);
        for ratio in [1.05, 1.3, 2.0, 5.0, 20.0] {
            let u = tau * ratio;
            let f = apply_defining(ThresholdingOperator::Half, u, tau).unwrap();
            let oracle = prox_argmin(u, lambda, 0.5);
            assert_abs_diff_eq!(f, oracle, epsilon = 1e-5 * u.max(1.0));
        }
    }

    #[test]
    fn two_thirds_matches_proximal_oracle() {
        let tau = 1.7_f64;
        let lambda = 1.5 * (tau / 2.0).powf(4.0 / 3.0);
        for ratio in [1.05, 1.3, 2.0, 5.0, 20.0] {
            let u = tau * ratio;
            let f = apply_defining(ThresholdingOperator::TwoThirds, u, tau).unwrap();
            let oracle = prox_argmin(u, lambda, 2.0 / 3.0);
            assert_abs_diff_eq!(f, oracle, epsilon = 1e-5 * u.max(1.0));
        }
    }

    #[test]
    fn boundedness_estimates_exact_operators() {
        let u_grid: Vec<f64> = (1..400).map(|i| 1.0 + 0.05 * i as f64).collect();
        let tau_grid = vec![0.5, 1.0];
        let (c1, c2) =
            estimate_boundedness(ThresholdingOperator::Soft, &u_grid, &tau_grid).unwrap();
        assert_abs_diff_eq!(c1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c2, 1.0, epsilon = 1e-12);
        let (c1, c2) =
            estimate_boundedness(ThresholdingOperator::Hard, &u_grid, &tau_grid).unwrap();
        assert_abs_diff_eq!(c1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn boundedness_estimates_scad() {
        // c1 attained for u <= 2*tau, c2 for u > a*tau.
        let tau_grid = vec![0.5, 1.0, 2.0];
        let u_grid: Vec<f64> = (1..2000).map(|i| 2.0 * (1.0 + 0.01 * i as f64)).collect();
        let (c1, c2) =
            estimate_boundedness(ThresholdingOperator::Scad { a: 3.7 }, &u_grid, &tau_grid)
                .unwrap();
        assert_abs_diff_eq!(c1, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c2, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn boundedness_grid_errors() {
        let op = ThresholdingOperator::Soft;
        assert!(estimate_boundedness(op, &[], &[1.0]).is_err());
        assert!(estimate_boundedness(op, &[2.0], &[]).is_err());
        assert!(estimate_boundedness(op, &[0.5], &[1.0]).is_err());
        assert!(estimate_boundedness(op, &[2.0], &[0.0]).is_err());
    }

    fn op_strategy() -> impl Strategy<Value = ThresholdingOperator> {
        prop_oneof![
            Just(ThresholdingOperator::Hard),
            Just(ThresholdingOperator::Soft),
            Just(ThresholdingOperator::Half),
            Just(ThresholdingOperator::TwoThirds),
            (2.1f64..8.0).prop_map(|a| ThresholdingOperator::Scad { a }),
        ]
    }

    proptest! {
        #[test]
        fn defining_is_odd(op in op_strategy(), tau in 1e-3f64..10.0, r in 1.0001f64..100.0) {
            let u = tau * r;
            let pos = apply_defining(op, u, tau).unwrap();
            let neg = apply_defining(op, -u, tau).unwrap();
            prop_assert!((pos + neg).abs() <= 1e-12 * pos.abs().max(1.0));
        }

        #[test]
        fn defining_respects_bracket(op in op_strategy(), tau in 1e-3f64..10.0, r in 1.0001f64..100.0) {
            let u = tau * r;
            let f = apply_defining(op, u, tau).unwrap();
            let tol = 1e-9 * u.max(1.0);
            prop_assert!(f >= u - op.c1() * tau - tol);
            prop_assert!(f <= u - op.c2() * tau + tol);
        }

        #[test]
        fn threshold_contracts_and_keeps_sign(op in op_strategy(), u in -50.0f64..50.0, tau in 0.0f64..5.0) {
            let h = apply_threshold(op, u, tau);
            prop_assert!(h.abs() <= u.abs() + 1e-12 * u.abs().max(1.0));
            prop_assert!(h == 0.0 || h.signum() == u.signum());
        }

        #[test]
        fn defining_is_monotone(op in op_strategy(), tau in 1e-3f64..10.0, a in 1.0001f64..99.0, gap in 1e-4f64..1.0) {
            let u = tau * a;
            let v = u + tau * gap;
            let fu = apply_defining(op, u, tau).unwrap();
            let fv = apply_defining(op, v, tau).unwrap();
            prop_assert!(fu < fv);
        }
    }
}
