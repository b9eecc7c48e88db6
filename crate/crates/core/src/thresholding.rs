//! Half (ℓ1/2) and soft (ℓ1) thresholding, and the scaled forms that act as
//! proximity operators of the hybrid penalties `λ(γ‖·‖_{1/2} + ε‖·‖²)` and
//! `λ(γ‖·‖₁ + ε‖·‖²)`.
//!
//! The half-thresholding function `half_scalar(λ, t)` is the closed-form
//! cubic-root solution with `λ/8` inside the arccos. Outside the band
//! `|t| ∈ [0.75, 0.945]·λ^{2/3}` it returns the global minimizer of
//! `(u − t)² + λ|u|^{1/2}`, equivalently `½(u − t)² + (λ/2)|u|^{1/2}`. The
//! hybrid prox below accounts for that factor of two so that it minimizes
//! `½(u − β)² + λ(γ|u|^{1/2} + εu²)` exactly.

use std::f64::consts::PI;

use crate::numerics::DenseMatrix;
use crate::{Error, Result};

/// Penalty weight of a one-dimensional half-thresholding subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfThresholdParams {
    lambda: f64,
}

impl HalfThresholdParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("half-threshold lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Inputs with `|t|` at or below this value map to zero.
    pub fn threshold(&self) -> f64 {
        half_threshold(self.lambda)
    }

    pub fn apply(&self, t: f64) -> f64 {
        half_scalar(self.lambda, t)
    }
}

/// `(3/4)·λ^{2/3}`.
pub fn half_threshold(lambda: f64) -> f64 {
    0.75 * lambda.powf(2.0 / 3.0)
}

/// The half-thresholding function.
///
/// Zero when `|t| ≤ (3/4)λ^{2/3}`, otherwise
/// `(2/3)·t·(1 + cos(2(π − φ(t))/3))` with
/// `φ(t) = arccos((λ/8)(|t|/3)^{−3/2})`. The arccos argument is clamped to
/// `[−1, 1]`; just above the threshold rounding can push it past 1.
pub fn half_scalar(lambda: f64, t: f64) -> f64 {
    debug_assert!(lambda >= 0.0, "negative lambda {lambda}");
    if lambda == 0.0 || t == 0.0 {
        return t;
    }
    let a = t.abs();
    if a <= half_threshold(lambda) {
        return 0.0;
    }
    let arg = (lambda / 8.0) * (a / 3.0).powf(-1.5);
    let phi = arg.clamp(-1.0, 1.0).acos();
    (2.0 / 3.0) * t * (1.0 + (2.0 * (PI - phi) / 3.0).cos())
}

/// Entrywise [`half_scalar`].
pub fn half_vector(lambda: f64, beta: &DenseMatrix) -> DenseMatrix {
    beta.map(|t| half_scalar(lambda, t))
}


/// `sign(t)·max(|t| − λ, 0)`.
pub fn soft_scalar(lambda: f64, t: f64) -> f64 {
    debug_assert!(lambda >= 0.0, "negative lambda {lambda}");
    let a = t.abs() - lambda;
    if a > 0.0 {
        a.copysign(t)
    } else {
        0.0
    }
}


/// Effective `(threshold parameter, divisor)` for the hybrid-half prox.
///
/// Completing the square turns `½(u − β)² + λγ|u|^{1/2} + λεu²` into
/// `(1 + 2ελ)·[½(u − β')² + w|u|^{1/2}]` with `β' = β/(1 + 2ελ)` and
/// `w = λγ/(1 + 2ελ)`. `half_scalar(2w, ·)` minimizes the bracket.
pub(crate) fn hybrid_half_params(lambda: f64, gamma: f64, epsilon: f64) -> (f64, f64) {
    let shrink = 1.0 + 2.0 * epsilon * lambda;
    (2.0 * lambda * gamma / shrink, shrink)
}

/// Proximity operator of `λ(γ‖·‖_{1/2} + ε‖·‖²)`, applied entrywise.
pub fn prox_hybrid_half(lambda: f64, gamma: f64, epsilon: f64, beta: &DenseMatrix) -> DenseMatrix {
    let (thr, shrink) = hybrid_half_params(lambda, gamma, epsilon);
    beta.map(|b| half_scalar(thr, b / shrink))
}

pub(crate) fn prox_hybrid_half_in_place(lambda: f64, gamma: f64, epsilon: f64, values: &mut [f64]) {
    let (thr, shrink) = hybrid_half_params(lambda, gamma, epsilon);
    values.iter_mut().for_each(|v| *v = half_scalar(thr, *v / shrink));
}

/// Proximity operator of `λ(γ‖·‖₁ + ε‖·‖²)`, applied entrywise.
pub fn prox_hybrid_soft(lambda: f64, gamma: f64, epsilon: f64, beta: &DenseMatrix) -> DenseMatrix {
    let shrink = 1.0 + 2.0 * epsilon * lambda;
    let thr = lambda * gamma / shrink;
    beta.map(|b| soft_scalar(thr, b / shrink))
}

pub(crate) fn prox_hybrid_soft_in_place(lambda: f64, gamma: f64, epsilon: f64, values: &mut [f64]) {
    let shrink = 1.0 + 2.0 * epsilon * lambda;
    let thr = lambda * gamma / shrink;
    values.iter_mut().for_each(|v| *v = soft_scalar(thr, *v / shrink));
}

#[cfg(test)]
mod tests {
    use super::*;
    use elm_oracles as oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_validate() {
        assert!(HalfThresholdParams::new(-1.0).is_err());
        let p = HalfThresholdParams::new(1.0).unwrap();
        assert_eq!(p.threshold(), 0.75);
        assert_eq!(HalfThresholdParams::new(0.0).unwrap().threshold(), 0.0);
    }

    #[test]
    fn half_scalar_trivial_cases() {
        assert_eq!(half_scalar(0.0, 5.0), 5.0);
        assert_eq!(half_scalar(1.0, 0.5), 0.0);
        assert_eq!(half_scalar(1.0, 0.75), 0.0);
        assert_eq!(half_scalar(1.0, -0.75), 0.0);
    }

    #[test]
    fn half_scalar_matches_fine_grid_prox() {
        // λ = 1, t = 2 against a 1e-6-step grid on [0, 2] plus bisection.
        let got = half_scalar(1.0, 2.0);
        let expect = oracle::half_prox_unit_weight(1.0, 2.0, 2_000_000);
        assert!((got - expect).abs() <= 1e-5, "{got} vs {expect}");
    }

    #[test]
    fn half_scalar_just_above_threshold_is_finite() {
        for lambda in [1e-3, 0.3, 1.0, 7.0] {
            let thr = half_threshold(lambda);
            let t = thr * (1.0 + f64::EPSILON);
            let v = half_scalar(lambda, t);
            assert!(v.is_finite() && v > 0.0 && v <= t);
        }
    }

    #[test]
    fn half_vector_entrywise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beta = DenseMatrix::from_fn(10, 1, |_, _| rng.gen_range(-2.0..2.0));
        let out = half_vector(0.3, &beta);
        for (o, b) in out.as_slice().iter().zip(beta.as_slice()) {
            assert_eq!(*o, half_scalar(0.3, *b));
        }
        assert_eq!(half_vector(0.0, &beta), beta);
        let z = DenseMatrix::zeros(4, 2);
        assert_eq!(half_vector(0.3, &z), z);
    }

    #[test]
    fn soft_scalar_cases() {
        assert_eq!(soft_scalar(0.0, -3.0), -3.0);
        assert_eq!(soft_scalar(2.0, 1.0), 0.0);
        assert_eq!(soft_scalar(1.0, 2.5), 1.5);
        assert!((oracle::soft_prox(1.0, 2.5, 1000) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn prox_hybrid_half_reductions() {
        let beta = DenseMatrix::column(vec![2.0, -0.1, 0.7, -3.5]).unwrap();
        let (lambda, eps) = (0.5, 0.5);
        let shrink = 1.0 + 2.0 * eps * lambda;
        let g0 = prox_hybrid_half(lambda, 0.0, eps, &beta);
        for (o, b) in g0.as_slice().iter().zip(beta.as_slice()) {
            assert_eq!(*o, b / shrink);
        }
        // ε = 0 reduces to plain half thresholding at weight 2λγ
        let e0 = prox_hybrid_half(lambda, 0.8, 0.0, &beta);
        assert_eq!(e0, half_vector(2.0 * lambda * 0.8, &beta));
    }

    #[test]
    fn prox_hybrid_half_matches_grid() {
        let beta = DenseMatrix::column(vec![2.0, 0.1]).unwrap();
        let out = prox_hybrid_half(0.5, 1.0, 0.5, &beta);
        for (o, b) in out.as_slice().iter().zip(beta.as_slice()) {
            let e = oracle::hybrid_half_prox(0.5, 1.0, 0.5, *b, 200_000);
            assert!((o - e).abs() <= 1e-5, "{o} vs {e}");
        }
    }

    #[test]
    fn prox_hybrid_soft_cases() {
        let beta = DenseMatrix::column(vec![3.0, -0.2, 1.1]).unwrap();
        let g0 = prox_hybrid_soft(1.0, 0.0, 0.25, &beta);
        for (o, b) in g0.as_slice().iter().zip(beta.as_slice()) {
            assert_eq!(*o, b / 1.5);
        }
        let e0 = prox_hybrid_soft(0.7, 1.0, 0.0, &beta);
        for (o, b) in e0.as_slice().iter().zip(beta.as_slice()) {
            assert_eq!(*o, soft_scalar(0.7, *b));
        }
        let one = prox_hybrid_soft(1.0, 0.5, 0.25, &DenseMatrix::column(vec![3.0]).unwrap());
        let e = oracle::hybrid_soft_prox(1.0, 0.5, 0.25, 3.0, 1000);
        assert!((one.get(0, 0) - e).abs() <= 1e-6);
        // ½(u−3)² + 0.5u + 0.25u²  ⇒  1.5u = 2.5
        assert!((one.get(0, 0) - 2.5 / 1.5).abs() < 1e-15);
    }

    /// Lower edge of the active region in units of λ^{2/3}, above the
    /// ambiguity band.
    const ACTIVE_EDGE: f64 = 1.2;

    /// Slope of the active branch is `1/(1 − (λ/8)u^{−3/2})`, the inverse of
    /// `dt/du` for `t = u + (λ/4)u^{−1/2}`. It is largest where `u` is
    /// smallest, i.e. at the lower edge of the sampled region.
    fn active_branch_slope(lambda: f64, t_edge: f64) -> f64 {
        let u = half_scalar(lambda, t_edge).abs();
        1.0 / (1.0 - (lambda / 8.0) * u.powf(-1.5))
    }

    #[test]
    fn jump_across_threshold_breaks_nonexpansiveness() {
        // Any discontinuous thresholding rule is expansive for pairs that
        // straddle its jump, band exclusion or not.
        let (t, t2) = (0.69, 1.01);
        let d = (half_scalar(1.0, t) - half_scalar(1.0, t2)).abs();
        assert!(d > (t - t2).abs());
    }

    proptest! {
        #[test]
        fn half_preserves_sign_and_shrinks(lambda in 0.0f64..10.0, t in -20.0f64..20.0) {
            let v = half_scalar(lambda, t);
            prop_assert!(v * t >= 0.0);
            prop_assert!(v.abs() <= t.abs());
        }

        #[test]
        fn half_is_odd(lambda in 0.0f64..10.0, t in -20.0f64..20.0) {
            prop_assert_eq!(half_scalar(lambda, -t), -half_scalar(lambda, t));
        }

        #[test]
        fn zero_weight_is_identity(t in -1e6f64..1e6) {
            prop_assert!((half_scalar(0.0, t) - t).abs() <= 1e-12 * t.abs());
            prop_assert_eq!(soft_scalar(0.0, t), t);
        }

        #[test]
        fn half_zero_region_collapses(lambda in 1e-3f64..10.0, frac in -0.7f64..0.7) {
            let t = frac * lambda.powf(2.0 / 3.0);
            prop_assert_eq!(half_scalar(lambda, t), 0.0);
        }

        #[test]
        fn half_is_lipschitz_on_active_branch(
            lambda in 1e-3f64..10.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
            span in 0.1f64..20.0,
        ) {
            let scale = lambda.powf(2.0 / 3.0);
            let edge = ACTIVE_EDGE * scale;
            let (t, t2) = (edge + a * span, edge + b * span);
            let lip = active_branch_slope(lambda, edge);
            let d = (half_scalar(lambda, t) - half_scalar(lambda, t2)).abs();
            prop_assert!(d <= lip * (t - t2).abs() + 1e-12, "d={d} lip={lip}");
        }

        #[test]
        fn half_agrees_with_prox_oracle_outside_band(lambda in 1e-3f64..10.0, t in -20.0f64..20.0) {
            let r = t.abs() / lambda.powf(2.0 / 3.0);
            prop_assume!(!(0.7..=1.2).contains(&r));
            let e = oracle::half_prox_unit_weight(lambda, t, 4000);
            prop_assert!((half_scalar(lambda, t) - e).abs() <= 1e-5);
        }
    }
}
