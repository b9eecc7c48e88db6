//! Fixed-point half-thresholding iteration for the ℓ2-ℓ1/2 hybrid model.
//!
//! The map
//!
//! ```text
//! Γβ = prox_{δλp}(β − δ(HᵀHβ − HᵀT)),   p(β) = γ‖β‖_{1/2} + ε‖β‖²
//! ```
//!
//! is a gradient step on `½‖Hβ − T‖²` followed by the hybrid-half proximity
//! operator. Its fixed points are the stationary points of the model. With
//! `κ₀ ≤ λ_min(HᵀH)`, `κ ≥ λ_max(HᵀH)` and `δ = 2/(κ₀ + κ)` the affine part
//! contracts by `(κ − κ₀)/(κ + κ₀)`, and the ℓ2 shrink adds another factor
//! `1/(1 + 2ελδ)`.

use std::time::Instant;

use super::{half_penalty, IterativeSetup, RegConfig, SolverOutput};
use crate::numerics::{gram, DenseMatrix, SpectrumBounds};
use crate::thresholding::{hybrid_half_params, prox_hybrid_half_in_place};
use crate::{Error, Result};

/// One application of `Γ` with fixed `(λ, γ, ε, δ)`.
#[derive(Debug, Clone)]
pub struct FixedPointMap {
    gram: DenseMatrix,
    htt: DenseMatrix,
    lambda: f64,
    gamma: f64,
    epsilon: f64,
    delta: f64,
}

impl FixedPointMap {
    pub fn new(h: &DenseMatrix, t: &DenseMatrix, lambda: f64, gamma: f64, epsilon: f64, delta: f64) -> Result<Self> {
        if h.rows() != t.rows() {
            return Err(Error::ShapeMismatch { op: "fixed_point_map", left: h.shape(), right: t.shape() });
        }
        Self::from_gram(gram(h)?, h.t_matmul(t)?, lambda, gamma, epsilon, delta)
    }

    /// From precomputed `HᵀH` and `HᵀT`.
    pub fn from_gram(
        gram: DenseMatrix,
        htt: DenseMatrix,
        lambda: f64,
        gamma: f64,
        epsilon: f64,
        delta: f64,
    ) -> Result<Self> {
        if gram.rows() != gram.cols() || htt.rows() != gram.rows() {
            return Err(Error::ShapeMismatch { op: "fixed_point_map", left: gram.shape(), right: htt.shape() });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        if !(lambda >= 0.0 && gamma >= 0.0 && epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda, gamma, epsilon must be nonnegative, got ({lambda}, {gamma}, {epsilon})"
            )));
        }
        Ok(Self { gram, htt, lambda, gamma, epsilon, delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `1 + 2ελδ`.
    pub fn shrink(&self) -> f64 {
        1.0 + 2.0 * self.epsilon * self.lambda * self.delta
    }

    /// Parameter handed to `half_scalar` after the ℓ2 shrink.
    pub fn half_weight(&self) -> f64 {
        hybrid_half_params(self.lambda * self.delta, self.gamma, self.epsilon).0
    }

    /// The value fed to the half-thresholding function, entrywise:
    /// `((I − δHᵀH)β + δHᵀT)/(1 + 2ελδ)`.
    pub fn prox_input(&self, beta: &DenseMatrix) -> Result<DenseMatrix> {
        let z = self.gradient_step(beta)?;
        Ok(z.scaled(1.0 / self.shrink()))
    }

    fn gradient_step(&self, beta: &DenseMatrix) -> Result<DenseMatrix> {
        if beta.rows() != self.gram.rows() || beta.cols() != self.htt.cols() {
            return Err(Error::ShapeMismatch { op: "fixed_point_map", left: self.htt.shape(), right: beta.shape() });
        }
        let mut z = self.gram.matmul(beta)?;
        let d = self.delta;
        for ((zi, &b), &c) in z.data_mut().iter_mut().zip(beta.as_slice()).zip(self.htt.as_slice()) {
            *zi = b + d * (c - *zi);
        }
        Ok(z)
    }

    /// `Γβ`.
    pub fn apply(&self, beta: &DenseMatrix) -> Result<DenseMatrix> {
        let mut z = self.gradient_step(beta)?;
        prox_hybrid_half_in_place(self.lambda * self.delta, self.gamma, self.epsilon, z.data_mut());
        Ok(z)
    }

    /// `Γᵏβ`.
    pub fn iterate(&self, beta: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
        let mut b = beta.clone();
        for _ in 0..k {
            b = self.apply(&b)?;
        }
        Ok(b)
    }

    /// Lipschitz factor of the affine part including the ℓ2 shrink,
    /// `((κ − κ₀)/(κ + κ₀)) / (1 + 2ελδ)`.
    pub fn affine_contraction(&self, bounds: &SpectrumBounds) -> f64 {
        let (k0, k) = (bounds.kappa0, bounds.kappa);
        ((k - k0) / (k + k0)) / self.shrink()
    }
}

/// `Γβ` for a one-off evaluation. Builds `HᵀH` each call; use
/// [`FixedPointMap`] to iterate.
pub fn fixed_point_map(
    h: &DenseMatrix,
    t: &DenseMatrix,
    beta: &DenseMatrix,
    lambda: f64,
    gamma: f64,
    epsilon: f64,
    delta: f64,
) -> Result<DenseMatrix> {
    FixedPointMap::new(h, t, lambda, gamma, epsilon, delta)?.apply(beta)
}

/// A-priori iteration count after which `‖β_l − β*‖ < ξ`.
///
/// Smallest positive integer strictly greater than
///
/// ```text
/// log( ‖β₁ − β₀‖(κ + κ₀) / (ξ κ₀ (κ + κ₀ + 4ελ)) ) / log( (κ + κ₀)/(κ − κ₀) )
/// ```
///
/// Returns 1 when the log argument is at most 1 or when `κ₀ = κ`. Saturates
/// at `usize::MAX` for astronomically large bounds.
pub fn lmax_bound(
    beta0: &DenseMatrix,
    beta1: &DenseMatrix,
    kappa0: f64,
    kappa: f64,
    epsilon: f64,
    lambda: f64,
    xi: f64,
) -> Result<usize> {
    if !(kappa0 > 0.0) {
        return Err(Error::KappaNotPositive { kappa0 });
    }
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!("xi must be positive, got {xi}")));
    }
    if kappa0 > kappa {
        return Err(Error::InvalidParameter(format!("kappa0 {kappa0} exceeds kappa {kappa}")));
    }
    if kappa0 == kappa {
        return Ok(1);
    }
    let step = beta1.sub(beta0)?.frobenius_norm();
    let arg = step * (kappa + kappa0) / (xi * kappa0 * (kappa + kappa0 + 4.0 * epsilon * lambda));
    if !(arg > 1.0) {
        return Ok(1);
    }
    let bound = arg.ln() / ((kappa + kappa0) / (kappa - kappa0)).ln();
    if !bound.is_finite() || bound >= usize::MAX as f64 {
        return Ok(usize::MAX);
    }
    Ok((bound.floor() as usize).saturating_add(1).max(1))
}

/// Fits the ℓ2-ℓ1/2 hybrid model by iterating `Γ` from `β₀ = 0`.
///
/// Stops at the first `l ≥ min(l_max, hard_iter_cap)` with
/// `‖β_l − Γβ_l‖_F ≤ ξ(1 + ‖β_l‖_F)`, or at `hard_iter_cap`. In the first
/// case `converged` is set and the returned `β` carries that fixed-point
/// certificate.
pub fn train_hybrid_half(h: &DenseMatrix, t: &DenseMatrix, cfg: &RegConfig) -> Result<SolverOutput> {
    let start = Instant::now();
    let mut setup = IterativeSetup::new(h, t, cfg)?;
    let mut diagnostics = std::mem::take(&mut setup.diagnostics);
    let (bounds, delta) = (setup.bounds, setup.delta);
    let map = FixedPointMap::from_gram(
        std::mem::replace(&mut setup.gram, DenseMatrix::zeros(1, 1)),
        std::mem::replace(&mut setup.htt, DenseMatrix::zeros(1, 1)),
        cfg.lambda,
        cfg.gamma,
        cfg.epsilon,
        delta,
    )?;
    let objective = |beta: &DenseMatrix| {
        setup.data_term(beta) + cfg.lambda * half_penalty(beta.as_slice(), cfg.gamma, cfg.epsilon)
    };

    let mut beta = DenseMatrix::zeros(h.cols(), t.cols());
    let mut trace = vec![objective(&beta)];
    let mut next = map.apply(&beta)?;
    let lmax = match lmax_bound(&beta, &next, bounds.kappa0, bounds.kappa, cfg.epsilon, cfg.lambda, cfg.xi) {
        Ok(l) => Some(l),
        Err(e) => {
            diagnostics.push(format!("no a-priori bound: {e}"));
            None
        }
    };
    let cap = cfg.hard_iter_cap;
    let target = lmax.unwrap_or(1).min(cap);
    if lmax.is_some_and(|l| l > cap) {
        diagnostics.push(format!("a-priori bound {} exceeds hard_iter_cap {cap}", lmax.unwrap()));
    }

    let mut l = 0;
    let converged = loop {
        beta = next;
        l += 1;
        let f = objective(&beta);
        if !f.is_finite() {
            return Err(Error::Diverged { delta, objective: f });
        }
        trace.push(f);
        next = map.apply(&beta)?;
        let residual = next.sub(&beta)?.frobenius_norm();
        if l >= target && residual <= cfg.xi * (1.0 + beta.frobenius_norm()) {
            break true;
        }
        if l >= cap {
            diagnostics.push(format!("stopped at hard_iter_cap {cap} with fixed-point residual {residual:e}"));
            break false;
        }
    };

    Ok(SolverOutput {
        support_size: beta.count_nonzero(),
        beta,
        iterations: l,
        objective_trace: trace,
        delta_used: delta,
        lmax_used: lmax,
        kappa_bounds: Some(bounds),
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// Fits the ℓ1/2 model: [`train_hybrid_half`] with `ε = 0`.
pub fn train_half(h: &DenseMatrix, t: &DenseMatrix, cfg: &RegConfig) -> Result<SolverOutput> {
    let cfg = RegConfig { epsilon: 0.0, ..cfg.clone() };
    train_hybrid_half(h, t, &cfg)
}
