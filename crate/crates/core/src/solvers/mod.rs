//! Training procedures for the output weights.
//!
//! All solvers take the hidden output matrix `H` (`n × N`), the target `T`
//! (`n × m`) and a [`RegConfig`], and return a [`SolverOutput`] holding the
//! `N × m` weight matrix. Multi-output targets are handled column-wise in a
//! single pass: the data term is Frobenius, penalties are entrywise.

mod closed_form;
mod fixed_point;
mod forward_backward;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use closed_form::{train_elm, train_l2, DEFAULT_RIDGE_FLOOR};
pub use fixed_point::{fixed_point_map, lmax_bound, train_half, train_hybrid_half, FixedPointMap};
pub use forward_backward::{train_hybrid_soft, train_l1};

use crate::numerics::{spectral_bounds, DenseMatrix, SpectrumBounds};
use crate::{Error, Result};

/// How the step size `δ` is chosen for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    /// `δ = 2/(κ₀ + κ)` from spectral bounds of `HᵀH`.
    #[default]
    FromSpectrum,
    /// A fixed `δ`.
    Fixed(f64),
    /// `δ = c/κ`. `c = 1` is the classical forward-backward step; it stays
    /// well inside the stable range when `HᵀH` is rank deficient and `κ₀`
    /// collapses to zero.
    KappaScaled(f64),
}

/// Regularization and iteration parameters shared by all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegConfig {
    /// Overall penalty weight `λ`.
    pub lambda: f64,
    /// Weight `γ` of the sparse (ℓ1/2 or ℓ1) part.
    pub gamma: f64,
    /// Weight `ε` of the ℓ2 part inside the hybrid penalty.
    pub epsilon: f64,
    /// Ridge weight `μ` of the `l2` solver.
    pub mu: f64,
    /// Acceptable error `ξ` for the stopping rules.
    pub xi: f64,
    pub delta_policy: DeltaPolicy,
    pub hard_iter_cap: usize,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma: 1.0,
            epsilon: 0.0,
            mu: 0.0,
            xi: 1e-4,
            delta_policy: DeltaPolicy::FromSpectrum,
            hard_iter_cap: 10_000,
        }
    }
}

impl RegConfig {
    /// Checks the invariants the iterative solvers rely on.
    pub fn validate_iterative(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(&format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(&format!("gamma must be nonnegative, got {}", self.gamma));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(&format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return bad(&format!("xi must be positive, got {}", self.xi));
        }
        if self.hard_iter_cap < 1 {
            return bad("hard_iter_cap must be at least 1");
        }
        match self.delta_policy {
            DeltaPolicy::Fixed(d) | DeltaPolicy::KappaScaled(d) if !(d > 0.0 && d.is_finite()) => {
                bad(&format!("step policy value must be positive, got {d}"))
            }
            _ => Ok(()),
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    /// `N × m` output weights.
    pub beta: DenseMatrix,
    pub iterations: usize,
    /// Objective of `β₀, β₁, …` for iterative solvers; the single final value
    /// for closed-form ones.
    pub objective_trace: Vec<f64>,
    /// Number of exactly nonzero entries of `beta`.
    pub support_size: usize,
    /// Step used by iterative solvers, 0 for closed-form ones.
    pub delta_used: f64,
    /// A-priori iteration bound, when it could be computed.
    pub lmax_used: Option<usize>,
    pub kappa_bounds: Option<SpectrumBounds>,
    /// False when the iteration cap was hit before the stopping test passed.
    pub converged: bool,
    pub wall_time: f64,
    pub diagnostics: Vec<String>,
}

/// The six training procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Elm,
    L2,
    L1,
    Half,
    L2L1,
    L2Half,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Elm,
        SolverKind::L2,
        SolverKind::L1,
        SolverKind::Half,
        SolverKind::L2L1,
        SolverKind::L2Half,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SolverKind::Elm => "elm",
            SolverKind::L2 => "l2",
            SolverKind::L1 => "l1",
            SolverKind::Half => "half",
            SolverKind::L2L1 => "l2l1",
            SolverKind::L2Half => "l2half",
        }
    }

    /// Display name in the usual `ℓ2-ℓ0.5-ELM` style.
    pub fn display_name(self) -> &'static str {
        match self {
            SolverKind::Elm => "ELM",
            SolverKind::L2 => "ℓ2-ELM",
            SolverKind::L1 => "ℓ1-ELM",
            SolverKind::Half => "ℓ0.5-ELM",
            SolverKind::L2L1 => "ℓ2-ℓ1-ELM",
            SolverKind::L2Half => "ℓ2-ℓ0.5-ELM",
        }
    }

    pub fn train(self, h: &DenseMatrix, t: &DenseMatrix, cfg: &RegConfig) -> Result<SolverOutput> {
        match self {
            SolverKind::Elm => train_elm(h, t, cfg),
            SolverKind::L2 => train_l2(h, t, cfg),
            SolverKind::L1 => train_l1(h, t, cfg),
            SolverKind::Half => train_half(h, t, cfg),
            SolverKind::L2L1 => train_hybrid_soft(h, t, cfg),
            SolverKind::L2Half => train_hybrid_half(h, t, cfg),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown solver {s:?}")))
    }
}

fn check_shapes(op: &'static str, h: &DenseMatrix, t: &DenseMatrix) -> Result<()> {
    if h.rows() != t.rows() {
        return Err(Error::ShapeMismatch { op, left: h.shape(), right: t.shape() });
    }
    Ok(())
}

fn check_shapes_beta(op: &'static str, h: &DenseMatrix, t: &DenseMatrix, beta: &DenseMatrix) -> Result<()> {
    check_shapes(op, h, t)?;
    if beta.rows() != h.cols() || beta.cols() != t.cols() {
        return Err(Error::ShapeMismatch { op, left: h.shape(), right: beta.shape() });
    }
    Ok(())
}

fn residual_sq(h: &DenseMatrix, t: &DenseMatrix, beta: &DenseMatrix) -> Result<f64> {
    let r = h.matmul(beta)?.sub(t)?;
    Ok(r.as_slice().iter().map(|v| v * v).sum())
}

/// `½‖Hβ − T‖²_F + λ(γ Σ|βᵢⱼ|^{1/2} + ε‖β‖²_F)`.
pub fn objective_hybrid_half(
    h: &DenseMatrix,
    t: &DenseMatrix,
    beta: &DenseMatrix,
    lambda: f64,
    gamma: f64,
    epsilon: f64,
) -> Result<f64> {
    check_shapes_beta("objective_hybrid_half", h, t, beta)?;
    Ok(0.5 * residual_sq(h, t, beta)? + lambda * half_penalty(beta.as_slice(), gamma, epsilon))
}

/// `½‖Hβ − T‖²_F + λ(γ‖β‖₁ + ε‖β‖²_F)`.
pub fn objective_hybrid_soft(
    h: &DenseMatrix,
    t: &DenseMatrix,
    beta: &DenseMatrix,
    lambda: f64,
    gamma: f64,
    epsilon: f64,
) -> Result<f64> {
    check_shapes_beta("objective_hybrid_soft", h, t, beta)?;
    Ok(0.5 * residual_sq(h, t, beta)? + lambda * soft_penalty(beta.as_slice(), gamma, epsilon))
}

/// `½‖Hβ − T‖²_F + μ‖β‖²_F`.
pub fn objective_l2(h: &DenseMatrix, t: &DenseMatrix, beta: &DenseMatrix, mu: f64) -> Result<f64> {
    check_shapes_beta("objective_l2", h, t, beta)?;
    let sq: f64 = beta.as_slice().iter().map(|b| b * b).sum();
    Ok(0.5 * residual_sq(h, t, beta)? + mu * sq)
}

pub(crate) fn half_penalty(beta: &[f64], gamma: f64, epsilon: f64) -> f64 {
    let (mut half, mut sq) = (0.0, 0.0);
    for b in beta {
        half += b.abs().sqrt();
        sq += b * b;
    }
    gamma * half + epsilon * sq
}

pub(crate) fn soft_penalty(beta: &[f64], gamma: f64, epsilon: f64) -> f64 {
    let (mut l1, mut sq) = (0.0, 0.0);
    for b in beta {
        l1 += b.abs();
        sq += b * b;
    }
    gamma * l1 + epsilon * sq
}

/// Below this ratio `κ₀` is replaced by `KAPPA0_FLOOR · κ`.
pub const KAPPA0_FLOOR: f64 = 1e-12;
pub(crate) const SPECTRAL_TOL: f64 = 1e-10;
pub(crate) const SPECTRAL_MAX_ITER: usize = 2_000;

/// Precomputed quantities shared by the iterative solvers.
pub(crate) struct IterativeSetup<'a> {
    pub h: &'a DenseMatrix,
    pub t: &'a DenseMatrix,
    pub gram: DenseMatrix,
    pub htt: DenseMatrix,
    pub bounds: SpectrumBounds,
    pub delta: f64,
    pub diagnostics: Vec<String>,
}

impl<'a> IterativeSetup<'a> {
    pub fn new(h: &'a DenseMatrix, t: &'a DenseMatrix, cfg: &RegConfig) -> Result<Self> {
        check_shapes("iterative solver", h, t)?;
        cfg.validate_iterative()?;
        if h.max_abs() == 0.0 {
            return Err(Error::ZeroHiddenMatrix);
        }
        let gram = crate::numerics::gram(h)?;
        let htt = h.t_matmul(t)?;
        let mut bounds = spectral_bounds(&gram, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
        let mut diagnostics = Vec::new();
        if bounds.kappa0 < KAPPA0_FLOOR * bounds.kappa {
            diagnostics.push(format!(
                "kappa0 estimate {:e} clamped to {:e} (kappa = {:e})",
                bounds.kappa0,
                KAPPA0_FLOOR * bounds.kappa,
                bounds.kappa
            ));
            bounds.kappa0 = KAPPA0_FLOOR * bounds.kappa;
        }
        let delta = match cfg.delta_policy {
            DeltaPolicy::FromSpectrum => 2.0 / (bounds.kappa0 + bounds.kappa),
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::KappaScaled(c) => c / bounds.kappa,
        };
        Ok(Self { h, t, gram, htt, bounds, delta, diagnostics })
    }

    /// `½‖Hβ − T‖²_F`.
    pub fn data_term(&self, beta: &DenseMatrix) -> f64 {
        // shapes are fixed by construction
        0.5 * residual_sq(self.h, self.t, beta).expect("solver shapes agree")
    }
}
