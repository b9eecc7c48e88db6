//! Forward-backward splitting with soft thresholding (ℓ1 and ℓ2-ℓ1 models).

use std::time::Instant;

use super::{soft_penalty, IterativeSetup, RegConfig, SolverOutput};
use crate::numerics::DenseMatrix;
use crate::thresholding::prox_hybrid_soft_in_place;
use crate::{Error, Result};

/// Fits `½‖Hβ − T‖² + λ(γ‖β‖₁ + ε‖β‖²)` from `β₀ = 0`.
///
/// Iterates `β ← prox(β − δ(HᵀHβ − HᵀT))` until
/// `‖β_l − β_{l−1}‖_F ≤ ξ(1 + ‖β_l‖_F)` or `hard_iter_cap`.
pub fn train_hybrid_soft(h: &DenseMatrix, t: &DenseMatrix, cfg: &RegConfig) -> Result<SolverOutput> {
    let start = Instant::now();
    let mut setup = IterativeSetup::new(h, t, cfg)?;
    let mut diagnostics = std::mem::take(&mut setup.diagnostics);
    let delta = setup.delta;
    let objective = |beta: &DenseMatrix| {
        setup.data_term(beta) + cfg.lambda * soft_penalty(beta.as_slice(), cfg.gamma, cfg.epsilon)
    };

    let mut beta = DenseMatrix::zeros(h.cols(), t.cols());
    let mut trace = vec![objective(&beta)];
    let mut l = 0;
    let converged = loop {
        let mut next = setup.gram.matmul(&beta)?;
        for ((z, &b), &c) in next.data_mut().iter_mut().zip(beta.as_slice()).zip(setup.htt.as_slice()) {
            *z = b + delta * (c - *z);
        }
        prox_hybrid_soft_in_place(cfg.lambda * delta, cfg.gamma, cfg.epsilon, next.data_mut());
        let step = next.sub(&beta)?.frobenius_norm();
        beta = next;
        l += 1;
        let f = objective(&beta);
        if !f.is_finite() {
            return Err(Error::Diverged { delta, objective: f });
        }
        trace.push(f);
        if step <= cfg.xi * (1.0 + beta.frobenius_norm()) {
            break true;
        }
        if l >= cfg.hard_iter_cap {
            diagnostics.push(format!("stopped at hard_iter_cap {} with step {step:e}", cfg.hard_iter_cap));
            break false;
        }
    };

    Ok(SolverOutput {
        support_size: beta.count_nonzero(),
        beta,
        iterations: l,
        objective_trace: trace,
        delta_used: delta,
        lmax_used: None,
        kappa_bounds: Some(setup.bounds),
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// Fits the lasso: [`train_hybrid_soft`] with `γ = 1`, `ε = 0`.
pub fn train_l1(h: &DenseMatrix, t: &DenseMatrix, cfg: &RegConfig) -> Result<SolverOutput> {
    let cfg = RegConfig { gamma: 1.0, epsilon: 0.0, ..cfg.clone() };
    train_hybrid_soft(h, t, &cfg)
}
