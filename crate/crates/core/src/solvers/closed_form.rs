use std::time::Instant;

use super::{check_shapes, objective_l2, RegConfig, SolverOutput};
use crate::numerics::{gram, min_norm_lsq, solve_spd, DenseMatrix};
use crate::{Error, Result};

/// Relative ridge used by [`train_elm`] to keep the normal equations
/// positive definite.
pub const DEFAULT_RIDGE_FLOOR: f64 = 1e-10;

fn closed_form_output(
    h: &DenseMatrix,
    t: &DenseMatrix,
    beta: DenseMatrix,
    mu: f64,
    start: Instant,
    diagnostics: Vec<String>,
) -> Result<SolverOutput> {
    let f = objective_l2(h, t, &beta, mu)?;
    Ok(SolverOutput {
        support_size: beta.count_nonzero(),
        beta,
        iterations: 0,
        objective_trace: vec![f],
        delta_used: 0.0,
        lmax_used: None,
        kappa_bounds: None,
        converged: true,
        wall_time: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// Plain ELM: least-squares output weights `β = H†T`.
///
/// Computed from the normal equations with a ridge of
/// `DEFAULT_RIDGE_FLOOR · trace(HᵀH)/N`. `cfg` is not used.
pub fn train_elm(h: &DenseMatrix, t: &DenseMatrix, _cfg: &RegConfig) -> Result<SolverOutput> {
    let start = Instant::now();
    check_shapes("train_elm", h, t)?;
    let beta = min_norm_lsq(h, t, DEFAULT_RIDGE_FLOOR)?;
    closed_form_output(h, t, beta, 0.0, start, Vec::new())
}

/// Ridge ELM: minimizes `½‖Hβ − T‖² + μ‖β‖²`, i.e. `(HᵀH + 2μI)β = HᵀT`.
pub fn train_l2(h: &DenseMatrix, t: &DenseMatrix, cfg: &RegConfig) -> Result<SolverOutput> {
    let start = Instant::now();
    check_shapes("train_l2", h, t)?;
    let mu = cfg.mu;
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu}")));
    }
    let g = gram(h)?;
    let htt = h.t_matmul(t)?;
    let mut diagnostics = Vec::new();
    let beta = match solve_spd(&g, &htt, 2.0 * mu) {
        Ok(b) => b,
        Err(Error::NotPositiveDefinite { .. }) => {
            diagnostics.push("normal equations singular, fell back to ridge-floored least squares".to_string());
            let floor = (2.0 * mu).max(DEFAULT_RIDGE_FLOOR * g.trace() / g.cols() as f64);
            solve_spd(&g, &htt, floor)?
        }
        Err(e) => return Err(e),
    };
    closed_form_output(h, t, beta, mu, start, diagnostics)
}
