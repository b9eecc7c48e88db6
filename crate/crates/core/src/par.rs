//! Row-parallel execution with a sequential fallback.
//!
//! Every kernel in this crate that fans out over rows computes each output
//! row with the same sequential inner loop, so `Sequential` and `Parallel`
//! produce bit-identical results. Only the scheduling differs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How row-wise kernels are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over rows. Without the `parallel` feature this
    /// behaves exactly like `Sequential`.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

// Small problems are not worth the rayon dispatch.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_ROWS: usize = 16;

/// Calls `f(row_index, row)` for each `row_len`-sized chunk of `data`.
pub(crate) fn for_each_row<F>(exec: Execution, data: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    debug_assert!(row_len > 0 && data.len() % row_len == 0);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && data.len() / row_len >= MIN_PARALLEL_ROWS {
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = exec;
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}
