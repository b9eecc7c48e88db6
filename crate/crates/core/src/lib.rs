//! Regularized extreme learning machines.
//!
//! An extreme learning machine (ELM) is a single-hidden-layer network whose
//! input weights and biases are drawn at random and then frozen. Training only
//! fits the output weights `beta` against the hidden output matrix `H`.
//!
//! This crate provides six ways of fitting `beta`:
//!
//! | id       | objective                                               | method                         |
//! |----------|---------------------------------------------------------|--------------------------------|
//! | `elm`    | `½‖Hβ − T‖²`                                            | regularized normal equations   |
//! | `l2`     | `½‖Hβ − T‖² + μ‖β‖²`                                    | Cholesky solve                 |
//! | `l1`     | `½‖Hβ − T‖² + λ‖β‖₁`                                    | forward-backward (soft)        |
//! | `half`   | `½‖Hβ − T‖² + λ‖β‖_{1/2}`                               | fixed point (half-thresholding)|
//! | `l2l1`   | `½‖Hβ − T‖² + λ(γ‖β‖₁ + ε‖β‖²)`                         | forward-backward (soft)        |
//! | `l2half` | `½‖Hβ − T‖² + λ(γ‖β‖_{1/2} + ε‖β‖²)`                    | fixed point (half-thresholding)|
//!
//! where `‖β‖_{1/2} = Σ |βᵢ|^{1/2}`. The `l2half` solver iterates the map
//! `Γβ = prox(β − δ(HᵀHβ − HᵀT))` with step `δ = 2/(κ₀ + κ)` built from
//! spectral bounds of `HᵀH`; see [`solvers::FixedPointMap`].
//!
//! ```
//! use hybrid_elm::{elm, solvers, DenseMatrix};
//!
//! let x = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [0.9, 0.2], [0.1, 0.8]]).unwrap();
//! let labels: Vec<String> = ["a", "b", "b", "a"].iter().map(|s| s.to_string()).collect();
//! let enc = elm::LabelEncoding::from_labels(&labels).unwrap();
//! let t = elm::one_hot(&labels, &enc).unwrap();
//!
//! let layer = elm::init_hidden(2, 8, 1.0, 7);
//! let h = elm::hidden_matrix(&layer, &x).unwrap();
//! let cfg = solvers::RegConfig { lambda: 1e-3, gamma: 0.1, epsilon: 0.5, ..Default::default() };
//! let out = solvers::train_hybrid_half(&h, &t, &cfg).unwrap();
//! let pred = elm::predict(&layer, &out.beta, &x).unwrap();
//! assert_eq!(pred.len(), 4);
//! ```

pub mod data;
pub mod elm;
mod error;
pub mod numerics;
pub mod par;
pub mod solvers;
pub mod thresholding;

pub use error::{Error, Result};
pub use numerics::{DenseMatrix, SpectrumBounds};
pub use par::Execution;

/// Crate version, recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
