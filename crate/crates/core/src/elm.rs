//! Random hidden layer, target encoding, decoding and evaluation metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{dot, DenseMatrix};
use crate::par::{for_each_row, Execution};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    /// `1 / (1 + e^{−x})`
    #[default]
    Sigmoid,
}

impl ActivationKind {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

/// Input weights and biases of an ELM. Drawn once and never trained.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    input_dim: usize,
    node_count: usize,
    /// `node_count × input_dim`, row `i` is the weight vector of node `i`.
    weights: DenseMatrix,
    biases: Vec<f64>,
    activation: ActivationKind,
    weight_range: f64,
    seed: u64,
}

impl HiddenLayer {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn weight_range(&self) -> f64 {
        self.weight_range
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Builds a layer from explicit parameters (sigmoid activation).
    pub fn from_parts(weights: DenseMatrix, biases: Vec<f64>) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::ShapeMismatch {
                op: "hidden layer",
                left: weights.shape(),
                right: (biases.len(), 1),
            });
        }
        let range = weights.max_abs().max(biases.iter().fold(0.0, |m: f64, b| m.max(b.abs())));
        Ok(Self {
            input_dim: weights.cols(),
            node_count: weights.rows(),
            weights,
            biases,
            activation: ActivationKind::Sigmoid,
            weight_range: range,
            seed: 0,
        })
    }
}

/// Draws a hidden layer with weights and biases i.i.d. uniform on `[−c, c]`.
///
/// The stream comes from ChaCha8 seeded with `seed`: weights first, row by
/// row, then biases.
///
/// # Panics
/// If `p` or `n_nodes` is zero or `c` is not positive and finite.
pub fn init_hidden(p: usize, n_nodes: usize, c: f64, seed: u64) -> HiddenLayer {
    assert!(p >= 1 && n_nodes >= 1, "hidden layer needs p >= 1 and N >= 1");
    assert!(c > 0.0 && c.is_finite(), "weight range must be positive, got {c}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = DenseMatrix::from_fn(n_nodes, p, |_, _| rng.gen_range(-c..=c));
    let biases = (0..n_nodes).map(|_| rng.gen_range(-c..=c)).collect();
    HiddenLayer {
        input_dim: p,
        node_count: n_nodes,
        weights,
        biases,
        activation: ActivationKind::Sigmoid,
        weight_range: c,
        seed,
    }
}

/// `H[j, i] = g(⟨ωᵢ, xⱼ⟩ + bᵢ)` for samples `xⱼ` (rows of `x`).
pub fn hidden_matrix(layer: &HiddenLayer, x: &DenseMatrix) -> Result<DenseMatrix> {
    hidden_matrix_with(layer, x, Execution::default())
}

pub fn hidden_matrix_with(layer: &HiddenLayer, x: &DenseMatrix, exec: Execution) -> Result<DenseMatrix> {
    if x.cols() != layer.input_dim {
        return Err(Error::ShapeMismatch {
            op: "hidden_matrix",
            left: x.shape(),
            right: layer.weights.shape(),
        });
    }
    let n = x.rows();
    let nodes = layer.node_count;
    let mut out = vec![0.0; n * nodes];
    for_each_row(exec, &mut out, nodes, |j, row| {
        let xj = x.row(j);
        for (i, h) in row.iter_mut().enumerate() {
            *h = layer.activation.apply(dot(layer.weights.row(i), xj) + layer.biases[i]);
        }
    });
    DenseMatrix::new(n, nodes, out)
}

/// Ordered, duplicate-free class names. Index `k` is column `k` of a one-hot
/// target matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEncoding {
    class_names: Vec<String>,
}

impl LabelEncoding {
    pub fn new(class_names: Vec<String>) -> Result<Self> {
        for (i, c) in class_names.iter().enumerate() {
            if class_names[..i].contains(c) {
                return Err(Error::InvalidParameter(format!("duplicate class name {c:?}")));
            }
        }
        if class_names.len() < 2 {
            return Err(Error::TooFewClasses(class_names.len()));
        }
        Ok(Self { class_names })
    }

    /// Classes in order of first appearance.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        for l in labels {
            let l = l.as_ref();
            if !names.iter().any(|n| n == l) {
                names.push(l.to_string());
            }
        }
        Self::new(names)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn m(&self) -> usize {
        self.class_names.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn indices<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }
}

/// `n × m` indicator matrix of `labels`.
pub fn one_hot<S: AsRef<str>>(labels: &[S], enc: &LabelEncoding) -> Result<DenseMatrix> {
    let idx = enc.indices(labels)?;
    if idx.is_empty() {
        return Err(Error::EmptyMatrix { rows: 0, cols: enc.m() });
    }
    let m = enc.m();
    let mut data = vec![0.0; idx.len() * m];
    for (j, &k) in idx.iter().enumerate() {
        data[j * m + k] = 1.0;
    }
    DenseMatrix::new(idx.len(), m, data)
}

/// Row-wise argmax of `H·β`; ties go to the lowest index.
pub fn predict(layer: &HiddenLayer, beta: &DenseMatrix, x: &DenseMatrix) -> Result<Vec<usize>> {
    let h = hidden_matrix(layer, x)?;
    predict_from_hidden(&h, beta)
}

pub fn predict_from_hidden(h: &DenseMatrix, beta: &DenseMatrix) -> Result<Vec<usize>> {
    let scores = h.matmul(beta)?;
    Ok(argmax_rows(&scores))
}

pub(crate) fn argmax_rows(scores: &DenseMatrix) -> Vec<usize> {
    (0..scores.rows())
        .map(|j| {
            let row = scores.row(j);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Fraction of positions where `pred` and `truth` agree.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            op: "accuracy",
            left: (pred.len(), 1),
            right: (truth.len(), 1),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidParameter("accuracy of an empty prediction list".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Hidden nodes that still feed the output: rows of `beta` whose largest
/// absolute entry exceeds `tol`.
pub fn remaining_nodes(beta: &DenseMatrix, tol: f64) -> usize {
    (0..beta.rows())
        .filter(|&i| beta.row(i).iter().any(|v| v.abs() > tol))
        .count()
}

/// Default `tol` for [`remaining_nodes`].
pub const REMAINING_NODE_TOL: f64 = 1e-8;
