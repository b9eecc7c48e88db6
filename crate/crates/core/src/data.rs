//! Datasets: CSV loading, standardization, train/test splits and a planted
//! sparse regression fixture.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::elm::{one_hot, LabelEncoding};
use crate::numerics::DenseMatrix;
use crate::{Error, Result};

/// Features and class labels of a classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// `n × p` features.
    pub x: DenseMatrix,
    pub labels: Vec<String>,
    pub encoding: LabelEncoding,
}

impl Dataset {
    /// Builds a dataset, discovering classes in first-appearance order.
    pub fn new(name: impl Into<String>, x: DenseMatrix, labels: Vec<String>) -> Result<Self> {
        let encoding = LabelEncoding::from_labels(&labels)?;
        Self::with_encoding(name, x, labels, encoding)
    }

    /// Builds a dataset against a fixed encoding (e.g. the one of the full
    /// dataset, so train and test agree on class indices).
    pub fn with_encoding(
        name: impl Into<String>,
        x: DenseMatrix,
        labels: Vec<String>,
        encoding: LabelEncoding,
    ) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(Error::ShapeMismatch { op: "dataset", left: x.shape(), right: (labels.len(), 1) });
        }
        if !x.is_finite() {
            return Err(Error::InvalidParameter("dataset features must be finite".into()));
        }
        encoding.indices(&labels)?;
        Ok(Self { name: name.into(), x, labels, encoding })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn class_indices(&self) -> Vec<usize> {
        self.encoding.indices(&self.labels).expect("labels validated on construction")
    }

    /// One-hot `n × m` target matrix.
    pub fn targets(&self) -> DenseMatrix {
        one_hot(&self.labels, &self.encoding).expect("labels validated on construction")
    }

    /// Rows `idx`, in the given order, sharing this dataset's encoding.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        if idx.is_empty() {
            return Err(Error::EmptyMatrix { rows: 0, cols: self.p() });
        }
        let p = self.p();
        let mut data = Vec::with_capacity(idx.len() * p);
        for &i in idx {
            data.extend_from_slice(self.x.row(i));
        }
        Ok(Dataset {
            name: self.name.clone(),
            x: DenseMatrix::new(idx.len(), p, data)?,
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            encoding: self.encoding.clone(),
        })
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    /// Zero-based position; negative values count from the end (`-1` is the
    /// last column).
    Index(i64),
    /// Header name; requires a header row.
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Index(-1)
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Delimiter {
    #[default]
    #[serde(rename = ",", alias = "comma")]
    Comma,
    #[serde(rename = ";", alias = "semicolon")]
    Semicolon,
    #[serde(rename = "\t", alias = "tab")]
    Tab,
}

impl Delimiter {
    pub fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Semicolon => b';',
            Delimiter::Tab => b'\t',
        }
    }
}

/// Describes how to read one dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    /// CSV path. Relative paths are resolved against the schema file's
    /// directory by [`DatasetSchema::from_file`].
    pub path: PathBuf,
    #[serde(default)]
    pub label_column: LabelColumn,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub delimiter: Delimiter,
    /// Display name; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl DatasetSchema {
    /// Reads a JSON schema.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut schema: DatasetSchema =
            serde_json::from_str(&text).map_err(|source| Error::Schema { path: path.to_path_buf(), source })?;
        schema.resolve_relative_to(path.parent().unwrap_or(Path::new("")));
        Ok(schema)
    }

    /// Makes a relative `path` relative to `base` instead.
    pub fn resolve_relative_to(&mut self, base: &Path) {
        if self.path.is_relative() {
            self.path = base.join(&self.path);
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        let mut ds = load_csv_with(&self.path, &self.label_column, self.has_header, self.delimiter)?;
        if let Some(name) = &self.name {
            ds.name = name.clone();
        }
        Ok(ds)
    }
}

/// Loads a comma-separated file. See [`load_csv_with`].
pub fn load_csv(path: &Path, label_column: &LabelColumn, has_header: bool) -> Result<Dataset> {
    load_csv_with(path, label_column, has_header, Delimiter::Comma)
}

/// Loads a CSV whose cells are all numeric except the label column.
///
/// Numbers use `.` as decimal point regardless of locale. Errors report
/// 1-based line and column numbers.
pub fn load_csv_with(
    path: &Path,
    label_column: &LabelColumn,
    has_header: bool,
    delimiter: Delimiter,
) -> Result<Dataset> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter.byte())
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;

    let missing = || Error::MissingLabelColumn { path: path.to_path_buf(), column: label_column.to_string() };
    let named = match label_column {
        LabelColumn::Name(name) if has_header => {
            let headers = reader.headers().map_err(csv_err)?;
            Some(headers.iter().position(|h| h == name).ok_or_else(missing)?)
        }
        LabelColumn::Name(_) => return Err(missing()),
        LabelColumn::Index(_) => None,
    };

    let mut width = None;
    let mut label_at = 0;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => {
                label_at = match (named, label_column) {
                    (Some(i), _) => i,
                    (None, LabelColumn::Index(i)) => {
                        let w = record.len() as i64;
                        let j = if *i < 0 { w + i } else { *i };
                        if !(0..w).contains(&j) {
                            return Err(missing());
                        }
                        j as usize
                    }
                    (None, LabelColumn::Name(_)) => unreachable!(),
                };
                if label_at >= record.len() {
                    return Err(missing());
                }
                width = Some(record.len());
            }
            Some(w) if w != record.len() => {
                return Err(Error::RaggedRow { path: path.to_path_buf(), row: line, expected: w, found: record.len() });
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            if col == label_at {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::ParseCell {
                path: path.to_path_buf(),
                row: line,
                col: col + 1,
                cell: cell.to_string(),
            })?;
            data.push(v);
        }
    }
    let w = width.ok_or(Error::EmptyMatrix { rows: 0, cols: 0 })?;
    let x = DenseMatrix::new(labels.len(), w - 1, data)?;
    let encoding = LabelEncoding::from_labels(&labels)?;
    let name = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::with_encoding(name, x, labels, encoding)
}

/// Per-feature affine map `x ↦ (x − mean)/scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Transform {
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::ShapeMismatch { op: "transform", left: (1, self.mean.len()), right: x.shape() });
        }
        let p = x.cols();
        Ok(DenseMatrix::from_fn(x.rows(), p, |i, j| (x.get(i, j) - self.mean[j]) / self.scale[j]))
    }

    pub fn apply_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        Ok(Dataset { x: self.apply(&ds.x)?, ..ds.clone() })
    }
}

/// Features with a standard deviation below this are only centered.
pub const MIN_STD: f64 = 1e-12;

/// Standardizes each feature to mean 0 and (population) standard deviation 1.
///
/// The returned [`Transform`] depends only on `train`; apply it verbatim to
/// test data.
pub fn standardize(train: &Dataset) -> Result<(Dataset, Transform)> {
    let (n, p) = train.x.shape();
    let nf = n as f64;
    let mut mean = vec![0.0; p];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(train.x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut var = vec![0.0; p];
    for i in 0..n {
        for ((s, v), m) in var.iter_mut().zip(train.x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .iter()
        .map(|s| {
            let sd = (s / nf).sqrt();
            if sd < MIN_STD {
                1.0
            } else {
                sd
            }
        })
        .collect();
    let tr = Transform { mean, scale };
    Ok((tr.apply_dataset(train)?, tr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Train and test row indices, each sorted ascending.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let take = |count: usize| ((spec.train_fraction * count as f64).round() as usize).clamp(1, count - 1);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    if spec.stratified {
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, c) in ds.class_indices().into_iter().enumerate() {
            groups.entry(c).or_default().push(i);
        }
        for c in 0..ds.encoding.m() {
            let mut idx = groups.remove(&c).unwrap_or_default();
            if idx.len() < 2 {
                return Err(Error::ClassTooSmall { class: ds.encoding.class_names()[c].clone(), count: idx.len() });
            }
            idx.shuffle(&mut rng);
            let k = take(idx.len());
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
    } else {
        let n = ds.n();
        if n < 2 {
            return Err(Error::InvalidParameter(format!("cannot split {n} sample(s)")));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let k = take(n);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Random train/test partition, deterministic in `spec.seed`.
///
/// Stratified splits round `train_fraction · count` per class and keep at
/// least one sample of every class on each side.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, spec)?;
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Planted sparse regression problem `T = Hβ* + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSparse {
    /// `n × p`, i.i.d. `N(0, 1/n)` entries so `HᵀH ≈ I` for `n ≫ p`.
    pub h: DenseMatrix,
    /// `n × 1`.
    pub t: DenseMatrix,
    /// `p × 1` with exactly `k` nonzeros of magnitude in `[1, 2]`.
    pub beta: DenseMatrix,
    /// Sorted positions of the nonzeros of `beta`.
    pub support: Vec<usize>,
}

/// Draws a [`SyntheticSparse`] problem; `noise` is the standard deviation
/// of the additive Gaussian noise.
pub fn synthetic_sparse(n: usize, p: usize, k: usize, noise: f64, seed: u64) -> Result<SyntheticSparse> {
    if n == 0 || p == 0 || k > p {
        return Err(Error::InvalidParameter(format!("need n, p > 0 and k <= p, got n={n}, p={p}, k={k}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be nonnegative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (n as f64).sqrt();
    let h = DenseMatrix::from_fn(n, p, |_, _| s * rng.sample::<f64, _>(StandardNormal));
    let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, p, k).into_vec();
    support.sort_unstable();
    let mut b = vec![0.0; p];
    for &j in &support {
        let mag: f64 = rng.gen_range(1.0..=2.0);
        b[j] = if rng.gen::<bool>() { mag } else { -mag };
    }
    let beta = DenseMatrix::column(b)?;
    let mut t = h.matmul(&beta)?;
    for v in t.data_mut() {
        *v += noise * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(SyntheticSparse { h, t, beta, support })
}
