use std::fs;
use std::path::{Path, PathBuf};

use hybrid_elm::data::DatasetSchema;
use hybrid_elm::solvers::{RegConfig, SolverKind};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Where the dataset comes from: an inline schema or the path of a schema
/// file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetRef {
    Inline(DatasetSchema),
    File(PathBuf),
}

/// One entry of the solver list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: SolverKind,
    /// Row label in reports; defaults to the solver id. Must be unique.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Required for every solver except `elm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reg: Option<RegConfig>,
}

impl SolverSpec {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.id())
    }

    pub fn reg(&self) -> RegConfig {
        self.reg.clone().unwrap_or_default()
    }
}

fn default_trials() -> usize {
    30
}

fn default_train_fraction() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_weight_range() -> f64 {
    1.0
}

/// A repeated-trial experiment on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Report title; defaults to the dataset name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dataset: DatasetRef,
    pub solvers: Vec<SolverSpec>,
    pub node_counts: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub stratified: bool,
    #[serde(default)]
    pub base_seed: u64,
    /// Standardize features with training-partition statistics.
    #[serde(default = "default_true")]
    pub standardize: bool,
    /// Input weights and biases are drawn from `U[-c, c]`.
    #[serde(default = "default_weight_range")]
    pub weight_range: f64,
    /// Output directory; `--out-dir` takes precedence. Relative paths are
    /// resolved against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Free-form remarks copied into the report.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ExperimentConfig {
    /// Reads and validates a config, resolving relative paths against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        match &mut cfg.dataset {
            DatasetRef::Inline(schema) => schema.resolve_relative_to(base),
            DatasetRef::File(p) if p.is_relative() => *p = base.join(&*p),
            DatasetRef::File(_) => {}
        }
        if let Some(dir) = &mut cfg.out_dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.node_counts.is_empty() || self.node_counts.contains(&0) {
            return bad("node_counts must be a nonempty list of positive integers".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if !(self.weight_range > 0.0 && self.weight_range.is_finite()) {
            return bad(format!("weight_range must be positive, got {}", self.weight_range));
        }
        let mut labels = Vec::new();
        for s in &self.solvers {
            if labels.contains(&s.label()) {
                return bad(format!("duplicate solver label {:?}", s.label()));
            }
            labels.push(s.label());
            match (&s.reg, s.kind) {
                (None, SolverKind::Elm) => {}
                (None, kind) => return bad(format!("solver {:?} ({kind}) needs a \"reg\" block", s.label())),
                (Some(reg), SolverKind::Elm | SolverKind::L2) => {
                    if !(reg.mu >= 0.0 && reg.mu.is_finite()) {
                        return bad(format!("solver {:?}: mu must be nonnegative", s.label()));
                    }
                }
                (Some(reg), _) => {
                    reg.validate_iterative().map_err(|e| BenchError::Config(format!("solver {:?}: {e}", s.label())))?
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<DatasetSchema, BenchError> {
        match &self.dataset {
            DatasetRef::Inline(s) => Ok(s.clone()),
            DatasetRef::File(p) => DatasetSchema::from_file(p).map_err(BenchError::Dataset),
        }
    }
}
