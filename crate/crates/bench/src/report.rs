use std::fmt::Write as _;

use hybrid_elm::solvers::SolverKind;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::BenchError;

/// Outcome of one solver on one `(N, trial)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub solver: String,
    pub kind: SolverKind,
    pub nodes: usize,
    pub trial: usize,
    pub split_seed: u64,
    pub hidden_seed: u64,
    /// Test accuracy in `[0, 1]`.
    pub accuracy: f64,
    pub remaining_nodes: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds spent in the solver call.
    pub wall_time: f64,
}

/// A solver error on one cell. The run continues without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub solver: String,
    pub nodes: usize,
    pub trial: usize,
    pub error: String,
}

/// Aggregate over the successful trials of one `(solver, N)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub solver: String,
    pub kind: SolverKind,
    pub nodes: usize,
    pub trials: usize,
    pub failures: usize,
    pub unconverged: usize,
    /// `None` when every trial of the cell failed; likewise below.
    pub mean_accuracy: Option<f64>,
    /// Sample standard deviation (`n − 1` denominator); 0 for a single trial.
    pub std_accuracy: f64,
    pub mean_remaining_nodes: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mean_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub samples: usize,
    pub features: usize,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub title: String,
    pub library_version: String,
    pub dataset: DatasetSummary,
    pub config: ExperimentConfig,
    /// Split seed of each trial.
    pub split_seeds: Vec<u64>,
    pub notes: Vec<String>,
    pub summaries: Vec<CellSummary>,
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation; 0 with fewer than two values.
    pub fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.n - 1) as f64).sqrt()
        }
    }
}

/// Summaries in `(solver order, node order)` from raw trial results.
pub fn summarize(
    solvers: &[(String, SolverKind)],
    node_counts: &[usize],
    trials: &[TrialResult],
    failures: &[TrialFailure],
) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for (label, kind) in solvers {
        for &nodes in node_counts {
            let cell: Vec<&TrialResult> = trials.iter().filter(|r| &r.solver == label && r.nodes == nodes).collect();
            let mut acc = Welford::default();
            let (mut rem, mut it, mut time) = (Welford::default(), Welford::default(), Welford::default());
            for r in &cell {
                acc.push(r.accuracy);
                rem.push(r.remaining_nodes as f64);
                it.push(r.iterations as f64);
                time.push(r.wall_time);
            }
            out.push(CellSummary {
                solver: label.clone(),
                kind: *kind,
                nodes,
                trials: cell.len(),
                failures: failures.iter().filter(|f| &f.solver == label && f.nodes == nodes).count(),
                unconverged: cell.iter().filter(|r| !r.converged).count(),
                mean_accuracy: mean(&acc),
                std_accuracy: acc.std(),
                mean_remaining_nodes: mean(&rem),
                mean_iterations: mean(&it),
                mean_time: mean(&time),
            });
        }
    }
    out
}

fn mean(w: &Welford) -> Option<f64> {
    (w.count() > 0).then(|| w.mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Markdown => "md",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn display_name(s: &CellSummary) -> String {
    if s.solver == s.kind.id() {
        s.kind.display_name().to_string()
    } else {
        format!("{} ({})", s.kind.display_name(), s.solver)
    }
}

/// Table in the usual `Methods | Times(s) | Remaining Nodes | Accuracy` layout.
pub fn render_markdown(report: &ExperimentReport) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# {}\n", report.title);
    let d = &report.dataset;
    let _ = writeln!(
        md,
        "{} samples, {} features, {} classes; {} trial(s), train fraction {}.\n",
        d.samples,
        d.features,
        d.classes.len(),
        report.config.trials,
        report.config.train_fraction
    );
    md.push_str("| Methods | N | Times(s) | Remaining Nodes | Accuracy(% ± %) |\n");
    md.push_str("|---|---:|---:|---:|---:|\n");
    for s in &report.summaries {
        let (Some(time), Some(rem), Some(acc)) = (s.mean_time, s.mean_remaining_nodes, s.mean_accuracy) else {
            let _ = writeln!(md, "| {} | {} | failed | failed | failed |", display_name(s), s.nodes);
            continue;
        };
        let _ = writeln!(
            md,
            "| {} | {} | {:.4} | {:.2} | {:.2} ± {:.2} |",
            display_name(s),
            s.nodes,
            time,
            rem,
            100.0 * acc,
            100.0 * s.std_accuracy
        );
    }
    let flagged: Vec<&CellSummary> = report.summaries.iter().filter(|s| s.failures + s.unconverged > 0).collect();
    if !flagged.is_empty() {
        md.push('\n');
        for s in flagged {
            let _ = writeln!(
                md,
                "- {} at N = {}: {} failed trial(s), {} stopped at the iteration cap",
                display_name(s),
                s.nodes,
                s.failures,
                s.unconverged
            );
        }
    }
    if !report.notes.is_empty() {
        md.push('\n');
        for n in &report.notes {
            let _ = writeln!(md, "- {n}");
        }
    }
    md
}

/// Raw trial results, one row per `(solver, N, trial)`.
pub fn render_csv(report: &ExperimentReport) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.trials {
        w.serialize(r).map_err(|e| BenchError::Output(e.to_string()))?;
    }
    if report.trials.is_empty() {
        w.write_record([
            "solver",
            "kind",
            "nodes",
            "trial",
            "split_seed",
            "hidden_seed",
            "accuracy",
            "remaining_nodes",
            "iterations",
            "converged",
            "wall_time",
        ])
        .map_err(|e| BenchError::Output(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Output(e.to_string()))
}

pub fn render_json(report: &ExperimentReport) -> Result<String, BenchError> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| BenchError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn render(report: &ExperimentReport, format: Format) -> Result<String, BenchError> {
    match format {
        Format::Markdown => Ok(render_markdown(report)),
        Format::Csv => render_csv(report),
        Format::Json => render_json(report),
    }
}

/// Long-format accuracy-versus-nodes table:
/// `solver,nodes,mean_accuracy,std_accuracy`.
pub fn emit_curves(report: &ExperimentReport) -> Result<String, BenchError> {
    let mut nodes: Vec<usize> = report.summaries.iter().map(|s| s.nodes).collect();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.len() < 2 {
        return Err(BenchError::Config(format!(
            "curves need at least two node counts, the report has {}",
            nodes.len()
        )));
    }
    let mut out = String::from("solver,nodes,mean_accuracy,std_accuracy\n");
    for s in &report.summaries {
        let mean = s.mean_accuracy.map_or_else(String::new, |m| m.to_string());
        let _ = writeln!(out, "{},{},{},{}", csv_field(&s.solver), s.nodes, mean, s.std_accuracy);
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
