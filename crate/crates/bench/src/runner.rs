use std::time::Instant;

use hybrid_elm::data::{split, standardize, Dataset, SplitSpec};
use hybrid_elm::elm::{accuracy, hidden_matrix, init_hidden, predict_from_hidden, remaining_nodes, REMAINING_NODE_TOL};
use hybrid_elm::numerics::splitmix64;
use hybrid_elm::solvers::{RegConfig, SolverKind};
use hybrid_elm::DenseMatrix;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::report::{summarize, DatasetSummary, ExperimentReport, TrialFailure, TrialResult};
use crate::BenchError;

/// Seed of the hidden layer of cell `(nodes, trial)`.
pub fn hidden_seed(base_seed: u64, trial: usize, nodes: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ trial as u64) ^ nodes as u64)
}

/// Loads the configured dataset and runs the experiment on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    cfg.validate()?;
    let dataset = cfg.schema()?.load().map_err(BenchError::Dataset)?;
    run_on_dataset(cfg, &dataset)
}

struct Cell {
    results: Vec<TrialResult>,
    failures: Vec<TrialFailure>,
}

/// Runs the experiment on an already loaded dataset.
pub fn run_on_dataset(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<ExperimentReport, BenchError> {
    cfg.validate()?;
    let splits = (0..cfg.trials)
        .map(|t| {
            let spec = SplitSpec {
                train_fraction: cfg.train_fraction,
                stratified: cfg.stratified,
                seed: cfg.base_seed.wrapping_add(t as u64),
            };
            let (train, test) = split(dataset, &spec)?;
            if cfg.standardize {
                let (train, tr) = standardize(&train)?;
                let test = tr.apply_dataset(&test)?;
                Ok((spec.seed, train, test))
            } else {
                Ok((spec.seed, train, test))
            }
        })
        .collect::<hybrid_elm::Result<Vec<_>>>()
        .map_err(BenchError::Dataset)?;

    let jobs: Vec<(usize, usize)> =
        cfg.node_counts.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let run = |&(nodes, t): &(usize, usize)| {
        let (split_seed, train, test) = &splits[t];
        run_cell(cfg, nodes, t, *split_seed, train, test)
    };
    #[cfg(feature = "parallel")]
    let cells: Vec<Cell> = jobs.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let cells: Vec<Cell> = jobs.iter().map(run).collect();

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for c in cells {
        trials.extend(c.results);
        failures.extend(c.failures);
    }
    let order = |solver: &str| cfg.solvers.iter().position(|s| s.label() == solver);
    let key = |s: &str, n: usize, t: usize| (order(s), cfg.node_counts.iter().position(|&x| x == n), t);
    trials.sort_by_key(|r| key(&r.solver, r.nodes, r.trial));
    failures.sort_by_key(|f| key(&f.solver, f.nodes, f.trial));

    let solvers: Vec<(String, SolverKind)> = cfg.solvers.iter().map(|s| (s.label().to_string(), s.kind)).collect();
    let summaries = summarize(&solvers, &cfg.node_counts, &trials, &failures);

    let mut notes = vec![
        "all solvers in a (N, trial) cell share the same hidden layer".to_string(),
        "times cover the solver call only, not hidden-matrix construction".to_string(),
        "± is the sample standard deviation over trials".to_string(),
        format!(
            "features {} with training-partition statistics",
            if cfg.standardize { "standardized" } else { "not standardized" }
        ),
    ];
    notes.extend(cfg.notes.iter().cloned());

    Ok(ExperimentReport {
        title: cfg.name.clone().unwrap_or_else(|| dataset.name.clone()),
        library_version: hybrid_elm::VERSION.to_string(),
        dataset: DatasetSummary {
            name: dataset.name.clone(),
            samples: dataset.n(),
            features: dataset.p(),
            classes: dataset.encoding.class_names().to_vec(),
        },
        config: cfg.clone(),
        split_seeds: splits.iter().map(|s| s.0).collect(),
        notes,
        summaries,
        trials,
        failures,
    })
}

fn run_cell(cfg: &ExperimentConfig, nodes: usize, trial: usize, split_seed: u64, train: &Dataset, test: &Dataset) -> Cell {
    let seed = hidden_seed(cfg.base_seed, trial, nodes);
    let fail_all = |error: String| Cell {
        results: vec![],
        failures: cfg
            .solvers
            .iter()
            .map(|s| TrialFailure { solver: s.label().to_string(), nodes, trial, error: error.clone() })
            .collect(),
    };
    let layer = init_hidden(train.p(), nodes, cfg.weight_range, seed);
    let (h_train, h_test) = match (hidden_matrix(&layer, &train.x), hidden_matrix(&layer, &test.x)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail_all(e.to_string()),
    };
    let t = train.targets();
    let truth = test.class_indices();

    let mut cell = Cell { results: Vec::new(), failures: Vec::new() };
    for spec in &cfg.solvers {
        let reg = spec.reg();
        match fit(spec.kind, &h_train, &t, &reg, &h_test, &truth) {
            Ok((out, acc, wall_time)) => cell.results.push(TrialResult {
                solver: spec.label().to_string(),
                kind: spec.kind,
                nodes,
                trial,
                split_seed,
                hidden_seed: seed,
                accuracy: acc,
                remaining_nodes: remaining_nodes(&out.beta, REMAINING_NODE_TOL),
                iterations: out.iterations,
                converged: out.converged,
                wall_time,
            }),
            Err(e) => cell.failures.push(TrialFailure {
                solver: spec.label().to_string(),
                nodes,
                trial,
                error: e.to_string(),
            }),
        }
    }
    cell
}

fn fit(
    kind: SolverKind,
    h: &DenseMatrix,
    t: &DenseMatrix,
    reg: &RegConfig,
    h_test: &DenseMatrix,
    truth: &[usize],
) -> hybrid_elm::Result<(hybrid_elm::solvers::SolverOutput, f64, f64)> {
    let start = Instant::now();
    let out = kind.train(h, t, reg)?;
    let wall_time = start.elapsed().as_secs_f64();
    let acc = accuracy(&predict_from_hidden(h_test, &out.beta)?, truth)?;
    Ok((out, acc, wall_time))
}
