use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_elm_bench::report::{emit_curves, render, render_markdown, Format};
use hybrid_elm_bench::{run_experiment, write_atomic, BenchError, ExperimentConfig, ExperimentReport};

#[derive(Parser)]
#[command(name = "bench", version, about = "Repeated-trial benchmarks of regularized ELM solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory [default: the config's out_dir, else ./results].
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Format of the primary output. report.json is always written.
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
        /// Worker threads for trial-level parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print accuracy-versus-nodes data of a JSON report as CSV.
    Curves {
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out_dir, format, threads } => run(&config, out_dir, format, threads),
        Command::Curves { report } => curves(&report).map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(config: &Path, out_dir: Option<PathBuf>, format: Format, threads: Option<usize>) -> Result<u8, BenchError> {
    if let Some(k) = threads {
        if k == 0 {
            return Err(BenchError::Config("--threads must be at least 1".into()));
        }
        set_threads(k)?;
    }
    let cfg = ExperimentConfig::from_file(config)?;
    let dir = out_dir.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let report = run_experiment(&cfg)?;

    let json = dir.join("report.json");
    write_atomic(&json, &render(&report, Format::Json)?)?;
    eprintln!("wrote {}", json.display());
    let primary = match format {
        Format::Json => None,
        Format::Csv => Some(dir.join("trials.csv")),
        Format::Markdown => Some(dir.join("report.md")),
    };
    if let Some(path) = primary {
        write_atomic(&path, &render(&report, format)?)?;
        eprintln!("wrote {}", path.display());
    }
    print!("{}", render_markdown(&report));

    if report.failures.is_empty() {
        Ok(0)
    } else {
        eprintln!("bench: {} solver run(s) failed; see the report", report.failures.len());
        Ok(4)
    }
}

#[cfg(feature = "parallel")]
fn set_threads(k: usize) -> Result<(), BenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| BenchError::Config(format!("--threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_k: usize) -> Result<(), BenchError> {
    eprintln!("bench: built without the `parallel` feature, --threads is ignored");
    Ok(())
}

fn curves(path: &Path) -> Result<(), BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    let report: ExperimentReport =
        serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    print!("{}", emit_curves(&report)?);
    Ok(())
}
