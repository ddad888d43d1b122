use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swarmloc_harness::oracle::planner_bruteforce;
use swarmloc_harness::{parse_config, run_experiment, Experiment, HarnessError};

/// Environment variable overriding the output directory of `run`.
const OUT_DIR_ENV: &str = "SWARMLOC_OUT_DIR";

#[derive(Parser)]
#[command(name = "swarmloc", version, about = "Cooperative MAV localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write traces, summaries and a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the document and $SWARMLOC_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds replacing the document's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and validate an experiment document without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-check the pruned planner against exhaustive search.
    Oracle {
        #[arg(long, required = true)]
        planner_bruteforce: bool,
        #[arg(long)]
        config: PathBuf,
        /// Random instances per seed.
        #[arg(long, default_value_t = 5)]
        instances: usize,
    },
}

fn load(path: &Path) -> Result<Experiment, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text)
}

fn fail(errors: Vec<String>) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "errors": errors }));
    ExitCode::FAILURE
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run { config, out, seeds, workers } => {
            let mut e = load(&config)?;
            if let Some(s) = seeds {
                e = e.with_seeds(s)?;
            }
            if let Some(w) = workers {
                if w == 0 {
                    return Err(HarnessError::Invalid(vec!["workers must be >= 1".into()]));
                }
                e.workers = w;
            }
            if let Some(dir) = out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)) {
                e.output_dir = dir;
            }
            let report = run_experiment(&e)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(fail(report.failures.iter().map(|f| format!("run {} (seed {}): {}", f.index, f.seed, f.error)).collect()))
            }
        }
        Command::Validate { config } => {
            let e = load(&config)?;
            println!("{}", serde_json::json!({ "valid": true, "runs": e.runs().len() }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { planner_bruteforce: _, config, instances } => {
            let e = load(&config)?;
            let report = planner_bruteforce(&e.base, &e.seeds, instances)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(fail(vec![format!("{} of {} instances disagree", report.mismatches.len(), report.instances)]))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(e.messages()),
    }
}
