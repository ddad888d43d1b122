//! Batch execution of an [`Experiment`] and artifact emission.
//!
//! Layout under the output directory:
//!
//! - `traces/<run>.csv`: one per (sweep value, seed)
//! - `summary.csv`: one row per run, sorted by (sweep value, seed)
//! - `aggregate.csv`: one row per sweep value
//! - `manifest.json`: resolved config and seed of every artifact
//! - `timing.json`: planner wall-clock statistics (not reproducible by nature)

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use swarmloc::metrics::{median_p95, MetricsSummary};
use swarmloc::simulator::{run_simulation_timed, SimConfig};

use crate::config::{Experiment, RunSpec, Sweep};
use crate::error::{HarnessError, Result};
use crate::output;

struct RunOutcome {
    spec: RunSpec,
    result: std::result::Result<(MetricsSummary, Vec<f64>), String>,
}

/// What a batch produced.
#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub output_dir: PathBuf,
    pub runs: usize,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFailure {
    pub index: usize,
    pub seed: u64,
    pub sweep_value: String,
    pub error: String,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    index: usize,
    trace_file: String,
    seed: u64,
    sweep_key: &'a str,
    sweep_value: String,
    config: &'a SimConfig,
}

#[derive(Serialize)]
struct Manifest<'a> {
    seeds: &'a [u64],
    sweep: &'a Option<Sweep>,
    base: &'a SimConfig,
    artifacts: Vec<ManifestEntry<'a>>,
    failures: &'a [RunFailure],
}

#[derive(Serialize)]
struct TimingEntry {
    index: usize,
    trace_file: String,
    invocations: usize,
    planner_ms_median: f64,
    planner_ms_p95: f64,
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

fn execute(spec: &RunSpec, trace_dir: &Path) -> std::result::Result<(MetricsSummary, Vec<f64>), String> {
    let (rec, timings) = run_simulation_timed(&spec.config).map_err(|e| e.to_string())?;
    let metrics = MetricsSummary::compute(&rec, &timings).map_err(|e| e.to_string())?;
    let path = trace_dir.join(spec.trace_file_name());
    write_file(&path, |w| output::write_trace(w, &rec)).map_err(|e| e.to_string())?;
    Ok((metrics, timings))
}

/// Runs every (sweep value × seed) of `e` and writes all artifacts.
///
/// A failing run is reported in the returned [`BatchReport`] and the
/// manifest; the remaining runs still execute. Output bytes do not depend
/// on the worker count.
pub fn run_experiment(e: &Experiment) -> Result<BatchReport> {
    let out = &e.output_dir;
    let trace_dir = out.join("traces");
    fs::create_dir_all(&trace_dir).map_err(|err| HarnessError::io(&trace_dir, err))?;

    let specs = e.runs();
    info!("running {} simulations on {} worker(s)", specs.len(), e.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(e.workers)
        .build()
        .map_err(|err| HarnessError::Invalid(vec![format!("worker pool: {err}")]))?;
    // indexed parallel collect keeps run order
    let mut outcomes: Vec<RunOutcome> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| RunOutcome { spec: spec.clone(), result: execute(spec, &trace_dir) })
            .collect()
    });
    outcomes.sort_by(|a, b| {
        let (a, b) = (&a.spec, &b.spec);
        let by_value = match (a.sweep_value, b.sweep_value) {
            (Some(x), Some(y)) => x.sort_cmp(&y),
            _ => std::cmp::Ordering::Equal,
        };
        by_value.then(a.seed.cmp(&b.seed)).then(a.index.cmp(&b.index))
    });

    let failures: Vec<RunFailure> = outcomes
        .iter()
        .filter_map(|o| {
            o.result.as_ref().err().map(|err| {
                warn!("run {} (seed {}) failed: {err}", o.spec.index, o.spec.seed);
                RunFailure {
                    index: o.spec.index,
                    seed: o.spec.seed,
                    sweep_value: o.spec.sweep_value_label(),
                    error: err.clone(),
                }
            })
        })
        .collect();

    write_file(&out.join("summary.csv"), |w| {
        writeln!(w, "{}", output::summary_header())?;
        for o in &outcomes {
            if let Ok((m, _)) = &o.result {
                let s = &o.spec;
                let row = output::summary_row(s.config.strategy.name(), s.sweep_key_name(), &s.sweep_value_label(), s.seed, m);
                writeln!(w, "{row}")?;
            }
        }
        Ok(())
    })?;

    write_file(&out.join("aggregate.csv"), |w| {
        writeln!(w, "{}", output::aggregate_header())?;
        for group in outcomes.chunk_by(|a, b| a.spec.sweep_value == b.spec.sweep_value) {
            let first = &group[0].spec;
            let ok: Vec<&MetricsSummary> = group.iter().filter_map(|o| o.result.as_ref().ok().map(|r| &r.0)).collect();
            let failed = group.len() - ok.len();
            let row = output::aggregate_row(
                first.config.strategy.name(),
                first.sweep_key_name(),
                &first.sweep_value_label(),
                failed,
                &ok,
            );
            writeln!(w, "{row}")?;
        }
        Ok(())
    })?;

    let manifest = Manifest {
        seeds: &e.seeds,
        sweep: &e.sweep,
        base: &e.base,
        artifacts: outcomes
            .iter()
            .filter(|o| o.result.is_ok())
            .map(|o| ManifestEntry {
                index: o.spec.index,
                trace_file: format!("traces/{}", o.spec.trace_file_name()),
                seed: o.spec.seed,
                sweep_key: o.spec.sweep_key_name(),
                sweep_value: o.spec.sweep_value_label(),
                config: &o.spec.config,
            })
            .collect(),
        failures: &failures,
    };
    write_json(&out.join("manifest.json"), &manifest)?;

    let timing: Vec<TimingEntry> = outcomes
        .iter()
        .filter_map(|o| {
            let (_, t) = o.result.as_ref().ok()?;
            let (planner_ms_median, planner_ms_p95) = median_p95(t);
            Some(TimingEntry {
                index: o.spec.index,
                trace_file: format!("traces/{}", o.spec.trace_file_name()),
                invocations: t.len(),
                planner_ms_median,
                planner_ms_p95,
            })
        })
        .collect();
    write_json(&out.join("timing.json"), &timing)?;

    Ok(BatchReport { output_dir: out.clone(), runs: outcomes.len(), failures })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}
