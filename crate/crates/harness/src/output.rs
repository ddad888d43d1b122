//! CSV writers for run traces, per-run summaries and sweep aggregates.

use std::io::{self, Write};

use swarmloc::metrics::{MetricsSummary, ACCURACY_GRID, TIME_GRID};
use swarmloc::simulator::TraceRecord;

use crate::format::sig9;

pub const TRACE_HEADER: &str = "t,kind,id,x,y,heading,est_x,est_y,trace_sigma,observed_by";

/// Writes a trace: for every timestep, BMAV rows then AMAV rows.
pub fn write_trace<W: Write>(out: &mut W, rec: &TraceRecord) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let mut amavs = rec.amav_rows.iter().peekable();
    let mut bmavs = rec.bmav_rows.iter().peekable();
    while let Some(t) = bmavs.peek().map(|r| r.t) {
        while let Some(r) = bmavs.next_if(|r| r.t == t) {
            let observers: Vec<String> = r.observers().map(|j| j.to_string()).collect();
            writeln!(
                out,
                "{},bmav,{},{},{},,{},{},{},{}",
                sig9(r.t),
                r.id,
                sig9(r.truth.x),
                sig9(r.truth.y),
                sig9(r.est.x),
                sig9(r.est.y),
                sig9(r.trace_sigma),
                observers.join(";")
            )?;
        }
        while let Some(a) = amavs.next_if(|a| a.t == t) {
            writeln!(
                out,
                "{},amav,{},{},{},{},,,,",
                sig9(a.t),
                a.id,
                sig9(a.pose.position.x),
                sig9(a.pose.position.y),
                sig9(a.pose.heading)
            )?;
        }
    }
    Ok(())
}

pub fn success_columns() -> Vec<String> {
    ACCURACY_GRID
        .iter()
        .flat_map(|&a| TIME_GRID.iter().map(move |&t| format!("success@{}@{}", sig9(a), sig9(t))))
        .collect()
}

pub fn summary_header() -> String {
    let mut cols = vec!["strategy", "sweep_key", "sweep_value", "seed", "mean_ate", "max_ate"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    cols.extend(success_columns());
    cols.join(",")
}

/// One summary row; `mean_ate` is the pooled RMS error over all samples.
pub fn summary_row(strategy: &str, sweep_key: &str, sweep_value: &str, seed: u64, m: &MetricsSummary) -> String {
    let mut cols = vec![
        strategy.to_string(),
        sweep_key.to_string(),
        sweep_value.to_string(),
        seed.to_string(),
        sig9(m.pooled_ate),
        sig9(m.max_ate),
    ];
    cols.extend(m.success.iter().map(|s| sig9(s.2)));
    cols.join(",")
}

pub fn aggregate_header() -> String {
    let mut cols = vec![
        "strategy",
        "sweep_key",
        "sweep_value",
        "runs",
        "failed",
        "mean_ate",
        "std_ate",
        "mean_bmav_ate",
        "mean_max_ate",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    cols.extend(success_columns());
    cols.join(",")
}

/// Sample mean and standard deviation (n − 1); zero deviation for one sample.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate_row(
    strategy: &str,
    sweep_key: &str,
    sweep_value: &str,
    failed: usize,
    metrics: &[&MetricsSummary],
) -> String {
    let (ate_mean, ate_std) = mean_std(&metrics.iter().map(|m| m.pooled_ate).collect::<Vec<_>>());
    let (bmav_mean, _) = mean_std(&metrics.iter().map(|m| m.mean_bmav_ate).collect::<Vec<_>>());
    let (max_mean, _) = mean_std(&metrics.iter().map(|m| m.max_ate).collect::<Vec<_>>());
    let mut cols = vec![
        strategy.to_string(),
        sweep_key.to_string(),
        sweep_value.to_string(),
        metrics.len().to_string(),
        failed.to_string(),
        sig9(ate_mean),
        sig9(ate_std),
        sig9(bmav_mean),
        sig9(max_mean),
    ];
    let cells = ACCURACY_GRID.len() * TIME_GRID.len();
    for k in 0..cells {
        let (mean, _) = mean_std(&metrics.iter().map(|m| m.success[k].2).collect::<Vec<_>>());
        cols.push(sig9(mean));
    }
    cols.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarmloc::simulator::{run_simulation, SimConfig, Strategy};

    #[test]
    fn trace_has_one_row_per_entity_per_step() {
        let cfg = SimConfig { duration: 10.0, strategy: Strategy::Station, ..Default::default() };
        let rec = run_simulation(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &rec).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 1 + 10 * (9 + 3));
        assert!(lines[1].starts_with("1,bmav,0,"));
        assert!(lines[10].starts_with("1,amav,0,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 10));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn summary_columns_line_up() {
        let n = summary_header().split(',').count();
        assert_eq!(n, 6 + 28);
        assert!(summary_header().contains("success@0.8@420"));
        assert_eq!(aggregate_header().split(',').count(), 9 + 28);
    }

    #[test]
    fn mean_std_small_samples() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
