//! Localization-error and navigation-success metrics over trace records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::simulator::TraceRecord;

/// Accuracy thresholds (m) reported by default.
pub const ACCURACY_GRID: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
/// Time limits (s) reported by default.
pub const TIME_GRID: [f64; 7] = [60.0, 120.0, 180.0, 240.0, 300.0, 360.0, 420.0];

/// Absolute trajectory error: RMS of the per-sample position error.
pub fn ate(estimated: &[Vec2], truth: &[Vec2]) -> Result<f64> {
    if estimated.is_empty() || estimated.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "trajectories need equal non-zero length, got {} and {}",
            estimated.len(),
            truth.len()
        )));
    }
    let sq: f64 = estimated.iter().zip(truth).map(|(e, t)| (*e - *t).dot(*e - *t)).sum();
    Ok((sq / estimated.len() as f64).sqrt())
}

/// Fraction of BMAVs whose true position came within `accuracy` of their
/// destination at some logged time `t <= time_limit`. BMAVs without a
/// destination count as failures.
pub fn success_rate(records: &TraceRecord, accuracy: f64, time_limit: f64) -> f64 {
    let Some(dests) = &records.destinations else { return 0.0 };
    if records.n_bmav == 0 {
        return 0.0;
    }
    let mut hit = vec![false; records.n_bmav];
    for r in &records.bmav_rows {
        if r.t <= time_limit && r.truth.dist(dests[r.id].point) <= accuracy {
            hit[r.id] = true;
        }
    }
    hit.iter().filter(|&&h| h).count() as f64 / records.n_bmav as f64
}

/// Empirical CDF of all per-timestep, per-BMAV position errors: sorted
/// errors paired with `k/n`.
pub fn error_cdf(records: &TraceRecord) -> Vec<(f64, f64)> {
    let mut errs: Vec<f64> = records.bmav_rows.iter().map(|r| r.error()).collect();
    errs.sort_by(f64::total_cmp);
    let n = errs.len() as f64;
    errs.into_iter().enumerate().map(|(k, e)| (e, (k + 1) as f64 / n)).collect()
}

/// Median and 95th percentile (nearest-rank) of a sample; zeros when empty.
pub fn median_p95(samples: &[f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    (median, s[rank - 1])
}

/// Per-run metric summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub per_bmav_ate: Vec<f64>,
    /// RMS over every (time, BMAV) sample.
    pub pooled_ate: f64,
    /// Mean of the per-BMAV ATEs.
    pub mean_bmav_ate: f64,
    pub max_ate: f64,
    /// `(accuracy, time_limit, rate)` over the accuracy and time grids.
    pub success: Vec<(f64, f64, f64)>,
    pub planner_ms_median: f64,
    pub planner_ms_p95: f64,
}

impl MetricsSummary {
    pub fn compute(records: &TraceRecord, planner_ms: &[f64]) -> Result<Self> {
        let mut est = vec![Vec::new(); records.n_bmav];
        let mut truth = vec![Vec::new(); records.n_bmav];
        for r in &records.bmav_rows {
            est[r.id].push(r.est);
            truth[r.id].push(r.truth);
        }
        let per_bmav_ate = est.iter().zip(&truth).map(|(e, t)| ate(e, t)).collect::<Result<Vec<_>>>()?;
        let all_est: Vec<Vec2> = records.bmav_rows.iter().map(|r| r.est).collect();
        let all_truth: Vec<Vec2> = records.bmav_rows.iter().map(|r| r.truth).collect();
        let pooled_ate = ate(&all_est, &all_truth)?;
        let mean_bmav_ate = per_bmav_ate.iter().sum::<f64>() / per_bmav_ate.len() as f64;
        let max_ate = per_bmav_ate.iter().copied().fold(0.0, f64::max);
        let success = ACCURACY_GRID
            .iter()
            .flat_map(|&a| TIME_GRID.iter().map(move |&t| (a, t)))
            .map(|(a, t)| (a, t, success_rate(records, a, t)))
            .collect();
        let (planner_ms_median, planner_ms_p95) = median_p95(planner_ms);
        Ok(Self { per_bmav_ate, pooled_ate, mean_bmav_ate, max_ate, success, planner_ms_median, planner_ms_p95 })
    }

    pub fn success_at(&self, accuracy: f64, time_limit: f64) -> Option<f64> {
        self.success.iter().find(|(a, t, _)| *a == accuracy && *t == time_limit).map(|s| s.2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navigation::Destination;
    use crate::simulator::{BmavRow, Strategy};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// `(t, id, truth, est)`
    type Row = (f64, usize, (f64, f64), (f64, f64));

    fn record(dests: &[(f64, f64)], rows: &[Row]) -> TraceRecord {
        TraceRecord {
            strategy: Strategy::DeadReckoning,
            n_bmav: dests.len(),
            duration: 420.0,
            destinations: Some(
                dests.iter().map(|&(x, y)| Destination { point: Vec2::new(x, y), accuracy: 0.2 }).collect(),
            ),
            bmav_rows: rows
                .iter()
                .map(|&(t, id, (tx, ty), (ex, ey))| BmavRow {
                    t,
                    id,
                    truth: Vec2::new(tx, ty),
                    est: Vec2::new(ex, ey),
                    trace_sigma: 0.0,
                    observed_by: 0,
                })
                .collect(),
            amav_rows: Vec::new(),
            arrival_times: vec![None; dests.len()],
            plan_invocations: 0,
        }
    }

    #[test]
    fn ate_examples() {
        let t = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 0.0)];
        assert_eq!(ate(&t, &t).unwrap(), 0.0);
        let shifted: Vec<Vec2> = t.iter().map(|&p| p + Vec2::new(1.0, 0.0)).collect();
        assert_abs_diff_eq!(ate(&shifted, &t).unwrap(), 1.0, epsilon = 1e-15);
        let e = [t[0], t[1], t[2] + Vec2::new(0.0, 2.0)];
        assert_abs_diff_eq!(ate(&e, &t).unwrap(), (4.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert!(ate(&[], &[]).is_err());
        assert!(ate(&t[..2], &t).is_err());
    }

    #[test]
    fn success_examples() {
        let at_dest = record(&[(1.0, 1.0), (2.0, 2.0)], &[(1.0, 0, (1.0, 1.0), (1.0, 1.0)), (1.0, 1, (2.0, 2.0), (2.0, 2.0))]);
        assert_eq!(success_rate(&at_dest, 0.2, 60.0), 1.0);
        let never = record(&[(8.0, 8.0)], &[(1.0, 0, (0.0, 0.0), (0.0, 0.0)), (2.0, 0, (1.0, 0.0), (1.0, 0.0))]);
        assert_eq!(success_rate(&never, 0.8, 420.0), 0.0);

        let dests: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 8.0)).collect();
        let mut rows = Vec::new();
        for i in 0..9 {
            let arrive = if i < 3 { 50.0 } else { 100.0 };
            rows.push((arrive, i, (i as f64, 8.0), (i as f64, 8.0)));
            rows.push((1.0, i, (i as f64, 0.0), (i as f64, 0.0)));
        }
        let r = record(&dests, &rows);
        assert_abs_diff_eq!(success_rate(&r, 0.2, 60.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(success_rate(&r, 0.2, 120.0), 1.0);
    }

    #[test]
    fn cdf_examples() {
        let one = record(&[(0.0, 0.0)], &[(1.0, 0, (0.0, 0.0), (1.0, 0.0))]);
        assert_eq!(error_cdf(&one), vec![(1.0, 1.0)]);
        let two = record(&[(0.0, 0.0)], &[(1.0, 0, (0.0, 0.0), (0.0, 2.0)), (2.0, 0, (0.0, 0.0), (1.0, 0.0))]);
        assert_eq!(error_cdf(&two), vec![(1.0, 0.5), (2.0, 1.0)]);
    }

    #[test]
    fn percentiles() {
        assert_eq!(median_p95(&[]), (0.0, 0.0));
        assert_eq!(median_p95(&[3.0, 1.0, 2.0]), (2.0, 3.0));
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(median_p95(&xs), (50.5, 95.0));
    }

    proptest! {
        #[test]
        fn ate_translation_invariant(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.0f64..1.0, -1.0f64..1.0), 1..50),
            sx in -10.0f64..10.0, sy in -10.0f64..10.0,
        ) {
            let truth: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p.0, p.1)).collect();
            let est: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p.0 + p.2, p.1 + p.3)).collect();
            let s = Vec2::new(sx, sy);
            let a = ate(&est, &truth).unwrap();
            let b = ate(&est.iter().map(|&p| p + s).collect::<Vec<_>>(), &truth.iter().map(|&p| p + s).collect::<Vec<_>>()).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn success_monotone(
            walk in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 1..40),
            a1 in 0.05f64..2.0, da in 0.0f64..2.0, t1 in 0.0f64..40.0, dt in 0.0f64..40.0,
        ) {
            let rows: Vec<_> = walk.iter().enumerate().map(|(k, &(x, y))| ((k + 1) as f64, 0usize, (x, y), (x, y))).collect();
            let r = record(&[(2.0, 2.0)], &rows);
            prop_assert!(success_rate(&r, a1, t1) <= success_rate(&r, a1 + da, t1));
            prop_assert!(success_rate(&r, a1, t1) <= success_rate(&r, a1, t1 + dt));
        }

        #[test]
        fn cdf_is_monotone(errs in prop::collection::vec((0.0f64..3.0, 0.0f64..3.0), 1..60)) {
            let rows: Vec<_> = errs.iter().enumerate().map(|(k, &(x, y))| ((k + 1) as f64, 0usize, (0.0, 0.0), (x, y))).collect();
            let cdf = error_cdf(&record(&[(0.0, 0.0)], &rows));
            prop_assert_eq!(cdf.len(), rows.len());
            for w in cdf.windows(2) {
                prop_assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
            }
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        }
    }
}
