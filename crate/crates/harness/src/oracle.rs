//! Brute-force cross-check of the pruned planner.
//!
//! With `ε = 0` and `σ = 0` pruning only drops nodes that are exact
//! duplicates of a reserved node with no smaller covariance, so the pruned
//! search must reach the same terminal score as the unpruned one.

use serde::Serialize;
use swarmloc::estimation::Belief;
use swarmloc::geometry::{BmavCommand, Pose, Vec2};
use swarmloc::linalg::Mat2;
use swarmloc::noise::{derive_stream, tags, RngStream};
use swarmloc::planning::{Planner, PlannerConfig, PruneParams};
use swarmloc::simulator::SimConfig;

use crate::error::Result;

/// Deepest tree the oracle enumerates; `|U|^δ` grows fast.
pub const MAX_ORACLE_DELTA: usize = 3;
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct OracleMismatch {
    pub seed: u64,
    pub instance: usize,
    pub pruned: f64,
    pub exhaustive: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub instances: usize,
    pub delta: usize,
    pub max_abs_diff: f64,
    pub mismatches: Vec<OracleMismatch>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Lossless planner configuration derived from a simulation config.
pub fn lossless_config(cfg: &SimConfig) -> PlannerConfig {
    let mut p = cfg.planner_config();
    p.delta = p.delta.min(MAX_ORACLE_DELTA);
    p.prune = PruneParams { epsilon: 0.0, sigma: 0.0, ..p.prune };
    p
}

/// A random start pose, group and command set inside the configured arena.
pub fn random_instance(cfg: &SimConfig, rng: &mut RngStream) -> (Pose, Vec<Belief>, Vec<BmavCommand>) {
    let a = cfg.arena;
    let start = Pose::new(rng.uniform(0.0, a.length), rng.uniform(0.0, a.width), rng.uniform(-3.0, 3.0));
    let n = 1 + (rng.next_u64() % 3) as usize;
    let mut group = Vec::with_capacity(n);
    let mut commands = Vec::with_capacity(n);
    for _ in 0..n {
        let mean = a.clamp(start.position + Vec2::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)));
        let (sx, sy) = (rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0));
        let c = rng.uniform(-0.9, 0.9) * (sx * sy).sqrt();
        group.push(Belief::new(mean, Mat2::new(sx, c, c, sy)));
        commands.push(BmavCommand { vx: rng.uniform(-0.5, 0.5), vy: rng.uniform(-0.5, 0.5) });
    }
    (start, group, commands)
}

/// Compares pruned and exhaustive search on `per_seed` instances per seed.
pub fn planner_bruteforce(cfg: &SimConfig, seeds: &[u64], per_seed: usize) -> Result<OracleReport> {
    let pcfg = lossless_config(cfg);
    let delta = pcfg.delta;
    let planner = Planner::new(pcfg)?;
    let mut report = OracleReport { instances: 0, delta, max_abs_diff: 0.0, mismatches: Vec::new() };
    for &seed in seeds {
        let mut rng = derive_stream(seed, 0, tags::PLANNER);
        for instance in 0..per_seed {
            let (start, group, commands) = random_instance(cfg, &mut rng);
            let pruned = planner.plan(start, &group, &commands)?.predicted_terminal_score;
            let exhaustive = planner.exhaustive(start, &group, &commands)?.predicted_terminal_score;
            let diff = (pruned - exhaustive).abs();
            report.instances += 1;
            report.max_abs_diff = report.max_abs_diff.max(diff);
            if diff > TOLERANCE {
                report.mismatches.push(OracleMismatch { seed, instance, pruned, exhaustive });
            }
        }
    }
    Ok(report)
}
