//! Experiment documents (TOML) and their validation.
//!
//! ```toml
//! seeds = [1, 2, 3]
//! output_dir = "out"
//! workers = 4
//!
//! [sweep]
//! key = "strategy"
//! values = ["hswarm", "station", "dead_reckoning"]
//!
//! [sim]
//! n_amav = 3
//! [sim.prune]
//! epsilon = 0.4
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use swarmloc::simulator::{SimConfig, Strategy};

use crate::error::{HarnessError, Result};

/// Parameters an experiment may sweep over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKey {
    NAmav,
    NBmav,
    /// BMAV velocity-noise fraction.
    MotionNoise,
    /// AMAV range-noise fraction.
    RangeNoise,
    Epsilon,
    Strategy,
}

impl SweepKey {
    pub fn name(self) -> &'static str {
        match self {
            SweepKey::NAmav => "n_amav",
            SweepKey::NBmav => "n_bmav",
            SweepKey::MotionNoise => "motion_noise",
            SweepKey::RangeNoise => "range_noise",
            SweepKey::Epsilon => "epsilon",
            SweepKey::Strategy => "strategy",
        }
    }

    /// Grid used when a sweep lists no values.
    pub fn default_values(self) -> Vec<SweepValue> {
        let nums = |v: &[f64]| v.iter().map(|&x| SweepValue::Number(x)).collect();
        match self {
            SweepKey::NAmav => nums(&[1.0, 3.0, 5.0, 7.0]),
            SweepKey::NBmav => nums(&[12.0, 16.0, 20.0, 24.0, 28.0]),
            SweepKey::MotionNoise => nums(&[0.10, 0.15, 0.20, 0.25, 0.30]),
            SweepKey::RangeNoise => nums(&[0.0, 0.05, 0.10, 0.15, 0.20]),
            SweepKey::Epsilon => nums(&[0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2]),
            SweepKey::Strategy => Strategy::ALL.into_iter().map(SweepValue::Strategy).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Strategy(Strategy),
}

impl SweepValue {
    /// Row order for summaries: numbers ascending, strategies by name.
    pub fn sort_cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (SweepValue::Number(a), SweepValue::Number(b)) => a.total_cmp(b),
            (SweepValue::Strategy(a), SweepValue::Strategy(b)) => a.name().cmp(b.name()),
            (SweepValue::Number(_), SweepValue::Strategy(_)) => Ordering::Less,
            (SweepValue::Strategy(_), SweepValue::Number(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(x) => f.write_str(&crate::format::sig9(*x)),
            SweepValue::Strategy(s) => f.write_str(s.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub key: SweepKey,
    #[serde(default)]
    pub values: Vec<SweepValue>,
}

impl Sweep {
    /// `cfg` with this sweep's `value` applied.
    pub fn apply(&self, cfg: &SimConfig, value: SweepValue) -> std::result::Result<SimConfig, String> {
        let mut c = cfg.clone();
        let key = self.key.name();
        match (self.key, value) {
            (SweepKey::Strategy, SweepValue::Strategy(s)) => c.strategy = s,
            (SweepKey::Strategy, SweepValue::Number(_)) => {
                return Err(format!("sweep {key}: values must be strategy names"))
            }
            (_, SweepValue::Strategy(_)) => return Err(format!("sweep {key}: values must be numbers")),
            (SweepKey::NAmav | SweepKey::NBmav, SweepValue::Number(x)) => {
                if !(x >= 0.0 && x.fract() == 0.0) {
                    return Err(format!("sweep {key}: {x} is not a whole count"));
                }
                if self.key == SweepKey::NAmav {
                    c.n_amav = x as usize;
                } else {
                    c.n_bmav = x as usize;
                }
            }
            (SweepKey::MotionNoise, SweepValue::Number(x)) => c.motion_noise.sigma_frac = x,
            (SweepKey::RangeNoise, SweepValue::Number(x)) => c.observation_noise.range_frac = x,
            (SweepKey::Epsilon, SweepValue::Number(x)) => c.prune.epsilon = x,
        }
        Ok(c)
    }
}

fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

/// On-disk form of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDoc {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub sim: SimConfig,
}

/// A validated experiment: a base configuration, an optional one-key sweep
/// and the seeds every sweep point is run with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub base: SimConfig,
    pub sweep: Option<Sweep>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub workers: usize,
}

/// One concrete run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub index: usize,
    pub sweep_key: Option<SweepKey>,
    pub sweep_value: Option<SweepValue>,
    pub seed: u64,
    pub config: SimConfig,
}

impl RunSpec {
    pub fn sweep_key_name(&self) -> &'static str {
        self.sweep_key.map_or("", SweepKey::name)
    }

    pub fn sweep_value_label(&self) -> String {
        self.sweep_value.map(|v| v.to_string()).unwrap_or_default()
    }

    pub fn trace_file_name(&self) -> String {
        match (self.sweep_key, self.sweep_value) {
            (Some(k), Some(v)) => format!("trace_{}-{}_seed-{}.csv", k.name(), v, self.seed),
            _ => format!("trace_seed-{}.csv", self.seed),
        }
    }
}

impl Experiment {
    /// Sweep points in document order; a single `None` without a sweep.
    pub fn sweep_points(&self) -> Vec<Option<SweepValue>> {
        match &self.sweep {
            Some(s) => s.values.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    /// Every (sweep value × seed) run, sweep-major.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for value in self.sweep_points() {
            let cfg = match (&self.sweep, value) {
                (Some(s), Some(v)) => s.apply(&self.base, v).expect("validated at parse time"),
                _ => self.base.clone(),
            };
            for &seed in &self.seeds {
                out.push(RunSpec {
                    index: out.len(),
                    sweep_key: self.sweep.as_ref().map(|s| s.key),
                    sweep_value: value,
                    seed,
                    config: SimConfig { master_seed: seed, ..cfg.clone() },
                });
            }
        }
        out
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(HarnessError::Invalid(vec!["seeds must not be empty".into()]));
        }
        self.seeds = seeds;
        Ok(self)
    }
}

/// Parses and validates an experiment document, filling in defaults.
pub fn parse_config(text: &str) -> Result<Experiment> {
    let doc: ExperimentDoc = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    from_doc(doc)
}

pub fn from_doc(doc: ExperimentDoc) -> Result<Experiment> {
    let mut errors = Vec::new();
    if doc.seeds.is_empty() {
        errors.push("seeds must not be empty".to_string());
    }
    if doc.workers == 0 {
        errors.push("workers must be >= 1".to_string());
    }
    let mut sweep = doc.sweep;
    match &mut sweep {
        None => errors.extend(doc.sim.violations()),
        Some(s) => {
            if s.values.is_empty() {
                s.values = s.key.default_values();
            }
            for &v in &s.values {
                match s.apply(&doc.sim, v) {
                    Err(msg) => errors.push(msg),
                    Ok(cfg) => {
                        errors.extend(cfg.violations().into_iter().map(|m| format!("{}={v}: {m}", s.key.name())))
                    }
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(HarnessError::Invalid(errors));
    }
    Ok(Experiment { base: doc.sim, sweep, seeds: doc.seeds, output_dir: doc.output_dir, workers: doc.workers })
}
