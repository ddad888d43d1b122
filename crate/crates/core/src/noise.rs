//! Seeded random streams and the percent-of-measurement noise models.
//!
//! Every stream is keyed by `(master_seed, entity_id, stream_tag)` so that
//! adding or removing an agent never shifts another agent's draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BmavCommand;

/// Purpose tags for [`derive_stream`].
pub mod tags {
    pub const MOTION: u64 = 1;
    pub const OBSERVATION: u64 = 2;
    pub const PLANNER: u64 = 3;
    pub const MISSION: u64 = 4;
}

/// Velocity noise of a BMAV: per-axis std is `max(sigma_frac * |v_k|, sigma_floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionNoiseParams {
    pub sigma_frac: f64,
    pub sigma_floor: f64,
}

impl Default for MotionNoiseParams {
    fn default() -> Self {
        Self { sigma_frac: 0.20, sigma_floor: 0.01 }
    }
}

impl MotionNoiseParams {
    pub fn zero() -> Self {
        Self { sigma_frac: 0.0, sigma_floor: 0.0 }
    }

    /// Per-axis standard deviations for a given velocity.
    pub fn sigmas(&self, v: BmavCommand) -> (f64, f64) {
        (
            (self.sigma_frac * v.vx.abs()).max(self.sigma_floor),
            (self.sigma_frac * v.vy.abs()).max(self.sigma_floor),
        )
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.sigma_frac >= 0.0 && self.sigma_frac.is_finite()) {
            errors.push(format!("motion_noise.sigma_frac must be >= 0, got {}", self.sigma_frac));
        }
        if !(self.sigma_floor >= 0.0 && self.sigma_floor.is_finite()) {
            errors.push(format!("motion_noise.sigma_floor must be >= 0, got {}", self.sigma_floor));
        }
    }
}

/// Range/bearing noise of an AMAV sensor.
///
/// Range std is `range_frac * r`; bearing std is `max(bearing_frac * |alpha|, bearing_floor)`.
/// Setting `bearing_frac = 0` gives a constant-variance bearing model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationNoiseParams {
    pub range_frac: f64,
    pub bearing_frac: f64,
    pub bearing_floor: f64,
}

impl Default for ObservationNoiseParams {
    fn default() -> Self {
        Self { range_frac: 0.10, bearing_frac: 0.05, bearing_floor: 0.01 }
    }
}

impl ObservationNoiseParams {
    pub fn zero() -> Self {
        Self { range_frac: 0.0, bearing_frac: 0.0, bearing_floor: 0.0 }
    }

    pub fn sigmas(&self, range: f64, bearing: f64) -> (f64, f64) {
        (self.range_frac * range.abs(), (self.bearing_frac * bearing.abs()).max(self.bearing_floor))
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        for (name, v) in [
            ("range_frac", self.range_frac),
            ("bearing_frac", self.bearing_frac),
            ("bearing_floor", self.bearing_floor),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                errors.push(format!("observation_noise.{name} must be >= 0, got {v}"));
            }
        }
    }
}

/// Deterministic pseudo-random stream owned by a single consumer.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    /// One standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen()
    }
}

/// Builds the stream for `(master_seed, entity_id, stream_tag)`.
///
/// The triple is laid out verbatim in the ChaCha key, so distinct triples
/// give distinct keystreams.
pub fn derive_stream(master_seed: u64, entity_id: u64, stream_tag: u64) -> RngStream {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&entity_id.to_le_bytes());
    key[16..24].copy_from_slice(&stream_tag.to_le_bytes());
    key[24..32].copy_from_slice(b"swarmloc");
    RngStream { rng: ChaCha8Rng::from_seed(key) }
}

/// Draws BMAV velocity noise for command `v`.
///
/// Exactly two standard-normal draws are consumed per call regardless of
/// the parameters, keeping streams aligned across configurations.
pub fn sample_motion_noise(v: BmavCommand, params: &MotionNoiseParams, rng: &mut RngStream) -> (f64, f64) {
    let (s1, s2) = params.sigmas(v);
    let z1 = rng.standard_normal();
    let z2 = rng.standard_normal();
    (s1 * z1, s2 * z2)
}

/// Draws range and bearing noise for a measurement `(r, alpha)`.
pub fn sample_observation_noise(
    r: f64,
    alpha: f64,
    params: &ObservationNoiseParams,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("range must be > 0, got {r}")));
    }
    let (sr, sa) = params.sigmas(r, alpha);
    let zr = rng.standard_normal();
    let za = rng.standard_normal();
    Ok((sr * zr, sa * za))
}
