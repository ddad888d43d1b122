//! Gaussian location beliefs for BMAVs and the predict/correct cycle that
//! fuses commanded motion with range-bearing observations from AMAVs.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap, BmavCommand, Pose, Vec2};
use crate::linalg::{self, Mat2};
use crate::noise::{MotionNoiseParams, ObservationNoiseParams};

/// Below this AMAV–BMAV distance the observation model is not linearized.
pub const R_MIN_JACOBIAN: f64 = 1e-3;

/// Innovation covariances with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Mean and covariance of a BMAV location estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub mean: Vec2,
    #[serde(with = "mat2_serde")]
    pub cov: Mat2,
}

impl Belief {
    pub fn new(mean: Vec2, cov: Mat2) -> Self {
        Self { mean, cov }
    }

    /// A belief with zero covariance, i.e. a known starting location.
    pub fn certain(mean: Vec2) -> Self {
        Self { mean, cov: Mat2::zeros() }
    }

    /// Symmetric within 1e-12 and PSD within 1e-9.
    pub fn is_valid(&self) -> bool {
        self.mean.is_finite()
            && self.cov.iter().all(|v| v.is_finite())
            && linalg::is_symmetric(&self.cov, 1e-12)
            && linalg::is_psd(&self.cov, 1e-9)
    }
}

/// Range-bearing measurement relative to an AMAV pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub range: f64,
    pub bearing: f64,
}

/// Noise-free range and bearing of `y` seen from `p`.
pub fn observe_ideal(p: Pose, y: Vec2) -> Result<Observation> {
    let d = y - p.position;
    let range = d.norm();
    if range == 0.0 {
        return Err(Error::InvalidArgument("observed point coincides with the sensor".into()));
    }
    Ok(Observation { range, bearing: wrap(d.y.atan2(d.x) - p.heading) })
}

/// Jacobian of [`observe_ideal`] with respect to the observed point.
pub fn observation_jacobian(p: Pose, y_mean: Vec2) -> Result<Mat2> {
    let d = y_mean - p.position;
    let r = d.norm();
    if !(r >= R_MIN_JACOBIAN) {
        return Err(Error::DegenerateGeometry { distance: r, min: R_MIN_JACOBIAN });
    }
    // heading + bearing is the absolute direction to the point
    let (s, c) = (d.y / r, d.x / r);
    Ok(Matrix2::new(d.x / r, d.y / r, -s / r, c / r))
}

/// Process noise for one prediction: `dt² · diag(σ₁², σ₂²)`.
pub fn process_noise(v_meas: BmavCommand, dt: f64, params: &MotionNoiseParams) -> Mat2 {
    let (s1, s2) = params.sigmas(v_meas);
    Mat2::new(dt * dt * s1 * s1, 0.0, 0.0, dt * dt * s2 * s2)
}

/// Propagates a belief through the velocity-integration model.
pub fn predict(b: &Belief, v_meas: BmavCommand, dt: f64, params: &MotionNoiseParams) -> Belief {
    debug_assert!(dt > 0.0);
    Belief {
        mean: b.mean + dt * v_meas.as_vec(),
        cov: b.cov + process_noise(v_meas, dt, params),
    }
}

struct Gain {
    h: Mat2,
    k: Mat2,
    r: Mat2,
    predicted: Observation,
}

fn gain(b: &Belief, p: Pose, params: &ObservationNoiseParams) -> Result<Gain> {
    let h = observation_jacobian(p, b.mean)?;
    let predicted = observe_ideal(p, b.mean)?;
    let (sr, sa) = params.sigmas(predicted.range, predicted.bearing);
    let r = Mat2::new(sr * sr, 0.0, 0.0, sa * sa);
    let s = linalg::symmetrize(&(h * b.cov * h.transpose() + r));
    let (lo, hi) = linalg::sym_eigenvalues(&s);
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(Error::NumericalDegeneracy { condition });
    }
    let s_inv = s.try_inverse().ok_or(Error::NumericalDegeneracy { condition: f64::INFINITY })?;
    Ok(Gain { h, k: b.cov * h.transpose() * s_inv, r, predicted })
}

fn posterior_cov(cov: &Mat2, g: &Gain) -> Mat2 {
    // Joseph form keeps the result PSD under rounding
    let a = Mat2::identity() - g.k * g.h;
    linalg::symmetrize(&(a * cov * a.transpose() + g.k * g.r * g.k.transpose()))
}

/// Linearized Gaussian update of `b_prior` with measurement `z` taken from pose `p`.
///
/// The measurement noise is evaluated at the predicted observation, not at `z`.
pub fn correct(b_prior: &Belief, z: Observation, p: Pose, params: &ObservationNoiseParams) -> Result<Belief> {
    let g = gain(b_prior, p, params)?;
    let innovation = Vector2::new(z.range - g.predicted.range, wrap(z.bearing - g.predicted.bearing));
    let dm = g.k * innovation;
    Ok(Belief {
        mean: b_prior.mean + Vec2::new(dm.x, dm.y),
        cov: posterior_cov(&b_prior.cov, &g),
    })
}

/// Covariance the belief would have after observing it from `p`, with the
/// mean held fixed. Used for look-ahead where no actual measurement exists.
pub fn expected_correction(b: &Belief, p: Pose, params: &ObservationNoiseParams) -> Result<Belief> {
    let g = gain(b, p, params)?;
    Ok(Belief { mean: b.mean, cov: posterior_cov(&b.cov, &g) })
}

/// Scalar uncertainty indicator: the covariance trace.
pub fn uncertainty(b: &Belief) -> f64 {
    b.cov.trace()
}

mod mat2_serde {
    use super::Mat2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat2, s: S) -> Result<S::Ok, S::Error> {
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat2, D::Error> {
        let rows = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok(Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
    }
}
