//! Angles, planar vectors, arena bounds, the AMAV unicycle model, the BMAV
//! velocity-integration model and the sensor field-of-view test.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("angle must be finite, got {a}")));
    }
    Ok(wrap(a))
}

/// Infallible wrap for values already known to be finite.
pub(crate) fn wrap(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    // rem_euclid maps -π to π already, but guard against -π sneaking in through rounding.
    if r <= -PI {
        r += TAU;
    }
    r
}

/// A point or displacement in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (other - self).norm()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates about the origin by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

impl From<Vec2> for Vector2<f64> {
    fn from(v: Vec2) -> Self {
        Vector2::new(v.x, v.y)
    }
}

impl From<Vector2<f64>> for Vec2 {
    fn from(v: Vector2<f64>) -> Self {
        Vec2::new(v.x, v.y)
    }
}

/// AMAV configuration: planar position plus heading in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { position: Vec2::new(x, y), heading: wrap(heading) }
    }
}

/// Unicycle control: forward speed `u` (m/s, non-negative) and turn rate `omega` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AmavControl {
    pub u: f64,
    pub omega: f64,
}

impl AmavControl {
    pub const HOVER: AmavControl = AmavControl { u: 0.0, omega: 0.0 };

    pub fn new(u: f64, omega: f64) -> Result<Self> {
        if !(u.is_finite() && omega.is_finite()) || u < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "AMAV control needs finite u >= 0 and finite omega, got ({u}, {omega})"
            )));
        }
        Ok(Self { u, omega })
    }
}

/// Planar velocity command for a BMAV, in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BmavCommand {
    pub vx: f64,
    pub vy: f64,
}

impl BmavCommand {
    pub const HOVER: BmavCommand = BmavCommand { vx: 0.0, vy: 0.0 };

    pub const fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy }
    }

    pub fn speed(self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn as_vec(self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }
}

/// Forward-facing sector sensor: full aperture `angle` and maximum range `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovParams {
    pub angle: f64,
    pub r_max: f64,
}

impl Default for FovParams {
    fn default() -> Self {
        Self { angle: 120f64.to_radians(), r_max: 1.0 }
    }
}

impl FovParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.angle > 0.0 && self.angle <= TAU) {
            errors.push(format!("fov.angle must lie in (0, 2π], got {}", self.angle));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            errors.push(format!("fov.r_max must be > 0, got {}", self.r_max));
        }
    }
}

/// Rectangular operating area `[0, length] × [0, width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub length: f64,
    pub width: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Self { length: 8.0, width: 8.0 }
    }
}

impl Arena {
    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.length).contains(&p.x) && (0.0..=self.width).contains(&p.y)
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(0.0, self.length), p.y.clamp(0.0, self.width))
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.length / 2.0, self.width / 2.0)
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.length > 0.0 && self.length.is_finite()) {
            errors.push(format!("arena.length must be > 0, got {}", self.length));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            errors.push(format!("arena.width must be > 0, got {}", self.width));
        }
    }
}

/// Advances an AMAV pose by one control interval.
///
/// The position moves along the heading held at the start of the interval;
/// the turn is applied afterwards.
pub fn amav_step(p: Pose, c: AmavControl, dt: f64) -> Pose {
    debug_assert!(dt > 0.0);
    let (s, co) = p.heading.sin_cos();
    Pose {
        position: Vec2::new(p.position.x + dt * c.u * co, p.position.y + dt * c.u * s),
        heading: wrap(p.heading + dt * c.omega),
    }
}

/// Advances a BMAV position with commanded velocity `v` plus velocity noise `n`,
/// then projects the result back into the arena.
pub fn bmav_step(y: Vec2, v: BmavCommand, n: (f64, f64), dt: f64, arena: &Arena) -> Vec2 {
    debug_assert!(dt > 0.0);
    let moved = Vec2::new(y.x + dt * (v.vx + n.0), y.y + dt * (v.vy + n.1));
    arena.clamp(moved)
}

/// Whether `q` lies strictly inside the sensor sector of an AMAV at `p`.
pub fn in_fov(p: Pose, q: Vec2, f: &FovParams) -> bool {
    let d = q - p.position;
    let r = d.norm();
    if !(r > 0.0 && r < f.r_max) {
        return false;
    }
    let off = wrap(d.y.atan2(d.x) - p.heading);
    off.abs() < f.angle / 2.0
}
