//! Potential-field velocity commands for BMAVs and the arrival test.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::geometry::{BmavCommand, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavParams {
    pub v_max: f64,
    /// Attractive gain (1/s): commanded velocity per meter of remaining distance.
    pub attract_gain: f64,
    /// Repulsive gain (m²·m/s), scaled by `1/d²` from the obstacle center.
    pub repulse_gain: f64,
    /// Extra margin around an obstacle's radius within which it repels.
    pub obstacle_radius: f64,
    /// Waypoint acceptance radius for roaming missions.
    pub arrival_radius: f64,
}

impl Default for NavParams {
    fn default() -> Self {
        Self { v_max: 0.5, attract_gain: 0.2, repulse_gain: 0.1, obstacle_radius: 0.5, arrival_radius: 0.5 }
    }
}

impl NavParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        for (name, v) in [
            ("v_max", self.v_max),
            ("attract_gain", self.attract_gain),
            ("repulse_gain", self.repulse_gain),
            ("obstacle_radius", self.obstacle_radius),
            ("arrival_radius", self.arrival_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("nav.{name} must be > 0, got {v}"));
            }
        }
    }
}

/// A goal point and the tolerance within which a BMAV counts as arrived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Destination {
    pub point: Vec2,
    pub accuracy: f64,
}

/// Static disc obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

/// Velocity command from the BMAV's believed position: linear attraction to
/// the goal plus inverse-square repulsion from nearby obstacles, capped at `v_max`.
pub fn potential_command(mean: Vec2, dest: &Destination, obstacles: &[Obstacle], params: &NavParams) -> BmavCommand {
    let mut v = params.attract_gain * (dest.point - mean);
    for obs in obstacles {
        let away = mean - obs.center;
        let d = away.norm();
        if d >= obs.radius + params.obstacle_radius {
            continue;
        }
        if d == 0.0 {
            warn!("BMAV estimate sits on obstacle center {:?}; pushing along +x", obs.center);
            v += Vec2::new(params.v_max, 0.0);
            continue;
        }
        v += (params.repulse_gain / (d * d * d)) * away;
    }
    let speed = v.norm();
    if speed > params.v_max {
        v = (params.v_max / speed) * v;
    }
    BmavCommand::new(v.x, v.y)
}

/// Inclusive arrival test on the true position.
pub fn reached(truth: Vec2, dest: &Destination) -> bool {
    truth.dist(dest.point) <= dest.accuracy
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dest(x: f64, y: f64) -> Destination {
        Destination { point: Vec2::new(x, y), accuracy: 0.2 }
    }

    #[test]
    fn command_examples() {
        let p = NavParams { attract_gain: 0.5, ..Default::default() };
        assert_eq!(potential_command(Vec2::new(3.0, 3.0), &dest(3.0, 3.0), &[], &p), BmavCommand::HOVER);
        let c = potential_command(Vec2::ZERO, &dest(10.0, 0.0), &[], &p);
        assert_abs_diff_eq!(c.vx, 0.5, epsilon = 1e-15);
        assert_eq!(c.vy, 0.0);
        let c = potential_command(Vec2::ZERO, &dest(0.4, 0.0), &[], &p);
        assert_abs_diff_eq!(c.vx, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn obstacle_pushes_away() {
        let p = NavParams::default();
        let obs = [Obstacle { center: Vec2::new(1.0, 0.2), radius: 0.3 }];
        let free = potential_command(Vec2::new(0.5, 0.0), &dest(2.0, 0.0), &[], &p);
        let pushed = potential_command(Vec2::new(0.5, 0.0), &dest(2.0, 0.0), &obs, &p);
        assert!(pushed.vy < free.vy);
        let far = [Obstacle { center: Vec2::new(5.0, 5.0), radius: 0.3 }];
        assert_eq!(potential_command(Vec2::new(0.5, 0.0), &dest(2.0, 0.0), &far, &p), free);
    }

    #[test]
    fn sitting_on_obstacle_center() {
        let p = NavParams::default();
        let obs = [Obstacle { center: Vec2::new(1.0, 1.0), radius: 0.3 }];
        let c = potential_command(Vec2::new(1.0, 1.0), &dest(1.0, 1.0), &obs, &p);
        assert_eq!(c, BmavCommand::new(p.v_max, 0.0));
    }

    #[test]
    fn reached_examples() {
        let d = Destination { point: Vec2::new(8.0, 4.0), accuracy: 0.4 };
        assert!(reached(Vec2::new(8.0, 4.0), &d));
        assert!(reached(Vec2::new(7.5, 4.0), &Destination { accuracy: 0.5, ..d }));
        assert!(!reached(Vec2::new(7.59, 4.0), &d));
    }

    proptest! {
        #[test]
        fn command_bounded_and_goal_directed(
            mx in 0.0f64..8.0, my in 0.0f64..8.0, dx in 0.0f64..8.0, dy in 0.0f64..8.0,
            gain in 0.01f64..2.0, vmax in 0.05f64..2.0,
        ) {
            let p = NavParams { attract_gain: gain, v_max: vmax, ..Default::default() };
            let m = Vec2::new(mx, my);
            let d = dest(dx, dy);
            let c = potential_command(m, &d, &[], &p);
            prop_assert!(c.speed() <= vmax * (1.0 + 1e-12));
            if m != d.point {
                prop_assert!(c.as_vec().dot(d.point - m) > 0.0);
            }
        }

        #[test]
        fn reached_monotone_in_accuracy(tx in 0.0f64..8.0, ty in 0.0f64..8.0, a1 in 0.01f64..3.0, extra in 0.0f64..3.0) {
            let t = Vec2::new(tx, ty);
            let d1 = Destination { point: Vec2::new(4.0, 4.0), accuracy: a1 };
            let d2 = Destination { accuracy: a1 + extra, ..d1 };
            prop_assert!(!reached(t, &d1) || reached(t, &d2));
        }
    }
}
