//! Ground-truth world evolution and strategy orchestration.
//!
//! Each step of `dt` seconds: refresh commands (and, under H-Swarm, groups
//! and AMAV plans) every `delta` steps, move BMAV truth with actuation noise,
//! dead-reckon the beliefs with the commanded velocity, move the AMAVs, fuse
//! every observation whose true target lies in a field of view, then log.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{correct, observe_ideal, predict, uncertainty, Belief, Observation};
use crate::geometry::{amav_step, bmav_step, in_fov, wrap, Arena, BmavCommand, FovParams, Pose, Vec2};
use crate::grouping::{assign_groups, GroupAssignment};
use crate::navigation::{potential_command, reached, Destination, NavParams, Obstacle};
use crate::noise::{
    derive_stream, sample_motion_noise, sample_observation_noise, tags, MotionNoiseParams, ObservationNoiseParams,
    RngStream,
};
use crate::planning::{ControlSetParams, Plan, Planner, PlannerConfig, PruneParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Grouped, planned mobile AMAVs.
    #[serde(rename = "hswarm")]
    HSwarm,
    /// AMAVs parked at fixed poses.
    Station,
    /// No AMAV observations at all.
    DeadReckoning,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::HSwarm, Strategy::Station, Strategy::DeadReckoning];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::HSwarm => "hswarm",
            Strategy::Station => "station",
            Strategy::DeadReckoning => "dead_reckoning",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What the BMAVs are trying to do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mission {
    /// Fly to a fixed destination each. `points` defaults to spreading them
    /// along the far and side edges of the arena.
    Destinations {
        #[serde(default)]
        points: Option<Vec<Vec2>>,
        #[serde(default = "default_accuracy")]
        accuracy: f64,
    },
    /// Roam between random waypoints drawn inside the arena with a `margin`.
    RandomWaypoints {
        #[serde(default = "default_margin")]
        margin: f64,
    },
}

fn default_accuracy() -> f64 {
    0.2
}

fn default_margin() -> f64 {
    0.5
}

impl Default for Mission {
    fn default() -> Self {
        Mission::Destinations { points: None, accuracy: default_accuracy() }
    }
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub arena: Arena,
    pub n_amav: usize,
    pub n_bmav: usize,
    /// Seconds.
    pub duration: f64,
    pub dt: f64,
    /// Steps between command, grouping and planning refreshes.
    pub delta: usize,
    pub fov: FovParams,
    pub motion_noise: MotionNoiseParams,
    pub observation_noise: ObservationNoiseParams,
    pub controls: ControlSetParams,
    pub prune: PruneParams,
    pub nav: NavParams,
    pub strategy: Strategy,
    pub mission: Mission,
    /// `None` places BMAVs on a small grid near the `(0, 0)` corner.
    pub bmav_starts: Option<Vec<Vec2>>,
    /// Initial AMAV poses under H-Swarm; `None` uses [`default_station_poses`].
    pub amav_starts: Option<Vec<Pose>>,
    /// Fixed AMAV poses under Station; `None` uses [`default_station_poses`].
    pub station_poses: Option<Vec<Pose>>,
    pub obstacles: Vec<Obstacle>,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            arena: Arena::default(),
            n_amav: 3,
            n_bmav: 9,
            duration: 420.0,
            dt: 1.0,
            delta: 5,
            fov: FovParams::default(),
            motion_noise: MotionNoiseParams::default(),
            observation_noise: ObservationNoiseParams::default(),
            controls: ControlSetParams::default(),
            prune: PruneParams::default(),
            nav: NavParams::default(),
            strategy: Strategy::HSwarm,
            mission: Mission::default(),
            bmav_starts: None,
            amav_starts: None,
            station_poses: None,
            obstacles: Vec::new(),
            master_seed: 1,
        }
    }
}

impl SimConfig {
    /// Every violated invariant, empty when the config is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut e = Vec::new();
        self.arena.validate(&mut e);
        if self.n_amav < 1 {
            e.push("n_amav must be >= 1".into());
        }
        if self.n_amav > 64 {
            e.push(format!("n_amav must be <= 64, got {}", self.n_amav));
        }
        if self.n_bmav < 1 {
            e.push("n_bmav must be >= 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            e.push(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            e.push(format!("duration must be >= dt, got {}", self.duration));
        }
        if self.delta < 1 {
            e.push("delta must be >= 1".into());
        }
        self.fov.validate(&mut e);
        self.motion_noise.validate(&mut e);
        self.observation_noise.validate(&mut e);
        self.controls.validate(&mut e);
        self.prune.validate(&mut e);
        self.nav.validate(&mut e);
        match &self.mission {
            Mission::Destinations { points, accuracy } => {
                if !(*accuracy > 0.0) {
                    e.push(format!("mission.accuracy must be > 0, got {accuracy}"));
                }
                if let Some(p) = points {
                    if p.len() != self.n_bmav {
                        e.push(format!("mission.points has {} entries, n_bmav is {}", p.len(), self.n_bmav));
                    }
                    if p.iter().any(|q| !self.arena.contains(*q)) {
                        e.push("mission.points must lie inside the arena".into());
                    }
                }
            }
            Mission::RandomWaypoints { margin } => {
                if !(*margin >= 0.0 && 2.0 * margin < self.arena.length.min(self.arena.width)) {
                    e.push(format!("mission.margin must be >= 0 and leave room inside the arena, got {margin}"));
                }
            }
        }
        if let Some(s) = &self.bmav_starts {
            if s.len() != self.n_bmav {
                e.push(format!("bmav_starts has {} entries, n_bmav is {}", s.len(), self.n_bmav));
            }
            if s.iter().any(|q| !self.arena.contains(*q)) {
                e.push("bmav_starts must lie inside the arena".into());
            }
        }
        for (name, poses) in [("amav_starts", &self.amav_starts), ("station_poses", &self.station_poses)] {
            if let Some(p) = poses {
                if p.len() != self.n_amav {
                    e.push(format!("{name} has {} entries, n_amav is {}", p.len(), self.n_amav));
                }
                if p.iter().any(|q| !self.arena.contains(q.position) || !q.heading.is_finite()) {
                    e.push(format!("{name} must lie inside the arena"));
                }
            }
        }
        for o in &self.obstacles {
            if !(o.radius > 0.0 && o.center.is_finite()) {
                e.push(format!("obstacle at {:?} needs a positive radius", o.center));
            }
        }
        e
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            delta: self.delta,
            controls: self.controls.clone(),
            prune: self.prune,
            fov: self.fov,
            motion_noise: self.motion_noise,
            observation_noise: self.observation_noise,
            arena: Some(self.arena),
            dt: self.dt,
        }
    }

    /// Resolved destinations, or `None` for roaming missions.
    pub fn destinations(&self) -> Option<Vec<Destination>> {
        match &self.mission {
            Mission::Destinations { points, accuracy } => {
                let pts = points.clone().unwrap_or_else(|| default_scenario(self.n_bmav, &self.arena).1);
                Some(pts.into_iter().map(|point| Destination { point, accuracy: *accuracy }).collect())
            }
            Mission::RandomWaypoints { .. } => None,
        }
    }

    pub fn resolved_bmav_starts(&self) -> Vec<Vec2> {
        self.bmav_starts.clone().unwrap_or_else(|| default_scenario(self.n_bmav, &self.arena).0)
    }
}

/// Start grid near the `(0.5, 0.5)` corner and destinations spread evenly
/// along the right (`x = L`) and top (`y = W`) edges.
pub fn default_scenario(n_bmav: usize, arena: &Arena) -> (Vec<Vec2>, Vec<Vec2>) {
    let cols = (n_bmav as f64).sqrt().ceil().max(1.0) as usize;
    let spacing = (0.9 / cols as f64).min(0.3);
    let half = (cols - 1) as f64 / 2.0;
    let center = Vec2::new(0.5f64.min(arena.length / 2.0), 0.5f64.min(arena.width / 2.0));
    let starts = (0..n_bmav)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            arena.clamp(center + Vec2::new((c as f64 - half) * spacing, (r as f64 - half) * spacing))
        })
        .collect();

    let (l, w) = (arena.length, arena.width);
    let perimeter = l + w;
    let dests = (0..n_bmav)
        .map(|k| {
            let s = (k + 1) as f64 * perimeter / (n_bmav + 1) as f64;
            if s <= w {
                Vec2::new(l, s)
            } else {
                Vec2::new(l - (s - w), w)
            }
        })
        .collect();
    (starts, dests)
}

/// Evenly spaced interior grid of poses, each facing the arena center.
pub fn default_station_poses(n: usize, arena: &Arena) -> Vec<Pose> {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols);
    let c = arena.center();
    (0..n)
        .map(|i| {
            let (r, k) = (i / cols, i % cols);
            let p = Vec2::new(
                (k as f64 + 0.5) * arena.length / cols as f64,
                (r as f64 + 0.5) * arena.width / rows as f64,
            );
            let d = c - p;
            let heading = if d.norm() > 0.0 { d.y.atan2(d.x) } else { 0.0 };
            Pose { position: p, heading: wrap(heading) }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmavRow {
    pub t: f64,
    pub id: usize,
    pub truth: Vec2,
    pub est: Vec2,
    pub trace_sigma: f64,
    /// Bitmask of AMAV indices that observed this BMAV during the step.
    pub observed_by: u64,
}

impl BmavRow {
    pub fn observers(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |j| self.observed_by & (1u64 << j) != 0)
    }

    pub fn error(&self) -> f64 {
        self.truth.dist(self.est)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmavRow {
    pub t: f64,
    pub id: usize,
    pub pose: Pose,
}

/// Per-timestep log of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub strategy: Strategy,
    pub n_bmav: usize,
    pub duration: f64,
    pub destinations: Option<Vec<Destination>>,
    /// Ordered by time, then BMAV id.
    pub bmav_rows: Vec<BmavRow>,
    pub amav_rows: Vec<AmavRow>,
    /// First time each BMAV's truth entered its destination tolerance.
    pub arrival_times: Vec<Option<f64>>,
    pub plan_invocations: usize,
}

impl TraceRecord {
    pub fn rows_for(&self, bmav: usize) -> impl Iterator<Item = &BmavRow> {
        self.bmav_rows.iter().filter(move |r| r.id == bmav)
    }
}

/// Mutable world state between steps.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub t: f64,
    pub amav_poses: Vec<Pose>,
    pub bmav_truth: Vec<Vec2>,
    pub beliefs: Vec<Belief>,
    pub commands: Vec<BmavCommand>,
    pub groups: Option<GroupAssignment>,
    pub plans: Vec<Plan>,
    pub plan_cursor: usize,
    pub arrived: Vec<Option<f64>>,
}

/// One configured run, with its random streams already derived.
pub struct Simulation {
    cfg: SimConfig,
    planner: Option<Planner>,
    destinations: Option<Vec<Destination>>,
    waypoints: Vec<Vec2>,
    motion_rngs: Vec<RngStream>,
    obs_rngs: Vec<RngStream>,
    mission_rngs: Vec<RngStream>,
    state: WorldState,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.master_seed;
        let n = cfg.n_bmav;
        let starts = cfg.resolved_bmav_starts();
        let amav_poses = match cfg.strategy {
            Strategy::HSwarm => cfg.amav_starts.clone().unwrap_or_else(|| default_station_poses(cfg.n_amav, &cfg.arena)),
            Strategy::Station => {
                cfg.station_poses.clone().unwrap_or_else(|| default_station_poses(cfg.n_amav, &cfg.arena))
            }
            Strategy::DeadReckoning => Vec::new(),
        };
        let planner = match cfg.strategy {
            Strategy::HSwarm => Some(Planner::new(cfg.planner_config())?),
            _ => None,
        };
        let mut mission_rngs: Vec<RngStream> = (0..n).map(|i| derive_stream(seed, i as u64, tags::MISSION)).collect();
        let waypoints = match &cfg.mission {
            Mission::RandomWaypoints { margin } => {
                mission_rngs.iter_mut().map(|r| draw_waypoint(r, &cfg.arena, *margin)).collect()
            }
            Mission::Destinations { .. } => Vec::new(),
        };
        let state = WorldState {
            t: 0.0,
            amav_poses,
            beliefs: starts.iter().map(|&p| Belief::certain(p)).collect(),
            bmav_truth: starts,
            commands: vec![BmavCommand::HOVER; n],
            groups: None,
            plans: Vec::new(),
            plan_cursor: 0,
            arrived: vec![None; n],
        };
        Ok(Self {
            destinations: cfg.destinations(),
            motion_rngs: (0..n).map(|i| derive_stream(seed, i as u64, tags::MOTION)).collect(),
            obs_rngs: (0..n).map(|i| derive_stream(seed, i as u64, tags::OBSERVATION)).collect(),
            mission_rngs,
            waypoints,
            planner,
            cfg,
            state,
        })
    }

    /// Replaces the actuation-noise stream of one BMAV.
    pub fn with_motion_stream(mut self, bmav: usize, rng: RngStream) -> Self {
        self.motion_rngs[bmav] = rng;
        self
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    fn refresh_commands(&mut self) {
        let cfg = &self.cfg;
        for i in 0..cfg.n_bmav {
            let mean = self.state.beliefs[i].mean;
            self.state.commands[i] = if self.state.arrived[i].is_some() {
                BmavCommand::HOVER
            } else if let Some(d) = &self.destinations {
                potential_command(mean, &d[i], &cfg.obstacles, &cfg.nav)
            } else {
                let Mission::RandomWaypoints { margin } = cfg.mission else { unreachable!() };
                while self.waypoints[i].dist(mean) <= cfg.nav.arrival_radius {
                    self.waypoints[i] = draw_waypoint(&mut self.mission_rngs[i], &cfg.arena, margin);
                }
                let goal = Destination { point: self.waypoints[i], accuracy: cfg.nav.arrival_radius };
                potential_command(mean, &goal, &cfg.obstacles, &cfg.nav)
            };
        }
    }

    fn replan(&mut self, timings: &mut Vec<f64>) -> Result<()> {
        let Some(planner) = &self.planner else { return Ok(()) };
        let positions: Vec<Vec2> = self.state.amav_poses.iter().map(|p| p.position).collect();
        let groups = assign_groups(&positions, &self.state.beliefs, self.state.t)?;
        let mut plans = Vec::with_capacity(positions.len());
        for (j, members) in groups.groups.iter().enumerate() {
            let beliefs: Vec<Belief> = members.iter().map(|&i| self.state.beliefs[i]).collect();
            let commands: Vec<BmavCommand> = members.iter().map(|&i| self.state.commands[i]).collect();
            let started = Instant::now();
            let plan = planner.plan(self.state.amav_poses[j], &beliefs, &commands)?;
            timings.push(started.elapsed().as_secs_f64() * 1e3);
            plans.push(plan);
        }
        self.state.groups = Some(groups);
        self.state.plans = plans;
        self.state.plan_cursor = 0;
        Ok(())
    }

    /// Runs to the configured duration. Returns the trace and the wall-clock
    /// duration (ms) of every planner invocation.
    #[allow(clippy::needless_range_loop)]
    pub fn run(mut self) -> Result<(TraceRecord, Vec<f64>)> {
        let cfg = self.cfg.clone();
        let dt = cfg.dt;
        let steps = cfg.steps();
        let n = cfg.n_bmav;
        let mut timings = Vec::new();
        let mut bmav_rows = Vec::with_capacity(steps * n);
        let mut amav_rows = Vec::with_capacity(steps * self.state.amav_poses.len());
        let mut plan_invocations = 0;

        for k in 0..steps {
            if k % cfg.delta == 0 {
                self.refresh_commands();
                if self.planner.is_some() {
                    self.replan(&mut timings)?;
                    plan_invocations += self.state.plans.len();
                }
            }

            let st = &mut self.state;
            for i in 0..n {
                let noise = sample_motion_noise(st.commands[i], &cfg.motion_noise, &mut self.motion_rngs[i]);
                st.bmav_truth[i] = bmav_step(st.bmav_truth[i], st.commands[i], noise, dt, &cfg.arena);
                st.beliefs[i] = predict(&st.beliefs[i], st.commands[i], dt, &cfg.motion_noise);
            }

            if cfg.strategy == Strategy::HSwarm {
                for (pose, plan) in st.amav_poses.iter_mut().zip(&st.plans) {
                    *pose = amav_step(*pose, plan.controls[st.plan_cursor], dt);
                }
                st.plan_cursor += 1;
            }

            let mut observed = vec![0u64; n];
            for (j, &pose) in st.amav_poses.iter().enumerate() {
                for i in 0..n {
                    let truth = st.bmav_truth[i];
                    if !in_fov(pose, truth, &cfg.fov) {
                        continue;
                    }
                    let ideal = observe_ideal(pose, truth)?;
                    let (nr, na) =
                        sample_observation_noise(ideal.range, ideal.bearing, &cfg.observation_noise, &mut self.obs_rngs[i])?;
                    let z = Observation { range: (ideal.range + nr).max(f64::MIN_POSITIVE), bearing: wrap(ideal.bearing + na) };
                    // degenerate geometry or a singular innovation: keep the prior
                    if let Ok(post) = correct(&st.beliefs[i], z, pose, &cfg.observation_noise) {
                        st.beliefs[i] = post;
                        observed[i] |= 1 << j;
                    }
                }
            }

            st.t = (k + 1) as f64 * dt;
            if let Some(dests) = &self.destinations {
                for i in 0..n {
                    if st.arrived[i].is_none() && reached(st.bmav_truth[i], &dests[i]) {
                        st.arrived[i] = Some(st.t);
                        st.commands[i] = BmavCommand::HOVER;
                    }
                }
            }

            for i in 0..n {
                bmav_rows.push(BmavRow {
                    t: st.t,
                    id: i,
                    truth: st.bmav_truth[i],
                    est: st.beliefs[i].mean,
                    trace_sigma: uncertainty(&st.beliefs[i]),
                    observed_by: observed[i],
                });
            }
            for (j, &pose) in st.amav_poses.iter().enumerate() {
                amav_rows.push(AmavRow { t: st.t, id: j, pose });
            }
        }

        let record = TraceRecord {
            strategy: cfg.strategy,
            n_bmav: n,
            duration: cfg.duration,
            destinations: self.destinations.clone(),
            bmav_rows,
            amav_rows,
            arrival_times: self.state.arrived.clone(),
            plan_invocations,
        };
        Ok((record, timings))
    }
}

fn draw_waypoint(rng: &mut RngStream, arena: &Arena, margin: f64) -> Vec2 {
    Vec2::new(rng.uniform(margin, arena.length - margin), rng.uniform(margin, arena.width - margin))
}

/// Runs one configuration to completion.
pub fn run_simulation(cfg: &SimConfig) -> Result<TraceRecord> {
    Ok(Simulation::new(cfg.clone())?.run()?.0)
}

/// Same as [`run_simulation`], also returning per-invocation planner wall-clock (ms).
pub fn run_simulation_timed(cfg: &SimConfig) -> Result<(TraceRecord, Vec<f64>)> {
    Simulation::new(cfg.clone())?.run()
}
