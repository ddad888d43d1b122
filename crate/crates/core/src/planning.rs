//! Non-myopic AMAV scheduling by level-wise search over discretized unicycle
//! controls.
//!
//! Every tree node carries the AMAV pose and the predicted beliefs of the
//! BMAVs it serves. A level is expanded from the nodes reserved on the level
//! above; the new level is then pruned: nodes are visited in ascending
//! score order and a node is dropped when it lies close (σ-crossing) to an
//! already reserved node whose covariances it dominates up to `ε·I`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{expected_correction, predict, uncertainty, Belief};
use crate::geometry::{amav_step, in_fov, wrap, AmavControl, Arena, BmavCommand, FovParams, Pose};
use crate::linalg::{self, Mat2};
use crate::noise::{MotionNoiseParams, ObservationNoiseParams};

/// Motion primitives: every speed is paired with every turn rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSetParams {
    pub speeds: Vec<f64>,
    pub turn_rates: Vec<f64>,
}

impl Default for ControlSetParams {
    fn default() -> Self {
        Self { speeds: vec![0.0, 1.0, 3.0], turn_rates: vec![0.0, 1.0, -1.0, 3.0, -3.0] }
    }
}

impl ControlSetParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if self.speeds.is_empty() {
            errors.push("controls.speeds must not be empty".into());
        }
        if self.turn_rates.is_empty() {
            errors.push("controls.turn_rates must not be empty".into());
        }
        if self.speeds.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            errors.push("controls.speeds must be finite and >= 0".into());
        }
        if self.turn_rates.iter().any(|w| !w.is_finite()) {
            errors.push("controls.turn_rates must be finite".into());
        }
    }
}

/// Pruning thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PruneParams {
    /// Slack `ε` (m²) added to the candidate covariance before the dominance test.
    pub epsilon: f64,
    /// Crossing radius `σ` (m).
    pub sigma: f64,
    /// Meters charged per radian of heading difference in the trajectory distance.
    pub heading_scale: f64,
    pub psd_tolerance: f64,
}

impl Default for PruneParams {
    fn default() -> Self {
        Self { epsilon: 1.0, sigma: 10.0, heading_scale: 1.0, psd_tolerance: 1e-9 }
    }
}

impl PruneParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            errors.push(format!("prune.epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            errors.push(format!("prune.sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.heading_scale >= 0.0 && self.heading_scale.is_finite()) {
            errors.push(format!("prune.heading_scale must be >= 0, got {}", self.heading_scale));
        }
        if !(self.psd_tolerance >= 0.0 && self.psd_tolerance.is_finite()) {
            errors.push(format!("prune.psd_tolerance must be >= 0, got {}", self.psd_tolerance));
        }
    }
}

/// One node of the search tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub pose: Pose,
    /// Predicted beliefs of the served BMAVs, in group order.
    pub beliefs: Vec<Belief>,
    pub depth: usize,
    pub controls_from_root: Vec<AmavControl>,
    /// Sum of belief covariance traces.
    pub score: f64,
}

impl SearchNode {
    pub fn root(pose: Pose, beliefs: Vec<Belief>) -> Self {
        let score = beliefs.iter().map(uncertainty).sum();
        Self { pose, beliefs, depth: 0, controls_from_root: Vec::new(), score }
    }

    fn covariances(&self) -> impl Iterator<Item = &Mat2> {
        self.beliefs.iter().map(|b| &b.cov)
    }
}

/// A `δ`-step control schedule for one AMAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub controls: Vec<AmavControl>,
    pub predicted_terminal_score: f64,
    pub stats: PlanStats,
}

/// Tree size bookkeeping, one entry per level `1..=δ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanStats {
    pub generated_per_level: Vec<usize>,
    pub reserved_per_level: Vec<usize>,
}

impl PlanStats {
    pub fn total_generated(&self) -> usize {
        self.generated_per_level.iter().sum()
    }
}

/// Cartesian product of speeds and turn rates, speed-major.
pub fn enumerate_controls(params: &ControlSetParams) -> Vec<AmavControl> {
    params
        .speeds
        .iter()
        .flat_map(|&u| params.turn_rates.iter().map(move |&omega| AmavControl { u, omega }))
        .collect()
}

/// Child of `n` under control `c`: move the AMAV one second, predict every
/// served belief with its command, then contract the covariance of each
/// belief whose predicted mean falls inside the new field of view.
pub fn expand_node(
    n: &SearchNode,
    c: AmavControl,
    group_commands: &[BmavCommand],
    fov: &FovParams,
    mnoise: &MotionNoiseParams,
    onoise: &ObservationNoiseParams,
) -> SearchNode {
    expand_node_dt(n, c, group_commands, fov, mnoise, onoise, 1.0)
}

pub(crate) fn expand_node_dt(
    n: &SearchNode,
    c: AmavControl,
    group_commands: &[BmavCommand],
    fov: &FovParams,
    mnoise: &MotionNoiseParams,
    onoise: &ObservationNoiseParams,
    dt: f64,
) -> SearchNode {
    debug_assert_eq!(n.beliefs.len(), group_commands.len());
    let pose = amav_step(n.pose, c, dt);
    let beliefs: Vec<Belief> = n
        .beliefs
        .iter()
        .zip(group_commands)
        .map(|(b, &v)| {
            let prior = predict(b, v, dt, mnoise);
            if in_fov(pose, prior.mean, fov) {
                expected_correction(&prior, pose, onoise).unwrap_or(prior)
            } else {
                prior
            }
        })
        .collect();
    let score = beliefs.iter().map(uncertainty).sum();
    let mut controls_from_root = Vec::with_capacity(n.controls_from_root.len() + 1);
    controls_from_root.extend_from_slice(&n.controls_from_root);
    controls_from_root.push(c);
    SearchNode { pose, beliefs, depth: n.depth + 1, controls_from_root, score }
}

/// `ε`-algebraic redundancy with the mixing weight placed on a single
/// reserved element: true iff some `reserved[k]` satisfies
/// `candidate + ε·I ⪰ reserved[k]` block by block.
///
/// Each entry is the list of per-BMAV 2×2 blocks of a block-diagonal covariance.
pub fn is_eps_redundant(candidate: &[Mat2], reserved: &[&[Mat2]], epsilon: f64, psd_tolerance: f64) -> Result<bool> {
    let asym = |m: &Mat2| !linalg::is_symmetric(m, 1e-12);
    if candidate.iter().any(asym) || reserved.iter().flat_map(|r| r.iter()).any(asym) {
        return Err(Error::InvalidArgument("covariance blocks must be symmetric".into()));
    }
    if reserved.iter().any(|r| r.len() != candidate.len()) {
        return Err(Error::InvalidArgument("covariance block counts differ".into()));
    }
    Ok(reserved.iter().any(|r| dominates(candidate.iter(), r.iter(), epsilon, psd_tolerance)))
}

fn dominates<'a>(
    candidate: impl Iterator<Item = &'a Mat2>,
    other: impl Iterator<Item = &'a Mat2>,
    epsilon: f64,
    tol: f64,
) -> bool {
    let slack = Mat2::identity() * epsilon;
    candidate.zip(other).all(|(c, o)| linalg::is_psd(&(c + slack - o), tol))
}

/// Positional trajectory distance at one level: true iff within `sigma`.
pub fn sigma_crosses(a: Pose, b: Pose, sigma: f64) -> bool {
    a.position.dist(b.position) <= sigma
}

/// Trajectory distance used by the planner: position gap plus
/// `heading_scale` meters per radian of heading gap.
pub fn trajectory_distance(a: Pose, b: Pose, heading_scale: f64) -> f64 {
    let dp = a.position.dist(b.position);
    if heading_scale == 0.0 {
        return dp;
    }
    dp + heading_scale * wrap(a.heading - b.heading).abs()
}

/// Everything the planner needs besides the start state.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub delta: usize,
    pub controls: ControlSetParams,
    pub prune: PruneParams,
    pub fov: FovParams,
    pub motion_noise: MotionNoiseParams,
    pub observation_noise: ObservationNoiseParams,
    /// Children leaving the arena are discarded when set.
    pub arena: Option<Arena>,
    /// Duration of one tree level in seconds.
    pub dt: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            delta: 5,
            controls: ControlSetParams::default(),
            prune: PruneParams::default(),
            fov: FovParams::default(),
            motion_noise: MotionNoiseParams::default(),
            observation_noise: ObservationNoiseParams::default(),
            arena: Some(Arena::default()),
            dt: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planner {
    config: PlannerConfig,
    controls: Vec<AmavControl>,
}

/// Secondary ordering for nodes whose scores are exactly equal: distance to
/// the most uncertain served BMAV plus the heading offset towards it. Without
/// it, levels where nothing is observed collapse onto the first control.
fn approach_cost(n: &SearchNode) -> f64 {
    let mut target = None;
    let mut worst = f64::NEG_INFINITY;
    for b in &n.beliefs {
        let u = uncertainty(b);
        if u > worst {
            worst = u;
            target = Some(b.mean);
        }
    }
    let Some(t) = target else { return 0.0 };
    let d = t - n.pose.position;
    let r = d.norm();
    if r == 0.0 {
        return 0.0;
    }
    r + 0.5 * wrap(d.y.atan2(d.x) - n.pose.heading).abs()
}

struct Ranked {
    node: SearchNode,
    tie: f64,
    order: usize,
}

fn rank(nodes: Vec<SearchNode>) -> Vec<Ranked> {
    let mut ranked: Vec<Ranked> = nodes
        .into_iter()
        .enumerate()
        .map(|(order, node)| Ranked { tie: approach_cost(&node), node, order })
        .collect();
    ranked.sort_by(|a, b| {
        a.node
            .score
            .total_cmp(&b.node.score)
            .then(a.tie.total_cmp(&b.tie))
            .then(a.order.cmp(&b.order))
    });
    ranked
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        let mut errors = Vec::new();
        if config.delta == 0 {
            errors.push("delta must be >= 1".to_string());
        }
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            errors.push(format!("planner dt must be > 0, got {}", config.dt));
        }
        config.controls.validate(&mut errors);
        config.prune.validate(&mut errors);
        config.fov.validate(&mut errors);
        config.motion_noise.validate(&mut errors);
        config.observation_noise.validate(&mut errors);
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let controls = enumerate_controls(&config.controls);
        Ok(Self { config, controls })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn controls(&self) -> &[AmavControl] {
        &self.controls
    }

    fn hover_plan(&self) -> Plan {
        Plan {
            controls: vec![AmavControl::HOVER; self.config.delta],
            predicted_terminal_score: 0.0,
            stats: PlanStats::default(),
        }
    }

    fn check_inputs(&self, group: &[Belief], commands: &[BmavCommand]) -> Result<()> {
        if group.len() != commands.len() {
            return Err(Error::InvalidArgument(format!(
                "{} beliefs but {} commands",
                group.len(),
                commands.len()
            )));
        }
        Ok(())
    }

    fn children(&self, parent: &SearchNode, commands: &[BmavCommand], out: &mut Vec<SearchNode>) {
        let c = &self.config;
        for &u in &self.controls {
            let child = expand_node_dt(parent, u, commands, &c.fov, &c.motion_noise, &c.observation_noise, c.dt);
            if c.arena.is_none_or(|a| a.contains(child.pose.position)) {
                out.push(child);
            }
        }
    }

    /// Keeps the nodes of one level that survive pruning, in visit order.
    fn prune_level(&self, level: Vec<SearchNode>) -> Vec<SearchNode> {
        let p = &self.config.prune;
        let mut reserved: Vec<SearchNode> = Vec::new();
        for Ranked { node, .. } in rank(level) {
            let redundant = reserved.iter().any(|r| {
                trajectory_distance(node.pose, r.pose, p.heading_scale) <= p.sigma
                    && dominates(node.covariances(), r.covariances(), p.epsilon, p.psd_tolerance)
            });
            if !redundant {
                reserved.push(node);
            }
        }
        reserved
    }

    /// Pruned search from `start` over `delta` levels; returns the controls
    /// leading to the lowest-score leaf.
    pub fn plan(&self, start: Pose, group: &[Belief], commands: &[BmavCommand]) -> Result<Plan> {
        self.check_inputs(group, commands)?;
        if group.is_empty() {
            return Ok(self.hover_plan());
        }
        let mut stats = PlanStats::default();
        let mut frontier = vec![SearchNode::root(start, group.to_vec())];
        for _ in 0..self.config.delta {
            let mut level = Vec::with_capacity(frontier.len() * self.controls.len());
            for parent in &frontier {
                self.children(parent, commands, &mut level);
            }
            stats.generated_per_level.push(level.len());
            frontier = self.prune_level(level);
            stats.reserved_per_level.push(frontier.len());
        }
        // prune_level returns nodes in ascending (score, tie) order
        let best = frontier.into_iter().next().expect("hover child always stays inside the arena");
        Ok(Plan { controls: best.controls_from_root, predicted_terminal_score: best.score, stats })
    }

    /// Unpruned depth-first enumeration of every control sequence. Reference
    /// search for checking the pruned planner; cost grows as `|U|^δ`.
    pub fn exhaustive(&self, start: Pose, group: &[Belief], commands: &[BmavCommand]) -> Result<Plan> {
        self.check_inputs(group, commands)?;
        if group.is_empty() {
            return Ok(self.hover_plan());
        }
        let mut stats = PlanStats {
            generated_per_level: vec![0; self.config.delta],
            reserved_per_level: vec![0; self.config.delta],
        };
        let mut best: Option<SearchNode> = None;
        let mut stack = vec![SearchNode::root(start, group.to_vec())];
        let mut kids = Vec::new();
        while let Some(node) = stack.pop() {
            if node.depth == self.config.delta {
                if best.as_ref().is_none_or(|b| node.score < b.score) {
                    best = Some(node);
                }
                continue;
            }
            kids.clear();
            self.children(&node, commands, &mut kids);
            stats.generated_per_level[node.depth] += kids.len();
            stats.reserved_per_level[node.depth] += kids.len();
            stack.extend(kids.drain(..).rev());
        }
        let best = best.expect("hover child always stays inside the arena");
        Ok(Plan { controls: best.controls_from_root, predicted_terminal_score: best.score, stats })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(delta: usize) -> PlannerConfig {
        PlannerConfig { delta, ..Default::default() }
    }

    #[test]
    fn control_enumeration() {
        assert_eq!(enumerate_controls(&ControlSetParams::default()).len(), 15);
        let one = ControlSetParams { speeds: vec![0.0], turn_rates: vec![0.0] };
        assert_eq!(enumerate_controls(&one), vec![AmavControl::HOVER]);
        let p = ControlSetParams { speeds: vec![1.0, 2.0], turn_rates: vec![0.0, 1.0] };
        let got: Vec<(f64, f64)> = enumerate_controls(&p).iter().map(|c| (c.u, c.omega)).collect();
        assert_eq!(got, vec![(1.0, 0.0), (1.0, 1.0), (2.0, 0.0), (2.0, 1.0)]);
    }

    #[test]
    fn redundancy_examples() {
        let i = Mat2::identity();
        assert!(is_eps_redundant(&[i], &[&[i]], 0.0, 1e-9).unwrap());
        assert!(!is_eps_redundant(&[i * 0.5], &[&[i]], 0.1, 1e-9).unwrap());
        assert!(is_eps_redundant(&[i * 2.0], &[&[i]], 0.0, 1e-9).unwrap());
        assert!(!is_eps_redundant(&[i], &[], 5.0, 1e-9).unwrap());
        let bad = Mat2::new(1.0, 0.5, 0.0, 1.0);
        assert!(is_eps_redundant(&[bad], &[&[i]], 0.0, 1e-9).is_err());
        // every block has to dominate
        assert!(!is_eps_redundant(&[i * 2.0, i * 0.5], &[&[i, i]], 0.0, 1e-9).unwrap());
    }

    #[test]
    fn crossing_examples() {
        let a = Pose::new(0.0, 0.0, 0.0);
        assert!(sigma_crosses(a, Pose::new(5.0, 0.0, 1.0), 10.0));
        assert!(!sigma_crosses(a, Pose::new(15.0, 0.0, 0.0), 10.0));
        assert!(sigma_crosses(a, a, 0.0));
        assert_eq!(trajectory_distance(a, Pose::new(3.0, 4.0, 0.5), 0.0), 5.0);
        assert_abs_diff_eq!(trajectory_distance(a, Pose::new(3.0, 4.0, 0.5), 2.0), 6.0);
    }

    #[test]
    fn empty_group_hovers() {
        let planner = Planner::new(cfg(5)).unwrap();
        let plan = planner.plan(Pose::new(4.0, 4.0, 0.0), &[], &[]).unwrap();
        assert_eq!(plan.controls, vec![AmavControl::HOVER; 5]);
        assert_eq!(plan.predicted_terminal_score, 0.0);
    }

    #[test]
    fn mismatched_commands_rejected() {
        let planner = Planner::new(cfg(2)).unwrap();
        let b = [Belief::certain(Vec2::new(1.0, 1.0))];
        assert!(planner.plan(Pose::default(), &b, &[]).is_err());
    }

    #[test]
    fn invalid_config_lists_all_problems() {
        let mut c = cfg(0);
        c.prune.epsilon = -1.0;
        c.controls.speeds.clear();
        match Planner::new(c) {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prediction_only_child_adds_process_noise() {
        let c = PlannerConfig::default();
        let root = SearchNode::root(
            Pose::new(1.0, 1.0, 0.0),
            vec![Belief::certain(Vec2::new(6.0, 6.0)), Belief::new(Vec2::new(7.0, 2.0), Mat2::identity())],
        );
        let cmds = [BmavCommand::new(0.3, 0.0), BmavCommand::HOVER];
        let child = expand_node(&root, AmavControl::HOVER, &cmds, &c.fov, &c.motion_noise, &c.observation_noise);
        // σ = (0.06, 0.01) and (0.01, 0.01)
        let q = 0.06f64.powi(2) + 3.0 * 0.01f64.powi(2);
        assert_abs_diff_eq!(child.score, root.score + q, epsilon = 1e-15);
        assert_eq!(child.depth, 1);
        assert_eq!(child.controls_from_root, vec![AmavControl::HOVER]);
        assert!(child.score > root.score);
    }

    #[test]
    fn capture_contracts_covariance() {
        let c = PlannerConfig::default();
        let root = SearchNode::root(Pose::new(0.0, 0.0, 0.0), vec![Belief::new(Vec2::new(0.5, 0.0), Mat2::identity())]);
        let child = expand_node(&root, AmavControl::HOVER, &[BmavCommand::HOVER], &c.fov, &c.motion_noise, &c.observation_noise);
        let predicted_only = 2.0 + 2.0 * 0.01f64.powi(2);
        assert!(child.score < predicted_only);
        assert_eq!(child.beliefs[0].mean, Vec2::new(0.5, 0.0));
    }

    #[test]
    fn min_node_survives_pruning() {
        let planner = Planner::new(PlannerConfig { delta: 1, ..Default::default() }).unwrap();
        let group = [Belief::new(Vec2::new(4.6, 4.0), Mat2::identity() * 0.5)];
        let plan = planner.plan(Pose::new(4.0, 4.0, 0.0), &group, &[BmavCommand::HOVER]).unwrap();
        let ex = planner.exhaustive(Pose::new(4.0, 4.0, 0.0), &group, &[BmavCommand::HOVER]).unwrap();
        assert_eq!(plan.predicted_terminal_score, ex.predicted_terminal_score);
    }

    #[test]
    fn equal_scores_move_towards_uncertain_bmav() {
        let planner = Planner::new(cfg(1)).unwrap();
        let group = [Belief::new(Vec2::new(7.0, 4.0), Mat2::identity())];
        let plan = planner.plan(Pose::new(1.0, 4.0, 0.0), &group, &[BmavCommand::HOVER]).unwrap();
        assert_eq!(plan.controls[0].u, 3.0);
        assert_eq!(plan.controls[0].omega, 0.0);
    }

    #[test]
    fn children_outside_arena_are_dropped() {
        let planner = Planner::new(cfg(1)).unwrap();
        let group = [Belief::new(Vec2::new(4.0, 4.0), Mat2::identity())];
        let plan = planner.plan(Pose::new(7.5, 4.0, 0.0), &group, &[BmavCommand::HOVER]).unwrap();
        // speeds 1 and 3 along +x leave the 8 m arena: only the 5 hover children remain
        assert_eq!(plan.stats.generated_per_level, vec![5]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn plan_is_well_formed(
            ax in 0.0f64..8.0, ay in 0.0f64..8.0, ah in -3.0f64..3.0,
            bx in 0.0f64..8.0, by in 0.0f64..8.0, var in 0.0f64..2.0,
            vx in -0.3f64..0.3, vy in -0.3f64..0.3,
        ) {
            let planner = Planner::new(cfg(3)).unwrap();
            let group = [Belief::new(Vec2::new(bx, by), Mat2::identity() * var)];
            let plan = planner.plan(Pose::new(ax, ay, ah), &group, &[BmavCommand::new(vx, vy)]).unwrap();
            prop_assert_eq!(plan.controls.len(), 3);
            for c in &plan.controls {
                prop_assert!(planner.controls().contains(c));
            }
            let ex = planner.exhaustive(Pose::new(ax, ay, ah), &group, &[BmavCommand::new(vx, vy)]).unwrap();
            prop_assert!(plan.predicted_terminal_score >= ex.predicted_terminal_score - 1e-12);
        }
    }
}
