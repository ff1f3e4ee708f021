use crate::esm::Manifold;
use crate::track::{FrenetPose, Track};
use crate::vehicle::{
    integrate_kinematics, rollout_dynamics, ControlInput, DynamicState, ForceModel, FullState, Pose, TireParams,
    VehicleParams,
};

use super::config::PlannerConfig;
use super::heuristic::heuristic;
use super::node::{discretize, ExpansionMode, MotionPrimitive, Node};

/// Per-rule counts of discarded candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneCounts {
    /// ESM query outside the manifold.
    pub out_of_domain: usize,
    /// `beta * psidot > 0` beyond the margin.
    pub same_sign: usize,
    /// Speed change of at least `a_max * t_s`.
    pub speed_jump: usize,
    /// Endpoint faster than the top speed.
    pub over_speed: usize,
    /// Bicycle rollout leaving the bicycle region.
    pub outside_bicycle_region: usize,
    /// Rollout failed inside the vehicle model (e.g. speed below the guard).
    pub model: usize,
    pub collision: usize,
}

impl PruneCounts {
    pub fn total(&self) -> usize {
        self.out_of_domain
            + self.same_sign
            + self.speed_jump
            + self.over_speed
            + self.outside_bicycle_region
            + self.model
            + self.collision
    }

    pub fn add(&mut self, o: &PruneCounts) {
        self.out_of_domain += o.out_of_domain;
        self.same_sign += o.same_sign;
        self.speed_jump += o.speed_jump;
        self.over_speed += o.over_speed;
        self.outside_bicycle_region += o.outside_bicycle_region;
        self.model += o.model;
        self.collision += o.collision;
    }
}

/// Projection of every sample of a primitive and whether any leaves the
/// safe band `|d| <= d_safe`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionResult {
    pub collides: bool,
    /// Projections up to the first colliding or unprojectable sample.
    pub frenet: Vec<FrenetPose>,
}

/// Point-mass collision test of sampled poses against the road.
///
/// Each sample is projected with the previous sample's `s` as hint. A sample
/// that cannot be projected counts as a collision.
pub fn collision_check(poses: &[Pose], track: &Track, d_safe: f64, hint_s: Option<f64>, window: f64) -> CollisionResult {
    let mut frenet = Vec::with_capacity(poses.len());
    let mut hint = hint_s;
    for p in poses {
        match track.to_frenet_windowed(p, hint, window) {
            Ok(fp) if fp.d.abs() <= d_safe => {
                hint = Some(fp.s);
                frenet.push(fp);
            }
            Ok(fp) => {
                frenet.push(fp);
                return CollisionResult { collides: true, frenet };
            }
            Err(_) => return CollisionResult { collides: true, frenet },
        }
    }
    CollisionResult { collides: false, frenet }
}

/// Everything a search needs, borrowed.
#[derive(Debug, Clone, Copy)]
pub struct PlanningContext<'a> {
    pub track: &'a Track,
    pub manifold: Option<&'a Manifold>,
    pub params: &'a VehicleParams,
    pub tires: &'a TireParams,
    pub config: &'a PlannerConfig,
}

/// Children of one node and the candidates dropped on the way.
#[derive(Debug, Clone, Default)]
pub struct Expansion {
    pub children: Vec<Node>,
    pub primitives: Vec<MotionPrimitive>,
    pub pruned: PruneCounts,
}

/// A candidate endpoint before rollout.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Action {
    Esm { target: DynamicState, input: ControlInput },
    Bicycle { input: ControlInput },
}

impl<'a> PlanningContext<'a> {
    pub fn a_max(&self) -> f64 {
        self.config.a_max.unwrap_or(self.params.a_max)
    }

    pub fn d_safe(&self) -> f64 {
        self.config.d_safe(self.track.width())
    }

    pub fn in_bicycle_region(&self, d: &DynamicState) -> bool {
        d.beta.abs() < self.config.beta_lin && d.psidot.abs() < self.config.psidot_lin
    }

    /// Dynamic-state samples of a primitive from `start`.
    fn dynamics(&self, start: &DynamicState, action: &Action) -> Option<(Vec<DynamicState>, ExpansionMode, ControlInput)> {
        let n = self.config.samples_per_primitive;
        match *action {
            Action::Esm { target, input } => {
                let mut d: Vec<DynamicState> = (0..=n).map(|i| start.lerp(&target, i as f64 / n as f64)).collect();
                d[n] = target;
                Some((d, ExpansionMode::Esm, input))
            }
            Action::Bicycle { input } => {
                let roll = |input: &ControlInput| {
                    rollout_dynamics(*start, input, ForceModel::Bicycle, self.params, self.tires, self.config.dt(), n, 1)
                        .ok()
                };
                let d = roll(&input)?;
                let (v0, v1, v_max) = (start.v, d[n].v, self.params.v_max);
                if v1 <= v_max || input.lambda <= 0.0 || v0 >= v_max || v1 <= v0 {
                    return Some((d, ExpansionMode::Bicycle, input));
                }
                // drive slip scaled to end just below the top speed
                let target = v_max - 1e-9 * v_max;
                let capped = ControlInput::new(input.delta, input.lambda * (target - v0) / (v1 - v0));
                let d = roll(&capped)?;
                Some((d, ExpansionMode::Bicycle, capped))
            }
        }
    }

    /// Candidate actions from `state`, with rule-based pruning applied.
    pub(crate) fn actions(&self, state: &DynamicState, pruned: &mut PruneCounts) -> Vec<Action> {
        let mut out = Vec::new();
        let a_lim = self.a_max() * self.config.t_s;
        if self.config.esm_enabled {
            if let Some(m) = self.manifold {
                for (db, dw) in self.config.sampling.offsets() {
                    let (beta, psidot) = (state.beta + db, state.psidot + dw);
                    if beta * psidot > 0.0 && beta.abs() >= self.config.same_sign_beta_margin {
                        pruned.same_sign += 1;
                        continue;
                    }
                    let Ok(q) = m.query(beta, psidot) else {
                        pruned.out_of_domain += 1;
                        continue;
                    };
                    if q.v > self.params.v_max {
                        pruned.over_speed += 1;
                        continue;
                    }
                    if (q.v - state.v).abs() >= a_lim {
                        pruned.speed_jump += 1;
                        continue;
                    }
                    out.push(Action::Esm {
                        target: DynamicState::new(q.v, beta, psidot),
                        input: ControlInput::new(q.delta, q.lambda),
                    });
                }
            }
        }
        if self.config.bicycle_enabled && self.in_bicycle_region(state) {
            for &lambda in &self.config.bicycle.lambdas() {
                for &delta in &self.config.bicycle.deltas() {
                    out.push(Action::Bicycle {
                        input: ControlInput::new(delta, lambda),
                    });
                }
            }
        }
        out
    }

    /// Rolls out and checks one action; `None` when it is pruned.
    pub(crate) fn try_action(
        &self,
        start: &FullState,
        start_track_s: f64,
        action: &Action,
        pruned: &mut PruneCounts,
    ) -> Option<MotionPrimitive> {
        let Some((dyns, mode, input)) = self.dynamics(&start.dyn_state, action) else {
            pruned.model += 1;
            return None;
        };
        let end = *dyns.last().unwrap();
        if mode == ExpansionMode::Bicycle {
            if !self.in_bicycle_region(&end) {
                pruned.outside_bicycle_region += 1;
                return None;
            }
            if end.v > self.params.v_max {
                pruned.over_speed += 1;
                return None;
            }
            if (end.v - start.dyn_state.v).abs() >= self.a_max() * self.config.t_s {
                pruned.speed_jump += 1;
                return None;
            }
        }
        let poses = integrate_kinematics(start.pose, &dyns, self.config.dt());
        // most collisions are visible at the endpoint alone
        let end_pose = poses.last().unwrap();
        let end_ok = self
            .track
            .to_frenet_windowed(end_pose, Some(start_track_s), self.config.projection_window)
            .is_ok_and(|fp| fp.d.abs() <= self.d_safe());
        if !end_ok {
            pruned.collision += 1;
            return None;
        }
        let c = collision_check(&poses, self.track, self.d_safe(), Some(start_track_s), self.config.projection_window);
        if c.collides {
            pruned.collision += 1;
            return None;
        }
        let samples = poses.into_iter().zip(dyns).map(|(p, d)| FullState::new(p, d)).collect();
        Some(MotionPrimitive {
            samples,
            frenet: c.frenet,
            end,
            input,
            mode,
        })
    }

    /// Generates all surviving children of `node`.
    ///
    /// `h` and `f` of each child include the sibling term computed from the
    /// number of surviving children.
    pub fn expand(&self, node: &Node, node_index: Option<usize>) -> Expansion {
        let mut exp = Expansion::default();
        let steps = self.config.grid.as_array();
        for action in self.actions(&node.state.dyn_state, &mut exp.pruned) {
            let Some(prim) = self.try_action(&node.state, node.track_s, &action, &mut exp.pruned) else {
                continue;
            };
            let last = *prim.samples.last().unwrap();
            let end_fp = *prim.frenet.last().unwrap();
            let s = node.frenet.s + self.track.progress(node.track_s, end_fp.s);
            let (cell, remainder) = discretize(&last, &steps);
            exp.children.push(Node {
                cell,
                remainder,
                parent_cell: Some(node.cell),
                parent: node_index,
                state: last,
                input: prim.input,
                mode: prim.mode,
                frenet: FrenetPose::new(s, end_fp.d),
                track_s: end_fp.s,
                g: node.g + (s - node.frenet.s),
                h: 0.0,
                f: 0.0,
                k: node.k + 1,
                sibling_count: 0,
            });
            exp.primitives.push(prim);
        }
        let siblings = exp.children.len();
        for child in &mut exp.children {
            child.sibling_count = siblings;
            child.h = heuristic(child, Some(&node.state.dyn_state), self.params.v_max, self.a_max(), self.d_safe(), self.config);
            child.f = child.g + child.h;
        }
        exp
    }

    /// Rebuilds the primitive that led from `parent` to `child`.
    pub fn primitive_between(&self, parent: &Node, child: &Node) -> Option<MotionPrimitive> {
        let action = match child.mode {
            ExpansionMode::Esm => Action::Esm {
                target: child.state.dyn_state,
                input: child.input,
            },
            ExpansionMode::Bicycle => Action::Bicycle { input: child.input },
            ExpansionMode::Start => return None,
        };
        let mut pruned = PruneCounts::default();
        self.try_action(&parent.state, parent.track_s, &action, &mut pruned)
    }
}
