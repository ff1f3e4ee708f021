use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::esm::{compute_manifold, EsmConfig, Manifold};
use crate::track::{circle_track, straight_track, u_turn_track, Track};
use crate::vehicle::{integrate_kinematics, DynamicState, FullState, Pose, TireParams, VehicleParams};

fn manifold() -> &'static Manifold {
    static M: OnceLock<Manifold> = OnceLock::new();
    M.get_or_init(|| {
        compute_manifold(&EsmConfig::default(), &VehicleParams::default(), &TireParams::gravel())
            .unwrap()
            .manifold
    })
}

struct Fixture {
    track: Track,
    params: VehicleParams,
    tires: TireParams,
    config: PlannerConfig,
}

impl Fixture {
    fn new(track: Track, config: PlannerConfig) -> Self {
        Fixture {
            track,
            params: VehicleParams::default(),
            tires: TireParams::gravel(),
            config,
        }
    }

    fn ctx(&self) -> PlanningContext<'_> {
        PlanningContext {
            track: &self.track,
            manifold: Some(manifold()),
            params: &self.params,
            tires: &self.tires,
            config: &self.config,
        }
    }
}

fn small_config() -> PlannerConfig {
    PlannerConfig {
        k_hor: 4,
        n_timeout: 5_000,
        ..PlannerConfig::default()
    }
}

fn state(x: f64, y: f64, psi: f64, v: f64, beta: f64, psidot: f64) -> FullState {
    FullState::new(Pose::new(x, y, psi), DynamicState::new(v, beta, psidot))
}

#[test]
fn straight_driving_fires_both_modes() {
    let fx = Fixture::new(straight_track(200.0, 10.0).unwrap(), PlannerConfig::default());
    let ctx = fx.ctx();
    let root = root_node(&state(10.0, 0.0, 0.0, 7.0, 0.0, 0.0), None, &ctx).unwrap();
    let exp = ctx.expand(&root, Some(0));
    let esm = exp.children.iter().filter(|c| c.mode == ExpansionMode::Esm).count();
    let bicycle = exp.children.iter().filter(|c| c.mode == ExpansionMode::Bicycle).count();
    assert!(esm > 0 && bicycle > 0);
    let candidates = fx.config.sampling.sample_count() + fx.config.bicycle.deltas().len() * fx.config.bicycle.lambdas().len();
    assert_eq!(exp.children.len() + exp.pruned.total(), candidates);
    assert_eq!(exp.children.len(), exp.primitives.len());
    for c in &exp.children {
        assert_eq!(c.sibling_count, exp.children.len());
        assert_eq!(c.k, 1);
        assert_eq!(c.f, c.g + c.h);
    }
}

#[test]
fn outside_bicycle_region_only_esm_fires() {
    let fx = Fixture::new(circle_track(30.0, 10.0, 64).unwrap(), PlannerConfig::default());
    let ctx = fx.ctx();
    let p = manifold().samples().iter().find(|s| s.dyn_state.beta < -0.3 && s.dyn_state.psidot > 0.3).unwrap();
    let start = FullState::new(Pose::new(0.0, -30.0, 0.0), p.dyn_state);
    let root = root_node(&start, None, &ctx).unwrap();
    let exp = ctx.expand(&root, Some(0));
    assert!(exp.children.iter().all(|c| c.mode == ExpansionMode::Esm));
}

/// Node whose own `(beta, psidot)` is an exact manifold vertex, with a
/// chosen speed offset from that vertex's equilibrium speed.
fn rule_iii_count(dv: f64) -> usize {
    let config = PlannerConfig {
        sampling: SamplingPattern {
            rings: Vec::new(),
            ..SamplingPattern::default()
        },
        bicycle_enabled: false,
        ..PlannerConfig::default()
    };
    let fx = Fixture::new(circle_track(30.0, 10.0, 64).unwrap(), config);
    let ctx = fx.ctx();
    let p = manifold().samples().iter().find(|s| s.dyn_state.beta < -0.2 && s.dyn_state.psidot > 0.3).unwrap();
    let mut d = p.dyn_state;
    d.v -= dv;
    let mut pruned = PruneCounts::default();
    let actions = ctx.actions(&d, &mut pruned);
    assert_eq!(actions.len() + pruned.total(), 1);
    pruned.speed_jump
}

#[test]
fn rule_iii_boundary() {
    let t_s = PlannerConfig::default().t_s;
    let a_max = VehicleParams::default().a_max;
    assert_eq!(rule_iii_count(a_max * t_s + 0.01 * t_s), 1);
    assert_eq!(rule_iii_count(-(a_max * t_s + 0.01 * t_s)), 1);
    assert_eq!(rule_iii_count(a_max * t_s - 0.01 * t_s), 0);
}

#[test]
fn esm_children_requery_exactly() {
    let fx = Fixture::new(circle_track(40.0, 12.0, 96).unwrap(), PlannerConfig::default());
    let ctx = fx.ctx();
    let m = manifold();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    let mut nodes = 0;
    while nodes < 100 {
        let anchor = &m.samples()[rng.random_range(0..m.samples().len())];
        let d = anchor.dyn_state;
        let d = DynamicState::new(d.v + rng.random_range(-0.5..0.5), d.beta, d.psidot);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (sn, cs) = angle.sin_cos();
        let r = 40.0 + rng.random_range(-2.0..2.0);
        let start = state(r * sn, -r * cs, angle + rng.random_range(-0.2..0.2), d.v, d.beta, d.psidot);
        let Ok(root) = root_node(&start, None, &ctx) else { continue };
        nodes += 1;
        for c in ctx.expand(&root, Some(0)).children.iter().filter(|c| c.mode == ExpansionMode::Esm) {
            let e = c.state.dyn_state;
            let q = m.query(e.beta, e.psidot).unwrap();
            assert_eq!(q.v, e.v);
            assert_eq!((q.delta, q.lambda), (c.input.delta, c.input.lambda));
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} children checked");
}

#[test]
fn collision_examples() {
    let track = straight_track(100.0, 10.0).unwrap();
    let d_safe = PlannerConfig::default().d_safe(10.0);
    let on_center: Vec<Pose> = (0..=20).map(|i| Pose::new(10.0 + 0.3 * i as f64, 0.0, 0.0)).collect();
    assert!(!collision_check(&on_center, &track, d_safe, Some(10.0), 10.0).collides);

    let mut off = on_center.clone();
    off.last_mut().unwrap().y = 5.1;
    assert!(collision_check(&off, &track, 5.0, Some(10.0), 10.0).collides);
}

#[test]
fn chord_across_a_corner_collides() {
    // quarter-circle chord: both ends on the centerline, the middle
    // R - R cos(pi/4) inside it
    let radius = 20.0;
    let track = circle_track(radius, 10.0, 128).unwrap();
    let d_safe = PlannerConfig::default().d_safe(10.0);
    let a = (0.0, -radius);
    let b = (radius, 0.0);
    let poses: Vec<Pose> = (0..=20)
        .map(|i| {
            let t = i as f64 / 20.0;
            Pose::new(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1), std::f64::consts::FRAC_PI_4)
        })
        .collect();
    for p in [poses[0], poses[20]] {
        assert!(track.to_frenet(&p, None).unwrap().d.abs() < 0.05);
    }
    let mid_d = radius - radius * std::f64::consts::FRAC_PI_4.cos();
    assert!(mid_d > d_safe);
    let c = collision_check(&poses, &track, d_safe, Some(0.0), 10.0);
    assert!(c.collides);
    assert!(c.frenet.len() < poses.len());
}

#[test]
fn zero_horizon_returns_the_root_only() {
    let config = PlannerConfig {
        k_hor: 0,
        ..PlannerConfig::default()
    };
    let fx = Fixture::new(straight_track(100.0, 10.0).unwrap(), config);
    let r = search(&state(10.0, 0.0, 0.0, 7.0, 0.0, 0.0), None, &fx.ctx()).unwrap();
    assert!(r.is_empty());
    assert_eq!(r.trajectory.len(), 1);
    assert_eq!(r.duration(), 0.0);
    assert_eq!(r.stats.expansions, 0);
    assert_eq!(r.stats.termination, Termination::Horizon);
}

#[test]
fn off_road_start_is_rejected() {
    let fx = Fixture::new(straight_track(100.0, 10.0).unwrap(), small_config());
    let err = search(&state(10.0, 6.0, 0.0, 7.0, 0.0, 0.0), None, &fx.ctx()).unwrap_err();
    assert!(matches!(err, PlannerError::InitialOffRoad { .. }));
}

#[test]
fn boxed_in_start_has_no_feasible_node() {
    // heading straight at the road edge at speed
    let fx = Fixture::new(straight_track(100.0, 10.0).unwrap(), small_config());
    let err = search(&state(10.0, 3.9, 1.4, 12.0, 0.0, 0.0), None, &fx.ctx()).unwrap_err();
    assert!(matches!(err, PlannerError::NoFeasibleNode { .. }));
}

fn u_turn_result() -> (Fixture, SearchResult) {
    let fx = Fixture::new(u_turn_track(40.0, 15.0, 40.0, 10.0).unwrap(), small_config());
    let r = search(&state(35.0, 0.0, 0.0, 7.0, 0.0, 0.0), None, &fx.ctx()).unwrap();
    (fx, r)
}

#[test]
fn search_is_deterministic() {
    let (_, a) = u_turn_result();
    let (_, b) = u_turn_result();
    assert_eq!(a.path, b.path);
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.explored, b.explored);
    let strip = |s: &SearchStats| SearchStats { wall_time: 0.0, ..s.clone() };
    assert_eq!(strip(&a.stats), strip(&b.stats));
}

#[test]
fn path_invariants() {
    let (fx, r) = u_turn_result();
    let ctx = fx.ctx();
    assert_eq!(r.path.len(), fx.config.k_hor + 1);
    let a_lim = fx.params.a_max * fx.config.t_s;
    for w in r.path.windows(2) {
        let (p, c) = (&w[0], &w[1]);
        assert!(c.g > p.g, "progress must grow along the path");
        assert_eq!(c.k, p.k + 1);
        assert_eq!(c.parent_cell, Some(p.cell));
        assert!((c.state.dyn_state.v - p.state.dyn_state.v).abs() < a_lim);
        let prim = ctx.primitive_between(p, c).unwrap();
        assert_eq!(prim.samples[0], p.state);
        assert_eq!(*prim.samples.last().unwrap(), c.state);
        assert_eq!(prim.samples.len(), fx.config.samples_per_primitive + 1);
    }
    let per = fx.config.samples_per_primitive;
    for (i, n) in r.path.iter().enumerate() {
        assert_eq!(r.trajectory[i * per].state, n.state);
    }
}

#[test]
fn explored_nodes_are_grid_consistent() {
    let (fx, r) = u_turn_result();
    let steps = fx.config.grid.as_array();
    for n in &r.explored {
        let (cell, rem) = discretize(&n.state, &steps);
        assert_eq!(cell, n.cell);
        assert_eq!(rem, n.remainder);
        for k in 0..6 {
            assert!(rem[k] >= 0.0 && rem[k] < steps[k]);
        }
        let exact = state_vector(&n.state);
        let back = reconstruct(&n.cell, &n.remainder, &steps);
        let (cell2, _) = discretize(
            &state(back[0], back[1], back[2], back[3], back[4], back[5]),
            &steps,
        );
        for k in 0..6 {
            assert!((back[k] - exact[k]).abs() <= 1e-12 * exact[k].abs().max(1.0));
        }
        // psi is renormalized by Pose::new, so compare the other five exactly
        for k in [0, 1, 3, 4, 5] {
            assert_eq!(cell2.0[k], n.cell.0[k]);
        }
    }
}

#[test]
fn executing_the_whole_horizon_reproduces_the_plan() {
    let mut config = small_config();
    config.t_rep = config.k_hor as f64 * config.t_s;
    config.t_plan = config.t_rep;
    let fx = Fixture::new(u_turn_track(40.0, 15.0, 40.0, 10.0).unwrap(), config);
    let ctx = fx.ctx();
    let start = state(35.0, 0.0, 0.0, 7.0, 0.0, 0.0);
    let plan = search(&start, None, &ctx).unwrap();
    let log = replan_loop(
        &start,
        None,
        &ctx,
        &StopCondition {
            target_progress: f64::INFINITY,
            max_cycles: 1,
        },
    );
    assert_eq!(log.outcome, LoopOutcome::CycleLimit);
    assert_eq!(log.samples.len(), plan.trajectory.len());
    for (a, b) in log.samples.iter().zip(&plan.trajectory) {
        assert_eq!(a.state, b.state);
        assert_eq!(a.frenet, b.frenet);
        assert!((a.t - b.t).abs() < 1e-12);
    }
}

#[test]
fn stitched_log_is_continuous() {
    let fx = Fixture::new(circle_track(40.0, 10.0, 96).unwrap(), small_config());
    let ctx = fx.ctx();
    let log = replan_loop(
        &state(0.0, -40.0, 0.0, 6.0, 0.0, 0.0),
        None,
        &ctx,
        &StopCondition {
            target_progress: 40.0,
            max_cycles: 10,
        },
    );
    assert_eq!(log.outcome, LoopOutcome::Completed);
    assert!(log.progress() >= 40.0);
    let dt = fx.config.dt();
    let per = (fx.config.t_rep / dt).round() as usize;
    for (i, s) in log.samples.iter().enumerate() {
        assert!((s.t - i as f64 * dt).abs() < 1e-9);
    }
    // each cycle starts exactly where the previous plan put the vehicle
    for (c, rec) in log.cycles.iter().enumerate() {
        assert_eq!(rec.start_s, log.samples[c * per].frenet.s);
    }
    // replaying the kinematics over the logged dynamic states, one
    // primitive-aligned sample at a time, reproduces the logged poses
    let dyns: Vec<DynamicState> = log.samples.iter().map(|s| s.state.dyn_state).collect();
    for (i, w) in dyns.windows(2).enumerate() {
        let p = integrate_kinematics(log.samples[i].state.pose, w, dt)[1];
        let q = log.samples[i + 1].state.pose;
        assert!((p.x - q.x).hypot(p.y - q.y) < 1e-6, "gap at sample {i}");
    }
    for w in log.samples.windows(2) {
        assert!(w[1].frenet.s > w[0].frenet.s - 1e-9);
    }
}
