//! End-to-end checks of the harness commands and the shipped data files.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use driftplan::esm::EsmConfig;
use driftplan::harness::{
    cmd_esm_build, cmd_esm_show, cmd_lap, cmd_plan, parse_trajectory_csv, HarnessError, ParamsFile, RunConfig,
    RunMode, TrajectoryRow,
};
use driftplan::planner::PlannerConfig;
use driftplan::track::{
    format_track, load_track, mixed_circuit_waypoints, parse_track, u_turn_waypoints, FrenetPose, Track,
};
use driftplan::vehicle::{integrate_kinematics, normalize_angle, DynamicState, Pose};
use tempfile::TempDir;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// One core: long searches run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Directory with a freshly built default manifold.
fn shared_dir() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("straight.csv"), format_track(&[(0.0, 0.0), (300.0, 0.0)], 10.0, false)).unwrap();
        std::fs::write(dir.path().join("circle.csv"), format_track(&circle_waypoints(40.0, 96), 10.0, true)).unwrap();
        let cfg = config(dir.path(), "straight.csv", "", "");
        cmd_esm_build(&cfg).unwrap();
        dir
    })
    .path()
}

fn circle_waypoints(radius: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64 - PI / 2.0;
            (radius * a.cos(), radius * a.sin())
        })
        .collect()
}

/// A run configuration inside `dir` with extra TOML sections appended.
fn config(dir: &Path, track: &str, out: &str, extra: &str) -> RunConfig {
    let text = format!(
        "[paths]\ntrack = {track:?}\nmanifold = \"gravel.esm\"\n[run]\noutput_dir = {:?}\n{extra}",
        if out.is_empty() { "out" } else { out }
    );
    RunConfig::parse(&text, dir).unwrap()
}

fn fresh_out(cfg: &mut RunConfig) -> TempDir {
    let out = TempDir::new().unwrap();
    cfg.run.output_dir = out.path().to_path_buf();
    out
}

fn read_rows(path: &Path) -> Vec<TrajectoryRow> {
    parse_trajectory_csv(&std::fs::read_to_string(path).unwrap()).unwrap().1
}

fn assert_svg(path: &Path) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("<?xml"), "{}", path.display());
    assert!(text.contains("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("<svg").count(), 1);
    assert!(text.contains("<polyline"));
}

/// Consecutive rows with the same step reproduce the logged pose under the
/// kinematic integrator, and `(s, d)` matches a fresh projection.
fn assert_log_consistent(track: &Track, rows: &[TrajectoryRow], dt: f64) {
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        assert!((b.t - a.t - dt).abs() < 1e-9, "non-uniform time at t = {}", a.t);
        let states = [DynamicState::new(a.v, a.beta, a.psidot), DynamicState::new(b.v, b.beta, b.psidot)];
        let p = integrate_kinematics(Pose::new(a.x, a.y, a.psi), &states, dt)[1];
        assert!((p.x - b.x).abs() < 1e-6 && (p.y - b.y).abs() < 1e-6, "replay off at t = {}", b.t);
        assert!(normalize_angle(p.psi - b.psi).abs() < 1e-6);
    }
    for r in rows {
        let fp = track.to_frenet(&Pose::new(r.x, r.y, r.psi), Some(track.wrap_s(r.s))).unwrap();
        let ds = track.progress(track.wrap_s(r.s), fp.s);
        assert!(ds.abs() < 1e-6 && (fp.d - r.d).abs() < 1e-6, "frenet mismatch at t = {}", r.t);
    }
}

#[test]
fn shipped_defaults_match_the_library() {
    let cfg = RunConfig::load(&repo_root().join("configs/default.toml")).unwrap();
    assert_eq!(cfg.planner, PlannerConfig::default());
    assert_eq!(cfg.esm, EsmConfig::default());
    assert_eq!(cfg.run.mode, RunMode::Lap);
    assert_eq!(cfg.run.laps, 1);
    assert_eq!(cfg.metrics.beta_drift, 0.4);
    assert_eq!(cfg.load_params().unwrap(), ParamsFile::default());
    for name in ["uturn.toml", "straight.toml"] {
        let other = RunConfig::load(&repo_root().join("configs").join(name)).unwrap();
        assert_eq!(other.planner, cfg.planner);
        assert_eq!(other.run.mode, RunMode::Plan);
    }
}

#[test]
fn shipped_tracks_match_the_builders() {
    let dir = repo_root().join("tracks");
    let read = |n: &str| std::fs::read_to_string(dir.join(n)).unwrap();
    assert_eq!(read("mixed_circuit.csv"), format_track(&mixed_circuit_waypoints(), 10.0, true));
    assert_eq!(read("u_turn.csv"), format_track(&u_turn_waypoints(60.0, 15.0, 60.0), 10.0, false));
    assert_eq!(read("straight.csv"), format_track(&[(0.0, 0.0), (300.0, 0.0)], 10.0, false));
    let circuit = load_track(&dir.join("mixed_circuit.csv")).unwrap();
    let built = driftplan::track::mixed_circuit().unwrap();
    assert_eq!(circuit.points(), built.points());
    assert!(circuit.is_closed());
}

#[test]
fn esm_build_is_byte_identical_on_rerun() {
    let _g = serial();
    let dir = shared_dir();
    let first = std::fs::read(dir.join("gravel.esm")).unwrap();
    let mut cfg = config(dir, "straight.csv", "", "");
    let out = fresh_out(&mut cfg);
    cfg.paths.manifold = out.path().join("again.esm");
    cfg.run.plots = true;
    let (build, summary) = cmd_esm_build(&cfg).unwrap();
    assert_eq!(std::fs::read(&cfg.paths.manifold).unwrap(), first);
    assert_eq!(std::fs::read_to_string(out.path().join("esm_summary.txt")).unwrap(), summary);
    assert!(build.manifold.r_c_range().0 >= 10.0 * 0.98);
    assert!(summary.contains("convergence_rate = "));
    let svg = std::fs::read_to_string(out.path().join("manifold.svg")).unwrap();
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn esm_show_reports_a_parameter_match() {
    let dir = shared_dir();
    let cfg = config(dir, "straight.csv", "", "");
    let text = cmd_esm_show(&cfg).unwrap();
    assert!(text.contains("matches_parameters = true"));
    assert!(text.contains("r_c_range = "));
}

#[test]
fn empty_slip_range_fails_with_a_solver_code() {
    let dir = shared_dir();
    let mut cfg = config(dir, "straight.csv", "", "[esm.sweep]\nlambda_min = 0.5\nlambda_max = 0.1\n");
    let out = fresh_out(&mut cfg);
    cfg.paths.manifold = out.path().join("never.esm");
    let err = cmd_esm_build(&cfg).unwrap_err();
    assert!(matches!(err, HarnessError::Esm(driftplan::esm::EsmError::EmptySet)));
    assert_ne!(err.exit_code(), 0);
    assert!(!cfg.paths.manifold.exists());
}

#[test]
fn missing_manifold_is_a_config_error_before_any_output() {
    let dir = shared_dir();
    let mut cfg = config(dir, "straight.csv", "", "");
    let out = TempDir::new().unwrap();
    cfg.run.output_dir = out.path().join("never");
    cfg.paths.manifold = dir.join("absent.esm");
    let err = cmd_plan(&cfg).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 1);
    assert!(!cfg.run.output_dir.exists());
}

#[test]
fn manifold_for_other_parameters_is_rejected() {
    let dir = shared_dir();
    let mut cfg = config(dir, "straight.csv", "", "");
    let out = fresh_out(&mut cfg);
    let mut params = ParamsFile::default();
    params.vehicle.mass = 1500.0;
    let p = out.path().join("heavy.toml");
    std::fs::write(&p, params.to_toml()).unwrap();
    cfg.paths.params = Some(p);
    assert!(matches!(cmd_plan(&cfg), Err(HarnessError::Config(_))));
}

#[test]
fn straight_plan_stays_near_the_centerline() {
    let _g = serial();
    let dir = shared_dir();
    let mut cfg = config(dir, "straight.csv", "", "[initial]\ns = 10.0\nv = 10.0\n");
    let out = fresh_out(&mut cfg);
    cfg.run.plots = true;
    let (result, stats) = cmd_plan(&cfg).unwrap();
    assert_eq!(result.path.len(), cfg.planner.k_hor + 1);
    let rows = read_rows(&out.path().join("plan.csv"));
    assert_eq!(rows.len(), result.trajectory.len());
    assert!(rows.iter().all(|r| r.d.abs() < 0.5));
    let track = load_track(&cfg.paths.track).unwrap();
    assert_log_consistent(&track, &rows, cfg.planner.dt());
    assert_eq!(std::fs::read_to_string(out.path().join("plan_stats.txt")).unwrap(), stats);
    assert!(stats.contains("termination = horizon"));
    assert_svg(&out.path().join("plan.svg"));
}

#[test]
fn zero_laps_give_empty_metrics() {
    let dir = shared_dir();
    let mut cfg = config(dir, "circle.csv", "", "");
    cfg.run.laps = 0;
    let out = fresh_out(&mut cfg);
    let report = cmd_lap(&cfg).unwrap();
    assert!(report.log.samples.is_empty());
    assert_eq!(report.metrics.lap_time(), None);
    assert_eq!(report.metrics.min_edge_margin, None);
    assert!(report.metrics.drift_intervals.is_empty());
    assert!(report.metrics_text.contains("laps_completed = 0"));
    assert!(read_rows(&out.path().join("lap.csv")).is_empty());
}

#[test]
fn boxed_in_start_fails_with_partial_logs() {
    let dir = shared_dir();
    let mut cfg = config(dir, "straight.csv", "", "[initial]\ns = 10.0\nd = 3.9\nheading_offset = 1.4\nv = 12.0\n");
    let out = fresh_out(&mut cfg);
    let err = cmd_lap(&cfg).unwrap_err();
    assert!(matches!(err, HarnessError::Starved(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    for f in ["lap.csv", "cycles.csv", "timings.csv", "metrics.txt"] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
    let metrics = std::fs::read_to_string(out.path().join("metrics.txt")).unwrap();
    assert!(metrics.contains("outcome = planner_starved at cycle 0"));
}

const SHORT_HORIZON: &str = "[initial]\ns = 0.0\nv = 6.0\n[planner]\nk_hor = 4\nn_timeout = 5000\n";

#[test]
fn lap_logs_are_consistent_and_deterministic() {
    let _g = serial();
    let dir = shared_dir();
    let mut cfg = config(dir, "circle.csv", "", SHORT_HORIZON);
    cfg.run.plots = true;
    let out_a = fresh_out(&mut cfg);
    let report = cmd_lap(&cfg).unwrap();
    let track = load_track(&cfg.paths.track).unwrap();
    let lap = report.metrics.lap_time().expect("one lap");
    assert!(lap > 0.0);
    assert!(report.metrics.total_progress >= track.length());
    assert!(report.metrics.min_edge_margin.unwrap() > 0.0);
    assert_eq!(report.metrics.cycle_expansions.len(), report.log.cycles.len());

    let rows = read_rows(&out_a.path().join("lap.csv"));
    assert_eq!(rows.len(), report.log.samples.len());
    assert_log_consistent(&track, &rows, cfg.planner.dt());
    assert_svg(&out_a.path().join("lap_track.svg"));
    assert_svg(&out_a.path().join("lap_states.svg"));

    let out_b = fresh_out(&mut cfg);
    cmd_lap(&cfg).unwrap();
    for f in ["lap.csv", "cycles.csv", "metrics.txt", "lap_track.svg", "lap_states.svg"] {
        let a = std::fs::read(out_a.path().join(f)).unwrap();
        let b = std::fs::read(out_b.path().join(f)).unwrap();
        assert!(a == b, "{f} differs between identical runs");
    }
}

#[test]
fn cycle_limit_is_a_failure_with_logs() {
    let _g = serial();
    let dir = shared_dir();
    let mut cfg = config(dir, "circle.csv", "", SHORT_HORIZON);
    cfg.run.max_cycles_per_lap = 3;
    let out = fresh_out(&mut cfg);
    let err = cmd_lap(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let cycles = std::fs::read_to_string(out.path().join("cycles.csv")).unwrap();
    assert_eq!(cycles.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
    let rows = read_rows(&out.path().join("lap.csv"));
    let per_cycle = (cfg.planner.t_rep / cfg.planner.dt()).round() as usize;
    assert_eq!(rows.len(), 3 * per_cycle + 1);
}

#[test]
fn track_file_round_trip_preserves_geometry() {
    let text = format_track(&circle_waypoints(40.0, 96), 10.0, true);
    let a = parse_track(&text).unwrap();
    let b = driftplan::track::circle_track(40.0, 10.0, 96).unwrap();
    assert_eq!(a.points(), b.points());
    let p = a.from_frenet(FrenetPose::new(12.0, 1.5)).unwrap();
    let q = b.from_frenet(FrenetPose::new(12.0, 1.5)).unwrap();
    assert_eq!((p.x, p.y), (q.x, q.y));
}
