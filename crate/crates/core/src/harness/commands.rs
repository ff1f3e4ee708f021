use std::fmt::Write as _;
use std::path::Path;

use super::config::{ParamsFile, RunConfig};
use super::metrics::LapMetrics;
use super::output::{cycles_csv, stats_text, timings_csv, trajectory_csv};
use super::svg::{lap_states_svg, lap_track_svg, manifold_svg, plan_svg};
use super::HarnessError;
use crate::esm::{compute_manifold, load_manifold, parameter_hash, save_manifold, EsmBuild, Manifold};
use crate::planner::{replan_loop, search, ExecutedLog, LoopOutcome, PlanningContext, SearchResult, StopCondition};
use crate::track::{load_track, Track};

/// Everything a planning command reads from disk.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub track: Track,
    pub params: ParamsFile,
    /// Loaded only when ESM expansion is enabled.
    pub manifold: Option<Manifold>,
    pub config_hash: String,
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Inputs, HarnessError> {
        let need_manifold = cfg.planner.esm_enabled;
        cfg.require_inputs(need_manifold)?;
        let params = cfg.load_params()?;
        let track = load_track(&cfg.paths.track).map_err(|e| HarnessError::Config(e.to_string()))?;
        let manifold = if need_manifold {
            Some(load_checked_manifold(&cfg.paths.manifold, &params)?)
        } else {
            None
        };
        Ok(Inputs {
            track,
            params,
            manifold,
            config_hash: cfg.hash(&params),
        })
    }

    pub fn context<'a>(&'a self, cfg: &'a RunConfig) -> PlanningContext<'a> {
        PlanningContext {
            track: &self.track,
            manifold: self.manifold.as_ref(),
            params: &self.params.vehicle,
            tires: &self.params.tires,
            config: &cfg.planner,
        }
    }
}

fn load_checked_manifold(path: &Path, params: &ParamsFile) -> Result<Manifold, HarnessError> {
    let expected = parameter_hash(&params.vehicle, &params.tires);
    let (m, mismatch) = load_manifold(path, Some(&expected)).map_err(|e| HarnessError::Config(e.to_string()))?;
    if let Some(mm) = mismatch {
        return Err(HarnessError::Config(format!(
            "manifold {} was built for parameter hash {}, current parameters hash to {}; rebuild it",
            path.display(),
            mm.stored,
            mm.expected
        )));
    }
    Ok(m)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| HarnessError::Io(format!("cannot write {}: {e}", path.display())))
}

fn output_dir(cfg: &RunConfig) -> Result<&Path, HarnessError> {
    let dir = cfg.run.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Text summary of a manifold.
pub fn manifold_summary(m: &Manifold) -> String {
    let mut out = String::new();
    let ((b0, b1), (r0, r1)) = m.extent();
    let (rc0, rc1) = m.r_c_range();
    let _ = writeln!(out, "samples = {}", m.samples().len());
    let _ = writeln!(out, "triangles = {}", m.triangles().len());
    let _ = writeln!(out, "turning = {}", m.turning().as_str());
    let _ = writeln!(out, "beta_range = {b0:?} {b1:?}");
    let _ = writeln!(out, "psidot_range = {r0:?} {r1:?}");
    let _ = writeln!(out, "r_c_range = {rc0:?} {rc1:?}");
    let _ = writeln!(out, "r_c_min_filter = {:?}", m.r_c_min());
    let _ = writeln!(out, "domain_area = {:?}", m.area());
    let _ = writeln!(out, "params_hash = {}", m.params_hash());
    out
}

/// Computes the manifold, writes it to `paths.manifold`, and writes a
/// summary (and optionally a figure) to the output directory.
pub fn cmd_esm_build(cfg: &RunConfig) -> Result<(EsmBuild, String), HarnessError> {
    if let Some(p) = &cfg.paths.params {
        if !p.is_file() {
            return Err(HarnessError::Config(format!("params file {} does not exist", p.display())));
        }
    }
    let params = cfg.load_params()?;
    let dir = output_dir(cfg)?;
    let build = compute_manifold(&cfg.esm, &params.vehicle, &params.tires).map_err(HarnessError::Esm)?;
    if let Some(parent) = cfg.paths.manifold.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| HarnessError::Io(format!("cannot create {}: {e}", parent.display())))?;
    }
    save_manifold(&build.manifold, &cfg.paths.manifold)
        .map_err(|e| HarnessError::Io(format!("cannot write {}: {e}", cfg.paths.manifold.display())))?;

    let eligible = build.sweep.cells.len();
    let mut summary = String::new();
    let _ = writeln!(summary, "# driftplan equilibrium manifold");
    let _ = writeln!(summary, "config_hash = {}", cfg.hash(&params));
    let _ = writeln!(summary, "sweep_cells = {eligible}");
    let _ = writeln!(summary, "sweep_points = {}", build.sweep.points.len());
    let _ = writeln!(summary, "convergence_rate = {:?}", build.sweep.convergence_rate());
    let _ = writeln!(summary, "folds = {}", build.sweep.folds.len());
    summary.push_str(&manifold_summary(&build.manifold));
    write_file(dir, "esm_summary.txt", &summary)?;
    if cfg.run.plots {
        write_file(dir, "manifold.svg", &manifold_svg(&build.manifold))?;
    }
    Ok((build, summary))
}

/// Loads the manifold file and describes it, including whether it matches
/// the configured parameters.
pub fn cmd_esm_show(cfg: &RunConfig) -> Result<String, HarnessError> {
    cfg.require_inputs(false)?;
    if !cfg.paths.manifold.is_file() {
        return Err(HarnessError::Config(format!(
            "manifold file {} does not exist",
            cfg.paths.manifold.display()
        )));
    }
    let params = cfg.load_params()?;
    let expected = parameter_hash(&params.vehicle, &params.tires);
    let (m, mismatch) =
        load_manifold(&cfg.paths.manifold, Some(&expected)).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut out = format!("# {}\n", cfg.paths.manifold.display());
    out.push_str(&manifold_summary(&m));
    let _ = writeln!(out, "matches_parameters = {}", mismatch.is_none());
    Ok(out)
}

/// One search from the configured initial state.
pub fn cmd_plan(cfg: &RunConfig) -> Result<(SearchResult, String), HarnessError> {
    let inputs = Inputs::load(cfg)?;
    let dir = output_dir(cfg)?;
    let initial = cfg.initial.to_full_state(&inputs.track)?;
    let ctx = inputs.context(cfg);
    let result = search(&initial, Some(cfg.initial.s), &ctx).map_err(HarnessError::Planner)?;

    write_file(dir, "plan.csv", &trajectory_csv(&result.trajectory, &inputs.config_hash))?;
    let mut stats = String::new();
    let _ = writeln!(stats, "# driftplan plan");
    let _ = writeln!(stats, "config_hash = {}", inputs.config_hash);
    let _ = writeln!(stats, "progress = {:?}", result.progress());
    let _ = writeln!(stats, "duration = {:?}", result.duration());
    let _ = writeln!(stats, "depth = {}", result.path.len() - 1);
    let max_beta = result.trajectory.iter().map(|p| p.state.dyn_state.beta.abs()).fold(0.0, f64::max);
    let _ = writeln!(stats, "max_abs_beta = {max_beta:?}");
    stats.push_str(&stats_text(&result.stats));
    write_file(dir, "plan_stats.txt", &stats)?;
    if cfg.run.plots {
        let title = format!("plan: progress {:.2} m over {:.1} s", result.progress(), result.duration());
        write_file(dir, "plan.svg", &plan_svg(&inputs.track, &result, &title))?;
    }
    Ok((result, stats))
}

/// Outcome of [`cmd_lap`]: what was run and what it produced.
#[derive(Debug, Clone)]
pub struct LapReport {
    pub log: ExecutedLog,
    pub metrics: LapMetrics,
    pub metrics_text: String,
}

/// Runs the receding-horizon loop for the configured number of laps. Logs
/// are written even when the run fails, which is then reported as
/// [`HarnessError::Starved`].
pub fn cmd_lap(cfg: &RunConfig) -> Result<LapReport, HarnessError> {
    let inputs = Inputs::load(cfg)?;
    let dir = output_dir(cfg)?;
    let track = &inputs.track;
    let lap_length = if track.is_closed() { track.length() } else { track.length() - cfg.initial.s };
    let beta_drift = cfg.metrics.beta_drift;

    let log = if cfg.run.laps == 0 {
        ExecutedLog {
            samples: Vec::new(),
            cycles: Vec::new(),
            outcome: LoopOutcome::Completed,
        }
    } else {
        let initial = cfg.initial.to_full_state(track)?;
        let stop = StopCondition {
            target_progress: cfg.run.laps as f64 * lap_length,
            max_cycles: cfg.run.laps * cfg.run.max_cycles_per_lap,
        };
        replan_loop(&initial, Some(cfg.initial.s), &inputs.context(cfg), &stop)
    };

    let metrics = LapMetrics::from_log(&log, track.width(), lap_length, beta_drift);
    let outcome = match &log.outcome {
        LoopOutcome::Completed => "completed".to_string(),
        LoopOutcome::CycleLimit => "cycle_limit".to_string(),
        LoopOutcome::PlannerStarved { cycle, .. } => format!("planner_starved at cycle {cycle}"),
    };
    let metrics_text = format!(
        "# driftplan lap metrics\nconfig_hash = {}\nlaps_requested = {}\noutcome = {outcome}\n{}",
        inputs.config_hash,
        cfg.run.laps,
        metrics.to_text()
    );
    write_file(dir, "lap.csv", &trajectory_csv(&log.samples, &inputs.config_hash))?;
    write_file(dir, "cycles.csv", &cycles_csv(&log.cycles, &inputs.config_hash))?;
    write_file(dir, "timings.csv", &timings_csv(&log.cycles))?;
    write_file(dir, "metrics.txt", &metrics_text)?;
    if cfg.run.plots {
        let title = format!("{} lap(s): {outcome}", cfg.run.laps);
        write_file(dir, "lap_track.svg", &lap_track_svg(track, &log.samples, beta_drift, &title))?;
        write_file(dir, "lap_states.svg", &lap_states_svg(&log.samples, beta_drift))?;
    }
    match &log.outcome {
        LoopOutcome::Completed => Ok(LapReport { log, metrics, metrics_text }),
        LoopOutcome::CycleLimit => Err(HarnessError::Starved(format!(
            "cycle limit of {} reached after {:.1} m of {:.1} m",
            cfg.run.laps * cfg.run.max_cycles_per_lap,
            metrics.total_progress,
            cfg.run.laps as f64 * lap_length
        ))),
        LoopOutcome::PlannerStarved { cycle, reason } => {
            Err(HarnessError::Starved(format!("planning cycle {cycle}: {reason}")))
        }
    }
}
