//! Steady-state cornering equilibria and their interpolated manifold.
//!
//! An equilibrium is a dynamic state `(v, beta, psidot)` at which the full
//! model balance vanishes under constant inputs `(delta, lambda)`. Sweeping
//! the inputs over a grid and solving each cell by damped Newton iteration
//! (seeded from solved neighbors) yields a scattered point set that
//! [`Manifold`] interpolates over the `(beta, psidot)` plane.

mod io;
mod manifold;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vehicle::{
    full_model_derivatives, rollout_dynamics, ControlInput, DynamicState, ForceModel, ModelError,
    TireParams, VehicleParams, V_EPS,
};

pub use io::{
    load_manifold, parameter_hash, read_manifold, save_manifold, write_manifold, HashMismatch,
};
pub use manifold::{build_manifold, BuildOptions, Manifold, ManifoldQuery, TurningSense};

#[derive(Debug, Error)]
pub enum EsmError {
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("inputs (delta = 0, lambda = 0) admit a continuum of straight-line equilibria")]
    DegenerateInput,
    #[error("solver converged to a straight-line root (psidot = {psidot:e})")]
    StraightLineRoot { psidot: f64 },
    #[error("solver converged to a non-positive speed {v}")]
    NegativeSpeed { v: f64 },
    #[error("no sweep cell converged")]
    EmptySet,
    #[error("need at least 3 non-collinear in-domain samples, got {0}")]
    InsufficientPoints(usize),
    #[error("query ({beta}, {psidot}) is outside the manifold domain")]
    OutOfDomain { beta: f64, psidot: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("manifold file, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Open-loop behavior of an equilibrium under frozen inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    OpenLoopUnstable,
    Unscreened,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::OpenLoopUnstable => "unstable",
            Stability::Unscreened => "unscreened",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stable" => Some(Stability::Stable),
            "unstable" => Some(Stability::OpenLoopUnstable),
            "unscreened" => Some(Stability::Unscreened),
            _ => None,
        }
    }
}

/// A steady-state cornering solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub dyn_state: DynamicState,
    pub input: ControlInput,
    /// Signed curvature radius `v / psidot` (m); positive for left turns.
    pub r_c: f64,
    pub stability: Stability,
}

impl EquilibriumPoint {
    /// The point reflected into the opposite turning sense.
    pub fn mirrored(&self) -> EquilibriumPoint {
        EquilibriumPoint {
            dyn_state: DynamicState::new(self.dyn_state.v, -self.dyn_state.beta, -self.dyn_state.psidot),
            input: ControlInput::new(-self.input.delta, self.input.lambda),
            r_c: -self.r_c,
            stability: self.stability,
        }
    }

    /// Largest absolute entry of the balance residual at this point.
    pub fn residual(&self, params: &VehicleParams, tires: &TireParams) -> Result<f64, ModelError> {
        Ok(full_model_derivatives(&self.dyn_state, &self.input, params, tires)?.max_abs())
    }
}

/// Reflects a whole point set into the opposite turning sense.
pub fn mirror_points(points: &[EquilibriumPoint]) -> Vec<EquilibriumPoint> {
    points.iter().map(EquilibriumPoint::mirrored).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Central-difference step of the numerical Jacobian.
    pub fd_step: f64,
    pub max_iterations: usize,
    /// Largest accepted absolute entry of the balance residual.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            fd_step: 1e-6,
            max_iterations: 50,
            tolerance: 1e-8,
        }
    }
}

fn residual_vec(
    x: &Vector3<f64>,
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
) -> Result<Vector3<f64>, ModelError> {
    let d = full_model_derivatives(&DynamicState::new(x[0], x[1], x[2]), input, params, tires)?;
    Ok(Vector3::new(d.v_dot, d.beta_dot, d.psi_ddot))
}

/// Solves the steady-state condition `v' = beta' = psi'' = 0` for constant
/// inputs by damped Newton iteration from `guess`.
pub fn solve_equilibrium(
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
    guess: &DynamicState,
    opts: &SolverOptions,
) -> Result<EquilibriumPoint, EsmError> {
    if input.delta.abs() < 1e-12 && input.lambda.abs() < 1e-12 {
        return Err(EsmError::DegenerateInput);
    }
    if guess.v <= V_EPS {
        return Err(ModelError::LowSpeed { v: guess.v }.into());
    }
    let mut x = Vector3::new(guess.v, guess.beta, guess.psidot);
    let mut r = residual_vec(&x, input, params, tires)?;
    let mut norm = r.amax();
    let mut iterations = 0;

    while norm >= opts.tolerance {
        if iterations == opts.max_iterations {
            return Err(EsmError::NoConvergence { iterations, residual: norm });
        }
        iterations += 1;

        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += opts.fd_step;
            xm[j] -= opts.fd_step;
            let col = (residual_vec(&xp, input, params, tires)?
                - residual_vec(&xm, input, params, tires)?)
                / (2.0 * opts.fd_step);
            jac.set_column(j, &col);
        }
        let Some(step) = jac.lu().solve(&(-r)) else {
            return Err(EsmError::NoConvergence { iterations, residual: norm });
        };

        // backtracking on the residual max-norm
        let mut alpha = 1.0;
        loop {
            let trial = x + step * alpha;
            if let Ok(rt) = residual_vec(&trial, input, params, tires) {
                if rt.amax() < norm || alpha < 1e-3 && rt.amax().is_finite() {
                    x = trial;
                    r = rt;
                    norm = rt.amax();
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(EsmError::NoConvergence { iterations, residual: norm });
            }
        }
    }

    if x[0] <= 0.0 {
        return Err(EsmError::NegativeSpeed { v: x[0] });
    }
    if x[2].abs() < 1e-9 {
        return Err(EsmError::StraightLineRoot { psidot: x[2] });
    }
    Ok(EquilibriumPoint {
        dyn_state: DynamicState::new(x[0], x[1], x[2]),
        input: *input,
        r_c: x[0] / x[2],
        stability: Stability::Unscreened,
    })
}

/// Largest per-state deviation from the equilibrium during a frozen-input
/// rollout of the full model.
pub fn rollout_drift(
    point: &EquilibriumPoint,
    params: &VehicleParams,
    tires: &TireParams,
    horizon: f64,
    dt: f64,
) -> f64 {
    let n = (horizon / dt).round() as usize;
    match rollout_dynamics(
        point.dyn_state,
        &point.input,
        ForceModel::Full,
        params,
        tires,
        dt,
        n,
        1,
    ) {
        Ok(traj) => traj
            .iter()
            .map(|d| {
                (d.v - point.dyn_state.v)
                    .abs()
                    .max((d.beta - point.dyn_state.beta).abs())
                    .max((d.psidot - point.dyn_state.psidot).abs())
            })
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

/// Frozen-input stability screen settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityScreen {
    pub horizon: f64,
    pub dt: f64,
    /// Largest per-state drift for which a point counts as stable.
    pub tolerance: f64,
}

impl Default for StabilityScreen {
    fn default() -> Self {
        StabilityScreen {
            horizon: 5.0,
            dt: 0.01,
            tolerance: 1e-3,
        }
    }
}

impl StabilityScreen {
    pub fn classify(&self, point: &EquilibriumPoint, params: &VehicleParams, tires: &TireParams) -> Stability {
        if rollout_drift(point, params, tires, self.horizon, self.dt) < self.tolerance {
            Stability::Stable
        } else {
            Stability::OpenLoopUnstable
        }
    }
}

/// Input grid of the offline sweep. Angles are in degrees so grid values
/// land exactly on round numbers, including zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub delta_min_deg: f64,
    pub delta_max_deg: f64,
    pub delta_step_deg: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            delta_min_deg: -30.0,
            delta_max_deg: 30.0,
            delta_step_deg: 1.0,
            lambda_min: 0.0,
            lambda_max: 0.9,
            lambda_step: 0.02,
        }
    }
}

fn grid_values(min: f64, max: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || max < min {
        return Vec::new();
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| min + i as f64 * step).collect()
}

impl SweepConfig {
    /// Steering grid in degrees.
    pub fn delta_grid_deg(&self) -> Vec<f64> {
        grid_values(self.delta_min_deg, self.delta_max_deg, self.delta_step_deg)
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        grid_values(self.lambda_min, self.lambda_max, self.lambda_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Converged,
    Degenerate,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub delta: f64,
    pub lambda: f64,
    pub status: CellStatus,
    /// Index into [`SweepResult::points`] for converged cells.
    pub point: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<EquilibriumPoint>,
    pub cells: Vec<SweepCell>,
    /// Adjacent converged cells along a steering sweep whose curvature radii
    /// differ by more than 50%: `(lambda, delta_a, delta_b)`.
    pub folds: Vec<(f64, f64, f64)>,
}

impl SweepResult {
    /// Converged cells over non-degenerate cells.
    pub fn convergence_rate(&self) -> f64 {
        let eligible = self
            .cells
            .iter()
            .filter(|c| c.status != CellStatus::Degenerate)
            .count();
        if eligible == 0 {
            return 0.0;
        }
        let ok = self
            .cells
            .iter()
            .filter(|c| c.status == CellStatus::Converged)
            .count();
        ok as f64 / eligible as f64
    }
}

/// Rough guess for the low-slip end of a steering column: neutral-steer
/// rolling at the speed where the linear tires balance the turn.
fn initial_guess(delta: f64, params: &VehicleParams, tires: &TireParams) -> DynamicState {
    let v = (params.g * params.wheelbase() * 0.5 * tires.slope_at_zero()).sqrt().max(2.0 * V_EPS);
    DynamicState::new(v, 0.0, v * delta / params.wheelbase())
}

/// Solves every cell of the input grid with numerical continuation.
///
/// Steering columns are visited outward from zero on each side; within a
/// column the slip rises from its minimum. Each cell is seeded first from
/// the previous cell of its column, then from the same slip in the previous
/// column, then from a generic guess. Failed cells are recorded, not fatal.
pub fn sweep_inputs(
    config: &SweepConfig,
    params: &VehicleParams,
    tires: &TireParams,
    opts: &SolverOptions,
    screen: Option<&StabilityScreen>,
) -> Result<SweepResult, EsmError> {
    let deltas_deg = config.delta_grid_deg();
    let lambdas = config.lambda_grid();
    let nl = lambdas.len();

    // column visiting order: non-negative side outward, then negative side
    let mut order: Vec<usize> = (0..deltas_deg.len()).filter(|&i| deltas_deg[i] >= 0.0).collect();
    order.sort_by(|&a, &b| deltas_deg[a].abs().total_cmp(&deltas_deg[b].abs()));
    let mut neg: Vec<usize> = (0..deltas_deg.len()).filter(|&i| deltas_deg[i] < 0.0).collect();
    neg.sort_by(|&a, &b| deltas_deg[a].abs().total_cmp(&deltas_deg[b].abs()));
    // zero steering has no preferred turning sense; solve it after its neighbors
    let zero_col = order.iter().position(|&i| deltas_deg[i] == 0.0).map(|p| order.remove(p));
    order.extend(neg);
    order.extend(zero_col);

    let mut solved: Vec<Vec<Option<DynamicState>>> = vec![vec![None; nl]; deltas_deg.len()];
    let mut status = vec![vec![CellStatus::Failed; nl]; deltas_deg.len()];

    for &i in &order {
        let delta = deltas_deg[i].to_radians();
        // neighbor column one step closer to zero steering, on the same side
        let prev_col = (0..deltas_deg.len())
            .filter(|&k| {
                k != i
                    && deltas_deg[k] * deltas_deg[i] >= 0.0
                    && deltas_deg[k].abs() < deltas_deg[i].abs()
            })
            .max_by(|&a, &b| deltas_deg[a].abs().total_cmp(&deltas_deg[b].abs()))
            .or_else(|| {
                // zero column: borrow the positive neighbor
                (deltas_deg[i] == 0.0)
                    .then(|| (0..deltas_deg.len()).filter(|&k| deltas_deg[k] > 0.0).min_by(|&a, &b| deltas_deg[a].total_cmp(&deltas_deg[b])))
                    .flatten()
            });
        for (j, &lambda) in lambdas.iter().enumerate() {
            let input = ControlInput::new(delta, lambda);
            if delta.abs() < 1e-12 && lambda.abs() < 1e-12 {
                status[i][j] = CellStatus::Degenerate;
                continue;
            }
            let mut seeds = Vec::with_capacity(3);
            if j > 0 {
                if let Some(s) = solved[i][j - 1] {
                    seeds.push(s);
                }
            }
            if let Some(k) = prev_col {
                if let Some(s) = solved[k][j] {
                    seeds.push(s);
                }
            }
            seeds.push(initial_guess(delta, params, tires));
            for seed in seeds {
                if let Ok(p) = solve_equilibrium(&input, params, tires, &seed, opts) {
                    solved[i][j] = Some(p.dyn_state);
                    status[i][j] = CellStatus::Converged;
                    break;
                }
            }
        }
    }

    let mut points = Vec::new();
    let mut cells = Vec::with_capacity(deltas_deg.len() * nl);
    for (i, d_deg) in deltas_deg.iter().enumerate() {
        let delta = d_deg.to_radians();
        for (j, &lambda) in lambdas.iter().enumerate() {
            let point = solved[i][j].map(|d| {
                let input = ControlInput::new(delta, lambda);
                let mut p = EquilibriumPoint {
                    dyn_state: d,
                    input,
                    r_c: d.v / d.psidot,
                    stability: Stability::Unscreened,
                };
                if let Some(screen) = screen {
                    p.stability = screen.classify(&p, params, tires);
                }
                points.push(p);
                points.len() - 1
            });
            cells.push(SweepCell {
                delta,
                lambda,
                status: status[i][j],
                point,
            });
        }
    }

    if points.is_empty() {
        return Err(EsmError::EmptySet);
    }

    let mut folds = Vec::new();
    for (j, &lambda) in lambdas.iter().enumerate() {
        for i in 1..deltas_deg.len() {
            if let (Some(a), Some(b)) = (solved[i - 1][j], solved[i][j]) {
                let (ra, rb) = (a.v / a.psidot, b.v / b.psidot);
                if (ra - rb).abs() > 0.5 * ra.abs().min(rb.abs()) {
                    folds.push((lambda, deltas_deg[i - 1].to_radians(), deltas_deg[i].to_radians()));
                }
            }
        }
    }
    if !folds.is_empty() {
        log::warn!("{} possible folds along steering sweeps", folds.len());
    }

    Ok(SweepResult { points, cells, folds })
}

/// Everything needed to compute a manifold offline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsmConfig {
    pub sweep: SweepConfig,
    pub solver: SolverOptions,
    pub stability: StabilityScreen,
    pub build: BuildOptions,
    /// Sweep only non-negative steering and derive the clockwise half as the
    /// mirror image.
    pub mirror: bool,
}

impl Default for EsmConfig {
    fn default() -> Self {
        EsmConfig {
            sweep: SweepConfig::default(),
            solver: SolverOptions::default(),
            stability: StabilityScreen::default(),
            build: BuildOptions::default(),
            mirror: true,
        }
    }
}

/// Result of [`compute_manifold`].
#[derive(Debug, Clone)]
pub struct EsmBuild {
    pub manifold: Manifold,
    pub sweep: SweepResult,
}

/// Sweeps, screens, optionally mirrors, and triangulates.
pub fn compute_manifold(
    config: &EsmConfig,
    params: &VehicleParams,
    tires: &TireParams,
) -> Result<EsmBuild, EsmError> {
    let mut sweep_cfg = config.sweep;
    if config.mirror {
        sweep_cfg.delta_min_deg = sweep_cfg.delta_min_deg.max(0.0);
        sweep_cfg.delta_max_deg = sweep_cfg.delta_max_deg.max(sweep_cfg.delta_min_deg.abs());
    }
    let sweep = sweep_inputs(&sweep_cfg, params, tires, &config.solver, Some(&config.stability))?;
    let mut points = sweep.points.clone();
    if config.mirror {
        points.extend(mirror_points(&sweep.points));
    }
    let manifold = build_manifold(&points, &config.build, &parameter_hash(params, tires))?;
    Ok(EsmBuild { manifold, sweep })
}
