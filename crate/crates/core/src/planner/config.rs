use serde::{Deserialize, Serialize};

use super::PlannerError;

/// Discretization step of each state dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSteps {
    pub x: f64,
    pub y: f64,
    pub psi_deg: f64,
    pub v: f64,
    pub beta: f64,
    pub psidot: f64,
}

impl Default for GridSteps {
    fn default() -> Self {
        GridSteps {
            x: 1.0,
            y: 1.0,
            psi_deg: 10.0,
            v: 0.5,
            beta: 0.05,
            psidot: 0.1,
        }
    }
}

impl GridSteps {
    /// Steps in state order `(x, y, psi, v, beta, psidot)`, angles in radians.
    pub fn as_array(&self) -> [f64; 6] {
        [self.x, self.y, self.psi_deg.to_radians(), self.v, self.beta, self.psidot]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ring {
    /// Radius in normalized `(beta / beta_scale, psidot / psidot_scale)` units.
    pub radius: f64,
    pub count: usize,
}

/// Where ESM endpoints are sampled around the current `(beta, psidot)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingPattern {
    pub include_center: bool,
    pub beta_scale: f64,
    pub psidot_scale: f64,
    /// Concentric rings, innermost first. Each ring is rotated by half its
    /// angular spacing relative to the previous one.
    pub rings: Vec<Ring>,
}

impl Default for SamplingPattern {
    fn default() -> Self {
        SamplingPattern {
            include_center: true,
            beta_scale: 1.0,
            psidot_scale: 1.0,
            rings: vec![
                Ring { radius: 0.05, count: 6 },
                Ring { radius: 0.15, count: 8 },
                Ring { radius: 0.3, count: 8 },
            ],
        }
    }
}

impl SamplingPattern {
    /// Offsets `(d_beta, d_psidot)` of every sample, center first.
    pub fn offsets(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if self.include_center {
            out.push((0.0, 0.0));
        }
        let mut phase = 0.0;
        for ring in &self.rings {
            for j in 0..ring.count {
                let a = phase + 2.0 * std::f64::consts::PI * j as f64 / ring.count as f64;
                out.push((
                    ring.radius * a.cos() * self.beta_scale,
                    ring.radius * a.sin() * self.psidot_scale,
                ));
            }
            if ring.count > 0 {
                phase += std::f64::consts::PI / ring.count as f64;
            }
        }
        out
    }

    pub fn sample_count(&self) -> usize {
        usize::from(self.include_center) + self.rings.iter().map(|r| r.count).sum::<usize>()
    }
}

/// Constant-input grid of bicycle-mode rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BicycleGrid {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_count: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
}

impl Default for BicycleGrid {
    fn default() -> Self {
        BicycleGrid {
            delta_min: -0.15,
            delta_max: 0.15,
            delta_count: 7,
            lambda_min: -0.6,
            lambda_max: 0.6,
            lambda_count: 7,
        }
    }
}

fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (min + max)],
        _ => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl BicycleGrid {
    pub fn deltas(&self) -> Vec<f64> {
        linspace(self.delta_min, self.delta_max, self.delta_count)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        linspace(self.lambda_min, self.lambda_max, self.lambda_count)
    }
}

/// Weights of the heuristic augmentations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeuristicWeights {
    /// Per unit of `|dv| + |dbeta| + |dpsidot|` relative to the parent.
    pub smooth: f64,
    /// Per meter of lateral offset inside the edge band.
    pub edge: f64,
    /// Width of the band inside the safe margin where the edge term is active (m).
    pub edge_band: f64,
    /// Numerator of the `sibling / (1 + count)` term.
    pub sibling: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        HeuristicWeights {
            smooth: 0.1,
            edge: 1.0,
            edge_band: 1.0,
            sibling: 1.0,
        }
    }
}

impl HeuristicWeights {
    pub fn zero() -> Self {
        HeuristicWeights {
            smooth: 0.0,
            edge: 0.0,
            edge_band: 0.0,
            sibling: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub grid: GridSteps,
    /// Duration of one motion primitive (s).
    pub t_s: f64,
    /// Sample intervals per primitive.
    pub samples_per_primitive: usize,
    /// Search depth in primitives.
    pub k_hor: usize,
    /// Largest OPEN size before the search gives up.
    pub n_timeout: usize,
    pub sampling: SamplingPattern,
    pub esm_enabled: bool,
    pub bicycle_enabled: bool,
    pub bicycle: BicycleGrid,
    /// The bicycle region is `|beta| < beta_lin` and `|psidot| < psidot_lin`.
    pub beta_lin: f64,
    pub psidot_lin: f64,
    /// ESM samples with `beta * psidot > 0` survive only below this `|beta|`.
    pub same_sign_beta_margin: f64,
    /// Overrides the vehicle's acceleration bound when set.
    pub a_max: Option<f64>,
    pub weights: HeuristicWeights,
    /// Replanning period (s).
    pub t_rep: f64,
    /// Planning time budget (s); recorded, not enforced.
    pub t_plan: f64,
    pub vehicle_half_width: f64,
    pub clearance: f64,
    /// Half-window of the projection walk used by collision checks (m).
    pub projection_window: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            grid: GridSteps::default(),
            t_s: 0.5,
            samples_per_primitive: 20,
            k_hor: 12,
            n_timeout: 60_000,
            sampling: SamplingPattern::default(),
            esm_enabled: true,
            bicycle_enabled: true,
            bicycle: BicycleGrid::default(),
            beta_lin: 0.1,
            psidot_lin: 0.3,
            same_sign_beta_margin: 0.05,
            a_max: None,
            weights: HeuristicWeights::default(),
            t_rep: 1.0,
            t_plan: 1.0,
            vehicle_half_width: 0.9,
            clearance: 0.1,
            projection_window: 10.0,
        }
    }
}

impl PlannerConfig {
    /// Sample spacing inside a primitive (s).
    pub fn dt(&self) -> f64 {
        self.t_s / self.samples_per_primitive as f64
    }

    /// Largest admissible `|d|` for a point-mass vehicle on a road of `width`.
    pub fn d_safe(&self, width: f64) -> f64 {
        0.5 * width - (self.vehicle_half_width + self.clearance)
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |what: &str| Err(PlannerError::InvalidConfig(what.to_string()));
        let steps = self.grid.as_array();
        if steps.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("grid steps must be positive");
        }
        if !(self.t_s > 0.0) || self.samples_per_primitive == 0 {
            return bad("t_s and samples_per_primitive must be positive");
        }
        if !(self.t_plan <= self.t_rep) {
            return bad("t_plan must not exceed t_rep");
        }
        if !(self.t_rep > 0.0) {
            return bad("t_rep must be positive");
        }
        let per = self.t_rep / self.dt();
        if (per - per.round()).abs() > 1e-9 {
            return bad("t_rep must be a whole number of sample intervals");
        }
        let mut last = 0.0;
        for ring in &self.sampling.rings {
            if !(ring.radius > last) {
                return bad("ring radii must be positive and increasing");
            }
            last = ring.radius;
        }
        if !(self.sampling.beta_scale > 0.0 && self.sampling.psidot_scale > 0.0) {
            return bad("sampling scales must be positive");
        }
        if !(self.beta_lin > 0.0 && self.psidot_lin > 0.0) {
            return bad("bicycle region thresholds must be positive");
        }
        if self.a_max.is_some_and(|a| !(a > 0.0)) {
            return bad("a_max must be positive");
        }
        if !self.esm_enabled && !self.bicycle_enabled {
            return bad("at least one expansion mode must be enabled");
        }
        Ok(())
    }
}
