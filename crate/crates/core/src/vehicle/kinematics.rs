//! Time integration: pose from dynamic-state samples, and dynamic-state
//! rollouts under constant inputs. Both use classic fixed-step RK4.

use super::model::{derivatives, ForceModel};
use super::tire::TireParams;
use super::{normalize_angle, ControlInput, DynamicState, ModelError, Pose, VehicleParams};

fn pose_rate(psi: f64, d: &DynamicState) -> [f64; 3] {
    let (s, c) = (psi + d.beta).sin_cos();
    [d.v * c, d.v * s, d.psidot]
}

/// Integrates `x' = v cos(psi + beta)`, `y' = v sin(psi + beta)`,
/// `psi' = psidot` through a sequence of dynamic-state samples spaced `dt`
/// apart. Between samples the dynamic states are linear in time.
///
/// Returns one pose per sample; the first is `pose0`.
pub fn integrate_kinematics(pose0: Pose, samples: &[DynamicState], dt: f64) -> Vec<Pose> {
    let mut out = Vec::with_capacity(samples.len());
    if samples.is_empty() {
        return out;
    }
    let mut p = pose0;
    out.push(p);
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mid = a.lerp(b, 0.5);
        let h = dt;
        let k1 = pose_rate(p.psi, a);
        let k2 = pose_rate(p.psi + 0.5 * h * k1[2], &mid);
        let k3 = pose_rate(p.psi + 0.5 * h * k2[2], &mid);
        let k4 = pose_rate(p.psi + h * k3[2], b);
        let step = |i: usize| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        p = Pose {
            x: p.x + step(0),
            y: p.y + step(1),
            psi: normalize_angle(p.psi + step(2)),
        };
        out.push(p);
    }
    out
}

fn add_scaled(d: &DynamicState, k: [f64; 3], h: f64) -> DynamicState {
    DynamicState {
        v: d.v + h * k[0],
        beta: d.beta + h * k[1],
        psidot: d.psidot + h * k[2],
    }
}

/// Rolls out the dynamic states under a constant input.
///
/// Produces `n_samples + 1` states spaced `dt` apart, each sample interval
/// split into `substeps` RK4 steps.
#[allow(clippy::too_many_arguments)]
pub fn rollout_dynamics(
    dyn0: DynamicState,
    input: &ControlInput,
    model: ForceModel,
    params: &VehicleParams,
    tires: &TireParams,
    dt: f64,
    n_samples: usize,
    substeps: usize,
) -> Result<Vec<DynamicState>, ModelError> {
    let substeps = substeps.max(1);
    let h = dt / substeps as f64;
    let f = |d: &DynamicState| -> Result<[f64; 3], ModelError> {
        let r = derivatives(model, d, input, params, tires)?;
        Ok([r.v_dot, r.beta_dot, r.psi_ddot])
    };
    let mut out = Vec::with_capacity(n_samples + 1);
    let mut d = dyn0;
    out.push(d);
    for _ in 0..n_samples {
        for _ in 0..substeps {
            let k1 = f(&d)?;
            let k2 = f(&add_scaled(&d, k1, 0.5 * h))?;
            let k3 = f(&add_scaled(&d, k2, 0.5 * h))?;
            let k4 = f(&add_scaled(&d, k3, h))?;
            let k = [0, 1, 2].map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
            d = add_scaled(&d, k, h);
        }
        out.push(d);
    }
    Ok(out)
}
