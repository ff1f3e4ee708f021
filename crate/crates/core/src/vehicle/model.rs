//! Axle forces and the dynamic-state balance.
//!
//! Sign conventions: a positive slip angle produces a negative lateral force
//! (the force opposes the lateral slip), and a positive rear slip `lambda`
//! produces a positive driving force. The linearized bicycle forces follow
//! the same conventions, so `F_y = -C alpha` and `F_x = C_x lambda` near the
//! origin.

use super::tire::{mf_friction, theoretical_slips, TireParams};
use super::{ControlInput, DynamicState, ModelError, VehicleParams, V_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxleForces {
    pub fx_f: f64,
    pub fy_f: f64,
    pub fx_r: f64,
    pub fy_r: f64,
    pub fz_f: f64,
    pub fz_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalLoads {
    pub front: f64,
    pub rear: f64,
    /// Set when one axle would carry a negative load and was clamped to zero.
    pub wheel_lift: bool,
}

/// Time derivatives of the dynamic states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub v_dot: f64,
    pub beta_dot: f64,
    pub psi_ddot: f64,
}

impl StateDerivative {
    pub fn max_abs(&self) -> f64 {
        self.v_dot
            .abs()
            .max(self.beta_dot.abs())
            .max(self.psi_ddot.abs())
    }
}

/// Which force law drives the balance equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceModel {
    /// Magic Formula tires with longitudinal weight transfer.
    Full,
    /// Linearized stiffness forces, valid near straight driving.
    Bicycle,
}

fn check_speed(dyn_state: &DynamicState) -> Result<(), ModelError> {
    if dyn_state.v > V_EPS {
        Ok(())
    } else {
        Err(ModelError::LowSpeed { v: dyn_state.v })
    }
}

/// Front and rear slip angles `(alpha_f, alpha_r)`.
pub fn slip_angles(
    dyn_state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
) -> Result<(f64, f64), ModelError> {
    check_speed(dyn_state)?;
    let DynamicState { v, beta, psidot } = *dyn_state;
    let (sb, cb) = beta.sin_cos();
    let vx = v * cb;
    let alpha_f = ((v * sb + params.l_f * psidot) / vx).atan() - input.delta;
    let alpha_r = ((v * sb - params.l_r * psidot) / vx).atan();
    Ok((alpha_f, alpha_r))
}

/// Axle loads under longitudinal acceleration `a_x`.
pub fn normal_loads(params: &VehicleParams, a_x: f64) -> NormalLoads {
    let l = params.wheelbase();
    let m = params.mass;
    let front = m * (params.g * params.l_r - a_x * params.cog_height) / l;
    let rear = m * (params.g * params.l_f + a_x * params.cog_height) / l;
    let total = m * params.g;
    if front < 0.0 {
        NormalLoads {
            front: 0.0,
            rear: total,
            wheel_lift: true,
        }
    } else if rear < 0.0 {
        NormalLoads {
            front: total,
            rear: 0.0,
            wheel_lift: true,
        }
    } else {
        NormalLoads {
            front,
            rear,
            wheel_lift: false,
        }
    }
}

/// Tire forces of the full model.
///
/// The rear load depends on the acceleration `F_xr / m`, and `F_xr` depends
/// on the rear load. Since the friction coefficient only depends on the
/// kinematic slips, the load/force fixed point is solved in closed form:
/// `F_zr = (m g l_f / L) / (1 - mu_xr h / L)`.
pub fn axle_forces(
    dyn_state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
) -> Result<AxleForces, ModelError> {
    let (alpha_f, alpha_r) = slip_angles(dyn_state, input, params)?;
    let front = theoretical_slips(0.0, alpha_f)?;
    let rear = theoretical_slips(input.lambda, alpha_r)?;
    let (_, mu_yf) = mf_friction(&front, tires);
    let (mu_xr, mu_yr) = mf_friction(&rear, tires);

    let l = params.wheelbase();
    let m = params.mass;
    let transfer = 1.0 - mu_xr * params.cog_height / l;
    let a_x = if transfer > 0.0 {
        let fz_r = m * params.g * params.l_f / l / transfer;
        fz_r * mu_xr / m
    } else {
        // the rear would take the whole car; let the saturation below clamp it
        f64::INFINITY * mu_xr.signum()
    };
    let loads = normal_loads(params, a_x);

    Ok(AxleForces {
        fx_f: 0.0,
        fy_f: -loads.front * mu_yf,
        fx_r: loads.rear * mu_xr,
        fy_r: -loads.rear * mu_yr,
        fz_f: loads.front,
        fz_r: loads.rear,
    })
}

/// Linearized tire forces.
pub fn bicycle_forces(
    dyn_state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
) -> Result<AxleForces, ModelError> {
    check_speed(dyn_state)?;
    let DynamicState { v, beta, psidot } = *dyn_state;
    let fx_r = params.c_x * input.lambda;
    let loads = normal_loads(params, fx_r / params.mass);
    Ok(AxleForces {
        fx_f: 0.0,
        fy_f: -params.c_f * (beta + params.l_f * psidot / v - input.delta),
        fx_r,
        fy_r: -params.c_r * (beta - params.l_r * psidot / v),
        fz_f: loads.front,
        fz_r: loads.rear,
    })
}

/// Balance equations shared by both force laws.
fn balance(dyn_state: &DynamicState, f: &AxleForces, params: &VehicleParams) -> StateDerivative {
    let DynamicState { v, beta, psidot } = *dyn_state;
    let m = params.mass;
    StateDerivative {
        v_dot: psidot * v * beta + f.fx_r / m,
        beta_dot: (f.fy_f + f.fy_r) / (m * v) - psidot,
        psi_ddot: (params.l_f * f.fy_f - params.l_r * f.fy_r) / params.yaw_inertia,
    }
}

pub fn full_model_derivatives(
    dyn_state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
) -> Result<StateDerivative, ModelError> {
    let f = axle_forces(dyn_state, input, params, tires)?;
    Ok(balance(dyn_state, &f, params))
}

pub fn bicycle_derivatives(
    dyn_state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
) -> Result<StateDerivative, ModelError> {
    let f = bicycle_forces(dyn_state, input, params)?;
    Ok(balance(dyn_state, &f, params))
}

pub fn derivatives(
    model: ForceModel,
    dyn_state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
) -> Result<StateDerivative, ModelError> {
    match model {
        ForceModel::Full => full_model_derivatives(dyn_state, input, params, tires),
        ForceModel::Bicycle => bicycle_derivatives(dyn_state, input, params),
    }
}
