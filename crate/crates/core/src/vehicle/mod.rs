//! Single-track vehicle model on a low-friction surface.
//!
//! The model carries six states: the planar pose `(x, y, psi)` and the
//! dynamic states `(v, beta, psidot)`. Pose evolves kinematically from the
//! dynamic states; the dynamic states evolve either under the full nonlinear
//! balance with Magic Formula tires ([`model::full_model_derivatives`]) or
//! under the linearized bicycle forces ([`model::bicycle_derivatives`]).
//!
//! The drivetrain is rear-wheel drive: the front axle never carries a
//! longitudinal force.

pub mod kinematics;
pub mod model;
pub mod tire;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kinematics::{integrate_kinematics, rollout_dynamics};
pub use model::{
    axle_forces, bicycle_derivatives, bicycle_forces, derivatives, full_model_derivatives,
    normal_loads, slip_angles, AxleForces, ForceModel, NormalLoads, StateDerivative,
};
pub use tire::{mf_friction, theoretical_slips, SlipState, TireParams};

/// Below this speed slip angles are undefined (division by `v`).
pub const V_EPS: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("speed {v} m/s is at or below the low-speed guard {V_EPS} m/s")]
    LowSpeed { v: f64 },
    #[error("longitudinal slip {lambda} must be greater than -1")]
    SlipDomain { lambda: f64 },
    #[error("slip angle {alpha} rad is outside (-pi/2, pi/2)")]
    SlipAngleDomain { alpha: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

/// Chassis parameters.
///
/// The defaults are artifact defaults for a mid-size rear-driven car; the
/// stiffness coefficients are the Magic Formula slope at zero slip times the
/// static axle load, so the bicycle forces agree with the full tire model
/// near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    /// Mass (kg).
    pub mass: f64,
    /// Yaw inertia around the vertical axis (kg m^2).
    pub yaw_inertia: f64,
    /// Distance from the center of gravity to the front axle (m).
    pub l_f: f64,
    /// Distance from the center of gravity to the rear axle (m).
    pub l_r: f64,
    /// Height of the center of gravity (m).
    pub cog_height: f64,
    /// Front lateral stiffness (N/rad).
    pub c_f: f64,
    /// Rear lateral stiffness (N/rad).
    pub c_r: f64,
    /// Rear longitudinal stiffness (N per unit slip).
    pub c_x: f64,
    /// Top speed (m/s).
    pub v_max: f64,
    /// Largest acceleration magnitude the planner may assume (m/s^2).
    pub a_max: f64,
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    /// Static `(front, rear)` axle loads in newtons.
    pub fn static_loads(&self) -> (f64, f64) {
        let l = self.wheelbase();
        (
            self.mass * self.g * self.l_r / l,
            self.mass * self.g * self.l_f / l,
        )
    }

    /// Replaces the three stiffness coefficients with the slope of the tire
    /// curve at zero slip scaled by the static axle loads.
    pub fn with_tire_stiffness(mut self, tires: &TireParams) -> Self {
        let slope = tires.slope_at_zero();
        let (fzf, fzr) = self.static_loads();
        self.c_f = fzf * slope;
        self.c_r = fzr * slope;
        self.c_x = fzr * slope;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("mass", self.mass),
            ("yaw_inertia", self.yaw_inertia),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("cog_height", self.cog_height),
            ("c_f", self.c_f),
            ("c_r", self.c_r),
            ("c_x", self.c_x),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("g", self.g),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParam {
                    name,
                    reason: format!("must be finite and strictly positive, got {value}"),
                });
            }
        }
        Ok(())
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 1400.0,
            yaw_inertia: 2000.0,
            l_f: 1.3,
            l_r: 1.3,
            cog_height: 0.4,
            c_f: 0.0,
            c_r: 0.0,
            c_x: 0.0,
            v_max: 14.0,
            a_max: 3.0,
            g: 9.81,
        }
        .with_tire_stiffness(&TireParams::gravel())
    }
}

/// Speed, side-slip and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynamicState {
    /// Speed (m/s).
    pub v: f64,
    /// Side-slip angle (rad).
    pub beta: f64,
    /// Yaw rate (rad/s).
    pub psidot: f64,
}

impl DynamicState {
    pub fn new(v: f64, beta: f64, psidot: f64) -> Self {
        DynamicState { v, beta, psidot }
    }

    /// Linear blend `self + t (other - self)`.
    pub fn lerp(&self, other: &DynamicState, t: f64) -> DynamicState {
        DynamicState {
            v: self.v + t * (other.v - self.v),
            beta: self.beta + t * (other.beta - self.beta),
            psidot: self.psidot + t * (other.psidot - self.psidot),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Yaw angle (rad), kept in `(-pi, pi]`.
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Pose {
            x,
            y,
            psi: normalize_angle(psi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState {
    pub pose: Pose,
    pub dyn_state: DynamicState,
}

impl FullState {
    pub fn new(pose: Pose, dyn_state: DynamicState) -> Self {
        FullState { pose, dyn_state }
    }
}

/// Steering angle and rear driving-wheel slip.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Steering angle (rad).
    pub delta: f64,
    /// Rear longitudinal slip (dimensionless, > -1).
    pub lambda: f64,
}

impl ControlInput {
    pub fn new(delta: f64, lambda: f64) -> Self {
        ControlInput { delta, lambda }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}
