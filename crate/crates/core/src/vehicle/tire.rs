//! Isotropic combined-slip Magic Formula.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Magic Formula coefficients of a single isotropic friction curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TireParams {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl Default for TireParams {
    fn default() -> Self {
        Self::gravel()
    }
}

impl TireParams {
    /// Coefficients for a gravel surface.
    pub fn gravel() -> Self {
        TireParams {
            b: 1.5289,
            c: 1.0901,
            d: 0.6,
            e: -0.95084,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(ModelError::InvalidParam {
                name: "b",
                reason: format!("must be positive, got {}", self.b),
            });
        }
        if !(self.d > 0.0 && self.d <= 1.0) {
            return Err(ModelError::InvalidParam {
                name: "d",
                reason: format!("must lie in (0, 1], got {}", self.d),
            });
        }
        if !(self.c.is_finite() && self.e.is_finite()) {
            return Err(ModelError::InvalidParam {
                name: "c/e",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// Friction magnitude as a function of the combined theoretical slip.
    pub fn magnitude(&self, sigma: f64) -> f64 {
        let sb = sigma * self.b;
        self.d * (self.c * (sb - self.e * (sb - sb.atan())).atan()).sin()
    }

    /// `d magnitude / d sigma` at zero slip, i.e. `B C D`.
    pub fn slope_at_zero(&self) -> f64 {
        self.b * self.c * self.d
    }

    /// Upper bound of the friction magnitude over all slips, from a dense
    /// log-spaced scan of `sigma` in `[1e-6, 1e4]`.
    pub fn friction_bound(&self) -> f64 {
        let n = 200_000;
        let (lo, hi) = (1e-6_f64.ln(), 1e4_f64.ln());
        (0..=n)
            .map(|i| {
                let s = (lo + (hi - lo) * i as f64 / n as f64).exp();
                self.magnitude(s).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Theoretical slips built from longitudinal slip and slip angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipState {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma: f64,
}

impl SlipState {
    /// Builds a slip state directly from its two components.
    pub fn from_components(sigma_x: f64, sigma_y: f64) -> Self {
        SlipState {
            sigma_x,
            sigma_y,
            sigma: sigma_x.hypot(sigma_y),
        }
    }
}

pub fn theoretical_slips(lambda: f64, alpha: f64) -> Result<SlipState, ModelError> {
    if !(lambda > -1.0) {
        return Err(ModelError::SlipDomain { lambda });
    }
    if !(alpha.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(ModelError::SlipAngleDomain { alpha });
    }
    let denom = 1.0 + lambda;
    Ok(SlipState::from_components(lambda / denom, alpha.tan() / denom))
}

/// Directional friction coefficients `(mu_x, mu_y)`.
///
/// The friction vector is parallel to `(sigma_x, sigma_y)` and its length
/// depends only on `sigma`. At zero slip both components are zero.
pub fn mf_friction(slips: &SlipState, tires: &TireParams) -> (f64, f64) {
    if slips.sigma == 0.0 {
        return (0.0, 0.0);
    }
    let mag = tires.magnitude(slips.sigma);
    (
        slips.sigma_x / slips.sigma * mag,
        slips.sigma_y / slips.sigma * mag,
    )
}
