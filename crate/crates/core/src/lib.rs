//! Drift-capable motion planning for a rear-wheel-drive car on low-friction
//! surfaces.
//!
//! The planner searches over motion primitives that end on steady-state
//! cornering equilibria of a single-track model with Magic Formula tires,
//! so planned maneuvers may include sustained sideslip.
//!
//! - [`vehicle`]: tire and vehicle models, kinematic integration.
//! - [`esm`]: offline equilibrium sweep and the interpolated manifold.
//! - [`track`]: constant-width roads and Frenet coordinates.
//! - [`planner`]: hybrid A* over primitives and the receding-horizon loop.
//! - [`harness`]: configuration, batch commands and output files.

pub mod vehicle;
pub mod esm;
pub mod track;
pub mod planner;
pub mod harness;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/vehicle.md")]
    mod vehicle {}
    #[doc = include_str!("../../../book/src/manifold.md")]
    mod manifold {}
    #[doc = include_str!("../../../book/src/track.md")]
    mod track {}
    #[doc = include_str!("../../../book/src/planner.md")]
    mod planner {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
