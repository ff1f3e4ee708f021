//! Hybrid A* over motion primitives.
//!
//! Nodes carry the exact continuous six-dimensional state together with its
//! grid cell; duplicate detection works on `(cell, depth)` while expansion
//! always starts from the exact state. Children come from two generators:
//! transitions to sampled equilibria of the manifold, and constant-input
//! rollouts of the linear bicycle model near straight driving. The search
//! maximizes road progress over a fixed number of primitives.

mod config;
mod expand;
mod heuristic;
mod node;
mod replan;
mod search;

use thiserror::Error;

use crate::track::TrackError;

pub use config::{BicycleGrid, GridSteps, HeuristicWeights, PlannerConfig, Ring, SamplingPattern};
pub use expand::{collision_check, CollisionResult, Expansion, PlanningContext, PruneCounts};
pub use heuristic::{base_heuristic, heuristic};
pub use node::{discretize, discretize_value, reconstruct, state_vector, ExpansionMode, GridCell, MotionPrimitive, Node};
pub use replan::{replan_loop, CycleRecord, ExecutedLog, LoopOutcome, StopCondition};
pub use search::{assemble_trajectory, root_node, search, SearchResult, SearchStats, Termination, TrajectorySample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("initial pose is off the road (d = {d} m)")]
    InitialOffRoad { d: f64 },
    #[error("every child of the initial node was pruned ({pruned:?})")]
    NoFeasibleNode { pruned: PruneCounts },
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("internal inconsistency: {0}")]
    Inconsistent(&'static str),
}

#[cfg(test)]
mod tests;
