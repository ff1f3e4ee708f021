//! Batch runs: configuration, manifold build and inspection, single plans,
//! and receding-horizon laps, with CSV logs, text summaries and SVG figures.
//!
//! Every data file is a pure function of the configuration and carries its
//! hash; per-cycle wall times go to a separate `timings.csv`.

mod commands;
mod config;
mod metrics;
mod output;
mod svg;

use thiserror::Error;

use crate::esm::EsmError;
use crate::planner::PlannerError;

pub use commands::{cmd_esm_build, cmd_esm_show, cmd_lap, cmd_plan, manifold_summary, Inputs, LapReport};
pub use config::{InitialState, MetricsConfig, ParamsFile, Paths, RunConfig, RunMode, RunSection};
pub use metrics::{DriftInterval, LapMetrics};
pub use output::{
    cycles_csv, parse_mode, parse_trajectory_csv, stats_text, timings_csv, trajectory_csv, TrajectoryRow,
    TRAJECTORY_HEADER,
};
pub use svg::{lap_states_svg, lap_track_svg, manifold_svg, plan_svg, track_edges, Bounds, Frame, Svg};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Esm(EsmError),
    #[error(transparent)]
    Planner(PlannerError),
    #[error("run did not finish: {0}")]
    Starved(String),
}

impl HarnessError {
    /// 1 for configuration and file problems, 2 for solver or planner failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 1,
            HarnessError::Esm(_) | HarnessError::Planner(_) | HarnessError::Starved(_) => 2,
        }
    }
}
