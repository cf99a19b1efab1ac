//! Scenario profiles, seeded Monte Carlo trials, metrics and sweeps.

mod config;
mod grid;
mod placement;
mod sweep;
mod trial;

pub use config::{GridSpec, ScenarioConfig, TargetPlacement, DESK_SENSING_POWER_W};
pub use grid::{build_grid, grid_bound};
pub use placement::{place_nodes, place_targets, place_ues, uniform_disc, Placement, MAX_PLACEMENT_ATTEMPTS};
pub use sweep::{
    aggregate, fmt_float, mean_stderr, run_trials, sweep, write_csv, SweepAxis, SweepRow, CSV_HEADER, GRID_BOUND_LABEL,
};
pub use trial::{matched_distance_error, prepare_trial, run_trial, Framework, FrameworkResult, TrialContext, TrialResult};
