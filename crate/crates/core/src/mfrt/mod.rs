//! Model-free real-time control of slack injections between reconfigurations.

mod controller;
mod episode;
mod plant;

use thiserror::Error;

pub use controller::{
    approx_gradient, assign_frequencies, cc_masks, constraint_g, dual_step, exploration_vector,
    primal_step, ControllerConfig, DualSign, GradientScale,
};
pub use episode::{
    run_episode, CcRecord, EpisodeSchedule, EventScope, LoadEvent, Period, StepRecord,
    TrajectoryLog,
};
pub use plant::{plant_measure, pq_nodes, PlantMeasurement};

#[derive(Debug, Error)]
pub enum MfrtError {
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Plant(#[from] crate::lindistflow::PlantError),
    #[error(transparent)]
    Scenario(#[from] crate::netmodel::ScenarioError),
}
