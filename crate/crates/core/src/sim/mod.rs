//! Event-driven simulation of an AGV fleet serving dynamically released tasks.

mod episode;
mod instance;
mod state;

pub use episode::{run_episode, run_episode_traced, Decision, EpisodeResult, Policy, TraceEntry};
pub use instance::{
    load_instance, micro1, BreakdownSpec, Instance, Site, SiteKind, TaskSpec, VehicleSpec,
};
pub use state::{Served, SimState, Step, TaskPhase, VehicleState, VehicleStatus};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("vehicle {vehicle} is {state:?}; only Idle vehicles may be assigned")]
    InstantaneousConstraint { vehicle: usize, state: VehicleState },
    #[error("task pool is empty")]
    EmptyPool,
    #[error("task {0} is not in the pool")]
    UnknownTask(usize),
    #[error("vehicle {0} does not exist")]
    UnknownVehicle(usize),
    #[error("no events remain at t={clock} with {unserved} tasks unserved")]
    Deadlock { clock: f64, unserved: usize },
    #[error("episode has not terminated")]
    NotTerminal,
    #[error("tardiness is undefined for an instance without tasks")]
    UndefinedTardiness,
    #[error("policy error: {0}")]
    Policy(String),
}
