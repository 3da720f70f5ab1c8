//! Constrained evolution strategies with stochastic ranking and adaptive
//! instance sampling.

mod ais;
mod config;
mod gradient;
mod isr;
mod penalty;
mod population;
mod train;

pub use ais::{ais_select, inverted_distance, softmax, ucb_scores, AisState};
pub use config::EsConfig;
pub use gradient::{estimate_gradient, gradient_step, shaped_fitness};
pub use isr::{intrinsic_stochastic_ranking, rank_buffer, FitnessRecord};
pub use penalty::{penalty, relaxed_penalty, relaxed_penalty_slope, sr_surrogate};
pub use population::{sample_population, Population};
pub use train::{evaluate, train, GenerationLog, TrainOutcome, Trainer};

use thiserror::Error;

use crate::policy::PolicyError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum EsError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("at least one training instance is required")]
    NoInstances,
    #[error("record {0} is missing its reward or cost")]
    IncompleteRecord(usize),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("generation {generation}: {source}")]
    Generation {
        generation: usize,
        #[source]
        source: Box<EsError>,
    },
}

impl EsError {
    pub fn is_divergence(&self) -> bool {
        match self {
            EsError::Divergence(_) => true,
            EsError::Generation { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
