//! Experiment plumbing: instance generation, noising, evaluation and reports.

mod generate;
mod metrics;

pub use generate::{generate_instances, instance_name, noise_instances, GenParams};
pub use metrics::{
    episode_seed, evaluate_policies, normalized_scores, summarize, EvalReport, EvalRow,
    NamedPolicy, PolicySpec, ResultSet, Scores, Summary,
};

use std::collections::HashSet;

use thiserror::Error;

use crate::policy::PolicyError;
use crate::sim::{Instance, SimError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// One split per instance: train on all others, hold that one out.
pub fn leave_one_out_splits(
    instances: &[Instance],
) -> Result<Vec<(Vec<&Instance>, &Instance)>, HarnessError> {
    if instances.len() < 2 {
        return Err(HarnessError::Validation(
            "leave-one-out needs at least two instances".into(),
        ));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = instances.iter().find(|i| !seen.insert(i.id())) {
        return Err(HarnessError::Validation(format!(
            "duplicate instance id {}",
            dup.id()
        )));
    }
    Ok(instances
        .iter()
        .enumerate()
        .map(|(k, held)| {
            let train = instances
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, inst)| inst)
                .collect();
            (train, held)
        })
        .collect())
}
