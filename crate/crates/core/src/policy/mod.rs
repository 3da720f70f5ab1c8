//! Observation encoding, the MLP policy and hybrid-action decoding.

mod checkpoint;
mod decode;
mod features;
mod network;

pub use checkpoint::Checkpoint;
pub use decode::{decode_action, decode_index, split_action, ActionMask, DecodeMode};
pub use features::{
    featurize, featurize_into, observation_len, time_scale, TASK_FEATURES, TASK_SLOTS,
    VEHICLE_FEATURES,
};
pub use network::{Arch, PolicyParams, DEFAULT_HIDDEN};

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rules::RuleId;
use crate::seeding;
use crate::sim::{Decision, Instance, Policy, SimError, SimState};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("no legal action: every vehicle is busy")]
    NoLegalAction,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl From<PolicyError> for SimError {
    fn from(e: PolicyError) -> Self {
        SimError::Policy(e.to_string())
    }
}

/// Architecture for a fleet of `vehicles` with the default hidden layers.
pub fn arch_for(vehicles: usize) -> Arch {
    Arch::new(observation_len(vehicles), RuleId::COUNT * vehicles)
}

/// The learned policy: featurize, run the network, decode under the mask.
#[derive(Debug, Clone)]
pub struct NetworkPolicy {
    arch: Arc<Arch>,
    params: Arc<PolicyParams>,
    mode: DecodeMode,
    rng: ChaCha8Rng,
    obs: Vec<f64>,
}

impl NetworkPolicy {
    pub fn new(
        arch: Arc<Arch>,
        params: Arc<PolicyParams>,
        mode: DecodeMode,
    ) -> Result<Self, PolicyError> {
        if params.len() != arch.param_count() {
            return Err(PolicyError::Shape {
                what: "parameter vector",
                expected: arch.param_count(),
                got: params.len(),
            });
        }
        Ok(Self {
            obs: vec![0.0; arch.input],
            arch,
            params,
            mode,
            rng: seeding::rng_for(0, &[]),
        })
    }

    /// Fail early when the network cannot drive `instance`'s fleet.
    pub fn check_instance(&self, instance: &Instance) -> Result<(), PolicyError> {
        let expected = arch_for(instance.vehicle_count());
        if self.arch.input != expected.input || self.arch.actions != expected.actions {
            return Err(PolicyError::Shape {
                what: "network input for instance",
                expected: expected.input,
                got: self.arch.input,
            });
        }
        Ok(())
    }

    pub fn act(
        &mut self,
        state: &SimState,
        instance: &Instance,
    ) -> Result<(RuleId, usize), PolicyError> {
        self.check_instance(instance)?;
        featurize_into(state, instance, &mut self.obs);
        let logits = self.arch.forward(&self.params, &self.obs)?;
        decode_action(
            &logits,
            &ActionMask::for_state(state),
            self.mode,
            &mut self.rng,
        )
    }
}

impl Policy for NetworkPolicy {
    fn begin_episode(&mut self, seed: u64) {
        self.rng = seeding::rng_for(seed, &[]);
    }

    fn decide(&mut self, state: &SimState, instance: &Instance) -> Result<Decision, SimError> {
        let (rule, vehicle) = self.act(state, instance)?;
        Ok(Decision::Rule { rule, vehicle })
    }
}
