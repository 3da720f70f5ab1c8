use serde::{Deserialize, Serialize};

use super::EsError;
use crate::policy::{DecodeMode, DEFAULT_HIDDEN};

/// Hyper-parameters of the constrained ES trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsConfig {
    /// Population size per generation.
    pub population: usize,
    pub generations: usize,
    /// Standard deviation of the parameter perturbations.
    pub sigma: f64,
    /// Step size of the gradient ascent update.
    pub step_size: f64,
    /// Tardiness threshold of the cumulative constraint.
    pub xi: f64,
    /// Probability of comparing by reward alone in stochastic ranking.
    pub p_f: f64,
    /// Exploration factor of the instance sampler.
    pub ucb_alpha: f64,
    /// Length of each instance's reward window.
    pub window: usize,
    pub seed: u64,
    /// Mirrored (+eps, -eps) sampling.
    pub antithetic: bool,
    /// Discount factor; kept for completeness, episodes are scored undiscounted.
    pub gamma: f64,
    /// Write a checkpoint every this many generations (0 disables).
    pub checkpoint_every: usize,
    pub hidden: Vec<usize>,
    /// How actions are decoded during training rollouts.
    pub train_decode: DecodeMode,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            population: 256,
            generations: 128,
            sigma: 0.05,
            step_size: 0.02,
            xi: 50.0,
            p_f: 0.45,
            ucb_alpha: 1.0,
            window: 10,
            seed: 0,
            antithetic: true,
            gamma: 0.97,
            checkpoint_every: 8,
            hidden: DEFAULT_HIDDEN.to_vec(),
            train_decode: DecodeMode::Sample,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<(), EsError> {
        let bad = |msg: &str| Err(EsError::Config(msg.to_string()));
        if self.population == 0 {
            return bad("population must be positive");
        }
        if self.antithetic && !self.population.is_multiple_of(2) {
            return bad("population must be even with antithetic sampling");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be > 0");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size must be > 0");
        }
        if !self.xi.is_finite() {
            return bad("xi must be finite");
        }
        if !(self.p_f > 0.0 && self.p_f < 1.0) {
            return bad("p_f must lie in (0, 1)");
        }
        if !(self.ucb_alpha >= 0.0 && self.ucb_alpha.is_finite()) {
            return bad("ucb_alpha must be >= 0");
        }
        if self.window < 2 {
            return bad("window must be at least 2");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty and positive");
        }
        Ok(())
    }

    /// Candidates sharing one noise vector (2 when antithetic).
    pub fn group_size(&self) -> usize {
        if self.antithetic {
            2
        } else {
            1
        }
    }

    pub fn groups(&self) -> usize {
        self.population / self.group_size()
    }
}
