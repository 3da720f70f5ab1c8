//! Action masking and decoding of the hybrid (rule, vehicle) action.
//!
//! Action index `a` encodes rule `a % 4` for vehicle `a / 4`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::rules::RuleId;
use crate::sim::{SimState, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Greedy,
    Sample,
}

/// Legal actions: entry `(r, v)` is true iff vehicle `v` is Idle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMask(Vec<bool>);

impl ActionMask {
    pub fn from_states(states: impl IntoIterator<Item = VehicleState>) -> Self {
        Self(
            states
                .into_iter()
                .flat_map(|s| [s == VehicleState::Idle; RuleId::COUNT])
                .collect(),
        )
    }

    pub fn for_state(state: &SimState) -> Self {
        Self::from_states(state.vehicles().iter().map(|v| v.state))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn allows(&self, action: usize) -> bool {
        self.0.get(action).copied().unwrap_or(false)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

pub fn split_action(action: usize) -> (RuleId, usize) {
    (
        RuleId::from_index(action % RuleId::COUNT).expect("index below rule count"),
        action / RuleId::COUNT,
    )
}

/// Pick a legal action index from the logits.
pub fn decode_index<R: Rng + ?Sized>(
    logits: &[f64],
    mask: &ActionMask,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<usize, PolicyError> {
    if logits.len() != mask.len() {
        return Err(PolicyError::Shape {
            what: "logits",
            expected: mask.len(),
            got: logits.len(),
        });
    }
    let mut best: Option<usize> = None;
    for (i, &l) in logits.iter().enumerate() {
        if mask.allows(i) && best.is_none_or(|b| l > logits[b]) {
            best = Some(i);
        }
    }
    let best = best.ok_or(PolicyError::NoLegalAction)?;
    match mode {
        DecodeMode::Greedy => Ok(best),
        DecodeMode::Sample => {
            let top = logits[best];
            let weights: Vec<f64> = logits
                .iter()
                .enumerate()
                .map(|(i, &l)| if mask.allows(i) { (l - top).exp() } else { 0.0 })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    if u < w {
                        return Ok(i);
                    }
                    u -= w;
                }
            }
            Ok(best)
        }
    }
}

pub fn decode_action<R: Rng + ?Sized>(
    logits: &[f64],
    mask: &ActionMask,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<(RuleId, usize), PolicyError> {
    decode_index(logits, mask, mode, rng).map(split_action)
}
