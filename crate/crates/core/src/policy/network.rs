//! Feed-forward policy network over a flat parameter vector.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::seeding;

pub const DEFAULT_HIDDEN: [usize; 2] = [128, 128];

/// Layer sizes of the MLP: `input -> hidden... -> actions`, tanh between
/// layers and a linear output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub actions: usize,
}

impl Arch {
    pub fn new(input: usize, actions: usize) -> Self {
        Self {
            input,
            hidden: DEFAULT_HIDDEN.to_vec(),
            actions,
        }
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden = hidden;
        self
    }

    fn widths(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let sizes: Vec<usize> = std::iter::once(self.input)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(self.actions))
            .collect();
        (0..sizes.len() - 1).map(move |i| (sizes[i], sizes[i + 1]))
    }

    pub fn param_count(&self) -> usize {
        self.widths().map(|(i, o)| i * o + o).sum()
    }

    /// Weights drawn from N(0, 1/fan_in), biases zero.
    pub fn init_params(&self, seed: u64) -> PolicyParams {
        let mut rng = seeding::rng_for(seed, &[seeding::stream::INIT]);
        let mut theta = Vec::with_capacity(self.param_count());
        for (fan_in, fan_out) in self.widths() {
            let std = (1.0 / fan_in as f64).sqrt();
            theta.extend((0..fan_in * fan_out).map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                std * z
            }));
            theta.extend(std::iter::repeat_n(0.0, fan_out));
        }
        PolicyParams(theta)
    }

    /// Evaluate the network. Layer weights are stored row-major (`[out][in]`)
    /// followed by that layer's biases.
    pub fn forward(&self, params: &PolicyParams, obs: &[f64]) -> Result<Vec<f64>, PolicyError> {
        if params.len() != self.param_count() {
            return Err(PolicyError::Shape {
                what: "parameter vector",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        if obs.len() != self.input {
            return Err(PolicyError::Shape {
                what: "observation",
                expected: self.input,
                got: obs.len(),
            });
        }
        let layers = self.hidden.len() + 1;
        let mut x = obs.to_vec();
        let mut offset = 0;
        for (layer, (fan_in, fan_out)) in self.widths().enumerate() {
            let weights = &params.0[offset..offset + fan_in * fan_out];
            let bias = &params.0[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let hidden = layer + 1 < layers;
            x = weights
                .chunks_exact(fan_in)
                .zip(bias)
                .map(|(row, b)| {
                    let z = row.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + b;
                    if hidden {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
        }
        Ok(x)
    }
}

/// Flat parameter vector of the policy network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyParams(pub Vec<f64>);

impl PolicyParams {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}
