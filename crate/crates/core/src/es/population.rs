//! Gaussian perturbations of the search point.

use rand_distr::{Distribution, StandardNormal};

use super::EsConfig;
use crate::policy::PolicyParams;
use crate::seeding;

/// A generation's perturbations. With antithetic sampling member `2k` uses
/// `+noise[k]` and member `2k + 1` uses `-noise[k]`; otherwise member `k`
/// uses `+noise[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    noises: Vec<Vec<f64>>,
    antithetic: bool,
}

impl Population {
    pub fn len(&self) -> usize {
        self.noises.len() * self.group_size()
    }

    pub fn is_empty(&self) -> bool {
        self.noises.is_empty()
    }

    pub fn antithetic(&self) -> bool {
        self.antithetic
    }

    pub fn group_size(&self) -> usize {
        if self.antithetic {
            2
        } else {
            1
        }
    }

    /// Distinct base noise vectors, one per pair (or per member).
    pub fn base_noises(&self) -> &[Vec<f64>] {
        &self.noises
    }

    /// Group (pair) a member belongs to.
    pub fn group_of(&self, member: usize) -> usize {
        member / self.group_size()
    }

    pub fn sign(&self, member: usize) -> f64 {
        if self.antithetic && member % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// The perturbation of `member`.
    pub fn noise(&self, member: usize) -> Vec<f64> {
        let s = self.sign(member);
        self.noises[self.group_of(member)]
            .iter()
            .map(|e| s * e)
            .collect()
    }

    /// `params + sigma * noise(member)`.
    pub fn candidate(&self, params: &PolicyParams, sigma: f64, member: usize) -> PolicyParams {
        let s = self.sign(member) * sigma;
        PolicyParams(
            params
                .0
                .iter()
                .zip(&self.noises[self.group_of(member)])
                .map(|(p, e)| p + s * e)
                .collect(),
        )
    }
}

/// Draw the generation's perturbations. The noise of group `k` depends only on
/// `(config.seed, generation, k)`.
pub fn sample_population(params: &PolicyParams, config: &EsConfig, generation: u64) -> Population {
    let d = params.len();
    let noises = (0..config.groups())
        .map(|k| {
            let mut rng =
                seeding::rng_for(config.seed, &[seeding::stream::NOISE, generation, k as u64]);
            (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z
                })
                .collect()
        })
        .collect();
    Population {
        noises,
        antithetic: config.antithetic,
    }
}
