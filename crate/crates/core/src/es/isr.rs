//! Intrinsic stochastic ranking.
//!
//! Records are grouped into one buffer per training instance. Each buffer of
//! size `n` gets `n` bubble-sort sweeps in which adjacent records are compared
//! by reward when both are feasible or with probability `p_f`, and by penalty
//! otherwise. The record ending in position `i` (0-based) receives rank
//! fitness `n - i`, so the best record of a buffer scores `n`.

use rand::Rng;

use super::penalty::penalty;
use super::EsError;
use crate::seeding;

/// One individual's evaluation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessRecord {
    /// Index of the candidate within its generation.
    pub noise_index: usize,
    /// Index of the training instance the candidate was evaluated on.
    pub instance: usize,
    /// Episodic reward, the negative makespan.
    pub reward: Option<f64>,
    /// Episodic cost, the tardiness.
    pub cost: Option<f64>,
    pub rank_fitness: Option<u32>,
}

impl FitnessRecord {
    pub fn pending(noise_index: usize, instance: usize) -> Self {
        Self {
            noise_index,
            instance,
            reward: None,
            cost: None,
            rank_fitness: None,
        }
    }

    pub fn scored(noise_index: usize, instance: usize, reward: f64, cost: f64) -> Self {
        Self {
            reward: Some(reward),
            cost: Some(cost),
            ..Self::pending(noise_index, instance)
        }
    }
}

/// Rank one buffer of `(reward, cost)` pairs. Returns the rank fitness of each
/// entry in input order; the result is a permutation of `1..=n`.
pub fn rank_buffer<R: Rng + ?Sized>(
    entries: &[(f64, f64)],
    p_f: f64,
    xi: f64,
    rng: &mut R,
) -> Vec<u32> {
    let n = entries.len();
    let phi: Vec<f64> = entries.iter().map(|&(_, c)| penalty(c, xi)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        for j in 0..n.saturating_sub(1) {
            let delta: f64 = rng.random();
            let (a, b) = (order[j], order[j + 1]);
            let swap = if (phi[a] == 0.0 && phi[b] == 0.0) || delta < p_f {
                entries[a].0 < entries[b].0
            } else {
                phi[a] > phi[b]
            };
            if swap {
                order.swap(j, j + 1);
            }
        }
    }
    let mut fitness = vec![0; n];
    for (pos, &k) in order.iter().enumerate() {
        fitness[k] = (n - pos) as u32;
    }
    fitness
}

/// Assign rank fitness to every record, buffer by buffer.
///
/// The sweep stream of the buffer for instance `k` is derived from
/// `(sweep_seed, k)`, so results do not depend on record order across buffers.
pub fn intrinsic_stochastic_ranking(
    records: &mut [FitnessRecord],
    p_f: f64,
    xi: f64,
    sweep_seed: u64,
) -> Result<(), EsError> {
    if let Some(r) = records
        .iter()
        .find(|r| r.reward.is_none() || r.cost.is_none())
    {
        return Err(EsError::IncompleteRecord(r.noise_index));
    }
    let mut instances: Vec<usize> = records.iter().map(|r| r.instance).collect();
    instances.sort_unstable();
    instances.dedup();
    for k in instances {
        let members: Vec<usize> = (0..records.len())
            .filter(|&i| records[i].instance == k)
            .collect();
        let entries: Vec<(f64, f64)> = members
            .iter()
            .map(|&i| (records[i].reward.unwrap(), records[i].cost.unwrap()))
            .collect();
        let mut rng = seeding::rng_for(sweep_seed, &[seeding::stream::ISR, k as u64]);
        for (&i, f) in members.iter().zip(rank_buffer(&entries, p_f, xi, &mut rng)) {
            records[i].rank_fitness = Some(f);
        }
    }
    Ok(())
}
