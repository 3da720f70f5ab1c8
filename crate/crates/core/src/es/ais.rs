//! Adaptive instance sampler: a UCB score over reward-window advantages,
//! turned into a sampling distribution by softmax.

use std::collections::VecDeque;

use rand::Rng;

use super::EsConfig;
use crate::seeding;

/// Inverted distance of a reward window: the mean of
/// `(max - r) / (max - min)` over the window.
///
/// A window with fewer than two entries scores 1 (no evidence yet). A window
/// whose rewards all equal its maximum scores 0.
pub fn inverted_distance(window: &[f64]) -> f64 {
    if window.len() < 2 {
        return 1.0;
    }
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    let span = max - min;
    if span <= 0.0 {
        return 0.0;
    }
    window.iter().map(|r| (max - r) / span).sum::<f64>() / window.len() as f64
}

/// `u + alpha * sqrt(ln(sum N) / N)` per instance. Requires every count > 0.
pub fn ucb_scores(advantages: &[f64], counts: &[u64], alpha: f64) -> Vec<f64> {
    let total = counts.iter().sum::<u64>() as f64;
    advantages
        .iter()
        .zip(counts)
        .map(|(u, &n)| u + alpha * (total.ln() / n as f64).sqrt())
        .collect()
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

/// Reward windows and selection counts of every training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AisState {
    windows: Vec<VecDeque<f64>>,
    counts: Vec<u64>,
    capacity: usize,
}

impl AisState {
    pub fn new(instances: usize, window: usize) -> Self {
        Self {
            windows: vec![VecDeque::with_capacity(window); instances],
            counts: vec![0; instances],
            capacity: window,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn window(&self, instance: usize) -> &VecDeque<f64> {
        &self.windows[instance]
    }

    /// Append an episodic reward, evicting the oldest once the window is full.
    pub fn push_reward(&mut self, instance: usize, reward: f64) {
        let w = &mut self.windows[instance];
        if w.len() == self.capacity {
            w.pop_front();
        }
        w.push_back(reward);
    }

    pub fn advantages(&self) -> Vec<f64> {
        self.windows
            .iter()
            .map(|w| inverted_distance(&w.iter().copied().collect::<Vec<_>>()))
            .collect()
    }

    /// Selection distribution, or `None` while some instance is still unvisited.
    pub fn probabilities(&self, alpha: f64) -> Option<Vec<f64>> {
        if self.counts.contains(&0) {
            return None;
        }
        Some(softmax(&ucb_scores(
            &self.advantages(),
            &self.counts,
            alpha,
        )))
    }

    /// Pick an instance and count the selection. Unvisited instances are
    /// taken first, lowest index first.
    pub fn select<R: Rng + ?Sized>(&mut self, alpha: f64, rng: &mut R) -> usize {
        let chosen = match self.probabilities(alpha) {
            None => self
                .counts
                .iter()
                .position(|&n| n == 0)
                .expect("an unvisited instance"),
            Some(p) => {
                let mut u: f64 = rng.random();
                let mut pick = p.len() - 1;
                for (i, pi) in p.iter().enumerate() {
                    if u < *pi {
                        pick = i;
                        break;
                    }
                    u -= pi;
                }
                pick
            }
        };
        self.counts[chosen] += 1;
        chosen
    }
}

/// Draw a training instance for one selection.
pub fn ais_select(state: &mut AisState, config: &EsConfig, draw_seed: u64) -> usize {
    let mut rng = seeding::rng_for(draw_seed, &[seeding::stream::AIS]);
    state.select(config.ucb_alpha, &mut rng)
}
