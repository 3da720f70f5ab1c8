//! Search-gradient estimation and the parameter update.

use super::{EsConfig, EsError, Population};
use crate::policy::PolicyParams;

/// Center and scale a rank within its buffer: `(rank - (n + 1) / 2) / n`.
pub fn shaped_fitness(rank: u32, buffer_len: usize) -> f64 {
    let n = buffer_len as f64;
    (rank as f64 - (n + 1.0) / 2.0) / n
}

/// Monte-Carlo search gradient from per-member fitness values.
///
/// Antithetic: `1/(lambda sigma) * sum_pairs (f+ - f-) eps`.
/// Vanilla: `1/(lambda sigma) * sum_i f_i eps_i`.
pub fn estimate_gradient(population: &Population, fitness: &[f64], sigma: f64) -> Vec<f64> {
    assert_eq!(
        fitness.len(),
        population.len(),
        "one fitness value per member"
    );
    let lambda = population.len() as f64;
    let d = population.base_noises().first().map_or(0, Vec::len);
    let mut grad = vec![0.0; d];
    for (k, eps) in population.base_noises().iter().enumerate() {
        let weight = if population.antithetic() {
            fitness[2 * k] - fitness[2 * k + 1]
        } else {
            fitness[k]
        };
        if weight == 0.0 {
            continue;
        }
        for (g, e) in grad.iter_mut().zip(eps) {
            *g += weight * e;
        }
    }
    let scale = 1.0 / (lambda * sigma);
    grad.iter_mut().for_each(|g| *g *= scale);
    grad
}

/// `theta + step_size * gradient`. Returns the new parameters and the L2 norm
/// of the update.
pub fn gradient_step(
    params: &PolicyParams,
    population: &Population,
    fitness: &[f64],
    config: &EsConfig,
) -> Result<(PolicyParams, f64), EsError> {
    let grad = estimate_gradient(population, fitness, config.sigma);
    let mut norm = 0.0;
    let next: Vec<f64> = params
        .0
        .iter()
        .zip(&grad)
        .map(|(p, g)| {
            let delta = config.step_size * g;
            norm += delta * delta;
            p + delta
        })
        .collect();
    let norm = norm.sqrt();
    if !norm.is_finite() || next.iter().any(|x| !x.is_finite()) {
        return Err(EsError::Divergence(format!(
            "non-finite update (norm {norm})"
        )));
    }
    Ok((PolicyParams(next), norm))
}
