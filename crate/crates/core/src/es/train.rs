//! The generation loop: sample, assign instances, evaluate, rank, update.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{
    ais_select, gradient_step, intrinsic_stochastic_ranking, sample_population, shaped_fitness,
    AisState, EsConfig, EsError, FitnessRecord,
};
use crate::policy::{arch_for, Arch, DecodeMode, NetworkPolicy, PolicyParams};
use crate::seeding::{self, stream};
use crate::sim::{run_episode, Instance};

/// Episodic `(reward, cost)` of a parameter vector: `(-makespan, tardiness)`.
pub fn evaluate(
    arch: &Arc<Arch>,
    params: Arc<PolicyParams>,
    instance: &Instance,
    seed: u64,
    mode: DecodeMode,
) -> Result<(f64, f64), EsError> {
    let mut policy = NetworkPolicy::new(Arc::clone(arch), params, mode)?;
    policy.check_instance(instance)?;
    let result = run_episode(instance, &mut policy, seed)?;
    Ok((-result.makespan, result.tardiness))
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    pub wall_ms: u128,
    /// Mean reward per instance over this generation's episodes (`None` if not selected).
    pub mean_reward: Vec<Option<f64>>,
    pub mean_cost: Vec<Option<f64>>,
    /// Cumulative selection counts after this generation.
    pub counts: Vec<u64>,
    pub update_l2: f64,
    pub feasible_fraction: f64,
}

pub struct Trainer<'a> {
    instances: &'a [Instance],
    config: EsConfig,
    arch: Arc<Arch>,
    params: PolicyParams,
    ais: AisState,
    generation: usize,
}

impl<'a> Trainer<'a> {
    /// Start from seeded random initial parameters.
    pub fn new(instances: &'a [Instance], config: EsConfig) -> Result<Self, EsError> {
        let arch = Self::arch_for_instances(instances, &config)?;
        let params = arch.init_params(config.seed);
        Self::with_params(instances, config, params)
    }

    pub fn with_params(
        instances: &'a [Instance],
        config: EsConfig,
        params: PolicyParams,
    ) -> Result<Self, EsError> {
        config.validate()?;
        let arch = Self::arch_for_instances(instances, &config)?;
        if params.len() != arch.param_count() {
            return Err(EsError::Config(format!(
                "initial parameters have length {}, architecture needs {}",
                params.len(),
                arch.param_count()
            )));
        }
        Ok(Self {
            ais: AisState::new(instances.len(), config.window),
            instances,
            arch: Arc::new(arch),
            params,
            config,
            generation: 0,
        })
    }

    fn arch_for_instances(instances: &[Instance], config: &EsConfig) -> Result<Arch, EsError> {
        let first = instances.first().ok_or(EsError::NoInstances)?;
        let vehicles = first.vehicle_count();
        if let Some(other) = instances.iter().find(|i| i.vehicle_count() != vehicles) {
            return Err(EsError::Config(format!(
                "instance {} has {} vehicles, expected {vehicles}",
                other.id(),
                other.vehicle_count()
            )));
        }
        Ok(arch_for(vehicles).with_hidden(config.hidden.clone()))
    }

    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn config(&self) -> &EsConfig {
        &self.config
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn ais(&self) -> &AisState {
        &self.ais
    }

    pub fn is_done(&self) -> bool {
        self.generation >= self.config.generations
    }

    /// Run one generation. On error the parameters are left untouched.
    pub fn step(&mut self) -> Result<GenerationLog, EsError> {
        let generation = self.generation;
        self.run_generation().map_err(|source| EsError::Generation {
            generation,
            source: Box::new(source),
        })
    }

    fn run_generation(&mut self) -> Result<GenerationLog, EsError> {
        let started = Instant::now();
        let config = &self.config;
        let g = self.generation as u64;
        let population = sample_population(&self.params, config, g);

        let assigned: Vec<usize> = (0..config.groups())
            .map(|k| {
                let draw = seeding::derive_seed(config.seed, &[stream::AIS, g, k as u64]);
                ais_select(&mut self.ais, config, draw)
            })
            .collect();

        let outcomes: Vec<(f64, f64)> = (0..population.len())
            .into_par_iter()
            .map(|m| {
                let k = population.group_of(m);
                let seed = seeding::derive_seed(config.seed, &[stream::EPISODE, g, k as u64]);
                let candidate = Arc::new(population.candidate(&self.params, config.sigma, m));
                evaluate(
                    &self.arch,
                    candidate,
                    &self.instances[assigned[k]],
                    seed,
                    config.train_decode,
                )
            })
            .collect::<Result<_, _>>()?;

        let mut records: Vec<FitnessRecord> = outcomes
            .iter()
            .enumerate()
            .map(|(m, &(r, c))| FitnessRecord::scored(m, assigned[population.group_of(m)], r, c))
            .collect();
        for rec in &records {
            self.ais.push_reward(rec.instance, rec.reward.unwrap());
        }

        let sweep_seed = seeding::derive_seed(config.seed, &[stream::ISR, g]);
        intrinsic_stochastic_ranking(&mut records, config.p_f, config.xi, sweep_seed)?;

        let k = self.instances.len();
        let mut sizes = vec![0usize; k];
        let mut reward_sum = vec![0.0; k];
        let mut cost_sum = vec![0.0; k];
        for rec in &records {
            sizes[rec.instance] += 1;
            reward_sum[rec.instance] += rec.reward.unwrap();
            cost_sum[rec.instance] += rec.cost.unwrap();
        }
        let fitness: Vec<f64> = records
            .iter()
            .map(|r| shaped_fitness(r.rank_fitness.expect("ranked"), sizes[r.instance]))
            .collect();

        let (next, update_l2) = gradient_step(&self.params, &population, &fitness, config)?;
        self.params = next;
        self.generation += 1;

        let mean = |sums: &[f64]| -> Vec<Option<f64>> {
            sums.iter()
                .zip(&sizes)
                .map(|(s, &n)| (n > 0).then(|| s / n as f64))
                .collect()
        };
        let feasible = records
            .iter()
            .filter(|r| r.cost.unwrap() <= config.xi)
            .count();
        Ok(GenerationLog {
            generation: self.generation - 1,
            wall_ms: started.elapsed().as_millis(),
            mean_reward: mean(&reward_sum),
            mean_cost: mean(&cost_sum),
            counts: self.ais.counts().to_vec(),
            update_l2,
            feasible_fraction: feasible as f64 / records.len() as f64,
        })
    }
}

/// Final parameters and per-generation log of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub arch: Arch,
    pub params: PolicyParams,
    pub log: Vec<GenerationLog>,
}

pub fn train(instances: &[Instance], config: EsConfig) -> Result<TrainOutcome, EsError> {
    let mut trainer = Trainer::new(instances, config)?;
    let mut log = Vec::with_capacity(trainer.config().generations);
    while !trainer.is_done() {
        log.push(trainer.step()?);
    }
    Ok(TrainOutcome {
        arch: trainer.arch().clone(),
        params: trainer.params().clone(),
        log,
    })
}
