use crate::rules::{select_task, RuleId};

use super::{Instance, SimError, SimState, Step};

/// What a policy asks the simulator to do at a decision point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Let `rule` pick a task from the pool for `vehicle`.
    Rule { rule: RuleId, vehicle: usize },
    /// Assign a specific pool task directly.
    Direct { task: usize, vehicle: usize },
}

/// A decision function driving an episode.
///
/// `begin_episode` is called once before the first decision so that any
/// internal randomness is a function of the episode seed alone.
pub trait Policy: Send {
    fn begin_episode(&mut self, seed: u64);
    fn decide(&mut self, state: &SimState, instance: &Instance) -> Result<Decision, SimError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub time: f64,
    pub vehicle: u32,
    pub rule: Option<RuleId>,
    pub task: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub makespan: f64,
    /// Mean task delay; 0 for an instance without tasks.
    pub tardiness: f64,
    pub per_task_delay: Vec<f64>,
    pub decision_count: usize,
    pub trace: Option<Vec<TraceEntry>>,
}

pub fn run_episode(
    instance: &Instance,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<EpisodeResult, SimError> {
    run(instance, policy, seed, false)
}

/// Like [`run_episode`] but records every decision.
pub fn run_episode_traced(
    instance: &Instance,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<EpisodeResult, SimError> {
    run(instance, policy, seed, true)
}

fn run(
    instance: &Instance,
    policy: &mut dyn Policy,
    seed: u64,
    traced: bool,
) -> Result<EpisodeResult, SimError> {
    let mut state = SimState::new(instance, seed);
    let mut trace = traced.then(Vec::new);
    let mut decisions = 0;
    policy.begin_episode(seed);
    while state.next_decision_point(instance)? == Step::Decision {
        let (vehicle, task, rule) = match policy.decide(&state, instance)? {
            Decision::Rule { rule, vehicle } => {
                let status = state
                    .vehicles()
                    .get(vehicle)
                    .ok_or(SimError::UnknownVehicle(vehicle))?;
                let task = select_task(rule, state.pool(), status.site, instance)?;
                (vehicle, task, Some(rule))
            }
            Decision::Direct { task, vehicle } => (vehicle, task, None),
        };
        state.apply_assignment(instance, vehicle, task)?;
        decisions += 1;
        if let Some(trace) = trace.as_mut() {
            trace.push(TraceEntry {
                time: state.clock(),
                vehicle: instance.vehicles()[vehicle].id,
                rule,
                task: instance.tasks()[task].id,
            });
        }
    }
    let per_task_delay = state.task_delays(instance)?;
    let tardiness = if per_task_delay.is_empty() {
        0.0
    } else {
        per_task_delay.iter().sum::<f64>() / per_task_delay.len() as f64
    };
    Ok(EpisodeResult {
        makespan: state.makespan()?,
        tardiness,
        per_task_delay,
        decision_count: decisions,
        trace,
    })
}
