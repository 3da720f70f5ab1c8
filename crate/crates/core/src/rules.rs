//! Classic dispatching rules and the rule-based reference policies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seeding;
use crate::sim::{Decision, Instance, Policy, SimError, SimState};

/// Dispatching rule. The discriminant is the rule's position in the action encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleId {
    /// First come first serve: earliest arrival.
    Fcfs = 0,
    /// Earliest due date: smallest arrival + expiry.
    Edd = 1,
    /// Nearest vehicle first: shortest deadhead to the pickup.
    Nvf = 2,
    /// Shortest travel distance: deadhead plus laden leg.
    Std = 3,
}

impl RuleId {
    pub const ALL: [RuleId; 4] = [RuleId::Fcfs, RuleId::Edd, RuleId::Nvf, RuleId::Std];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Fcfs => "FCFS",
            RuleId::Edd => "EDD",
            RuleId::Nvf => "NVF",
            RuleId::Std => "STD",
        }
    }

    fn key(self, task: usize, vehicle_site: usize, instance: &Instance) -> f64 {
        let spec = &instance.tasks()[task];
        let (pickup, _) = instance.task_sites(task);
        match self {
            RuleId::Fcfs => spec.arrival,
            RuleId::Edd => spec.due(),
            RuleId::Nvf => instance.travel(vehicle_site, pickup),
            RuleId::Std => instance.travel(vehicle_site, pickup) + instance.laden_travel(task),
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pick the pool task minimizing the rule's key; ties go to the lowest task id.
pub fn select_task(
    rule: RuleId,
    pool: &[usize],
    vehicle_site: usize,
    instance: &Instance,
) -> Result<usize, SimError> {
    pool.iter()
        .copied()
        .min_by(|&a, &b| {
            rule.key(a, vehicle_site, instance)
                .total_cmp(&rule.key(b, vehicle_site, instance))
                .then_with(|| instance.tasks()[a].id.cmp(&instance.tasks()[b].id))
        })
        .ok_or(SimError::EmptyPool)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Fixed(RuleId),
    /// Uniformly random rule per decision.
    Mix,
    /// Uniformly random (task, idle vehicle) pair per decision.
    Random,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::Fixed(RuleId::Fcfs),
        BaselineKind::Fixed(RuleId::Edd),
        BaselineKind::Fixed(RuleId::Nvf),
        BaselineKind::Fixed(RuleId::Std),
        BaselineKind::Mix,
        BaselineKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Fixed(r) => r.name(),
            BaselineKind::Mix => "MIX",
            BaselineKind::Random => "Random",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown baseline {s:?}"))
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct BaselinePolicy {
    kind: BaselineKind,
    rng: ChaCha8Rng,
}

pub fn baseline_policy(kind: BaselineKind, seed: u64) -> BaselinePolicy {
    BaselinePolicy {
        kind,
        rng: seeding::rng_for(seed, &[]),
    }
}

impl Policy for BaselinePolicy {
    fn begin_episode(&mut self, seed: u64) {
        self.rng = seeding::rng_for(seed, &[]);
    }

    fn decide(&mut self, state: &SimState, _instance: &Instance) -> Result<Decision, SimError> {
        let first_idle = state
            .idle_vehicles()
            .next()
            .ok_or_else(|| SimError::Policy("no idle vehicle".into()))?;
        Ok(match self.kind {
            BaselineKind::Fixed(rule) => Decision::Rule {
                rule,
                vehicle: first_idle,
            },
            BaselineKind::Mix => Decision::Rule {
                rule: RuleId::ALL[self.rng.random_range(0..RuleId::COUNT)],
                vehicle: first_idle,
            },
            BaselineKind::Random => {
                let pool = state.pool();
                if pool.is_empty() {
                    return Err(SimError::EmptyPool);
                }
                let idle: Vec<usize> = state.idle_vehicles().collect();
                let task = pool[self.rng.random_range(0..pool.len())];
                let vehicle = idle[self.rng.random_range(0..idle.len())];
                Decision::Direct { task, vehicle }
            }
        })
    }
}
