//! Normalized makespan / tardiness scores and constraint satisfaction.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::policy::{Arch, DecodeMode, NetworkPolicy, PolicyParams};
use crate::rules::{baseline_policy, BaselineKind};
use crate::seeding::{self, stream};
use crate::sim::{run_episode, Instance, Policy};

/// A policy that can be instantiated afresh for every episode.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Baseline(BaselineKind),
    Network {
        arch: Arc<Arch>,
        params: Arc<PolicyParams>,
    },
}

#[derive(Debug, Clone)]
pub struct NamedPolicy {
    pub name: String,
    pub spec: PolicySpec,
}

impl NamedPolicy {
    pub fn baseline(kind: BaselineKind) -> Self {
        Self {
            name: kind.name().to_string(),
            spec: PolicySpec::Baseline(kind),
        }
    }

    pub fn network(name: impl Into<String>, arch: Arch, params: PolicyParams) -> Self {
        Self {
            name: name.into(),
            spec: PolicySpec::Network {
                arch: Arc::new(arch),
                params: Arc::new(params),
            },
        }
    }

    fn instantiate(&self, instance: &Instance) -> Result<Box<dyn Policy>, HarnessError> {
        Ok(match &self.spec {
            PolicySpec::Baseline(kind) => Box::new(baseline_policy(*kind, 0)),
            PolicySpec::Network { arch, params } => {
                let p =
                    NetworkPolicy::new(Arc::clone(arch), Arc::clone(params), DecodeMode::Greedy)?;
                p.check_instance(instance)?;
                Box::new(p)
            }
        })
    }
}

/// Raw per-episode objectives: `episodes[policy][instance]` is a list of `(F_m, F_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub policies: Vec<String>,
    pub instances: Vec<String>,
    pub episodes: Vec<Vec<Vec<(f64, f64)>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub policy: String,
    pub instance: String,
    #[serde(rename = "mean_Fm")]
    pub mean_fm: f64,
    #[serde(rename = "mean_Ft")]
    pub mean_ft: f64,
    #[serde(rename = "P_instance")]
    pub p_instance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub policies: BTreeMap<String, Scores>,
    pub xi: f64,
    pub trials: usize,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub summary: Summary,
}

/// `(max - x) / (max - min)` for each entry; every entry scores 1 when all are equal.
pub fn normalized_scores(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let span = max - min;
    values
        .iter()
        .map(|&v| if span > 0.0 { (max - v) / span } else { 1.0 })
        .collect()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Aggregate raw episodes into per-row means and per-policy M / C / P.
///
/// Normalization spans run over the compared policies' mean values on each
/// instance. P counts episodes with `F_t < xi` (strict).
pub fn summarize(
    results: &ResultSet,
    xi: f64,
    trials: usize,
    seeds: &[u64],
) -> Result<EvalReport, HarnessError> {
    let np = results.policies.len();
    let ni = results.instances.len();
    if np == 0 || ni == 0 {
        return Err(HarnessError::Validation(
            "at least one policy and one instance are required".into(),
        ));
    }
    if results.episodes.len() != np
        || results
            .episodes
            .iter()
            .any(|p| p.len() != ni || p.iter().any(Vec::is_empty))
    {
        return Err(HarnessError::Validation(
            "result set shape does not match policies x instances".into(),
        ));
    }

    let fm: Vec<Vec<f64>> = results
        .episodes
        .iter()
        .map(|p| p.iter().map(|eps| mean(eps.iter().map(|e| e.0))).collect())
        .collect();
    let ft: Vec<Vec<f64>> = results
        .episodes
        .iter()
        .map(|p| p.iter().map(|eps| mean(eps.iter().map(|e| e.1))).collect())
        .collect();

    let mut m_sum = vec![0.0; np];
    let mut c_sum = vec![0.0; np];
    for i in 0..ni {
        let m = normalized_scores(&fm.iter().map(|p| p[i]).collect::<Vec<_>>());
        let c = normalized_scores(&ft.iter().map(|p| p[i]).collect::<Vec<_>>());
        for j in 0..np {
            m_sum[j] += m[j];
            c_sum[j] += c[j];
        }
    }

    let mut rows = Vec::with_capacity(np * ni);
    let mut policies = BTreeMap::new();
    for (j, name) in results.policies.iter().enumerate() {
        let mut feasible = 0usize;
        let mut total = 0usize;
        for (i, inst) in results.instances.iter().enumerate() {
            let eps = &results.episodes[j][i];
            let ok = eps.iter().filter(|e| e.1 < xi).count();
            feasible += ok;
            total += eps.len();
            rows.push(EvalRow {
                policy: name.clone(),
                instance: inst.clone(),
                mean_fm: fm[j][i],
                mean_ft: ft[j][i],
                p_instance: ok as f64 / eps.len() as f64,
            });
        }
        policies.insert(
            name.clone(),
            Scores {
                m: m_sum[j] / ni as f64,
                c: c_sum[j] / ni as f64,
                p: feasible as f64 / total as f64,
            },
        );
    }
    Ok(EvalReport {
        rows,
        summary: Summary {
            policies,
            xi,
            trials,
            seeds: seeds.to_vec(),
            config_hash: None,
            seed: None,
        },
    })
}

/// Seed of one evaluation episode. Shared by all policies so they face the
/// same draws.
pub fn episode_seed(seed: u64, instance: usize, trial: usize) -> u64 {
    seeding::derive_seed(seed, &[stream::EVAL, instance as u64, trial as u64])
}

/// Run `trials` episodes per seed for every (policy, instance) and summarize.
pub fn evaluate_policies(
    policies: &[NamedPolicy],
    instances: &[Instance],
    trials: usize,
    seeds: &[u64],
    xi: f64,
) -> Result<EvalReport, HarnessError> {
    if trials == 0 || seeds.is_empty() {
        return Err(HarnessError::Validation(
            "trials and seeds must be non-empty".into(),
        ));
    }
    let mut names: Vec<&str> = policies.iter().map(|p| p.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(HarnessError::Validation(
            "policy names must be unique".into(),
        ));
    }
    if let Some(inst) = instances.iter().find(|i| i.task_count() == 0) {
        return Err(HarnessError::Validation(format!(
            "instance {} has no tasks",
            inst.id()
        )));
    }

    let jobs: Vec<(usize, usize, u64, usize)> = (0..policies.len())
        .flat_map(|p| {
            (0..instances.len()).flat_map(move |i| {
                seeds
                    .iter()
                    .flat_map(move |&s| (0..trials).map(move |t| (p, i, s, t)))
            })
        })
        .collect();
    let outcomes: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(p, i, s, t)| {
            let mut policy = policies[p].instantiate(&instances[i])?;
            let r = run_episode(&instances[i], policy.as_mut(), episode_seed(s, i, t))?;
            Ok((r.makespan, r.tardiness))
        })
        .collect::<Result<_, HarnessError>>()?;

    let per_cell = seeds.len() * trials;
    let episodes = outcomes
        .chunks(per_cell * instances.len())
        .map(|pol| pol.chunks(per_cell).map(<[_]>::to_vec).collect())
        .collect();
    let results = ResultSet {
        policies: policies.iter().map(|p| p.name.clone()).collect(),
        instances: instances.iter().map(|i| i.id().to_string()).collect(),
        episodes,
    };
    summarize(&results, xi, trials, seeds)
}

impl EvalReport {
    pub const CSV_HEADER: [&'static str; 5] =
        ["policy", "instance", "mean_Fm", "mean_Ft", "P_instance"];

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.policy.clone(),
                r.instance.clone(),
                r.mean_fm.to_string(),
                r.mean_ft.to_string(),
                r.p_instance.to_string(),
            ])?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serialization is infallible")
    }

    pub fn row(&self, policy: &str, instance: &str) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.instance == instance)
    }
}
