//! Seeded procedural instances and arrival-time noising.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::seeding::{self, stream};
use crate::sim::{BreakdownSpec, Instance, Site, SiteKind, TaskSpec, VehicleSpec};

/// Size and shape of generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub sites: usize,
    pub vehicles: usize,
    pub tasks: usize,
    /// Expected breakdowns per instance; the integer part is always realized.
    pub breakdown_rate: f64,
    /// Travel time across one unit of the site box.
    pub travel_scale: f64,
    /// Offered load: mean service demand per unit time relative to fleet capacity.
    pub load: f64,
    /// Expiry is drawn uniformly from this range, in units of the mean service time.
    pub expiry_range: (f64, f64),
    /// Repair duration range, in units of the mean service time.
    pub repair_range: (f64, f64),
    pub prefix: String,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            sites: 6,
            vehicles: 2,
            tasks: 12,
            breakdown_rate: 1.0,
            travel_scale: 50.0,
            load: 1.5,
            expiry_range: (0.5, 2.0),
            repair_range: (0.5, 1.5),
            prefix: "DMH".into(),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Validation(m.to_string()));
        if self.vehicles == 0 {
            return bad("vehicles must be >= 1");
        }
        if self.sites == 0 || self.tasks == 0 {
            return bad("sites and tasks must be >= 1");
        }
        if self.sites < 2 {
            return bad("at least two sites are needed for pickup != delivery");
        }
        if !(self.breakdown_rate >= 0.0 && self.breakdown_rate.is_finite()) {
            return bad("breakdown_rate must be >= 0");
        }
        if !(self.travel_scale > 0.0 && self.load > 0.0) {
            return bad("travel_scale and load must be > 0");
        }
        let (lo, hi) = self.expiry_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad("expiry_range must satisfy 0 < lo <= hi");
        }
        let (lo, hi) = self.repair_range;
        if !(lo >= 0.0 && hi >= lo) {
            return bad("repair_range must satisfy 0 <= lo <= hi");
        }
        Ok(())
    }
}

pub fn instance_name(prefix: &str, index: usize) -> String {
    format!("{prefix}-{:02}", index + 1)
}

/// `count` instances named `<prefix>-01`, `<prefix>-02`, ...; instance `i`
/// depends only on `(seed, i)`.
pub fn generate_instances(
    count: usize,
    params: &GenParams,
    seed: u64,
) -> Result<Vec<Instance>, HarnessError> {
    params.validate()?;
    (0..count).map(|i| generate_one(i, params, seed)).collect()
}

fn generate_one(index: usize, p: &GenParams, seed: u64) -> Result<Instance, HarnessError> {
    let mut rng = seeding::rng_for(seed, &[stream::GENERATE, index as u64]);

    let coords: Vec<(f64, f64)> = (0..p.sites).map(|_| (rng.random(), rng.random())).collect();
    let travel: Vec<Vec<f64>> = coords
        .iter()
        .map(|a| {
            coords
                .iter()
                .map(|b| p.travel_scale * (a.0 - b.0).hypot(a.1 - b.1))
                .collect()
        })
        .collect();
    let sites: Vec<Site> = (0..p.sites)
        .map(|i| Site {
            id: if i == 0 {
                "D".to_string()
            } else {
                format!("S{i}")
            },
            kind: if i == 0 {
                SiteKind::Depot
            } else {
                SiteKind::Both
            },
        })
        .collect();

    // Pickups and deliveries avoid the depot when there is room to.
    let first = if p.sites >= 3 { 1 } else { 0 };
    let ends: Vec<(usize, usize)> = (0..p.tasks)
        .map(|_| {
            let a = rng.random_range(first..p.sites);
            let mut b = rng.random_range(first..p.sites - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect();

    // Deadhead is approximated by the mean pairwise travel time.
    let pairs = (p.sites * (p.sites - 1)) as f64;
    let mean_travel = travel.iter().flatten().sum::<f64>() / pairs;
    let mean_service =
        mean_travel + ends.iter().map(|&(a, b)| travel[a][b]).sum::<f64>() / p.tasks as f64;
    let gap = Exp::new(p.vehicles as f64 * p.load / mean_service).expect("positive rate");

    let mut clock = 0.0;
    let mut tasks = Vec::with_capacity(p.tasks);
    for (k, &(a, b)) in ends.iter().enumerate() {
        if k > 0 {
            clock += gap.sample(&mut rng);
        }
        let expiry = mean_service * rng.random_range(p.expiry_range.0..=p.expiry_range.1);
        tasks.push(TaskSpec {
            id: k as u32 + 1,
            pickup: sites[a].id.clone(),
            delivery: sites[b].id.clone(),
            arrival: clock,
            expiry,
        });
    }

    let vehicles = (0..p.vehicles)
        .map(|v| VehicleSpec {
            id: v as u32 + 1,
            start_site: sites[0].id.clone(),
        })
        .collect();

    let whole = p.breakdown_rate.floor();
    let extra = rng.random::<f64>() < p.breakdown_rate - whole;
    let n_breakdowns = whole as usize + usize::from(extra);
    let last_arrival = clock.max(mean_service);
    let mut breakdowns: Vec<BreakdownSpec> = (0..n_breakdowns)
        .map(|_| BreakdownSpec {
            vehicle: rng.random_range(0..p.vehicles) as u32 + 1,
            at: rng.random_range(0.0..last_arrival),
            repair: mean_service * rng.random_range(p.repair_range.0..=p.repair_range.1),
        })
        .collect();
    breakdowns.sort_by(|a, b| a.at.total_cmp(&b.at));

    Instance::new(
        instance_name(&p.prefix, index),
        sites,
        travel,
        vehicles,
        tasks,
        breakdowns,
    )
    .map_err(Into::into)
}

/// Perturb every arrival by an independent uniform draw in `[-delta, delta]`,
/// clamped at zero. Tasks are re-sorted by arrival; everything else is kept.
pub fn noise_instances(
    instances: &[Instance],
    delta: f64,
    seed: u64,
) -> Result<Vec<Instance>, HarnessError> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(HarnessError::Validation("delta must be >= 0".into()));
    }
    instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            if delta == 0.0 {
                return Ok(inst.clone());
            }
            let mut rng = seeding::rng_for(seed, &[stream::ARRIVAL_NOISE, i as u64]);
            let mut tasks: Vec<TaskSpec> = inst
                .tasks()
                .iter()
                .map(|t| TaskSpec {
                    arrival: (t.arrival + rng.random_range(-delta..=delta)).max(0.0),
                    ..t.clone()
                })
                .collect();
            tasks.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.id.cmp(&b.id)));
            inst.with_tasks(tasks).map_err(Into::into)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_determinism() {
        let a = generate_instances(8, &GenParams::default(), 7).unwrap();
        let b = generate_instances(8, &GenParams::default(), 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_instances(8, &GenParams::default(), 8).unwrap());
        assert_eq!(a[0].id(), "DMH-01");
        assert_eq!(a[7].id(), "DMH-08");
    }

    #[test]
    fn generated_instances_are_well_formed() {
        let params = GenParams {
            sites: 9,
            vehicles: 3,
            tasks: 30,
            breakdown_rate: 2.5,
            ..Default::default()
        };
        for inst in generate_instances(5, &params, 1).unwrap() {
            let t = inst.travel_matrix();
            let n = inst.site_count();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        assert!(t[i][k] <= t[i][j] + t[j][k] + 1e-9);
                    }
                }
            }
            assert!(inst
                .tasks()
                .windows(2)
                .all(|w| w[0].arrival <= w[1].arrival));
            assert_eq!(inst.task_count(), 30);
            assert!((2..=3).contains(&inst.breakdowns().len()));
            // Round-trips through the file format.
            assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
        }
    }

    #[test]
    fn integer_breakdown_rate_is_exact() {
        for inst in generate_instances(10, &GenParams::default(), 3).unwrap() {
            assert_eq!(inst.breakdowns().len(), 1);
        }
    }

    #[test]
    fn zero_vehicles_is_rejected() {
        let params = GenParams {
            vehicles: 0,
            ..Default::default()
        };
        assert!(matches!(
            generate_instances(1, &params, 0),
            Err(HarnessError::Validation(_))
        ));
    }

    #[test]
    fn zero_delta_is_identity() {
        let insts = generate_instances(3, &GenParams::default(), 2).unwrap();
        assert_eq!(noise_instances(&insts, 0.0, 9).unwrap(), insts);
    }

    #[test]
    fn noise_is_bounded_and_clamped() {
        let insts = generate_instances(4, &GenParams::default(), 2).unwrap();
        for delta in [5.0, 40.0] {
            let noised = noise_instances(&insts, delta, 9).unwrap();
            for (a, b) in insts.iter().zip(&noised) {
                assert_eq!(a.task_count(), b.task_count());
                for t in b.tasks() {
                    let orig = a.tasks().iter().find(|o| o.id == t.id).unwrap();
                    assert!(t.arrival >= 0.0);
                    assert!((t.arrival - orig.arrival).abs() <= delta + 1e-12);
                    // clamped draws can only move an arrival up to 0
                    assert!(t.arrival >= orig.arrival - delta);
                    assert_eq!(
                        (t.expiry, &t.pickup, &t.delivery),
                        (orig.expiry, &orig.pickup, &orig.delivery)
                    );
                }
            }
        }
    }

    #[test]
    fn clamp_at_zero() {
        let inst = crate::sim::micro1();
        let mut tasks = inst.tasks().to_vec();
        for t in &mut tasks {
            t.arrival = 2.0;
        }
        let inst = inst.with_tasks(tasks).unwrap();
        // with delta 1000 nearly every draw is below -2
        let noised = noise_instances(&[inst], 1000.0, 1).unwrap();
        assert!(noised[0].tasks().iter().any(|t| t.arrival == 0.0));
        assert!(noised[0].tasks().iter().all(|t| t.arrival >= 0.0));
    }
}
