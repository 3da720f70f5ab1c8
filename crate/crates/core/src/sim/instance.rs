//! Static problem description and its JSON form.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Role a site plays on the shop floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Pickup,
    Delivery,
    Both,
    Depot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub kind: SiteKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub id: u32,
    pub start_site: String,
}

/// A transport request: carry a load from `pickup` to `delivery`.
///
/// The task is due at `arrival + expiry`; finishing later accrues delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u32,
    pub pickup: String,
    pub delivery: String,
    pub arrival: f64,
    pub expiry: f64,
}

impl TaskSpec {
    pub fn due(&self) -> f64 {
        self.arrival + self.expiry
    }
}

/// Vehicle `vehicle` breaks down at time `at` and is repaired in place for `repair`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownSpec {
    pub vehicle: u32,
    pub at: f64,
    pub repair: f64,
}

/// On-disk layout. Field names are part of the file contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    id: String,
    sites: Vec<Site>,
    travel: Vec<Vec<f64>>,
    vehicles: Vec<VehicleSpec>,
    tasks: Vec<TaskSpec>,
    #[serde(default)]
    breakdowns: Vec<BreakdownSpec>,
}

/// A validated problem instance.
///
/// Construction always goes through [`Instance::new`] (or deserialization,
/// which calls it), so every invariant holds for any value of this type.
/// Site and vehicle references are additionally resolved to indices for the
/// simulator's hot path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    id: String,
    sites: Vec<Site>,
    travel: Vec<Vec<f64>>,
    vehicles: Vec<VehicleSpec>,
    tasks: Vec<TaskSpec>,
    breakdowns: Vec<BreakdownSpec>,
    task_ends: Vec<(usize, usize)>,
    vehicle_start: Vec<usize>,
    breakdown_vehicle: Vec<usize>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        sites: Vec<Site>,
        travel: Vec<Vec<f64>>,
        vehicles: Vec<VehicleSpec>,
        tasks: Vec<TaskSpec>,
        breakdowns: Vec<BreakdownSpec>,
    ) -> Result<Self, SimError> {
        let invalid = |msg: String| Err(SimError::Validation(msg));
        let n = sites.len();
        if n == 0 {
            return invalid("sites must not be empty".into());
        }
        let mut site_index = HashMap::with_capacity(n);
        for (i, s) in sites.iter().enumerate() {
            if site_index.insert(s.id.clone(), i).is_some() {
                return invalid(format!("duplicate site id {:?}", s.id));
            }
        }
        if travel.len() != n || travel.iter().any(|row| row.len() != n) {
            return invalid(format!("travel matrix must be {n}x{n}"));
        }
        for (i, row) in travel.iter().enumerate() {
            if row[i] != 0.0 {
                return invalid(format!("travel diagonal not zero at {i}"));
            }
            for (j, &t) in row.iter().enumerate() {
                if !t.is_finite() || t < 0.0 {
                    return invalid(format!("travel[{i}][{j}] must be finite and >= 0"));
                }
                if t != travel[j][i] {
                    return invalid(format!("travel not symmetric at ({i},{j})"));
                }
            }
        }
        let lookup = |name: &str, what: &str| {
            site_index.get(name).copied().ok_or_else(|| {
                SimError::Validation(format!("{what} references unknown site {name:?}"))
            })
        };

        if vehicles.is_empty() {
            return invalid("at least one vehicle is required".into());
        }
        let mut vehicle_index = HashMap::with_capacity(vehicles.len());
        let mut vehicle_start = Vec::with_capacity(vehicles.len());
        for (i, v) in vehicles.iter().enumerate() {
            if vehicle_index.insert(v.id, i).is_some() {
                return invalid(format!("duplicate vehicle id {}", v.id));
            }
            vehicle_start.push(lookup(&v.start_site, &format!("vehicle {}", v.id))?);
        }

        let mut task_ids = HashMap::with_capacity(tasks.len());
        let mut task_ends = Vec::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            if task_ids.insert(t.id, i).is_some() {
                return invalid(format!("duplicate task id {}", t.id));
            }
            if !t.arrival.is_finite() || t.arrival < 0.0 {
                return invalid(format!("task {} arrival must be >= 0", t.id));
            }
            if !t.expiry.is_finite() || t.expiry <= 0.0 {
                return invalid(format!("task {} expiry must be > 0", t.id));
            }
            let what = format!("task {}", t.id);
            let ends = (lookup(&t.pickup, &what)?, lookup(&t.delivery, &what)?);
            if ends.0 == ends.1 {
                return invalid(format!("task {} pickup and delivery must differ", t.id));
            }
            if i > 0 && tasks[i - 1].arrival > t.arrival {
                return invalid("tasks not sorted by arrival".into());
            }
            task_ends.push(ends);
        }

        let mut breakdown_vehicle = Vec::with_capacity(breakdowns.len());
        for b in &breakdowns {
            if !b.at.is_finite() || b.at < 0.0 || !b.repair.is_finite() || b.repair < 0.0 {
                return invalid(format!(
                    "breakdown of vehicle {} must have at >= 0 and repair >= 0",
                    b.vehicle
                ));
            }
            match vehicle_index.get(&b.vehicle) {
                Some(&v) => breakdown_vehicle.push(v),
                None => {
                    return invalid(format!(
                        "breakdown references unknown vehicle {}",
                        b.vehicle
                    ))
                }
            }
        }

        Ok(Self {
            id: id.into(),
            sites,
            travel,
            vehicles,
            tasks,
            breakdowns,
            task_ends,
            vehicle_start,
            breakdown_vehicle,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn travel_matrix(&self) -> &[Vec<f64>] {
        &self.travel
    }

    pub fn vehicles(&self) -> &[VehicleSpec] {
        &self.vehicles
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn breakdowns(&self) -> &[BreakdownSpec] {
        &self.breakdowns
    }

    /// Number of tasks (m).
    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn travel(&self, from: usize, to: usize) -> f64 {
        self.travel[from][to]
    }

    /// (pickup, delivery) site indices of task `task`.
    #[inline]
    pub fn task_sites(&self, task: usize) -> (usize, usize) {
        self.task_ends[task]
    }

    #[inline]
    pub fn laden_travel(&self, task: usize) -> f64 {
        let (p, d) = self.task_ends[task];
        self.travel[p][d]
    }

    pub fn vehicle_start(&self, vehicle: usize) -> usize {
        self.vehicle_start[vehicle]
    }

    /// Vehicle index hit by breakdown `k`.
    pub fn breakdown_vehicle(&self, k: usize) -> usize {
        self.breakdown_vehicle[k]
    }

    /// Task index for an external task id.
    pub fn task_index(&self, id: u32) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    /// Sum of all laden travel times; used as the time scale for features.
    pub fn horizon(&self) -> f64 {
        (0..self.tasks.len()).map(|t| self.laden_travel(t)).sum()
    }

    /// Rebuild with a different task list (re-validated, so the list must be sorted).
    pub fn with_tasks(&self, tasks: Vec<TaskSpec>) -> Result<Self, SimError> {
        Self::new(
            self.id.clone(),
            self.sites.clone(),
            self.travel.clone(),
            self.vehicles.clone(),
            tasks,
            self.breakdowns.clone(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| {
            if e.is_data() && e.to_string().starts_with("validation") {
                SimError::Validation(e.to_string())
            } else {
                SimError::Parse(e.to_string())
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = SimError;

    fn try_from(f: InstanceFile) -> Result<Self, Self::Error> {
        Instance::new(f.id, f.sites, f.travel, f.vehicles, f.tasks, f.breakdowns)
    }
}

impl From<Instance> for InstanceFile {
    fn from(i: Instance) -> Self {
        InstanceFile {
            id: i.id,
            sites: i.sites,
            travel: i.travel,
            vehicles: i.vehicles,
            tasks: i.tasks,
            breakdowns: i.breakdowns,
        }
    }
}

/// Read and validate an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, SimError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    Instance::from_json(&text)
}

/// The four-site, two-vehicle, three-task instance used throughout the tests.
///
/// Sites D (depot), A, B, C; both vehicles start at D; u3 is released at t=5.
pub fn micro1() -> Instance {
    let site = |id: &str, kind| Site {
        id: id.into(),
        kind,
    };
    let task = |id, p: &str, d: &str, arrival, expiry| TaskSpec {
        id,
        pickup: p.into(),
        delivery: d.into(),
        arrival,
        expiry,
    };
    Instance::new(
        "MICRO-1",
        vec![
            site("D", SiteKind::Depot),
            site("A", SiteKind::Both),
            site("B", SiteKind::Both),
            site("C", SiteKind::Both),
        ],
        vec![
            vec![0.0, 10.0, 20.0, 30.0],
            vec![10.0, 0.0, 15.0, 25.0],
            vec![20.0, 15.0, 0.0, 10.0],
            vec![30.0, 25.0, 10.0, 0.0],
        ],
        vec![
            VehicleSpec {
                id: 1,
                start_site: "D".into(),
            },
            VehicleSpec {
                id: 2,
                start_site: "D".into(),
            },
        ],
        vec![
            task(1, "A", "B", 0.0, 40.0),
            task(2, "B", "C", 0.0, 50.0),
            task(3, "A", "C", 5.0, 30.0),
        ],
        vec![],
    )
    .expect("MICRO-1 is valid")
}
