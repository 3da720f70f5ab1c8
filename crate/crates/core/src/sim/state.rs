//! Live episode state and the event loop that advances it.

use super::{Instance, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleState {
    Idle,
    Working,
    Broken,
}

/// Where a task currently lives. Every task is in exactly one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskPhase {
    Pending,
    Pooled,
    Assigned(usize),
    Served,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleStatus {
    pub state: VehicleState,
    /// Current site when Idle or Broken; departure site while Working.
    pub site: usize,
    /// Completion time when Working, repair time when Broken, otherwise the clock of the last change.
    pub busy_until: f64,
    pub task: Option<usize>,
    /// Time the current trip started.
    pub departed_at: f64,
    /// Time the current trip reaches its pickup site.
    pub pickup_at: f64,
}

/// Entry of a vehicle's served-task history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Served {
    pub task: usize,
    pub finish: f64,
}

/// Outcome of advancing the clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Pool is non-empty and at least one vehicle is Idle.
    Decision,
    /// Every task has been served.
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    clock: f64,
    pool: Vec<usize>,
    vehicles: Vec<VehicleStatus>,
    phases: Vec<TaskPhase>,
    history: Vec<Vec<Served>>,
    next_release: usize,
    next_breakdown: usize,
    breakdown_order: Vec<usize>,
    served: usize,
    rng_seed: u64,
}

impl SimState {
    pub fn new(instance: &Instance, rng_seed: u64) -> Self {
        let vehicles = (0..instance.vehicle_count())
            .map(|v| VehicleStatus {
                state: VehicleState::Idle,
                site: instance.vehicle_start(v),
                busy_until: 0.0,
                task: None,
                departed_at: 0.0,
                pickup_at: 0.0,
            })
            .collect();
        let mut breakdown_order: Vec<usize> = (0..instance.breakdowns().len()).collect();
        breakdown_order.sort_by(|&a, &b| {
            instance.breakdowns()[a]
                .at
                .total_cmp(&instance.breakdowns()[b].at)
        });
        Self {
            clock: 0.0,
            pool: Vec::new(),
            vehicles,
            phases: vec![TaskPhase::Pending; instance.task_count()],
            history: vec![Vec::new(); instance.vehicle_count()],
            next_release: 0,
            next_breakdown: 0,
            breakdown_order,
            served: 0,
            rng_seed,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Released, unassigned task indices in ascending index order.
    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn vehicles(&self) -> &[VehicleStatus] {
        &self.vehicles
    }

    pub fn phases(&self) -> &[TaskPhase] {
        &self.phases
    }

    /// Served tasks per vehicle in service order.
    pub fn history(&self) -> &[Vec<Served>] {
        &self.history
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn is_terminal(&self) -> bool {
        self.served == self.phases.len()
    }

    pub fn idle_vehicles(&self) -> impl Iterator<Item = usize> + '_ {
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.state == VehicleState::Idle)
            .map(|(i, _)| i)
    }

    pub fn is_decision_point(&self) -> bool {
        !self.pool.is_empty() && self.idle_vehicles().next().is_some()
    }

    /// Advance the clock until a decision point or the end of the episode.
    ///
    /// All events with a timestamp at or before the returned clock have been
    /// applied. Events at the same instant are applied as completions,
    /// breakdowns, repairs, then releases.
    pub fn next_decision_point(&mut self, instance: &Instance) -> Result<Step, SimError> {
        loop {
            self.apply_due_events(instance);
            if self.is_terminal() {
                return Ok(Step::Terminal);
            }
            if self.is_decision_point() {
                return Ok(Step::Decision);
            }
            match self.next_event_time(instance) {
                Some(t) => {
                    debug_assert!(t > self.clock);
                    self.clock = t;
                }
                None => {
                    return Err(SimError::Deadlock {
                        clock: self.clock,
                        unserved: self.phases.len() - self.served,
                    })
                }
            }
        }
    }

    /// Commit `vehicle` (an index) to `task` (an index) at the current clock.
    pub fn apply_assignment(
        &mut self,
        instance: &Instance,
        vehicle: usize,
        task: usize,
    ) -> Result<(), SimError> {
        let v = self
            .vehicles
            .get(vehicle)
            .ok_or(SimError::UnknownVehicle(vehicle))?;
        if v.state != VehicleState::Idle {
            return Err(SimError::InstantaneousConstraint {
                vehicle,
                state: v.state,
            });
        }
        let slot = self
            .pool
            .binary_search(&task)
            .map_err(|_| SimError::UnknownTask(task))?;
        self.pool.remove(slot);

        let (pickup, delivery) = instance.task_sites(task);
        let v = &mut self.vehicles[vehicle];
        let to_pickup = instance.travel(v.site, pickup);
        v.state = VehicleState::Working;
        v.task = Some(task);
        v.departed_at = self.clock;
        v.pickup_at = self.clock + to_pickup;
        v.busy_until = v.pickup_at + instance.travel(pickup, delivery);
        self.phases[task] = TaskPhase::Assigned(vehicle);
        Ok(())
    }

    /// Finish time of the last served task per vehicle, maximized; 0 when nothing was served.
    pub fn makespan(&self) -> Result<f64, SimError> {
        if !self.is_terminal() {
            return Err(SimError::NotTerminal);
        }
        Ok(self
            .history
            .iter()
            .filter_map(|h| h.last().map(|s| s.finish))
            .fold(0.0, f64::max))
    }

    /// Per-task delay `max(finish - arrival - expiry, 0)` indexed by task.
    pub fn task_delays(&self, instance: &Instance) -> Result<Vec<f64>, SimError> {
        if !self.is_terminal() {
            return Err(SimError::NotTerminal);
        }
        let mut delays = vec![0.0; instance.task_count()];
        for s in self.history.iter().flatten() {
            delays[s.task] = (s.finish - instance.tasks()[s.task].due()).max(0.0);
        }
        Ok(delays)
    }

    /// Mean delay over all tasks.
    pub fn tardiness(&self, instance: &Instance) -> Result<f64, SimError> {
        let delays = self.task_delays(instance)?;
        if delays.is_empty() {
            return Err(SimError::UndefinedTardiness);
        }
        Ok(delays.iter().sum::<f64>() / delays.len() as f64)
    }

    fn apply_due_events(&mut self, instance: &Instance) {
        let now = self.clock;
        for (vi, v) in self.vehicles.iter_mut().enumerate() {
            if v.state == VehicleState::Working && v.busy_until <= now {
                let task = v.task.take().expect("working vehicle holds a task");
                v.state = VehicleState::Idle;
                v.site = instance.task_sites(task).1;
                self.history[vi].push(Served {
                    task,
                    finish: v.busy_until,
                });
                self.phases[task] = TaskPhase::Served;
                self.served += 1;
            }
        }
        while let Some(&k) = self.breakdown_order.get(self.next_breakdown) {
            let b = &instance.breakdowns()[k];
            if b.at > now {
                break;
            }
            self.next_breakdown += 1;
            let vi = instance.breakdown_vehicle(k);
            let v = &mut self.vehicles[vi];
            let until = b.at + b.repair;
            match v.state {
                VehicleState::Working => {
                    let task = v.task.take().expect("working vehicle holds a task");
                    if b.at >= v.pickup_at {
                        v.site = instance.task_sites(task).0;
                    }
                    v.busy_until = until;
                    v.state = VehicleState::Broken;
                    self.phases[task] = TaskPhase::Pooled;
                    let slot = self.pool.binary_search(&task).unwrap_err();
                    self.pool.insert(slot, task);
                }
                VehicleState::Idle => {
                    v.state = VehicleState::Broken;
                    v.busy_until = until;
                }
                VehicleState::Broken => v.busy_until = v.busy_until.max(until),
            }
        }
        for v in &mut self.vehicles {
            if v.state == VehicleState::Broken && v.busy_until <= now {
                v.state = VehicleState::Idle;
            }
        }
        while self.next_release < instance.task_count()
            && instance.tasks()[self.next_release].arrival <= now
        {
            let task = self.next_release;
            self.next_release += 1;
            self.phases[task] = TaskPhase::Pooled;
            let slot = self.pool.binary_search(&task).unwrap_err();
            self.pool.insert(slot, task);
        }
    }

    fn next_event_time(&self, instance: &Instance) -> Option<f64> {
        let release = instance.tasks().get(self.next_release).map(|t| t.arrival);
        let breakdown = self
            .breakdown_order
            .get(self.next_breakdown)
            .map(|&k| instance.breakdowns()[k].at);
        let vehicle = self
            .vehicles
            .iter()
            .filter(|v| v.state != VehicleState::Idle)
            .map(|v| v.busy_until);
        // Breakdowns alone never unblock a decision, but they must still fire in order.
        release
            .into_iter()
            .chain(breakdown)
            .chain(vehicle)
            .filter(|&t| t > self.clock)
            .min_by(f64::total_cmp)
    }

    /// Checks the structural invariants; used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut counts = [0usize; 4];
        for (t, phase) in self.phases.iter().enumerate() {
            match phase {
                TaskPhase::Pending => counts[0] += 1,
                TaskPhase::Pooled => {
                    counts[1] += 1;
                    if self.pool.binary_search(&t).is_err() {
                        return Err(format!("pooled task {t} missing from pool"));
                    }
                }
                TaskPhase::Assigned(v) => {
                    counts[2] += 1;
                    if self.vehicles[*v].task != Some(t) {
                        return Err(format!("task {t} assigned to {v} which does not hold it"));
                    }
                }
                TaskPhase::Served => counts[3] += 1,
            }
        }
        if counts[1] != self.pool.len() {
            return Err("pool size disagrees with task phases".into());
        }
        if counts[3] != self.served {
            return Err("served count disagrees with task phases".into());
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            if (v.state == VehicleState::Working) != v.task.is_some() {
                return Err(format!(
                    "vehicle {i} state {:?} with task {:?}",
                    v.state, v.task
                ));
            }
        }
        if counts[2] != self.vehicles.iter().filter(|v| v.task.is_some()).count() {
            return Err("assigned tasks disagree with working vehicles".into());
        }
        Ok(())
    }
}
