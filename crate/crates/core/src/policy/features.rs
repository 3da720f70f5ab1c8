//! Fixed-length observation vector for the policy network.
//!
//! Layout: `TASK_SLOTS` task slots of `[slack, waiting, laden, present]`
//! followed by one `[idle, working, broken, until_available, site]` block per
//! vehicle. Times are divided by the instance horizon.

use crate::sim::{Instance, SimState, VehicleState};

pub const TASK_SLOTS: usize = 10;
pub const TASK_FEATURES: usize = 4;
pub const VEHICLE_FEATURES: usize = 5;

pub fn observation_len(vehicles: usize) -> usize {
    TASK_SLOTS * TASK_FEATURES + vehicles * VEHICLE_FEATURES
}

/// Time scale used to normalize every time-valued feature.
pub fn time_scale(instance: &Instance) -> f64 {
    instance.horizon().max(1.0)
}

pub fn featurize(state: &SimState, instance: &Instance) -> Vec<f64> {
    let mut obs = vec![0.0; observation_len(instance.vehicle_count())];
    featurize_into(state, instance, &mut obs);
    obs
}

pub fn featurize_into(state: &SimState, instance: &Instance, obs: &mut [f64]) {
    debug_assert_eq!(obs.len(), observation_len(instance.vehicle_count()));
    obs.fill(0.0);
    let scale = time_scale(instance);
    let clock = state.clock();
    let tasks = instance.tasks();

    let mut slots: Vec<usize> = state.pool().to_vec();
    slots.sort_by(|&a, &b| {
        tasks[a]
            .arrival
            .total_cmp(&tasks[b].arrival)
            .then(tasks[a].id.cmp(&tasks[b].id))
    });
    for (slot, &t) in slots.iter().take(TASK_SLOTS).enumerate() {
        let spec = &tasks[t];
        let f = &mut obs[slot * TASK_FEATURES..(slot + 1) * TASK_FEATURES];
        f[0] = (spec.due() - clock) / scale;
        f[1] = (clock - spec.arrival) / scale;
        f[2] = instance.laden_travel(t) / scale;
        f[3] = 1.0;
    }

    let site_norm = (instance.site_count().max(2) - 1) as f64;
    let base = TASK_SLOTS * TASK_FEATURES;
    for (i, v) in state.vehicles().iter().enumerate() {
        let f = &mut obs[base + i * VEHICLE_FEATURES..base + (i + 1) * VEHICLE_FEATURES];
        let (one_hot, until) = match v.state {
            VehicleState::Idle => (0, 0.0),
            VehicleState::Working => (1, v.busy_until - clock),
            VehicleState::Broken => (2, v.busy_until - clock),
        };
        f[one_hot] = 1.0;
        f[3] = until.max(0.0) / scale;
        f[4] = v.site as f64 / site_norm;
    }
}
