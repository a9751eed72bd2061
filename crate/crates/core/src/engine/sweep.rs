//! Parameter sweeps over one user count.

use super::config::{Scheduler, SimConfig, SweepAxis};
use super::metrics::MetricsReport;
use super::sim::run;

#[derive(Debug)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: usize,
    pub scheduler: Scheduler,
    /// Outermost ring radius of the run, m.
    pub bad_ring_m: f64,
    pub result: Result<MetricsReport, String>,
}

/// Seed for point `index`: the base seed itself when `common_seed`, else a
/// SplitMix64 step away from it.
pub fn point_seed(base: u64, index: usize, common_seed: bool) -> u64 {
    if common_seed {
        return base;
    }
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Config for one sweep point.
pub fn point_config(base: &SimConfig, axis: SweepAxis, value: usize, index: usize, scheduler: Scheduler) -> SimConfig {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::VideoUsers => cfg.system.video_users = value,
        SweepAxis::DataUsers => cfg.system.data_users = value,
    }
    cfg.system.scheduler = scheduler;
    cfg.system.seed = point_seed(base.system.seed, index, base.sweep.common_seed);
    cfg
}

/// Runs every (value, scheduler) pair in order. A failing point is recorded
/// and the sweep moves on.
pub fn sweep(base: &SimConfig, axis: SweepAxis, values: &[usize], schedulers: &[Scheduler]) -> Vec<SweepPoint> {
    sweep_with_progress(base, axis, values, schedulers, |_| {})
}

pub fn sweep_with_progress(
    base: &SimConfig,
    axis: SweepAxis,
    values: &[usize],
    schedulers: &[Scheduler],
    mut progress: impl FnMut(&SweepPoint),
) -> Vec<SweepPoint> {
    let bad_ring_m = base.system.rings_m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut points = Vec::with_capacity(values.len() * schedulers.len());
    for (index, &value) in values.iter().enumerate() {
        for &scheduler in schedulers {
            let cfg = point_config(base, axis, value, index, scheduler);
            let point = SweepPoint {
                axis,
                value,
                scheduler,
                bad_ring_m,
                result: run(&cfg).map_err(|e| e.to_string()),
            };
            progress(&point);
            points.push(point);
        }
    }
    points
}
