//! Discrete per-frame allocations shared by both schedulers.

use thiserror::Error;

use crate::cell::CellConfig;
use crate::pf_solver::PfStatus;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AllocationError {
    #[error("total power {total} W exceeds {budget} W")]
    Power { total: f64, budget: f64 },
    #[error("{used} subchannels allocated, only {available} exist")]
    Subchannels { used: u32, available: u32 },
    #[error("total bandwidth {total} Hz exceeds {budget} Hz")]
    Bandwidth { total: f64, budget: f64 },
    #[error("user {user}: bandwidth {bandwidth} Hz is not {subchannels} subchannels")]
    NotOnLattice {
        user: usize,
        subchannels: u32,
        bandwidth: f64,
    },
    #[error("user {user}: SINR {sinr} below threshold {threshold} of level {level}")]
    BelowThreshold {
        user: usize,
        level: usize,
        sinr: f64,
        threshold: f64,
    },
    #[error("user {user}: rate {rate} bps does not match level {level}")]
    RateMismatch { user: usize, level: usize, rate: f64 },
    #[error("user {user} granted more than once")]
    Duplicate { user: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grant {
    pub user: usize,
    pub subchannels: u32,
    /// Hz
    pub bandwidth: f64,
    /// W
    pub power: f64,
    /// MCS level index
    pub mcs: usize,
    /// bps
    pub rate: f64,
}

/// Smallest power at which `k` subchannels decode at `level`.
///
/// Starts from `threshold * w * N0 / h` and steps up by ulps until the SINR
/// recomputed from the result actually clears the threshold.
pub fn level_power(cell: &CellConfig, level: usize, subchannels: u32, gain: f64) -> f64 {
    if subchannels == 0 {
        return 0.0;
    }
    let w = subchannels as f64 * cell.subchannel_bandwidth();
    let threshold = cell.mcs.threshold_linear(level);
    let mut p = cell.mcs.power_for_level(level, w, gain, cell.rate.n0);
    while cell.rate.sinr(p, w, gain) < threshold {
        p = p.next_up();
    }
    p
}

impl Grant {
    /// A grant whose power sits exactly on the level's threshold.
    pub fn at_level(cell: &CellConfig, user: usize, subchannels: u32, level: usize, gain: f64) -> Self {
        Self::with_power(
            cell,
            user,
            subchannels,
            level,
            level_power(cell, level, subchannels, gain),
        )
    }

    pub fn with_power(cell: &CellConfig, user: usize, subchannels: u32, level: usize, power: f64) -> Self {
        let bandwidth = subchannels as f64 * cell.subchannel_bandwidth();
        Self {
            user,
            subchannels,
            bandwidth,
            power,
            mcs: level,
            rate: cell.mcs.discrete_rate(level, bandwidth),
        }
    }

    /// Bits deliverable in one frame.
    pub fn frame_bits(&self, frame_len: f64) -> u64 {
        (self.rate * frame_len).floor() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    /// Sorted by user id.
    pub grants: Vec<Grant>,
    /// Outcome of the proportional-fair stage, if it ran.
    pub pf_status: Option<PfStatus>,
}

impl Allocation {
    pub fn new(mut grants: Vec<Grant>) -> Self {
        grants.sort_by_key(|g| g.user);
        Self {
            grants,
            pf_status: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        total_power(&self.grants)
    }

    pub fn total_bandwidth(&self) -> f64 {
        self.grants.iter().map(|g| g.bandwidth).sum()
    }

    pub fn total_subchannels(&self) -> u32 {
        self.grants.iter().map(|g| g.subchannels).sum()
    }

    pub fn grant(&self, user: usize) -> Option<&Grant> {
        self.grants
            .binary_search_by_key(&user, |g| g.user)
            .ok()
            .map(|i| &self.grants[i])
    }

    pub fn rate_of(&self, user: usize) -> f64 {
        self.grant(user).map_or(0.0, |g| g.rate)
    }

    /// Verifies budgets, the subchannel lattice and the MCS thresholds.
    /// `gain` maps a user id to its channel gain.
    pub fn check(&self, cell: &CellConfig, gain: impl Fn(usize) -> f64) -> Result<(), AllocationError> {
        let total = self.total_power();
        if total > cell.total_power {
            return Err(AllocationError::Power {
                total,
                budget: cell.total_power,
            });
        }
        let used = self.total_subchannels();
        if used > cell.n_subchannels {
            return Err(AllocationError::Subchannels {
                used,
                available: cell.n_subchannels,
            });
        }
        let bw = self.total_bandwidth();
        if bw > cell.bandwidth {
            return Err(AllocationError::Bandwidth {
                total: bw,
                budget: cell.bandwidth,
            });
        }
        let w_sub = cell.subchannel_bandwidth();
        for pair in self.grants.windows(2) {
            if pair[0].user >= pair[1].user {
                return Err(AllocationError::Duplicate { user: pair[1].user });
            }
        }
        for g in &self.grants {
            if g.subchannels == 0 || g.bandwidth != g.subchannels as f64 * w_sub {
                return Err(AllocationError::NotOnLattice {
                    user: g.user,
                    subchannels: g.subchannels,
                    bandwidth: g.bandwidth,
                });
            }
            let sinr = cell.rate.sinr(g.power, g.bandwidth, gain(g.user));
            let threshold = cell.mcs.threshold_linear(g.mcs);
            if !(sinr >= threshold) {
                return Err(AllocationError::BelowThreshold {
                    user: g.user,
                    level: g.mcs,
                    sinr,
                    threshold,
                });
            }
            if g.rate != cell.mcs.discrete_rate(g.mcs, g.bandwidth) {
                return Err(AllocationError::RateMismatch {
                    user: g.user,
                    level: g.mcs,
                    rate: g.rate,
                });
            }
        }
        Ok(())
    }
}

/// Power summed in slice order; callers keep grants sorted by user so every
/// budget comparison sees the same rounding.
pub fn total_power(grants: &[Grant]) -> f64 {
    grants.iter().map(|g| g.power).sum()
}
