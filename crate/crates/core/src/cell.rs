//! Cell-wide radio resources and the per-frame user view handed to the
//! schedulers.

use crate::phy_mcs::{McsTable, RateModel};
use crate::traffic::{TrafficClass, TrafficProfile};

/// Radio resources of the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct CellConfig {
    /// Total transmit power `P`, W.
    pub total_power: f64,
    /// Total bandwidth `W`, Hz.
    pub bandwidth: f64,
    pub n_subchannels: u32,
    /// Frame length, s.
    pub frame_len: f64,
    pub rate: RateModel,
    pub mcs: McsTable,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            total_power: 20.0,
            bandwidth: 10e6,
            n_subchannels: 32,
            frame_len: 1e-3,
            rate: RateModel::default(),
            mcs: McsTable::default(),
        }
    }
}

impl CellConfig {
    pub fn subchannel_bandwidth(&self) -> f64 {
        self.bandwidth / self.n_subchannels as f64
    }

    /// SINR under uniform power per Hz, `P h / (N0 W)`.
    pub fn nominal_sinr(&self, gain: f64) -> f64 {
        self.total_power * gain / (self.rate.n0 * self.bandwidth)
    }
}

/// Everything a scheduler may read about one user in the current frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserFrame {
    pub id: usize,
    pub class: TrafficClass,
    /// Whether the user joins the proportional-fair stage.
    pub elastic: bool,
    pub gain: f64,
    pub q_bits: u64,
    /// HOL delay, s.
    pub hol: f64,
    /// Average received rate `R`, bps.
    pub avg_rate: f64,
    pub omega: f64,
    /// Basic rate in force this frame (`r0` times the video rate level).
    pub basic_rate: f64,
    pub profile: TrafficProfile,
}

impl UserFrame {
    pub fn is_backlogged(&self) -> bool {
        self.q_bits > 0
    }

    pub fn is_realtime(&self) -> bool {
        self.class.is_realtime()
    }

    /// `R` floored at 1 bps.
    pub fn floored_rate(&self) -> f64 {
        self.avg_rate.max(1.0)
    }
}
