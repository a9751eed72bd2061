//! Scenario configuration, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell::CellConfig;
use crate::channel::ChannelParams;
use crate::dra_alloc::{AllocSettings, RequiredRateMode};
use crate::dra_select::{RtPick, SelectionSettings};
use crate::pf_solver::SolverSettings;
use crate::phy_mcs::{dbm_per_hz_to_watts, McsTable, RateModel};
use crate::traffic::{BeParams, RateController, TrafficClass, TrafficProfile, VideoParams, VoipParams};

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    Dra,
    Mlwdf,
}

impl Scheduler {
    pub fn name(self) -> &'static str {
        match self {
            Scheduler::Dra => "dra",
            Scheduler::Mlwdf => "mlwdf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VideoMode {
    /// Video at its basic rate, scheduled like voice.
    Fixed,
    /// Video rate adapted by the threshold controller and served by the PF stage.
    Elastic,
}

impl VideoMode {
    pub fn name(self) -> &'static str {
        match self {
            VideoMode::Fixed => "fixed",
            VideoMode::Elastic => "elastic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub seed: u64,
    pub n_frames: u64,
    /// Frames excluded from metrics at the start of a run.
    pub warmup_frames: u64,
    /// s
    pub frame_len: f64,
    /// W
    pub total_power: f64,
    /// Hz
    pub bandwidth: f64,
    pub n_subchannels: u32,
    pub noise_dbm_per_hz: f64,
    pub beta: f64,
    pub scheduler: Scheduler,
    pub video_mode: VideoMode,
    pub voip_users: usize,
    pub video_users: usize,
    pub data_users: usize,
    /// Ring radii, m. Users of each class are spread evenly over them.
    pub rings_m: Vec<f64>,
    /// Rings up to this radius count as "good" users, m.
    pub good_max_m: f64,
    /// Count packets still queued at the end with their age so far.
    pub censor_in_flight: bool,
    /// Largest tolerated fraction of degraded PF solves.
    pub max_degraded_fraction: f64,
    /// `lambda.csv` sampling period, frames.
    pub lambda_trace_every: u64,
    pub channel: ChannelParams,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_frames: 60_000,
            warmup_frames: 2_000,
            frame_len: 1e-3,
            total_power: 20.0,
            bandwidth: 10e6,
            n_subchannels: 32,
            noise_dbm_per_hz: -169.0,
            beta: 0.25,
            scheduler: Scheduler::Dra,
            video_mode: VideoMode::Fixed,
            voip_users: 20,
            video_users: 20,
            data_users: 20,
            rings_m: vec![300.0, 600.0, 900.0, 1200.0, 1500.0],
            good_max_m: 1200.0,
            censor_in_flight: true,
            max_degraded_fraction: 0.01,
            lambda_trace_every: 10,
            channel: ChannelParams::default(),
        }
    }
}

/// QoS parameters shared by every class section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub r0: f64,
    pub r_max: f64,
    pub d_max: f64,
    pub delta: f64,
    pub phi: f64,
    pub alpha: f64,
}

impl ProfileConfig {
    pub fn to_profile(self, class: TrafficClass) -> TrafficProfile {
        TrafficProfile {
            class,
            r0: self.r0,
            r_max: self.r_max,
            d_max: self.d_max,
            delta: self.delta,
            phi: self.phi,
            alpha: self.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoipSection {
    pub r0: f64,
    pub r_max: f64,
    pub d_max: f64,
    pub delta: f64,
    pub phi: f64,
    pub alpha: f64,
    pub generator: VoipParams,
}

impl Default for VoipSection {
    fn default() -> Self {
        let p = TrafficProfile::voip();
        Self {
            r0: p.r0,
            r_max: p.r_max,
            d_max: p.d_max,
            delta: p.delta,
            phi: p.phi,
            alpha: p.alpha,
            generator: VoipParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoSection {
    pub r0: f64,
    pub r_max: f64,
    pub d_max: f64,
    pub delta: f64,
    pub phi: f64,
    pub alpha: f64,
    pub generator: VideoParams,
    pub controller: RateController,
}

impl Default for VideoSection {
    fn default() -> Self {
        let p = TrafficProfile::video();
        Self {
            r0: p.r0,
            r_max: p.r_max,
            d_max: p.d_max,
            delta: p.delta,
            phi: p.phi,
            alpha: p.alpha,
            generator: VideoParams::default(),
            controller: RateController::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeSection {
    pub r0: f64,
    pub r_max: f64,
    pub d_max: f64,
    pub delta: f64,
    pub phi: f64,
    pub alpha: f64,
    /// Starting value of the average rate `R`, bps.
    pub initial_rate: f64,
    pub generator: BeParams,
}

impl Default for BeSection {
    fn default() -> Self {
        let p = TrafficProfile::best_effort();
        Self {
            r0: p.r0,
            r_max: p.r_max,
            d_max: p.d_max,
            delta: p.delta,
            phi: p.phi,
            alpha: p.alpha,
            initial_rate: 100_000.0,
            generator: BeParams::default(),
        }
    }
}

macro_rules! profile_of {
    ($s:expr, $class:expr) => {
        ProfileConfig {
            r0: $s.r0,
            r_max: $s.r_max,
            d_max: $s.d_max,
            delta: $s.delta,
            phi: $s.phi,
            alpha: $s.alpha,
        }
        .to_profile($class)
    };
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub voip: VoipSection,
    pub video: VideoSection,
    pub be: BeSection,
}

impl TrafficConfig {
    pub fn profile(&self, class: TrafficClass) -> TrafficProfile {
        match class {
            TrafficClass::Voip => profile_of!(self.voip, class),
            TrafficClass::Video => profile_of!(self.video, class),
            TrafficClass::Be => profile_of!(self.be, class),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub required_rate_mode: RequiredRateMode,
    pub omega_floor: f64,
    pub data_fraction: f64,
    pub queue_threshold: f64,
    pub rt_pick: RtPick,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        let a = AllocSettings::default();
        let sel = SelectionSettings::default();
        Self {
            tolerance: s.tolerance,
            max_outer: s.max_outer,
            max_inner: s.max_inner,
            required_rate_mode: a.required_rate_mode,
            omega_floor: a.omega_floor,
            data_fraction: sel.data_fraction,
            queue_threshold: sel.queue_threshold,
            rt_pick: sel.rt_pick,
        }
    }
}

impl SolverConfig {
    pub fn solver(&self) -> SolverSettings {
        SolverSettings {
            tolerance: self.tolerance,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
        }
    }

    pub fn alloc(&self) -> AllocSettings {
        AllocSettings {
            required_rate_mode: self.required_rate_mode,
            omega_floor: self.omega_floor,
        }
    }

    pub fn selection(&self) -> SelectionSettings {
        SelectionSettings {
            data_fraction: self.data_fraction,
            queue_threshold: self.queue_threshold,
            rt_pick: self.rt_pick,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepAxis {
    VideoUsers,
    DataUsers,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::VideoUsers => "video_users",
            SweepAxis::DataUsers => "data_users",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    pub schedulers: Vec<Scheduler>,
    /// Reuse the base seed at every point so that points differ only in
    /// the swept user count.
    pub common_seed: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::VideoUsers,
            values: vec![10, 20, 30, 40],
            schedulers: vec![Scheduler::Dra, Scheduler::Mlwdf],
            common_seed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub system: SystemConfig,
    pub traffic: TrafficConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let s = &self.system;
        if !(s.frame_len > 0.0 && s.frame_len.is_finite()) {
            return bad(format!("frame_len must be > 0, got {}", s.frame_len));
        }
        if !(s.total_power > 0.0 && s.total_power.is_finite()) {
            return bad(format!("total_power must be > 0, got {}", s.total_power));
        }
        if !(s.bandwidth > 0.0 && s.bandwidth.is_finite()) {
            return bad(format!("bandwidth must be > 0, got {}", s.bandwidth));
        }
        if s.n_subchannels == 0 {
            return bad("n_subchannels must be >= 1".into());
        }
        if !s.noise_dbm_per_hz.is_finite() {
            return bad("noise_dbm_per_hz must be finite".into());
        }
        RateModel::new(s.beta, dbm_per_hz_to_watts(s.noise_dbm_per_hz))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if s.rings_m.is_empty() || s.rings_m.iter().any(|&d| !(d >= 1.0 && d.is_finite())) {
            return bad("rings_m must be a nonempty list of distances >= 1 m".into());
        }
        for (name, n) in [
            ("voip_users", s.voip_users),
            ("video_users", s.video_users),
            ("data_users", s.data_users),
        ] {
            if n % s.rings_m.len() != 0 {
                return bad(format!(
                    "{name} = {n} is not divisible across {} rings",
                    s.rings_m.len()
                ));
            }
        }
        if !(0.0..=1.0).contains(&s.max_degraded_fraction) {
            return bad("max_degraded_fraction must be in [0, 1]".into());
        }
        if s.lambda_trace_every == 0 {
            return bad("lambda_trace_every must be >= 1".into());
        }
        s.channel.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for class in TrafficClass::ALL {
            self.traffic.profile(class).validate().map_err(ConfigError::Invalid)?;
        }
        let v = &self.traffic.voip.generator;
        if !(v.period > 0.0) || v.packet_bits == 0 {
            return bad("voip generator needs period > 0 and packet_bits > 0".into());
        }
        self.traffic
            .video
            .generator
            .calibration()
            .map_err(ConfigError::Invalid)?;
        let c = &self.traffic.video.controller;
        if c.update_every == 0 || c.window == 0 || !(c.raise_below < c.lower_above) {
            return bad("video controller needs update_every, window >= 1 and raise_below < lower_above".into());
        }
        let be = &self.traffic.be;
        if !(be.initial_rate >= 0.0) {
            return bad("be.initial_rate must be >= 0".into());
        }
        if be.generator.file_bits == Some(0) || (be.generator.file_bits.is_none() && be.generator.backlog_bits == 0) {
            return bad("be generator needs a positive file or backlog size".into());
        }
        let sv = &self.solver;
        if !(sv.tolerance > 0.0) || sv.max_outer == 0 || sv.max_inner == 0 {
            return bad("solver tolerance and iteration caps must be positive".into());
        }
        if !(sv.omega_floor > 0.0 && sv.omega_floor <= 1.0) {
            return bad("omega_floor must be in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&sv.data_fraction) || !(sv.queue_threshold >= 0.0) {
            return bad("data_fraction must be in [0, 1] and queue_threshold >= 0".into());
        }
        Ok(())
    }

    pub fn cell(&self) -> CellConfig {
        let s = &self.system;
        CellConfig {
            total_power: s.total_power,
            bandwidth: s.bandwidth,
            n_subchannels: s.n_subchannels,
            frame_len: s.frame_len,
            rate: RateModel {
                beta: s.beta,
                n0: dbm_per_hz_to_watts(s.noise_dbm_per_hz),
            },
            mcs: McsTable::default(),
        }
    }

    /// Short scenario label, e.g. `v20_s20_d20_fixed`.
    pub fn scenario(&self) -> String {
        let s = &self.system;
        format!(
            "v{}_s{}_d{}_{}",
            s.voip_users,
            s.video_users,
            s.data_users,
            s.video_mode.name()
        )
    }

    pub fn users_of(&self, class: TrafficClass) -> usize {
        match class {
            TrafficClass::Voip => self.system.voip_users,
            TrafficClass::Video => self.system.video_users,
            TrafficClass::Be => self.system.data_users,
        }
    }
}
