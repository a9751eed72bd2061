//! Per-user channel gain: distance attenuation, log-normal shadowing and
//! Rayleigh block fading.
//!
//! Fading is modeled as block fading. The fast (Rayleigh power) factor is
//! redrawn at every fast-coherence boundary and the shadowing factor at every
//! slow-coherence boundary; both are constant in between.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floor for the fast-fading power factor; keeps the gain strictly positive.
pub const MIN_FAST_POWER: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be at least 1 m, got {0}")]
    DistanceTooSmall(f64),
    #[error("invalid channel parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
}

/// Propagation parameters shared by all users of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Pathloss at 1 m, dB (the model is `intercept - slope * log10(d)`).
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub shadow_std_db: f64,
    /// seconds
    pub fast_coherence: f64,
    /// seconds
    pub slow_coherence: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pathloss_intercept_db: -31.5,
            pathloss_slope_db: 35.0,
            shadow_std_db: 8.0,
            fast_coherence: 5e-3,
            slow_coherence: 300e-3,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let checks = [
            ("shadow_std_db", self.shadow_std_db, self.shadow_std_db >= 0.0),
            ("fast_coherence", self.fast_coherence, self.fast_coherence > 0.0),
            ("slow_coherence", self.slow_coherence, self.slow_coherence > 0.0),
            (
                "pathloss_slope_db",
                self.pathloss_slope_db,
                self.pathloss_slope_db.is_finite(),
            ),
            (
                "pathloss_intercept_db",
                self.pathloss_intercept_db,
                self.pathloss_intercept_db.is_finite(),
            ),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(ChannelError::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    pub fn pathloss_db(&self, distance: f64) -> Result<f64, ChannelError> {
        if !(distance >= 1.0) {
            return Err(ChannelError::DistanceTooSmall(distance));
        }
        Ok(self.pathloss_intercept_db - self.pathloss_slope_db * distance.log10())
    }
}

/// `-31.5 - 35 log10(d)` dB with `d` in meters.
pub fn pathloss_db(distance: f64) -> Result<f64, ChannelError> {
    ChannelParams::default().pathloss_db(distance)
}

/// Number of frames in a coherence interval, at least one.
pub fn block_frames(coherence: f64, frame_len: f64) -> u64 {
    ((coherence / frame_len).round() as u64).max(1)
}

#[derive(Debug, Clone)]
pub struct ChannelState {
    pub distance: f64,
    pub pathloss_db: f64,
    pub shadow_db: f64,
    pub fast_power: f64,
    shadow: Normal<f64>,
    params: ChannelParams,
    rng: ChaCha8Rng,
}

impl ChannelState {
    /// Creates the state with unit fast power and 0 dB shadowing; the first
    /// call to [`advance`](Self::advance) at frame 0 draws both.
    pub fn new(distance: f64, params: ChannelParams, rng: ChaCha8Rng) -> Result<Self, ChannelError> {
        params.validate()?;
        let pathloss_db = params.pathloss_db(distance)?;
        let shadow = Normal::new(0.0, params.shadow_std_db).map_err(|_| ChannelError::InvalidParam {
            name: "shadow_std_db",
            value: params.shadow_std_db,
        })?;
        Ok(Self {
            distance,
            pathloss_db,
            shadow_db: 0.0,
            fast_power: 1.0,
            shadow,
            params,
            rng,
        })
    }

    /// Moves the state to `frame`, redrawing whichever factors start a new
    /// coherence block there.
    pub fn advance(&mut self, frame: u64, frame_len: f64) {
        if frame.is_multiple_of(block_frames(self.params.fast_coherence, frame_len)) {
            let draw: f64 = Exp1.sample(&mut self.rng);
            self.fast_power = draw.max(MIN_FAST_POWER);
        }
        if frame.is_multiple_of(block_frames(self.params.slow_coherence, frame_len)) {
            self.shadow_db = self.shadow.sample(&mut self.rng);
        }
    }

    /// Linear gain `10^((pathloss + shadow)/10) * fast_power`.
    pub fn gain(&self) -> f64 {
        10f64.powf((self.pathloss_db + self.shadow_db) / 10.0) * self.fast_power
    }

    pub fn set_fast_power(&mut self, fast_power: f64) {
        self.fast_power = fast_power.max(MIN_FAST_POWER);
    }

    pub fn set_shadow_db(&mut self, shadow_db: f64) {
        self.shadow_db = shadow_db;
    }
}
