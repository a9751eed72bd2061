//! Rate model and MCS quantization.
//!
//! Two views of the link are kept side by side: a continuous Shannon-type
//! rate `w * log2(1 + beta * p * h / (n0 * w))` used inside the optimizers,
//! and a discrete table of (modulation, coding, repetition) levels used once
//! an allocation is committed. The table is indexed by raw SINR; `beta` only
//! enters the continuous formula.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RateError {
    #[error("{name} must be finite and non-negative, got {value}")]
    InvalidInput { name: &'static str, value: f64 },
    #[error("{name} must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("MCS table: {0}")]
    Table(String),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// One row of the MCS table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsLevel {
    pub index: usize,
    pub sinr_threshold_db: f64,
    /// bps/Hz
    pub efficiency: f64,
    pub label: String,
}

impl McsLevel {
    pub fn threshold_linear(&self) -> f64 {
        db_to_linear(self.sinr_threshold_db)
    }
}

/// Ordered MCS table; thresholds and efficiencies strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    levels: Vec<McsLevel>,
    thresholds_linear: Vec<f64>,
}

/// (threshold dB, efficiency bps/Hz, label)
const DEFAULT_LEVELS: [(f64, f64, &str); 9] = [
    (-2.78, 1.0 / 6.0, "QPSK 1/2 x6"),
    (-1.0, 0.25, "QPSK 1/2 x4"),
    (2.0, 0.5, "QPSK 1/2 x2"),
    (5.0, 1.0, "QPSK 1/2 x1"),
    (6.0, 1.5, "QPSK 3/4 x1"),
    (10.5, 2.0, "16QAM 1/2 x1"),
    (14.0, 3.0, "16QAM 3/4 x1"),
    (18.0, 4.0, "64QAM 2/3 x1"),
    (20.0, 4.5, "64QAM 3/4 x1"),
];

impl Default for McsTable {
    fn default() -> Self {
        let rows = DEFAULT_LEVELS
            .iter()
            .map(|&(db, eff, label)| (db, eff, label.to_string()))
            .collect::<Vec<_>>();
        Self::from_rows(rows).expect("built-in MCS table is valid")
    }
}

impl McsTable {
    /// Builds a table from `(threshold_db, efficiency, label)` rows.
    pub fn from_rows(rows: Vec<(f64, f64, String)>) -> Result<Self, RateError> {
        if rows.is_empty() {
            return Err(RateError::Table("at least one level required".into()));
        }
        for pair in rows.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(RateError::Table(format!(
                    "thresholds must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
            if !(pair[1].1 > pair[0].1) {
                return Err(RateError::Table(format!(
                    "efficiencies must be strictly increasing ({} then {})",
                    pair[0].1, pair[1].1
                )));
            }
        }
        if rows
            .iter()
            .any(|r| !r.0.is_finite() || !(r.1 > 0.0) || !r.1.is_finite())
        {
            return Err(RateError::Table(
                "non-finite threshold or non-positive efficiency".into(),
            ));
        }
        let levels: Vec<McsLevel> = rows
            .into_iter()
            .enumerate()
            .map(|(index, (db, eff, label))| McsLevel {
                index,
                sinr_threshold_db: db,
                efficiency: eff,
                label,
            })
            .collect();
        let thresholds_linear = levels.iter().map(McsLevel::threshold_linear).collect();
        Ok(Self {
            levels,
            thresholds_linear,
        })
    }

    pub fn levels(&self) -> &[McsLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, index: usize) -> &McsLevel {
        &self.levels[index]
    }

    pub fn lowest(&self) -> &McsLevel {
        &self.levels[0]
    }

    pub fn highest(&self) -> &McsLevel {
        &self.levels[self.levels.len() - 1]
    }

    pub fn threshold_linear(&self, index: usize) -> f64 {
        self.thresholds_linear[index]
    }

    pub fn efficiency(&self, index: usize) -> f64 {
        self.levels[index].efficiency
    }

    /// Highest level whose threshold is at or below `sinr` (linear).
    /// Falls back to level 0 when `sinr` is under every threshold.
    ///
    /// Thresholds are compared against their cached linear values, so a SINR
    /// produced by `db_to_linear(threshold_db)` maps exactly to that level.
    pub fn quantize_down(&self, sinr: f64) -> &McsLevel {
        &self.levels[self.quantize_index(sinr)]
    }

    pub fn quantize_index(&self, sinr: f64) -> usize {
        self.decodable_index(sinr).unwrap_or(0)
    }

    /// Like [`quantize_index`](Self::quantize_index) but `None` when nothing
    /// is decodable at this SINR.
    pub fn decodable_index(&self, sinr: f64) -> Option<usize> {
        self.thresholds_linear.iter().rposition(|&t| t <= sinr)
    }

    /// `efficiency * w`; zero bandwidth gives zero rate.
    pub fn discrete_rate(&self, index: usize, bandwidth: f64) -> f64 {
        self.levels[index].efficiency * bandwidth
    }

    /// Power that puts SINR exactly on the level's threshold.
    pub fn power_for_level(&self, index: usize, bandwidth: f64, gain: f64, n0: f64) -> f64 {
        if bandwidth == 0.0 {
            return 0.0;
        }
        self.thresholds_linear[index] * bandwidth * n0 / gain
    }
}

/// Continuous rate model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    /// SINR gap factor
    pub beta: f64,
    /// Noise power spectral density, W/Hz
    pub n0: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        Self {
            beta: 0.25,
            n0: dbm_per_hz_to_watts(-169.0),
        }
    }
}

pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl RateModel {
    pub fn new(beta: f64, n0: f64) -> Result<Self, RateError> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(RateError::InvalidInput {
                name: "beta",
                value: beta,
            });
        }
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(RateError::NotPositive { name: "n0", value: n0 });
        }
        Ok(Self { beta, n0 })
    }

    /// SINR `p * h / (n0 * w)` without the gap factor.
    pub fn sinr(&self, power: f64, bandwidth: f64, gain: f64) -> f64 {
        power * gain / (self.n0 * bandwidth)
    }

    /// `w * log2(1 + beta * p * h / (n0 * w))` in bps.
    pub fn shannon_rate(&self, power: f64, bandwidth: f64, gain: f64) -> Result<f64, RateError> {
        check_non_negative("power", power)?;
        check_non_negative("bandwidth", bandwidth)?;
        check_non_negative("gain", gain)?;
        if bandwidth == 0.0 {
            return Err(RateError::NotPositive {
                name: "bandwidth",
                value: bandwidth,
            });
        }
        if gain == 0.0 {
            return Err(RateError::NotPositive {
                name: "gain",
                value: gain,
            });
        }
        if power == 0.0 {
            return Ok(0.0);
        }
        Ok(self.shannon_rate_unchecked(power, bandwidth, gain))
    }

    #[inline]
    pub fn shannon_rate_unchecked(&self, power: f64, bandwidth: f64, gain: f64) -> f64 {
        bandwidth * (self.beta * self.sinr(power, bandwidth, gain)).ln_1p() / std::f64::consts::LN_2
    }

    /// `log2(1 + beta * sinr)`, the continuous spectral efficiency.
    #[inline]
    pub fn spectral_efficiency(&self, sinr: f64) -> f64 {
        (self.beta * sinr).ln_1p() / std::f64::consts::LN_2
    }
}

fn check_non_negative(name: &'static str, value: f64) -> Result<(), RateError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(RateError::InvalidInput { name, value })
    }
}
