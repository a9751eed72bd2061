//! M-LWDF-PF baseline: equal power per subchannel, each subchannel handed
//! to the user with the largest `a_i * D_HOL * r_i`.

use crate::allocation::{Allocation, Grant};
use crate::cell::{CellConfig, UserFrame};
use crate::traffic::TrafficProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlwdfConfig {
    pub n_subchannels: u32,
    /// W
    pub per_subchannel_power: f64,
}

impl MlwdfConfig {
    pub fn from_cell(cell: &CellConfig) -> Self {
        Self {
            n_subchannels: cell.n_subchannels,
            per_subchannel_power: cell.total_power / cell.n_subchannels as f64,
        }
    }
}

/// `a_i = -log10(delta) / (d_max * max(R, 1))`.
pub fn delay_coefficient(profile: &TrafficProfile, avg_rate: f64) -> f64 {
    profile.delay_weight() / avg_rate.max(1.0)
}

/// `a_i * D_HOL * r_i`; `-inf` for an empty queue.
pub fn mlwdf_weight(profile: &TrafficProfile, avg_rate: f64, hol: f64, q_bits: u64, rate: f64) -> f64 {
    if q_bits == 0 {
        return f64::NEG_INFINITY;
    }
    delay_coefficient(profile, avg_rate) * hol * rate
}

struct Candidate {
    id: usize,
    level: usize,
    shannon: f64,
    bits_per_sub: f64,
    q_bits: u64,
    hol: f64,
    avg_rate: f64,
    alpha: f64,
    profile: TrafficProfile,
    assigned: u32,
}

impl Candidate {
    fn weight(&self) -> f64 {
        mlwdf_weight(&self.profile, self.avg_rate, self.hol, self.q_bits, self.shannon)
    }

    fn covered(&self) -> bool {
        self.assigned as f64 * self.bits_per_sub >= self.q_bits as f64
    }
}

/// Assigns subchannels in index order. Users whose queue is already covered
/// by this frame's grants step aside while anyone else still has data;
/// users that cannot decode the lowest MCS at `P/N` per subchannel never
/// receive a subchannel.
pub fn schedule_frame(users: &[UserFrame], cell: &CellConfig) -> Allocation {
    let cfg = MlwdfConfig::from_cell(cell);
    let w_sub = cell.subchannel_bandwidth();
    let mut cands: Vec<Candidate> = users
        .iter()
        .filter(|u| u.is_backlogged())
        .filter_map(|u| {
            let sinr = cell.rate.sinr(cfg.per_subchannel_power, w_sub, u.gain);
            let level = cell.mcs.decodable_index(sinr)?;
            Some(Candidate {
                id: u.id,
                level,
                shannon: cell
                    .rate
                    .shannon_rate_unchecked(cfg.per_subchannel_power, w_sub, u.gain),
                bits_per_sub: cell.mcs.discrete_rate(level, w_sub) * cell.frame_len,
                q_bits: u.q_bits,
                hol: u.hol,
                avg_rate: u.avg_rate,
                alpha: u.profile.alpha,
                profile: u.profile,
                assigned: 0,
            })
        })
        .collect();
    cands.sort_by_key(|c| c.id);

    for _ in 0..cfg.n_subchannels {
        let pick = best(&cands, true).or_else(|| best(&cands, false));
        let Some(i) = pick else { break };
        let c = &mut cands[i];
        c.assigned += 1;
        let sub_rate = cell.mcs.discrete_rate(c.level, w_sub);
        c.avg_rate = c.alpha * c.avg_rate + (1.0 - c.alpha) * sub_rate;
    }

    let grants = cands
        .iter()
        .filter(|c| c.assigned > 0)
        .map(|c| {
            let power = cell.total_power * c.assigned as f64 / cfg.n_subchannels as f64;
            Grant::with_power(cell, c.id, c.assigned, c.level, power)
        })
        .collect();
    Allocation::new(grants)
}

/// Highest weight, lowest id on ties.
fn best(cands: &[Candidate], skip_covered: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cands.iter().enumerate() {
        if skip_covered && c.covered() {
            continue;
        }
        let w = c.weight();
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((i, w));
        }
    }
    best.map(|(i, _)| i)
}
