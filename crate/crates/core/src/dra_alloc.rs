//! DRA allocation for one frame: basic allocations for fixed-rate real-time
//! users, proportional-fair split of what remains among elastic users, then
//! quantization onto subchannels and MCS levels.

use serde::{Deserialize, Serialize};

use crate::allocation::{level_power, total_power, Allocation, Grant};
use crate::cell::{CellConfig, UserFrame};
use crate::dra_select::SelectionOutcome;
use crate::pf_solver::{self, PfProblem, PfStatus, PfUser, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequiredRateMode {
    /// Never more than what drains the queue in one frame.
    #[default]
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocSettings {
    pub required_rate_mode: RequiredRateMode,
    pub omega_floor: f64,
}

impl Default for AllocSettings {
    fn default() -> Self {
        Self {
            required_rate_mode: RequiredRateMode::Min,
            omega_floor: 0.01,
        }
    }
}

/// Rate a real-time user needs this frame: the queue drained in one frame
/// against `r0 / omega`, combined per `mode`. Zero for an empty queue.
pub fn required_rate(
    q_bits: u64,
    omega: f64,
    r0: f64,
    frame_len: f64,
    omega_floor: f64,
    mode: RequiredRateMode,
) -> f64 {
    if q_bits == 0 {
        return 0.0;
    }
    let drain = q_bits as f64 / frame_len;
    let compensated = r0 / omega.max(omega_floor);
    match mode {
        RequiredRateMode::Min => drain.min(compensated),
        RequiredRateMode::Max => drain.max(compensated),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicAlloc {
    pub subchannels: u32,
    /// W
    pub power: f64,
    pub level: usize,
}

/// Subchannels and power for `r_min` at the level the nominal SINR supports
/// (level 0 if it supports none). `None` for `r_min = 0`.
pub fn basic_allocation(gain: f64, r_min: f64, cell: &CellConfig) -> Option<BasicAlloc> {
    if !(r_min > 0.0) {
        return None;
    }
    let level = cell.mcs.quantize_index(cell.nominal_sinr(gain));
    let efficiency = cell.mcs.efficiency(level);
    let subchannels = ((r_min / efficiency / cell.subchannel_bandwidth()).floor() as u32).max(1);
    Some(BasicAlloc {
        subchannels,
        power: level_power(cell, level, subchannels, gain),
        level,
    })
}

/// Removes one subchannel at a time from the highest-power grant (lowest id
/// on ties) until both budgets hold, keeping each grant's MCS level.
/// Grants that reach zero subchannels are dropped.
pub fn trim_overflow(
    grants: &mut Vec<Grant>,
    power_budget: f64,
    subchannel_budget: u32,
    cell: &CellConfig,
    gains: &[f64],
) {
    grants.sort_by_key(|g| g.user);
    loop {
        let over_power = total_power(grants) > power_budget;
        let over_bw = grants.iter().map(|g| g.subchannels).sum::<u32>() > subchannel_budget;
        if !over_power && !over_bw {
            return;
        }
        let Some(i) = argmax_power(grants, |_| true) else {
            return;
        };
        shrink(grants, i, cell, gains);
    }
}

fn argmax_power(grants: &[Grant], eligible: impl Fn(&Grant) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, g) in grants.iter().enumerate() {
        if eligible(g) && best.is_none_or(|b| g.power > grants[b].power) {
            best = Some(i);
        }
    }
    best
}

fn shrink(grants: &mut Vec<Grant>, i: usize, cell: &CellConfig, gains: &[f64]) {
    let g = grants[i];
    if g.subchannels <= 1 {
        grants.remove(i);
    } else {
        grants[i] = Grant::at_level(cell, g.user, g.subchannels - 1, g.mcs, gains[g.user]);
    }
}

/// Continuous proportional-fair output for one user, before quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousGrant {
    pub user: usize,
    pub power: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub allocation: Allocation,
    /// Elastic users moved to basic allocation because the PF stage was
    /// infeasible with them.
    pub rerouted: Vec<usize>,
    pub pf_solves: usize,
}

/// Runs the full per-frame pipeline. `users[i].id` must equal `i`.
pub fn allocate_frame(
    users: &[UserFrame],
    selection: &SelectionOutcome,
    cell: &CellConfig,
    settings: &AllocSettings,
    solver: &SolverSettings,
) -> FrameOutcome {
    let gains: Vec<f64> = users.iter().map(|u| u.gain).collect();
    let required = |u: &UserFrame| {
        required_rate(
            u.q_bits,
            u.omega,
            u.basic_rate,
            cell.frame_len,
            settings.omega_floor,
            settings.required_rate_mode,
        )
    };

    let mut basic_users: Vec<usize> = Vec::new();
    let mut elastic: Vec<(usize, f64)> = Vec::new();
    for &id in &selection.chosen_rt {
        let u = &users[id];
        if u.elastic {
            elastic.push((id, required(u)));
        } else {
            basic_users.push(id);
        }
    }
    for &id in &selection.chosen_data {
        elastic.push((id, 0.0));
    }
    elastic.sort_by_key(|e| e.0);

    let make_basic = |ids: &[usize], extra: &[(usize, f64)]| -> Vec<Grant> {
        let mut grants: Vec<Grant> = ids
            .iter()
            .filter_map(|&id| {
                let b = basic_allocation(gains[id], required(&users[id]), cell)?;
                Some(Grant::with_power(cell, id, b.subchannels, b.level, b.power))
            })
            .chain(extra.iter().filter_map(|&(id, r)| {
                let b = basic_allocation(gains[id], r, cell)?;
                Some(Grant::with_power(cell, id, b.subchannels, b.level, b.power))
            }))
            .collect();
        trim_overflow(&mut grants, cell.total_power, cell.n_subchannels, cell, &gains);
        grants
    };

    let mut rerouted: Vec<(usize, f64)> = Vec::new();
    let mut pf_solves = 0;
    let mut pf_status = None;
    let (basic, continuous) = loop {
        let basic = make_basic(&basic_users, &rerouted);
        let residual_power = cell.total_power - total_power(&basic);
        let used: u32 = basic.iter().map(|g| g.subchannels).sum();
        let residual_subs = cell.n_subchannels - used;
        if elastic.is_empty() || !(residual_power > 0.0) || residual_subs == 0 {
            break (basic, Vec::new());
        }
        let problem = PfProblem {
            users: elastic
                .iter()
                .map(|&(id, r_min)| PfUser {
                    phi: users[id].profile.phi,
                    noise: cell.rate.n0 / (cell.rate.beta * gains[id]),
                    min_rate: r_min,
                })
                .collect(),
            power: residual_power,
            bandwidth: residual_subs as f64 * cell.subchannel_bandwidth(),
        };
        pf_solves += 1;
        let solution = match pf_solver::solve(&problem, solver) {
            Ok(s) => s,
            Err(_) => break (basic, Vec::new()),
        };
        if solution.status == PfStatus::Infeasible {
            // Move the constrained user with the costliest floor to the basic path.
            let feas = pf_solver::feasibility_check(&problem);
            let worst = (0..elastic.len()).filter(|&i| elastic[i].1 > 0.0).max_by(|&a, &b| {
                feas.per_user_power[a]
                    .total_cmp(&feas.per_user_power[b])
                    .then(b.cmp(&a))
            });
            match worst {
                Some(i) => {
                    rerouted.push(elastic.remove(i));
                    continue;
                }
                None => {
                    pf_status = Some(PfStatus::Infeasible);
                    break (basic, Vec::new());
                }
            }
        }
        pf_status = Some(solution.status);
        let continuous = elastic
            .iter()
            .zip(&solution.grants)
            .map(|(&(id, _), g)| ContinuousGrant {
                user: id,
                power: g.power,
                bandwidth: g.bandwidth,
            })
            .collect();
        break (basic, continuous);
    };

    let mut allocation = reshuffle(basic, &continuous, users, cell);
    allocation.pf_status = pf_status;
    FrameOutcome {
        allocation,
        rerouted: rerouted.iter().map(|r| r.0).collect(),
        pf_solves,
    }
}

/// Maps the continuous PF grants onto whole subchannels and MCS levels next
/// to the fixed basic grants, then hands out leftover subchannels and power.
/// `users[i].id` must equal `i`.
///
/// Budget repairs only shrink PF-stage grants: the basic grants already fit
/// on their own after trimming.
pub fn reshuffle(
    basic: Vec<Grant>,
    continuous: &[ContinuousGrant],
    users: &[UserFrame],
    cell: &CellConfig,
) -> Allocation {
    let w_sub = cell.subchannel_bandwidth();
    let gains: Vec<f64> = users.iter().map(|u| u.gain).collect();
    let gain = |id: usize| gains[id];
    let bits_per_frame = |level: usize, k: u32| cell.mcs.discrete_rate(level, k as f64 * w_sub) * cell.frame_len;

    let mut pf_ids: Vec<usize> = Vec::new();
    let mut grants = basic;
    for c in continuous {
        if !(c.power > 0.0 && c.bandwidth > 0.0) {
            continue;
        }
        // (a) whole subchannels, at least one
        let k = ((c.bandwidth / w_sub).floor() as u32).max(1);
        // (b) MCS level the granted power supports on k subchannels
        let sinr = cell.rate.sinr(c.power, k as f64 * w_sub, gain(c.user));
        let level = cell.mcs.quantize_index(sinr);
        let mut k = k;
        // (c) streaming users keep only what their queue can fill
        let u = &users[c.user];
        if u.is_realtime() {
            while k > 1 && bits_per_frame(level, k - 1) >= u.q_bits as f64 {
                k -= 1;
            }
        }
        grants.push(Grant::at_level(cell, c.user, k, level, gain(c.user)));
        pf_ids.push(c.user);
    }
    grants.sort_by_key(|g| g.user);
    let shrinkable = |g: &Grant| pf_ids.contains(&g.user);

    // (d) bandwidth, then (e) power
    while grants.iter().map(|g| g.subchannels).sum::<u32>() > cell.n_subchannels {
        let Some(i) = argmax_power(&grants, shrinkable) else {
            break;
        };
        shrink(&mut grants, i, cell, &gains);
    }
    while total_power(&grants) > cell.total_power {
        let Some(i) = argmax_power(&grants, shrinkable) else {
            break;
        };
        shrink(&mut grants, i, cell, &gains);
    }

    // (f) leftover subchannels to the best-gain user that can pay for them
    let has_room = |g: &Grant, k: u32, level: usize| {
        let u = &users[g.user];
        !u.is_realtime() || bits_per_frame(level, k) < u.q_bits as f64
    };
    let mut by_gain: Vec<usize> = (0..grants.len()).collect();
    by_gain.sort_by(|&a, &b| {
        gain(grants[b].user)
            .total_cmp(&gain(grants[a].user))
            .then(grants[a].user.cmp(&grants[b].user))
    });
    let mut free = cell
        .n_subchannels
        .saturating_sub(grants.iter().map(|g| g.subchannels).sum());
    while free > 0 {
        let mut grew = false;
        for &i in &by_gain {
            let g = grants[i];
            if !has_room(&g, g.subchannels, g.mcs) {
                continue;
            }
            let candidate = Grant::at_level(cell, g.user, g.subchannels + 1, g.mcs, gain(g.user));
            if try_replace(&mut grants, i, candidate, cell.total_power) {
                free -= 1;
                grew = true;
                break;
            }
        }
        if !grew {
            break;
        }
    }

    // (g) leftover power: one level up, weakest users first
    for &i in by_gain.iter().rev() {
        let g = grants[i];
        if g.mcs + 1 >= cell.mcs.len() || !has_room(&g, g.subchannels, g.mcs) {
            continue;
        }
        let candidate = Grant::at_level(cell, g.user, g.subchannels, g.mcs + 1, gain(g.user));
        try_replace(&mut grants, i, candidate, cell.total_power);
    }

    Allocation::new(grants)
}

/// Swaps in `candidate` if the power total stays within `budget`.
fn try_replace(grants: &mut [Grant], i: usize, candidate: Grant, budget: f64) -> bool {
    let old = grants[i];
    grants[i] = candidate;
    if total_power(grants) <= budget {
        true
    } else {
        grants[i] = old;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dra_select::{select, SelectionSettings};
    use crate::streams::global_stream;
    use crate::traffic::{TrafficClass, TrafficProfile};
    use proptest::prelude::*;

    fn user(id: usize, class: TrafficClass, gain: f64, q_bits: u64) -> UserFrame {
        let profile = TrafficProfile::default_for(class);
        UserFrame {
            id,
            class,
            elastic: class == TrafficClass::Be,
            gain,
            q_bits,
            hol: 0.01,
            avg_rate: profile.r0.max(1e5),
            omega: 1.0,
            basic_rate: profile.r0,
            profile,
        }
    }

    fn chosen(rt: &[usize], data: &[usize]) -> SelectionOutcome {
        SelectionOutcome {
            chosen_rt: rt.to_vec(),
            chosen_data: data.to_vec(),
            ..Default::default()
        }
    }

    fn run(users: &[UserFrame], sel: &SelectionOutcome) -> FrameOutcome {
        allocate_frame(
            users,
            sel,
            &CellConfig::default(),
            &AllocSettings::default(),
            &SolverSettings::default(),
        )
    }

    #[test]
    fn required_rate_examples() {
        let m = RequiredRateMode::Min;
        assert_eq!(required_rate(0, 0.5, 32e3, 1e-3, 0.01, m), 0.0);
        assert_eq!(required_rate(3200, 0.5, 32e3, 1e-3, 0.01, m), 64e3);
        assert_eq!(required_rate(u64::MAX / 2, 1.0, 32e3, 1e-3, 0.01, m), 32e3);
        assert_eq!(required_rate(3200, 0.5, 32e3, 1e-3, 0.01, RequiredRateMode::Max), 3.2e6);
        // omega floor caps the compensation at 100 r0
        assert_eq!(required_rate(1_000_000, 0.0, 32e3, 1e-3, 0.01, m), 3.2e6);
    }

    #[test]
    fn basic_allocation_example() {
        let cell = CellConfig::default();
        let gamma0 = cell.nominal_sinr(1e-12);
        assert!((gamma0 - 158.9).abs() < 0.05, "{gamma0}");
        let b = basic_allocation(1e-12, 32e3, &cell).unwrap();
        assert_eq!(b.level, 8);
        assert_eq!(b.subchannels, 1);
        let n0 = 10f64.powf(-19.9);
        assert!((b.power - 100.0 * 312_500.0 * n0 / 1e-12).abs() < 1e-12);
        assert!((b.power - 0.3934).abs() < 5e-5);
        assert_eq!(basic_allocation(1e-12, 0.0, &cell), None);
        // below the lowest threshold: level 0 anyway
        let weak = basic_allocation(1e-16, 32e3, &cell).unwrap();
        assert_eq!(weak.level, 0);
        assert!(cell.nominal_sinr(1e-16) < cell.mcs.threshold_linear(0));
        // 3 Mbps at 4.5 bps/Hz: 667 kHz = 2.13 subchannels -> 2
        assert_eq!(basic_allocation(1e-12, 3e6, &cell).unwrap().subchannels, 2);
        assert_eq!(basic_allocation(1e-12, 1e6, &cell).unwrap().subchannels, 1);
    }

    #[test]
    fn level_step_can_raise_basic_power() {
        // 9 dB -> 13 dB nominal: level 4 (6 dB) -> level 5 (10.5 dB) on one
        // subchannel, so the 4 dB gain improvement buys a 4.5 dB threshold.
        let cell = CellConfig::default();
        let h = 10f64.powf(-13.3);
        let better = h * 10f64.powf(0.4);
        let a = basic_allocation(h, 1e3, &cell).unwrap();
        let b = basic_allocation(better, 1e3, &cell).unwrap();
        assert_eq!((a.level, b.level), (4, 5));
        assert_eq!((a.subchannels, b.subchannels), (1, 1));
        assert!(b.power > a.power);
    }

    #[test]
    fn trim_examples() {
        let cell = CellConfig::default();
        let gains = [1e-12, 1e-12];
        let g = Grant::at_level(&cell, 0, 2, 8, 1e-12);
        let mut within = vec![g];
        trim_overflow(&mut within, 20.0, 32, &cell, &gains);
        assert_eq!(within, vec![g]);

        let mut over = vec![g];
        trim_overflow(&mut over, g.power * 0.75, 32, &cell, &gains);
        assert_eq!(over[0].subchannels, 1);
        assert!((over[0].power - g.power / 2.0).abs() < 1e-15);

        let mut none = vec![g, Grant::at_level(&cell, 1, 3, 2, 1e-12)];
        trim_overflow(&mut none, 0.0, 0, &cell, &gains);
        assert!(none.is_empty());
    }

    #[test]
    fn voice_only_is_pure_basic() {
        let users: Vec<_> = (0..3).map(|i| user(i, TrafficClass::Voip, 1e-12, 640)).collect();
        let out = run(&users, &chosen(&[0, 1, 2], &[]));
        assert_eq!(out.pf_solves, 0);
        assert_eq!(out.allocation.pf_status, None);
        // 640 bits / 1 ms > 32 kbps: required rate 32 kbps -> 1 subchannel,
        // then leftover subchannels flow to whoever still has buffer.
        let cell = CellConfig::default();
        for g in &out.allocation.grants {
            assert!(g.rate * cell.frame_len <= 640.0 + 4.5 * 312_500.0 * 1e-3);
        }
        assert!(out.allocation.check(&cell, |i| users[i].gain).is_ok());
    }

    #[test]
    fn be_only_is_pure_pf() {
        let cell = CellConfig::default();
        let users = vec![
            user(0, TrafficClass::Be, 1e-11, 1_000_000),
            user(1, TrafficClass::Be, 1e-13, 1_000_000),
        ];
        let out = run(&users, &chosen(&[], &[0, 1]));
        assert_eq!(out.pf_solves, 1);
        assert_eq!(out.allocation.pf_status, Some(PfStatus::Optimal));
        assert_eq!(out.allocation.total_subchannels(), 32);
        assert!(out.allocation.check(&cell, |i| users[i].gain).is_ok());
        // Equal weights: the PF split gives both users bandwidth.
        assert!(out.allocation.grants.iter().all(|g| g.subchannels >= 1));
    }

    #[test]
    fn mixed_desk_instance() {
        let cell = CellConfig::default();
        let users = vec![
            user(0, TrafficClass::Voip, 2e-12, 1280),
            user(1, TrafficClass::Voip, 4e-14, 640),
            user(2, TrafficClass::Be, 1e-12, 1_000_000),
            user(3, TrafficClass::Be, 5e-14, 1_000_000),
        ];
        let out = run(&users, &chosen(&[0, 1], &[2, 3]));
        let a = &out.allocation;
        assert!(a.check(&cell, |i| users[i].gain).is_ok());
        assert_ne!(a.pf_status, Some(PfStatus::Degraded));
        // Hand-computed basic allocation: 32 kbps at the nominal level.
        for v in [0, 1] {
            let b = basic_allocation(users[v].gain, 32e3, &cell).unwrap();
            let basic_rate = cell.mcs.discrete_rate(b.level, b.subchannels as f64 * 312_500.0);
            assert!(a.rate_of(v) >= basic_rate.min(32e3), "user {v}: {}", a.rate_of(v));
        }
        // Elastic users shared the residual via PF; compare with a 2-user oracle.
        let basic_power: f64 = [0, 1]
            .iter()
            .map(|&v| basic_allocation(users[v].gain, 32e3, &cell).unwrap().power)
            .sum();
        let problem = PfProblem {
            users: [2, 3]
                .iter()
                .map(|&i| PfUser {
                    phi: 1.0,
                    noise: cell.rate.n0 / (cell.rate.beta * users[i].gain),
                    min_rate: 0.0,
                })
                .collect(),
            power: 20.0 - basic_power,
            bandwidth: 30.0 * 312_500.0,
        };
        let oracle = pf_solver::brute_force_oracle(&problem, 60).unwrap();
        let solved = pf_solver::solve(&problem, &SolverSettings::default()).unwrap();
        assert!(problem.objective(&solved.grants) >= problem.objective(&oracle.grants) - 1e-9);
    }

    #[test]
    fn reshuffle_examples() {
        let cell = CellConfig::default();
        let users = vec![
            user(0, TrafficClass::Be, 1e-12, 1_000_000),
            user(1, TrafficClass::Video, 1e-12, 100),
        ];
        // On-lattice continuous solution with exact level power: (d)-(e) no-ops.
        let p = level_power(&cell, 5, 4, 1e-12);
        let a = reshuffle(
            Vec::new(),
            &[ContinuousGrant {
                user: 0,
                power: p,
                bandwidth: 4.0 * 312_500.0,
            }],
            &users,
            &cell,
        );
        // single elastic user absorbs every remaining subchannel
        assert_eq!(a.grants.len(), 1);
        assert_eq!(a.grants[0].subchannels, 32);
        assert!(a.grants[0].mcs >= 5);
        assert!(a.check(&cell, |i| users[i].gain).is_ok());

        // Streaming user with a 100-bit queue granted ~1 Mbps.
        let a = reshuffle(
            Vec::new(),
            &[ContinuousGrant {
                user: 1,
                power: 0.5,
                bandwidth: 4.0 * 312_500.0,
            }],
            &users,
            &cell,
        );
        assert_eq!(a.grants[0].subchannels, 1);
    }

    fn arb_frame() -> impl Strategy<Value = (Vec<UserFrame>, bool)> {
        (
            prop::collection::vec(
                (0usize..3, -16.0f64..-10.0, 0u64..400_000, 0.0f64..0.4, 0.0f64..1.0),
                1..24,
            ),
            any::<bool>(),
        )
            .prop_map(|(rows, elastic_video)| {
                let users = rows
                    .into_iter()
                    .enumerate()
                    .map(|(id, (c, lg, q, hol, omega))| {
                        let class = TrafficClass::ALL[c];
                        let mut u = user(id, class, 10f64.powf(lg), q);
                        u.hol = hol;
                        u.omega = omega;
                        u.elastic = class == TrafficClass::Be || (class == TrafficClass::Video && elastic_video);
                        u
                    })
                    .collect();
                (users, elastic_video)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn allocation_respects_budgets((users, _) in arb_frame()) {
            let cell = CellConfig::default();
            let sel = select(&users, &cell, &SelectionSettings::default(), &mut global_stream(0));
            let out = run(&users, &sel);
            prop_assert!(out.allocation.check(&cell, |i| users[i].gain).is_ok(), "{:?}", out.allocation.check(&cell, |i| users[i].gain));
            prop_assert!(out.allocation.total_power() <= 20.0);
            for g in &out.allocation.grants {
                prop_assert!(users[g.user].is_backlogged());
            }
            // deterministic
            prop_assert_eq!(run(&users, &sel), out);
        }

        #[test]
        fn voice_keeps_trimmed_basic_rate((users, _) in arb_frame()) {
            let cell = CellConfig::default();
            let sel = select(&users, &cell, &SelectionSettings::default(), &mut global_stream(0));
            let settings = AllocSettings::default();
            let gains: Vec<f64> = users.iter().map(|u| u.gain).collect();
            let mut basic: Vec<Grant> = sel.chosen_rt.iter()
                .filter(|&&id| !users[id].elastic)
                .filter_map(|&id| {
                    let u = &users[id];
                    let r = required_rate(u.q_bits, u.omega, u.basic_rate, cell.frame_len, settings.omega_floor, settings.required_rate_mode);
                    let b = basic_allocation(u.gain, r, &cell)?;
                    Some(Grant::with_power(&cell, id, b.subchannels, b.level, b.power))
                })
                .collect();
            trim_overflow(&mut basic, cell.total_power, cell.n_subchannels, &cell, &gains);
            let out = run(&users, &sel);
            if out.rerouted.is_empty() {
                for b in &basic {
                    prop_assert!(out.allocation.rate_of(b.user) >= b.rate);
                }
            }
        }

        #[test]
        fn basic_power_density_within_uniform(lg in -16.0f64..-9.0, r in 1e3f64..2e6) {
            let cell = CellConfig::default();
            let h = 10f64.powf(lg);
            let b = basic_allocation(h, r, &cell).unwrap();
            let w = b.subchannels as f64 * cell.subchannel_bandwidth();
            if cell.nominal_sinr(h) >= cell.mcs.threshold_linear(0) {
                prop_assert!(b.power / w <= cell.total_power / cell.bandwidth * (1.0 + 1e-12));
            }
        }

        #[test]
        fn better_gain_at_same_level_never_costs_more(lg in -16.0f64..-9.0, boost in 0.0f64..3.0, r in 1e3f64..2e6) {
            let cell = CellConfig::default();
            let h = 10f64.powf(lg);
            let a = basic_allocation(h, r, &cell).unwrap();
            let b = basic_allocation(h * 10f64.powf(boost), r, &cell).unwrap();
            if a.level == b.level {
                prop_assert!(b.power <= a.power * (1.0 + 1e-12));
            }
        }
    }
}
