//! The frame loop.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::config::{ConfigError, Scheduler, SimConfig, VideoMode};
use super::metrics::{build_report, MetricsReport, ReportInput, UserStats, UserTag};
use crate::allocation::{Allocation, AllocationError};
use crate::cell::{CellConfig, UserFrame};
use crate::channel::{ChannelError, ChannelState};
use crate::dra_alloc::{allocate_frame, AllocSettings};
use crate::dra_select::{select, SelectionOutcome, SelectionSettings};
use crate::mlwdf;
use crate::pf_solver::{PfStatus, SolverSettings};
use crate::streams::{global_stream, substream, Purpose};
use crate::traffic::{QueueState, RateController, Source, TrafficClass, TrafficProfile};

#[derive(Error, Debug)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("channel setup: {0}")]
    Channel(#[from] ChannelError),
    #[error("traffic setup: {0}")]
    Traffic(String),
    #[error("frame {frame}: allocation violates resource limits: {source}")]
    Conservation { frame: u64, source: AllocationError },
}

/// What an observer sees after each frame has been served.
pub struct FrameView<'a> {
    pub frame: u64,
    /// Start of the frame, s.
    pub now: f64,
    /// Scheduler inputs, indexed by user id.
    pub users: &'a [UserFrame],
    pub allocation: &'a Allocation,
    /// DRA selection, when DRA scheduled this frame.
    pub selection: Option<&'a SelectionOutcome>,
    /// Bits actually delivered per user.
    pub delivered_bits: &'a [u64],
    /// Video rate level per user (1 for everyone else).
    pub lambdas: &'a [u32],
    /// Queue sizes after service.
    pub q_after: &'a [u64],
}

struct SimUser {
    tag: UserTag,
    profile: TrafficProfile,
    channel: ChannelState,
    source: Source,
    queue: QueueState,
    lambda: u32,
    lambda_max: u32,
    stats: UserStats,
}

/// Substream key: stable per (class, index within class), so changing one
/// class's user count leaves every other user's randomness untouched.
fn stream_key(class: TrafficClass, index: usize) -> usize {
    let c = match class {
        TrafficClass::Voip => 0,
        TrafficClass::Video => 1,
        TrafficClass::Be => 2,
    };
    c * 1_000_000 + index
}

pub struct Simulation {
    cfg: SimConfig,
    cell: CellConfig,
    users: Vec<SimUser>,
    selection: SelectionSettings,
    alloc: AllocSettings,
    solver: SolverSettings,
    controller: RateController,
    sched_rng: ChaCha8Rng,
    frame: u64,
    pf_solves: u64,
    pf_degraded: u64,
    pf_infeasible: u64,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let s = &cfg.system;
        let mut users = Vec::new();
        for class in TrafficClass::ALL {
            let profile = cfg.traffic.profile(class);
            let elastic = match class {
                TrafficClass::Voip => false,
                TrafficClass::Video => s.video_mode == VideoMode::Elastic,
                TrafficClass::Be => true,
            };
            for j in 0..cfg.users_of(class) {
                let ring_m = s.rings_m[j % s.rings_m.len()];
                let key = stream_key(class, j);
                let channel = ChannelState::new(ring_m, s.channel, substream(s.seed, key, Purpose::Channel))?;
                let mut traffic_rng = substream(s.seed, key, Purpose::Traffic);
                let (source, initial_rate) = match class {
                    TrafficClass::Voip => (
                        Source::voip(&cfg.traffic.voip.generator, s.frame_len, &mut traffic_rng),
                        profile.r0,
                    ),
                    TrafficClass::Video => (
                        Source::video(&cfg.traffic.video.generator, traffic_rng).map_err(EngineError::Traffic)?,
                        profile.r0,
                    ),
                    TrafficClass::Be => (
                        Source::best_effort(&cfg.traffic.be.generator),
                        cfg.traffic.be.initial_rate,
                    ),
                };
                users.push(SimUser {
                    tag: UserTag {
                        class,
                        ring_m,
                        d_max: profile.d_max,
                        elastic,
                    },
                    profile,
                    channel,
                    source,
                    queue: QueueState::new(profile.alpha, initial_rate, cfg.traffic.video.controller.window),
                    lambda: 1,
                    lambda_max: profile.lambda_max(),
                    stats: UserStats::default(),
                });
            }
        }
        Ok(Self {
            cell: cfg.cell(),
            users,
            selection: cfg.solver.selection(),
            alloc: cfg.solver.alloc(),
            solver: cfg.solver.solver(),
            controller: cfg.traffic.video.controller,
            sched_rng: global_stream(s.seed),
            frame: 0,
            pf_solves: 0,
            pf_degraded: 0,
            pf_infeasible: 0,
            cfg: cfg.clone(),
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn is_done(&self) -> bool {
        self.frame >= self.cfg.system.n_frames
    }

    /// Advances one frame.
    pub fn step(&mut self, observer: &mut dyn FnMut(&FrameView)) -> Result<(), EngineError> {
        let k = self.frame;
        let t = self.cfg.system.frame_len;
        let now = k as f64 * t;
        let warmup_time = self.cfg.system.warmup_frames as f64 * t;
        let measuring = k >= self.cfg.system.warmup_frames;

        for u in &mut self.users {
            u.channel.advance(k, t);
            let arrivals = u.source.generate(k, now, u.lambda, &u.queue);
            u.queue.extend(arrivals);
        }

        let frames: Vec<UserFrame> = self
            .users
            .iter()
            .enumerate()
            .map(|(id, u)| {
                let realtime = u.tag.class.is_realtime();
                UserFrame {
                    id,
                    class: u.tag.class,
                    elastic: u.tag.elastic,
                    gain: u.channel.gain(),
                    q_bits: u.queue.q_bits(),
                    hol: if realtime {
                        u.queue.hol_delay(now)
                    } else {
                        u.queue.time_since_service(now, u.profile.d_max)
                    },
                    avg_rate: u.queue.avg_rate,
                    omega: u.queue.omega,
                    basic_rate: u.profile.r0 * u.lambda as f64,
                    profile: u.profile,
                }
            })
            .collect();

        let mut selection = None;
        let allocation = match self.cfg.system.scheduler {
            Scheduler::Mlwdf => mlwdf::schedule_frame(&frames, &self.cell),
            Scheduler::Dra => {
                let sel = select(&frames, &self.cell, &self.selection, &mut self.sched_rng);
                let out = allocate_frame(&frames, &sel, &self.cell, &self.alloc, &self.solver);
                self.pf_solves += out.pf_solves as u64;
                match out.allocation.pf_status {
                    Some(PfStatus::Degraded) => self.pf_degraded += 1,
                    Some(PfStatus::Infeasible) => self.pf_infeasible += 1,
                    _ => {}
                }
                if !out.rerouted.is_empty() {
                    self.pf_infeasible += 1;
                }
                selection = Some(sel);
                out.allocation
            }
        };
        allocation
            .check(&self.cell, |i| frames[i].gain)
            .map_err(|source| EngineError::Conservation { frame: k, source })?;

        let mut delivered = vec![0u64; self.users.len()];
        let departure = now + t;
        for g in &allocation.grants {
            let u = &mut self.users[g.user];
            let before = u.queue.q_bits();
            let (departed, delays) = u.queue.serve_bits(g.frame_bits(t), departure);
            delivered[g.user] = before - u.queue.q_bits();
            if measuring && u.tag.class.is_realtime() {
                for (p, d) in departed.iter().zip(delays) {
                    if p.arrival_time >= warmup_time {
                        u.stats.delays.push(d);
                    }
                }
            }
        }

        let update_lambda = self.controller.is_update_frame(k + 1);
        for (i, u) in self.users.iter_mut().enumerate() {
            u.queue.update_avg_rate(delivered[i] as f64 / t);
            if u.tag.class.is_realtime() {
                u.queue.update_omega(delivered[i] > 0);
            }
            if measuring {
                u.stats.delivered_bits += delivered[i];
            }
            if u.tag.class == TrafficClass::Video && u.tag.elastic {
                u.queue.record_hol(frames[i].hol);
                if measuring {
                    u.stats.lambda_sum += u.lambda as f64;
                    u.stats.lambda_frames += 1;
                }
                if update_lambda {
                    u.lambda = self
                        .controller
                        .step(u.lambda, u.lambda_max, u.queue.mean_hol(), u.profile.d_max);
                }
            }
        }

        let lambdas: Vec<u32> = self.users.iter().map(|u| u.lambda).collect();
        let q_after: Vec<u64> = self.users.iter().map(|u| u.queue.q_bits()).collect();
        observer(&FrameView {
            frame: k,
            now,
            users: &frames,
            allocation: &allocation,
            selection: selection.as_ref(),
            delivered_bits: &delivered,
            lambdas: &lambdas,
            q_after: &q_after,
        });
        self.frame += 1;
        Ok(())
    }

    /// Closes the run: censors in-flight packets and aggregates.
    pub fn finish(mut self) -> MetricsReport {
        let s = &self.cfg.system;
        let end = self.frame as f64 * s.frame_len;
        let warmup_time = s.warmup_frames as f64 * s.frame_len;
        if s.censor_in_flight && self.frame > s.warmup_frames {
            for u in &mut self.users {
                if u.tag.class.is_realtime() {
                    for p in u.queue.packets() {
                        if p.arrival_time >= warmup_time {
                            u.stats.delays.push(end - p.arrival_time);
                        }
                    }
                }
            }
        }
        let tags: Vec<UserTag> = self.users.iter().map(|u| u.tag).collect();
        let stats: Vec<UserStats> = self.users.into_iter().map(|u| u.stats).collect();
        build_report(ReportInput {
            scenario: self.cfg.scenario(),
            scheduler: s.scheduler.name().to_string(),
            rings_m: &s.rings_m,
            good_max_m: s.good_max_m,
            measured_frames: self.frame.saturating_sub(s.warmup_frames),
            frame_len: s.frame_len,
            tags: &tags,
            stats: &stats,
            pf_solves: self.pf_solves,
            pf_degraded: self.pf_degraded,
            pf_infeasible: self.pf_infeasible,
        })
    }
}

pub fn run(cfg: &SimConfig) -> Result<MetricsReport, EngineError> {
    run_with_observer(cfg, |_| {})
}

pub fn run_with_observer(cfg: &SimConfig, mut observer: impl FnMut(&FrameView)) -> Result<MetricsReport, EngineError> {
    let mut sim = Simulation::new(cfg)?;
    while !sim.is_done() {
        sim.step(&mut observer)?;
    }
    Ok(sim.finish())
}
