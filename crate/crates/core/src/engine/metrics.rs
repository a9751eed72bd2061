//! Delay and throughput statistics per traffic class and distance ring.

use std::fmt;

use crate::traffic::TrafficClass;

/// Nearest-rank percentile: the `ceil(q n)`-th smallest sample. `None` for
/// no samples.
pub fn percentile(samples: &[f64], q: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(percentile_sorted(&sorted, q))
}

/// [`percentile`] on already sorted, nonempty samples.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    // Guard against q * n landing a hair above an integer.
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// Which users a metrics row aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ring {
    /// A single ring radius, m.
    At(f64),
    /// Rings up to the good-user radius.
    Good,
    All,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::At(m) => write!(f, "{}", m / 1000.0),
            Ring::Good => f.write_str("good"),
            Ring::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupMetrics {
    pub class: TrafficClass,
    pub ring: Ring,
    pub users: usize,
    pub delay_samples: usize,
    /// s; `None` without delay samples.
    pub delay_p95: Option<f64>,
    /// Fraction of packets delayed beyond `d_max`.
    pub violation_rate: Option<f64>,
    /// Mean per-user throughput, bps.
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub scheduler: String,
    /// Frames that entered the statistics (after warm-up).
    pub measured_frames: u64,
    pub groups: Vec<GroupMetrics>,
    /// p95 over all voice and video packets, s.
    pub rt_delay_p95: Option<f64>,
    /// Sum of data-user throughputs, bps.
    pub data_throughput: f64,
    /// `sum ln(throughput)` over elastic users with nonzero throughput.
    pub logsum: f64,
    /// Time-averaged video rate level per ring radius (elastic mode only).
    pub lambda_by_ring: Vec<(f64, f64)>,
    pub pf_solves: u64,
    pub pf_degraded: u64,
    pub pf_infeasible: u64,
}

impl MetricsReport {
    pub fn group(&self, class: TrafficClass, ring: Ring) -> Option<&GroupMetrics> {
        self.groups.iter().find(|g| g.class == class && g.ring == ring)
    }

    pub fn delay_p95(&self, class: TrafficClass, ring: Ring) -> Option<f64> {
        self.group(class, ring).and_then(|g| g.delay_p95)
    }

    pub fn lambda_at(&self, ring_m: f64) -> Option<f64> {
        self.lambda_by_ring.iter().find(|r| r.0 == ring_m).map(|r| r.1)
    }

    pub fn degraded_fraction(&self) -> f64 {
        if self.pf_solves == 0 {
            0.0
        } else {
            self.pf_degraded as f64 / self.pf_solves as f64
        }
    }
}

/// Per-user accumulators filled by the frame loop.
#[derive(Debug, Clone, Default)]
pub struct UserStats {
    pub delays: Vec<f64>,
    pub delivered_bits: u64,
    pub lambda_sum: f64,
    pub lambda_frames: u64,
}

/// Static description of a user for aggregation.
#[derive(Debug, Clone, Copy)]
pub struct UserTag {
    pub class: TrafficClass,
    pub ring_m: f64,
    pub d_max: f64,
    pub elastic: bool,
}

pub struct ReportInput<'a> {
    pub scenario: String,
    pub scheduler: String,
    pub rings_m: &'a [f64],
    pub good_max_m: f64,
    pub measured_frames: u64,
    pub frame_len: f64,
    pub tags: &'a [UserTag],
    pub stats: &'a [UserStats],
    pub pf_solves: u64,
    pub pf_degraded: u64,
    pub pf_infeasible: u64,
}

pub fn build_report(input: ReportInput<'_>) -> MetricsReport {
    let duration = input.measured_frames as f64 * input.frame_len;
    let throughput = |i: usize| {
        if duration > 0.0 {
            input.stats[i].delivered_bits as f64 / duration
        } else {
            0.0
        }
    };
    let mut rings: Vec<Ring> = input.rings_m.iter().map(|&m| Ring::At(m)).collect();
    rings.push(Ring::Good);
    rings.push(Ring::All);
    let in_ring = |tag: &UserTag, ring: Ring| match ring {
        Ring::At(m) => tag.ring_m == m,
        Ring::Good => tag.ring_m <= input.good_max_m,
        Ring::All => true,
    };

    let mut groups = Vec::new();
    for class in TrafficClass::ALL {
        for &ring in &rings {
            let members: Vec<usize> = (0..input.tags.len())
                .filter(|&i| input.tags[i].class == class && in_ring(&input.tags[i], ring))
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut delays: Vec<f64> = Vec::new();
            let mut violations = 0usize;
            for &i in &members {
                let d_max = input.tags[i].d_max;
                delays.extend_from_slice(&input.stats[i].delays);
                violations += input.stats[i].delays.iter().filter(|&&d| d > d_max).count();
            }
            delays.sort_by(f64::total_cmp);
            let n = delays.len();
            let mean_tp = members.iter().map(|&i| throughput(i)).sum::<f64>() / members.len() as f64;
            groups.push(GroupMetrics {
                class,
                ring,
                users: members.len(),
                delay_samples: n,
                delay_p95: (n > 0).then(|| percentile_sorted(&delays, 0.95)),
                violation_rate: (n > 0).then(|| violations as f64 / n as f64),
                throughput: mean_tp,
            });
        }
    }

    let mut rt_delays: Vec<f64> = (0..input.tags.len())
        .filter(|&i| input.tags[i].class.is_realtime())
        .flat_map(|i| input.stats[i].delays.iter().copied())
        .collect();
    rt_delays.sort_by(f64::total_cmp);
    let rt_delay_p95 = (!rt_delays.is_empty()).then(|| percentile_sorted(&rt_delays, 0.95));
    let data_throughput = (0..input.tags.len())
        .filter(|&i| input.tags[i].class == TrafficClass::Be)
        .map(throughput)
        .fold(0.0, |a, b| a + b);
    let logsum = (0..input.tags.len())
        .filter(|&i| input.tags[i].elastic)
        .map(throughput)
        .filter(|&t| t > 0.0)
        .map(f64::ln)
        .fold(0.0, |a, b| a + b);
    let lambda_by_ring = input
        .rings_m
        .iter()
        .filter_map(|&m| {
            let (sum, n) = (0..input.tags.len())
                .filter(|&i| input.tags[i].ring_m == m && input.stats[i].lambda_frames > 0)
                .fold((0.0, 0u64), |(s, n), i| {
                    (
                        s + input.stats[i].lambda_sum / input.stats[i].lambda_frames as f64,
                        n + 1,
                    )
                });
            (n > 0).then(|| (m, sum / n as f64))
        })
        .collect();

    MetricsReport {
        scenario: input.scenario,
        scheduler: input.scheduler,
        measured_frames: input.measured_frames,
        groups,
        rt_delay_p95,
        data_throughput,
        logsum,
        lambda_by_ring,
        pf_solves: input.pf_solves,
        pf_degraded: input.pf_degraded,
        pf_infeasible: input.pf_infeasible,
    }
}
