//! Traffic sources, per-user queues and the filtered statistics that the
//! schedulers read (average received rate, transmission frequency, HOL delay).

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficClass {
    Voip,
    Video,
    Be,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 3] = [TrafficClass::Voip, TrafficClass::Video, TrafficClass::Be];

    pub fn is_realtime(self) -> bool {
        matches!(self, TrafficClass::Voip | TrafficClass::Video)
    }

    pub fn name(self) -> &'static str {
        match self {
            TrafficClass::Voip => "voip",
            TrafficClass::Video => "video",
            TrafficClass::Be => "be",
        }
    }
}

impl std::fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// QoS parameters of a traffic class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub class: TrafficClass,
    /// Basic rate, bps.
    pub r0: f64,
    /// Maximum sustained rate, bps.
    pub r_max: f64,
    /// Delay bound, s.
    pub d_max: f64,
    /// Allowed probability of exceeding `d_max`.
    pub delta: f64,
    pub phi: f64,
    pub alpha: f64,
}

impl TrafficProfile {
    pub fn voip() -> Self {
        Self {
            class: TrafficClass::Voip,
            r0: 32_000.0,
            r_max: 32_000.0,
            d_max: 0.1,
            delta: 0.05,
            phi: 1.0,
            alpha: 0.98,
        }
    }

    pub fn video() -> Self {
        Self {
            class: TrafficClass::Video,
            r0: 128_000.0,
            r_max: 1_024_000.0,
            d_max: 0.4,
            delta: 0.05,
            phi: 1.0,
            alpha: 0.995,
        }
    }

    pub fn best_effort() -> Self {
        Self {
            class: TrafficClass::Be,
            r0: 0.0,
            r_max: f64::INFINITY,
            d_max: 2.0,
            delta: 0.05,
            phi: 1.0,
            alpha: 0.998,
        }
    }

    pub fn default_for(class: TrafficClass) -> Self {
        match class {
            TrafficClass::Voip => Self::voip(),
            TrafficClass::Video => Self::video(),
            TrafficClass::Be => Self::best_effort(),
        }
    }

    /// Delay weight `-log10(delta) / d_max`.
    pub fn delay_weight(&self) -> f64 {
        -self.delta.log10() / self.d_max
    }

    /// Highest elastic rate level, `floor(r_max / r0)`, at least 1.
    pub fn lambda_max(&self) -> u32 {
        if self.r0 > 0.0 && self.r_max.is_finite() {
            ((self.r_max / self.r0).floor() as u32).max(1)
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let name = self.class.name();
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return Err(format!("{name}: r0 must be finite and >= 0"));
        }
        if !(self.r_max >= self.r0) {
            return Err(format!("{name}: r_max must be >= r0"));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(format!("{name}: d_max must be > 0"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(format!("{name}: delta must be in (0, 1)"));
        }
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(format!("{name}: phi must be > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("{name}: alpha must be in (0, 1)"));
        }
        if self.class.is_realtime() && self.r0 <= 0.0 {
            return Err(format!("{name}: real-time classes need r0 > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub arrival_time: f64,
    pub size: u64,
    pub remaining: u64,
}

impl Packet {
    pub fn new(arrival_time: f64, size: u64) -> Self {
        Self {
            arrival_time,
            size,
            remaining: size,
        }
    }
}

/// FIFO plus the filtered per-user statistics.
#[derive(Debug, Clone)]
pub struct QueueState {
    fifo: VecDeque<Packet>,
    q_bits: u64,
    /// Average received rate `R`, bps.
    pub avg_rate: f64,
    /// Transmission frequency `omega` in [0, 1].
    pub omega: f64,
    pub alpha: f64,
    hol_history: VecDeque<f64>,
    hol_window: usize,
    last_service: f64,
}

impl QueueState {
    pub fn new(alpha: f64, initial_rate: f64, hol_window: usize) -> Self {
        Self {
            fifo: VecDeque::new(),
            q_bits: 0,
            avg_rate: initial_rate,
            omega: 1.0,
            alpha,
            hol_history: VecDeque::with_capacity(hol_window),
            hol_window: hol_window.max(1),
            last_service: 0.0,
        }
    }

    pub fn q_bits(&self) -> u64 {
        self.q_bits
    }

    pub fn is_empty(&self) -> bool {
        self.q_bits == 0
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.fifo.iter()
    }

    pub fn push(&mut self, packet: Packet) {
        self.q_bits += packet.remaining;
        self.fifo.push_back(packet);
    }

    pub fn extend(&mut self, packets: impl IntoIterator<Item = Packet>) {
        for p in packets {
            self.push(p);
        }
    }

    /// Age of the head-of-line packet at `now`; zero for an empty queue.
    pub fn hol_delay(&self, now: f64) -> f64 {
        self.fifo.front().map_or(0.0, |p| (now - p.arrival_time).max(0.0))
    }

    /// HOL surrogate for a saturated queue: time since the last positive
    /// service, capped at `cap`.
    pub fn time_since_service(&self, now: f64, cap: f64) -> f64 {
        (now - self.last_service).clamp(0.0, cap)
    }

    /// Drains `rate * frame_len` bits (floored to whole bits) head-first.
    /// Departing packets get delay `now - arrival_time`.
    pub fn serve(&mut self, rate: f64, frame_len: f64, now: f64) -> (Vec<Packet>, Vec<f64>) {
        let capacity = if rate > 0.0 {
            (rate * frame_len).floor() as u64
        } else {
            0
        };
        self.serve_bits(capacity, now)
    }

    pub fn serve_bits(&mut self, mut capacity: u64, now: f64) -> (Vec<Packet>, Vec<f64>) {
        let mut departed = Vec::new();
        let mut delays = Vec::new();
        if capacity > 0 && !self.fifo.is_empty() {
            self.last_service = now;
        }
        while capacity > 0 {
            let Some(head) = self.fifo.front_mut() else { break };
            let take = head.remaining.min(capacity);
            head.remaining -= take;
            capacity -= take;
            self.q_bits -= take;
            if head.remaining == 0 {
                let p = self.fifo.pop_front().expect("head exists");
                delays.push((now - p.arrival_time).max(0.0));
                departed.push(p);
            }
        }
        (departed, delays)
    }

    /// `R <- alpha R + (1 - alpha) r`.
    pub fn update_avg_rate(&mut self, served_rate: f64) -> f64 {
        self.avg_rate = self.alpha * self.avg_rate + (1.0 - self.alpha) * served_rate;
        self.avg_rate
    }

    /// `omega <- alpha omega + (1 - alpha) I(served)`.
    pub fn update_omega(&mut self, served: bool) -> f64 {
        self.omega = self.alpha * self.omega + (1.0 - self.alpha) * if served { 1.0 } else { 0.0 };
        self.omega
    }

    /// Records this frame's HOL delay into the sliding window.
    pub fn record_hol(&mut self, hol: f64) {
        if self.hol_history.len() == self.hol_window {
            self.hol_history.pop_front();
        }
        self.hol_history.push_back(hol);
    }

    pub fn mean_hol(&self) -> f64 {
        if self.hol_history.is_empty() {
            0.0
        } else {
            self.hol_history.iter().sum::<f64>() / self.hol_history.len() as f64
        }
    }

    /// Packets still queued, oldest first.
    pub fn drain_all(&mut self) -> Vec<Packet> {
        self.q_bits = 0;
        self.fifo.drain(..).collect()
    }
}

/// Truncated Pareto on `[min, max]` with the given shape, sampled by inverse
/// CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPareto {
    pub shape: f64,
    pub min: f64,
    pub max: f64,
}

impl TruncatedPareto {
    pub fn new(shape: f64, min: f64, max: f64) -> Result<Self, String> {
        if !(shape > 0.0 && min > 0.0 && max > min && max.is_finite()) {
            return Err(format!(
                "invalid truncated Pareto (shape {shape}, min {min}, max {max})"
            ));
        }
        Ok(Self { shape, min, max })
    }

    fn truncation(&self) -> f64 {
        1.0 - (self.min / self.max).powf(self.shape)
    }

    /// Inverse CDF at `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let x = self.min / (1.0 - u * self.truncation()).powf(1.0 / self.shape);
        x.min(self.max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn mean(&self) -> f64 {
        let a = self.shape;
        let norm = a * self.min.powf(a) / self.truncation();
        if (a - 1.0).abs() < 1e-12 {
            norm * (self.max / self.min).ln()
        } else {
            norm * (self.max.powf(1.0 - a) - self.min.powf(1.0 - a)) / (1.0 - a)
        }
    }
}

/// Video slice generator parameters. Sizes in bytes, interarrivals in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoParams {
    pub shape: f64,
    pub size_min: f64,
    pub size_max: f64,
    pub interarrival_min: f64,
    pub interarrival_max: f64,
    /// Mean rate at lambda = 1, bps.
    pub target_rate: f64,
}

impl Default for VideoParams {
    fn default() -> Self {
        Self {
            shape: 1.2,
            size_min: 150.0,
            size_max: 1875.0,
            interarrival_min: 2.5e-3,
            interarrival_max: 12.5e-3,
            target_rate: 128_000.0,
        }
    }
}

impl VideoParams {
    fn distributions(&self) -> Result<(TruncatedPareto, TruncatedPareto), String> {
        Ok((
            TruncatedPareto::new(self.shape, self.size_min * 8.0, self.size_max * 8.0)?,
            TruncatedPareto::new(self.shape, self.interarrival_min, self.interarrival_max)?,
        ))
    }

    /// Mean rate of the unscaled distributions, bps.
    pub fn nominal_rate(&self) -> Result<f64, String> {
        let (size, ia) = self.distributions()?;
        Ok(size.mean() / ia.mean())
    }

    /// Factor `c` such that sizes / c and interarrivals * c give `target_rate`.
    pub fn calibration(&self) -> Result<f64, String> {
        if !(self.target_rate > 0.0) {
            return Err("video target_rate must be > 0".into());
        }
        Ok((self.nominal_rate()? / self.target_rate).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoipParams {
    /// Packetization period, s.
    pub period: f64,
    pub packet_bits: u64,
}

impl Default for VoipParams {
    fn default() -> Self {
        Self {
            period: 20e-3,
            packet_bits: 640,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeParams {
    /// Finite file size in bits; a new file arrives whenever the previous one
    /// is fully delivered. `None` keeps the queue permanently backlogged.
    pub file_bits: Option<u64>,
    /// Backlog kept in the queue in full-buffer mode.
    pub backlog_bits: u64,
}

impl Default for BeParams {
    fn default() -> Self {
        Self {
            file_bits: None,
            backlog_bits: 1_000_000,
        }
    }
}

/// Packet source attached to one user.
#[derive(Debug, Clone)]
pub enum Source {
    Voip {
        period_frames: u64,
        packet_bits: u64,
        offset: u64,
    },
    Video {
        sizes: TruncatedPareto,
        interarrivals: TruncatedPareto,
        scale: f64,
        next_arrival: f64,
        rng: Box<ChaCha8Rng>,
    },
    FullBuffer {
        backlog_bits: u64,
    },
    File {
        file_bits: u64,
    },
}

impl Source {
    /// CBR voice with a phase offset drawn from `rng`.
    pub fn voip(params: &VoipParams, frame_len: f64, rng: &mut ChaCha8Rng) -> Self {
        let period_frames = ((params.period / frame_len).round() as u64).max(1);
        Source::Voip {
            period_frames,
            packet_bits: params.packet_bits,
            offset: rng.random_range(0..period_frames),
        }
    }

    pub fn video(params: &VideoParams, mut rng: ChaCha8Rng) -> Result<Self, String> {
        let (sizes, interarrivals) = params.distributions()?;
        let scale = params.calibration()?;
        let next_arrival = interarrivals.sample(&mut rng) * scale;
        Ok(Source::Video {
            sizes,
            interarrivals,
            scale,
            next_arrival,
            rng: Box::new(rng),
        })
    }

    pub fn best_effort(params: &BeParams) -> Self {
        match params.file_bits {
            Some(file_bits) => Source::File { file_bits },
            None => Source::FullBuffer {
                backlog_bits: params.backlog_bits,
            },
        }
    }

    /// Packets arriving up to the start of `frame` (time `now`). `lambda`
    /// scales video slice sizes only; interarrivals are unaffected.
    pub fn generate(&mut self, frame: u64, now: f64, lambda: u32, queue: &QueueState) -> Vec<Packet> {
        match self {
            Source::Voip {
                period_frames,
                packet_bits,
                offset,
            } => {
                if frame % *period_frames == *offset {
                    vec![Packet::new(now, *packet_bits)]
                } else {
                    Vec::new()
                }
            }
            Source::Video {
                sizes,
                interarrivals,
                scale,
                next_arrival,
                rng,
            } => {
                let mut out = Vec::new();
                while *next_arrival <= now {
                    let base = (sizes.sample(rng) / *scale).round().max(1.0) as u64;
                    out.push(Packet::new(*next_arrival, base * lambda.max(1) as u64));
                    *next_arrival += interarrivals.sample(rng) * *scale;
                }
                out
            }
            Source::FullBuffer { backlog_bits } => {
                let deficit = backlog_bits.saturating_sub(queue.q_bits());
                if deficit > 0 {
                    vec![Packet::new(now, deficit)]
                } else {
                    Vec::new()
                }
            }
            Source::File { file_bits } => {
                if queue.is_empty() {
                    vec![Packet::new(now, *file_bits)]
                } else {
                    Vec::new()
                }
            }
        }
    }
}

/// Threshold policy adapting an elastic video user's rate level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateController {
    /// Frames between updates.
    pub update_every: u64,
    /// Frames in the HOL averaging window.
    pub window: usize,
    pub raise_below: f64,
    pub lower_above: f64,
}

impl Default for RateController {
    fn default() -> Self {
        Self {
            update_every: 200,
            window: 400,
            raise_below: 0.125,
            lower_above: 0.25,
        }
    }
}

impl RateController {
    pub fn step(&self, lambda: u32, lambda_max: u32, mean_hol: f64, d_max: f64) -> u32 {
        if mean_hol < self.raise_below * d_max {
            (lambda + 1).min(lambda_max)
        } else if mean_hol > self.lower_above * d_max {
            lambda.saturating_sub(1).max(1)
        } else {
            lambda
        }
    }

    pub fn is_update_frame(&self, frame: u64) -> bool {
        frame > 0 && frame.is_multiple_of(self.update_every)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{substream, Purpose};
    use proptest::prelude::*;

    const T: f64 = 1e-3;

    #[test]
    fn table_two_delay_weights() {
        assert!((TrafficProfile::voip().delay_weight() - 13.0103).abs() < 1e-4);
        assert!((TrafficProfile::video().delay_weight() - 3.2526).abs() < 1e-4);
        assert!((TrafficProfile::best_effort().delay_weight() - 0.6505).abs() < 1e-4);
        assert_eq!(TrafficProfile::video().lambda_max(), 8);
        for c in TrafficClass::ALL {
            TrafficProfile::default_for(c).validate().unwrap();
        }
    }

    #[test]
    fn voip_is_cbr_32k() {
        let mut rng = substream(1, 0, Purpose::Traffic);
        let mut src = Source::voip(&VoipParams::default(), T, &mut rng);
        let q = QueueState::new(0.98, 32_000.0, 400);
        let mut packets = 0;
        let mut bits = 0;
        for f in 0..1000u64 {
            for p in src.generate(f, f as f64 * T, 1, &q) {
                packets += 1;
                bits += p.size;
            }
        }
        assert_eq!(packets, 50);
        assert_eq!(bits, 32_000);
    }

    fn video_rate(seed: u64, frames: u64, lambda: u32) -> (f64, Vec<(f64, u64)>) {
        let mut src = Source::video(&VideoParams::default(), substream(seed, 0, Purpose::Traffic)).unwrap();
        let q = QueueState::new(0.995, 128_000.0, 400);
        let mut bits = 0u64;
        let mut trace = Vec::new();
        for f in 0..frames {
            for p in src.generate(f, f as f64 * T, lambda, &q) {
                bits += p.size;
                if trace.len() < 2000 {
                    trace.push((p.arrival_time, p.size));
                }
            }
        }
        (bits as f64 / (frames as f64 * T), trace)
    }

    #[test]
    fn video_mean_rate_calibrated() {
        let (rate, _) = video_rate(42, 1_000_000, 1);
        assert!((121_600.0..=134_400.0).contains(&rate), "{rate}");
        // The analytic calibration lands on target exactly.
        let p = VideoParams::default();
        let c = p.calibration().unwrap();
        assert!((p.nominal_rate().unwrap() / (c * c) - 128_000.0).abs() < 1e-6);
    }

    #[test]
    fn video_lambda_scales_sizes_only() {
        let (_, one) = video_rate(9, 20_000, 1);
        let (_, two) = video_rate(9, 20_000, 2);
        assert_eq!(one.len(), two.len());
        for (a, b) in one.iter().zip(&two) {
            assert_eq!(a.0, b.0);
            assert_eq!(2 * a.1, b.1);
        }
    }

    #[test]
    fn truncated_pareto_mean_matches_quadrature() {
        let d = TruncatedPareto::new(1.2, 2.5, 12.5).unwrap();
        // Midpoint rule over the quantile function: E[X] = int_0^1 Q(u) du.
        let n = 200_000;
        let q: f64 = (0..n).map(|i| d.quantile((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!((q / d.mean() - 1.0).abs() < 1e-4, "{q} vs {}", d.mean());
        assert_eq!(d.quantile(0.0), 2.5);
        assert!(d.quantile(0.999_999_999) <= 12.5);
    }

    #[test]
    fn serve_examples() {
        let mut q = QueueState::new(0.98, 32_000.0, 400);
        q.push(Packet::new(0.010, 640));
        let (dep, delays) = q.serve(640_000.0, T, 0.013);
        assert_eq!(dep.len(), 1);
        assert!((delays[0] - 0.003).abs() < 1e-15);
        assert!(q.is_empty());

        q.push(Packet::new(0.0, 640));
        let (dep, _) = q.serve(320_000.0, T, 0.001);
        assert!(dep.is_empty());
        assert_eq!(q.q_bits(), 320);
        assert_eq!(q.packets().next().unwrap().remaining, 320);

        let mut empty = QueueState::new(0.98, 0.0, 400);
        let (dep, delays) = empty.serve(1e9, T, 1.0);
        assert!(dep.is_empty() && delays.is_empty());
    }

    #[test]
    fn ewma_examples() {
        let mut q = QueueState::new(0.98, 100_000.0, 400);
        assert!((q.update_avg_rate(200_000.0) - 102_000.0).abs() < 1e-9);

        let mut q = QueueState::new(0.98, 1000.0, 400);
        for t in 1..=50 {
            q.update_avg_rate(0.0);
            assert!((q.avg_rate - 1000.0 * 0.98f64.powi(t)).abs() < 1e-9);
        }
        let mut q = QueueState::new(0.98, 0.0, 400);
        for _ in 0..5000 {
            q.update_avg_rate(64_000.0);
        }
        assert!((q.avg_rate - 64_000.0).abs() < 1e-6);

        let mut q = QueueState::new(0.995, 0.0, 400);
        q.omega = 0.5;
        assert!((q.update_omega(true) - 0.5025).abs() < 1e-12);
        let mut q = QueueState::new(0.995, 0.0, 400);
        for t in 1..=100 {
            q.update_omega(false);
            assert!((q.omega - 0.995f64.powi(t)).abs() < 1e-12);
        }
        q.omega = 0.0;
        for _ in 0..20_000 {
            q.update_omega(true);
        }
        assert!((q.omega - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rate_controller_examples() {
        let rc = RateController::default();
        assert_eq!(rc.step(3, 8, 0.03, 0.4), 4);
        assert_eq!(rc.step(3, 8, 0.12, 0.4), 2);
        assert_eq!(rc.step(8, 8, 0.03, 0.4), 8);
        assert_eq!(rc.step(1, 8, 0.2, 0.4), 1);
        assert_eq!(rc.step(5, 8, 0.07, 0.4), 5);
        assert!(!rc.is_update_frame(0));
        assert!(rc.is_update_frame(400));
    }

    #[test]
    fn hol_window() {
        let mut q = QueueState::new(0.995, 0.0, 4);
        for h in [1.0, 2.0, 3.0, 4.0, 5.0] {
            q.record_hol(h);
        }
        assert_eq!(q.mean_hol(), 3.5);
        assert_eq!(q.hol_delay(10.0), 0.0);
        q.push(Packet::new(9.5, 10));
        assert_eq!(q.hol_delay(10.0), 0.5);
    }

    #[test]
    fn full_buffer_stays_backlogged() {
        let mut src = Source::best_effort(&BeParams::default());
        let mut q = QueueState::new(0.998, 100_000.0, 400);
        for f in 0..100u64 {
            let now = f as f64 * T;
            let arrivals = src.generate(f, now, 1, &q);
            q.extend(arrivals);
            assert_eq!(q.q_bits(), 1_000_000);
            q.serve(5e6, T, now + T);
        }
        assert!(q.time_since_service(0.2, 2.0) <= 0.101);
    }

    proptest! {
        #[test]
        fn queue_conserves_bits(ops in prop::collection::vec((0u64..3000, 0u64..4000), 1..200)) {
            let mut q = QueueState::new(0.98, 0.0, 400);
            let mut expected = 0u64;
            for (i, (arrive, serve)) in ops.into_iter().enumerate() {
                let now = i as f64 * T;
                if arrive > 0 {
                    q.push(Packet::new(now, arrive));
                }
                let before = q.q_bits();
                let (dep, delays) = q.serve_bits(serve, now + T);
                let served = before - q.q_bits();
                prop_assert!(served <= serve);
                expected = expected + arrive - served;
                prop_assert_eq!(q.q_bits(), expected);
                prop_assert_eq!(q.q_bits(), q.packets().map(|p| p.remaining).sum::<u64>());
                prop_assert!(delays.iter().all(|&d| d >= 0.0));
                prop_assert!(dep.windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
            }
        }

        #[test]
        fn filters_stay_bounded(served in prop::collection::vec(prop::option::of(0.0f64..2e6), 1..300)) {
            let mut q = QueueState::new(0.98, 0.0, 400);
            for s in served {
                q.update_omega(s.is_some());
                q.update_avg_rate(s.unwrap_or(0.0));
                prop_assert!((0.0..=1.0).contains(&q.omega));
                prop_assert!(q.avg_rate >= 0.0 && q.avg_rate <= 2e6);
            }
        }

        #[test]
        fn lambda_moves_by_at_most_one(lambda in 1u32..=8, hol in 0.0f64..1.0) {
            let next = RateController::default().step(lambda, 8, hol, 0.4);
            prop_assert!((next as i64 - lambda as i64).abs() <= 1);
            prop_assert!((1..=8).contains(&next));
        }
    }
}
