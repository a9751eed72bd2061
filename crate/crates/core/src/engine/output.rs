//! CSV writers for run summaries, per-frame traces and video rate levels.

use std::io::Write;

use serde::Serialize;

use super::metrics::MetricsReport;
use super::sim::FrameView;
use super::sweep::SweepPoint;

/// Seconds to milliseconds, rounded to the nanosecond so that frame-grid
/// delays print cleanly.
fn to_ms(s: f64) -> f64 {
    (s * 1e6).round() / 1e3
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    scenario: &'a str,
    scheduler: &'a str,
    class: &'a str,
    ring_km: String,
    delay_p95_ms: Option<f64>,
    violation_rate: Option<f64>,
    throughput_bps: f64,
    logsum: f64,
}

/// One row per (class, ring) group; `logsum` repeats the run-level value.
pub fn write_summary<W: Write>(out: W, reports: &[&MetricsReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for g in &r.groups {
            w.serialize(SummaryRow {
                scenario: &r.scenario,
                scheduler: &r.scheduler,
                class: g.class.name(),
                ring_km: g.ring.to_string(),
                delay_p95_ms: g.delay_p95.map(to_ms),
                violation_rate: g.violation_rate,
                throughput_bps: g.throughput,
                logsum: r.logsum,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow<'a> {
    frame: u64,
    user: usize,
    class: &'a str,
    p: f64,
    w_subchannels: u32,
    mcs_index: usize,
    served_rate: f64,
    q_bits: u64,
    hol_ms: f64,
}

/// Per-frame allocation rows, one per granted user.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(out),
        }
    }

    pub fn record(&mut self, view: &FrameView) -> csv::Result<()> {
        for g in &view.allocation.grants {
            let u = &view.users[g.user];
            self.inner.serialize(TraceRow {
                frame: view.frame,
                user: g.user,
                class: u.class.name(),
                p: g.power,
                w_subchannels: g.subchannels,
                mcs_index: g.mcs,
                served_rate: g.rate,
                q_bits: u.q_bits,
                hol_ms: to_ms(u.hol),
            })?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> csv::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct LambdaRow {
    frame: u64,
    user: usize,
    lambda: u32,
    q_bits: u64,
}

/// Video rate level and queue size every `every` frames, for elastic video users.
pub struct LambdaWriter<W: Write> {
    inner: csv::Writer<W>,
    every: u64,
}

impl<W: Write> LambdaWriter<W> {
    pub fn new(out: W, every: u64) -> Self {
        Self {
            inner: csv::Writer::from_writer(out),
            every: every.max(1),
        }
    }

    pub fn record(&mut self, view: &FrameView) -> csv::Result<()> {
        if !view.frame.is_multiple_of(self.every) {
            return Ok(());
        }
        for u in view.users.iter().filter(|u| u.elastic && u.is_realtime()) {
            self.inner.serialize(LambdaRow {
                frame: view.frame,
                user: u.id,
                lambda: view.lambdas[u.id],
                q_bits: view.q_after[u.id],
            })?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> csv::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct SweepRow<'a> {
    axis: &'a str,
    value: usize,
    scheduler: &'a str,
    status: &'a str,
    voice_p95_ms: Option<f64>,
    voice_p95_bad_ms: Option<f64>,
    video_p95_ms: Option<f64>,
    video_p95_bad_ms: Option<f64>,
    rt_p95_ms: Option<f64>,
    data_throughput_bps: Option<f64>,
    logsum: Option<f64>,
    degraded_fraction: Option<f64>,
}

pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> csv::Result<()> {
    use super::metrics::Ring;
    use crate::traffic::TrafficClass;
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        let r = p.result.as_ref().ok();
        let bad = p.bad_ring_m;
        let ms = |d: Option<f64>| d.map(to_ms);
        w.serialize(SweepRow {
            axis: p.axis.name(),
            value: p.value,
            scheduler: p.scheduler.name(),
            status: match &p.result {
                Ok(_) => "ok",
                Err(_) => "error",
            },
            voice_p95_ms: ms(r.and_then(|r| r.delay_p95(TrafficClass::Voip, Ring::All))),
            voice_p95_bad_ms: ms(r.and_then(|r| r.delay_p95(TrafficClass::Voip, Ring::At(bad)))),
            video_p95_ms: ms(r.and_then(|r| r.delay_p95(TrafficClass::Video, Ring::All))),
            video_p95_bad_ms: ms(r.and_then(|r| r.delay_p95(TrafficClass::Video, Ring::At(bad)))),
            rt_p95_ms: ms(r.and_then(|r| r.rt_delay_p95)),
            data_throughput_bps: r.map(|r| r.data_throughput),
            logsum: r.map(|r| r.logsum),
            degraded_fraction: r.map(|r| r.degraded_fraction()),
        })?;
    }
    w.flush()?;
    Ok(())
}
