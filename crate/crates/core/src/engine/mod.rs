//! Simulation driver: configuration, the frame loop, metrics, sweeps and
//! CSV output.

pub mod config;
pub mod metrics;
pub mod output;
pub mod sim;
pub mod sweep;

pub use config::{ConfigError, Scheduler, SimConfig, SweepAxis, VideoMode};
pub use metrics::{percentile, MetricsReport, Ring};
pub use sim::{run, run_with_observer, EngineError, FrameView, Simulation};
pub use sweep::{sweep, SweepPoint};
