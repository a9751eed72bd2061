use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ofdma_dra::engine::config::SimConfig;
use ofdma_dra::engine::output::{write_summary, write_sweep, LambdaWriter, TraceWriter};
use ofdma_dra::engine::sweep::sweep_with_progress;
use ofdma_dra::engine::{MetricsReport, Scheduler, Simulation, SweepAxis, VideoMode};

#[derive(Parser)]
#[command(name = "ofdma-dra", version, about = "OFDMA downlink scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used for anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long, value_enum)]
    video_mode: Option<VideoMode>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scheduler: Option<Scheduler>,
        /// Also write per-frame allocations to trace.csv.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep one user count for both schedulers.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<SweepAxis>,
        /// Comma-separated user counts.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
        /// Comma-separated schedulers.
        #[arg(long, value_enum, value_delimiter = ',')]
        schedulers: Option<Vec<Scheduler>>,
    },
    /// Print the default configuration as TOML.
    Defaults,
}

fn load(common: &Common) -> Result<SimConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::load(path).map_err(|e| e.to_string())?,
        None => SimConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.system.seed = seed;
    }
    if let Some(frames) = common.frames {
        cfg.system.n_frames = frames;
        cfg.system.warmup_frames = cfg.system.warmup_frames.min(frames);
    }
    if let Some(mode) = common.video_mode {
        cfg.system.video_mode = mode;
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, String> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn degraded_check(report: &MetricsReport, limit: f64) -> Result<(), String> {
    let f = report.degraded_fraction();
    if f > limit {
        return Err(format!(
            "{} {}: {:.4} of PF solves degraded (limit {limit})",
            report.scenario, report.scheduler, f
        ));
    }
    Ok(())
}

fn run_one(common: Common, scheduler: Option<Scheduler>, trace: bool) -> Result<(), String> {
    let mut cfg = load(&common)?;
    if let Some(s) = scheduler {
        cfg.system.scheduler = s;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    fs::create_dir_all(&common.out).map_err(|e| format!("{}: {e}", common.out.display()))?;

    let mut tracer = if trace {
        Some(TraceWriter::new(create(&common.out, "trace.csv")?))
    } else {
        None
    };
    let mut lambdas = if cfg.system.video_mode == VideoMode::Elastic {
        Some(LambdaWriter::new(
            create(&common.out, "lambda.csv")?,
            cfg.system.lambda_trace_every,
        ))
    } else {
        None
    };

    let mut sim = Simulation::new(&cfg).map_err(|e| e.to_string())?;
    let mut io_error = None;
    while !sim.is_done() {
        sim.step(&mut |view| {
            if io_error.is_some() {
                return;
            }
            let r = tracer
                .as_mut()
                .map_or(Ok(()), |t| t.record(view))
                .and_then(|_| lambdas.as_mut().map_or(Ok(()), |l| l.record(view)));
            if let Err(e) = r {
                io_error = Some(e);
            }
        })
        .map_err(|e| e.to_string())?;
    }
    if let Some(e) = io_error {
        return Err(e.to_string());
    }
    if let Some(t) = tracer {
        t.finish().map_err(|e| e.to_string())?;
    }
    if let Some(l) = lambdas {
        l.finish().map_err(|e| e.to_string())?;
    }
    let report = sim.finish();
    write_summary(create(&common.out, "summary.csv")?, &[&report]).map_err(|e| e.to_string())?;
    eprintln!(
        "{} {}: data throughput {:.0} bps, logsum {:.3}",
        report.scenario, report.scheduler, report.data_throughput, report.logsum
    );
    degraded_check(&report, cfg.system.max_degraded_fraction)
}

fn run_sweep(
    common: Common,
    axis: Option<SweepAxis>,
    values: Option<Vec<usize>>,
    schedulers: Option<Vec<Scheduler>>,
) -> Result<(), String> {
    let mut cfg = load(&common)?;
    if let Some(a) = axis {
        cfg.sweep.axis = a;
    }
    if let Some(v) = values {
        cfg.sweep.values = v;
    }
    if let Some(s) = schedulers {
        cfg.sweep.schedulers = s;
    }
    if cfg.sweep.values.is_empty() || cfg.sweep.schedulers.is_empty() {
        return Err("sweep needs at least one value and one scheduler".into());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    fs::create_dir_all(&common.out).map_err(|e| format!("{}: {e}", common.out.display()))?;

    let points = sweep_with_progress(
        &cfg,
        cfg.sweep.axis,
        &cfg.sweep.values,
        &cfg.sweep.schedulers,
        |p| match &p.result {
            Ok(_) => eprintln!("{}={} {}: done", p.axis.name(), p.value, p.scheduler.name()),
            Err(e) => eprintln!("{}={} {}: {e}", p.axis.name(), p.value, p.scheduler.name()),
        },
    );
    write_sweep(create(&common.out, "sweep.csv")?, &points).map_err(|e| e.to_string())?;
    let reports: Vec<&MetricsReport> = points.iter().filter_map(|p| p.result.as_ref().ok()).collect();
    write_summary(create(&common.out, "summary.csv")?, &reports).map_err(|e| e.to_string())?;

    if let Some(p) = points.iter().find(|p| p.result.is_err()) {
        return Err(format!("{}={} {} failed", p.axis.name(), p.value, p.scheduler.name()));
    }
    for r in reports {
        degraded_check(r, cfg.system.max_degraded_fraction)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run {
            common,
            scheduler,
            trace,
        } => run_one(common, scheduler, trace),
        Command::Sweep {
            common,
            axis,
            values,
            schedulers,
        } => run_sweep(common, axis, values, schedulers),
        Command::Defaults => {
            print!("{}", SimConfig::default().to_toml());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
