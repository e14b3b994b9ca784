//! Scenario-driven runs: load and validate a scenario, drive every stage on
//! the simulation clock, write metrics and replay logs, and optionally serve
//! the live steering endpoint.

mod aoa_trial;
mod metrics;
mod pipeline;
mod scenario;
mod server;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;

pub use aoa_trial::{run_aoa_trial, AoaTrialConfig, AoaTrialReport};
pub use metrics::{aoa_error_stats, aoa_max_error, compute_metrics, truth_clearance, AoaLogRow, RunLogs, RunMetrics};
pub use pipeline::{BenchReport, ExternalCommand, Pipeline, RunOptions, StageCounts, NAV_RATE};
pub use scenario::{load_scenario, AgentSpec, PathSpec, RobotSpec, Scenario, MAX_DURATION, SCHEMA_VERSION};
pub use server::{error_message, parse_client_message, Incoming, SteeringServer};

use crate::leader_tracker::{TrackerRecord, TrackerStatus};
use crate::world_sim::{fires, PHYSICS_RATE};

/// Version of the state/steer message schema.
pub const PROTOCOL_VERSION: u32 = 1;
pub const STATE_RATE: u32 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunnerError {
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("metrics error: {0}")]
    Metrics(String),
}

impl RunnerError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Invalid { .. } => 2,
            Self::Io(_) => 5,
            Self::Metrics(_) => 6,
        }
    }

    /// Single-line JSON failure record for stderr.
    pub fn failure_record(&self) -> String {
        let (kind, detail) = match self {
            Self::Parse { line, column, .. } => ("parse_error", json!({"line": line, "column": column})),
            Self::Invalid { field, .. } => ("invalid_scenario", json!({"field": field})),
            Self::Io(_) => ("io_error", json!({})),
            Self::Metrics(_) => ("metrics_error", json!({})),
        };
        json!({"failure": kind, "message": self.to_string(), "detail": detail}).to_string()
    }
}

impl From<std::io::Error> for RunnerError {
    fn from(e: std::io::Error) -> Self {
        RunnerError::Io(e.to_string())
    }
}

/// Exit code for a finished run and, when nonzero, its failure record.
pub fn run_verdict(m: &RunMetrics) -> (i32, Option<String>) {
    if m.collided() {
        let r = json!({"failure": "collision", "collision_count": m.collision_count, "min_clearance": m.min_clearance});
        return (3, Some(r.to_string()));
    }
    if m.final_status != TrackerStatus::Tracking {
        let r = json!({"failure": "not_tracking", "final_status": m.final_status});
        return (4, Some(r.to_string()));
    }
    (0, None)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub logs: RunLogs,
    pub bench: Option<BenchReport>,
    pub counts: StageCounts,
}

/// Runs a scenario to completion. With a server the steering queue is
/// drained every physics tick and state is broadcast at 10 Hz; `realtime`
/// paces ticks against the wall clock.
pub fn run_simulation(scenario: Scenario, options: RunOptions, server: Option<&SteeringServer>, realtime: bool) -> Result<RunOutcome, RunnerError> {
    let mut p = Pipeline::new(scenario, options)?;
    let started = Instant::now();
    let tick = Duration::from_secs_f64(1.0 / PHYSICS_RATE as f64);
    while !p.is_finished() {
        if let Some(s) = server {
            for (cmd, reply) in s.drain() {
                let result = cmd.and_then(|c| p.apply(c).map_err(|e| e.to_string()));
                if let Err(m) = result {
                    let _ = reply.send(error_message(&m));
                }
            }
        }
        let k = p.sim.tick();
        p.step();
        if let Some(s) = server {
            if fires(k, STATE_RATE) {
                s.broadcast(&p.state_message().to_string());
            }
        }
        if realtime {
            let due = tick * (k + 1) as u32;
            if let Some(wait) = due.checked_sub(started.elapsed()) {
                thread::sleep(wait);
            }
        }
    }
    Ok(RunOutcome { metrics: p.metrics()?, bench: p.bench_report(), counts: p.counts(), logs: p.logs().clone() })
}

/// Writes `truth.jsonl`, `tracker.csv`, `aoa.csv` and `nav.jsonl`.
pub fn write_logs(dir: &Path, logs: &RunLogs) -> Result<(), RunnerError> {
    fs::create_dir_all(dir)?;
    let mut truth = std::io::BufWriter::new(fs::File::create(dir.join("truth.jsonl"))?);
    for r in &logs.truth {
        let line = serde_json::to_string(r).map_err(|e| RunnerError::Io(e.to_string()))?;
        writeln!(truth, "{line}")?;
    }
    truth.flush()?;

    let mut tracker = String::from(TrackerRecord::CSV_HEADER);
    tracker.push('\n');
    for r in &logs.tracker {
        tracker.push_str(&r.csv_row());
        tracker.push('\n');
    }
    fs::write(dir.join("tracker.csv"), tracker)?;

    let mut aoa = String::from(AoaLogRow::CSV_HEADER);
    aoa.push('\n');
    for r in &logs.aoa {
        aoa.push_str(&r.csv_row());
        aoa.push('\n');
    }
    fs::write(dir.join("aoa.csv"), aoa)?;

    let mut nav = std::io::BufWriter::new(fs::File::create(dir.join("nav.jsonl"))?);
    for s in &logs.nav {
        let line = serde_json::to_string(s).map_err(|e| RunnerError::Io(e.to_string()))?;
        writeln!(nav, "{line}")?;
    }
    nav.flush()?;
    Ok(())
}

pub fn write_metrics(path: &Path, m: &RunMetrics) -> Result<(), RunnerError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, m.to_csv())?;
    Ok(())
}
