use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use leash::cli_runner::{load_scenario, run_simulation, run_verdict, write_logs, write_metrics, RunOptions, RunnerError, SteeringServer};

#[derive(Parser)]
#[command(name = "leash", version, about = "Simulated obstacle-avoidant leader following")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Metrics CSV output.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Directory for the replay logs.
        #[arg(long)]
        logs: Option<PathBuf>,
        /// Serve the steering WebSocket on this port.
        #[arg(long)]
        serve: Option<u16>,
        /// Pace the simulation at wall-clock speed.
        #[arg(long)]
        realtime: bool,
        /// Time the navigation cycle.
        #[arg(long)]
        bench_nav: bool,
    },
}

fn fail(e: RunnerError) -> ExitCode {
    eprintln!("{}", e.failure_record());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run { scenario, seed, metrics, logs, serve, realtime, bench_nav } = Cli::parse().command;
    let scenario = match load_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let server = match serve.map(|port| SteeringServer::bind(&format!("0.0.0.0:{port}"))).transpose() {
        Ok(s) => s,
        Err(e) => return fail(e.into()),
    };
    let outcome = match run_simulation(scenario, RunOptions { seed, bench_nav }, server.as_ref(), realtime) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    if let Some(path) = &metrics {
        if let Err(e) = write_metrics(path, &outcome.metrics) {
            return fail(e);
        }
    }
    if let Some(dir) = &logs {
        if let Err(e) = write_logs(dir, &outcome.logs) {
            return fail(e);
        }
    }
    let m = &outcome.metrics;
    println!(
        "{}: follow_error_rms={:.3} m, min_clearance={:.3} m, collisions={}, id_switches={}, aoa_mean_abs={:.2} deg, final={}",
        m.scenario, m.follow_error_rms, m.min_clearance, m.collision_count, m.id_switches, m.aoa_mean_abs_error, m.final_status
    );
    if let Some(b) = outcome.bench {
        println!("nav cycle over {} cycles: median={:.3} ms, p95={:.3} ms, max={:.3} ms", b.cycles, b.median_ms, b.p95_ms, b.max_ms);
    }
    let (code, reason) = run_verdict(m);
    if let Some(r) = reason {
        eprintln!("{r}");
    }
    ExitCode::from(code as u8)
}
