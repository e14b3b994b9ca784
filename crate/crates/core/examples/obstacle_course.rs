//! Runs a scenario file end to end (the two-obstacle course by default) and
//! prints the run metrics and navigation timing.
//!
//! cargo run --release --example obstacle_course [scenario.json] [seed]

use std::path::PathBuf;

use leash::cli_runner::{load_scenario, run_simulation, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/two_obstacle_course.json"));
    let seed = args.next().map(|s| s.parse()).transpose()?;
    let out = run_simulation(load_scenario(&path)?, RunOptions { seed, bench_nav: true }, None, false)?;
    let m = &out.metrics;
    println!("scenario          {}", m.scenario);
    println!("seed              {}", m.seed);
    println!("follow error rms  {:.3} m", m.follow_error_rms);
    println!("min clearance     {:.3} m", m.min_clearance);
    println!("collisions        {}", m.collision_count);
    println!("id switches       {}", m.id_switches);
    println!("first track       {:.2} s", m.time_to_first_track);
    println!("tracking fraction {:.3}", m.tracking_fraction);
    println!("aoa mean |error|  {:.2} deg", m.aoa_mean_abs_error);
    println!("final status      {}", m.final_status);
    if let Some(b) = out.bench {
        println!("nav cycle         median {:.3} ms, p95 {:.3} ms over {} cycles", b.median_ms, b.p95_ms, b.cycles);
    }
    Ok(())
}
