//! Three people stand around the robot; one carries the beacon. The
//! pipeline fuses AoA with camera detections and LiDAR until it confirms a
//! leader, then reports which person it locked on to.
//!
//! cargo run --release --example leader_selection [seed]

use leash::cli_runner::{Pipeline, RunOptions, Scenario};
use leash::leader_tracker::TrackerStatus;

const SCENARIO: &str = r#"{
  "schema_version": 1,
  "name": "selection",
  "duration": 10.0,
  "world": {"bounds": {"min": [-10.0, -10.0, 0.0], "max": [10.0, 10.0, 3.0]}},
  "agents": [
    {"id": 1, "start": [2.5, 0.8]},
    {"id": 2, "start": [1.2, -2.0], "leader": true},
    {"id": 3, "start": [-2.2, 1.5]}
  ],
  "robot": {"start": {"x": 0.0, "y": 0.0, "yaw": 0.0}}
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?;
    let mut p = Pipeline::new(Scenario::from_json_str(SCENARIO)?, RunOptions { seed, bench_nav: false })?;
    while !p.is_finished() && p.tracker().status() != TrackerStatus::Tracking {
        p.step();
    }
    let Some(b) = p.tracker().belief() else {
        println!("no leader confirmed after {:.1} s", p.time());
        return Ok(());
    };
    let nearest = p
        .sim
        .agents
        .iter()
        .min_by(|a, c| (a.position.coords - b.position).norm().total_cmp(&(c.position.coords - b.position).norm()))
        .unwrap();
    println!("tracking after {:.2} s at ({:.2}, {:.2})", p.time(), b.position.x, b.position.y);
    println!("nearest person: id {} (beacon carrier: {})", nearest.id, if nearest.carries_beacon { "yes" } else { "no" });
    Ok(())
}
