//! Serves the interactive scenario in real time over a WebSocket. Connect a
//! client to ws://localhost:PORT, read `state` messages, and send
//! `{"type":"steer","vx":0.5,"vy":0.0}` to walk the leader.
//!
//! cargo run --release --example steering_server [port]

use leash::cli_runner::{load_scenario, run_simulation, RunOptions, SteeringServer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let port: u16 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8765);
    let server = SteeringServer::bind(&format!("127.0.0.1:{port}"))?;
    println!("listening on ws://{}", server.local_addr());
    let scenario = load_scenario(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/interactive.json"))?;
    let out = run_simulation(scenario, RunOptions::default(), Some(&server), true)?;
    println!("done: follow error rms {:.3} m, collisions {}", out.metrics.follow_error_rms, out.metrics.collision_count);
    Ok(())
}
