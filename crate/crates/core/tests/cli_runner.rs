mod common;

use std::net::TcpStream;
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use leash::cli_runner::{
    compute_metrics, load_scenario, run_simulation, run_verdict, write_logs, AoaLogRow, RunLogs, RunOptions, RunnerError, Scenario,
    SteeringServer,
};
use leash::geometry::Pose2;
use leash::leader_tracker::{TrackerRecord, TrackerStatus};
use leash::nav_rmp::FollowConfig;
use leash::world_sim::{AgentTruth, TruthRecord, WorldModel};
use nalgebra::Point2;
use serde_json::{json, Value};
use tungstenite::{stream::MaybeTlsStream, Message, WebSocket};

fn minimal() -> Value {
    json!({
        "schema_version": 1,
        "duration": 10.0,
        "world": {"bounds": {"min": [-10.0, -10.0, 0.0], "max": [10.0, 10.0, 3.0]}},
        "agents": [{"id": 1, "start": [3.0, 0.0], "leader": true}],
        "robot": {"start": {"x": 0.0, "y": 0.0, "yaw": 0.0}}
    })
}

fn invalid_field(v: Value) -> String {
    match Scenario::from_json_str(&v.to_string()) {
        Err(RunnerError::Invalid { field, .. }) => field,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn scenario_loading() {
    let s = Scenario::from_json_str(&minimal().to_string()).unwrap();
    assert_eq!(s.sensors.lidar_rate, 10);
    assert_eq!(s.nav.follow.follow_distance, 1.5);

    let mut two = minimal();
    two["agents"] = json!([{"id": 1, "start": [3.0, 0.0], "leader": true}, {"id": 2, "start": [3.0, 2.0], "leader": true}]);
    let e = Scenario::from_json_str(&two.to_string()).unwrap_err();
    assert!(e.to_string().contains("exactly one leader"), "{e}");

    let mut outside = minimal();
    outside["agents"][0]["path"] = json!([[1.0, 1.0], [25.0, 0.0]]);
    assert_eq!(invalid_field(outside), "agents[0].path[1]");

    let mut unknown = minimal();
    unknown["robot"]["colour"] = json!("red");
    assert!(matches!(Scenario::from_json_str(&unknown.to_string()), Err(RunnerError::Parse { .. })));

    let e = Scenario::from_json_str("{\n  \"schema_version\": 1,\n  oops\n}").unwrap_err();
    match e {
        RunnerError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert_eq!(e.exit_code(), 2);
    assert!(matches!(load_scenario(std::path::Path::new("/nonexistent.json")), Err(RunnerError::Io(_))));
}

#[test]
fn bundled_scenarios_validate() {
    for name in ["minimal.json", "two_obstacle_course.json", "blocker.json", "interactive.json"] {
        common::scenario_file(name);
    }
}

fn truth(n: usize) -> Vec<TruthRecord> {
    (0..n)
        .map(|k| TruthRecord {
            t: k as f64 * 0.005,
            robot: Pose2::default(),
            agents: vec![AgentTruth { id: 1, x: 3.0, y: 0.0, vx: 0.0, vy: 0.0, heading: 0.0, leader: true }],
            beacon_bearing: 0.0,
        })
        .collect()
}

fn tracker_row(t: f64, status: TrackerStatus) -> TrackerRecord {
    TrackerRecord { t, px: 3.0, py: 0.0, vx: 0.0, vy: 0.0, trace_p: 0.1, status, n_points: 30 }
}

fn world() -> WorldModel {
    WorldModel::empty(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0))
}

#[test]
fn metrics_examples() {
    let f = FollowConfig::default();
    let aoa = |t: f64, deg: f64| AoaLogRow { t, azimuth: deg.to_radians(), confidence: 10.0, low_confidence: false, raw_azimuth: 0.0, truth: 0.0 };
    let logs = RunLogs { truth: truth(1000), aoa: vec![aoa(0.2, -3.0), aoa(0.4, 3.0)], ..Default::default() };
    let m = compute_metrics("x", 1, &world(), 0.35, &f, &logs).unwrap();
    assert!((m.aoa_mean_abs_error - 3.0).abs() < 1e-9);
    assert!((m.aoa_std_error - 3.0).abs() < 1e-9);

    // one DIVERGED episode of 2 s
    let mut rows = Vec::new();
    for k in 0..40 {
        let t = k as f64 * 0.1;
        let s = if (1.0..3.0).contains(&(t + 1e-9)) { TrackerStatus::Diverged } else { TrackerStatus::Tracking };
        rows.push(tracker_row(t, s));
    }
    let logs = RunLogs { truth: truth(1000), tracker: rows, ..Default::default() };
    let m = compute_metrics("x", 1, &world(), 0.35, &f, &logs).unwrap();
    assert_eq!(m.id_switches, 1);
    assert!((m.recovery_time_mean - 2.0).abs() < 1e-9);
    assert_eq!(m.unrecovered, 0);

    assert!(matches!(compute_metrics("x", 1, &world(), 0.35, &f, &RunLogs::default()), Err(RunnerError::Metrics(_))));
    // a row between truth ticks is misaligned
    let logs = RunLogs { truth: truth(100), tracker: vec![tracker_row(0.0123, TrackerStatus::Tracking)], ..Default::default() };
    assert!(compute_metrics("x", 1, &world(), 0.35, &f, &logs).is_err());
}

#[test]
fn clearance_and_collisions_agree() {
    // robot placed against the leader's body
    let mut t = truth(10);
    for r in &mut t[3..6] {
        r.robot = Pose2::new(2.5, 0.0, 0.0);
    }
    let logs = RunLogs { truth: t, ..Default::default() };
    let m = compute_metrics("x", 1, &world(), 0.35, &FollowConfig::default(), &logs).unwrap();
    assert_eq!(m.collision_count, 1);
    assert!(m.min_clearance <= 0.0);
    assert_eq!(run_verdict(&m).0, 3);
}

#[test]
fn minimal_run_rates_verdict_and_convergence() {
    let s = common::scenario_file("minimal.json");
    let out = run_simulation(s, RunOptions::default(), None, false).unwrap();
    let c = out.counts;
    assert_eq!(c.physics, 2000);
    assert_eq!(c.nav, 500);
    assert_eq!(c.cameras, 150);
    assert_eq!(c.lidar, 100);
    assert_eq!(c.aoa, 50);
    assert!(c.tracker <= c.lidar && c.tracker + 15 >= c.lidar, "{c:?}");
    let m = &out.metrics;
    assert_eq!(m.collision_count, 0);
    assert!(m.min_clearance > 0.0);
    assert_eq!(run_verdict(m), (0, None));
    assert_eq!(m.final_status, TrackerStatus::Tracking);

    // after settling the robot holds the set-point
    let late: Vec<f64> = out
        .logs
        .nav
        .iter()
        .filter(|n| n.t >= 5.0)
        .map(|n| {
            let r = &out.logs.truth[(n.t / 0.005).round() as usize];
            let leader = r.agents.iter().find(|a| a.leader).unwrap();
            (r.robot.position() - Point2::new(leader.x - 1.5, leader.y)).norm()
        })
        .collect();
    let rms = (late.iter().map(|e| e * e).sum::<f64>() / late.len() as f64).sqrt();
    assert!(rms < 0.3, "converged follow error {rms}");
}

fn read_dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn same_seed_gives_identical_bytes() {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let out = run_simulation(common::scenario_file("minimal.json"), RunOptions { seed: Some(5), bench_nav: false }, None, false).unwrap();
        write_logs(dir.path(), &out.logs).unwrap();
        runs.push((out.metrics.to_csv(), read_dir_bytes(dir.path())));
    }
    assert_eq!(runs[0], runs[1]);
    let other = run_simulation(common::scenario_file("minimal.json"), RunOptions { seed: Some(6), bench_nav: false }, None, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_logs(dir.path(), &other.logs).unwrap();
    assert_ne!(read_dir_bytes(dir.path()), runs[0].1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_leash");
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    let mut short = minimal();
    short["duration"] = json!(4.0);
    std::fs::write(&scen, short.to_string()).unwrap();
    let metrics = dir.path().join("m.csv");
    let logs = dir.path().join("logs");
    let out = Command::new(bin)
        .args(["run", scen.to_str().unwrap(), "--seed", "3", "--metrics", metrics.to_str().unwrap(), "--logs", logs.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&metrics).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("scenario,seed,"));
    for f in ["truth.jsonl", "tracker.csv", "aoa.csv", "nav.jsonl"] {
        assert!(logs.join(f).exists(), "{f}");
    }

    let mut bad = minimal();
    bad["agents"][0]["leader"] = json!(false);
    std::fs::write(&scen, bad.to_string()).unwrap();
    let out = Command::new(bin).args(["run", scen.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    let record: Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(record["failure"], "invalid_scenario");

    // leader out of sensor reach behind a wall: never tracked
    let mut lost = minimal();
    lost["duration"] = json!(2.0);
    lost["world"]["walls"] = json!([{"start": [1.5, -5.0], "end": [1.5, 5.0], "height": 2.5}]);
    std::fs::write(&scen, lost.to_string()).unwrap();
    let out = Command::new(bin).args(["run", scen.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

type Client = WebSocket<MaybeTlsStream<TcpStream>>;

fn next_state(ws: &mut Client) -> Value {
    loop {
        if let Message::Text(t) = ws.read().expect("state stream") {
            let v: Value = serde_json::from_str(t.as_str()).unwrap();
            if v["type"] == "state" {
                return v;
            }
        }
    }
}

fn leader_velocity(state: &Value) -> (f64, f64) {
    let a = state["agents"].as_array().unwrap().iter().find(|a| a["leader"] == true).unwrap();
    (a["vx"].as_f64().unwrap(), a["vy"].as_f64().unwrap())
}

#[test]
fn steering_round_trip_over_websocket() {
    let mut s = common::scenario_file("interactive.json");
    s.duration = 8.0;
    let server = SteeringServer::bind("127.0.0.1:0").unwrap();
    let url = format!("ws://{}", server.local_addr());
    let (mut ws, _) = tungstenite::connect(url.as_str()).unwrap();
    // wait until the server has registered the client before the clock starts
    let t0 = Instant::now();
    while server.client_count() == 0 && t0.elapsed() < Duration::from_secs(2) {
        thread::sleep(Duration::from_millis(5));
    }
    let sim = thread::spawn(move || run_simulation(s, RunOptions::default(), Some(&server), true).map(|o| o.metrics));

    let first = next_state(&mut ws);
    assert_eq!(first["version"], 1);
    for key in ["t", "robot", "agents", "goal", "cubes", "policy_arrows", "aoa", "tracker"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    ws.send(Message::text(json!({"type": "steer", "vx": 1.0, "vy": -0.5}).to_string())).unwrap();
    let sent = Instant::now();
    let mut reflected = None;
    while sent.elapsed() < Duration::from_secs(1) {
        let st = next_state(&mut ws);
        let (vx, vy) = leader_velocity(&st);
        if (vx - 1.0).abs() < 1e-9 && (vy + 0.5).abs() < 1e-9 {
            reflected = Some(sent.elapsed());
            break;
        }
    }
    let lag = reflected.expect("steer never reflected");
    assert!(lag <= Duration::from_millis(200), "{lag:?}");

    ws.send(Message::text(r#"{"type":"steer","vx":"fast"}"#)).unwrap();
    let mut saw_error = false;
    let start = Instant::now();
    let mut count = 0;
    while start.elapsed() < Duration::from_secs(4) {
        if let Message::Text(t) = ws.read().unwrap() {
            let v: Value = serde_json::from_str(t.as_str()).unwrap();
            match v["type"].as_str() {
                Some("state") => count += 1,
                Some("error") => saw_error = true,
                _ => {}
            }
        }
    }
    let rate = count as f64 / start.elapsed().as_secs_f64();
    assert!(saw_error);
    assert!(rate >= 9.0, "{rate} Hz");
    ws.send(Message::text(json!({"type": "steer", "vx": 0.0, "vy": 0.0}).to_string())).unwrap();
    drop(ws);
    sim.join().unwrap().unwrap();
}
