//! A leader walking at constant velocity disappears from the scan for one
//! second. The tracker coasts on its constant-velocity prediction and picks
//! the leader back up when points return.
//!
//! cargo run --release --example ekf_coasting

use std::f64::consts::PI;

use leash::leader_tracker::{LeaderBelief, LeaderTracker, TrackerConfig};
use leash::world_sim::{stream_rng, Stream};
use nalgebra::{Point3, Vector2};
use rand_chacha::ChaCha8Rng;

fn body(c: Vector2<f64>) -> Vec<Point3<f64>> {
    // a front arc of returns at three heights, as a LiDAR sees a torso
    (0..36)
        .map(|i| {
            let a = PI / 2.0 + (i % 12) as f64 * PI / 11.0;
            Point3::new(c.x + 0.2 * a.cos(), c.y + 0.2 * a.sin(), 0.5 + 0.4 * (i / 12) as f64)
        })
        .collect()
}

fn main() {
    let cfg = TrackerConfig::default();
    let v = Vector2::new(0.8, 0.3);
    let truth = |t: f64| Vector2::new(2.0, -1.0) + v * t;
    let mut tracker = LeaderTracker::new(cfg.clone());
    tracker.initialize(LeaderBelief::new(truth(0.0), v, body(truth(0.0)), 0.0, &cfg.ekf));
    let mut rng: ChaCha8Rng = stream_rng(1, Stream::Ransac);

    println!("{:>5} {:>10} {:>7} {:>9} {:>10}", "t", "status", "points", "error m", "pos std m");
    for k in 1..=50 {
        let t = k as f64 * 0.1;
        let dropout = (3.0..4.0).contains(&t);
        let scan = if dropout { Vec::new() } else { body(truth(t)) };
        let r = tracker.cycle(t, &scan, None, &mut rng);
        let b = tracker.belief().unwrap();
        let std = (b.covariance[(0, 0)] + b.covariance[(1, 1)]).sqrt();
        if k % 5 == 0 || dropout {
            println!("{t:>5.1} {:>10} {:>7} {:>9.3} {std:>10.3}", r.status.to_string(), r.n_points, (b.position - truth(t)).norm());
        }
    }
}
