use leash::geometry::Pose2;
use leash::leader_tracker::{
    associate_leader_points, check_divergence, ekf_predict, ekf_update, reject_farthest, transition, AoaSample,
    AssociationConfig, EkfConfig, LeaderBelief, LeaderTracker, TrackerConfig, TrackerStatus,
};
use leash::world_sim::{simulate_lidar, stream_rng, Agent, LidarConfig, Stream, Wall, WorldModel};
use nalgebra::{Matrix4, Point2, Point3, Vector2, Vector4};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn belief(x: [f64; 4]) -> LeaderBelief {
    LeaderBelief::new(Vector2::new(x[0], x[1]), Vector2::new(x[2], x[3]), vec![], 0.0, &EkfConfig::default())
}

#[test]
fn predict_examples() {
    let cfg = EkfConfig::default();
    let b = ekf_predict(&belief([0.0, 0.0, 1.0, 0.0]), 0.1, &cfg).unwrap();
    assert!((b.state() - Vector4::new(0.1, 0.0, 1.0, 0.0)).norm() < 1e-15);
    assert!(ekf_predict(&b, 0.0, &cfg).is_err());
    let b2 = ekf_predict(&b, 0.1, &cfg).unwrap();
    assert!(b2.covariance.trace() >= b.covariance.trace());
}

#[test]
fn repeated_predicts_compose_to_the_closed_form_mean() {
    let cfg = EkfConfig::default();
    let start = belief([1.0, -2.0, 0.7, -0.3]);
    let mut b = start.clone();
    for _ in 0..10 {
        b = ekf_predict(&b, 0.1, &cfg).unwrap();
    }
    let closed = transition(1.0) * start.state();
    assert!((b.state() - closed).norm() < 1e-12);

    // without process noise the covariance composes too
    let quiet = EkfConfig { qp: 0.0, qv: 0.0, ..cfg };
    let mut c = start.clone();
    for _ in 0..10 {
        c = ekf_predict(&c, 0.1, &quiet).unwrap();
    }
    let f = transition(1.0);
    assert!((c.covariance - f * start.covariance * f.transpose()).norm() < 1e-12);
    // with it, the trace grows by at least the summed Q
    assert!(b.covariance.trace() > c.covariance.trace() + 2.0 * (0.01 + 0.5) - 1e-12);
}

/// Along x alone the filter is a textbook two-state (position, velocity)
/// Kalman filter with a scalar position measurement.
#[test]
fn one_axis_matches_hand_computed_kalman_gain() {
    let cfg = EkfConfig::default();
    let dt = 0.1;
    let b0 = belief([0.0, 0.0, 1.0, 0.0]);
    let (p0, v0) = (cfg.init_pos_std.powi(2), cfg.init_vel_std.powi(2));
    // predicted covariance by hand
    let pxx = p0 + v0 * dt * dt + cfg.qp * dt;
    let pxv = v0 * dt;
    let pvv = v0 + cfg.qv * dt;
    let r = cfg.sigma_m.powi(2);
    let (kx, kv) = (pxx / (pxx + r), pxv / (pxx + r));
    let z = 0.25;
    let x_pred = 0.1;
    let want_x = x_pred + kx * (z - x_pred);
    let want_v = 1.0 + kv * (z - x_pred);
    let want_pxx = (1.0 - kx) * pxx;
    let want_pvv = pvv - kv * pxv;

    let pred = ekf_predict(&b0, dt, &cfg).unwrap();
    let out = ekf_update(&pred, Vector2::new(z, 0.0), dt, &cfg).unwrap();
    assert!(out.accepted);
    let b = out.belief;
    assert!((b.position.x - want_x).abs() < 1e-9);
    assert!((b.velocity.x - want_v).abs() < 1e-9);
    assert!((b.covariance[(0, 0)] - want_pxx).abs() < 1e-9);
    assert!((b.covariance[(2, 2)] - want_pvv).abs() < 1e-9);
    // y is untouched by an x-only innovation
    assert!(b.position.y.abs() < 1e-15 && b.velocity.y.abs() < 1e-15);
}

#[test]
fn update_examples() {
    let cfg = EkfConfig::default();
    let b = belief([1.0, 2.0, 0.5, 0.0]);
    let same = ekf_update(&b, Vector2::new(1.0, 2.0), 0.1, &cfg).unwrap();
    assert_eq!(same.belief.state(), b.state());
    assert!(same.belief.covariance.trace() < b.covariance.trace());
    let far = ekf_update(&b, Vector2::new(11.0, 2.0), 0.1, &cfg).unwrap();
    assert!(!far.accepted);
    assert_eq!(far.belief, b);
    assert!(far.mahalanobis_sq > cfg.gate);
}

#[derive(Debug, Clone)]
enum Op {
    Predict(f64),
    Update(f64, f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0.001f64..0.5).prop_map(Op::Predict),
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| Op::Update(x, y)),
    ]
}

proptest! {
    #[test]
    fn covariance_stays_symmetric_psd(
        start in prop::array::uniform4(-2.0f64..2.0),
        ops in prop::collection::vec(op(), 1..60),
    ) {
        let cfg = EkfConfig::default();
        let mut b = belief(start);
        let mut t = 0.0;
        for o in ops {
            match o {
                Op::Predict(dt) => {
                    t += dt;
                    b = ekf_predict(&b, dt, &cfg).unwrap();
                }
                Op::Update(dx, dy) => {
                    b = ekf_update(&b, b.position + Vector2::new(dx, dy) * 0.1, t, &cfg).unwrap().belief;
                }
            }
            prop_assert!(b.covariance_is_valid(), "{}", b.covariance);
            prop_assert!(b.velocity.norm() <= cfg.max_speed + 1e-12);
        }
    }

    #[test]
    fn rejection_keeps_ceil_sixty_percent_nearest(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..80),
    ) {
        let points: Vec<Point3<f64>> = pts.iter().map(|(x, y)| Point3::new(*x, *y, 1.0)).collect();
        let kept = reject_farthest(&points, &Vector2::zeros(), 0.4);
        let want = (0.6 * points.len() as f64 - 1e-9).ceil() as usize;
        prop_assert_eq!(kept.len(), want);
        let worst_kept = kept.iter().map(|p| p.xy().coords.norm()).fold(0.0, f64::max);
        let dropped = points.iter().filter(|p| !kept.contains(p));
        for p in dropped {
            prop_assert!(p.xy().coords.norm() >= worst_kept);
        }
    }
}

#[test]
fn exact_cv_measurements_drive_error_to_zero() {
    let cfg = EkfConfig::default();
    let v = Vector2::new(0.8, -0.4);
    let truth = |t: f64| Vector2::new(1.0, 2.0) + v * t;
    // start off by 0.3 m and at rest
    let mut b = LeaderBelief::new(truth(0.0) + Vector2::new(0.3, 0.0), Vector2::zeros(), vec![], 0.0, &cfg);
    let mut errors = Vec::new();
    for k in 1..=60 {
        let t = k as f64 * 0.1;
        b = ekf_predict(&b, 0.1, &cfg).unwrap();
        b = ekf_update(&b, truth(t), t, &cfg).unwrap().belief;
        errors.push((b.position - truth(t)).norm());
    }
    // the error rings as the velocity settles, so compare block peaks
    let peaks: Vec<f64> = errors[10..].chunks(10).map(|c| c.iter().cloned().fold(0.0, f64::max)).collect();
    for w in peaks.windows(2) {
        assert!(w[1] < w[0], "{peaks:?}");
    }
    assert!(*errors.last().unwrap() < 1e-3, "{errors:?}");
}

fn leader_scan(world: &WorldModel, leader: Point2<f64>) -> Vec<Point3<f64>> {
    let cfg = LidarConfig { range_noise: 0.0, ..Default::default() };
    let a = Agent::scripted(1, leader, vec![], 1.0);
    let pose = Pose2::default();
    simulate_lidar::<ChaCha8Rng>(world, &[a.capsule()], &pose, &cfg, &cfg.ray_directions(), 0.0, None).to_world(&pose, cfg.mount_height)
}

fn seed_points(scan: &[Point3<f64>], leader: Point2<f64>) -> Vec<Point3<f64>> {
    scan.iter().filter(|p| (p.xy() - leader).norm() < 0.4 && p.z > 0.2).cloned().collect()
}

#[test]
fn static_leader_association_is_a_fixed_point() {
    let world = WorldModel::empty(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0));
    let leader = Point2::new(3.0, 0.5);
    let scan = leader_scan(&world, leader);
    let cfg = TrackerConfig::default();
    let pts = seed_points(&scan, leader);
    let c0 = leash::leader_tracker::centroid(&pts).unwrap();
    let mut tracker = LeaderTracker::new(cfg.clone());
    tracker.initialize(LeaderBelief::new(c0.xy().coords, Vector2::zeros(), pts, 0.0, &cfg.ekf));
    let mut rng: ChaCha8Rng = stream_rng(1, Stream::Ransac);
    let mut cs = Vec::new();
    for k in 1..=30 {
        let r = tracker.cycle(k as f64 * 0.1, &scan, None, &mut rng);
        assert!(r.measured);
        assert_eq!(r.status, TrackerStatus::Tracking);
        cs.push(leash::leader_tracker::centroid(&tracker.belief().unwrap().points).unwrap());
    }
    // the first cycle settles on the associated subset; after that nothing moves
    assert!((cs[0].xy() - c0.xy()).norm() < 0.05);
    for c in &cs {
        assert!((c.xy() - cs[0].xy()).norm() < 0.01, "drift {}", (c.xy() - cs[0].xy()).norm());
    }
    let b = tracker.belief().unwrap();
    assert!(b.velocity.norm() < 0.05);
}

#[test]
fn wall_points_never_survive_association() {
    let mut world = WorldModel::empty(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0));
    // wall plane y = 0.6, the leader's body surface 0.1 m from it
    world.walls.push(Wall { start: Point2::new(-5.0, 0.6), end: Point2::new(8.0, 0.6), height: 2.5 });
    let leader = Point2::new(3.0, 0.25);
    let scan = leader_scan(&world, leader);
    let pts = seed_points(&scan, leader);
    let on_wall = |p: &Point3<f64>| (p.y - 0.6).abs() < 0.02;
    assert!(scan.iter().filter(|p| on_wall(p)).count() > 500);
    let mut rng: ChaCha8Rng = stream_rng(3, Stream::Ransac);
    let matched = associate_leader_points(&pts, Vector2::zeros(), leader.coords, &scan, None, &AssociationConfig::default(), &mut rng);
    assert!(!matched.is_empty());
    assert!(matched.iter().all(|p| !on_wall(p)));
}

#[test]
fn coasting_extrapolates_then_times_out() {
    let cfg = TrackerConfig::default();
    let v = Vector2::new(1.0, 0.0);
    let pts = vec![Point3::new(2.0, 0.0, 1.0); 12];
    let mut tracker = LeaderTracker::new(cfg.clone());
    tracker.initialize(LeaderBelief::new(Vector2::new(2.0, 0.0), v, pts, 0.0, &cfg.ekf));
    let mut rng: ChaCha8Rng = stream_rng(1, Stream::Ransac);
    for k in 1..=10 {
        let r = tracker.cycle(k as f64 * 0.1, &[], None, &mut rng);
        assert_eq!(r.status, TrackerStatus::Coasting);
    }
    let err = (tracker.belief().unwrap().position - Vector2::new(3.0, 0.0)).norm();
    assert!(err < 1e-9, "{err}");
    for k in 11..=40 {
        tracker.cycle(k as f64 * 0.1, &[], None, &mut rng);
    }
    assert_eq!(tracker.status(), TrackerStatus::Diverged);
    assert!(tracker.belief().unwrap().covariance_is_valid());
}

#[test]
fn gated_measurement_coasts() {
    let cfg = TrackerConfig::default();
    let mut tracker = LeaderTracker::new(cfg.clone());
    let pts: Vec<Point3<f64>> = (0..20).map(|i| Point3::new(2.0 + 0.01 * i as f64, 0.0, 1.0)).collect();
    let mut b = LeaderBelief::new(Vector2::new(2.1, 0.0), Vector2::zeros(), pts.clone(), 0.0, &cfg.ekf);
    b.covariance = Matrix4::identity() * 1e-6;
    tracker.initialize(b);
    // the same cloud reappears 0.4 m away: inside the match radius, outside the gate
    let shifted: Vec<Point3<f64>> = pts.iter().map(|p| Point3::new(p.x, p.y + 0.4, p.z)).collect();
    let mut rng: ChaCha8Rng = stream_rng(1, Stream::Ransac);
    let r = tracker.cycle(0.1, &shifted, None, &mut rng);
    assert!(r.gated);
    assert_eq!(r.status, TrackerStatus::Coasting);
}

fn samples(f: impl Fn(f64) -> f64, until: f64) -> Vec<AoaSample> {
    (0..=(until * 5.0).round() as usize)
        .map(|k| {
            let t = k as f64 * 0.2;
            AoaSample { t, aoa: f(t).to_radians(), belief_bearing: 0.0, confident: true }
        })
        .collect()
}

#[test]
fn divergence_examples() {
    let th = 30f64.to_radians();
    assert!(!check_divergence(&samples(|t| 5.0 * (t * 3.0).sin(), 4.0), 4.0, 2.0, th));
    assert!(check_divergence(&samples(|_| 90.0, 2.0), 2.0, 2.0, th));
    assert!(!check_divergence(&samples(|t| if t < 1.0 { 90.0 } else { 2.0 }, 3.0), 3.0, 2.0, th));
    // low-confidence samples do not break a streak
    let mut s = samples(|_| 90.0, 2.4);
    s[5].aoa = 0.0;
    s[5].confident = false;
    assert!(check_divergence(&s, 2.4, 2.0, th));
}

#[test]
fn status_transitions_are_legal() {
    use TrackerStatus::*;
    let all = [Uninitialized, Tracking, Coasting, Diverged];
    let legal = [(Uninitialized, Tracking), (Tracking, Coasting), (Coasting, Tracking), (Uninitialized, Diverged), (Tracking, Diverged), (Coasting, Diverged), (Diverged, Uninitialized)];
    for a in all {
        for b in all {
            let want = a == b || legal.contains(&(a, b));
            assert_eq!(a.can_become(b), want, "{a} -> {b}");
        }
    }
}
