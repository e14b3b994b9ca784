#![allow(dead_code)]

use leash::cli_runner::{Pipeline, RunOptions, Scenario};
use leash::leader_tracker::TrackerStatus;
use serde_json::{json, Value};

pub fn scenario(v: Value) -> Scenario {
    Scenario::from_json_str(&v.to_string()).expect("test scenario")
}

pub fn scenario_file(name: &str) -> Scenario {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    leash::cli_runner::load_scenario(&path).expect("bundled scenario")
}

/// Standing people around a robot at the origin; `leader` carries the beacon.
pub fn selection_scenario(people: &[[f64; 2]], leader: usize, snr_db: f64, seed: u64) -> Scenario {
    let agents: Vec<Value> = people
        .iter()
        .enumerate()
        .map(|(i, p)| json!({"id": i as u32 + 1, "start": p, "leader": i == leader}))
        .collect();
    scenario(json!({
        "schema_version": 1,
        "name": "selection",
        "duration": 8.0,
        "seed": seed,
        "world": {"bounds": {"min": [-10.0, -10.0, 0.0], "max": [10.0, 10.0, 3.0]}},
        "agents": agents,
        "robot": {"start": {"x": 0.0, "y": 0.0, "yaw": 0.0}},
        "sensors": {"beacon": {"snr_db": snr_db}}
    }))
}

/// Steps until the tracker is TRACKING or `max_t` passes.
pub fn run_until_tracking(p: &mut Pipeline, max_t: f64) -> bool {
    while p.time() < max_t && !p.is_finished() {
        p.step();
        if p.tracker().status() == TrackerStatus::Tracking {
            return true;
        }
    }
    false
}

/// Truth id of the agent nearest the tracker belief.
pub fn tracked_agent(p: &Pipeline) -> Option<u32> {
    let b = p.tracker().belief()?;
    p.sim
        .agents
        .iter()
        .min_by(|a, c| {
            let da = (a.position.coords - b.position).norm();
            let dc = (c.position.coords - b.position).norm();
            da.total_cmp(&dc)
        })
        .map(|a| a.id)
}

pub fn pipeline(s: Scenario) -> Pipeline {
    Pipeline::new(s, RunOptions::default()).expect("pipeline")
}

use leash::geometry::Aabb3;
use leash::nav_rmp::{HierarchicalOccupancy, OccupancyConfig, PolicyOutput};
use nalgebra::{DMatrix, DVector, Matrix3, Point3, SymmetricEigen, Vector3};
use rand::Rng;

/// Random PSD policies; some metrics are rank deficient.
pub fn random_policies<R: Rng>(rng: &mut R, n: usize) -> Vec<PolicyOutput<3>> {
    (0..n)
        .map(|_| {
            let rank = rng.random_range(1..=3);
            let mut m = Matrix3::zeros();
            for _ in 0..rank {
                let b = Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                m += b * b.transpose();
            }
            let a = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            PolicyOutput::new(a, m)
        })
        .collect()
}

/// argmin Σ (a − aᵢ)ᵀ Aᵢ (a − aᵢ) as a stacked least-squares problem
/// `‖Lᵢᵀ(a − aᵢ)‖²` with `Aᵢ = Lᵢ Lᵢᵀ`, solved by SVD (minimum norm).
pub fn least_squares_combination(policies: &[PolicyOutput<3>]) -> Vector3<f64> {
    let mut rows: Vec<f64> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for p in policies {
        let eig = SymmetricEigen::new(p.metric);
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let row = eig.eigenvectors.column(i) * l.sqrt();
            rows.extend(row.iter());
            rhs.push(row.dot(&p.accel));
        }
    }
    if rhs.is_empty() {
        return Vector3::zeros();
    }
    let a = DMatrix::from_row_slice(rhs.len(), 3, &rows);
    let b = DVector::from_vec(rhs);
    let x = a.svd(true, true).solve(&b, 1e-7).expect("svd solve");
    Vector3::new(x[0], x[1], x[2])
}

pub fn test_map() -> HierarchicalOccupancy {
    HierarchicalOccupancy::new(&Aabb3::new(Point3::new(-8.0, -8.0, 0.0), Point3::new(8.0, 8.0, 2.4)), OccupancyConfig::default())
}

/// Random occupied leaves: a few blobs plus scattered singles.
pub fn random_map<R: Rng>(rng: &mut R) -> HierarchicalOccupancy {
    let mut m = test_map();
    for _ in 0..rng.random_range(0..6) {
        let c = Point3::new(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0), rng.random_range(0.2..2.0));
        let half = Vector3::new(rng.random_range(0.05..0.8), rng.random_range(0.05..0.8), rng.random_range(0.05..0.6));
        let steps = |h: f64| (h / 0.1).ceil() as i32;
        for ix in -steps(half.x)..=steps(half.x) {
            for iy in -steps(half.y)..=steps(half.y) {
                for iz in -steps(half.z)..=steps(half.z) {
                    m.set_leaf(&(c + Vector3::new(ix as f64, iy as f64, iz as f64) * 0.1), 2.0);
                }
            }
        }
    }
    for _ in 0..rng.random_range(0..40) {
        let p = Point3::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0), rng.random_range(0.0..2.4));
        m.set_leaf(&p, 1.0);
    }
    m
}

/// Problems with a cube query measured against every occupied leaf:
/// uncovered leaves in radius, cubes without any occupied leaf, and cubes
/// coarser than their distance band allows.
pub fn cube_query_violations(map: &HierarchicalOccupancy, center: &Point3<f64>, radius: f64) -> Vec<String> {
    let cubes = map.query_obstacle_cubes(center, radius);
    let leaves = map.occupied_leaves();
    let mut out = Vec::new();
    let contains = |b: &Aabb3, p: &Point3<f64>| (0..3).all(|k| p[k] >= b.min[k] - 1e-9 && p[k] <= b.max[k] + 1e-9);
    for leaf in leaves.iter().filter(|l| l.distance(center) <= radius) {
        let c = leaf.center();
        if !cubes.iter().any(|q| contains(&q.aabb(), &c)) {
            out.push(format!("leaf at {c} not covered"));
        }
    }
    for q in &cubes {
        let b = q.aabb();
        if !leaves.iter().any(|l| contains(&b, &l.center())) {
            out.push(format!("cube at {} holds no occupied leaf", q.center));
        }
        let allowed = map.config().leaf_size * 2f64.powi(map.config().band(b.distance(center)) as i32);
        if q.side > allowed + 1e-9 {
            out.push(format!("cube at {} side {} exceeds {}", q.center, q.side, allowed));
        }
        let k = (q.side / map.config().leaf_size).log2();
        if (k - k.round()).abs() > 1e-9 {
            out.push(format!("cube side {} is not leaf·2^k", q.side));
        }
    }
    out
}
