//! One navigation decision by hand: a goal attractor, a heading attractor
//! and a box repulsor are pulled back into SE(2) and resolved by
//! metric-weighted least squares.
//!
//! cargo run --release --example rmp_combination

use leash::geometry::{Aabb3, Pose2};
use leash::nav_rmp::{combine, goal_policy, obstacle_policy, position_to_se2, pullback_to_se2, yaw_policy, yaw_to_se2, GoalGains, RepulsorConfig, YawGains};
use leash::world_sim::BODY_RADIUS;
use nalgebra::{Point2, Point3, Vector2, Vector3};

fn main() {
    let pose = Pose2 { x: 0.0, y: 0.0, yaw: 0.0 };
    let v = Vector2::new(0.4, 0.0);
    let goal = Point2::new(3.0, 0.0);
    // a box half a metre to the left of the straight line to the goal
    let obstacle = Aabb3::new(Point3::new(1.0, 0.3, 0.0), Point3::new(1.6, 1.0, 1.0));

    let g = goal_policy(&Point2::new(pose.x, pose.y), &v, &goal, &GoalGains::default());
    let y = yaw_policy(&pose, 0.0, &goal, &YawGains::default());
    let o = obstacle_policy(&Point3::new(pose.x, pose.y, 0.5), &Vector3::new(v.x, v.y, 0.0), [&obstacle], BODY_RADIUS, &RepulsorConfig::static_default());

    let parts = [("goal", position_to_se2(&g)), ("yaw", yaw_to_se2(&y)), ("obstacle", pullback_to_se2(&o))];
    for (name, p) in &parts {
        println!("{name:<9} accel=[{:>7.3} {:>7.3} {:>7.3}]  metric trace={:.3}", p.accel.x, p.accel.y, p.accel.z, p.metric.trace());
    }
    let all: Vec<_> = parts.iter().map(|(_, p)| *p).collect();
    let r = combine(&all);
    println!("combined  accel=[{:>7.3} {:>7.3} {:>7.3}]", r.accel.x, r.accel.y, r.accel.z);
    let without = combine(&all[..2]);
    println!("no box    accel=[{:>7.3} {:>7.3} {:>7.3}]", without.accel.x, without.accel.y, without.accel.z);
}
