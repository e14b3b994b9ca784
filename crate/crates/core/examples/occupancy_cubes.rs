//! Fills a hierarchical occupancy map from one synthetic scan and lists the
//! obstacle cubes returned around the robot: fine cubes nearby, coarser
//! ones further out.
//!
//! cargo run --release --example occupancy_cubes

use leash::geometry::Aabb3;
use leash::nav_rmp::{HierarchicalOccupancy, OccupancyConfig};
use nalgebra::{Point3, Vector3};

fn main() {
    let bounds = Aabb3::new(Point3::new(-8.0, -8.0, 0.0), Point3::new(8.0, 8.0, 2.4));
    let mut map = HierarchicalOccupancy::new(&bounds, OccupancyConfig::default());
    let sensor = Point3::new(0.0, 0.0, 0.4);

    // returns from a wall segment 0.8 m ahead and another 4 m to the left
    let mut hits = Vec::new();
    for i in 0..30 {
        for k in 0..8 {
            let z = 0.2 + k as f64 * 0.2;
            hits.push(Point3::new(0.8, -1.5 + i as f64 * 0.1, z));
            hits.push(Point3::new(-1.5 + i as f64 * 0.1, 4.0, z));
        }
    }
    for _ in 0..3 {
        map.insert_scan(&hits, &[Vector3::new(-1.0, 0.0, 0.0)], &sensor, &[]);
    }
    println!("levels={} occupied leaves={} max-pool consistent={}", map.level_count(), map.occupied_leaves().len(), map.max_pool_consistent());

    let cubes = map.query_obstacle_cubes(&sensor, 5.0);
    for level in 0..map.level_count() {
        let at: Vec<_> = cubes.iter().filter(|c| c.level as usize == level).collect();
        if at.is_empty() {
            continue;
        }
        let near = at.iter().map(|c| c.aabb().distance(&sensor)).fold(f64::INFINITY, f64::min);
        println!("level {level}: side {:.2} m, {} cubes, nearest {:.2} m", map.cell_size(level), at.len(), near);
    }
}
