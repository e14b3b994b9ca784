use std::collections::HashMap;

use nalgebra::Point3;

/// Uniform hash grid for fixed-radius neighbour queries.
#[derive(Debug, Clone)]
pub struct HashGrid<'a> {
    cell: f64,
    points: &'a [Point3<f64>],
    buckets: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl<'a> HashGrid<'a> {
    pub fn new(points: &'a [Point3<f64>], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(i as u32);
        }
        Self { cell, points, buckets }
    }

    /// Indices of all points within `radius` of `q` (unordered).
    pub fn within(&self, q: &Point3<f64>, radius: f64, out: &mut Vec<u32>) {
        let reach = (radius / self.cell).ceil() as i64;
        let (cx, cy, cz) = key(q, self.cell);
        let r2 = radius * radius;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(bucket) = self.buckets.get(&(cx + dx, cy + dy, cz + dz)) {
                        out.extend(bucket.iter().filter(|&&i| (self.points[i as usize] - q).norm_squared() <= r2));
                    }
                }
            }
        }
    }

    /// Nearest point within `radius`; ties resolve to the lower index.
    pub fn nearest(&self, q: &Point3<f64>, radius: f64) -> Option<u32> {
        let mut candidates = Vec::new();
        self.within(q, radius, &mut candidates);
        candidates.into_iter().min_by(|&a, &b| {
            let da = (self.points[a as usize] - q).norm_squared();
            let db = (self.points[b as usize] - q).norm_squared();
            da.total_cmp(&db).then(a.cmp(&b))
        })
    }
}

fn key(p: &Point3<f64>, cell: f64) -> (i64, i64, i64) {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
}
