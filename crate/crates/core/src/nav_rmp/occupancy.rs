use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Aabb3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupancyConfig {
    pub leaf_size: f64,
    pub levels: usize,
    pub hit: f32,
    pub miss: f32,
    pub clamp: f32,
    /// Returns below this height are ground and only carve.
    pub min_hit_height: f64,
    /// Carving and insertion stop at this range from the sensor.
    pub max_range: f64,
    /// Distance bands: nodes closer than `bands[k]` are resolved to level k.
    pub bands: Vec<f64>,
    pub query_radius: f64,
}

impl Default for OccupancyConfig {
    fn default() -> Self {
        Self {
            leaf_size: 0.1,
            levels: 5,
            hit: 0.85,
            miss: -0.4,
            clamp: 4.0,
            min_hit_height: 0.15,
            max_range: 6.0,
            bands: vec![1.0, 2.5],
            query_radius: 5.0,
        }
    }
}

impl OccupancyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.leaf_size > 0.0) {
            return Err("nav.occupancy.leaf_size must be positive".into());
        }
        if self.levels == 0 || self.levels > 8 {
            return Err("nav.occupancy.levels must be in 1..=8".into());
        }
        if self.bands.len() + 1 > self.levels {
            return Err("nav.occupancy.bands needs fewer entries than levels".into());
        }
        if self.bands.windows(2).any(|w| w[0] >= w[1]) {
            return Err("nav.occupancy.bands must be increasing".into());
        }
        Ok(())
    }

    /// Coarsest level allowed at distance `d`.
    pub fn band(&self, d: f64) -> usize {
        self.bands.iter().position(|&b| d < b).unwrap_or(self.bands.len())
    }
}

/// Occupied map node handed to the obstacle policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstacleCube {
    pub center: Point3<f64>,
    pub side: f64,
    pub level: u8,
}

impl ObstacleCube {
    pub fn aabb(&self) -> Aabb3 {
        Aabb3::from_center_half(self.center, Vector3::repeat(self.side / 2.0))
    }
}

#[derive(Debug, Clone)]
struct Level {
    dims: [usize; 3],
    values: Vec<f32>,
}

impl Level {
    fn index(&self, i: [usize; 3]) -> usize {
        (i[2] * self.dims[1] + i[1]) * self.dims[0] + i[0]
    }

    fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }
}

const MARK_FREE: u8 = 1;
const MARK_HIT: u8 = 2;

/// Log-odds voxel map with max-pooled coarser levels.
#[derive(Debug, Clone)]
pub struct HierarchicalOccupancy {
    cfg: OccupancyConfig,
    origin: Point3<f64>,
    levels: Vec<Level>,
    marks: Vec<u8>,
}

impl HierarchicalOccupancy {
    /// Map over `bounds`; the vertical extent starts at the bounds' floor.
    pub fn new(bounds: &Aabb3, cfg: OccupancyConfig) -> Self {
        let ext = bounds.max - bounds.min;
        let n = |e: f64| ((e / cfg.leaf_size).ceil() as usize).max(1);
        let mut dims = [n(ext.x), n(ext.y), n(ext.z)];
        let mut levels = Vec::with_capacity(cfg.levels);
        for _ in 0..cfg.levels {
            levels.push(Level { dims, values: vec![0.0; dims[0] * dims[1] * dims[2]] });
            dims = dims.map(|d| d.div_ceil(2));
        }
        let leaves = levels[0].values.len();
        Self { cfg, origin: bounds.min, levels, marks: vec![0; leaves] }
    }

    pub fn config(&self) -> &OccupancyConfig {
        &self.cfg
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn cell_size(&self, level: usize) -> f64 {
        self.cfg.leaf_size * (1u64 << level) as f64
    }

    pub fn dims(&self, level: usize) -> [usize; 3] {
        self.levels[level].dims
    }

    pub fn node_aabb(&self, level: usize, i: [usize; 3]) -> Aabb3 {
        let s = self.cell_size(level);
        let min = self.origin + Vector3::new(i[0] as f64, i[1] as f64, i[2] as f64) * s;
        Aabb3::new(min, min + Vector3::repeat(s))
    }

    pub fn node_value(&self, level: usize, i: [usize; 3]) -> f32 {
        let l = &self.levels[level];
        l.values[l.index(i)]
    }

    fn leaf_of(&self, p: &Point3<f64>) -> Option<[usize; 3]> {
        let r = (p - self.origin) / self.cfg.leaf_size;
        let d = self.levels[0].dims;
        let c = [r.x.floor(), r.y.floor(), r.z.floor()];
        if c.iter().zip(d).all(|(&c, n)| c >= 0.0 && c < n as f64) {
            Some([c[0] as usize, c[1] as usize, c[2] as usize])
        } else {
            None
        }
    }

    pub fn leaf_value(&self, p: &Point3<f64>) -> Option<f32> {
        self.leaf_of(p).map(|i| self.node_value(0, i))
    }

    pub fn is_occupied(&self, p: &Point3<f64>) -> bool {
        self.leaf_value(p).is_some_and(|v| v > 0.0)
    }

    /// Overwrites the leaf containing `p` and refreshes its ancestors.
    pub fn set_leaf(&mut self, p: &Point3<f64>, value: f32) -> bool {
        let Some(i) = self.leaf_of(p) else {
            return false;
        };
        let idx = self.levels[0].index(i);
        self.levels[0].values[idx] = value.clamp(-self.cfg.clamp, self.cfg.clamp);
        self.propagate(vec![idx]);
        true
    }

    /// Integrates one scan of world points seen from `sensor`. Points inside
    /// any of `excluded` (people) only carve, endpoint included; `misses` are world directions
    /// of rays without a return and only carve. Returns the number of hits.
    pub fn insert_scan(&mut self, points: &[Point3<f64>], misses: &[Vector3<f64>], sensor: &Point3<f64>, excluded: &[Aabb3]) -> usize {
        let mut dirty: Vec<usize> = Vec::new();
        let mut rays: Vec<(Point3<f64>, bool)> = Vec::with_capacity(points.len());
        let mut hits = 0;
        for p in points {
            if !p.iter().all(|v| v.is_finite()) {
                continue;
            }
            // a person stands here, so whatever the map held at the endpoint is stale
            if excluded.iter().any(|b| b.contains(p)) {
                rays.push((*p, false));
                continue;
            }
            let d = p - sensor;
            let range = d.norm();
            if range > self.cfg.max_range {
                rays.push((sensor + d * (self.cfg.max_range / range), false));
                continue;
            }
            let is_hit = p.z >= self.cfg.min_hit_height;
            if is_hit {
                if let Some(i) = self.leaf_of(p) {
                    let idx = self.levels[0].index(i);
                    if self.marks[idx] == 0 {
                        dirty.push(idx);
                    }
                    self.marks[idx] = MARK_HIT;
                    hits += 1;
                }
            }
            rays.push((*p, true));
        }
        for d in misses {
            let n = d.norm();
            if n > 0.0 && n.is_finite() {
                rays.push((sensor + d * (self.cfg.max_range / n), false));
            }
        }
        for (end, stop_before) in rays {
            self.traverse(sensor, &end, stop_before, |map, idx| {
                if map.marks[idx] == 0 {
                    map.marks[idx] = MARK_FREE;
                    dirty.push(idx);
                }
            });
        }
        let (hit, miss, clamp) = (self.cfg.hit, self.cfg.miss, self.cfg.clamp);
        for &idx in &dirty {
            let delta = if self.marks[idx] == MARK_HIT { hit } else { miss };
            let v = &mut self.levels[0].values[idx];
            *v = (*v + delta).clamp(-clamp, clamp);
            self.marks[idx] = 0;
        }
        self.propagate(dirty);
        hits
    }

    /// Visits the leaves crossed by the segment; the endpoint's own leaf is
    /// skipped when `stop_before` is set.
    fn traverse(&mut self, from: &Point3<f64>, to: &Point3<f64>, stop_before: bool, mut visit: impl FnMut(&mut Self, usize)) {
        let s = self.cfg.leaf_size;
        let dims = self.levels[0].dims;
        let a = (from - self.origin) / s;
        let b = (to - self.origin) / s;
        let d = b - a;
        // clip to the grid box in cell units
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..3 {
            let hi = dims[k] as f64;
            if d[k].abs() < 1e-12 {
                if a[k] < 0.0 || a[k] >= hi {
                    return;
                }
                continue;
            }
            let (mut lo_t, mut hi_t) = ((0.0 - a[k]) / d[k], (hi - a[k]) / d[k]);
            if lo_t > hi_t {
                std::mem::swap(&mut lo_t, &mut hi_t);
            }
            t0 = t0.max(lo_t);
            t1 = t1.min(hi_t);
        }
        if t0 >= t1 {
            return;
        }
        let start = a + d * t0;
        let end_cell = {
            let e = a + d;
            [e.x.floor() as i64, e.y.floor() as i64, e.z.floor() as i64]
        };
        let mut cell = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            cell[k] = (start[k].floor() as i64).clamp(0, dims[k] as i64 - 1);
            if d[k] > 0.0 {
                step[k] = 1;
                t_max[k] = ((cell[k] + 1) as f64 - a[k]) / d[k];
                t_delta[k] = 1.0 / d[k];
            } else if d[k] < 0.0 {
                step[k] = -1;
                t_max[k] = (cell[k] as f64 - a[k]) / d[k];
                t_delta[k] = -1.0 / d[k];
            }
        }
        loop {
            if stop_before && cell == end_cell {
                return;
            }
            let idx = (cell[2] as usize * dims[1] + cell[1] as usize) * dims[0] + cell[0] as usize;
            visit(self, idx);
            let k = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[k] > t1 {
                return;
            }
            cell[k] += step[k];
            if cell[k] < 0 || cell[k] >= dims[k] as i64 {
                return;
            }
            t_max[k] += t_delta[k];
        }
    }

    fn propagate(&mut self, mut dirty: Vec<usize>) {
        for k in 1..self.levels.len() {
            let (lower, upper) = self.levels.split_at_mut(k);
            let child = &lower[k - 1];
            let parent = &mut upper[0];
            let mut parents: Vec<usize> = dirty
                .iter()
                .map(|&c| {
                    let ci = child.coords(c);
                    parent.index([ci[0] / 2, ci[1] / 2, ci[2] / 2])
                })
                .collect();
            parents.sort_unstable();
            parents.dedup();
            let mut changed = Vec::with_capacity(parents.len());
            for p in parents {
                let pi = parent.coords(p);
                let mut m = f32::NEG_INFINITY;
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let ci = [pi[0] * 2 + dx, pi[1] * 2 + dy, pi[2] * 2 + dz];
                            if ci.iter().zip(child.dims).all(|(&c, n)| c < n) {
                                m = m.max(child.values[child.index(ci)]);
                            }
                        }
                    }
                }
                if parent.values[p] != m {
                    parent.values[p] = m;
                    changed.push(p);
                }
            }
            if changed.is_empty() {
                return;
            }
            dirty = changed;
        }
    }

    /// True when every coarse node equals the max of its children.
    pub fn max_pool_consistent(&self) -> bool {
        for k in 1..self.levels.len() {
            let (child, parent) = (&self.levels[k - 1], &self.levels[k]);
            for p in 0..parent.values.len() {
                let pi = parent.coords(p);
                let mut m = f32::NEG_INFINITY;
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let ci = [pi[0] * 2 + dx, pi[1] * 2 + dy, pi[2] * 2 + dz];
                            if ci.iter().zip(child.dims).all(|(&c, n)| c < n) {
                                m = m.max(child.values[child.index(ci)]);
                            }
                        }
                    }
                }
                if parent.values[p] != m {
                    return false;
                }
            }
        }
        true
    }

    /// Boxes of all occupied leaves.
    pub fn occupied_leaves(&self) -> Vec<Aabb3> {
        let l = &self.levels[0];
        (0..l.values.len()).filter(|&i| l.values[i] > 0.0).map(|i| self.node_aabb(0, l.coords(i))).collect()
    }

    /// Occupied nodes within `radius` of `center`, each at the coarsest level
    /// its distance band allows.
    pub fn query_obstacle_cubes(&self, center: &Point3<f64>, radius: f64) -> Vec<ObstacleCube> {
        let top = self.levels.len() - 1;
        let mut out = Vec::new();
        let l = &self.levels[top];
        for idx in 0..l.values.len() {
            self.descend(top, l.coords(idx), center, radius, &mut out);
        }
        out
    }

    fn descend(&self, level: usize, i: [usize; 3], center: &Point3<f64>, radius: f64, out: &mut Vec<ObstacleCube>) {
        if self.node_value(level, i) <= 0.0 {
            return;
        }
        let aabb = self.node_aabb(level, i);
        let d = aabb.distance(center);
        if d > radius {
            return;
        }
        if level <= self.cfg.band(d) {
            out.push(ObstacleCube { center: aabb.center(), side: self.cell_size(level), level: level as u8 });
            return;
        }
        let dims = self.levels[level - 1].dims;
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let ci = [i[0] * 2 + dx, i[1] * 2 + dy, i[2] * 2 + dz];
                    if ci.iter().zip(dims).all(|(&c, n)| c < n) {
                        self.descend(level - 1, ci, center, radius, out);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> HierarchicalOccupancy {
        HierarchicalOccupancy::new(&Aabb3::new(Point3::new(-5.0, -5.0, 0.0), Point3::new(5.0, 5.0, 2.0)), OccupancyConfig::default())
    }

    #[test]
    fn band_rule() {
        let c = OccupancyConfig::default();
        assert_eq!((c.band(0.5), c.band(1.0), c.band(2.0), c.band(4.0)), (0, 1, 1, 2));
    }

    #[test]
    fn hit_marks_leaf_and_carves_ray() {
        let mut m = map();
        let sensor = Point3::new(0.05, 0.05, 0.55);
        let p = Point3::new(2.05, 0.05, 0.55);
        assert_eq!(m.insert_scan(&[p], &[], &sensor, &[]), 1);
        assert!(m.is_occupied(&p));
        assert!((m.leaf_value(&p).unwrap() - 0.85).abs() < 1e-6);
        assert!((m.leaf_value(&Point3::new(1.05, 0.05, 0.55)).unwrap() + 0.4).abs() < 1e-6);
        assert!(m.max_pool_consistent());
    }

    #[test]
    fn ground_and_people_are_not_obstacles() {
        let mut m = map();
        let sensor = Point3::new(0.0, 0.0, 0.5);
        m.insert_scan(&[Point3::new(2.0, 0.0, 0.02)], &[], &sensor, &[]);
        assert!(m.occupied_leaves().is_empty());
        let person = Aabb3::new(Point3::new(1.5, -0.5, 0.0), Point3::new(2.5, 0.5, 2.0));
        m.insert_scan(&[Point3::new(2.0, 0.0, 1.0)], &[], &sensor, &[person]);
        assert!(m.occupied_leaves().is_empty());
    }

    #[test]
    fn repeated_hits_saturate() {
        let mut m = map();
        let sensor = Point3::new(0.0, 0.0, 0.5);
        let p = Point3::new(1.55, 0.55, 0.55);
        for _ in 0..20 {
            m.insert_scan(&[p], &[], &sensor, &[]);
        }
        assert_eq!(m.leaf_value(&p), Some(4.0));
    }

    #[test]
    fn missed_rays_clear_stale_cells() {
        let mut m = map();
        let stale = Point3::new(2.05, 0.05, 0.55);
        m.set_leaf(&stale, 2.0);
        let sensor = Point3::new(0.05, 0.05, 0.55);
        for _ in 0..6 {
            m.insert_scan(&[], &[Vector3::x()], &sensor, &[]);
        }
        assert!(!m.is_occupied(&stale));
        assert!(m.max_pool_consistent());
    }

    #[test]
    fn empty_map_has_no_cubes() {
        assert!(map().query_obstacle_cubes(&Point3::new(0.0, 0.0, 0.4), 5.0).is_empty());
    }

    #[test]
    fn cube_sizes_follow_bands() {
        let mut m = map();
        for p in [Point3::new(0.55, 0.05, 0.35), Point3::new(2.05, 0.05, 0.35), Point3::new(4.05, 0.05, 0.35)] {
            m.set_leaf(&p, 1.0);
        }
        let c = m.query_obstacle_cubes(&Point3::new(0.0, 0.0, 0.4), 5.0);
        let mut sides: Vec<f64> = c.iter().map(|c| c.side).collect();
        sides.sort_by(f64::total_cmp);
        assert_eq!(c.len(), 3);
        assert!((sides[0] - 0.1).abs() < 1e-12 && (sides[1] - 0.2).abs() < 1e-12 && (sides[2] - 0.4).abs() < 1e-12);
    }
}
