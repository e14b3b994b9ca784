use nalgebra::{Point2, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Aabb3;

/// Vertical cylinder standing on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cylinder {
    pub center: Point2<f64>,
    pub radius: f64,
    pub height: f64,
}

/// Vertical plane segment from `start` to `end`, standing on the ground.
/// Walls reflect RF and block LiDAR and motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub start: Point2<f64>,
    pub end: Point2<f64>,
    pub height: f64,
}

impl Wall {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    /// Unit normal (left of start→end).
    pub fn normal(&self) -> Vector2<f64> {
        let d = (self.end - self.start) / self.length();
        Vector2::new(-d.y, d.x)
    }

    /// Signed distance of a planar point from the wall's infinite plane.
    pub fn signed_distance(&self, p: &Point2<f64>) -> f64 {
        (p - self.start).dot(&self.normal())
    }

    pub fn closest_point(&self, p: &Point2<f64>) -> Point2<f64> {
        let d = self.end - self.start;
        let s = ((p - self.start).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        self.start + d * s
    }

    /// Mirror image of a 3D point across the wall's plane.
    pub fn mirror(&self, p: &Point3<f64>) -> Point3<f64> {
        let n = self.normal();
        let s = self.signed_distance(&p.xy());
        Point3::new(p.x - 2.0 * s * n.x, p.y - 2.0 * s * n.y, p.z)
    }
}

/// Upright capsule used for human bodies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub base: Point2<f64>,
    pub radius: f64,
    pub height: f64,
}

impl Capsule {
    fn axis(&self) -> (Point3<f64>, Point3<f64>) {
        let lo = self.radius.min(self.height / 2.0);
        let hi = (self.height - self.radius).max(lo);
        (
            Point3::new(self.base.x, self.base.y, lo),
            Point3::new(self.base.x, self.base.y, hi),
        )
    }

    /// Distance from a point to the capsule surface (negative inside).
    pub fn surface_distance(&self, p: &Point3<f64>) -> f64 {
        let (a, b) = self.axis();
        let z = p.z.clamp(a.z, b.z);
        (p - Point3::new(a.x, a.y, z)).norm() - self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldModel {
    /// Declared extent of the world; agents and the robot stay inside.
    pub bounds: Aabb3,
    #[serde(default)]
    pub boxes: Vec<Aabb3>,
    #[serde(default)]
    pub cylinders: Vec<Cylinder>,
    #[serde(default)]
    pub walls: Vec<Wall>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitKind {
    Ground,
    Static,
    Agent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub range: f64,
    pub kind: HitKind,
}

/// Outcome of resolving a footprint against the static scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub position: Point2<f64>,
    /// Accumulated contact normals; zero when nothing was touched.
    pub contact_normal: Vector2<f64>,
}

impl WorldModel {
    pub fn empty(min: Point2<f64>, max: Point2<f64>) -> Self {
        Self {
            bounds: Aabb3::new(Point3::new(min.x, min.y, 0.0), Point3::new(max.x, max.y, 3.0)),
            boxes: Vec::new(),
            cylinders: Vec::new(),
            walls: Vec::new(),
        }
    }

    /// Checks positive extents and a well-formed bounding box.
    pub fn validate(&self) -> Result<(), String> {
        if !self.bounds.is_well_formed() || self.bounds.max.x <= self.bounds.min.x || self.bounds.max.y <= self.bounds.min.y {
            return Err("world.bounds: min must be below max".into());
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if (0..3).any(|k| !(b.max[k] > b.min[k])) {
                return Err(format!("world.boxes[{i}]: extents must be positive"));
            }
        }
        for (i, c) in self.cylinders.iter().enumerate() {
            if !(c.radius > 0.0 && c.height > 0.0) {
                return Err(format!("world.cylinders[{i}]: radius and height must be positive"));
            }
        }
        for (i, w) in self.walls.iter().enumerate() {
            if !(w.length() > 0.0 && w.height > 0.0) {
                return Err(format!("world.walls[{i}]: length and height must be positive"));
            }
        }
        Ok(())
    }

    pub fn contains_xy(&self, p: &Point2<f64>) -> bool {
        p.x >= self.bounds.min.x && p.x <= self.bounds.max.x && p.y >= self.bounds.min.y && p.y <= self.bounds.max.y
    }

    /// Nearest hit along a unit ray against ground, static geometry and the
    /// given capsules, up to `max_range`.
    pub fn raycast(&self, origin: &Point3<f64>, dir: &Vector3<f64>, max_range: f64, capsules: &[Capsule]) -> Option<RayHit> {
        let mut best = RayHit { range: max_range, kind: HitKind::Ground };
        let mut found = false;
        let mut offer = |t: Option<f64>, kind: HitKind| {
            if let Some(t) = t {
                if t < best.range {
                    best = RayHit { range: t, kind };
                    found = true;
                }
            }
        };
        if dir.z < 0.0 {
            offer(Some(-origin.z / dir.z), HitKind::Ground);
        }
        for b in &self.boxes {
            offer(ray_aabb(origin, dir, b), HitKind::Static);
        }
        for c in &self.cylinders {
            offer(ray_cylinder(origin, dir, c), HitKind::Static);
        }
        for w in &self.walls {
            offer(ray_wall(origin, dir, w), HitKind::Static);
        }
        for (i, c) in capsules.iter().enumerate() {
            offer(ray_capsule(origin, dir, c), HitKind::Agent(i));
        }
        found.then_some(best)
    }

    /// Whether static geometry blocks the straight segment `a`→`b`.
    pub fn segment_blocked(&self, a: &Point3<f64>, b: &Point3<f64>) -> bool {
        let d = b - a;
        let len = d.norm();
        if len < 1e-9 {
            return false;
        }
        let dir = d / len;
        let stop = len - 1e-6;
        self.boxes.iter().any(|x| ray_aabb(a, &dir, x).is_some_and(|t| t < stop))
            || self.cylinders.iter().any(|x| ray_cylinder(a, &dir, x).is_some_and(|t| t < stop))
            || self.walls.iter().any(|x| ray_wall(a, &dir, x).is_some_and(|t| t < stop))
    }

    /// Signed clearance of a disc footprint from static geometry and the
    /// world boundary; negative means interpenetration.
    pub fn footprint_clearance(&self, p: &Point2<f64>, radius: f64) -> f64 {
        let mut d = f64::INFINITY;
        for b in &self.boxes {
            d = d.min(box_signed_distance(b, p));
        }
        for c in &self.cylinders {
            d = d.min((p - c.center).norm() - c.radius);
        }
        for w in &self.walls {
            d = d.min((p - w.closest_point(p)).norm());
        }
        let b = &self.bounds;
        d = d.min((p.x - b.min.x).min(b.max.x - p.x).min(p.y - b.min.y).min(b.max.y - p.y));
        d - radius
    }

    /// Pushes a disc footprint out of static geometry and back inside the
    /// bounds. Contacts are reported so callers can cancel the normal
    /// component of their velocity and keep the tangential part.
    pub fn resolve_footprint(&self, p: Point2<f64>, radius: f64) -> Resolved {
        let mut pos = p;
        let mut normal = Vector2::zeros();
        for _ in 0..4 {
            let mut moved = false;
            for b in &self.boxes {
                if let Some(n) = push_from_box(b, &mut pos, radius) {
                    normal += n;
                    moved = true;
                }
            }
            for c in &self.cylinders {
                let off = pos - c.center;
                let dist = off.norm();
                let min = c.radius + radius;
                if dist < min {
                    let n = if dist > 1e-12 { off / dist } else { Vector2::x() };
                    pos = c.center + n * min;
                    normal += n;
                    moved = true;
                }
            }
            for w in &self.walls {
                let q = w.closest_point(&pos);
                let off = pos - q;
                let dist = off.norm();
                if dist < radius {
                    let n = if dist > 1e-12 { off / dist } else { w.normal() };
                    pos = q + n * radius;
                    normal += n;
                    moved = true;
                }
            }
            let b = &self.bounds;
            let clamped = Point2::new(
                pos.x.clamp(b.min.x + radius, (b.max.x - radius).max(b.min.x + radius)),
                pos.y.clamp(b.min.y + radius, (b.max.y - radius).max(b.min.y + radius)),
            );
            if clamped != pos {
                normal += clamped - pos;
                pos = clamped;
                moved = true;
            }
            if !moved {
                break;
            }
        }
        let n = normal.norm();
        Resolved {
            position: pos,
            contact_normal: if n > 1e-12 { normal / n } else { Vector2::zeros() },
        }
    }
}

/// Planar signed distance to a box footprint (negative inside).
fn box_signed_distance(b: &Aabb3, p: &Point2<f64>) -> f64 {
    let dx = (b.min.x - p.x).max(p.x - b.max.x);
    let dy = (b.min.y - p.y).max(p.y - b.max.y);
    if dx <= 0.0 && dy <= 0.0 {
        dx.max(dy)
    } else {
        Vector2::new(dx.max(0.0), dy.max(0.0)).norm()
    }
}

fn push_from_box(b: &Aabb3, pos: &mut Point2<f64>, radius: f64) -> Option<Vector2<f64>> {
    let q = Point2::new(pos.x.clamp(b.min.x, b.max.x), pos.y.clamp(b.min.y, b.max.y));
    let off = *pos - q;
    let dist = off.norm();
    if dist >= radius {
        return None;
    }
    if dist > 1e-12 {
        let n = off / dist;
        *pos = q + n * radius;
        return Some(n);
    }
    // centre inside: leave through the nearest face
    let faces = [
        (pos.x - b.min.x, Vector2::new(-1.0, 0.0)),
        (b.max.x - pos.x, Vector2::new(1.0, 0.0)),
        (pos.y - b.min.y, Vector2::new(0.0, -1.0)),
        (b.max.y - pos.y, Vector2::new(0.0, 1.0)),
    ];
    let (depth, n) = faces.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    *pos += n * (depth + radius);
    Some(n)
}

/// Entry distance of a ray into a box (slab method); `None` when missed or
/// when the origin lies inside.
pub fn ray_aabb(o: &Point3<f64>, d: &Vector3<f64>, b: &Aabb3) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if o[k] < b.min[k] || o[k] > b.max[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[k];
        let (mut a, mut c) = ((b.min[k] - o[k]) * inv, (b.max[k] - o[k]) * inv);
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
        t0 = t0.max(a);
        t1 = t1.min(c);
        if t0 > t1 {
            return None;
        }
    }
    (t0 > 0.0).then_some(t0)
}

pub fn ray_cylinder(o: &Point3<f64>, d: &Vector3<f64>, c: &Cylinder) -> Option<f64> {
    let mut best: Option<f64> = None;
    let ox = o.x - c.center.x;
    let oy = o.y - c.center.y;
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-15 {
        let b = ox * d.x + oy * d.y;
        let cc = ox * ox + oy * oy - c.radius * c.radius;
        let disc = b * b - a * cc;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / a;
            if t > 0.0 {
                let z = o.z + t * d.z;
                if (0.0..=c.height).contains(&z) {
                    best = Some(t);
                }
            }
        }
    }
    // top cap
    if d.z.abs() > 1e-15 {
        let t = (c.height - o.z) / d.z;
        if t > 0.0 && best.is_none_or(|b| t < b) {
            let x = ox + t * d.x;
            let y = oy + t * d.y;
            if x * x + y * y <= c.radius * c.radius {
                best = Some(t);
            }
        }
    }
    best
}

pub fn ray_wall(o: &Point3<f64>, d: &Vector3<f64>, w: &Wall) -> Option<f64> {
    let n = w.normal();
    let denom = d.x * n.x + d.y * n.y;
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = -w.signed_distance(&o.xy()) / denom;
    if t <= 0.0 {
        return None;
    }
    let hit = o + d * t;
    let along = w.end - w.start;
    let s = (hit.xy() - w.start).dot(&along) / along.norm_squared();
    ((0.0..=1.0).contains(&s) && (0.0..=w.height).contains(&hit.z)).then_some(t)
}

pub fn ray_capsule(o: &Point3<f64>, d: &Vector3<f64>, c: &Capsule) -> Option<f64> {
    let (lo, hi) = c.axis();
    let r2 = c.radius * c.radius;
    let mut best: Option<f64> = None;
    let ox = o.x - lo.x;
    let oy = o.y - lo.y;
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-15 {
        let b = ox * d.x + oy * d.y;
        let cc = ox * ox + oy * oy - r2;
        let disc = b * b - a * cc;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / a;
            let z = o.z + t * d.z;
            if t > 0.0 && z >= lo.z && z <= hi.z {
                best = Some(t);
            }
        }
    }
    for center in [lo, hi] {
        let oc = o - center;
        let b = oc.dot(d);
        let cc = oc.norm_squared() - r2;
        let disc = b * b - cc;
        if disc >= 0.0 {
            let t = -b - disc.sqrt();
            if t > 0.0 && best.is_none_or(|x| t < x) {
                best = Some(t);
            }
        }
    }
    best
}
