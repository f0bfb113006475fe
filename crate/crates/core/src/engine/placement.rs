use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Transform, TriMesh, Vec3};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

/// Horizontal support surface: a simple polygon at a fixed height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSurface {
    pub height: f64,
    pub polygon: Vec<[f64; 2]>,
}

impl SupportSurface {
    pub fn rectangle(min: [f64; 2], max: [f64; 2], height: f64) -> Self {
        Self {
            height,
            polygon: vec![min, [max[0], min[1]], max, [min[0], max[1]]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.polygon.len() < 3 || self.area() <= 1e-12 || !self.height.is_finite() {
            return Err(Error::InvalidArgument("support polygon is degenerate".into()));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        let n = self.polygon.len();
        let mut twice = 0.0;
        for i in 0..n {
            let [x0, y0] = self.polygon[i];
            let [x1, y1] = self.polygon[(i + 1) % n];
            twice += x0 * y1 - x1 * y0;
        }
        0.5 * twice.abs()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.polygon.len() as f64;
        let (sx, sy) = self
            .polygon
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        [sx / n, sy / n]
    }

    /// Even-odd point in polygon; boundary points count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.polygon.len();
        let mut inside = false;
        for i in 0..n {
            let [x0, y0] = self.polygon[i];
            let [x1, y1] = self.polygon[(i + 1) % n];
            if on_segment(x, y, x0, y0, x1, y1) {
                return true;
            }
            if (y0 > y) != (y1 > y) {
                let xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
                if x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether the horizontal rectangle of `b` lies inside the polygon.
    pub fn contains_footprint(&self, b: &Aabb) -> bool {
        let corners = [
            (b.min.x, b.min.y),
            (b.max.x, b.min.y),
            (b.max.x, b.max.y),
            (b.min.x, b.max.y),
        ];
        corners.iter().all(|&(x, y)| self.contains(x, y))
            && !self.polygon.iter().any(|&[x, y]| {
                x > b.min.x && x < b.max.x && y > b.min.y && y < b.max.y
            })
    }

    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.polygon {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

fn on_segment(x: f64, y: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
    let cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
    cross == 0.0 && x >= x0.min(x1) && x <= x0.max(x1) && y >= y0.min(y1) && y <= y0.max(y1)
}

/// Whether two boxes overlap in the horizontal plane (touching is not overlap).
pub fn footprints_overlap(a: &Aabb, b: &Aabb) -> bool {
    a.min.x < b.max.x && b.min.x < a.max.x && a.min.y < b.max.y && b.min.y < a.max.y
}

/// Upright pose with yaw `yaw` at `(x, y)`, lowered so the mesh's world box
/// bottom sits at `height`.
pub fn resting_pose(mesh: &TriMesh, x: f64, y: f64, yaw: f64, height: f64) -> Transform {
    let rot = Transform::rot_z(yaw);
    let bottom = mesh.world_aabb(&rot).min.z;
    rot.with_translation(Vec3::new(x, y, height - bottom))
}

/// Random upright placements with pairwise disjoint footprints.
///
/// `objects` pairs each id with the mesh whose bounding box defines it.
pub fn place_objects(
    objects: &[(u32, &TriMesh)],
    support: &SupportSurface,
    seed: u64,
) -> Result<Vec<Transform>> {
    support.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = support.bounds();
    let mut placed: Vec<Aabb> = Vec::with_capacity(objects.len());
    let mut poses = Vec::with_capacity(objects.len());
    for &(id, mesh) in objects {
        let mut found = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let x = lo[0] + rng.random::<f64>() * (hi[0] - lo[0]);
            let y = lo[1] + rng.random::<f64>() * (hi[1] - lo[1]);
            let yaw = rng.random::<f64>() * TAU;
            if !support.contains(x, y) {
                continue;
            }
            let pose = resting_pose(mesh, x, y, yaw, support.height);
            let fp = mesh.world_aabb(&pose);
            if support.contains_footprint(&fp) && !placed.iter().any(|p| footprints_overlap(p, &fp)) {
                found = Some((pose, fp));
                break;
            }
        }
        let (pose, fp) = found.ok_or(Error::PlacementFailed {
            object_id: id,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        placed.push(fp);
        poses.push(pose);
    }
    Ok(poses)
}

/// Drops `pose` vertically until the mesh's world box bottom touches the support.
pub fn settle_on_surface(
    id: u32,
    mesh: &TriMesh,
    pose: &Transform,
    support: &SupportSurface,
) -> Result<Transform> {
    let b = mesh.world_aabb(pose);
    let c = b.center();
    if !support.contains(c.x, c.y) {
        return Err(Error::NoSupportBelow(id));
    }
    let drop = support.height - b.min.z;
    if drop.abs() <= 1e-12 {
        return Ok(*pose);
    }
    let mut settled = *pose;
    settled.translation.z += drop;
    Ok(settled)
}
