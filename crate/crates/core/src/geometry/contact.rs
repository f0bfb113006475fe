//! Capsule-versus-mesh proximity queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Bvh, Transform, TriMesh, Vec3};

/// Line segment swept by a sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    #[serde(with = "vec3_array")]
    pub a: Vec3,
    #[serde(with = "vec3_array")]
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vec3, b: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("capsule radius {radius} must be > 0")));
        }
        if (a - b).norm() == 0.0 {
            return Err(Error::InvalidArgument("capsule endpoints coincide".into()));
        }
        Ok(Self { a, b, radius })
    }

    pub fn transformed(&self, t: &Transform) -> Capsule {
        Capsule {
            a: t.apply(&self.a),
            b: t.apply(&self.b),
            radius: self.radius,
        }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points([&self.a, &self.b]).expanded(self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Minimum distance between the capsule segment and the mesh surface.
    pub distance: f64,
    /// Closest point on the mesh, world frame.
    pub point: Vec3,
    pub triangle: usize,
}

/// Contact iff the segment-to-surface distance is at most the capsule radius.
pub fn capsule_mesh_contact(
    capsule: &Capsule,
    capsule_pose: &Transform,
    bvh: &Bvh,
    mesh_pose: &Transform,
) -> Option<Contact> {
    let to_mesh = mesh_pose.inverse().compose(capsule_pose);
    let local = capsule.transformed(&to_mesh);
    let region = local.aabb();
    let mut best: Option<(f64, Vec3, usize)> = None;
    bvh.for_each_overlapping(&region, |idx, tri| {
        let (d, _, q) = segment_triangle_distance(&local.a, &local.b, tri);
        let better = match best {
            None => true,
            Some((bd, _, bi)) => d < bd || (d == bd && idx < bi),
        };
        if better {
            best = Some((d, q, idx));
        }
    });
    let (distance, q, triangle) = best?;
    (distance <= capsule.radius).then(|| Contact {
        distance,
        point: mesh_pose.apply(&q),
        triangle,
    })
}

/// Convenience wrapper that builds no BVH: exhaustive minimum distance from a
/// segment to every triangle of `mesh` (both in the same frame).
pub fn segment_mesh_distance(a: &Vec3, b: &Vec3, mesh: &TriMesh) -> f64 {
    (0..mesh.face_count())
        .map(|i| segment_triangle_distance(a, b, &mesh.triangle(i)).0)
        .fold(f64::INFINITY, f64::min)
}

/// Minimum distance between segment `ab` and a triangle, with the closest
/// points on the segment and on the triangle.
pub fn segment_triangle_distance(a: &Vec3, b: &Vec3, tri: &[Vec3; 3]) -> (f64, Vec3, Vec3) {
    if let Some(p) = segment_crosses_triangle(a, b, tri) {
        return (0.0, p, p);
    }
    let mut best = {
        let q = closest_point_on_triangle(a, tri);
        ((a - q).norm(), *a, q)
    };
    let mut consider = |d: f64, p: Vec3, q: Vec3| {
        if d < best.0 {
            best = (d, p, q);
        }
    };
    let q = closest_point_on_triangle(b, tri);
    consider((b - q).norm(), *b, q);
    for k in 0..3 {
        let (p, q) = closest_points_segments(a, b, &tri[k], &tri[(k + 1) % 3]);
        consider((p - q).norm(), p, q);
    }
    best
}

fn segment_crosses_triangle(a: &Vec3, b: &Vec3, tri: &[Vec3; 3]) -> Option<Vec3> {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let da = n.dot(&(a - tri[0]));
    let db = n.dot(&(b - tri[0]));
    if da * db > 0.0 || da == db {
        return None;
    }
    let t = da / (da - db);
    let p = a + (b - a) * t;
    // Inside test via edge half-planes.
    for k in 0..3 {
        let e = tri[(k + 1) % 3] - tri[k];
        if n.dot(&e.cross(&(p - tri[k]))) < 0.0 {
            return None;
        }
    }
    Some(p)
}

/// Closest point on a triangle to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> Vec3 {
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Closest points between segments `p1q1` and `p2q2`.
pub fn closest_points_segments(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> (Vec3, Vec3) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (s, t);
    if a <= eps && e <= eps {
        return (*p1, *p2);
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

pub(crate) mod vec3_array {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::geometry::Vec3;

    pub fn serialize<S: Serializer>(v: &Vec3, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec3, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vec3::from(a))
    }
}
