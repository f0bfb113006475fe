//! Axis-aligned bounding-volume hierarchy over the triangles of one mesh.

use crate::geometry::{Aabb, Transform, TriMesh, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`; returns `None` for a zero or non-finite direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Option<Self> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) || !origin.iter().all(|c| c.is_finite()) {
            return None;
        }
        Some(Self {
            origin,
            direction: direction / n,
        })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    pub fn transformed(&self, t: &Transform) -> Ray {
        Ray {
            origin: t.apply(&self.origin),
            direction: t.apply_vector(&self.direction),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub triangle: usize,
    pub point: Vec3,
    /// Barycentric weights of vertices 1 and 2.
    pub uv: (f64, f64),
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: u32, count: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle corners in leaf order.
    tris: Vec<[Vec3; 3]>,
    /// Original triangle index for each entry of `tris`.
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Bvh {
        let n = mesh.face_count();
        let corners: Vec<[Vec3; 3]> = (0..n).map(|i| mesh.triangle(i)).collect();
        let centroids: Vec<Vec3> = corners.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n.max(1) / LEAF_SIZE + 1);
        if n == 0 {
            nodes.push(Node {
                bounds: Aabb::empty(),
                kind: NodeKind::Leaf { start: 0, count: 0 },
            });
        } else {
            build_node(&corners, &centroids, &mut order, 0, n, &mut nodes);
        }
        let tris = order.iter().map(|&i| corners[i as usize]).collect();
        Bvh { nodes, tris, order }
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Nearest intersection of a world-space ray with the mesh placed at `mesh_pose`.
    pub fn raycast(&self, mesh_pose: &Transform, ray: &Ray) -> Option<RayHit> {
        let local = ray.transformed(&mesh_pose.inverse());
        self.raycast_local(&local, f64::INFINITY).map(|mut hit| {
            hit.point = ray.at(hit.distance);
            hit
        })
    }

    /// Nearest intersection closer than `t_max` for a ray already in the mesh frame.
    pub fn raycast_local(&self, ray: &Ray, t_max: f64) -> Option<RayHit> {
        if self.tris.is_empty() {
            return None;
        }
        let d = ray.direction;
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut best: Option<(f64, u32, f64, f64)> = None;
        let mut limit = t_max;
        let mut stack = Vec::with_capacity(64);
        if self.nodes[0].bounds.ray_entry(&ray.origin, &inv, limit).is_some() {
            stack.push(0u32);
        }
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for k in start..start + count {
                        let tri = &self.tris[k as usize];
                        if let Some((t, u, v)) = intersect_triangle(&ray.origin, &d, tri) {
                            let idx = self.order[k as usize];
                            let better = match best {
                                None => t <= limit,
                                Some((bt, bi, _, _)) => t < bt || (t == bt && idx < bi),
                            };
                            if better {
                                best = Some((t, idx, u, v));
                                limit = t;
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let hl = self.nodes[left as usize].bounds.ray_entry(&ray.origin, &inv, limit);
                    let hr = self.nodes[right as usize].bounds.ray_entry(&ray.origin, &inv, limit);
                    match (hl, hr) {
                        (Some(a), Some(b)) => {
                            // Visit the nearer child first.
                            if a <= b {
                                stack.push(right);
                                stack.push(left);
                            } else {
                                stack.push(left);
                                stack.push(right);
                            }
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, idx, u, v)| RayHit {
            distance: t,
            triangle: idx as usize,
            point: ray.at(t),
            uv: (u, v),
        })
    }

    /// Calls `visit(triangle index, corners)` for every triangle whose leaf box
    /// overlaps `region` (mesh frame).
    pub fn for_each_overlapping(&self, region: &Aabb, mut visit: impl FnMut(usize, &[Vec3; 3])) {
        if self.tris.is_empty() {
            return;
        }
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bounds.overlaps(region) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for k in start..start + count {
                        visit(self.order[k as usize] as usize, &self.tris[k as usize]);
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }

    /// Checks the containment invariants; used by tests.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|n| match n.kind {
            NodeKind::Leaf { start, count } => (start..start + count).all(|k| {
                let b = Aabb::from_points(self.tris[k as usize].iter());
                n.bounds.contains_box(&b)
            }),
            NodeKind::Inner { left, right } => {
                n.bounds.contains_box(&self.nodes[left as usize].bounds)
                    && n.bounds.contains_box(&self.nodes[right as usize].bounds)
            }
        })
    }
}

fn build_node(
    corners: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [u32],
    offset: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let slice = &mut order[offset..offset + len];
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in slice.iter() {
        for c in &corners[i as usize] {
            bounds.grow(c);
        }
        cbounds.grow(&centroids[i as usize]);
    }
    let index = nodes.len() as u32;
    if len <= LEAF_SIZE {
        nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf {
                start: offset as u32,
                count: len as u32,
            },
        });
        return index;
    }
    let ext = cbounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = len / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf { start: 0, count: 0 },
    });
    let left = build_node(corners, centroids, order, offset, mid, nodes);
    let right = build_node(corners, centroids, order, offset + mid, len - mid, nodes);
    nodes[index as usize].kind = NodeKind::Inner { left, right };
    index
}

/// Möller–Trumbore, two-sided. Returns `(t, u, v)` for `t > 0`.
pub fn intersect_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv_det;
    (t > 0.0).then_some((t, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_hit_from_below() {
        let cube = TriMesh::cuboid(Vec3::repeat(0.5));
        let bvh = Bvh::build(&cube);
        assert!(bvh.is_consistent());
        let ray = Ray::new(Vec3::new(0.0, 0.0, -1.0), Vec3::z()).unwrap();
        let hit = bvh.raycast(&Transform::identity(), &ray).unwrap();
        assert!((hit.distance - 0.5).abs() < 1e-7);
    }

    #[test]
    fn miss_returns_none() {
        let bvh = Bvh::build(&TriMesh::cuboid(Vec3::repeat(0.5)));
        let ray = Ray::new(Vec3::new(2.0, 0.0, -1.0), Vec3::z()).unwrap();
        assert!(bvh.raycast(&Transform::identity(), &ray).is_none());
        let away = Ray::new(Vec3::new(0.0, 0.0, -1.0), -Vec3::z()).unwrap();
        assert!(bvh.raycast(&Transform::identity(), &away).is_none());
    }

    #[test]
    fn posed_mesh_is_hit_in_world_frame() {
        let bvh = Bvh::build(&TriMesh::cuboid(Vec3::repeat(0.5)));
        let pose = Transform::rot_z(0.4).with_translation(Vec3::new(3.0, 0.0, 0.0));
        let ray = Ray::new(Vec3::new(3.0, 0.0, -2.0), Vec3::z()).unwrap();
        let hit = bvh.raycast(&pose, &ray).unwrap();
        assert!((hit.distance - 1.5).abs() < 1e-12);
        assert!((hit.point - Vec3::new(3.0, 0.0, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn zero_direction_is_invalid() {
        assert!(Ray::new(Vec3::zeros(), Vec3::zeros()).is_none());
    }

    #[test]
    fn deep_tree_is_consistent() {
        let bvh = Bvh::build(&TriMesh::icosphere(1.0, 4));
        assert!(bvh.is_consistent());
        assert_eq!(bvh.triangle_count(), 5120);
    }
}
