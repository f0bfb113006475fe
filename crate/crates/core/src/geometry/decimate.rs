//! Quadric-error edge-collapse simplification.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::geometry::mesh::MIN_TRIANGLE_AREA;
use crate::geometry::{Aabb, TriMesh, Vec3};

/// Face budget used for real-time collision proxies.
pub const DEFAULT_TARGET_FACES: usize = 200;

/// Smallest face count a collapse sequence may reach.
const MIN_FACES: usize = 4;

/// Weight of the synthetic planes that pin open boundaries in place.
const BOUNDARY_WEIGHT: f64 = 100.0;

/// Reduces `mesh` to at most `target_faces` triangles by quadric-error edge
/// collapse. Meshes already within budget are returned unchanged.
pub fn decimate_mesh(mesh: &TriMesh, target_faces: usize) -> Result<TriMesh> {
    if target_faces < MIN_FACES {
        return Err(Error::NonDecimatable {
            target: target_faces,
            reason: format!("target below the {MIN_FACES}-face floor"),
        });
    }
    if mesh.face_count() <= target_faces {
        return Ok(mesh.clone());
    }
    let mut state = Collapser::new(mesh);
    state.run(target_faces)?;
    Ok(state.finish())
}

#[derive(Clone, Copy)]
struct Candidate {
    cost: f64,
    u: u32,
    v: u32,
    stamp_u: u32,
    stamp_v: u32,
    target: Vec3,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.u.cmp(&other.u))
            .then(self.v.cmp(&other.v))
    }
}

struct Collapser {
    pos: Vec<Vec3>,
    colors: Option<Vec<[f32; 3]>>,
    quadric: Vec<Matrix4<f64>>,
    stamp: Vec<u32>,
    alive_vertex: Vec<bool>,
    faces: Vec<[u32; 3]>,
    alive_face: Vec<bool>,
    vertex_faces: Vec<Vec<u32>>,
    live_faces: usize,
    bounds: Aabb,
    heap: BinaryHeap<Reverse<Candidate>>,
}

impl Collapser {
    fn new(mesh: &TriMesh) -> Self {
        let pos = mesh.vertices().to_vec();
        let faces = mesh.triangles().to_vec();
        let n = pos.len();
        let mut vertex_faces = vec![Vec::new(); n];
        let mut quadric = vec![Matrix4::zeros(); n];
        for (fi, f) in faces.iter().enumerate() {
            let [a, b, c] = f.map(|i| pos[i as usize]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            let normal = cross.normalize();
            let q = plane_quadric(&normal, &a) * area;
            for &v in f {
                vertex_faces[v as usize].push(fi as u32);
                quadric[v as usize] += q;
            }
        }
        let mut edge_faces: std::collections::HashMap<(u32, u32), Vec<u32>> = Default::default();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi as u32);
            }
        }
        let mut boundary: Vec<_> = edge_faces.iter().filter(|(_, fs)| fs.len() == 1).collect();
        boundary.sort_by_key(|(e, _)| **e);
        for (&(a, b), fs) in boundary {
            let f = faces[fs[0] as usize];
            let [p0, p1, p2] = f.map(|i| pos[i as usize]);
            let n = (p1 - p0).cross(&(p2 - p0)).normalize();
            let e = pos[b as usize] - pos[a as usize];
            let side = e.cross(&n);
            if side.norm() > 0.0 {
                let q = plane_quadric(&side.normalize(), &pos[a as usize]) * (BOUNDARY_WEIGHT * e.norm_squared());
                quadric[a as usize] += q;
                quadric[b as usize] += q;
            }
        }
        let bounds = mesh.aabb();
        let mut s = Self {
            colors: mesh.colors().map(|c| c.to_vec()),
            pos,
            quadric,
            stamp: vec![0; n],
            alive_vertex: vec![true; n],
            live_faces: faces.len(),
            alive_face: vec![true; faces.len()],
            faces,
            vertex_faces,
            bounds,
            heap: BinaryHeap::new(),
        };
        let mut edges: Vec<(u32, u32)> = edge_faces.into_keys().collect();
        edges.sort_unstable();
        for (a, b) in edges {
            s.push_edge(a, b);
        }
        s
    }

    fn push_edge(&mut self, u: u32, v: u32) {
        let q = self.quadric[u as usize] + self.quadric[v as usize];
        let (target, cost) = self.placement(&q, u, v);
        self.heap.push(Reverse(Candidate {
            cost,
            u,
            v,
            stamp_u: self.stamp[u as usize],
            stamp_v: self.stamp[v as usize],
            target,
        }));
    }

    fn placement(&self, q: &Matrix4<f64>, u: u32, v: u32) -> (Vec3, f64) {
        let a = self.pos[u as usize];
        let b = self.pos[v as usize];
        let m = Matrix3::new(
            q[(0, 0)], q[(0, 1)], q[(0, 2)],
            q[(1, 0)], q[(1, 1)], q[(1, 2)],
            q[(2, 0)], q[(2, 1)], q[(2, 2)],
        );
        let rhs = -Vec3::new(q[(0, 3)], q[(1, 3)], q[(2, 3)]);
        let scale = m.norm();
        if scale > 0.0 && m.determinant().abs() > 1e-9 * scale.powi(3) {
            if let Some(inv) = m.try_inverse() {
                let p = inv * rhs;
                // Keep new vertices inside the input bounds.
                let slack = 1e-9 * self.bounds.diagonal();
                if self.bounds.expanded(slack).contains_box(&Aabb::from_points([&p])) {
                    return (p, quadric_error(q, &p));
                }
            }
        }
        // Minimize along the edge instead.
        let d = b - a;
        let qa = quadric_error(q, &a);
        let qb = quadric_error(q, &b);
        let qm = quadric_error(q, &((a + b) * 0.5));
        // Quadratic through s = 0, 0.5, 1.
        let c2 = 2.0 * (qa + qb - 2.0 * qm);
        let c1 = qb - qa - c2;
        let s = if c2 > 0.0 { (-c1 / (2.0 * c2)).clamp(0.0, 1.0) } else if qa <= qb { 0.0 } else { 1.0 };
        let p = a + d * s;
        (p, quadric_error(q, &p))
    }

    fn run(&mut self, target: usize) -> Result<()> {
        while self.live_faces > target {
            let Some(Reverse(c)) = self.heap.pop() else {
                return Err(Error::NonDecimatable {
                    target,
                    reason: format!("no valid collapse left at {} faces", self.live_faces),
                });
            };
            let (u, v) = (c.u as usize, c.v as usize);
            if !self.alive_vertex[u]
                || !self.alive_vertex[v]
                || self.stamp[u] != c.stamp_u
                || self.stamp[v] != c.stamp_v
            {
                continue;
            }
            self.try_collapse(c.u, c.v, c.target);
        }
        Ok(())
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.vertex_faces[v as usize]
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn try_collapse(&mut self, u: u32, v: u32, target: Vec3) -> bool {
        let shared: Vec<u32> = self.vertex_faces[u as usize]
            .iter()
            .copied()
            .filter(|f| self.faces[*f as usize].contains(&v))
            .collect();
        if shared.is_empty() || self.live_faces - shared.len() < MIN_FACES {
            return false;
        }
        // Link condition: common neighbors are exactly the apexes of shared faces.
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        let common = nu.iter().filter(|w| nv.binary_search(w).is_ok()).count();
        if common != shared.len() {
            return false;
        }
        // Reject fold-overs and slivers in the surviving one-ring.
        for &w in [u, v].iter() {
            for &f in &self.vertex_faces[w as usize] {
                if shared.contains(&f) {
                    continue;
                }
                let tri = self.faces[f as usize];
                let before = tri.map(|i| self.pos[i as usize]);
                let after = tri.map(|i| if i == u || i == v { target } else { self.pos[i as usize] });
                let n0 = (before[1] - before[0]).cross(&(before[2] - before[0]));
                let n1 = (after[1] - after[0]).cross(&(after[2] - after[0]));
                if 0.5 * n1.norm() <= MIN_TRIANGLE_AREA * 10.0 {
                    return false;
                }
                if n0.dot(&n1) <= 0.2 * n0.norm() * n1.norm() {
                    return false;
                }
            }
        }
        for &f in &shared {
            self.alive_face[f as usize] = false;
            for &w in &self.faces[f as usize] {
                self.vertex_faces[w as usize].retain(|&g| g != f);
            }
        }
        self.live_faces -= shared.len();
        let moved = std::mem::take(&mut self.vertex_faces[v as usize]);
        for &f in &moved {
            for w in self.faces[f as usize].iter_mut() {
                if *w == v {
                    *w = u;
                }
            }
        }
        self.vertex_faces[u as usize].extend(moved);
        self.alive_vertex[v as usize] = false;
        self.pos[u as usize] = target;
        if let Some(c) = self.colors.as_mut() {
            let (a, b) = (c[u as usize], c[v as usize]);
            c[u as usize] = [0, 1, 2].map(|k| 0.5 * (a[k] + b[k]));
        }
        let qv = self.quadric[v as usize];
        self.quadric[u as usize] += qv;
        self.stamp[u as usize] += 1;
        self.stamp[v as usize] += 1;
        for w in self.neighbors(u) {
            let (a, b) = (u.min(w), u.max(w));
            self.push_edge(a, b);
        }
        true
    }

    fn finish(self) -> TriMesh {
        let mut remap = vec![u32::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        let mut colors = self.colors.as_ref().map(|_| Vec::new());
        let mut triangles = Vec::with_capacity(self.live_faces);
        for (fi, f) in self.faces.iter().enumerate() {
            if !self.alive_face[fi] {
                continue;
            }
            let t = f.map(|v| {
                let slot = &mut remap[v as usize];
                if *slot == u32::MAX {
                    *slot = vertices.len() as u32;
                    vertices.push(self.pos[v as usize]);
                    if let (Some(out), Some(src)) = (colors.as_mut(), self.colors.as_ref()) {
                        out.push(src[v as usize]);
                    }
                }
                *slot
            });
            triangles.push(t);
        }
        TriMesh::from_parts_unchecked(vertices, triangles, colors)
    }
}

fn plane_quadric(normal: &Vec3, point: &Vec3) -> Matrix4<f64> {
    let p = Vector4::new(normal.x, normal.y, normal.z, -normal.dot(point));
    p * p.transpose()
}

fn quadric_error(q: &Matrix4<f64>, p: &Vec3) -> f64 {
    let h = Vector4::new(p.x, p.y, p.z, 1.0);
    (h.transpose() * q * h)[(0, 0)].max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_below_target_is_unchanged() {
        let cube = TriMesh::cuboid(Vec3::repeat(0.5));
        assert_eq!(decimate_mesh(&cube, 200).unwrap(), cube);
    }

    #[test]
    fn icosphere_reaches_budget() {
        let sphere = TriMesh::icosphere(1.0, 3);
        let out = decimate_mesh(&sphere, 200).unwrap();
        assert!(out.face_count() <= 200);
        assert!(out.face_count() > 150);
        TriMesh::new(out.vertices().to_vec(), out.triangles().to_vec()).unwrap();
    }

    #[test]
    fn second_pass_changes_nothing() {
        let once = decimate_mesh(&TriMesh::icosphere(1.0, 3), 200).unwrap();
        let twice = decimate_mesh(&once, 200).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn tiny_target_is_refused() {
        let err = decimate_mesh(&TriMesh::icosphere(1.0, 1), 3).unwrap_err();
        assert!(matches!(err, Error::NonDecimatable { .. }));
    }

    #[test]
    fn open_grid_keeps_its_border() {
        let grid = TriMesh::grid(-1.0, -1.0, 1.0, 1.0, 16);
        let out = decimate_mesh(&grid, 40).unwrap();
        assert!(out.face_count() <= 40);
        let (a, b) = (grid.aabb(), out.aabb());
        assert!((a.min - b.min).norm() < 1e-9 && (a.max - b.max).norm() < 1e-9);
    }

    #[test]
    fn tetrahedron_cannot_drop_below_floor() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let t = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        let tet = TriMesh::new(v, t).unwrap();
        assert_eq!(decimate_mesh(&tet, 4).unwrap(), tet);
        let ico = decimate_mesh(&TriMesh::icosphere(1.0, 0), 4);
        match ico {
            Ok(m) => assert!(m.face_count() >= 4 && m.face_count() <= 4),
            Err(e) => assert!(matches!(e, Error::NonDecimatable { .. })),
        }
    }
}
