use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Transform, Vec3};

/// Triangles with area at or below this are rejected on load.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        Aabb {
            min: self.min - Vec3::repeat(margin),
            max: self.max + Vec3::repeat(margin),
        }
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.min[i] && other.max[i] <= self.max[i])
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    /// Bounds of this box after a rigid transform (box of the 8 transformed corners).
    pub fn transformed(&self, t: &Transform) -> Aabb {
        let mut out = Aabb::empty();
        for i in 0..8 {
            let c = Vec3::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            );
            out.grow(&t.apply(&c));
        }
        out
    }

    /// Slab test; returns the entry distance if the ray meets the box within `[0, t_max]`.
    pub fn ray_entry(&self, origin: &Vec3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            if inv_dir[i].is_infinite() {
                // parallel to the slab
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if lo > t0 {
                t0 = lo;
            }
            if hi < t1 {
                t1 = hi;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// Indexed triangle mesh in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    colors: Option<Vec<[f32; 3]>>,
}

impl TriMesh {
    /// Validates indices and drops nothing: degenerate triangles are an error.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        Self::with_colors(vertices, triangles, None)
    }

    pub fn with_colors(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        colors: Option<Vec<[f32; 3]>>,
    ) -> Result<Self> {
        let n = vertices.len();
        if let Some(c) = &colors {
            if c.len() != n {
                return Err(Error::InvalidMesh(format!(
                    "{} colors for {} vertices",
                    c.len(),
                    n
                )));
            }
        }
        if let Some(bad) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {bad} is not finite")));
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {i} references vertex beyond {n}"
                )));
            }
            let area = triangle_area(&vertices[t[0] as usize], &vertices[t[1] as usize], &vertices[t[2] as usize]);
            if area <= MIN_TRIANGLE_AREA {
                return Err(Error::InvalidMesh(format!(
                    "triangle {i} is degenerate (area {area:e})"
                )));
            }
        }
        Ok(Self {
            vertices,
            triangles,
            colors,
        })
    }

    /// Like [`TriMesh::new`] but silently removes degenerate triangles.
    pub fn new_dropping_degenerate(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        let triangles = triangles
            .into_iter()
            .filter(|t| {
                t.iter().all(|&v| (v as usize) < n)
                    && triangle_area(
                        &vertices[t[0] as usize],
                        &vertices[t[1] as usize],
                        &vertices[t[2] as usize],
                    ) > MIN_TRIANGLE_AREA
            })
            .collect();
        Self::new(vertices, triangles)
    }

    pub(crate) fn from_parts_unchecked(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        colors: Option<Vec<[f32; 3]>>,
    ) -> Self {
        Self {
            vertices,
            triangles,
            colors,
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn colors(&self) -> Option<&[[f32; 3]]> {
        self.colors.as_deref()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Bounds of the mesh placed at `pose` (exact, over all vertices).
    pub fn world_aabb(&self, pose: &Transform) -> Aabb {
        let mut b = Aabb::empty();
        for v in &self.vertices {
            b.grow(&pose.apply(v));
        }
        b
    }

    pub fn transformed(&self, t: &Transform) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| t.apply(v)).collect(),
            triangles: self.triangles.clone(),
            colors: self.colors.clone(),
        }
    }

    /// Same topology, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> TriMesh {
        assert_eq!(vertices.len(), self.vertices.len());
        TriMesh {
            vertices,
            triangles: self.triangles.clone(),
            colors: self.colors.clone(),
        }
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.face_count())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                triangle_area(&a, &b, &c)
            })
            .sum()
    }

    /// Axis-aligned box centered at the origin.
    pub fn cuboid(half_extents: Vec3) -> TriMesh {
        let h = half_extents;
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { -h.x } else { h.x },
                    if i & 2 == 0 { -h.y } else { h.y },
                    if i & 4 == 0 { -h.z } else { h.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        TriMesh::from_parts_unchecked(vertices, triangles, None)
    }

    /// Recursively subdivided icosahedron; `subdivisions = 3` gives 1280 faces.
    pub fn icosphere(radius: f64, subdivisions: u32) -> TriMesh {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<Vec3> = [
            (-1.0, phi, 0.0), (1.0, phi, 0.0), (-1.0, -phi, 0.0), (1.0, -phi, 0.0),
            (0.0, -1.0, phi), (0.0, 1.0, phi), (0.0, -1.0, -phi), (0.0, 1.0, -phi),
            (phi, 0.0, -1.0), (phi, 0.0, 1.0), (-phi, 0.0, -1.0), (-phi, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut tris: Vec<[u32; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint = std::collections::HashMap::new();
            let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                    (verts.len() - 1) as u32
                })
            };
            let mut next = Vec::with_capacity(tris.len() * 4);
            for [a, b, c] in tris {
                let ab = mid(a, b, &mut verts);
                let bc = mid(b, c, &mut verts);
                let ca = mid(c, a, &mut verts);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            tris = next;
        }
        let vertices = verts.into_iter().map(|v| v * radius).collect();
        TriMesh::from_parts_unchecked(vertices, tris, None)
    }

    /// Latitude/longitude sphere with poles on ±z. Pole fans list the pole
    /// vertex first.
    pub fn uv_sphere(radius: f64, slices: u32, stacks: u32) -> TriMesh {
        assert!(slices >= 3 && stacks >= 2);
        let mut vertices = vec![Vec3::new(0.0, 0.0, -radius)];
        for i in 1..stacks {
            let polar = PI * i as f64 / stacks as f64;
            let z = -radius * polar.cos();
            let r = radius * polar.sin();
            for j in 0..slices {
                let az = 2.0 * PI * j as f64 / slices as f64;
                vertices.push(Vec3::new(r * az.cos(), r * az.sin(), z));
            }
        }
        vertices.push(Vec3::new(0.0, 0.0, radius));
        let top = (vertices.len() - 1) as u32;
        let ring = |i: u32, j: u32| 1 + (i - 1) * slices + (j % slices);
        let mut triangles = Vec::new();
        for j in 0..slices {
            triangles.push([0, ring(1, j + 1), ring(1, j)]);
        }
        for i in 1..stacks - 1 {
            for j in 0..slices {
                let (a, b) = (ring(i, j), ring(i, j + 1));
                let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            }
        }
        for j in 0..slices {
            triangles.push([top, ring(stacks - 1, j), ring(stacks - 1, j + 1)]);
        }
        TriMesh::from_parts_unchecked(vertices, triangles, None)
    }

    /// Closed cylinder along z from `z = 0` to `z = height`.
    pub fn cylinder(radius: f64, height: f64, segments: u32) -> TriMesh {
        assert!(segments >= 3);
        let mut vertices = vec![Vec3::zeros(), Vec3::new(0.0, 0.0, height)];
        for j in 0..segments {
            let a = 2.0 * PI * j as f64 / segments as f64;
            let (x, y) = (radius * a.cos(), radius * a.sin());
            vertices.push(Vec3::new(x, y, 0.0));
            vertices.push(Vec3::new(x, y, height));
        }
        let lo = |j: u32| 2 + 2 * (j % segments);
        let hi = |j: u32| 3 + 2 * (j % segments);
        let mut triangles = Vec::new();
        for j in 0..segments {
            triangles.push([0, lo(j + 1), lo(j)]);
            triangles.push([1, hi(j), hi(j + 1)]);
            triangles.push([lo(j), lo(j + 1), hi(j + 1)]);
            triangles.push([lo(j), hi(j + 1), hi(j)]);
        }
        TriMesh::from_parts_unchecked(vertices, triangles, None)
    }

    /// Two-triangle rectangle in the z = 0 plane, normal +z.
    pub fn quad(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> TriMesh {
        let vertices = vec![
            Vec3::new(min_x, min_y, 0.0),
            Vec3::new(max_x, min_y, 0.0),
            Vec3::new(max_x, max_y, 0.0),
            Vec3::new(min_x, max_y, 0.0),
        ];
        TriMesh::from_parts_unchecked(vertices, vec![[0, 1, 2], [0, 2, 3]], None)
    }

    /// Uniform subdivision of a quad into `n × n` cells, normal +z.
    pub fn grid(min_x: f64, min_y: f64, max_x: f64, max_y: f64, n: u32) -> TriMesh {
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let x = min_x + (max_x - min_x) * i as f64 / n as f64;
                let y = min_y + (max_y - min_y) * j as f64 / n as f64;
                vertices.push(Vec3::new(x, y, 0.0));
            }
        }
        let idx = |i: u32, j: u32| j * (n + 1) + i;
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        TriMesh::from_parts_unchecked(vertices, triangles, None)
    }
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_face_counts() {
        assert_eq!(TriMesh::cuboid(Vec3::repeat(0.5)).face_count(), 12);
        assert_eq!(TriMesh::icosphere(1.0, 3).face_count(), 1280);
        assert_eq!(TriMesh::uv_sphere(1.0, 16, 8).face_count(), 16 * 2 * 7);
        assert_eq!(TriMesh::cylinder(1.0, 1.0, 12).face_count(), 48);
    }

    #[test]
    fn primitives_validate() {
        for m in [
            TriMesh::cuboid(Vec3::new(0.1, 0.2, 0.3)),
            TriMesh::icosphere(0.05, 2),
            TriMesh::uv_sphere(0.5, 32, 16),
            TriMesh::cylinder(0.03, 0.1, 32),
            TriMesh::grid(-1.0, -1.0, 1.0, 1.0, 4),
        ] {
            TriMesh::new(m.vertices().to_vec(), m.triangles().to_vec()).unwrap();
        }
    }

    #[test]
    fn cuboid_is_outward_facing() {
        let m = TriMesh::cuboid(Vec3::repeat(0.5));
        for i in 0..m.face_count() {
            let [a, b, c] = m.triangle(i);
            let n = (b - a).cross(&(c - a));
            let centroid = (a + b + c) / 3.0;
            assert!(n.dot(&centroid) > 0.0, "face {i} points inward");
        }
    }

    #[test]
    fn rejects_bad_index_and_degenerate() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        let collinear = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        assert!(TriMesh::new(collinear, vec![[0, 1, 2]]).is_err());
        assert!(TriMesh::new(v, vec![[0, 1, 2]]).is_ok());
    }

    #[test]
    fn ray_entry_hits_box() {
        let b = Aabb {
            min: Vec3::repeat(-0.5),
            max: Vec3::repeat(0.5),
        };
        let dir = Vec3::z();
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let t = b.ray_entry(&Vec3::new(0.0, 0.0, -1.0), &inv, f64::INFINITY).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert!(b.ray_entry(&Vec3::new(2.0, 0.0, -1.0), &inv, f64::INFINITY).is_none());
        // on a face plane, parallel to it
        assert!(b.ray_entry(&Vec3::new(0.5, 0.0, -1.0), &inv, f64::INFINITY).is_some());
        assert!(b.ray_entry(&Vec3::new(-0.5, 0.5, -1.0), &inv, f64::INFINITY).is_some());
    }
}
