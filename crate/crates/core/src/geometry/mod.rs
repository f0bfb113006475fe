//! Rigid transforms, triangle meshes, decimation, BVH ray casting and
//! capsule contact queries.

mod bvh;
mod contact;
mod decimate;
pub mod io;
mod mesh;
pub(crate) mod transform;

pub use bvh::{intersect_triangle, Bvh, Ray, RayHit};
pub use contact::{
    capsule_mesh_contact, closest_point_on_triangle, closest_points_segments, segment_mesh_distance,
    segment_triangle_distance, Capsule, Contact,
};
pub use decimate::{decimate_mesh, DEFAULT_TARGET_FACES};
pub use io::load_mesh;
pub use mesh::{triangle_area, Aabb, TriMesh, MIN_TRIANGLE_AREA};
pub use transform::{Transform, Vec3};

use std::sync::Arc;

/// A mesh together with its acceleration structure.
#[derive(Debug, Clone)]
pub struct MeshAsset {
    pub mesh: TriMesh,
    pub bvh: Bvh,
}

impl MeshAsset {
    pub fn new(mesh: TriMesh) -> Arc<Self> {
        let bvh = Bvh::build(&mesh);
        Arc::new(Self { mesh, bvh })
    }
}
