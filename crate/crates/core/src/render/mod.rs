//! Pinhole cameras and a BVH ray-cast renderer producing RGB, z-depth and
//! instance buffers.

mod camera;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::engine::{Scene, WorldState};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, MeshAsset, Transform, Vec3};
use crate::hand::{pose_bones, skin_mesh, HandPoseState, HandRig};
use crate::session::FrameSnapshot;

pub use camera::{look_at_pose, sample_cameras_sphere, CameraRig, Intrinsics, PinholeCamera, SphereRig};

/// Instance id of the hand in every buffer.
pub const HAND_INSTANCE_ID: u32 = 255;
pub const HAND_COLOR: [f32; 3] = [0.87, 0.69, 0.58];
pub const AMBIENT: f64 = 0.2;

/// Unit vector toward the directional light, world frame.
pub fn light_direction() -> Vec3 {
    Vec3::new(-0.3, -0.4, 1.0).normalize()
}

/// One mesh placed in a render scene.
#[derive(Debug, Clone)]
pub struct RenderItem {
    pub id: u32,
    pub color: [f32; 3],
    pub asset: Arc<MeshAsset>,
    pub pose: Transform,
    inverse: Transform,
    bounds: Aabb,
}

impl RenderItem {
    pub fn new(id: u32, color: [f32; 3], asset: Arc<MeshAsset>, pose: Transform) -> RenderItem {
        let bounds = asset.mesh.world_aabb(&pose);
        RenderItem {
            id,
            color,
            inverse: pose.inverse(),
            asset,
            pose,
            bounds,
        }
    }
}

/// Immutable set of meshes to render.
#[derive(Debug, Clone, Default)]
pub struct RenderScene {
    pub items: Vec<RenderItem>,
}

impl RenderScene {
    pub fn new() -> RenderScene {
        RenderScene::default()
    }

    pub fn push(&mut self, item: RenderItem) {
        self.items.push(item);
    }

    /// Full-resolution objects plus the skinned hand of a live world.
    pub fn from_world(world: &WorldState) -> RenderScene {
        let mut s = RenderScene::new();
        for o in &world.objects {
            s.push(RenderItem::new(o.id, o.color, o.render.clone(), o.pose));
        }
        s.push(hand_item(&world.rig, &world.hand));
        s
    }

    /// Scene of a recorded frame; objects come from `scene`'s catalog.
    pub fn from_snapshot(scene: &Scene, snap: &FrameSnapshot) -> Result<RenderScene> {
        let mut s = RenderScene::new();
        for &(id, pose) in &snap.objects {
            let entry = scene
                .catalog
                .iter()
                .find(|c| c.spec.id == id)
                .ok_or(Error::UnknownObject(id))?;
            let color = entry.spec.color.unwrap_or_else(|| crate::engine::palette(id));
            s.push(RenderItem::new(id, color, entry.render.clone(), pose));
        }
        let mut hand = HandPoseState::open(snap.wrist);
        hand.trigger = snap.trigger;
        hand.curls = snap.curls;
        s.push(hand_item(&scene.rig, &hand));
        Ok(s)
    }

    pub fn find(&self, id: u32) -> Option<&RenderItem> {
        self.items.iter().find(|i| i.id == id)
    }

    /// The scene with only item `id`.
    pub fn only(&self, id: u32) -> Result<RenderScene> {
        let item = self.find(id).ok_or(Error::UnknownObject(id))?;
        Ok(RenderScene {
            items: vec![item.clone()],
        })
    }
}

fn hand_item(rig: &HandRig, state: &HandPoseState) -> RenderItem {
    let mesh = skin_mesh(rig, &pose_bones(rig, state));
    RenderItem::new(HAND_INSTANCE_ID, HAND_COLOR, MeshAsset::new(mesh), Transform::identity())
}

/// Per-pixel outputs of one camera view, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffers {
    pub width: u32,
    pub height: u32,
    /// Interleaved 8-bit RGB.
    pub rgb: Vec<u8>,
    /// Z-depth in meters, 0 where nothing was hit.
    pub depth: Vec<f64>,
    /// 0 background, object ids, [`HAND_INSTANCE_ID`] for the hand.
    pub instance: Vec<u32>,
}

impl FrameBuffers {
    pub fn empty(width: u32, height: u32) -> FrameBuffers {
        let n = (width * height) as usize;
        FrameBuffers {
            width,
            height,
            rgb: vec![0; 3 * n],
            depth: vec![0.0; n],
            instance: vec![0; n],
        }
    }

    pub fn index(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn pixel_count(&self, id: u32) -> usize {
        self.instance.iter().filter(|&&i| i == id).count()
    }

    pub fn save_rgb_png(&self, path: &Path) -> Result<()> {
        image::save_buffer(path, &self.rgb, self.width, self.height, image::ColorType::Rgb8).map_err(|e| {
            Error::Image {
                path: path.into(),
                message: e.to_string(),
            }
        })
    }
}

#[derive(Clone, Copy)]
struct Shaded {
    depth: f64,
    id: u32,
    rgb: [u8; 3],
}

const MISS: Shaded = Shaded {
    depth: 0.0,
    id: 0,
    rgb: [0; 3],
};

/// Ray-casts one view: nearest hit per pixel center over all items.
pub fn render_frame(scene: &RenderScene, cam: &PinholeCamera) -> FrameBuffers {
    trace(cam, |row| render_row(scene, cam, row))
}

/// Pixels covered by item `id` when it is rendered alone.
pub fn render_object_alone(scene: &RenderScene, cam: &PinholeCamera, id: u32) -> Result<usize> {
    let alone = scene.only(id)?;
    Ok(render_frame(&alone, cam).pixel_count(id))
}

/// Pixel footprint of one item rendered alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Coverage {
    pub count: usize,
    /// Tight `[x, y, w, h]`, `None` when no pixel is covered.
    pub bbox: Option<[u32; 4]>,
}

/// [`render_object_alone`] for every item at once.
pub fn alone_pixel_counts(scene: &RenderScene, cam: &PinholeCamera) -> BTreeMap<u32, usize> {
    alone_coverage(scene, cam).into_iter().map(|(id, c)| (id, c.count)).collect()
}

/// Count and bounding box of every item as if rendered alone.
pub fn alone_coverage(scene: &RenderScene, cam: &PinholeCamera) -> BTreeMap<u32, Coverage> {
    // per row: (count, min x, max x) per item
    let rows = map_rows(cam.height, |y| {
        let mut acc = vec![(0usize, u32::MAX, 0u32); scene.items.len()];
        for x in 0..cam.width {
            let ray = cam.pixel_ray(x, y);
            for (k, item) in scene.items.iter().enumerate() {
                if hit_item(item, &ray, f64::INFINITY).is_some() {
                    let a = &mut acc[k];
                    a.0 += 1;
                    a.1 = a.1.min(x);
                    a.2 = a.2.max(x);
                }
            }
        }
        acc
    });
    let mut out = BTreeMap::new();
    for (k, item) in scene.items.iter().enumerate() {
        let mut count = 0;
        let (mut x0, mut x1, mut y0, mut y1) = (u32::MAX, 0, u32::MAX, 0);
        for (y, row) in rows.iter().enumerate() {
            let (c, lo, hi) = row[k];
            if c > 0 {
                count += c;
                x0 = x0.min(lo);
                x1 = x1.max(hi);
                y0 = y0.min(y as u32);
                y1 = y1.max(y as u32);
            }
        }
        let bbox = (count > 0).then(|| [x0, y0, x1 - x0 + 1, y1 - y0 + 1]);
        out.insert(item.id, Coverage { count, bbox });
    }
    out
}

fn trace(cam: &PinholeCamera, row: impl Fn(u32) -> Vec<Shaded> + Sync + Send) -> FrameBuffers {
    let rows = map_rows(cam.height, row);
    let mut fb = FrameBuffers::empty(cam.width, cam.height);
    for (i, s) in rows.into_iter().flatten().enumerate() {
        fb.depth[i] = s.depth;
        fb.instance[i] = s.id;
        fb.rgb[3 * i..3 * i + 3].copy_from_slice(&s.rgb);
    }
    fb
}

#[cfg(feature = "parallel")]
fn map_rows<T: Send>(height: u32, f: impl Fn(u32) -> T + Sync + Send) -> Vec<T> {
    (0..height).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_rows<T>(height: u32, f: impl Fn(u32) -> T) -> Vec<T> {
    (0..height).map(f).collect()
}

fn hit_item(item: &RenderItem, ray: &crate::geometry::Ray, t_max: f64) -> Option<crate::geometry::RayHit> {
    let d = ray.direction();
    let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
    item.bounds.ray_entry(&ray.origin, &inv, t_max)?;
    item.asset.bvh.raycast_local(&ray.transformed(&item.inverse), t_max)
}

fn render_row(scene: &RenderScene, cam: &PinholeCamera, y: u32) -> Vec<Shaded> {
    let light = light_direction();
    (0..cam.width)
        .map(|x| {
            let ray = cam.pixel_ray(x, y);
            let mut best: Option<(usize, crate::geometry::RayHit)> = None;
            for (k, item) in scene.items.iter().enumerate() {
                let limit = best.as_ref().map_or(f64::INFINITY, |b| b.1.distance);
                if let Some(h) = hit_item(item, &ray, limit) {
                    if best.as_ref().is_none_or(|b| h.distance < b.1.distance) {
                        best = Some((k, h));
                    }
                }
            }
            let Some((k, hit)) = best else { return MISS };
            let item = &scene.items[k];
            let mesh = &item.asset.mesh;
            let [a, b, c] = mesh.triangle(hit.triangle);
            let mut n = item.pose.apply_vector(&(b - a).cross(&(c - a)).normalize());
            if n.dot(&ray.direction()) > 0.0 {
                n = -n;
            }
            let base = match mesh.colors() {
                Some(cols) => {
                    let [i0, i1, i2] = mesh.triangles()[hit.triangle].map(|i| i as usize);
                    let (u, v) = hit.uv;
                    let w = 1.0 - u - v;
                    std::array::from_fn(|ch| {
                        (w * cols[i0][ch] as f64 + u * cols[i1][ch] as f64 + v * cols[i2][ch] as f64) as f32
                    })
                }
                None => item.color,
            };
            let shade = AMBIENT + (1.0 - AMBIENT) * n.dot(&light).max(0.0);
            let rgb = base.map(|c| (c as f64 * shade * 255.0).round().clamp(0.0, 255.0) as u8);
            Shaded {
                depth: hit.distance / cam.pixel_direction(x, y).norm(),
                id: item.id,
                rgb,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TriMesh;

    fn cam(w: u32, h: u32) -> PinholeCamera {
        PinholeCamera::new(
            0,
            Intrinsics {
                width: w,
                height: h,
                fx: w as f64,
                fy: w as f64,
                cx: w as f64 / 2.0,
                cy: h as f64 / 2.0,
            },
            Transform::identity(),
        )
        .unwrap()
    }

    #[test]
    fn empty_scene_is_black() {
        let fb = render_frame(&RenderScene::new(), &cam(16, 12));
        assert!(fb.rgb.iter().all(|&v| v == 0));
        assert!(fb.depth.iter().all(|&d| d == 0.0));
        assert!(fb.instance.iter().all(|&i| i == 0));
    }

    #[test]
    fn facing_quad_depth_is_flat() {
        let mut s = RenderScene::new();
        let quad = MeshAsset::new(TriMesh::quad(-5.0, -5.0, 5.0, 5.0));
        s.push(RenderItem::new(3, [1.0; 3], quad, Transform::from_translation(0.0, 0.0, 2.0)));
        let fb = render_frame(&s, &cam(20, 10));
        assert!(fb.depth.iter().all(|&d| (d - 2.0).abs() < 1e-12));
        assert_eq!(fb.pixel_count(3), 200);
    }

    #[test]
    fn nearer_item_wins() {
        let mut s = RenderScene::new();
        let quad = MeshAsset::new(TriMesh::quad(-5.0, -5.0, 5.0, 5.0));
        s.push(RenderItem::new(1, [1.0; 3], quad.clone(), Transform::from_translation(0.0, 0.0, 3.0)));
        s.push(RenderItem::new(2, [1.0; 3], quad, Transform::from_translation(0.0, 0.0, 1.0)));
        let c = cam(8, 8);
        let fb = render_frame(&s, &c);
        assert_eq!(fb.pixel_count(2), 64);
        let alone = alone_pixel_counts(&s, &c);
        assert_eq!(alone[&1], 64);
        assert_eq!(render_object_alone(&s, &c, 1).unwrap(), 64);
        assert!(matches!(render_object_alone(&s, &c, 9), Err(Error::UnknownObject(9))));
    }
}
