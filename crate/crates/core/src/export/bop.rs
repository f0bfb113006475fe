use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{parse_json, Error, Result};
use crate::geometry::Transform;
use crate::render::{FrameBuffers, PinholeCamera};

/// Depth PNG unit in millimeters.
pub const DEPTH_SCALE: f64 = 0.1;

/// One object's pose in one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BopGtEntry {
    /// Row-major model-to-camera rotation.
    pub cam_R_m2c: [f64; 9],
    /// Millimeters.
    pub cam_t_m2c: [f64; 3],
    pub obj_id: u32,
}

impl BopGtEntry {
    pub fn new(cam: &PinholeCamera, obj_id: u32, obj_pose: &Transform) -> BopGtEntry {
        let m2c = cam.pose.inverse().compose(obj_pose);
        let t = m2c.translation * 1000.0;
        BopGtEntry {
            cam_R_m2c: row_major(&m2c),
            cam_t_m2c: [t.x, t.y, t.z],
            obj_id,
        }
    }

    /// Model-to-camera transform in meters.
    pub fn to_transform(&self) -> Transform {
        let r = nalgebra::Matrix3::from_row_slice(&self.cam_R_m2c);
        let t = nalgebra::Vector3::from(self.cam_t_m2c) / 1000.0;
        Transform::from_rotation_matrix(&r, t)
    }
}

fn row_major(t: &Transform) -> [f64; 9] {
    let m = t.rotation_matrix();
    std::array::from_fn(|k| m[(k / 3, k % 3)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BopCamera {
    pub cam_K: [f64; 9],
    pub depth_scale: f64,
    pub cam_R_w2c: [f64; 9],
    /// Millimeters.
    pub cam_t_w2c: [f64; 3],
}

impl BopCamera {
    pub fn new(cam: &PinholeCamera) -> BopCamera {
        let w2c = cam.pose.inverse();
        let t = w2c.translation * 1000.0;
        BopCamera {
            cam_K: [cam.fx, 0.0, cam.cx, 0.0, cam.fy, cam.cy, 0.0, 0.0, 1.0],
            depth_scale: DEPTH_SCALE,
            cam_R_w2c: row_major(&w2c),
            cam_t_w2c: [t.x, t.y, t.z],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BopGtInfo {
    /// `[x, y, w, h]` of the unoccluded object, `-1`s when outside the image.
    pub bbox_obj: [i64; 4],
    pub bbox_visib: [i64; 4],
    pub px_count_all: usize,
    pub px_count_visib: usize,
    pub visib_fract: f64,
}

/// The three index documents of one BOP scene, keyed by image id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BopScene {
    pub gt: BTreeMap<u32, Vec<BopGtEntry>>,
    pub camera: BTreeMap<u32, BopCamera>,
    pub info: BTreeMap<u32, Vec<BopGtInfo>>,
}

pub const SCENE_GT: &str = "scene_gt.json";
pub const SCENE_CAMERA: &str = "scene_camera.json";
pub const SCENE_GT_INFO: &str = "scene_gt_info.json";

impl BopScene {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join(SCENE_GT), &self.gt)?;
        write_json(&dir.join(SCENE_CAMERA), &self.camera)?;
        write_json(&dir.join(SCENE_GT_INFO), &self.info)
    }

    pub fn read(dir: &Path) -> Result<BopScene> {
        let scene = BopScene {
            gt: read_json(&dir.join(SCENE_GT))?,
            camera: read_json(&dir.join(SCENE_CAMERA))?,
            info: read_json(&dir.join(SCENE_GT_INFO))?,
        };
        for (id, entries) in &scene.gt {
            if scene.info.get(id).map(Vec::len) != Some(entries.len()) {
                return Err(Error::IndexMismatch(format!(
                    "{}: image {id} has no matching {SCENE_GT_INFO} entries",
                    dir.display()
                )));
            }
        }
        Ok(scene)
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text)
}

/// Depth in meters to 16-bit PNG units; 0 for no hit or out of range.
pub fn depth_to_u16(depth_m: f64) -> u16 {
    let v = (depth_m * 1000.0 / DEPTH_SCALE).round();
    if depth_m > 0.0 && v <= u16::MAX as f64 {
        v as u16
    } else {
        0
    }
}

pub fn write_depth_png(fb: &FrameBuffers, path: &Path) -> Result<()> {
    let data: Vec<u16> = fb.depth.iter().map(|&d| depth_to_u16(d)).collect();
    let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(fb.width, fb.height, data).expect("sized");
    img.save(path).map_err(|e| Error::Image {
        path: path.into(),
        message: e.to_string(),
    })
}

/// Raw 16-bit values of a depth PNG, row-major.
pub fn read_depth_png(path: &Path) -> Result<(u32, u32, Vec<u16>)> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.into(),
        message: e.to_string(),
    })?;
    let img = img.into_luma16();
    Ok((img.width(), img.height(), img.into_raw()))
}
