use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bop::{BopGtEntry, BopGtInfo};
use super::mask::{mask_to_bbox_rle, MaskAnnotation};
use crate::error::{Error, Result};
use crate::geometry::Transform;
use crate::render::{Coverage, FrameBuffers, PinholeCamera};

/// Where an object sits as seen from a camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectViewStats {
    /// Meters from the optical center.
    pub distance: f64,
    /// Radians in (-pi, pi], 0 on the optical axis, positive toward +X.
    pub azimuth: f64,
    /// Radians in [-pi/2, pi/2], positive above the optical axis.
    pub elevation: f64,
    pub visib_fract: f64,
}

impl ObjectViewStats {
    /// From a camera-frame position and a visibility fraction.
    pub fn from_camera_point(p: &crate::geometry::Vec3, visib_fract: f64) -> ObjectViewStats {
        ObjectViewStats {
            distance: p.norm(),
            azimuth: p.x.atan2(p.z),
            elevation: (-p.y).atan2((p.x * p.x + p.z * p.z).sqrt()),
            visib_fract,
        }
    }
}

pub fn visib_fract(visible: usize, alone: usize) -> f64 {
    if alone == 0 {
        0.0
    } else {
        visible as f64 / alone as f64
    }
}

pub fn camera_frame_stats(
    cam: &PinholeCamera,
    obj_id: u32,
    obj_pose: &Transform,
    buffers: &FrameBuffers,
    alone_count: usize,
) -> ObjectViewStats {
    let p = cam.pose.inverse().apply(&obj_pose.translation);
    ObjectViewStats::from_camera_point(&p, visib_fract(buffers.pixel_count(obj_id), alone_count))
}

/// Everything exported about one object in one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub gt: BopGtEntry,
    pub info: BopGtInfo,
    pub mask: MaskAnnotation,
    pub stats: ObjectViewStats,
}

/// Annotations of one (camera, frame) image.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRecord {
    pub frame: usize,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<ObjectRecord>,
}

fn bop_box(b: Option<[u32; 4]>) -> [i64; 4] {
    b.map_or([-1; 4], |b| b.map(i64::from))
}

/// Annotates every object of `objects` in one rendered view.
pub fn annotate_view(
    cam: &PinholeCamera,
    frame: usize,
    objects: &[(u32, Transform)],
    buffers: &FrameBuffers,
    alone: &BTreeMap<u32, Coverage>,
) -> Result<ViewRecord> {
    if (buffers.width, buffers.height) != (cam.width, cam.height) {
        return Err(Error::IndexMismatch(format!(
            "buffers are {}x{}, camera {} is {}x{}",
            buffers.width, buffers.height, cam.id, cam.width, cam.height
        )));
    }
    let records = objects
        .iter()
        .map(|(id, pose)| {
            let cov = alone
                .get(id)
                .ok_or_else(|| Error::IndexMismatch(format!("no alone render for object {id}")))?;
            let mask = mask_to_bbox_rle(&buffers.instance, buffers.width, buffers.height, *id);
            let visible = mask.area as usize;
            let gt = BopGtEntry::new(cam, *id, pose);
            // stats read back the exported translation so files and memory agree
            let p = nalgebra::Vector3::from(gt.cam_t_m2c) / 1000.0;
            let info = BopGtInfo {
                bbox_obj: bop_box(cov.bbox),
                bbox_visib: bop_box((visible > 0).then_some(mask.bbox)),
                px_count_all: cov.count,
                px_count_visib: visible,
                visib_fract: visib_fract(visible, cov.count),
            };
            Ok(ObjectRecord {
                stats: ObjectViewStats::from_camera_point(&p, info.visib_fract),
                gt,
                info,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViewRecord {
        frame,
        width: buffers.width,
        height: buffers.height,
        objects: records,
    })
}
