use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Transform;
use crate::hand::{extract_keypoints21, pose_bones, Finger, HandPoseState, HandRig, KEYPOINT_COUNT};
use crate::render::PinholeCamera;
use crate::session::SessionRecording;

pub const HAND_DOC_VERSION: &str = "1";

/// Keypoint names in export order.
pub fn keypoint_names() -> Vec<String> {
    let mut names = vec!["wrist".to_string()];
    for f in Finger::ALL {
        for joint in ["mcp", "pip", "dip", "tip"] {
            names.push(format!("{}_{joint}", f.name()));
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandView {
    pub camera_id: u32,
    /// Camera frame, meters.
    pub keypoints_camera: Vec<[f64; 3]>,
    /// Pixels; null behind the camera or outside the image.
    pub keypoints_2d: Vec<Option<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandFrame {
    pub frame: usize,
    pub wrist: Transform,
    pub trigger: f64,
    /// Thumb to pinky.
    pub curls: [f64; 5],
    /// World frame, meters.
    pub keypoints_world: Vec<[f64; 3]>,
    pub views: Vec<HandView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandDocument {
    pub version: String,
    pub keypoint_names: Vec<String>,
    pub cameras: Vec<PinholeCamera>,
    pub frames: Vec<HandFrame>,
}

pub fn export_hand(session: &SessionRecording, rig: &HandRig, cameras: &[PinholeCamera]) -> Result<HandDocument> {
    let frames = (0..session.len())
        .map(|k| {
            let snap = session.replay(k)?;
            let mut state = HandPoseState::open(snap.wrist);
            state.trigger = snap.trigger;
            state.curls = snap.curls;
            let world = extract_keypoints21(rig, &pose_bones(rig, &state));
            let views = cameras
                .iter()
                .map(|cam| {
                    let local = world.transformed(&cam.pose.inverse());
                    HandView {
                        camera_id: cam.id,
                        keypoints_camera: local.to_arrays(),
                        keypoints_2d: world.points.iter().map(|p| cam.project(p)).collect(),
                    }
                })
                .collect();
            Ok(HandFrame {
                frame: k,
                wrist: snap.wrist,
                trigger: snap.trigger,
                curls: snap.curls,
                keypoints_world: world.to_arrays(),
                views,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(frames.iter().all(|f| f.keypoints_world.len() == KEYPOINT_COUNT));
    Ok(HandDocument {
        version: HAND_DOC_VERSION.into(),
        keypoint_names: keypoint_names(),
        cameras: cameras.to_vec(),
        frames,
    })
}
