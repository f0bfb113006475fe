//! Rigged hand: forward kinematics, skinning, sensors and keypoints.

mod rig;

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use crate::geometry::{Capsule, Transform, TriMesh, Vec3};

pub use rig::{
    Bone, BoneDoc, FingerMapDoc, HandRig, Handedness, RigDocument, Sensor, SensorConfig,
    BONE_AXIS, BONE_COUNT, MAX_INFLUENCES, SENSORS_PER_FINGER,
};

pub const KEYPOINT_COUNT: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
}

impl Finger {
    pub const ALL: [Finger; 5] = [
        Finger::Thumb,
        Finger::Index,
        Finger::Middle,
        Finger::Ring,
        Finger::Pinky,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Finger> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        ["thumb", "index", "middle", "ring", "pinky"][self.index()]
    }
}

/// Live hand state driven by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandPoseState {
    pub wrist: Transform,
    pub trigger: f64,
    /// Effective curl per finger, thumb first.
    pub curls: [f64; 5],
    pub latches: [Option<f64>; 5],
}

impl HandPoseState {
    /// Open hand at `wrist` with nothing latched.
    pub fn open(wrist: Transform) -> Self {
        Self {
            wrist,
            trigger: 0.0,
            curls: [0.0; 5],
            latches: [None; 5],
        }
    }
}

/// Interpolates between `open` and `closed`, returning the endpoints verbatim
/// at 0 and 1.
pub fn curl_rotation(
    open: &UnitQuaternion<f64>,
    closed: &UnitQuaternion<f64>,
    curl: f64,
) -> UnitQuaternion<f64> {
    if curl <= 0.0 {
        *open
    } else if curl >= 1.0 {
        *closed
    } else {
        open.try_slerp(closed, curl, 1e-12)
            .unwrap_or_else(|| open.nlerp(closed, curl))
    }
}

/// World transform of every bone; index 0 is the wrist.
pub fn pose_bones(rig: &HandRig, state: &HandPoseState) -> Vec<Transform> {
    let mut world: Vec<Transform> = Vec::with_capacity(BONE_COUNT);
    for (i, bone) in rig.bones().iter().enumerate() {
        let w = match bone.parent {
            None => state.wrist,
            Some(p) => {
                let curl = rig
                    .finger_of_bone(i)
                    .map_or(0.0, |f| state.curls[f.index()]);
                let rot = curl_rotation(&bone.open, &bone.closed, curl);
                world[p].compose(&Transform::new(rot, bone.rest.translation))
            }
        };
        world.push(w);
    }
    world
}

/// Linear blend skinning of the rig's rest mesh.
pub fn skin_mesh(rig: &HandRig, bone_world: &[Transform]) -> TriMesh {
    assert_eq!(bone_world.len(), BONE_COUNT, "one transform per bone");
    let rest_world = rig.rest_world();
    let inv_rest = rig.inverse_rest_world();
    let deltas: Vec<Option<Transform>> = bone_world
        .iter()
        .zip(rest_world)
        .zip(inv_rest)
        .map(|((w, r), inv)| (w != r).then(|| w.compose(inv)))
        .collect();
    let vertices = rig
        .rest_mesh()
        .vertices()
        .iter()
        .zip(rig.skin_weights())
        .map(|(v, weights)| {
            if weights.iter().all(|&(b, _)| deltas[b].is_none()) {
                return *v;
            }
            weights.iter().fold(Vec3::zeros(), |acc, &(b, w)| {
                let moved = deltas[b].map_or(*v, |d| d.apply(v));
                acc + moved * w
            })
        })
        .collect();
    rig.rest_mesh().with_vertices(vertices)
}

/// Sensors posed into the world, in rig order.
pub fn sensor_world_capsules(rig: &HandRig, bone_world: &[Transform]) -> Vec<(Finger, Capsule)> {
    rig.sensors()
        .iter()
        .map(|s| {
            let finger = rig.finger_of_bone(s.bone).expect("sensor on a finger bone");
            (finger, s.capsule.transformed(&bone_world[s.bone]))
        })
        .collect()
}

/// Wrist, then knuckle/mid/distal/tip for thumb through pinky.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandKeypoints21 {
    pub points: [Vec3; KEYPOINT_COUNT],
}

impl HandKeypoints21 {
    pub fn transformed(&self, t: &Transform) -> HandKeypoints21 {
        HandKeypoints21 {
            points: self.points.map(|p| t.apply(&p)),
        }
    }

    pub fn to_arrays(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| [p.x, p.y, p.z]).collect()
    }
}

pub fn extract_keypoints21(rig: &HandRig, bone_world: &[Transform]) -> HandKeypoints21 {
    let mut points = [Vec3::zeros(); KEYPOINT_COUNT];
    points[0] = bone_world[0].translation;
    for f in Finger::ALL {
        let [p, m, d] = rig.finger_bones(f);
        let base = 1 + 4 * f.index();
        points[base] = bone_world[p].translation;
        points[base + 1] = bone_world[m].translation;
        points[base + 2] = bone_world[d].translation;
        points[base + 3] = bone_world[d].apply(&(BONE_AXIS * rig.bones()[d].length));
    }
    HandKeypoints21 { points }
}
