//! JSON messages exchanged over the control socket, one per text frame.

use hoisim_core::engine::{GraspEvent, WorldState};
use hoisim_core::geometry::Transform;
use hoisim_core::hand::Finger;
use serde::{Deserialize, Serialize};

/// Client to service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMessage {
    /// Stages the controller input for the next tick.
    HandPose {
        /// Wrist position, meters.
        position: [f64; 3],
        /// Wrist orientation `[w, x, y, z]`; normalized on receipt.
        quaternion: [f64; 4],
        trigger: f64,
    },
    PlaceObjects {
        seed: u64,
    },
    StartRecording {},
    StopRecording {},
    SaveSession {
        /// File name or path; relative paths resolve in the session directory.
        #[serde(default)]
        path: Option<String>,
    },
    Reset {},
}

impl ControlMessage {
    pub fn parse(text: &str) -> Result<ControlMessage, String> {
        let msg: ControlMessage = serde_json::from_str(text).map_err(|e| e.to_string())?;
        msg.validate()?;
        Ok(msg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if let ControlMessage::HandPose {
            position,
            quaternion,
            trigger,
        } = self
        {
            if !position.iter().chain(quaternion).all(|v| v.is_finite()) {
                return Err("hand_pose: position and quaternion must be finite".into());
            }
            if quaternion.iter().map(|v| v * v).sum::<f64>() < 1e-12 {
                return Err("hand_pose: quaternion has zero length".into());
            }
            if !(0.0..=1.0).contains(trigger) {
                return Err(format!("hand_pose: trigger {trigger} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ControlMessage::HandPose { .. } => "hand_pose",
            ControlMessage::PlaceObjects { .. } => "place_objects",
            ControlMessage::StartRecording {} => "start_recording",
            ControlMessage::StopRecording {} => "stop_recording",
            ControlMessage::SaveSession { .. } => "save_session",
            ControlMessage::Reset {} => "reset",
        }
    }

    pub fn hand_pose(wrist: &Transform, trigger: f64) -> ControlMessage {
        ControlMessage::HandPose {
            position: wrist.translation_array(),
            quaternion: wrist.wxyz(),
            trigger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub wrist: Transform,
    pub trigger: f64,
    pub curls: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: u32,
    pub pose: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraspLabel {
    Free,
    Grasped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspSummary {
    pub state: GraspLabel,
    pub object: Option<u32>,
}

/// World snapshot broadcast after every simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub frame: u64,
    pub time: f64,
    pub hand: HandState,
    pub objects: Vec<ObjectState>,
    pub grasp: GraspSummary,
    pub contacts: Vec<(Finger, u32)>,
    /// Events raised during this step.
    pub events: Vec<GraspEvent>,
    pub recording: bool,
}

impl StateMessage {
    pub fn from_world(world: &WorldState, recording: bool) -> StateMessage {
        let object = world.grasp.object();
        StateMessage {
            frame: world.frame,
            time: world.time,
            hand: HandState {
                wrist: world.hand.wrist,
                trigger: world.hand.trigger,
                curls: world.hand.curls,
            },
            objects: world.objects.iter().map(|o| ObjectState { id: o.id, pose: o.pose }).collect(),
            grasp: GraspSummary {
                state: if object.is_some() { GraspLabel::Grasped } else { GraspLabel::Free },
                object,
            },
            contacts: world.contacts.iter().copied().collect(),
            events: world.events.clone(),
            recording,
        }
    }
}

/// Service to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(StateMessage),
    Ack { command: String },
    RecordingStopped { frames: usize },
    SessionSaved { path: String, frames: usize },
    Error { reason: String },
}

impl ServerMessage {
    pub fn error(reason: impl Into<String>) -> ServerMessage {
        ServerMessage::Error { reason: reason.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// Body of `GET /meshes/<id>`: a display proxy in the object frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPayload {
    pub id: u32,
    pub name: String,
    pub color: [f32; 3],
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}
