use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hoisim_core::engine::{palette, ControllerInput, Scene, WorldState};
use hoisim_core::geometry::Transform;
use hoisim_core::session::{SessionRecording, SESSION_EXTENSION};

use crate::protocol::{ControlMessage, MeshPayload, ServerMessage, StateMessage};

/// The authoritative world plus staged input and recording state.
///
/// Messages only stage or switch state; the world advances in [`tick`](Self::tick).
#[derive(Debug)]
pub struct Simulation {
    scene: Scene,
    seed: u64,
    world: WorldState,
    staged: Option<ControllerInput>,
    held: ControllerInput,
    recording: Option<Recording>,
    finished: Option<SessionRecording>,
    session_dir: PathBuf,
    saved: usize,
}

#[derive(Debug)]
struct Recording {
    session: SessionRecording,
    first_frame: u64,
}

impl Simulation {
    pub fn new(scene: Scene, seed: u64, session_dir: &Path) -> hoisim_core::Result<Simulation> {
        let world = scene.place(seed)?;
        let held = ControllerInput::new(world.hand.wrist, 0.0);
        Ok(Simulation {
            scene,
            seed,
            world,
            staged: None,
            held,
            recording: None,
            finished: None,
            session_dir: session_dir.to_path_buf(),
            saved: 0,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_recording(&self) -> bool {
        self.recording.is_some()
    }

    pub fn staged(&self) -> Option<&ControllerInput> {
        self.staged.as_ref()
    }

    /// Applies one message; hand poses are only staged.
    pub fn handle(&mut self, msg: ControlMessage) -> Option<ServerMessage> {
        if let Err(reason) = msg.validate() {
            return Some(ServerMessage::error(reason));
        }
        let ack = |m: &ControlMessage| {
            Some(ServerMessage::Ack {
                command: m.kind().into(),
            })
        };
        match &msg {
            ControlMessage::HandPose {
                position,
                quaternion,
                trigger,
            } => {
                let wrist = Transform::from_wxyz(*quaternion, *position);
                self.staged = Some(ControllerInput::new(wrist, *trigger));
                None
            }
            ControlMessage::PlaceObjects { seed } => match self.replace_world(*seed) {
                Ok(()) => ack(&msg),
                Err(e) => Some(ServerMessage::error(e.to_string())),
            },
            ControlMessage::Reset {} => match self.replace_world(self.seed) {
                Ok(()) => ack(&msg),
                Err(e) => Some(ServerMessage::error(e.to_string())),
            },
            ControlMessage::StartRecording {} => {
                if self.recording.is_some() {
                    return Some(ServerMessage::error("already recording"));
                }
                self.recording = Some(Recording {
                    session: SessionRecording::begin(&self.scene, &self.world),
                    first_frame: self.world.frame + 1,
                });
                ack(&msg)
            }
            ControlMessage::StopRecording {} => match self.stop_recording() {
                Some(frames) => Some(ServerMessage::RecordingStopped { frames }),
                None => Some(ServerMessage::error("not recording")),
            },
            ControlMessage::SaveSession { path } => Some(self.save(path.as_deref())),
        }
    }

    fn stop_recording(&mut self) -> Option<usize> {
        let r = self.recording.take()?;
        let frames = r.session.len();
        self.finished = Some(r.session);
        Some(frames)
    }

    /// New placement; frame numbering continues and any recording ends.
    fn replace_world(&mut self, seed: u64) -> hoisim_core::Result<()> {
        let mut world = self.scene.place(seed)?;
        world.frame = self.world.frame;
        world.time = self.world.time;
        self.stop_recording();
        self.seed = seed;
        self.held = ControllerInput::new(world.hand.wrist, 0.0);
        self.staged = None;
        self.world = world;
        Ok(())
    }

    fn save(&mut self, path: Option<&str>) -> ServerMessage {
        let Some(session) = self.recording.as_ref().map(|r| &r.session).or(self.finished.as_ref()) else {
            return ServerMessage::error("no recording to save");
        };
        let target = match path {
            Some(p) => self.session_dir.join(p),
            None => self
                .session_dir
                .join(format!("session-{:03}{SESSION_EXTENSION}", self.saved)),
        };
        if let Some(parent) = target.parent() {
            if let Err(e) = std::fs::create_dir_all(parent) {
                return ServerMessage::error(format!("{}: {e}", parent.display()));
            }
        }
        match session.save(&target) {
            Ok(()) => {
                self.saved += 1;
                ServerMessage::SessionSaved {
                    path: target.display().to_string(),
                    frames: session.len(),
                }
            }
            Err(e) => ServerMessage::error(e.to_string()),
        }
    }

    /// One fixed step with the latest staged input (or the previous one).
    pub fn tick(&mut self) -> StateMessage {
        if let Some(input) = self.staged.take() {
            self.held = input;
        }
        self.world.step(&self.held);
        if let Some(r) = &mut self.recording {
            if let Err(e) = r.session.record_frame_at(&self.world, r.first_frame) {
                log::error!("recording stopped: {e}");
                self.stop_recording();
            }
        }
        StateMessage::from_world(&self.world, self.recording.is_some())
    }
}

/// Display proxies of every catalog object, in the object frame.
pub fn mesh_payloads(scene: &Scene) -> BTreeMap<u32, MeshPayload> {
    scene
        .catalog
        .iter()
        .map(|c| {
            let m = &c.proxy.mesh;
            let payload = MeshPayload {
                id: c.spec.id,
                name: c.spec.name.clone(),
                color: c.spec.color.unwrap_or_else(|| palette(c.spec.id)),
                vertices: m.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
                triangles: m.triangles().to_vec(),
            };
            (c.spec.id, payload)
        })
        .collect()
}
