//! Session recording, persistence, replay and scripted input.

mod script;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{
    ControllerInput, GraspEvent, GraspEventKind, GraspState, HandSpec, MeshSource, ObjectSpec,
    Scene, SceneConfig, SupportSurface, WorldState,
};
use crate::error::{parse_json, Error, Result};
use crate::geometry::Transform;

pub use script::{
    grasp_pose, interpolate, smoothstep, synthesize_grasp_script, GraspScript, Phases, GRIP_GAP,
    GRIP_REACH, MAX_JITTER_OFFSET, MAX_JITTER_YAW_DEG,
};

pub const SESSION_VERSION: &str = "1";
pub const SESSION_EXTENSION: &str = ".hoisession.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRecord {
    pub id: u32,
    pub name: String,
    pub mesh: MeshSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[f32; 3]>,
    pub initial_pose: Transform,
}

/// Engine state that the per-frame tracks do not capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub latches: [Option<f64>; 5],
    pub grasp: GraspState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub wrist: Transform,
    pub trigger: f64,
    pub curls: [f64; 5],
    /// Object poses in catalog order.
    pub objects: Vec<Transform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRecording {
    pub version: String,
    pub dt: f64,
    /// Placement seed of the scene the session started from.
    pub seed: u64,
    pub decimation_target: usize,
    pub support: SupportSurface,
    pub hand: HandSpec,
    pub objects: Vec<CatalogRecord>,
    pub initial: InitialState,
    pub frames: Vec<FrameRecord>,
    pub events: Vec<GraspEvent>,
}

/// Poses of one recorded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSnapshot {
    pub frame: usize,
    pub wrist: Transform,
    pub trigger: f64,
    pub curls: [f64; 5],
    pub objects: Vec<(u32, Transform)>,
}

impl SessionRecording {
    /// Empty recording whose catalog and initial state come from `world`.
    pub fn begin(scene: &Scene, world: &WorldState) -> SessionRecording {
        let objects = scene
            .catalog
            .iter()
            .map(|c| CatalogRecord {
                id: c.spec.id,
                name: c.spec.name.clone(),
                mesh: c.spec.mesh.clone(),
                color: c.spec.color,
                initial_pose: world.object(c.spec.id).map_or(Transform::identity(), |o| o.pose),
            })
            .collect();
        SessionRecording {
            version: SESSION_VERSION.into(),
            dt: world.dt,
            seed: world.seed,
            decimation_target: scene.config.decimation_target,
            support: world.support.clone(),
            hand: scene.config.hand.clone(),
            objects,
            initial: InitialState {
                latches: world.hand.latches,
                grasp: world.grasp.clone(),
            },
            frames: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Appends `world`, whose frame index must equal `len()`.
    pub fn record_frame(&mut self, world: &WorldState) -> Result<()> {
        self.record_frame_at(world, 0)
    }

    /// Like [`record_frame`](Self::record_frame) for a recording that started
    /// at engine frame `first_frame`; stored frame numbers are relative.
    pub fn record_frame_at(&mut self, world: &WorldState, first_frame: u64) -> Result<()> {
        let expected = first_frame + self.frames.len() as u64;
        if world.frame != expected {
            return Err(Error::FrameGap {
                expected,
                actual: world.frame,
            });
        }
        let objects = self
            .objects
            .iter()
            .map(|c| {
                world
                    .object(c.id)
                    .map(|o| o.pose)
                    .ok_or(Error::UnknownObject(c.id))
            })
            .collect::<Result<Vec<_>>>()?;
        self.frames.push(FrameRecord {
            wrist: world.hand.wrist,
            trigger: world.hand.trigger,
            curls: world.hand.curls,
            objects,
        });
        let local = world.frame - first_frame;
        self.events.extend(world.events.iter().map(|e| GraspEvent {
            frame: local,
            ..*e
        }));
        Ok(())
    }

    /// Stored poses of `frame`, verbatim.
    pub fn replay(&self, frame: usize) -> Result<FrameSnapshot> {
        let r = self.frames.get(frame).ok_or(Error::OutOfRange {
            frame,
            len: self.frames.len(),
        })?;
        Ok(FrameSnapshot {
            frame,
            wrist: r.wrist,
            trigger: r.trigger,
            curls: r.curls,
            objects: self.objects.iter().map(|c| c.id).zip(r.objects.iter().copied()).collect(),
        })
    }

    /// The controller input stream that produced the recording.
    pub fn inputs(&self) -> Vec<ControllerInput> {
        self.frames
            .iter()
            .map(|f| ControllerInput {
                wrist: f.wrist,
                trigger: f.trigger,
            })
            .collect()
    }

    /// Scene equivalent to the recorded catalog (meshes reloaded).
    pub fn scene(&self) -> Result<Scene> {
        let config = SceneConfig {
            support: self.support.clone(),
            objects: self
                .objects
                .iter()
                .map(|c| ObjectSpec {
                    id: c.id,
                    name: c.name.clone(),
                    mesh: c.mesh.clone(),
                    color: c.color,
                })
                .collect(),
            dt: self.dt,
            seed: self.seed,
            decimation_target: self.decimation_target,
            hand: self.hand.clone(),
        };
        Scene::from_config(config, Path::new("."))
    }

    /// World just before the first recorded input.
    pub fn initial_world(&self, scene: &Scene) -> WorldState {
        let poses: Vec<Transform> = self.objects.iter().map(|c| c.initial_pose).collect();
        let mut world = scene.world_with_poses(&poses, self.seed);
        world.hand.latches = self.initial.latches;
        world.grasp = self.initial.grasp.clone();
        world
    }

    /// Runs the recorded inputs through the engine again and returns the
    /// resulting session.
    pub fn resimulate(&self, scene: &Scene) -> Result<SessionRecording> {
        let mut world = self.initial_world(scene);
        let mut out = SessionRecording {
            frames: Vec::with_capacity(self.frames.len()),
            events: Vec::new(),
            ..self.clone()
        };
        for (k, input) in self.inputs().iter().enumerate() {
            if k == 0 {
                world.apply_input(input);
            } else {
                world.step(input);
            }
            out.record_frame(&world)?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("session serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<SessionRecording> {
        let value: serde_json::Value = parse_json(text)?;
        match value.get("version") {
            None => return Err(Error::schema("version", "missing field `version`")),
            Some(serde_json::Value::String(v)) if v == SESSION_VERSION => {}
            Some(serde_json::Value::String(v)) => return Err(Error::UnsupportedVersion(v.clone())),
            Some(other) => return Err(Error::UnsupportedVersion(other.to_string())),
        }
        let rec: SessionRecording = parse_json(text)?;
        rec.validate()?;
        Ok(rec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SessionRecording> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SessionRecording::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::schema("dt", "must be positive"));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.objects.len() != self.objects.len() {
                return Err(Error::schema(
                    format!("frames[{i}].objects"),
                    format!("expected {} poses, found {}", self.objects.len(), f.objects.len()),
                ));
            }
        }
        let mut grasped = self.initial.grasp.object();
        let mut last = 0;
        for (i, e) in self.events.iter().enumerate() {
            let path = format!("events[{i}]");
            if e.frame < last || e.frame as usize >= self.frames.len() {
                return Err(Error::schema(path, "events must be frame-ordered and within the recording"));
            }
            last = e.frame;
            if !self.objects.iter().any(|c| c.id == e.object) {
                return Err(Error::schema(path, format!("unknown object {}", e.object)));
            }
            grasped = match (e.kind, grasped) {
                (GraspEventKind::Onset, None) => Some(e.object),
                (GraspEventKind::Release, Some(o)) if o == e.object => None,
                _ => return Err(Error::schema(path, "onset and release must alternate")),
            };
        }
        Ok(())
    }
}

/// Places `scene` with `seed`, runs `script` through the engine and records
/// every frame.
pub fn record_script(scene: &Scene, seed: u64, script: &GraspScript) -> Result<SessionRecording> {
    let mut world = scene.place(seed)?;
    let inputs = synthesize_grasp_script(script, &world)?;
    let mut rec = SessionRecording::begin(scene, &world);
    for (k, input) in inputs.iter().enumerate() {
        if k == 0 {
            world.apply_input(input);
        } else {
            world.step(input);
        }
        rec.record_frame(&world)?;
    }
    Ok(rec)
}
