//! Fixed-step grasping world.

mod placement;
mod scene;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{capsule_mesh_contact, Aabb, Capsule, MeshAsset, Transform};
use crate::hand::{pose_bones, sensor_world_capsules, Finger, HandPoseState, HandRig};

pub use placement::{
    footprints_overlap, place_objects, resting_pose, settle_on_surface, SupportSurface,
    MAX_PLACEMENT_ATTEMPTS,
};
pub use scene::{
    default_hand_start, palette, CatalogEntry, HandSpec, MeshSource, ObjectSpec, Primitive, Scene,
    SceneConfig, SensorSpec, DEFAULT_DT,
};

/// Trigger drop below the smallest latch that clears a latch or ends a grasp.
pub const RELEASE_HYSTERESIS: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct SceneObject {
    pub id: u32,
    pub name: String,
    pub color: [f32; 3],
    /// Full-resolution mesh used for rendering and placement.
    pub render: Arc<MeshAsset>,
    /// Decimated mesh used for contact queries.
    pub proxy: Arc<MeshAsset>,
    pub pose: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetFinger {
    pub finger: Finger,
    pub latch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum GraspState {
    #[default]
    Free,
    Grasped {
        object: u32,
        /// inverse(wrist) ∘ object pose at onset.
        rel: Transform,
        /// Fingers touching the object at onset, with their latches then.
        fingers: Vec<OnsetFinger>,
    },
}

impl GraspState {
    pub fn object(&self) -> Option<u32> {
        match self {
            GraspState::Free => None,
            GraspState::Grasped { object, .. } => Some(*object),
        }
    }

    /// Trigger value below which the grasp ends.
    pub fn release_threshold(&self) -> Option<f64> {
        match self {
            GraspState::Free => None,
            GraspState::Grasped { fingers, .. } => Some(
                fingers.iter().map(|f| f.latch).fold(f64::INFINITY, f64::min) - RELEASE_HYSTERESIS,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerInput {
    pub wrist: Transform,
    pub trigger: f64,
}

impl ControllerInput {
    /// Clamps the trigger to [0, 1]; NaN reads as 0.
    pub fn new(wrist: Transform, trigger: f64) -> Self {
        let trigger = if trigger.is_nan() { 0.0 } else { trigger.clamp(0.0, 1.0) };
        Self { wrist, trigger }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraspEventKind {
    Onset,
    Release,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraspEvent {
    pub frame: u64,
    pub kind: GraspEventKind,
    pub object: u32,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub frame: u64,
    pub time: f64,
    pub dt: f64,
    pub hand: HandPoseState,
    pub objects: Vec<SceneObject>,
    pub grasp: GraspState,
    pub contacts: BTreeSet<(Finger, u32)>,
    pub support: SupportSurface,
    pub seed: u64,
    /// Grasp transitions produced by the most recent update.
    pub events: Vec<GraspEvent>,
    pub rig: Arc<HandRig>,
}

impl WorldState {
    pub fn new(
        rig: Arc<HandRig>,
        objects: Vec<SceneObject>,
        support: SupportSurface,
        wrist: Transform,
        dt: f64,
        seed: u64,
    ) -> Self {
        Self {
            frame: 0,
            time: 0.0,
            dt,
            hand: HandPoseState::open(wrist),
            objects,
            grasp: GraspState::Free,
            contacts: BTreeSet::new(),
            support,
            seed,
            events: Vec::new(),
            rig,
        }
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_poses(&self) -> Vec<(u32, Transform)> {
        self.objects.iter().map(|o| (o.id, o.pose)).collect()
    }

    pub fn bones(&self) -> Vec<Transform> {
        pose_bones(&self.rig, &self.hand)
    }

    /// Finger/object pairs whose sensors touch a proxy mesh at the current hand pose.
    pub fn evaluate_contacts(&self) -> BTreeSet<(Finger, u32)> {
        let sensors = sensor_world_capsules(&self.rig, &self.bones());
        contacts_for(&sensors, &self.objects)
    }

    /// Phases 1 to 6 of the update for the current frame index.
    pub fn apply_input(&mut self, input: &ControllerInput) {
        let input = ControllerInput::new(input.wrist, input.trigger);
        self.events.clear();

        // 1. controller
        self.hand.wrist = input.wrist;
        self.hand.trigger = input.trigger;
        let trigger = input.trigger;

        // 2. latches and effective curl
        for f in 0..5 {
            if let Some(l) = self.hand.latches[f] {
                if trigger < l - RELEASE_HYSTERESIS {
                    self.hand.latches[f] = None;
                }
            }
            self.hand.curls[f] = match self.hand.latches[f] {
                Some(l) => trigger.min(l),
                None => trigger,
            };
        }

        // 3. contacts; fingers newly touching stop at the current trigger
        self.contacts = self.evaluate_contacts();
        for &(f, _) in &self.contacts {
            let i = f.index();
            if self.hand.latches[i].is_none() {
                self.hand.latches[i] = Some(trigger);
            }
        }

        // 4. onset
        if self.grasp == GraspState::Free {
            if let Some(id) = self.grasp_candidate() {
                let fingers = Finger::ALL
                    .iter()
                    .filter(|f| self.contacts.contains(&(**f, id)))
                    .map(|&f| OnsetFinger {
                        finger: f,
                        latch: self.hand.latches[f.index()].expect("contact fingers are latched"),
                    })
                    .collect();
                let pose = self.object(id).expect("contact ids exist").pose;
                self.grasp = GraspState::Grasped {
                    object: id,
                    rel: self.hand.wrist.inverse().compose(&pose),
                    fingers,
                };
                self.events.push(GraspEvent {
                    frame: self.frame,
                    kind: GraspEventKind::Onset,
                    object: id,
                });
            }
        }

        // 5. parenting
        if let GraspState::Grasped { object, rel, .. } = &self.grasp {
            let pose = self.hand.wrist.compose(rel);
            let id = *object;
            if let Some(o) = self.objects.iter_mut().find(|o| o.id == id) {
                o.pose = pose;
            }
        }

        // 6. release
        if let Some(threshold) = self.grasp.release_threshold() {
            if trigger < threshold {
                let id = self.grasp.object().expect("grasped");
                self.grasp = GraspState::Free;
                let support = &self.support;
                if let Some(o) = self.objects.iter_mut().find(|o| o.id == id) {
                    match settle_on_surface(id, &o.render.mesh, &o.pose, support) {
                        Ok(p) => o.pose = p,
                        Err(e) => log::warn!("object {id} left in place on release: {e}"),
                    }
                }
                self.events.push(GraspEvent {
                    frame: self.frame,
                    kind: GraspEventKind::Release,
                    object: id,
                });
            }
        }
    }

    /// Advances one fixed step.
    pub fn step(&mut self, input: &ControllerInput) {
        self.frame += 1;
        self.time = self.frame as f64 * self.dt;
        self.apply_input(input);
    }

    /// Lowest-id object touched by the thumb and another finger.
    fn grasp_candidate(&self) -> Option<u32> {
        let mut ids: Vec<u32> = self
            .contacts
            .iter()
            .filter(|(f, _)| *f == Finger::Thumb)
            .map(|&(_, o)| o)
            .filter(|&o| {
                self.contacts
                    .iter()
                    .any(|&(f, id)| id == o && f != Finger::Thumb)
            })
            .collect();
        ids.sort_unstable();
        ids.first().copied()
    }
}

/// Functional form of [`WorldState::step`].
pub fn step(world: &WorldState, input: &ControllerInput) -> WorldState {
    let mut next = world.clone();
    next.step(input);
    next
}

/// Contact pairs between posed sensors and objects' proxy meshes.
pub fn contacts_for(sensors: &[(Finger, Capsule)], objects: &[SceneObject]) -> BTreeSet<(Finger, u32)> {
    let mut out = BTreeSet::new();
    for o in objects {
        let bounds: Aabb = o.proxy.mesh.world_aabb(&o.pose);
        for (f, c) in sensors {
            if out.contains(&(*f, o.id)) || !bounds.overlaps(&c.aabb()) {
                continue;
            }
            if capsule_mesh_contact(c, &Transform::identity(), &o.proxy.bvh, &o.pose).is_some() {
                out.insert((*f, o.id));
            }
        }
    }
    out
}
