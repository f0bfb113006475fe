use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{ControllerInput, GraspEventKind, WorldState};
use crate::error::{Error, Result};
use crate::geometry::{Transform, Vec3};
use crate::hand::Finger;

/// Object center in the wrist frame along the fingers (+Y), meters.
pub const GRIP_REACH: f64 = 0.085;
/// Clearance between the object's near face and the flat hand's palmar plane.
pub const GRIP_GAP: f64 = 0.020;
pub const MAX_JITTER_OFFSET: f64 = 0.01;
pub const MAX_JITTER_YAW_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phases {
    pub reach: u32,
    pub close: u32,
    pub lift: u32,
    #[serde(rename = "return")]
    pub ret: u32,
    pub release: u32,
}

impl Default for Phases {
    fn default() -> Self {
        Self {
            reach: 27,
            close: 9,
            lift: 18,
            ret: 12,
            release: 6,
        }
    }
}

impl Phases {
    pub fn total(&self) -> u32 {
        self.reach + self.close + self.lift + self.ret + self.release
    }

    /// Stretches the default split proportionally to `frames` total.
    pub fn scaled_to(frames: u32) -> Result<Phases> {
        let d = Phases::default();
        if frames == d.total() {
            return Ok(d);
        }
        if frames < 12 {
            return Err(Error::InvalidArgument(format!("{frames} frames is too short for a grasp script")));
        }
        let f = frames as f64 / d.total() as f64;
        let part = |x: u32| ((x as f64 * f).round() as u32).max(2);
        let mut p = Phases {
            reach: 0,
            close: part(d.close),
            lift: part(d.lift),
            ret: part(d.ret),
            release: part(d.release),
        };
        let used = p.close + p.lift + p.ret + p.release;
        if used + 2 > frames {
            return Err(Error::InvalidArgument(format!("{frames} frames is too short for a grasp script")));
        }
        p.reach = frames - used;
        Ok(p)
    }
}

/// Scripted reach, grasp, lift, put back and release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspScript {
    pub phases: Phases,
    pub target: u32,
    /// Pre-grasp distance back along the approach direction, meters.
    pub approach_offset: f64,
    /// Pre-grasp height above the grasp pose, meters.
    pub approach_height: f64,
    pub lift_height: f64,
    pub seed: u64,
}

impl GraspScript {
    pub fn new(target: u32, seed: u64) -> Self {
        Self {
            phases: Phases::default(),
            target,
            approach_offset: 0.03,
            approach_height: 0.25,
            lift_height: 0.15,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let p = &self.phases;
        if p.reach < 2 || p.close < 1 || p.lift < 1 || p.ret < 1 || p.release < 2 {
            return Err(Error::InvalidArgument(
                "phases need reach >= 2, release >= 2 and the others >= 1".into(),
            ));
        }
        if !(self.lift_height > 0.0) {
            return Err(Error::InvalidArgument("lift height must be positive".into()));
        }
        if !(self.approach_offset >= 0.0 && self.approach_height >= 0.0) {
            return Err(Error::InvalidArgument("approach offsets must be non-negative".into()));
        }
        Ok(())
    }
}

pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Pose between `a` and `b` at eased parameter `t`; endpoints returned verbatim.
pub fn interpolate(a: &Transform, b: &Transform, t: f64) -> Transform {
    if t <= 0.0 {
        return *a;
    }
    if t >= 1.0 {
        return *b;
    }
    let rot = a
        .rotation
        .try_slerp(&b.rotation, t, 1e-12)
        .unwrap_or_else(|| a.rotation.nlerp(&b.rotation, t));
    Transform::new(rot, a.translation + (b.translation - a.translation) * t)
}

/// Side power-grasp wrist pose for the target in `world`.
///
/// `yaw` turns the approach direction, `offset` shifts the hand within the
/// plane of its thumb and finger axes.
pub fn grasp_pose(world: &WorldState, target: u32, yaw: f64, offset: Vector2<f64>) -> Result<Transform> {
    let obj = world
        .object(target)
        .ok_or_else(|| Error::TargetMissing(format!("object id {target}")))?;
    let center = obj.render.mesh.world_aabb(&obj.pose).center();
    let start = world.hand.wrist.translation;
    let mut d = Vector2::new(center.x - start.x, center.y - start.y);
    if d.norm() < 1e-3 {
        let [cx, cy] = world.support.centroid();
        d = Vector2::new(center.x - cx, center.y - cy);
    }
    if d.norm() < 1e-3 {
        d = Vector2::new(1.0, 0.0);
    }
    let d = d.normalize();
    let (s, c) = yaw.sin_cos();
    let a = Vec3::new(c * d.x - s * d.y, s * d.x + c * d.y, 0.0);

    // Thumb (-X of a right wrist) points up.
    let left = world.rig.rest_world()[world.rig.finger_bones(Finger::Thumb)[0]].translation.x > 0.0;
    let x = if left { Vec3::z() } else { -Vec3::z() };
    let z = -a;
    let y = z.cross(&x);
    let r = Matrix3::from_columns(&[x, y, z]);

    let depth = obj
        .render
        .mesh
        .vertices()
        .iter()
        .map(|v| (obj.pose.apply(v) - center).dot(&-a))
        .fold(0.0, f64::max);
    let local = Vec3::new(0.0, GRIP_REACH, -(depth + GRIP_GAP));
    let t = center - r * local + x * offset.x + y * offset.y;
    Ok(Transform::from_rotation_matrix(&r, t))
}

/// Approach directions tried around the jittered one, degrees.
const APPROACH_CANDIDATES: [f64; 16] = [
    0.0, 22.5, -22.5, 45.0, -45.0, 67.5, -67.5, 90.0, -90.0, 112.5, -112.5, 135.0, -135.0, 157.5, -157.5, 180.0,
];

/// Controller inputs for the whole script, one per frame.
///
/// The approach direction is the jittered heading from the hand to the
/// target, turned by the first candidate whose dry run through the engine
/// grasps and releases the target without touching anything else.
pub fn synthesize_grasp_script(script: &GraspScript, world: &WorldState) -> Result<Vec<ControllerInput>> {
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let yaw = (2.0 * rng.random::<f64>() - 1.0) * MAX_JITTER_YAW_DEG.to_radians();
    let radius = MAX_JITTER_OFFSET * rng.random::<f64>().sqrt();
    let angle = TAU * rng.random::<f64>();
    let offset = Vector2::new(radius * angle.cos(), radius * angle.sin());

    for turn in APPROACH_CANDIDATES {
        let inputs = script_inputs(script, world, yaw + turn.to_radians(), offset)?;
        if clean_grasp(world, &inputs, script.target) {
            return Ok(inputs);
        }
    }
    log::warn!("no clean approach found for object {}; using the direct one", script.target);
    script_inputs(script, world, yaw, offset)
}

fn clean_grasp(world: &WorldState, inputs: &[ControllerInput], target: u32) -> bool {
    let mut w = world.clone();
    let mut events = Vec::new();
    for (k, input) in inputs.iter().enumerate() {
        if k == 0 {
            w.apply_input(input);
        } else {
            w.step(input);
        }
        if w.contacts.iter().any(|&(_, o)| o != target) {
            return false;
        }
        events.extend(w.events.iter().map(|e| e.kind));
    }
    events == [GraspEventKind::Onset, GraspEventKind::Release]
}

fn script_inputs(script: &GraspScript, world: &WorldState, yaw: f64, offset: Vector2<f64>) -> Result<Vec<ControllerInput>> {
    let start = world.hand.wrist;
    let grasp = grasp_pose(world, script.target, yaw, offset)?;
    let back = grasp.rotation * Vec3::z();
    let pre = grasp.with_translation(
        grasp.translation + back * script.approach_offset + Vec3::z() * script.approach_height,
    );
    let lifted = grasp.with_translation(grasp.translation + Vec3::z() * script.lift_height);

    let p = &script.phases;
    let mut out = Vec::with_capacity(p.total() as usize);
    let frac = |j: u32, n: u32| (j + 1) as f64 / n as f64;

    for k in 0..p.reach {
        let s = k as f64 / (p.reach - 1) as f64;
        let wrist = if s <= 2.0 / 3.0 {
            interpolate(&start, &pre, smoothstep(s * 1.5))
        } else {
            interpolate(&pre, &grasp, smoothstep((s - 2.0 / 3.0) * 3.0))
        };
        out.push(ControllerInput::new(wrist, 0.0));
    }
    for j in 0..p.close {
        out.push(ControllerInput::new(grasp, frac(j, p.close)));
    }
    for j in 0..p.lift {
        out.push(ControllerInput::new(interpolate(&grasp, &lifted, smoothstep(frac(j, p.lift))), 1.0));
    }
    for j in 0..p.ret {
        out.push(ControllerInput::new(interpolate(&lifted, &grasp, smoothstep(frac(j, p.ret))), 1.0));
    }
    // open in place, then retreat over the pre-grasp pose to the start
    let half = p.release / 2;
    for j in 0..p.release {
        if j < half {
            out.push(ControllerInput::new(grasp, 1.0 - frac(j, half)));
        } else {
            let t = frac(j - half, p.release - half);
            let wrist = if t <= 0.5 {
                interpolate(&grasp, &pre, smoothstep(2.0 * t))
            } else {
                interpolate(&pre, &start, smoothstep(2.0 * t - 1.0))
            };
            out.push(ControllerInput::new(wrist, 0.0));
        }
    }
    Ok(out)
}
