//! Browser demo: steer or script a grasp, orbit a camera around the table,
//! preview proxy decimation.
//!
//! [`Playground`] is plain Rust so it can be tested natively; the
//! `#[wasm_bindgen]` items are thin wrappers over it.

use std::collections::VecDeque;
use std::path::Path;

use hoisim_core::engine::{ControllerInput, Scene, SceneConfig, WorldState};
use hoisim_core::export::default_rig_center;
use hoisim_core::geometry::{decimate_mesh, Transform, TriMesh, Vec3};
use hoisim_core::render::{render_frame, Intrinsics, PinholeCamera, RenderScene};
use hoisim_core::session::{synthesize_grasp_script, GraspScript};
use serde_json::json;
use wasm_bindgen::prelude::*;

const TABLETOP: &str = include_str!("../../../scenes/tabletop.json");

/// The bundled tabletop world plus queued and manual hand input.
pub struct Playground {
    scene: Scene,
    world: WorldState,
    queue: VecDeque<ControllerInput>,
    manual: ControllerInput,
    scripts: u64,
}

impl Playground {
    pub fn new(seed: u64) -> Result<Playground, String> {
        let config: SceneConfig = serde_json::from_str(TABLETOP).map_err(|e| e.to_string())?;
        let scene = Scene::from_config(config, Path::new(".")).map_err(|e| e.to_string())?;
        let world = scene.place(seed).map_err(|e| e.to_string())?;
        let manual = ControllerInput::new(world.hand.wrist, 0.0);
        Ok(Playground {
            scene,
            world,
            queue: VecDeque::new(),
            manual,
            scripts: 0,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    /// `[{"id", "name"}]` of the catalog.
    pub fn objects_json(&self) -> String {
        let list: Vec<_> = self
            .scene
            .catalog
            .iter()
            .map(|c| json!({ "id": c.spec.id, "name": c.spec.name }))
            .collect();
        serde_json::Value::from(list).to_string()
    }

    /// Queues a scripted reach, grasp, lift and release from the current world.
    pub fn script_grasp(&mut self, target: u32) -> Result<usize, String> {
        let inputs = synthesize_grasp_script(&GraspScript::new(target, self.scripts), &self.world).map_err(|e| e.to_string())?;
        self.scripts += 1;
        self.queue = inputs.into();
        Ok(self.queue.len())
    }

    /// Moves the manual wrist target by a world offset and sets the trigger; drops any script.
    pub fn nudge(&mut self, dx: f64, dy: f64, dz: f64, trigger: f64) {
        self.queue.clear();
        let wrist = Transform::from_translation(dx, dy, dz).compose(&self.manual.wrist);
        self.manual = ControllerInput::new(wrist, trigger);
    }

    /// Rotates the manual wrist about its own axes, radians.
    pub fn turn(&mut self, roll: f64, pitch: f64, yaw: f64) {
        self.queue.clear();
        let r = Transform::rot_z(yaw).compose(&Transform::rot_y(pitch)).compose(&Transform::rot_x(roll));
        self.manual = ControllerInput::new(self.manual.wrist.compose(&r), self.manual.trigger);
    }

    /// One engine step with the next scripted input, else the manual one.
    pub fn step(&mut self) -> String {
        if let Some(input) = self.queue.pop_front() {
            self.manual = input;
        }
        self.world.step(&self.manual);
        self.state_json()
    }

    pub fn reset(&mut self, seed: u64) -> Result<(), String> {
        *self = Playground::new(seed)?;
        Ok(())
    }

    pub fn state_json(&self) -> String {
        let w = &self.world;
        json!({
            "frame": w.frame,
            "grasped": w.grasp.object(),
            "trigger": w.hand.trigger,
            "curls": w.hand.curls,
            "wrist": w.hand.wrist.translation_array(),
            "contacts": w.contacts.iter().map(|(f, o)| json!([f.name(), o])).collect::<Vec<_>>(),
            "events": w.events,
            "queued": self.queue.len(),
        })
        .to_string()
    }

    /// RGBA pixels of a camera orbiting the table center; angles in degrees.
    pub fn render_orbit(&self, azimuth: f64, elevation: f64, radius: f64, width: u32, height: u32) -> Result<Vec<u8>, String> {
        if width == 0 || height == 0 || width > 2048 || height > 2048 {
            return Err(format!("bad image size {width}x{height}"));
        }
        let center = default_rig_center(&self.world.support);
        let (az, el) = (azimuth.to_radians(), elevation.clamp(-89.0, 89.0).to_radians());
        let eye = center + Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * radius;
        let k = Intrinsics::default().scaled_to(width, height);
        let cam = PinholeCamera::look_at(0, k, eye, center, Vec3::z()).map_err(|e| e.to_string())?;
        let fb = render_frame(&RenderScene::from_world(&self.world), &cam);
        let mut rgba = Vec::with_capacity(fb.rgb.len() / 3 * 4);
        for (px, id) in fb.rgb.chunks_exact(3).zip(&fb.instance) {
            if *id == 0 {
                rgba.extend_from_slice(&[236, 238, 242, 255]);
            } else {
                rgba.extend_from_slice(&[px[0], px[1], px[2], 255]);
            }
        }
        Ok(rgba)
    }
}

/// Icosphere of `subdivisions` decimated to `target` faces, as JSON with the
/// decimated vertices and triangles plus the worst radial error.
pub fn decimation_preview(subdivisions: u32, target: usize) -> Result<String, String> {
    if subdivisions > 5 {
        return Err("at most 5 subdivisions".into());
    }
    let input = TriMesh::icosphere(1.0, subdivisions);
    let out = decimate_mesh(&input, target).map_err(|e| e.to_string())?;
    let radial = out
        .vertices()
        .iter()
        .map(|v| (v.norm() - 1.0).abs())
        .chain((0..out.face_count()).map(|i| {
            let [a, b, c] = out.triangle(i);
            (1.0 - ((a + b + c) / 3.0).norm()).abs()
        }))
        .fold(0.0, f64::max);
    Ok(json!({
        "input_faces": input.face_count(),
        "output_faces": out.face_count(),
        "max_radial_error": radial,
        "vertices": out.vertices().iter().map(|v| [v.x, v.y, v.z]).collect::<Vec<_>>(),
        "triangles": out.triangles(),
    })
    .to_string())
}

/// JavaScript handle of a [`Playground`].
#[wasm_bindgen]
pub struct Demo(Playground);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        Playground::new(seed.into()).map(Demo).map_err(|e| JsError::new(&e))
    }

    pub fn objects(&self) -> String {
        self.0.objects_json()
    }

    #[wasm_bindgen(js_name = scriptGrasp)]
    pub fn script_grasp(&mut self, target: u32) -> Result<usize, JsError> {
        self.0.script_grasp(target).map_err(|e| JsError::new(&e))
    }

    pub fn nudge(&mut self, dx: f64, dy: f64, dz: f64, trigger: f64) {
        self.0.nudge(dx, dy, dz, trigger);
    }

    pub fn turn(&mut self, roll: f64, pitch: f64, yaw: f64) {
        self.0.turn(roll, pitch, yaw);
    }

    pub fn step(&mut self) -> String {
        self.0.step()
    }

    pub fn state(&self) -> String {
        self.0.state_json()
    }

    pub fn reset(&mut self, seed: u32) -> Result<(), JsError> {
        self.0.reset(seed.into()).map_err(|e| JsError::new(&e))
    }

    /// RGBA bytes for an `ImageData` of `width` x `height`.
    pub fn render(&self, azimuth: f64, elevation: f64, radius: f64, width: u32, height: u32) -> Result<Vec<u8>, JsError> {
        self.0
            .render_orbit(azimuth, elevation, radius, width, height)
            .map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen(js_name = decimatePreview)]
pub fn decimate_preview(subdivisions: u32, target: u32) -> Result<String, JsError> {
    decimation_preview(subdivisions, target as usize).map_err(|e| JsError::new(&e))
}
