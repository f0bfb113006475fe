use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};

use crate::geometry::transform::exact_unit;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{load_mesh, Capsule, Transform, TriMesh, Vec3};
use crate::hand::Finger;

pub const BONE_COUNT: usize = 16;
pub const SENSORS_PER_FINGER: usize = 3;
pub const MAX_INFLUENCES: usize = 4;

/// Bone axis in the bone's local frame; children sit at `length` along it.
pub const BONE_AXIS: Vec3 = Vec3::new(0.0, 1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Bone {
    pub name: String,
    pub parent: Option<usize>,
    /// Bind-pose transform relative to the parent.
    pub rest: Transform,
    pub open: UnitQuaternion<f64>,
    pub closed: UnitQuaternion<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub bone: usize,
    #[serde(flatten)]
    pub capsule: Capsule,
}

/// Geometry of the palmar contact sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub radius: f64,
    /// Fraction of each phalanx covered by the sensor segment, centered.
    pub span: f64,
    /// Offset of the segment toward the palm side.
    pub palmar_offset: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            radius: 0.006,
            span: 0.8,
            palmar_offset: 0.004,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    #[default]
    Right,
    Left,
}

/// Hierarchical 16-bone hand with skin weights and palmar sensors.
#[derive(Debug, Clone)]
pub struct HandRig {
    bones: Vec<Bone>,
    fingers: [[usize; 3]; 5],
    finger_of_bone: Vec<Option<Finger>>,
    sensors: Vec<Sensor>,
    mesh: TriMesh,
    skin: Vec<Vec<(usize, f64)>>,
    rest_world: Vec<Transform>,
    inverse_rest_world: Vec<Transform>,
}

impl HandRig {
    pub fn new(
        bones: Vec<Bone>,
        fingers: [[usize; 3]; 5],
        sensors: Vec<Sensor>,
        mesh: TriMesh,
        skin: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("hand rig: {m}")));
        if bones.len() != BONE_COUNT {
            return bad(format!("expected {BONE_COUNT} bones, got {}", bones.len()));
        }
        if bones[0].parent.is_some() {
            return bad("bone 0 must be the parentless wrist".into());
        }
        let (angle, dist) = bones[0].rest.deviation(&Transform::identity());
        if angle > 1e-12 || dist > 1e-12 {
            return bad("wrist rest transform must be the identity".into());
        }
        for (i, b) in bones.iter().enumerate().skip(1) {
            match b.parent {
                Some(p) if p < i => {}
                _ => return bad(format!("bone {i} must have a parent earlier in the list")),
            }
            if !(b.length > 0.0 && b.length.is_finite()) {
                return bad(format!("bone {i} has non-positive length"));
            }
        }
        let mut finger_of_bone = vec![None; BONE_COUNT];
        for f in Finger::ALL {
            for &b in &fingers[f.index()] {
                if b == 0 || b >= BONE_COUNT || finger_of_bone[b].is_some() {
                    return bad(format!("finger map for {f:?} is invalid"));
                }
                finger_of_bone[b] = Some(f);
            }
            let [p, m, d] = fingers[f.index()];
            if bones[m].parent != Some(p) || bones[d].parent != Some(m) {
                return bad(format!("{f:?} phalanges must form a chain"));
            }
        }
        for f in Finger::ALL {
            for &b in &fingers[f.index()] {
                if sensors.iter().filter(|s| s.bone == b).count() != 1 {
                    return bad(format!("bone {b} of {f:?} needs exactly one sensor"));
                }
            }
        }
        if sensors.len() != 5 * SENSORS_PER_FINGER {
            return bad(format!("expected 15 sensors, got {}", sensors.len()));
        }
        if skin.len() != mesh.vertex_count() {
            return bad(format!(
                "{} skin entries for {} vertices",
                skin.len(),
                mesh.vertex_count()
            ));
        }
        for (v, w) in skin.iter().enumerate() {
            if w.is_empty() || w.len() > MAX_INFLUENCES {
                return bad(format!("vertex {v} has {} influences", w.len()));
            }
            if w.iter().any(|&(b, x)| b >= BONE_COUNT || !(x >= 0.0)) {
                return bad(format!("vertex {v} has an invalid influence"));
            }
            let sum: f64 = w.iter().map(|x| x.1).sum();
            if (sum - 1.0).abs() > 1e-6 {
                return bad(format!("vertex {v} weights sum to {sum}"));
            }
        }
        let mut rest_world: Vec<Transform> = Vec::with_capacity(BONE_COUNT);
        for b in &bones {
            let world = match b.parent {
                None => b.rest,
                Some(p) => rest_world[p].compose(&local_transform(b, b.rest.rotation)),
            };
            rest_world.push(world);
        }
        let inverse_rest_world = rest_world.iter().map(Transform::inverse).collect();
        Ok(Self {
            bones,
            fingers,
            finger_of_bone,
            sensors,
            mesh,
            skin,
            rest_world,
            inverse_rest_world,
        })
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    /// Proximal, intermediate and distal bone indices of a finger.
    pub fn finger_bones(&self, f: Finger) -> [usize; 3] {
        self.fingers[f.index()]
    }

    pub fn finger_of_bone(&self, bone: usize) -> Option<Finger> {
        self.finger_of_bone[bone]
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn rest_mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn skin_weights(&self) -> &[Vec<(usize, f64)>] {
        &self.skin
    }

    pub fn rest_world(&self) -> &[Transform] {
        &self.rest_world
    }

    pub(crate) fn inverse_rest_world(&self) -> &[Transform] {
        &self.inverse_rest_world
    }

    /// The built-in procedurally generated hand.
    pub fn procedural(handedness: Handedness) -> HandRig {
        Self::procedural_with(handedness, SensorConfig::default())
    }

    pub fn procedural_with(handedness: Handedness, sensor: SensorConfig) -> HandRig {
        let spec = build_procedural(sensor);
        let spec = match handedness {
            Handedness::Right => spec,
            Handedness::Left => spec.mirrored(),
        };
        HandRig::new(spec.bones, spec.fingers, spec.sensors, spec.mesh, spec.skin)
            .expect("procedural rig is valid")
    }

    /// Loads a rig document (see `docs/hand-rig.md`); the mesh path is relative
    /// to the document and must be a PLY file, whose vertex order the skin
    /// weights index.
    pub fn load(path: &Path) -> Result<HandRig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: RigDocument = crate::error::parse_json(&text)?;
        if !doc.mesh.to_ascii_lowercase().ends_with(".ply") {
            return Err(Error::schema("mesh", "rig meshes must be .ply files"));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let mesh = load_mesh(&base.join(&doc.mesh))?;
        doc.into_rig(mesh)
    }
}

impl HandRig {
    /// Writes `<stem>.json` and `<stem>.ply` into `dir`; returns the JSON path.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<std::path::PathBuf> {
        let mesh_name = format!("{stem}.ply");
        crate::geometry::io::save_ply(&self.mesh, &dir.join(&mesh_name))?;
        let doc = RigDocument::from_rig(self, mesh_name);
        let path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&doc).expect("rig serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub(crate) fn local_transform(bone: &Bone, rotation: UnitQuaternion<f64>) -> Transform {
    Transform::new(rotation, bone.rest.translation)
}

/// Serialized rig definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigDocument {
    pub bones: Vec<BoneDoc>,
    pub fingers: FingerMapDoc,
    pub sensors: Vec<Sensor>,
    pub mesh: String,
    /// Per vertex: list of `[bone, weight]`.
    pub skin: Vec<Vec<(usize, f64)>>,
    #[serde(default)]
    pub mirror: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoneDoc {
    pub name: String,
    pub parent: Option<usize>,
    pub rest: Transform,
    pub open: [f64; 4],
    pub closed: [f64; 4],
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FingerMapDoc {
    pub thumb: [usize; 3],
    pub index: [usize; 3],
    pub middle: [usize; 3],
    pub ring: [usize; 3],
    pub pinky: [usize; 3],
}

impl RigDocument {
    /// Describes `rig` with its mesh stored at `mesh` (relative path).
    pub fn from_rig(rig: &HandRig, mesh: impl Into<String>) -> RigDocument {
        let q = |q: &UnitQuaternion<f64>| [q.w, q.i, q.j, q.k];
        let bones = rig
            .bones
            .iter()
            .map(|b| BoneDoc {
                name: b.name.clone(),
                parent: b.parent,
                rest: b.rest,
                open: q(&b.open),
                closed: q(&b.closed),
                length: b.length,
            })
            .collect();
        let f = rig.fingers;
        RigDocument {
            bones,
            fingers: FingerMapDoc {
                thumb: f[0],
                index: f[1],
                middle: f[2],
                ring: f[3],
                pinky: f[4],
            },
            sensors: rig.sensors.clone(),
            mesh: mesh.into(),
            skin: rig.skin.clone(),
            mirror: false,
        }
    }

    pub fn into_rig(self, mesh: TriMesh) -> Result<HandRig> {
        let quat = |q: [f64; 4]| {
            exact_unit(q).ok_or_else(|| Error::InvalidArgument("zero quaternion in rig".into()))
        };
        let bones = self
            .bones
            .into_iter()
            .map(|b| {
                Ok(Bone {
                    name: b.name,
                    parent: b.parent,
                    rest: b.rest,
                    open: quat(b.open)?,
                    closed: quat(b.closed)?,
                    length: b.length,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let f = self.fingers;
        let spec = RigSpec {
            bones,
            fingers: [f.thumb, f.index, f.middle, f.ring, f.pinky],
            sensors: self.sensors,
            mesh,
            skin: self.skin,
        };
        let spec = if self.mirror { spec.mirrored() } else { spec };
        HandRig::new(spec.bones, spec.fingers, spec.sensors, spec.mesh, spec.skin)
    }
}

struct RigSpec {
    bones: Vec<Bone>,
    fingers: [[usize; 3]; 5],
    sensors: Vec<Sensor>,
    mesh: TriMesh,
    skin: Vec<Vec<(usize, f64)>>,
}

impl RigSpec {
    /// Reflection through the local YZ plane (right hand to left hand).
    fn mirrored(self) -> RigSpec {
        let flip_v = |v: Vec3| Vec3::new(-v.x, v.y, v.z);
        let flip_q = |q: UnitQuaternion<f64>| {
            let q = q.into_inner();
            UnitQuaternion::new_unchecked(Quaternion::new(q.w, q.i, -q.j, -q.k))
        };
        let bones = self
            .bones
            .into_iter()
            .map(|b| Bone {
                rest: Transform::new(flip_q(b.rest.rotation), flip_v(b.rest.translation)),
                open: flip_q(b.open),
                closed: flip_q(b.closed),
                ..b
            })
            .collect();
        let sensors = self
            .sensors
            .into_iter()
            .map(|s| Sensor {
                bone: s.bone,
                capsule: Capsule {
                    a: flip_v(s.capsule.a),
                    b: flip_v(s.capsule.b),
                    radius: s.capsule.radius,
                },
            })
            .collect();
        let vertices = self.mesh.vertices().iter().map(|v| flip_v(*v)).collect();
        let triangles = self.mesh.triangles().iter().map(|t| [t[0], t[2], t[1]]).collect();
        let mesh = TriMesh::from_parts_unchecked(vertices, triangles, self.mesh.colors().map(|c| c.to_vec()));
        RigSpec {
            bones,
            fingers: self.fingers,
            sensors,
            mesh,
            skin: self.skin,
        }
    }
}

struct FingerGeometry {
    knuckle: Vec3,
    base_rotation: UnitQuaternion<f64>,
    lengths: [f64; 3],
    radius: f64,
    /// Closing rotation per phalanx.
    curl: [UnitQuaternion<f64>; 3],
}

fn deg(d: f64) -> f64 {
    d * PI / 180.0
}

fn about(axis: Vec3, degrees: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), deg(degrees))
}

/// Right hand in the wrist frame: +Y toward the fingertips, -Z palmar, thumb on -X.
fn finger_layout() -> [FingerGeometry; 5] {
    let flex = |a: f64, b: f64, c: f64| [about(Vec3::x(), -a), about(Vec3::x(), -b), about(Vec3::x(), -c)];
    let finger = |x: f64, y: f64, scale: f64, radius: f64| FingerGeometry {
        knuckle: Vec3::new(x, y, 0.0),
        base_rotation: UnitQuaternion::identity(),
        lengths: [0.045 * scale, 0.028 * scale, 0.020 * scale],
        radius,
        curl: flex(75.0, 90.0, 60.0),
    };
    [
        FingerGeometry {
            knuckle: Vec3::new(-0.035, 0.030, -0.005),
            base_rotation: about(Vec3::z(), 30.0) * about(Vec3::x(), 5.0),
            lengths: [0.035, 0.030, 0.025],
            radius: 0.0095,
            curl: [
                about(Vec3::new(1.0, 0.0, 0.3), -60.0),
                about(Vec3::x(), -45.0),
                about(Vec3::x(), -40.0),
            ],
        },
        finger(-0.027, 0.090, 1.0, 0.0085),
        finger(-0.005, 0.093, 1.1, 0.0088),
        finger(0.016, 0.089, 1.0, 0.0082),
        finger(0.034, 0.080, 0.8, 0.0075),
    ]
}

fn build_procedural(sensor: SensorConfig) -> RigSpec {
    let layout = finger_layout();
    let mut bones = vec![Bone {
        name: "wrist".into(),
        parent: None,
        rest: Transform::identity(),
        open: UnitQuaternion::identity(),
        closed: UnitQuaternion::identity(),
        length: 0.09,
    }];
    let mut fingers = [[0usize; 3]; 5];
    let mut sensors = Vec::new();
    let phalanx = ["proximal", "intermediate", "distal"];
    for f in Finger::ALL {
        let g = &layout[f.index()];
        let mut parent = 0;
        for k in 0..3 {
            let translation = if k == 0 { g.knuckle } else { BONE_AXIS * g.lengths[k - 1] };
            let rotation = if k == 0 { g.base_rotation } else { UnitQuaternion::identity() };
            let idx = bones.len();
            bones.push(Bone {
                name: format!("{}_{}", f.name(), phalanx[k]),
                parent: Some(parent),
                rest: Transform::new(rotation, translation),
                open: rotation,
                closed: rotation * g.curl[k],
                length: g.lengths[k],
            });
            fingers[f.index()][k] = idx;
            let len = g.lengths[k];
            let margin = 0.5 * (1.0 - sensor.span);
            let offset = Vec3::new(0.0, 0.0, -sensor.palmar_offset);
            sensors.push(Sensor {
                bone: idx,
                capsule: Capsule {
                    a: BONE_AXIS * (margin * len) + offset,
                    b: BONE_AXIS * ((1.0 - margin) * len) + offset,
                    radius: sensor.radius,
                },
            });
            parent = idx;
        }
    }

    // Rest-pose skin: a palm slab plus one tube per phalanx.
    let mut rest_world = vec![Transform::identity()];
    for b in bones.iter().skip(1) {
        let p = rest_world[b.parent.unwrap()];
        rest_world.push(p.compose(&local_transform(b, b.rest.rotation)));
    }
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    let mut skin: Vec<Vec<(usize, f64)>> = Vec::new();
    let palm = TriMesh::cuboid(Vec3::new(0.0425, 0.047, 0.012));
    let palm_pose = Transform::from_translation(0.003, 0.045, -0.002);
    for v in palm.vertices() {
        verts.push(palm_pose.apply(v));
        skin.push(vec![(0, 1.0)]);
    }
    tris.extend_from_slice(palm.triangles());
    const SIDES: usize = 8;
    for f in Finger::ALL {
        let g = &layout[f.index()];
        for k in 0..3 {
            let bone = fingers[f.index()][k];
            let parent = bones[bone].parent.unwrap();
            let child = (k < 2).then(|| fingers[f.index()][k + 1]);
            let len = g.lengths[k];
            let r0 = g.radius * (1.0 - 0.08 * k as f64);
            let r1 = g.radius * (1.0 - 0.08 * (k + 1) as f64);
            let base = verts.len() as u32;
            for (ring, (y, r)) in [(0.0, r0), (len, r1)].into_iter().enumerate() {
                let weights = match (ring, child) {
                    (0, _) => vec![(parent, 0.5), (bone, 0.5)],
                    (_, Some(c)) => vec![(bone, 0.5), (c, 0.5)],
                    (_, None) => vec![(bone, 1.0)],
                };
                for s in 0..SIDES {
                    let a = 2.0 * PI * s as f64 / SIDES as f64;
                    let local = Vec3::new(r * a.cos(), y, r * a.sin());
                    verts.push(rest_world[bone].apply(&local));
                    skin.push(weights.clone());
                }
            }
            let tip = verts.len() as u32;
            verts.push(rest_world[bone].apply(&(BONE_AXIS * (len + if child.is_none() { r1 } else { 0.0 }))));
            skin.push(vec![(bone, 1.0)]);
            let bottom = verts.len() as u32;
            verts.push(rest_world[bone].apply(&Vec3::zeros()));
            skin.push(vec![(parent, 0.5), (bone, 0.5)]);
            let s = SIDES as u32;
            for i in 0..s {
                let j = (i + 1) % s;
                let (a0, a1, b0, b1) = (base + i, base + j, base + s + i, base + s + j);
                tris.push([a0, b0, b1]);
                tris.push([a0, b1, a1]);
                tris.push([b0, tip, b1]);
                tris.push([a0, a1, bottom]);
            }
        }
    }
    let mesh = TriMesh::from_parts_unchecked(verts, tris, None);
    RigSpec {
        bones,
        fingers,
        sensors,
        mesh,
        skin,
    }
}
