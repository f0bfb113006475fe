use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{SceneObject, SupportSurface, WorldState};
use crate::error::{parse_json, Error, Result};
use crate::geometry::{decimate_mesh, load_mesh, MeshAsset, Transform, TriMesh, Vec3, DEFAULT_TARGET_FACES};
use crate::hand::{HandRig, Handedness, SensorConfig};

pub const DEFAULT_DT: f64 = 1.0 / 30.0;

/// Where an object's render mesh comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSource {
    File { path: String },
    Primitive(Primitive),
}

/// Analytic stand-ins, centered on the origin with +Z up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "primitive", rename_all = "lowercase")]
pub enum Primitive {
    Box { size: [f64; 3] },
    Cylinder {
        radius: f64,
        height: f64,
        #[serde(default = "default_segments")]
        segments: u32,
    },
    Sphere {
        radius: f64,
        #[serde(default = "default_subdivisions")]
        subdivisions: u32,
    },
}

fn default_segments() -> u32 {
    64
}

fn default_subdivisions() -> u32 {
    3
}

impl MeshSource {
    /// Loads or generates the mesh; file paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<TriMesh> {
        match self {
            MeshSource::File { path } => load_mesh(&base.join(path)),
            MeshSource::Primitive(p) => p.mesh(),
        }
    }

    /// Same source with a file path made absolute against `base`.
    pub fn resolved(&self, base: &Path) -> MeshSource {
        match self {
            MeshSource::File { path } => {
                let joined = base.join(path);
                let full = std::fs::canonicalize(&joined).unwrap_or(joined);
                MeshSource::File {
                    path: full.to_string_lossy().into_owned(),
                }
            }
            other => other.clone(),
        }
    }
}

impl Primitive {
    pub fn mesh(&self) -> Result<TriMesh> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("primitive: {m}")));
        match *self {
            Primitive::Box { size } => {
                if size.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return bad("box sizes must be positive");
                }
                Ok(TriMesh::cuboid(Vec3::from(size) * 0.5))
            }
            Primitive::Cylinder {
                radius,
                height,
                segments,
            } => {
                if !(radius > 0.0 && height > 0.0) || segments < 3 {
                    return bad("cylinder needs positive radius/height and >= 3 segments");
                }
                let m = TriMesh::cylinder(radius, height, segments);
                Ok(m.transformed(&Transform::from_translation(0.0, 0.0, -0.5 * height)))
            }
            Primitive::Sphere {
                radius,
                subdivisions,
            } => {
                if !(radius > 0.0) || subdivisions > 6 {
                    return bad("sphere needs positive radius and <= 6 subdivisions");
                }
                Ok(TriMesh::icosphere(radius, subdivisions))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: u32,
    pub name: String,
    pub mesh: MeshSource,
    /// Linear RGB base color in [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[f32; 3]>,
}

/// Palmar sensor geometry override for the built-in hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub radius: f64,
    pub span: f64,
    pub palmar_offset: f64,
}

/// Which hand rig to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandSpec {
    /// Rig document; the built-in procedural hand when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rig: Option<String>,
    #[serde(default)]
    pub handedness: Handedness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorSpec>,
    /// Wrist pose before any input arrives.
    #[serde(default = "default_hand_start")]
    pub start: Transform,
}

/// Open hand hovering beside the origin, palm facing +X, fingers along +Y.
pub fn default_hand_start() -> Transform {
    let m = nalgebra::Matrix3::new(0.0, 0.0, -1.0, 0.0, -1.0, 0.0, -1.0, 0.0, 0.0);
    Transform::from_rotation_matrix(&m, Vec3::new(-0.55, -0.05, 0.30))
}

impl Default for HandSpec {
    fn default() -> Self {
        Self {
            rig: None,
            handedness: Handedness::Right,
            sensor: None,
            start: default_hand_start(),
        }
    }
}

impl HandSpec {
    pub fn build(&self, base: &Path) -> Result<HandRig> {
        match &self.rig {
            Some(path) => {
                if self.sensor.is_some() {
                    return Err(Error::InvalidArgument(
                        "sensor overrides apply to the built-in hand only".into(),
                    ));
                }
                HandRig::load(&base.join(path))
            }
            None => {
                let cfg = match self.sensor {
                    Some(s) => {
                        if !(s.radius > 0.0 && s.span > 0.0 && s.span <= 1.0) {
                            return Err(Error::InvalidArgument("sensor radius and span must be positive".into()));
                        }
                        SensorConfig {
                            radius: s.radius,
                            span: s.span,
                            palmar_offset: s.palmar_offset,
                        }
                    }
                    None => SensorConfig::default(),
                };
                Ok(HandRig::procedural_with(self.handedness, cfg))
            }
        }
    }

    pub fn resolved(&self, base: &Path) -> HandSpec {
        let mut out = self.clone();
        if let Some(p) = &self.rig {
            let joined = base.join(p);
            out.rig = Some(
                std::fs::canonicalize(&joined)
                    .unwrap_or(joined)
                    .to_string_lossy()
                    .into_owned(),
            );
        }
        out
    }
}

/// Scene description document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub support: SupportSurface,
    pub objects: Vec<ObjectSpec>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_target")]
    pub decimation_target: usize,
    #[serde(default)]
    pub hand: HandSpec,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_target() -> usize {
    DEFAULT_TARGET_FACES
}

/// Loaded catalog entry with render and collision meshes.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub spec: ObjectSpec,
    pub render: Arc<MeshAsset>,
    pub proxy: Arc<MeshAsset>,
}

/// A scene with meshes and rig loaded, ready to instantiate worlds.
#[derive(Debug, Clone)]
pub struct Scene {
    pub config: SceneConfig,
    pub base_dir: PathBuf,
    pub catalog: Vec<CatalogEntry>,
    pub rig: Arc<HandRig>,
}

impl Scene {
    pub fn load(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: SceneConfig = parse_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Scene::from_config(config, &base)
    }

    pub fn from_config(mut config: SceneConfig, base: &Path) -> Result<Scene> {
        config.support.validate()?;
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(Error::schema("dt", "must be positive"));
        }
        if config.decimation_target < 4 {
            return Err(Error::schema("decimation_target", "must be at least 4"));
        }
        let mut ids: Vec<u32> = config.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.first() == Some(&0) || ids.windows(2).any(|w| w[0] == w[1]) || ids.contains(&255) {
            return Err(Error::schema("objects", "ids must be unique, >= 1 and not 255"));
        }
        let mut catalog = Vec::with_capacity(config.objects.len());
        for spec in &mut config.objects {
            let mesh = spec.mesh.load(base)?;
            spec.mesh = spec.mesh.resolved(base);
            catalog.push(CatalogEntry::new(spec.clone(), mesh, config.decimation_target)?);
        }
        let rig = Arc::new(config.hand.build(base)?);
        config.hand = config.hand.resolved(base);
        Ok(Scene {
            config,
            base_dir: base.to_path_buf(),
            catalog,
            rig,
        })
    }

    pub fn find(&self, name: &str) -> Option<&CatalogEntry> {
        self.catalog.iter().find(|c| c.spec.name == name)
    }

    /// Fresh world: objects placed with `seed`, open hand at the start pose, frame 0.
    pub fn place(&self, seed: u64) -> Result<WorldState> {
        let meshes: Vec<(u32, &TriMesh)> = self
            .catalog
            .iter()
            .map(|c| (c.spec.id, &c.render.mesh))
            .collect();
        let poses = super::place_objects(&meshes, &self.config.support, seed)?;
        Ok(self.world_with_poses(&poses, seed))
    }

    /// Fresh world with explicit object poses (catalog order).
    pub fn world_with_poses(&self, poses: &[Transform], seed: u64) -> WorldState {
        let objects = self
            .catalog
            .iter()
            .zip(poses)
            .map(|(c, pose)| c.instantiate(*pose))
            .collect();
        WorldState::new(
            self.rig.clone(),
            objects,
            self.config.support.clone(),
            self.config.hand.start,
            self.config.dt,
            seed,
        )
    }
}

impl CatalogEntry {
    pub fn new(spec: ObjectSpec, mesh: TriMesh, target: usize) -> Result<CatalogEntry> {
        let proxy = decimate_mesh(&mesh, target)?;
        Ok(CatalogEntry {
            spec,
            render: MeshAsset::new(mesh),
            proxy: MeshAsset::new(proxy),
        })
    }

    pub fn instantiate(&self, pose: Transform) -> SceneObject {
        SceneObject {
            id: self.spec.id,
            name: self.spec.name.clone(),
            color: self.spec.color.unwrap_or_else(|| palette(self.spec.id)),
            render: self.render.clone(),
            proxy: self.proxy.clone(),
            pose,
        }
    }
}

/// Deterministic distinct-ish color per id.
pub fn palette(id: u32) -> [f32; 3] {
    const P: [[f32; 3]; 8] = [
        [0.85, 0.25, 0.2],
        [0.2, 0.55, 0.85],
        [0.95, 0.75, 0.2],
        [0.3, 0.75, 0.35],
        [0.6, 0.35, 0.75],
        [0.9, 0.5, 0.15],
        [0.25, 0.75, 0.75],
        [0.8, 0.8, 0.8],
    ];
    P[(id as usize).wrapping_sub(1) % P.len()]
}
