use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{parse_json, Error, Result};
use crate::geometry::{Ray, Transform, Vec3};

/// Pinhole camera; `pose` maps camera to world. +Z looks forward, +X right, +Y down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinholeCamera {
    #[serde(default)]
    pub id: u32,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub pose: Transform,
}

/// Image size and focal parameters shared by generated rigs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            fx: 600.0,
            fy: 600.0,
            cx: 320.0,
            cy: 240.0,
        }
    }
}

impl Intrinsics {
    /// Same field of view at another resolution.
    pub fn scaled_to(&self, width: u32, height: u32) -> Intrinsics {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Intrinsics {
            width,
            height,
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
        }
    }
}

impl PinholeCamera {
    pub fn new(id: u32, k: Intrinsics, pose: Transform) -> Result<PinholeCamera> {
        let cam = PinholeCamera {
            id,
            width: k.width,
            height: k.height,
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            pose,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            width: self.width,
            height: self.height,
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.cx > 0.0
            && self.cx < self.width as f64
            && self.cy > 0.0
            && self.cy < self.height as f64
            && self.pose.is_finite();
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "camera {}: need fx, fy > 0 and the principal point inside the image",
                self.id
            )));
        }
        Ok(())
    }

    /// Row-major intrinsic matrix.
    pub fn k_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn optical_center(&self) -> Vec3 {
        self.pose.translation
    }

    /// World direction of the optical axis.
    pub fn optical_axis(&self) -> Vec3 {
        self.pose.rotation * Vector3::z()
    }

    /// Pixel coordinates of a world point, `None` behind the camera or outside the image.
    pub fn project(&self, p: &Vec3) -> Option<[f64; 2]> {
        let uv = self.project_unbounded(p)?;
        let inside = uv[0] >= 0.0 && uv[0] < self.width as f64 && uv[1] >= 0.0 && uv[1] < self.height as f64;
        inside.then_some(uv)
    }

    /// Like [`project`](Self::project) without the image bounds check.
    pub fn project_unbounded(&self, p: &Vec3) -> Option<[f64; 2]> {
        let c = self.pose.inverse().apply(p);
        if c.z <= 0.0 {
            return None;
        }
        Some([self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy])
    }

    /// Camera-frame direction (z = 1) through pixel center `(px, py)`.
    pub fn pixel_direction(&self, px: u32, py: u32) -> Vec3 {
        Vec3::new(
            (px as f64 + 0.5 - self.cx) / self.fx,
            (py as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        )
    }

    /// World ray through the center of pixel `(px, py)`.
    pub fn pixel_ray(&self, px: u32, py: u32) -> Ray {
        let d = self.pose.apply_vector(&self.pixel_direction(px, py));
        Ray::new(self.pose.translation, d).expect("pixel directions are finite")
    }

    /// World point at pixel center `(px, py)` with z-depth `depth`.
    pub fn back_project(&self, px: u32, py: u32, depth: f64) -> Vec3 {
        self.pose.apply(&(self.pixel_direction(px, py) * depth))
    }

    /// Camera at `eye` looking at `target`, image up roughly along `up`.
    pub fn look_at(id: u32, k: Intrinsics, eye: Vec3, target: Vec3, up: Vec3) -> Result<PinholeCamera> {
        PinholeCamera::new(id, k, look_at_pose(eye, target, up)?)
    }
}

/// Camera-to-world pose at `eye` with +Z toward `target` and -Y toward `up`.
pub fn look_at_pose(eye: Vec3, target: Vec3, up: Vec3) -> Result<Transform> {
    let fwd = target - eye;
    if !(fwd.norm() > 1e-12) {
        return Err(Error::InvalidArgument("look-at target coincides with the eye".into()));
    }
    let z = fwd.normalize();
    let mut x = (-up).cross(&z);
    if x.norm() < 1e-9 {
        // looking straight along `up`: any perpendicular will do
        let alt = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        x = alt.cross(&z);
    }
    let x = x.normalize();
    let y = z.cross(&x);
    Ok(Transform::from_rotation_matrix(&Matrix3::from_columns(&[x, y, z]), eye))
}

/// Cameras on a sphere around `center`, all looking at it.
///
/// Azimuths are evenly spaced with a random phase, elevations uniform in
/// `elevation_deg` (degrees above the horizontal plane through `center`).
pub fn sample_cameras_sphere(
    n: usize,
    center: Vec3,
    radius: f64,
    elevation_deg: [f64; 2],
    seed: u64,
    k: Intrinsics,
) -> Result<Vec<PinholeCamera>> {
    let [lo, hi] = elevation_deg;
    if n == 0 || !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument("sphere rig needs n >= 1 and a positive radius".into()));
    }
    if !(lo <= hi && lo >= -90.0 && hi <= 90.0) {
        return Err(Error::InvalidArgument(format!("bad elevation range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = rng.random::<f64>();
    (0..n)
        .map(|i| {
            let az = TAU * (i as f64 + phase) / n as f64;
            let el = if lo == hi { lo } else { lo + (hi - lo) * rng.random::<f64>() }.to_radians();
            let dir = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            let eye = center + dir * radius;
            PinholeCamera::look_at(i as u32, k, eye, center, Vec3::z())
        })
        .collect()
}

/// Sphere-sampling directive of a camera-rig document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereRig {
    pub n: usize,
    /// Look-at point; the caller's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    pub radius: f64,
    /// Degrees.
    pub elevation_range: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub intrinsics: Intrinsics,
}

/// Camera-rig document: an explicit list or a sphere directive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CameraRig {
    List(Vec<PinholeCamera>),
    Sphere(SphereRig),
}

impl CameraRig {
    pub fn load(path: &Path) -> Result<CameraRig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CameraRig::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<CameraRig> {
        let v: serde_json::Value = parse_json(text)?;
        let rig = if v.is_array() {
            CameraRig::List(parse_json(text)?)
        } else {
            CameraRig::Sphere(parse_json(text)?)
        };
        Ok(rig)
    }

    /// Parses `sphere:n,radius,el_min,el_max,seed`.
    pub fn parse_directive(s: &str) -> Result<CameraRig> {
        let bad = || Error::InvalidArgument(format!("expected sphere:n,radius,el_min,el_max,seed, got {s:?}"));
        let body = s.strip_prefix("sphere:").ok_or_else(bad)?;
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(bad());
        }
        let num = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
        Ok(CameraRig::Sphere(SphereRig {
            n: parts[0].parse().map_err(|_| bad())?,
            center: None,
            radius: num(1)?,
            elevation_range: [num(2)?, num(3)?],
            seed: parts[4].parse().map_err(|_| bad())?,
            intrinsics: Intrinsics::default(),
        }))
    }

    /// Concrete cameras; `default_center` is used by sphere rigs without one.
    pub fn cameras(&self, default_center: Vec3) -> Result<Vec<PinholeCamera>> {
        let cams = match self {
            CameraRig::List(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidArgument("camera list is empty".into()));
                }
                for c in list {
                    c.validate()?;
                }
                list.clone()
            }
            CameraRig::Sphere(s) => sample_cameras_sphere(
                s.n,
                s.center.map(Vec3::from).unwrap_or(default_center),
                s.radius,
                s.elevation_range,
                s.seed,
                s.intrinsics,
            )?,
        };
        Ok(cams)
    }

    /// Rig with every camera's resolution changed, field of view kept.
    pub fn with_resolution(&self, width: u32, height: u32) -> CameraRig {
        match self {
            CameraRig::List(list) => CameraRig::List(
                list.iter()
                    .map(|c| {
                        let k = c.intrinsics().scaled_to(width, height);
                        PinholeCamera {
                            width,
                            height,
                            fx: k.fx,
                            fy: k.fy,
                            cx: k.cx,
                            cy: k.cy,
                            ..*c
                        }
                    })
                    .collect(),
            ),
            CameraRig::Sphere(s) => CameraRig::Sphere(SphereRig {
                intrinsics: s.intrinsics.scaled_to(width, height),
                ..s.clone()
            }),
        }
    }
}
