use nalgebra::{Matrix3, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Vec3 = Vector3<f64>;

/// Rigid SE(3) pose: unit quaternion rotation followed by a translation in meters.
///
/// Serialized as `{"rotation": [w, x, y, z], "translation": [x, y, z]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            rotation: renormalize(rotation),
            translation,
        }
    }

    /// Builds a transform from a w-first quaternion, renormalizing it.
    ///
    /// A zero quaternion yields the identity rotation.
    pub fn from_wxyz(q: [f64; 4], translation: [f64; 3]) -> Self {
        let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
        let rotation = if raw.norm() > 0.0 {
            UnitQuaternion::from_quaternion(raw)
        } else {
            UnitQuaternion::identity()
        };
        Self {
            rotation,
            translation: Vec3::from(translation),
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::new(x, y, z),
        }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        Self {
            rotation: UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
            translation: Vec3::zeros(),
        }
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::z(), angle)
    }

    /// Rotation given by the columns of an orthonormal matrix.
    pub fn from_rotation_matrix(m: &Matrix3<f64>, translation: Vec3) -> Self {
        let rot = Rotation3::from_matrix_unchecked(*m);
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), translation)
    }

    pub fn with_translation(mut self, translation: Vec3) -> Self {
        self.translation = translation;
        self
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: renormalize(self.rotation * other.rotation),
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let inv = self.rotation.inverse();
        Transform {
            rotation: renormalize(inv),
            translation: -(inv * self.translation),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Quaternion as `[w, x, y, z]`.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn translation_array(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    /// Rotation angle (radians) and translation distance between two poses.
    pub fn deviation(&self, other: &Transform) -> (f64, f64) {
        (
            self.rotation.angle_to(&other.rotation),
            (self.translation - other.translation).norm(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.wxyz().iter().all(|v| v.is_finite()) && self.translation.iter().all(|v| v.is_finite())
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// Unit quaternion from stored w,x,y,z; values already unit (within 1e-9) are
/// kept bit-exact, others renormalized. `None` for zero or non-finite input.
pub(crate) fn exact_unit(q: [f64; 4]) -> Option<UnitQuaternion<f64>> {
    let [w, x, y, z] = q;
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    let q = Quaternion::new(w, x, y, z);
    Some(if (norm - 1.0).abs() <= 1e-9 {
        UnitQuaternion::new_unchecked(q)
    } else {
        UnitQuaternion::from_quaternion(q)
    })
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl Serialize for Transform {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TransformRepr {
            rotation: self.wxyz(),
            translation: self.translation_array(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Transform {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TransformRepr::deserialize(deserializer)?;
        let rotation = exact_unit(repr.rotation)
            .ok_or_else(|| serde::de::Error::custom("rotation quaternion must be non-zero and finite"))?;
        Ok(Transform {
            rotation,
            translation: Vec3::from(repr.translation),
        })
    }
}
