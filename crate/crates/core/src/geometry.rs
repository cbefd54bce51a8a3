//! Camera model, camera-frame conventions and the 2D/3D math shared by the
//! rest of the engine.
//!
//! Everything lives in a single pinhole camera frame: +x right, +y down,
//! +z into the scene, camera at the origin. Distances are meters.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for double-precision geometry checks.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid depth {0}: must be finite and > 0")]
    InvalidDepth(f64),
    #[error("pixel ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds { x: f64, y: f64, width: u32, height: u32 },
    #[error("point with z = {0} is behind the camera")]
    BehindCamera(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("gaze angles out of range: pitch {pitch}, yaw {yaw}")]
    AnglesOutOfRange { pitch: f64, yaw: f64 },
    #[error("rotation matrix is not orthonormal with det +1")]
    NotARotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero / non-finite
    /// vector.
    #[inline]
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn max_abs_diff(self, o: Vec3) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_row_major(v: [f64; 9]) -> Self {
        Mat3([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    /// Rotation by `angle` radians about a unit `axis` (Rodrigues).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let Vec3 { x, y, z } = axis;
        Mat3([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(r)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `RᵀR - I`, together with `|det R - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let rtr = self.transpose().mul_mat(self);
        let mut err: f64 = (self.determinant() - 1.0).abs();
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                err = err.max((rtr.0[i][j] - id).abs());
            }
        }
        err
    }

    pub fn is_rotation(&self, tol: f64) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite()) && self.orthonormality_error() <= tol
    }
}

/// Rotation followed by translation: `apply(v) = R v + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: Mat3::IDENTITY,
        translation: Vec3::ZERO,
    };

    /// Builds a transform, rejecting rotations that are not proper
    /// orthonormal matrices.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        // Poses read from annotation files carry only a handful of digits.
        if !rotation.is_rotation(1e-6) || !translation.is_finite() {
            return Err(GeometryError::NotARotation);
        }
        Ok(Self { rotation, translation })
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self { rotation: Mat3::IDENTITY, translation: t }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.rotation.mul_vec(v) + self.translation
    }

    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.mul_vec(v)
    }

    /// `compose(a, b)` applies `b` first, then `a`.
    pub fn compose(&self, b: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.mul_mat(&b.rotation),
            translation: self.rotation.mul_vec(b.translation) + self.translation,
        }
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn apply(m: &RigidTransform, v: Vec3) -> Vec3 {
    m.apply(v)
}

/// Continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pixel {
    pub x: f64,
    pub y: f64,
}

impl Pixel {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, o: Pixel) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidIntrinsics(m.to_string()));
        if !(self.fx.is_finite() && self.fx > 0.0 && self.fy.is_finite() && self.fy > 0.0) {
            return bad("focal lengths must be finite and positive");
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return bad("cx must satisfy 0 <= cx < width");
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return bad("cy must satisfy 0 <= cy < height");
        }
        Ok(())
    }

    /// Pixel coordinates are continuous; both image edges are inclusive.
    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width as f64 && p.y <= self.height as f64
    }

    pub fn back_project(&self, p: Pixel, z: f64) -> Result<Vec3, GeometryError> {
        back_project(p, z, self)
    }

    pub fn project(&self, v: Vec3) -> Result<Pixel, GeometryError> {
        project(v, self)
    }
}

/// Lifts a pixel at metric depth `z` into the camera frame:
/// `z * ((x - cx) / fx, (y - cy) / fy, 1)`.
pub fn back_project(p: Pixel, z: f64, k: &CameraIntrinsics) -> Result<Vec3, GeometryError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(GeometryError::InvalidDepth(z));
    }
    if !k.contains(p) {
        return Err(GeometryError::OutOfBounds { x: p.x, y: p.y, width: k.width, height: k.height });
    }
    Ok(Vec3::new(z * (p.x - k.cx) / k.fx, z * (p.y - k.cy) / k.fy, z))
}

/// Pinhole projection. The result may fall outside the image.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
pub fn project(v: Vec3, k: &CameraIntrinsics) -> Result<Pixel, GeometryError> {
    if !(v.z > 0.0) {
        return Err(GeometryError::BehindCamera(v.z));
    }
    Ok(Pixel::new(k.fx * v.x / v.z + k.cx, k.fy * v.y / v.z + k.cy))
}

/// Gaze direction as pitch/yaw in radians. `(0, 0)` looks along -z, i.e.
/// straight back at the camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeAngles {
    pub pitch: f64,
    pub yaw: f64,
}

impl GazeAngles {
    pub fn new(pitch: f64, yaw: f64) -> Result<Self, GeometryError> {
        let g = Self { pitch, yaw };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        use std::f64::consts::{FRAC_PI_2, PI};
        if (-FRAC_PI_2..=FRAC_PI_2).contains(&self.pitch) && (-PI..=PI).contains(&self.yaw) {
            Ok(())
        } else {
            Err(GeometryError::AnglesOutOfRange { pitch: self.pitch, yaw: self.yaw })
        }
    }

    /// Inverse of [`angles_to_direction`] for a unit vector.
    pub fn from_direction(d: Vec3) -> Self {
        let pitch = (-d.y).clamp(-1.0, 1.0).asin();
        let yaw = (-d.x).atan2(-d.z);
        Self { pitch, yaw }
    }
}

/// The single place where the gaze-provider angle convention is encoded.
pub fn angles_to_direction(g: GazeAngles) -> Vec3 {
    let (sp, cp) = g.pitch.sin_cos();
    let (sy, cy) = g.yaw.sin_cos();
    Vec3::new(-sy * cp, -sp, -cp * cy)
}

/// Reference gaze axis of the canonical (untransformed) gaze ray.
pub const GAZE_REFERENCE_AXIS: Vec3 = Vec3::new(0.0, 0.0, -1.0);

/// Minimal rotation taking [`GAZE_REFERENCE_AXIS`] onto the unit vector `d`.
///
/// When `d` is exactly antiparallel to the reference axis the rotation is
/// not unique; the 180° rotation about +y is returned.
pub fn direction_to_rotation(d: Vec3) -> Mat3 {
    let Vec3 { x: dx, y: dy, z: dz } = d;
    let s = dx * dx + dy * dy;
    if dz > 0.0 && s < 1e-200 {
        return Mat3([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);
    }
    // k = 1 / (1 + a·d) with a = (0, 0, -1); the second form avoids
    // cancellation near the antiparallel case.
    let k = if dz <= 0.0 { 1.0 / (1.0 - dz) } else { (1.0 + dz) / s };
    Mat3([
        [1.0 - k * dx * dx, -k * dx * dy, -dx],
        [-k * dx * dy, 1.0 - k * dy * dy, -dy],
        [dx, dy, -dz],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`; returns `None` for a zero direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Option<Self> {
        Some(Self { origin, direction: direction.normalized()? })
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    pub fn transformed(&self, m: &RigidTransform) -> Ray {
        Ray { origin: m.apply(self.origin), direction: m.apply_vector(self.direction) }
    }
}
