//! Static objects of interest and per-frame participant boxes, all in the
//! camera frame.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{back_project, CameraIntrinsics, GeometryError, Mat3, RigidTransform, Vec3};
use crate::tracking::BBox;

/// Triangles with a smaller area are rejected as degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

pub const DEFAULT_BODY_DIMS: BodyDims = BodyDims { width: 0.5, height: 1.7, depth: 0.3 };

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene config {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("mesh {name}: {msg}")]
    Mesh { name: String, msg: String },
    #[error("duplicate static label {0}")]
    DuplicateLabel(String),
    #[error("participant {0} appears twice in frame {1}")]
    DuplicateParticipant(String, u64),
    #[error("dynamic objects from different frames ({0} and {1})")]
    MixedFrames(u64, u64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub name: String,
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(name: impl Into<String>, vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, SceneError> {
        let m = Self { name: name.into(), vertices, triangles };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let err = |msg: String| Err(SceneError::Mesh { name: self.name.clone(), msg });
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return err(format!("vertex {i} is not finite"));
        }
        let n = self.vertices.len() as u32;
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return err(format!("triangle {i} references a vertex out of range"));
            }
            if self.triangle_area(i) <= MIN_TRIANGLE_AREA {
                return err(format!("triangle {i} is degenerate"));
            }
        }
        Ok(())
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0] as usize], self.vertices[t[1] as usize], self.vertices[t[2] as usize]]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn transformed(&self, pose: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|&v| pose.apply(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Loads a Wavefront OBJ file; faces with more than three vertices are
    /// fan-triangulated. All objects in the file are merged.
    pub fn load_obj(path: &Path, name: &str) -> Result<Self, SceneError> {
        let opts = tobj::LoadOptions { triangulate: true, single_index: false, ..Default::default() };
        let (models, _) = tobj::load_obj(path, &opts)
            .map_err(|e| SceneError::Mesh { name: name.to_string(), msg: format!("{}: {e}", path.display()) })?;
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for m in models {
            let base = vertices.len() as u32;
            vertices.extend(
                m.mesh.positions.chunks_exact(3).map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)),
            );
            triangles.extend(m.mesh.indices.chunks_exact(3).map(|t| [base + t[0], base + t[1], base + t[2]]));
        }
        if triangles.is_empty() {
            return Err(SceneError::Mesh { name: name.to_string(), msg: format!("{} has no faces", path.display()) });
        }
        Self::new(name, vertices, triangles)
    }

    /// Writes the mesh as OBJ text.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for t in &self.triangles {
            s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
        }
        s
    }
}

/// Axis-aligned box; `extents` are full side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub center: Vec3,
    pub extents: Vec3,
}

impl AxisBox {
    pub fn from_bounds(min: Vec3, max: Vec3) -> Self {
        Self { center: (min + max) * 0.5, extents: max - min }
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.extents * 0.5
    }

    pub fn max(&self) -> Vec3 {
        self.center + self.extents * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        let Vec3 { x: w, y: h, z: d } = self.extents;
        2.0 * (w * h + w * d + h * d)
    }
}

/// Closed 12-triangle mesh with outward (counter-clockwise seen from
/// outside) winding.
pub fn box_to_mesh(b: &AxisBox, name: &str) -> TriangleMesh {
    let (lo, hi) = (b.min(), b.max());
    let corner = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        )
    };
    let vertices = (0..8).map(corner).collect();
    let triangles = vec![
        [0, 4, 6], [0, 6, 2], // -x
        [1, 3, 7], [1, 7, 5], // +x
        [0, 1, 5], [0, 5, 4], // -y
        [2, 6, 7], [2, 7, 3], // +y
        [0, 2, 3], [0, 3, 1], // -z
        [4, 5, 7], [4, 7, 6], // +z
    ];
    TriangleMesh { name: name.to_string(), vertices, triangles }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticOoi {
    pub label: String,
    /// Vertices already placed in the camera frame.
    pub mesh: TriangleMesh,
    pub pose: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct BodyDims {
    pub width: f64,
    pub height: f64,
    pub depth: f64,
}

impl From<[f64; 3]> for BodyDims {
    fn from(a: [f64; 3]) -> Self {
        BodyDims { width: a[0], height: a[1], depth: a[2] }
    }
}

impl From<BodyDims> for [f64; 3] {
    fn from(b: BodyDims) -> Self {
        [b.width, b.height, b.depth]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseConfig {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl Default for PoseConfig {
    fn default() -> Self {
        Self { rotation: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], translation: [0.0; 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticConfig {
    pub label: String,
    pub mesh: String,
    #[serde(default)]
    pub pose: PoseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub intrinsics: CameraIntrinsics,
    pub floor_y: f64,
    #[serde(default)]
    pub r#static: Vec<StaticConfig>,
    #[serde(default = "default_body_dims")]
    pub body_dims: BodyDims,
}

fn default_body_dims() -> BodyDims {
    DEFAULT_BODY_DIMS
}

/// Session-wide immutable scene: static objects, floor and camera.
#[derive(Debug, Clone)]
pub struct SceneModel {
    pub intrinsics: CameraIntrinsics,
    pub floor_y: f64,
    pub body_dims: BodyDims,
    pub statics: Arc<[StaticOoi]>,
}

impl SceneModel {
    pub fn static_triangle_count(&self) -> usize {
        self.statics.iter().map(|s| s.mesh.triangles.len()).sum()
    }
}

pub fn is_reserved_label(label: &str) -> bool {
    label.is_empty() || label == "NONE" || label == "UNIDENTIFIED"
}

/// Reads a scene config; mesh paths are relative to the config's directory.
pub fn load_scene(path: &Path) -> Result<SceneModel, SceneError> {
    let cfg_err = |msg: String| SceneError::Config { path: path.display().to_string(), msg };
    let text = std::fs::read_to_string(path).map_err(|e| cfg_err(e.to_string()))?;
    let cfg: SceneConfig = serde_json::from_str(&text).map_err(|e| cfg_err(e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    scene_from_config(&cfg, &base)
}

pub fn scene_from_config(cfg: &SceneConfig, base: &Path) -> Result<SceneModel, SceneError> {
    cfg.intrinsics.validate()?;
    if !cfg.floor_y.is_finite() {
        return Err(SceneError::Config { path: base.display().to_string(), msg: "floor_y must be finite".into() });
    }
    let b = cfg.body_dims;
    if !(b.width > 0.0 && b.height > 0.0 && b.depth > 0.0) {
        return Err(SceneError::Config { path: base.display().to_string(), msg: "body_dims must be positive".into() });
    }
    let mut seen = BTreeSet::new();
    let mut statics = Vec::with_capacity(cfg.r#static.len());
    for s in &cfg.r#static {
        if is_reserved_label(&s.label) {
            return Err(SceneError::Config {
                path: base.display().to_string(),
                msg: format!("reserved or empty label {:?}", s.label),
            });
        }
        if !seen.insert(s.label.clone()) {
            return Err(SceneError::DuplicateLabel(s.label.clone()));
        }
        let pose = RigidTransform::new(Mat3::from_row_major(s.pose.rotation), Vec3::from_array(s.pose.translation))
            .map_err(|e| SceneError::Mesh { name: s.label.clone(), msg: format!("pose: {e}") })?;
        let mesh_path: PathBuf = base.join(&s.mesh);
        let local = TriangleMesh::load_obj(&mesh_path, &s.label)?;
        let mesh = local.transformed(&pose);
        mesh.validate()?;
        statics.push(StaticOoi { label: s.label.clone(), mesh, pose });
    }
    Ok(SceneModel { intrinsics: cfg.intrinsics, floor_y: cfg.floor_y, body_dims: cfg.body_dims, statics: statics.into() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicOoi {
    pub participant_id: String,
    pub face_box: AxisBox,
    pub body_box: AxisBox,
    pub frame_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryWarning {
    pub participant_id: String,
    pub frame_index: u64,
    pub message: String,
}

/// Places a participant's face and body boxes.
///
/// The face box is centered on the back-projected bbox centroid with metric
/// extents `pixel size * depth / focal` (depth uses the face width). The body
/// box is centered on the face in x/z, spans from the top of the face down to
/// the floor, and is at least as wide and deep as the face. A face centered
/// below the floor is lifted onto it and reported as a warning.
pub fn build_dynamic_ooi(
    participant_id: &str,
    frame_index: u64,
    bbox: &BBox,
    depth: f64,
    k: &CameraIntrinsics,
    floor_y: f64,
    body: BodyDims,
) -> Result<(DynamicOoi, Option<GeometryWarning>), SceneError> {
    let mut center = back_project(bbox.centroid(), depth, k)?;
    let fw = bbox.width() * depth / k.fx;
    let fh = bbox.height() * depth / k.fy;
    let face_extents = Vec3::new(fw, fh, fw);
    let mut warning = None;
    if center.y + 0.5 * fh > floor_y {
        warning = Some(GeometryWarning {
            participant_id: participant_id.to_string(),
            frame_index,
            message: format!("face at y={:.6} extends below floor y={:.6}; clamped", center.y, floor_y),
        });
        center.y = floor_y - 0.5 * fh;
    }
    let face_box = AxisBox { center, extents: face_extents };
    let top = center.y - 0.5 * fh;
    let bw = body.width.max(fw);
    let bd = body.depth.max(fw);
    let body_box = AxisBox::from_bounds(
        Vec3::new(center.x - 0.5 * bw, top, center.z - 0.5 * bd),
        Vec3::new(center.x + 0.5 * bw, floor_y, center.z + 0.5 * bd),
    );
    Ok((DynamicOoi { participant_id: participant_id.to_string(), face_box, body_box, frame_index }, warning))
}

/// One frame's full target set. Mesh ids: static objects take `0..S` in
/// config order; dynamic object `j` owns `S + 2j` (face) and `S + 2j + 1`
/// (body).
#[derive(Debug, Clone)]
pub struct FrameScene {
    pub frame_index: u64,
    pub statics: Arc<[StaticOoi]>,
    pub dynamic: Vec<DynamicOoi>,
    pub dynamic_meshes: Vec<TriangleMesh>,
    pub floor_y: f64,
}

impl FrameScene {
    pub fn static_count(&self) -> u32 {
        self.statics.len() as u32
    }

    pub fn face_mesh_id(&self, j: usize) -> u32 {
        self.static_count() + 2 * j as u32
    }

    pub fn body_mesh_id(&self, j: usize) -> u32 {
        self.face_mesh_id(j) + 1
    }

    /// Mesh ids owned by a participant (face and body).
    pub fn participant_mesh_ids(&self, participant_id: &str) -> Vec<u32> {
        self.dynamic
            .iter()
            .position(|d| d.participant_id == participant_id)
            .map(|j| vec![self.face_mesh_id(j), self.body_mesh_id(j)])
            .unwrap_or_default()
    }

    /// `(mesh_id, label, mesh)` for each dynamic mesh.
    pub fn dynamic_entries(&self) -> impl Iterator<Item = (u32, &str, &TriangleMesh)> {
        let base = self.static_count();
        self.dynamic_meshes
            .iter()
            .enumerate()
            .map(move |(i, m)| (base + i as u32, self.dynamic[i / 2].participant_id.as_str(), m))
    }

    /// `(mesh_id, label, mesh)` for each static mesh.
    pub fn static_entries(&self) -> impl Iterator<Item = (u32, &str, &TriangleMesh)> {
        self.statics.iter().enumerate().map(|(i, s)| (i as u32, s.label.as_str(), &s.mesh))
    }

    pub fn all_entries(&self) -> impl Iterator<Item = (u32, &str, &TriangleMesh)> {
        self.static_entries().chain(self.dynamic_entries())
    }
}

pub fn assemble_frame_scene(
    statics: &Arc<[StaticOoi]>,
    dynamic: Vec<DynamicOoi>,
    floor_y: f64,
    frame_index: u64,
) -> Result<FrameScene, SceneError> {
    let mut seen = BTreeSet::new();
    for d in &dynamic {
        if d.frame_index != frame_index {
            return Err(SceneError::MixedFrames(frame_index, d.frame_index));
        }
        if !seen.insert(d.participant_id.as_str()) {
            return Err(SceneError::DuplicateParticipant(d.participant_id.clone(), frame_index));
        }
    }
    let dynamic_meshes = dynamic
        .iter()
        .flat_map(|d| [box_to_mesh(&d.face_box, &d.participant_id), box_to_mesh(&d.body_box, &d.participant_id)])
        .collect();
    Ok(FrameScene { frame_index, statics: Arc::clone(statics), dynamic, dynamic_meshes, floor_y })
}
