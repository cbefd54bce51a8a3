//! Per-frame processing: depth sampling, 3D placement of participants, gaze
//! ray construction and object-of-interest encoding.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angles_to_direction, direction_to_rotation, GazeAngles, Ray, RigidTransform, Vec3};
use crate::io::FrameRecord;
use crate::raycast::{Bvh, SceneBvh};
use crate::reid::Identity;
use crate::scene::{assemble_frame_scene, build_dynamic_ooi, DynamicOoi, GeometryWarning, SceneModel};
use crate::tracking::BBox;

/// Minimum fraction of valid pixels required by [`sample_depth`].
pub const MIN_VALID_DEPTH_FRACTION: f64 = 0.1;
/// Side scale of the central sampling window relative to the face bbox.
pub const DEPTH_WINDOW_SCALE: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepthError {
    #[error("bbox does not overlap the depth raster")]
    OutsideRaster,
    #[error("only {valid} of {total} sampled depth pixels are valid")]
    Insufficient { valid: usize, total: usize },
}

/// Per-pixel metric depth; `NaN` (or any non-positive value) is invalid.
pub trait DepthLookup {
    fn width(&self) -> u32;
    fn height(&self) -> u32;
    fn depth_at(&self, col: u32, row: u32) -> f32;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    pub width: u32,
    pub height: u32,
    /// Row-major depth in meters.
    pub values: Vec<f32>,
}

impl DepthRaster {
    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self { width, height, values: vec![value; width as usize * height as usize] }
    }

    pub fn valid_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|v| is_valid_depth(**v)).count() as f64 / self.values.len() as f64
    }

    pub fn set(&mut self, col: u32, row: u32, v: f32) {
        self.values[row as usize * self.width as usize + col as usize] = v;
    }
}

impl DepthLookup for DepthRaster {
    fn width(&self) -> u32 {
        self.width
    }
    fn height(&self) -> u32 {
        self.height
    }
    fn depth_at(&self, col: u32, row: u32) -> f32 {
        self.values[row as usize * self.width as usize + col as usize]
    }
}

/// Piecewise-constant depth given as rectangles; later patches cover
/// earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPatch {
    pub rect: BBox,
    pub depth: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InlineDepth {
    pub width: u32,
    pub height: u32,
    pub patches: Vec<DepthPatch>,
    pub background: Option<f32>,
}

impl DepthLookup for InlineDepth {
    fn width(&self) -> u32 {
        self.width
    }
    fn height(&self) -> u32 {
        self.height
    }
    fn depth_at(&self, col: u32, row: u32) -> f32 {
        let (x, y) = (col as f64 + 0.5, row as f64 + 0.5);
        self.patches
            .iter()
            .rev()
            .find(|p| x >= p.rect.x_min && x < p.rect.x_max && y >= p.rect.y_min && y < p.rect.y_max)
            .map(|p| p.depth)
            .or(self.background)
            .unwrap_or(f32::NAN)
    }
}

fn is_valid_depth(v: f32) -> bool {
    v.is_finite() && v > 0.0
}

/// Median of the valid depths inside the central window of `bbox`.
///
/// The window keeps the bbox center and scales each side by
/// [`DEPTH_WINDOW_SCALE`]. A pixel is sampled when its center lies in the
/// window; a window too small to contain any center samples the pixel under
/// the bbox center. Even counts average the two middle values.
pub fn sample_depth(raster: &dyn DepthLookup, bbox: &BBox) -> Result<f64, DepthError> {
    let (w, h) = (raster.width() as f64, raster.height() as f64);
    let win = bbox.scaled(DEPTH_WINDOW_SCALE);
    // pixel col covers [col, col+1); center inside [x_min, x_max]
    let c0 = (win.x_min - 0.5).ceil().max(0.0);
    let c1 = (win.x_max - 0.5).floor().min(w - 1.0);
    let r0 = (win.y_min - 0.5).ceil().max(0.0);
    let r1 = (win.y_max - 0.5).floor().min(h - 1.0);
    let mut samples = Vec::new();
    let mut total = 0usize;
    if c0 <= c1 && r0 <= r1 {
        for row in r0 as u32..=r1 as u32 {
            for col in c0 as u32..=c1 as u32 {
                total += 1;
                let v = raster.depth_at(col, row);
                if is_valid_depth(v) {
                    samples.push(v as f64);
                }
            }
        }
    } else {
        let c = bbox.centroid();
        if !(c.x >= 0.0 && c.y >= 0.0 && c.x < w && c.y < h) {
            return Err(DepthError::OutsideRaster);
        }
        total = 1;
        let v = raster.depth_at(c.x as u32, c.y as u32);
        if is_valid_depth(v) {
            samples.push(v as f64);
        }
    }
    if samples.is_empty() || (samples.len() as f64) < MIN_VALID_DEPTH_FRACTION * total as f64 {
        return Err(DepthError::Insufficient { valid: samples.len(), total });
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    Ok(if n % 2 == 1 { samples[n / 2] } else { 0.5 * (samples[n / 2 - 1] + samples[n / 2]) })
}

/// Gaze ray anchored at the face-box center.
pub fn make_gaze_ray(face: &DynamicOoi, angles: GazeAngles) -> Ray {
    Ray { origin: face.face_box.center, direction: angles_to_direction(angles) }
}

/// The placement transform of the canonical gaze ray (origin at zero,
/// looking along -z) for a face and gaze angles.
pub fn gaze_transform(face: &DynamicOoi, angles: GazeAngles) -> RigidTransform {
    RigidTransform { rotation: direction_to_rotation(angles_to_direction(angles)), translation: face.face_box.center }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeEvent {
    pub frame_index: u64,
    pub timestamp_s: f64,
    /// Index of the source detection within its frame record.
    pub detection_index: usize,
    pub observer: String,
    /// Hit object label, `None` when the ray leaves the scene.
    pub target: Option<String>,
    pub hit_point: Option<Vec3>,
    pub t_min: Option<f64>,
    /// Fixation time attributed to this sample.
    #[serde(default)]
    pub duration_s: f64,
}

/// Why a detection produced no gaze event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Unidentified,
    IdentityConflict,
    InvalidBbox,
    BboxOutsideImage,
    NoGaze,
    InvalidGaze,
    DepthMissing,
    DepthUnreadable,
    DepthInsufficient,
    DuplicateParticipant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedDetection {
    pub frame_index: u64,
    pub detection_index: usize,
    pub reason: DropReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Identity verdict for one detection, as decided upstream.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectionIdentity {
    Known(String),
    Unidentified,
    Conflict,
}

impl From<&Identity> for DetectionIdentity {
    fn from(i: &Identity) -> Self {
        match i {
            Identity::Participant(p) => DetectionIdentity::Known(p.clone()),
            Identity::Unidentified => DetectionIdentity::Unidentified,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FrameOutput {
    pub events: Vec<GazeEvent>,
    pub dropped: Vec<DroppedDetection>,
    pub warnings: Vec<GeometryWarning>,
}

/// Encodes one frame into gaze events.
///
/// Every identified detection with a usable bbox and depth becomes a
/// participant target. Those with gaze angles also cast a ray that ignores
/// their own face and body. Each detection yields exactly one event or one
/// [`DroppedDetection`].
pub fn encode_frame(
    frame: &FrameRecord,
    identities: &[DetectionIdentity],
    depth: Result<&dyn DepthLookup, DropReason>,
    scene: &SceneModel,
    static_bvh: &Arc<Bvh>,
) -> FrameOutput {
    let mut out = FrameOutput::default();
    let k = &scene.intrinsics;
    let fi = frame.frame_index;
    let drop = |out: &mut FrameOutput, i: usize, reason: DropReason, detail: Option<String>| {
        out.dropped.push(DroppedDetection { frame_index: fi, detection_index: i, reason, detail });
    };

    // (detection index, dynamic object, gaze)
    let mut placed: Vec<(usize, DynamicOoi, Option<GazeAngles>)> = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for (i, det) in frame.detections.iter().enumerate() {
        let pid = match identities.get(i) {
            Some(DetectionIdentity::Known(p)) => p,
            Some(DetectionIdentity::Conflict) => {
                drop(&mut out, i, DropReason::IdentityConflict, None);
                continue;
            }
            _ => {
                drop(&mut out, i, DropReason::Unidentified, None);
                continue;
            }
        };
        if !det.bbox.is_valid() {
            drop(&mut out, i, DropReason::InvalidBbox, None);
            continue;
        }
        let Some(bbox) = det.bbox.clamped(k).filter(|b| b.width() >= 1.0 && b.height() >= 1.0) else {
            drop(&mut out, i, DropReason::BboxOutsideImage, None);
            continue;
        };
        let raster = match depth {
            Ok(r) => r,
            Err(reason) => {
                drop(&mut out, i, reason, None);
                continue;
            }
        };
        let z = match sample_depth(raster, &bbox) {
            Ok(z) => z,
            Err(e) => {
                drop(&mut out, i, DropReason::DepthInsufficient, Some(e.to_string()));
                continue;
            }
        };
        if let Some(&first) = seen.get(pid.as_str()) {
            drop(&mut out, i, DropReason::DuplicateParticipant, Some(format!("{pid} already placed by detection {first}")));
            continue;
        }
        match build_dynamic_ooi(pid, fi, &bbox, z, k, scene.floor_y, scene.body_dims) {
            Ok((d, warning)) => {
                out.warnings.extend(warning);
                seen.insert(pid.as_str(), i);
                placed.push((i, d, det.gaze));
            }
            Err(e) => drop(&mut out, i, DropReason::DepthInsufficient, Some(e.to_string())),
        }
    }

    let dynamics: Vec<DynamicOoi> = placed.iter().map(|(_, d, _)| d.clone()).collect();
    let frame_scene = assemble_frame_scene(&scene.statics, dynamics, scene.floor_y, fi)
        .expect("participants are unique within the frame");
    let bvh = SceneBvh::new(Arc::clone(static_bvh), &frame_scene);

    for (j, (i, d, gaze)) in placed.iter().enumerate() {
        let Some(gaze) = gaze else {
            drop(&mut out, *i, DropReason::NoGaze, None);
            continue;
        };
        if gaze.validate().is_err() {
            drop(&mut out, *i, DropReason::InvalidGaze, None);
            continue;
        }
        let ray = make_gaze_ray(d, *gaze);
        let exclude = [frame_scene.face_mesh_id(j), frame_scene.body_mesh_id(j)];
        let hit = bvh.closest_hit(&ray, &exclude);
        out.events.push(GazeEvent {
            frame_index: fi,
            timestamp_s: frame.timestamp_s,
            detection_index: *i,
            observer: d.participant_id.clone(),
            target: hit.as_ref().map(|h| h.ooi_label.to_string()),
            hit_point: hit.as_ref().map(|h| h.point),
            t_min: hit.as_ref().map(|h| h.t),
            duration_s: 0.0,
        });
    }
    out.events.sort_by_key(|e| e.detection_index);
    out.dropped.sort_by_key(|d| d.detection_index);
    out
}
