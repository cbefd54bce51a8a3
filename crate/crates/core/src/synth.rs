//! Scripted synthetic sessions with exact ground truth.
//!
//! The forward model inverts the pipeline's math: a face at camera-frame
//! position `p` is rendered as a pixel bbox centered on `project(p)` whose
//! size is `face_size * f / z`, the depth under it is `z`, and the gaze
//! angles point from `p` at the scripted target.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::geometry::{CameraIntrinsics, GazeAngles, Mat3, Vec3};
use crate::io::{write_depth_raster, write_frames, DepthRef, FrameRecord, RunConfig};
use crate::pipeline::{DepthPatch, DepthRaster, DepthLookup, InlineDepth};
use crate::reid::Gallery;
use crate::scene::{BodyDims, PoseConfig, SceneConfig, StaticConfig, TriangleMesh, DEFAULT_BODY_DIMS};
use crate::tracking::{BBox, Detection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("scenario: {0}")]
    Script(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub label: String,
    /// Camera-frame center.
    pub center: [f64; 3],
    /// Width and height in meters.
    pub size: [f64; 2],
    /// Rotation about +y in degrees; 0 faces the camera.
    #[serde(default)]
    pub yaw_deg: f64,
    /// Grid cells along width and height (two triangles per cell).
    #[serde(default = "one_by_one")]
    pub subdivisions: [u32; 2],
}

fn one_by_one() -> [u32; 2] {
    [1, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    /// Face center in the camera frame.
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSegment {
    pub start: f64,
    pub end: f64,
    /// Static label or participant id; `None` looks down at the desk.
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantSpec {
    pub id: String,
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub gaze: Vec<GazeSegment>,
    /// `[start, end)` windows where the face is not detected.
    #[serde(default)]
    pub occlusions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub centroid_jitter_px: f64,
    pub embedding_sigma: f64,
    pub depth_sigma: f64,
    pub dropout_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthMode {
    /// Piecewise-constant depth stored in the frame records.
    #[default]
    Inline,
    /// One raster file per frame.
    Raster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub fps: f64,
    pub duration_s: f64,
    pub intrinsics: CameraIntrinsics,
    pub floor_y: f64,
    #[serde(default = "default_body_dims")]
    pub body_dims: BodyDims,
    /// Physical face width and height in meters.
    #[serde(default = "default_face_size")]
    pub face_size: [f64; 2],
    pub statics: Vec<QuadSpec>,
    pub participants: Vec<ParticipantSpec>,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_anchors")]
    pub anchors_per_participant: usize,
    #[serde(default = "default_threshold")]
    pub reid_threshold: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub depth_mode: DepthMode,
}

fn default_body_dims() -> BodyDims {
    DEFAULT_BODY_DIMS
}
fn default_face_size() -> [f64; 2] {
    [0.16, 0.22]
}
fn default_embedding_dim() -> usize {
    128
}
fn default_anchors() -> usize {
    3
}
fn default_threshold() -> f64 {
    crate::reid::DEFAULT_THRESHOLD
}

/// Desk-ward direction used for untargeted gaze.
const DOWNWARD_GAZE: Vec3 = Vec3::new(0.0, 1.0, 0.2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frame_index: u64,
    pub detection_index: usize,
    pub participant: String,
    pub target: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub scene: SceneConfig,
    /// `(file name, mesh in local coordinates)`, referenced by `scene`.
    pub meshes: Vec<(String, TriangleMesh)>,
    pub gallery: Gallery,
    pub frames: Vec<FrameRecord>,
    /// Depth patches per frame, far to near.
    pub depth_patches: Vec<Vec<DepthPatch>>,
    pub ground_truth: Vec<GroundTruth>,
    pub depth_mode: DepthMode,
}

fn lerp_position(w: &[Waypoint], t: f64) -> Vec3 {
    let first = &w[0];
    if t <= first.t {
        return Vec3::from_array(first.position);
    }
    for pair in w.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if t <= b.t {
            let f = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 1.0 };
            let (pa, pb) = (Vec3::from_array(a.position), Vec3::from_array(b.position));
            return pa + (pb - pa) * f;
        }
    }
    Vec3::from_array(w[w.len() - 1].position)
}

fn rotation_y(deg: f64) -> Mat3 {
    Mat3::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), deg.to_radians())
}

/// Subdivided quad in its local XY plane, centered at the origin, facing -z.
pub fn quad_mesh(label: &str, size: [f64; 2], cells: [u32; 2]) -> TriangleMesh {
    let (nx, ny) = (cells[0].max(1), cells[1].max(1));
    let mut vertices = Vec::with_capacity(((nx + 1) * (ny + 1)) as usize);
    for j in 0..=ny {
        for i in 0..=nx {
            let x = -0.5 * size[0] + size[0] * i as f64 / nx as f64;
            let y = -0.5 * size[1] + size[1] * j as f64 / ny as f64;
            vertices.push(Vec3::new(x, y, 0.0));
        }
    }
    let mut triangles = Vec::with_capacity((2 * nx * ny) as usize);
    let idx = |i: u32, j: u32| j * (nx + 1) + i;
    for j in 0..ny {
        for i in 0..nx {
            // counter-clockwise seen from -z
            triangles.push([idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)]);
        }
    }
    TriangleMesh { name: label.to_string(), vertices, triangles }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn perturbed_unit(rng: &mut ChaCha8Rng, base: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return base.to_vec();
    }
    let v: Vec<f64> = base.iter().map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

impl ScenarioScript {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Script(m));
        if !(self.fps > 0.0 && self.duration_s > 0.0) {
            return bad("fps and duration_s must be positive".into());
        }
        self.intrinsics.validate().map_err(|e| SynthError::Script(e.to_string()))?;
        if self.embedding_dim == 0 || self.anchors_per_participant == 0 {
            return bad("embedding_dim and anchors_per_participant must be positive".into());
        }
        let mut labels = std::collections::BTreeSet::new();
        for s in &self.statics {
            if !labels.insert(s.label.as_str()) {
                return bad(format!("duplicate label {}", s.label));
            }
        }
        for p in &self.participants {
            if !labels.insert(p.id.as_str()) {
                return bad(format!("participant id {} collides with another label", p.id));
            }
            if p.waypoints.is_empty() {
                return bad(format!("participant {} has no waypoints", p.id));
            }
            if p.waypoints.windows(2).any(|w| w[1].t < w[0].t) {
                return bad(format!("participant {} waypoints are not time-ordered", p.id));
            }
            if let Some(w) = p.waypoints.iter().find(|w| w.position[2] <= 0.0) {
                return bad(format!("participant {} is behind the camera at t={}", p.id, w.t));
            }
        }
        for p in &self.participants {
            for g in &p.gaze {
                if let Some(t) = &g.target {
                    if !labels.contains(t.as_str()) {
                        return bad(format!("participant {} gazes at unknown target {t}", p.id));
                    }
                    if t == &p.id {
                        return bad(format!("participant {} gazes at itself", p.id));
                    }
                }
            }
        }
        Ok(())
    }

    fn gaze_target_at<'a>(&self, p: &'a ParticipantSpec, t: f64) -> Option<&'a str> {
        p.gaze.iter().find(|g| t >= g.start && t < g.end).and_then(|g| g.target.as_deref())
    }

    fn aim_point(&self, target: &str, t: f64) -> Vec3 {
        if let Some(s) = self.statics.iter().find(|s| s.label == target) {
            return Vec3::from_array(s.center);
        }
        let p = self.participants.iter().find(|p| p.id == target).expect("validated target");
        lerp_position(&p.waypoints, t)
    }

    /// Generates the dataset; identical seeds give identical output.
    pub fn generate(&self, seed: u64) -> Result<SyntheticDataset, SynthError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.intrinsics;

        let mut anchors: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        let mut canonical: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for p in &self.participants {
            let base = random_unit(&mut rng, self.embedding_dim);
            let mut list = vec![base.clone()];
            for _ in 1..self.anchors_per_participant {
                list.push(perturbed_unit(&mut rng, &base, 0.02));
            }
            anchors.insert(p.id.clone(), list);
            canonical.insert(p.id.as_str(), base);
        }
        let gallery = Gallery::new(self.embedding_dim, self.reid_threshold, anchors)
            .map_err(|e| SynthError::Script(e.to_string()))?;

        let mut meshes = Vec::new();
        let mut statics = Vec::new();
        for s in &self.statics {
            let file = format!("meshes/{}.obj", s.label.to_lowercase());
            meshes.push((file.clone(), quad_mesh(&s.label, s.size, s.subdivisions)));
            let r = rotation_y(s.yaw_deg).0;
            statics.push(StaticConfig {
                label: s.label.clone(),
                mesh: file,
                pose: PoseConfig {
                    rotation: [r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]],
                    translation: s.center,
                },
            });
        }
        let scene = SceneConfig { intrinsics: k, floor_y: self.floor_y, r#static: statics, body_dims: self.body_dims };

        let depth_noise = Normal::new(0.0, self.noise.depth_sigma.max(0.0)).expect("finite sigma");
        let jitter = Normal::new(0.0, self.noise.centroid_jitter_px.max(0.0)).expect("finite sigma");
        let n = self.frame_count();
        let mut frames = Vec::with_capacity(n);
        let mut depth_patches = Vec::with_capacity(n);
        let mut ground_truth = Vec::new();
        for fi in 0..n {
            let t = fi as f64 / self.fps;
            // (participant, detection, depth)
            let mut visible: Vec<(&ParticipantSpec, Detection, f64)> = Vec::new();
            for p in &self.participants {
                if p.occlusions.iter().any(|w| t >= w[0] && t < w[1]) {
                    continue;
                }
                if self.noise.dropout_prob > 0.0 && rng.gen_bool(self.noise.dropout_prob.min(1.0)) {
                    continue;
                }
                let pos = lerp_position(&p.waypoints, t);
                let px = k.project(pos).map_err(|_| {
                    SynthError::Script(format!("participant {} is behind the camera at t={t}", p.id))
                })?;
                let (jx, jy) = if self.noise.centroid_jitter_px > 0.0 {
                    (jitter.sample(&mut rng), jitter.sample(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                let hw = 0.5 * self.face_size[0] * k.fx / pos.z;
                let hh = 0.5 * self.face_size[1] * k.fy / pos.z;
                let (cx, cy) = (px.x + jx, px.y + jy);
                let bbox = BBox::new(cx - hw, cy - hh, cx + hw, cy + hh);
                if bbox.x_min < 0.0 || bbox.y_min < 0.0 || bbox.x_max > k.width as f64 || bbox.y_max > k.height as f64 {
                    return Err(SynthError::Script(format!("participant {} leaves the image at t={t}", p.id)));
                }
                let dir = match self.gaze_target_at(p, t) {
                    Some(target) => (self.aim_point(target, t) - pos).normalized(),
                    None => DOWNWARD_GAZE.normalized(),
                }
                .ok_or_else(|| SynthError::Script(format!("participant {} gaze is undefined at t={t}", p.id)))?;
                let embedding = perturbed_unit(&mut rng, &canonical[p.id.as_str()], self.noise.embedding_sigma);
                let depth = if self.noise.depth_sigma > 0.0 { pos.z + depth_noise.sample(&mut rng) } else { pos.z };
                let det = Detection {
                    frame_index: fi as u64,
                    bbox,
                    embedding: Some(embedding),
                    gaze: Some(GazeAngles::from_direction(dir)),
                };
                visible.push((p, det, depth));
            }
            visible.shuffle(&mut rng);
            let mut patches: Vec<DepthPatch> =
                visible.iter().map(|(_, d, z)| DepthPatch { rect: d.bbox, depth: *z as f32 }).collect();
            patches.sort_by(|a, b| b.depth.total_cmp(&a.depth));
            for (i, (p, _, _)) in visible.iter().enumerate() {
                ground_truth.push(GroundTruth {
                    frame_index: fi as u64,
                    detection_index: i,
                    participant: p.id.clone(),
                    target: self.gaze_target_at(p, t).map(str::to_string),
                });
            }
            let depth = match self.depth_mode {
                DepthMode::Inline => DepthRef::Inline { patches: patches.clone(), background: None },
                DepthMode::Raster => DepthRef::Path { path: raster_name(fi) },
            };
            frames.push(FrameRecord {
                frame_index: fi as u64,
                timestamp_s: t,
                detections: visible.into_iter().map(|(_, d, _)| d).collect(),
                depth: Some(depth),
            });
            depth_patches.push(patches);
        }
        Ok(SyntheticDataset { scene, meshes, gallery, frames, depth_patches, ground_truth, depth_mode: self.depth_mode })
    }
}

fn raster_name(frame: usize) -> String {
    format!("depth/{frame:06}.draster")
}

/// Background depth used when rasters are materialized.
const RASTER_BACKGROUND: f32 = 9.0;

impl SyntheticDataset {
    /// Full-resolution raster for a frame.
    pub fn raster(&self, frame: usize) -> DepthRaster {
        let k = &self.scene.intrinsics;
        let inline = InlineDepth {
            width: k.width,
            height: k.height,
            patches: self.depth_patches[frame].clone(),
            background: Some(RASTER_BACKGROUND),
        };
        let mut r = DepthRaster::filled(k.width, k.height, RASTER_BACKGROUND);
        for p in &inline.patches {
            let c0 = p.rect.x_min.floor().max(0.0) as u32;
            let c1 = (p.rect.x_max.ceil() as u32).min(k.width);
            let r0 = p.rect.y_min.floor().max(0.0) as u32;
            let r1 = (p.rect.y_max.ceil() as u32).min(k.height);
            for row in r0..r1 {
                for col in c0..c1 {
                    r.set(col, row, inline.depth_at(col, row));
                }
            }
        }
        r
    }

    /// Writes scene, meshes, gallery, frames, ground truth, optional rasters
    /// and a `run.json` config (output `out/`) into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<RunConfig, Error> {
        let io = |p: &Path, e: std::io::Error| Error::io(p.display().to_string(), e);
        fs::create_dir_all(dir.join("meshes")).map_err(|e| io(dir, e))?;
        for (file, mesh) in &self.meshes {
            let p = dir.join(file);
            fs::write(&p, mesh.to_obj()).map_err(|e| io(&p, e))?;
        }
        let write_json = |name: &str, body: String| -> Result<PathBuf, Error> {
            let p = dir.join(name);
            fs::write(&p, body + "\n").map_err(|e| io(&p, e))?;
            Ok(p)
        };
        let scene = write_json("scene.json", serde_json::to_string_pretty(&self.scene).expect("scene serializes"))?;
        let gallery = write_json("gallery.json", self.gallery.to_json())?;
        let frames = dir.join("frames.jsonl");
        write_frames(&frames, &self.frames)?;
        let mut gt = String::new();
        for g in &self.ground_truth {
            gt.push_str(&serde_json::to_string(g).expect("ground truth serializes"));
            gt.push('\n');
        }
        write_json("ground_truth.jsonl", gt.trim_end().to_string())?;
        if self.depth_mode == DepthMode::Raster {
            fs::create_dir_all(dir.join("depth")).map_err(|e| io(dir, e))?;
            for i in 0..self.frames.len() {
                write_depth_raster(&dir.join(raster_name(i)), &self.raster(i))?;
            }
        }
        let cfg = RunConfig {
            scene: PathBuf::from("scene.json"),
            gallery: PathBuf::from("gallery.json"),
            frames: PathBuf::from("frames.jsonl"),
            output: PathBuf::from("out"),
            ..Default::default()
        };
        write_json("run.json", serde_json::to_string_pretty(&cfg).expect("config serializes"))?;
        Ok(RunConfig {
            scene,
            gallery,
            frames,
            output: dir.join("out"),
            ..cfg
        })
    }
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruth>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse { path: path.display().to_string(), line: i + 1, msg: e.to_string() })
        })
        .collect()
}

/// Agreement between emitted events and ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agreement {
    pub ground_truth: usize,
    pub events: usize,
    /// Ground-truth samples with an event of the same observer and target.
    pub target_matches: usize,
    /// Events whose observer is the true participant of their detection.
    pub identity_matches: usize,
}

impl Agreement {
    pub fn target_accuracy(&self) -> f64 {
        if self.ground_truth == 0 {
            1.0
        } else {
            self.target_matches as f64 / self.ground_truth as f64
        }
    }

    pub fn identity_accuracy(&self) -> f64 {
        if self.events == 0 {
            1.0
        } else {
            self.identity_matches as f64 / self.events as f64
        }
    }
}

pub fn score_events(events: &[crate::pipeline::GazeEvent], truth: &[GroundTruth]) -> Agreement {
    let by_detection: BTreeMap<(u64, usize), &GroundTruth> =
        truth.iter().map(|g| ((g.frame_index, g.detection_index), g)).collect();
    let mut target_matches = 0;
    let mut identity_matches = 0;
    for e in events {
        if let Some(g) = by_detection.get(&(e.frame_index, e.detection_index)) {
            if g.participant == e.observer {
                identity_matches += 1;
                if g.target == e.target {
                    target_matches += 1;
                }
            }
        }
    }
    Agreement { ground_truth: truth.len(), events: events.len(), target_matches, identity_matches }
}

fn wp(t: f64, p: [f64; 3]) -> Waypoint {
    Waypoint { t, position: p }
}

fn seg(start: f64, end: f64, target: Option<&str>) -> GazeSegment {
    GazeSegment { start, end, target: target.map(str::to_string) }
}

fn hd_camera() -> CameraIntrinsics {
    CameraIntrinsics { fx: 1000.0, fy: 1000.0, cx: 960.0, cy: 540.0, width: 1920, height: 1080 }
}

impl ScenarioScript {
    /// One participant looking at a display straight ahead.
    pub fn single_display(duration_s: f64, fps: f64) -> Self {
        ScenarioScript {
            fps,
            duration_s,
            intrinsics: hd_camera(),
            floor_y: 1.5,
            body_dims: DEFAULT_BODY_DIMS,
            face_size: default_face_size(),
            statics: vec![QuadSpec {
                label: "DISPLAY".into(),
                center: [0.0, -0.4, 6.0],
                size: [3.0, 1.7],
                yaw_deg: 0.0,
                subdivisions: [1, 1],
            }],
            participants: vec![ParticipantSpec {
                id: "P".into(),
                waypoints: vec![wp(0.0, [0.2, -0.1, 3.0])],
                gaze: vec![seg(0.0, duration_s + 1.0, Some("DISPLAY"))],
                occlusions: Vec::new(),
            }],
            embedding_dim: 64,
            anchors_per_participant: 1,
            reid_threshold: default_threshold(),
            noise: NoiseSpec::default(),
            depth_mode: DepthMode::Inline,
        }
    }

    /// Teacher and two students, a display and a whiteboard, 60 s at
    /// 30 fps. With `occlusions`, each participant disappears once for
    /// 1.5 s, long enough to break its tracklet.
    pub fn classroom(occlusions: bool) -> Self {
        let (d, w) = (Some("DISPLAY"), Some("WHITEBOARD"));
        let occ = |a: f64, b: f64| if occlusions { vec![[a, b]] } else { Vec::new() };
        let teacher = ParticipantSpec {
            id: "T".into(),
            waypoints: vec![
                wp(0.0, [2.6, -0.15, 5.6]),
                wp(15.0, [3.0, -0.15, 5.9]),
                wp(30.0, [2.5, -0.12, 5.4]),
                wp(45.0, [2.9, -0.15, 5.7]),
                wp(60.0, [2.6, -0.15, 5.6]),
            ],
            gaze: vec![
                seg(0.0, 8.0, Some("S1")),
                seg(8.0, 16.0, d),
                seg(16.0, 24.0, Some("S2")),
                seg(24.0, 30.0, None),
                seg(30.0, 38.0, d),
                seg(38.0, 46.0, Some("S1")),
                seg(46.0, 52.0, Some("S2")),
                seg(52.0, 60.0, d),
            ],
            occlusions: occ(31.0, 32.5),
        };
        let s1 = ParticipantSpec {
            id: "S1".into(),
            waypoints: vec![wp(0.0, [-1.2, 0.0, 3.0]), wp(30.0, [-1.1, 0.02, 3.1]), wp(60.0, [-1.25, 0.0, 3.0])],
            gaze: vec![
                seg(0.0, 10.0, d),
                seg(10.0, 15.0, Some("T")),
                seg(15.0, 22.0, d),
                seg(22.0, 27.0, Some("S2")),
                seg(27.0, 35.0, None),
                seg(35.0, 45.0, d),
                seg(45.0, 50.0, Some("T")),
                seg(50.0, 60.0, d),
            ],
            occlusions: occ(36.0, 37.5),
        };
        let s2 = ParticipantSpec {
            id: "S2".into(),
            waypoints: vec![wp(0.0, [1.2, 0.05, 3.2]), wp(30.0, [1.3, 0.04, 3.25]), wp(60.0, [1.2, 0.05, 3.2])],
            gaze: vec![
                seg(0.0, 6.0, w),
                seg(6.0, 14.0, d),
                seg(14.0, 20.0, Some("S1")),
                seg(20.0, 28.0, Some("T")),
                seg(28.0, 36.0, d),
                seg(36.0, 42.0, w),
                seg(42.0, 50.0, d),
                seg(50.0, 60.0, Some("T")),
            ],
            occlusions: occ(53.0, 54.5),
        };
        ScenarioScript {
            fps: 30.0,
            duration_s: 60.0,
            intrinsics: hd_camera(),
            floor_y: 1.5,
            body_dims: DEFAULT_BODY_DIMS,
            face_size: default_face_size(),
            statics: vec![
                QuadSpec {
                    label: "DISPLAY".into(),
                    center: [0.0, -0.5, 7.0],
                    size: [3.0, 1.7],
                    yaw_deg: 0.0,
                    subdivisions: [1, 1],
                },
                QuadSpec {
                    label: "WHITEBOARD".into(),
                    center: [3.5, -0.3, 4.5],
                    size: [2.5, 1.2],
                    yaw_deg: 90.0,
                    subdivisions: [1, 1],
                },
            ],
            participants: vec![teacher, s1, s2],
            embedding_dim: 128,
            anchors_per_participant: 3,
            reid_threshold: default_threshold(),
            noise: NoiseSpec::default(),
            depth_mode: DepthMode::Inline,
        }
    }

    /// Six participants and two finely tessellated boards (50 000 static
    /// triangles), 60 s at 30 fps.
    pub fn dense_classroom() -> Self {
        let mut s = Self::classroom(false);
        s.statics[0].subdivisions = [125, 100];
        s.statics[1].subdivisions = [125, 100];
        let (d, w) = (Some("DISPLAY"), Some("WHITEBOARD"));
        let extra = [
            ("S3", [-0.3, 0.1, 4.2], [seg(0.0, 20.0, d), seg(20.0, 40.0, Some("T")), seg(40.0, 60.0, d)]),
            ("S4", [-2.2, 0.0, 4.8], [seg(0.0, 25.0, d), seg(25.0, 35.0, None), seg(35.0, 60.0, Some("S1"))]),
            ("S5", [0.4, -0.05, 2.4], [seg(0.0, 15.0, w), seg(15.0, 45.0, d), seg(45.0, 60.0, Some("S2"))]),
        ];
        for (id, p, gaze) in extra {
            s.participants.push(ParticipantSpec {
                id: id.into(),
                waypoints: vec![wp(0.0, p), wp(60.0, [p[0] + 0.1, p[1], p[2]])],
                gaze: gaze.to_vec(),
                occlusions: Vec::new(),
            });
        }
        s
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "single" => Some(Self::single_display(10.0, 30.0)),
            "classroom" => Some(Self::classroom(false)),
            "classroom-occluded" => Some(Self::classroom(true)),
            "dense" => Some(Self::dense_classroom()),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 4] = ["single", "classroom", "classroom-occluded", "dense"];
}
