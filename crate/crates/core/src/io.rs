//! File formats, run configuration and the end-to-end session runner.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    build_network, pool_timeline, timeline_csv, to_dot, to_json, Fixed6, SessionSpan, TimelineParams,
};
use crate::error::Error;
use crate::pipeline::{
    encode_frame, DepthLookup, DepthPatch, DepthRaster, DetectionIdentity, DropReason, DroppedDetection,
    FrameOutput, GazeEvent, InlineDepth,
};
use crate::raycast::Bvh;
use crate::reid::{resolve_conflicts, resolve_tracklet, Gallery, IdentityConflict, DEFAULT_EMBEDDING_SEARCH};
use crate::scene::{load_scene, GeometryWarning, SceneModel};
use crate::tracking::{Detection, Tracker, TrackingParams};

pub const EVENTS_FILE: &str = "gaze_events.jsonl";
pub const TIMELINE_FILE: &str = "timeline.csv";
pub const NETWORK_DOT_FILE: &str = "network.dot";
pub const NETWORK_JSON_FILE: &str = "network.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const TIMINGS_FILE: &str = "timings.json";
/// Every artifact written by [`run_session`] except the timing report.
pub const ARTIFACTS: [&str; 5] = [EVENTS_FILE, TIMELINE_FILE, NETWORK_DOT_FILE, NETWORK_JSON_FILE, DIAGNOSTICS_FILE];
pub const WORKERS_ENV: &str = "GAZETRACE_WORKERS";

/// Where a frame's depth comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DepthRef {
    /// Raster file, relative to the frames file.
    Path { path: String },
    /// Piecewise-constant depth given inline.
    Inline {
        patches: Vec<DepthPatch>,
        #[serde(default)]
        background: Option<f32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp_s: f64,
    #[serde(default)]
    pub detections: Vec<Detection>,
    #[serde(default)]
    pub depth: Option<DepthRef>,
}

/// Streaming reader over a JSON-Lines frame file.
pub struct FrameReader<R> {
    lines: std::io::Lines<R>,
    path: String,
    line_no: usize,
    last: Option<(u64, f64)>,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(reader: R, path: impl Into<String>) -> Self {
        Self { lines: reader.lines(), path: path.into(), line_no: 0, last: None }
    }

    fn parse_line(&mut self, line: &str) -> Result<FrameRecord, Error> {
        let err = |msg: String| Error::Parse { path: self.path.clone(), line: self.line_no, msg };
        let mut rec: FrameRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if !rec.timestamp_s.is_finite() {
            return Err(err("timestamp_s must be finite".into()));
        }
        for (i, d) in rec.detections.iter_mut().enumerate() {
            if !d.bbox.is_valid() {
                return Err(err(format!("detection {i}: bbox requires x_min < x_max and y_min < y_max")));
            }
            d.frame_index = rec.frame_index;
        }
        if let Some((f, t)) = self.last {
            if rec.frame_index <= f {
                return Err(err(format!("frame_index {} does not increase (previous {f})", rec.frame_index)));
            }
            if rec.timestamp_s < t {
                return Err(err(format!("timestamp {} decreases (previous {t})", rec.timestamp_s)));
            }
        }
        self.last = Some((rec.frame_index, rec.timestamp_s));
        Ok(rec)
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = Result<FrameRecord, Error>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(format!("{}:{}", self.path, self.line_no + 1), e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse_line(&line));
        }
    }
}

pub fn parse_frames(path: &Path) -> Result<FrameReader<BufReader<File>>, Error> {
    let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(FrameReader::new(BufReader::new(f), path.display().to_string()))
}

pub fn write_frames(path: &Path, frames: &[FrameRecord]) -> Result<(), Error> {
    let f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(f);
    for fr in frames {
        let line = serde_json::to_string(fr).map_err(|e| Error::Internal(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

const RASTER_MAGIC: &str = "DRASTER";

/// Reads `DRASTER <w> <h>\n` followed by `w*h` little-endian f32 values.
pub fn read_depth_raster(path: &Path) -> Result<DepthRaster, Error> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    decode_depth_raster(&bytes).map_err(|m| Error::Data(format!("{}: {m}", path.display())))
}

pub fn decode_depth_raster(bytes: &[u8]) -> Result<DepthRaster, String> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or("missing raster header")?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| "header is not ASCII")?;
    let mut parts = header.split(' ');
    if parts.next() != Some(RASTER_MAGIC) {
        return Err(format!("bad raster header {header:?}"));
    }
    let mut dim = || -> Result<u32, String> {
        parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| format!("bad raster header {header:?}"))
    };
    let (width, height) = (dim()?, dim()?);
    if parts.next().is_some() {
        return Err(format!("bad raster header {header:?}"));
    }
    let payload = &bytes[nl + 1..];
    let expected = width as usize * height as usize * 4;
    if payload.len() < expected {
        return Err(format!("truncated raster: {} bytes of {expected}", payload.len()));
    }
    if payload.len() > expected {
        return Err(format!("raster has {} trailing bytes", payload.len() - expected));
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(DepthRaster { width, height, values })
}

pub fn encode_depth_raster(r: &DepthRaster) -> Vec<u8> {
    let mut out = format!("{RASTER_MAGIC} {} {}\n", r.width, r.height).into_bytes();
    out.reserve(r.values.len() * 4);
    for v in &r.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_depth_raster(path: &Path, r: &DepthRaster) -> Result<(), Error> {
    fs::write(path, encode_depth_raster(r)).map_err(|e| Error::io(path.display().to_string(), e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: PathBuf,
    pub gallery: PathBuf,
    pub frames: PathBuf,
    pub output: PathBuf,
    pub tracking: TrackingParams,
    /// Overrides the gallery's own threshold.
    pub reid_threshold: Option<f64>,
    /// Leading detections searched for an embedding per tracklet.
    pub embedding_search: usize,
    pub timeline: TimelineParams,
    /// Duration attributed to the final frame is `1 / nominal_fps`.
    pub nominal_fps: f64,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: PathBuf::new(),
            gallery: PathBuf::new(),
            frames: PathBuf::new(),
            output: PathBuf::from("out"),
            tracking: TrackingParams::default(),
            reid_threshold: None,
            embedding_search: DEFAULT_EMBEDDING_SEARCH,
            timeline: TimelineParams::default(),
            nominal_fps: 30.0,
            workers: None,
            seed: None,
        }
    }
}

impl RunConfig {
    /// Loads a `.toml` or `.json` config; relative paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            _ => serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        };
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.scene, &mut cfg.gallery, &mut cfg.frames, &mut cfg.output] {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (name, p) in [("scene", &self.scene), ("gallery", &self.gallery), ("frames", &self.frames)] {
            if !p.is_file() {
                return Err(Error::Config(format!("{name} file {} does not exist", p.display())));
            }
        }
        let t = &self.tracking;
        if !(t.max_distance_px.is_finite() && t.max_distance_px > 0.0) {
            return Err(Error::Config("tracking.max_distance_px must be > 0".into()));
        }
        if let Some(th) = self.reid_threshold {
            if !(-1.0..=1.0).contains(&th) {
                return Err(Error::Config(format!("reid_threshold {th} outside [-1, 1]")));
            }
        }
        if self.embedding_search == 0 {
            return Err(Error::Config("embedding_search must be >= 1".into()));
        }
        if !(self.nominal_fps.is_finite() && self.nominal_fps > 0.0) {
            return Err(Error::Config("nominal_fps must be > 0".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        self.timeline.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Worker count: `GAZETRACE_WORKERS`, then the config, then the number
    /// of available cores.
    pub fn effective_workers(&self) -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .or(self.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Serialize)]
struct EventLine<'a> {
    frame_index: u64,
    timestamp_s: Fixed6,
    detection_index: usize,
    observer: &'a str,
    target: Option<&'a str>,
    hit_point: Option<[Fixed6; 3]>,
    t_min: Option<Fixed6>,
    duration_s: Fixed6,
}

#[derive(Deserialize)]
struct EventLineIn {
    frame_index: u64,
    timestamp_s: f64,
    detection_index: usize,
    observer: String,
    target: Option<String>,
    hit_point: Option<[f64; 3]>,
    t_min: Option<f64>,
    duration_s: f64,
}

/// One JSON object per line, floats with six decimals.
pub fn events_jsonl(events: &[GazeEvent]) -> String {
    let mut s = String::new();
    for e in events {
        let line = EventLine {
            frame_index: e.frame_index,
            timestamp_s: Fixed6(e.timestamp_s),
            detection_index: e.detection_index,
            observer: &e.observer,
            target: e.target.as_deref(),
            hit_point: e.hit_point.map(|p| [Fixed6(p.x), Fixed6(p.y), Fixed6(p.z)]),
            t_min: e.t_min.map(Fixed6),
            duration_s: Fixed6(e.duration_s),
        };
        s.push_str(&serde_json::to_string(&line).expect("event serializes"));
        s.push('\n');
    }
    s
}

pub fn read_events(path: &Path) -> Result<Vec<GazeEvent>, Error> {
    let f = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: EventLineIn = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(GazeEvent {
            frame_index: e.frame_index,
            timestamp_s: e.timestamp_s,
            detection_index: e.detection_index,
            observer: e.observer,
            target: e.target,
            hit_point: e.hit_point.map(crate::geometry::Vec3::from_array),
            t_min: e.t_min,
            duration_s: e.duration_s,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackletReport {
    pub tracklet_id: u64,
    pub identity: String,
    pub match_score: Fixed6,
    pub first_frame: u64,
    pub last_frame: u64,
    pub detections: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub frames: usize,
    pub detections: usize,
    pub events: usize,
    pub dropped_counts: BTreeMap<DropReason, usize>,
    pub dropped: Vec<DroppedDetection>,
    pub identity_conflicts: Vec<ConflictReport>,
    pub geometry_warnings: Vec<GeometryWarning>,
    pub tracklets: Vec<TrackletReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConflictReport {
    pub participant: String,
    pub kept_tracklet: u64,
    pub kept_score: Fixed6,
    pub demoted_tracklet: u64,
    pub demoted_score: Fixed6,
}

impl From<&IdentityConflict> for ConflictReport {
    fn from(c: &IdentityConflict) -> Self {
        Self {
            participant: c.participant.clone(),
            kept_tracklet: c.kept_tracklet,
            kept_score: Fixed6(c.kept_score),
            demoted_tracklet: c.demoted_tracklet,
            demoted_score: Fixed6(c.demoted_score),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageTimings {
    pub load_s: f64,
    pub tracking_s: f64,
    pub reid_s: f64,
    pub encode_s: f64,
    pub analytics_s: f64,
    pub write_s: f64,
    pub total_s: f64,
    pub workers: usize,
}

/// In-memory result of a session, before anything is written.
#[derive(Debug, Clone)]
pub struct SessionResult {
    pub events: Vec<GazeEvent>,
    pub diagnostics: Diagnostics,
    pub timings: StageTimings,
    pub span: Option<SessionSpan>,
}

#[derive(Debug, Clone)]
pub struct SessionSummary {
    pub output: PathBuf,
    pub frames: usize,
    pub events: usize,
    pub dropped: usize,
    pub timings: StageTimings,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn load_depth(
    frame: &FrameRecord,
    base: &Path,
    k: &crate::geometry::CameraIntrinsics,
) -> Result<Box<dyn DepthLookup>, DropReason> {
    match &frame.depth {
        None => Err(DropReason::DepthMissing),
        Some(DepthRef::Inline { patches, background }) => Ok(Box::new(InlineDepth {
            width: k.width,
            height: k.height,
            patches: patches.clone(),
            background: *background,
        })),
        Some(DepthRef::Path { path }) => {
            let r = read_depth_raster(&base.join(path)).map_err(|e| {
                log::warn!("frame {}: {e}", frame.frame_index);
                DropReason::DepthUnreadable
            })?;
            if r.width != k.width || r.height != k.height {
                log::warn!(
                    "frame {}: raster {}x{} does not match camera {}x{}",
                    frame.frame_index,
                    r.width,
                    r.height,
                    k.width,
                    k.height
                );
                return Err(DropReason::DepthUnreadable);
            }
            Ok(Box::new(r))
        }
    }
}

/// Runs tracking, re-identification, gaze encoding and analytics over
/// loaded inputs.
pub fn process_session(
    scene: &SceneModel,
    gallery: &Gallery,
    frames: &[FrameRecord],
    depth_base: &Path,
    cfg: &RunConfig,
) -> Result<SessionResult, Error> {
    let mut timings = StageTimings { workers: cfg.effective_workers(), ..Default::default() };

    let t = Instant::now();
    let mut tracker = Tracker::new(cfg.tracking);
    let mut tracklet_of: Vec<Vec<u64>> = Vec::with_capacity(frames.len());
    for f in frames {
        tracklet_of.push(tracker.push_frame(f.detections.clone())?.tracklet_of);
    }
    let tracklets = tracker.finish(frames.last().map_or(0, |f| f.frame_index));
    timings.tracking_s = secs(t);

    let t = Instant::now();
    let mut resolved: Vec<_> =
        tracklets.into_iter().map(|tr| resolve_tracklet(tr, gallery, cfg.embedding_search)).collect();
    let conflicts = resolve_conflicts(&mut resolved);
    let demoted: std::collections::HashSet<u64> = conflicts.iter().map(|c| c.demoted_tracklet).collect();
    let verdict: HashMap<u64, DetectionIdentity> = resolved
        .iter()
        .map(|r| {
            let id = r.tracklet.tracklet_id;
            let v = if demoted.contains(&id) { DetectionIdentity::Conflict } else { (&r.identity).into() };
            (id, v)
        })
        .collect();
    let tracklet_reports = resolved
        .iter()
        .map(|r| TrackletReport {
            tracklet_id: r.tracklet.tracklet_id,
            identity: r.identity.to_string(),
            match_score: Fixed6(r.match_score),
            first_frame: r.tracklet.first_frame(),
            last_frame: r.tracklet.last_seen,
            detections: r.tracklet.detections.len(),
        })
        .collect();
    drop(resolved);
    timings.reid_s = secs(t);

    let t = Instant::now();
    let statics = &scene.statics;
    let static_bvh =
        Arc::new(Bvh::build(statics.iter().enumerate().map(|(i, s)| (i as u32, s.label.as_str(), &s.mesh))));
    let encode = |(f, ids): (&FrameRecord, &Vec<u64>)| -> FrameOutput {
        let identities: Vec<DetectionIdentity> = ids.iter().map(|id| verdict[id].clone()).collect();
        let depth = load_depth(f, depth_base, &scene.intrinsics);
        encode_frame(f, &identities, depth.as_deref().map_err(|r| *r), scene, &static_bvh)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(timings.workers)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let outputs: Vec<FrameOutput> =
        pool.install(|| frames.par_iter().zip(tracklet_of.par_iter()).map(encode).collect());
    timings.encode_s = secs(t);

    let t = Instant::now();
    let nominal = 1.0 / cfg.nominal_fps;
    let mut events = Vec::new();
    let mut dropped = Vec::new();
    let mut warnings = Vec::new();
    for (i, out) in outputs.into_iter().enumerate() {
        let duration = frames.get(i + 1).map_or(nominal, |n| n.timestamp_s - frames[i].timestamp_s);
        events.extend(out.events.into_iter().map(|mut e| {
            e.duration_s = duration;
            e
        }));
        dropped.extend(out.dropped);
        warnings.extend(out.warnings);
    }
    let span = match (frames.first(), frames.last()) {
        (Some(a), Some(b)) => Some(SessionSpan { start: a.timestamp_s, end: b.timestamp_s + nominal }),
        _ => None,
    };
    let mut dropped_counts = BTreeMap::new();
    for d in &dropped {
        *dropped_counts.entry(d.reason).or_insert(0) += 1;
    }
    let diagnostics = Diagnostics {
        frames: frames.len(),
        detections: frames.iter().map(|f| f.detections.len()).sum(),
        events: events.len(),
        dropped_counts,
        dropped,
        identity_conflicts: conflicts.iter().map(ConflictReport::from).collect(),
        geometry_warnings: warnings,
        tracklets: tracklet_reports,
    };
    timings.analytics_s = secs(t);
    Ok(SessionResult { events, diagnostics, timings, span })
}

/// Renders every artifact, keyed by file name.
pub fn render_artifacts(result: &SessionResult, params: &TimelineParams) -> Result<Vec<(&'static str, String)>, Error> {
    let timeline = pool_timeline(&result.events, params, result.span)?;
    let net = build_network(&result.events);
    let mut diag = serde_json::to_string_pretty(&result.diagnostics).map_err(|e| Error::Internal(e.to_string()))?;
    diag.push('\n');
    Ok(vec![
        (EVENTS_FILE, events_jsonl(&result.events)),
        (TIMELINE_FILE, timeline_csv(&timeline)),
        (NETWORK_DOT_FILE, to_dot(&net)),
        (NETWORK_JSON_FILE, to_json(&net)),
        (DIAGNOSTICS_FILE, diag),
    ])
}

/// Loads inputs, runs the session and writes all artifacts into
/// `cfg.output`. Files are staged and moved into place only once everything
/// succeeded; a failure leaves no partial outputs.
pub fn run_session(cfg: &RunConfig) -> Result<SessionSummary, Error> {
    let start = Instant::now();
    cfg.validate()?;
    let scene = load_scene(&cfg.scene)?;
    let mut gallery = Gallery::load(&cfg.gallery)?;
    if let Some(th) = cfg.reid_threshold {
        gallery = gallery.with_threshold(th)?;
    }
    let frames: Vec<FrameRecord> = parse_frames(&cfg.frames)?.collect::<Result<_, _>>()?;
    if let Some(f) = frames.iter().find_map(|f| f.detections.iter().find_map(|d| d.embedding.as_ref())) {
        if f.len() != gallery.dimension() {
            return Err(Error::Data(format!(
                "frame embeddings have dimension {} but the gallery expects {}",
                f.len(),
                gallery.dimension()
            )));
        }
    }
    let load_s = secs(start);
    let base = cfg.frames.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut result = process_session(&scene, &gallery, &frames, &base, cfg)?;
    result.timings.load_s = load_s;

    let t = Instant::now();
    let artifacts = render_artifacts(&result, &cfg.timeline)?;
    write_outputs(&cfg.output, &artifacts)?;
    result.timings.write_s = secs(t);
    result.timings.total_s = secs(start);
    let mut timings = serde_json::to_string_pretty(&result.timings).map_err(|e| Error::Internal(e.to_string()))?;
    timings.push('\n');
    fs::write(cfg.output.join(TIMINGS_FILE), timings)
        .map_err(|e| Error::io(cfg.output.join(TIMINGS_FILE).display().to_string(), e))?;

    Ok(SessionSummary {
        output: cfg.output.clone(),
        frames: frames.len(),
        events: result.events.len(),
        dropped: result.diagnostics.dropped.len(),
        timings: result.timings,
    })
}

fn write_outputs(dir: &Path, artifacts: &[(&str, String)]) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let staging = dir.join(".gazetrace-staging");
    let _ = fs::remove_dir_all(&staging);
    let attempt = || -> Result<(), Error> {
        fs::create_dir_all(&staging).map_err(|e| Error::io(staging.display().to_string(), e))?;
        for (name, body) in artifacts {
            let p = staging.join(name);
            fs::write(&p, body).map_err(|e| Error::io(p.display().to_string(), e))?;
        }
        for (name, _) in artifacts {
            fs::rename(staging.join(name), dir.join(name))
                .map_err(|e| Error::io(dir.join(name).display().to_string(), e))?;
        }
        Ok(())
    };
    let r = attempt();
    if r.is_err() {
        for (name, _) in artifacts {
            let _ = fs::remove_file(dir.join(name));
        }
    }
    let _ = fs::remove_dir_all(&staging);
    r
}

/// Lint report for `validate`.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub static_objects: usize,
    pub static_triangles: usize,
    pub participants: usize,
    pub embedding_dimension: usize,
    pub frames: usize,
    pub detections: usize,
}

pub fn validate_inputs(scene: &Path, gallery: &Path, frames: Option<&Path>) -> Result<ValidationReport, Error> {
    let s = load_scene(scene)?;
    let g = Gallery::load(gallery)?;
    let (mut n_frames, mut n_dets) = (0, 0);
    if let Some(p) = frames {
        for f in parse_frames(p)? {
            let f = f?;
            n_frames += 1;
            n_dets += f.detections.len();
            for d in &f.detections {
                if let Some(e) = &d.embedding {
                    if e.len() != g.dimension() {
                        return Err(Error::Data(format!(
                            "frame {}: embedding dimension {} != gallery {}",
                            f.frame_index,
                            e.len(),
                            g.dimension()
                        )));
                    }
                }
            }
        }
    }
    Ok(ValidationReport {
        static_objects: s.statics.len(),
        static_triangles: s.static_triangle_count(),
        participants: g.participants().count(),
        embedding_dimension: g.dimension(),
        frames: n_frames,
        detections: n_dets,
    })
}
