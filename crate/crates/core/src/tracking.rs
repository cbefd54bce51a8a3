//! Frame-to-frame association of face detections into tracklets by
//! centroid distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::capped_assignment;
use crate::geometry::{CameraIntrinsics, GazeAngles, Pixel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error("detections carry mixed frame indices ({0} and {1})")]
    MixedFrames(u64, u64),
    #[error("frame {frame} is not after tracklet {tracklet}'s last frame {last_seen}")]
    NonMonotonicFrame { frame: u64, tracklet: u64, last_seen: u64 },
}

/// Axis-aligned pixel box `(x_min, y_min, x_max, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(a: [f64; 4]) -> Self {
        BBox { x_min: a[0], y_min: a[1], x_max: a[2], y_max: a[3] }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.y_min, self.x_max, self.y_max].iter().all(|v| v.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn centroid(&self) -> Pixel {
        Pixel::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    /// Clamps to the image rectangle; `None` when nothing of the box is
    /// left.
    pub fn clamped(&self, k: &CameraIntrinsics) -> Option<BBox> {
        let (w, h) = (k.width as f64, k.height as f64);
        let b = BBox::new(
            self.x_min.clamp(0.0, w),
            self.y_min.clamp(0.0, h),
            self.x_max.clamp(0.0, w),
            self.y_max.clamp(0.0, h),
        );
        b.is_valid().then_some(b)
    }

    /// Box with the same center and each side scaled by `f`.
    pub fn scaled(&self, f: f64) -> BBox {
        let c = self.centroid();
        let hw = 0.5 * self.width() * f;
        let hh = 0.5 * self.height() * f;
        BBox::new(c.x - hw, c.y - hh, c.x + hw, c.y + hh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Filled in from the enclosing frame record.
    #[serde(skip)]
    pub frame_index: u64,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaze: Option<GazeAngles>,
}

impl Detection {
    pub fn new(frame_index: u64, bbox: BBox) -> Self {
        Self { frame_index, bbox, embedding: None, gaze: None }
    }

    pub fn centroid(&self) -> Pixel {
        self.bbox.centroid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackState {
    Active,
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub tracklet_id: u64,
    pub detections: Vec<Detection>,
    pub last_seen: u64,
    pub state: TrackState,
}

impl Tracklet {
    fn start(tracklet_id: u64, det: Detection) -> Self {
        Self { tracklet_id, last_seen: det.frame_index, detections: vec![det], state: TrackState::Active }
    }

    pub fn first_frame(&self) -> u64 {
        self.detections.first().map_or(self.last_seen, |d| d.frame_index)
    }

    pub fn last_centroid(&self) -> Pixel {
        self.detections.last().map(Detection::centroid).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingParams {
    pub max_distance_px: f64,
    pub max_gap_frames: u64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self { max_distance_px: 75.0, max_gap_frames: 15 }
    }
}

/// Result of associating one frame's detections.
#[derive(Debug, Clone, Default)]
pub struct FrameAssociation {
    /// Tracklet id assigned to each input detection, in input order.
    pub tracklet_of: Vec<u64>,
    /// Ids of tracklets spawned by this frame.
    pub spawned: Vec<u64>,
    /// Ids of tracklets that transitioned to lost on this frame.
    pub lost: Vec<u64>,
}

/// Associates one frame of detections with the active tracklets.
///
/// Active tracklets that are more than `max_gap_frames` behind the frame
/// are marked lost and do not take part. The remaining ones are matched to
/// detections by optimal min-cost assignment on centroid distance, capped at
/// `max_distance_px`. Unmatched detections start new tracklets, numbered
/// from `next_id`.
pub fn associate_frame(
    tracklets: &mut Vec<Tracklet>,
    detections: Vec<Detection>,
    params: &TrackingParams,
    next_id: &mut u64,
) -> Result<FrameAssociation, TrackingError> {
    let mut out = FrameAssociation::default();
    let Some(frame) = detections.first().map(|d| d.frame_index) else {
        return Ok(out);
    };
    if let Some(d) = detections.iter().find(|d| d.frame_index != frame) {
        return Err(TrackingError::MixedFrames(frame, d.frame_index));
    }
    expire(tracklets, frame, params, &mut out.lost)?;

    let candidates: Vec<usize> =
        (0..tracklets.len()).filter(|&i| tracklets[i].state == TrackState::Active).collect();
    let cost: Vec<Vec<f64>> = candidates
        .iter()
        .map(|&i| {
            let c = tracklets[i].last_centroid();
            detections.iter().map(|d| c.distance(d.centroid())).collect()
        })
        .collect();
    let assignment = capped_assignment(&cost, params.max_distance_px);

    let mut owner: Vec<Option<usize>> = vec![None; detections.len()];
    for (row, col) in assignment.into_iter().enumerate() {
        if let Some(col) = col {
            owner[col] = Some(candidates[row]);
        }
    }

    for (det, owner) in detections.into_iter().zip(owner) {
        match owner {
            Some(ti) => {
                let t = &mut tracklets[ti];
                t.last_seen = det.frame_index;
                t.detections.push(det);
                out.tracklet_of.push(t.tracklet_id);
            }
            None => {
                let id = *next_id;
                *next_id += 1;
                tracklets.push(Tracklet::start(id, det));
                out.tracklet_of.push(id);
                out.spawned.push(id);
            }
        }
    }
    Ok(out)
}

fn expire(
    tracklets: &mut [Tracklet],
    frame: u64,
    params: &TrackingParams,
    lost: &mut Vec<u64>,
) -> Result<(), TrackingError> {
    for t in tracklets.iter_mut().filter(|t| t.state == TrackState::Active) {
        if frame <= t.last_seen {
            return Err(TrackingError::NonMonotonicFrame { frame, tracklet: t.tracklet_id, last_seen: t.last_seen });
        }
        if frame - t.last_seen > params.max_gap_frames {
            t.state = TrackState::Lost;
            lost.push(t.tracklet_id);
        }
    }
    Ok(())
}

/// Closes a session: every tracklet becomes lost.
pub fn finalize_tracklets(mut all: Vec<Tracklet>, _end_frame: u64) -> Vec<Tracklet> {
    for t in &mut all {
        t.state = TrackState::Lost;
    }
    all
}

/// Stateful wrapper feeding frames in order.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    params: TrackingParams,
    tracklets: Vec<Tracklet>,
    next_id: u64,
}

impl Tracker {
    pub fn new(params: TrackingParams) -> Self {
        Self { params, tracklets: Vec::new(), next_id: 0 }
    }

    pub fn params(&self) -> &TrackingParams {
        &self.params
    }

    pub fn tracklets(&self) -> &[Tracklet] {
        &self.tracklets
    }

    pub fn push_frame(&mut self, detections: Vec<Detection>) -> Result<FrameAssociation, TrackingError> {
        associate_frame(&mut self.tracklets, detections, &self.params, &mut self.next_id)
    }

    pub fn finish(self, end_frame: u64) -> Vec<Tracklet> {
        finalize_tracklets(self.tracklets, end_frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det_at(frame: u64, x: f64, y: f64) -> Detection {
        Detection::new(frame, BBox::new(x - 10.0, y - 10.0, x + 10.0, y + 10.0))
    }

    fn params(max_distance_px: f64) -> TrackingParams {
        TrackingParams { max_distance_px, max_gap_frames: 15 }
    }

    #[test]
    fn near_detection_extends_tracklet() {
        let mut ts = Vec::new();
        let mut next = 0;
        associate_frame(&mut ts, vec![det_at(0, 100.0, 100.0)], &params(50.0), &mut next).unwrap();
        let a = associate_frame(&mut ts, vec![det_at(1, 105.0, 102.0)], &params(50.0), &mut next).unwrap();
        assert_eq!(a.tracklet_of, vec![0]);
        assert!(a.spawned.is_empty());
        assert_eq!(ts[0].detections.len(), 2);
        assert!((Pixel::new(100.0, 100.0).distance(Pixel::new(105.0, 102.0)) - 5.385164807).abs() < 1e-8);
    }

    #[test]
    fn far_detection_spawns_tracklet() {
        let mut ts = Vec::new();
        let mut next = 0;
        associate_frame(&mut ts, vec![det_at(0, 100.0, 100.0)], &params(50.0), &mut next).unwrap();
        let a = associate_frame(&mut ts, vec![det_at(1, 900.0, 900.0)], &params(50.0), &mut next).unwrap();
        assert_eq!(a.spawned, vec![1]);
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].detections.len(), 1);
    }

    #[test]
    fn gap_longer_than_limit_marks_lost() {
        let mut tr = Tracker::new(TrackingParams { max_distance_px: 50.0, max_gap_frames: 3 });
        tr.push_frame(vec![det_at(0, 100.0, 100.0)]).unwrap();
        let a = tr.push_frame(vec![det_at(3, 100.0, 100.0)]).unwrap();
        assert_eq!(a.tracklet_of, vec![0]);
        let a = tr.push_frame(vec![det_at(7, 100.0, 100.0)]).unwrap();
        assert_eq!(a.lost, vec![0]);
        assert_eq!(a.spawned, vec![1]);
    }

    #[test]
    fn duplicate_centroids_are_both_kept() {
        let mut tr = Tracker::new(params(50.0));
        tr.push_frame(vec![det_at(0, 100.0, 100.0)]).unwrap();
        let a = tr.push_frame(vec![det_at(1, 101.0, 100.0), det_at(1, 101.0, 100.0)]).unwrap();
        assert_eq!(a.tracklet_of, vec![0, 1]);
        assert_eq!(tr.tracklets().len(), 2);
    }

    #[test]
    fn rejects_bad_frame_order() {
        let mut tr = Tracker::new(params(50.0));
        tr.push_frame(vec![det_at(5, 100.0, 100.0)]).unwrap();
        assert!(matches!(
            tr.push_frame(vec![det_at(5, 100.0, 100.0)]),
            Err(TrackingError::NonMonotonicFrame { .. })
        ));
        assert!(matches!(
            tr.push_frame(vec![det_at(6, 1.0, 1.0), det_at(7, 1.0, 1.0)]),
            Err(TrackingError::MixedFrames(6, 7))
        ));
    }

    #[test]
    fn finalize_examples() {
        assert!(finalize_tracklets(Vec::new(), 10).is_empty());
        let mut tr = Tracker::new(params(50.0));
        tr.push_frame(vec![det_at(0, 1.0, 1.0)]).unwrap();
        let done = tr.finish(1);
        assert_eq!(done.len(), 1);
        assert_eq!(done[0].state, TrackState::Lost);
    }

    #[test]
    fn bbox_helpers() {
        let b = BBox::new(10.0, 20.0, 30.0, 60.0);
        assert_eq!(b.centroid(), Pixel::new(20.0, 40.0));
        assert_eq!(b.scaled(0.5), BBox::new(15.0, 30.0, 25.0, 50.0));
        assert!(!BBox::new(5.0, 0.0, 4.0, 1.0).is_valid());
        let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
        assert_eq!(BBox::new(-5.0, 90.0, 10.0, 120.0).clamped(&k), Some(BBox::new(0.0, 90.0, 10.0, 100.0)));
        assert_eq!(BBox::new(-5.0, 0.0, -1.0, 10.0).clamped(&k), None);
    }

    fn frames() -> impl Strategy<Value = Vec<Vec<(f64, f64)>>> {
        prop::collection::vec(prop::collection::vec((0.0f64..400.0, 0.0f64..400.0), 0..6), 1..12)
    }

    fn run(frames: &[Vec<(f64, f64)>], max_distance_px: f64) -> (Vec<Tracklet>, usize) {
        let mut tr = Tracker::new(TrackingParams { max_distance_px, max_gap_frames: 2 });
        let mut spawned = 0;
        for (f, dets) in frames.iter().enumerate() {
            let dets = dets.iter().map(|&(x, y)| det_at(f as u64, x, y)).collect();
            spawned += tr.push_frame(dets).unwrap().spawned.len();
        }
        (tr.finish(frames.len() as u64), spawned)
    }

    proptest! {
        #[test]
        fn partition_and_finalize(frames in frames(), cap in 1.0f64..200.0) {
            let (tracklets, _) = run(&frames, cap);
            let total: usize = frames.iter().map(Vec::len).sum();
            prop_assert_eq!(tracklets.iter().map(|t| t.detections.len()).sum::<usize>(), total);
            for t in &tracklets {
                prop_assert_eq!(t.state, TrackState::Lost);
                for w in t.detections.windows(2) {
                    prop_assert!(w[0].frame_index < w[1].frame_index);
                    prop_assert!(w[1].frame_index - w[0].frame_index <= 2);
                }
            }
        }

        // Per-frame property: with identical tracklet state, a larger cap
        // never spawns more tracklets.
        #[test]
        fn larger_cap_never_spawns_more(prev in prop::collection::vec((0.0f64..400.0, 0.0f64..400.0), 0..6),
                                        cur in prop::collection::vec((0.0f64..400.0, 0.0f64..400.0), 0..6),
                                        lo in 1.0f64..150.0, extra in 0.0f64..150.0) {
            let spawn = |cap: f64| {
                let mut ts = Vec::new();
                let mut next = 0;
                let p = params(cap);
                associate_frame(&mut ts, prev.iter().map(|&(x, y)| det_at(0, x, y)).collect(), &p, &mut next).unwrap();
                associate_frame(&mut ts, cur.iter().map(|&(x, y)| det_at(1, x, y)).collect(), &p, &mut next)
                    .unwrap()
                    .spawned
                    .len()
            };
            prop_assert!(spawn(lo + extra) <= spawn(lo));
        }
    }
}
