//! Resolves tracklets to participant identities against an anchor-embedding
//! gallery using cosine similarity.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracking::Tracklet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReidError {
    #[error("embedding dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity undefined for a zero or non-finite vector")]
    UndefinedSimilarity,
    #[error("gallery has no participants")]
    EmptyGallery,
    #[error("gallery: {0}")]
    InvalidGallery(String),
}

/// Number of leading detections searched for an embedding when resolving a
/// tracklet.
pub const DEFAULT_EMBEDDING_SEARCH: usize = 10;
pub const DEFAULT_THRESHOLD: f64 = 0.6;

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, ReidError> {
    if a.len() != b.len() {
        return Err(ReidError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = (na * nb).sqrt();
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(ReidError::UndefinedSimilarity);
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Identity {
    Participant(String),
    Unidentified,
}

impl Identity {
    pub fn participant(&self) -> Option<&str> {
        match self {
            Identity::Participant(p) => Some(p),
            Identity::Unidentified => None,
        }
    }

    pub fn is_identified(&self) -> bool {
        matches!(self, Identity::Participant(_))
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identity::Participant(p) => f.write_str(p),
            Identity::Unidentified => f.write_str("UNIDENTIFIED"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    dimension: usize,
    threshold: f64,
    entries: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize, Serialize)]
struct GalleryFile {
    dimension: usize,
    threshold: f64,
    participants: BTreeMap<String, Vec<Vec<f64>>>,
}

impl Gallery {
    /// Validates and builds a gallery. Anchors that are not unit length
    /// (beyond 1e-6) are normalized with a warning.
    pub fn new(
        dimension: usize,
        threshold: f64,
        entries: BTreeMap<String, Vec<Vec<f64>>>,
    ) -> Result<Self, ReidError> {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(ReidError::InvalidGallery(format!("threshold {threshold} outside [-1, 1]")));
        }
        if dimension == 0 {
            return Err(ReidError::InvalidGallery("dimension must be positive".into()));
        }
        let mut normalized = BTreeMap::new();
        for (id, anchors) in entries {
            if id.is_empty() || id == "NONE" || id == "UNIDENTIFIED" {
                return Err(ReidError::InvalidGallery(format!("reserved or empty participant id {id:?}")));
            }
            if anchors.is_empty() {
                return Err(ReidError::InvalidGallery(format!("participant {id} has no anchors")));
            }
            let mut out = Vec::with_capacity(anchors.len());
            for (i, a) in anchors.into_iter().enumerate() {
                if a.len() != dimension {
                    return Err(ReidError::InvalidGallery(format!(
                        "participant {id} anchor {i} has dimension {} (expected {dimension})",
                        a.len()
                    )));
                }
                let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(n > 0.0 && n.is_finite()) {
                    return Err(ReidError::InvalidGallery(format!("participant {id} anchor {i} is zero or non-finite")));
                }
                if (n - 1.0).abs() > 1e-6 {
                    log::warn!("gallery anchor {i} of {id} has norm {n}; normalizing");
                    out.push(a.iter().map(|v| v / n).collect());
                } else {
                    out.push(a);
                }
            }
            normalized.insert(id, out);
        }
        Ok(Self { dimension, threshold, entries: normalized })
    }

    pub fn from_json(text: &str) -> Result<Self, ReidError> {
        let f: GalleryFile =
            serde_json::from_str(text).map_err(|e| ReidError::InvalidGallery(e.to_string()))?;
        Self::new(f.dimension, f.threshold, f.participants)
    }

    pub fn load(path: &Path) -> Result<Self, ReidError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReidError::InvalidGallery(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let f = GalleryFile {
            dimension: self.dimension,
            threshold: self.threshold,
            participants: self.entries.clone(),
        };
        serde_json::to_string(&f).expect("gallery serializes")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, ReidError> {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(ReidError::InvalidGallery(format!("threshold {threshold} outside [-1, 1]")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn participants(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn anchors(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().flat_map(|(id, a)| a.iter().map(move |v| (id.as_str(), v.as_slice())))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Top-1 match of `query` over every anchor in the gallery.
///
/// Returns the owner of the globally best anchor when its similarity reaches
/// the threshold; otherwise `Unidentified` with that best score. Equal
/// scores resolve to the lexicographically smallest participant id.
pub fn match_identity(query: &[f64], gallery: &Gallery) -> Result<(Identity, f64), ReidError> {
    if gallery.is_empty() {
        return Err(ReidError::EmptyGallery);
    }
    if query.len() != gallery.dimension {
        return Err(ReidError::DimensionMismatch(query.len(), gallery.dimension));
    }
    let qn = query.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(qn > 0.0 && qn.is_finite()) {
        return Err(ReidError::UndefinedSimilarity);
    }
    let mut best: Option<(&str, f64)> = None;
    for (id, anchor) in gallery.anchors() {
        let s = cosine_similarity(query, anchor)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    let (id, score) = best.expect("non-empty gallery");
    if score >= gallery.threshold {
        Ok((Identity::Participant(id.to_string()), score))
    } else {
        Ok((Identity::Unidentified, score))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReidTracklet {
    pub tracklet: Tracklet,
    pub identity: Identity,
    /// Best cosine similarity; -1 when no usable embedding was found.
    pub match_score: f64,
}

/// Identifies a tracklet from the earliest usable embedding among its first
/// `search` detections.
pub fn resolve_tracklet(t: Tracklet, gallery: &Gallery, search: usize) -> ReidTracklet {
    let found = t
        .detections
        .iter()
        .take(search)
        .filter_map(|d| d.embedding.as_deref())
        .find_map(|e| match_identity(e, gallery).ok());
    let (identity, match_score) = found.unwrap_or((Identity::Unidentified, -1.0));
    ReidTracklet { tracklet: t, identity, match_score }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityConflict {
    pub participant: String,
    pub kept_tracklet: u64,
    pub kept_score: f64,
    pub demoted_tracklet: u64,
    pub demoted_score: f64,
}

/// Demotes tracklets that claim a participant already held by an
/// overlapping (in frame span), higher-scoring tracklet.
///
/// Candidates are considered by descending score, then ascending tracklet
/// id, so the outcome does not depend on input order.
pub fn resolve_conflicts(tracklets: &mut [ReidTracklet]) -> Vec<IdentityConflict> {
    let mut order: Vec<usize> = (0..tracklets.len()).filter(|&i| tracklets[i].identity.is_identified()).collect();
    order.sort_by(|&a, &b| {
        let (ta, tb) = (&tracklets[a], &tracklets[b]);
        tb.match_score
            .total_cmp(&ta.match_score)
            .then(ta.tracklet.tracklet_id.cmp(&tb.tracklet.tracklet_id))
    });
    let mut held: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut conflicts = Vec::new();
    for i in order {
        let pid = tracklets[i].identity.participant().unwrap().to_string();
        let span = (tracklets[i].tracklet.first_frame(), tracklets[i].tracklet.last_seen);
        let keepers = held.entry(pid.clone()).or_default();
        let clash = keepers.iter().copied().find(|&k| {
            let ks = (tracklets[k].tracklet.first_frame(), tracklets[k].tracklet.last_seen);
            span.0 <= ks.1 && ks.0 <= span.1
        });
        match clash {
            Some(k) => {
                conflicts.push(IdentityConflict {
                    participant: pid,
                    kept_tracklet: tracklets[k].tracklet.tracklet_id,
                    kept_score: tracklets[k].match_score,
                    demoted_tracklet: tracklets[i].tracklet.tracklet_id,
                    demoted_score: tracklets[i].match_score,
                });
                tracklets[i].identity = Identity::Unidentified;
            }
            None => keepers.push(i),
        }
    }
    conflicts.sort_by_key(|c| c.demoted_tracklet);
    conflicts
}
