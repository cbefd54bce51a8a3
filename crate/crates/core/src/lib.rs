//! Identity-consistent 3D gaze-target encoding from per-frame perception
//! records, with pooled timelines and a gaze attention network.
//!
//! Stages: [`tracking`] and [`reid`] resolve who each face detection belongs
//! to, [`pipeline`] places participants in the [`scene`] and casts their gaze
//! rays with [`raycast`], and [`analytics`] aggregates the resulting events.
//! [`io`] holds the file formats and the session runner, [`synth`] the
//! scenario generator used for closed-loop testing.

pub mod analytics;
mod assignment;
pub mod error;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod raycast;
pub mod reid;
pub mod scene;
pub mod synth;
pub mod tracking;

pub use assignment::capped_assignment;
pub use error::{Error, ErrorKind};
