//! Pedestrian tracking-by-detection downstream of neural inference.
//!
//! The pipeline ingests MOT17-format detections (optionally joined with
//! embedding, depth and pose sidecars), post-processes them with confidence
//! thresholding and Soft-NMS, links them into identities with a DeepSORT-style
//! tracker, and scores the result with CLEAR-MOT and identity metrics.
//!
//! Module map:
//!
//! - [`geometry`]: boxes, IoU, GIoU
//! - [`detpre`]: confidence filtering, adaptive thresholding, Soft-NMS
//! - [`motion`]: constant-velocity Kalman filter and Mahalanobis gating
//! - [`assoc`]: cost construction, linear assignment, matching cascade
//! - [`tracker`]: track lifecycle and per-sequence driver
//! - [`metrics`]: MOTA, IDF1, precision/recall
//! - [`dataio`]: MOT17 and sidecar file formats
//! - [`synth`]: seeded synthetic pedestrian scenes
//! - [`config`]: flat `key=value` configuration text
//! - [`report`]: evaluation CSV and SVG bar chart

pub mod assoc;
pub mod config;
pub mod dataio;
pub mod detpre;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod motion;
pub mod report;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::BBox;
