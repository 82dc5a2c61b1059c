//! Per-frame detection post-processing: confidence filtering, adaptive
//! thresholding and Gaussian Soft-NMS.

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

/// Number of body joints carried by a pose record.
pub const NUM_KEYPOINTS: usize = 17;

/// Category label of pedestrians in MOT17 files.
pub const PEDESTRIAN: i32 = 1;

/// Mean raw confidence at which the adaptive threshold equals the base threshold.
pub const ADAPTIVE_REFERENCE_CONF: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub conf: f64,
}

pub type Pose = [Keypoint; NUM_KEYPOINTS];

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// 1-based frame index.
    pub frame: u32,
    /// Position of the row among this frame's rows in the source file; sidecars join on it.
    pub index_in_frame: usize,
    pub bbox: BBox,
    pub confidence: f64,
    pub category: i32,
    /// Unit-norm appearance embedding.
    pub embedding: Option<Vec<f64>>,
    /// Relative depth, 0 nearest and 1 farthest.
    pub rel_depth: Option<f64>,
    pub keypoints: Option<Box<Pose>>,
}

impl Detection {
    pub fn new(frame: u32, bbox: BBox, confidence: f64) -> Self {
        Self {
            frame,
            index_in_frame: 0,
            bbox,
            confidence,
            category: PEDESTRIAN,
            embedding: None,
            rel_depth: None,
            keypoints: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetPreConfig {
    pub base_threshold: f64,
    pub softnms_sigma: f64,
    pub softnms_min_score: f64,
    pub adaptive_enabled: bool,
    pub adaptive_floor: f64,
    pub adaptive_ceiling: f64,
    pub adaptive_ema_alpha: f64,
}

impl Default for DetPreConfig {
    fn default() -> Self {
        Self {
            base_threshold: 0.6,
            softnms_sigma: 0.5,
            softnms_min_score: 0.05,
            adaptive_enabled: false,
            adaptive_floor: 0.4,
            adaptive_ceiling: 0.7,
            adaptive_ema_alpha: 0.1,
        }
    }
}

impl DetPreConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.base_threshold) {
            v.push(format!("base_threshold {} outside [0, 1]", self.base_threshold));
        }
        if !(self.softnms_sigma > 0.0 && self.softnms_sigma.is_finite()) {
            v.push(format!("softnms_sigma {} must be positive", self.softnms_sigma));
        }
        if !(0.0..=1.0).contains(&self.softnms_min_score) {
            v.push(format!("softnms_min_score {} outside [0, 1]", self.softnms_min_score));
        }
        if !(self.adaptive_floor <= self.base_threshold && self.base_threshold <= self.adaptive_ceiling) {
            v.push(format!(
                "need adaptive_floor <= base_threshold <= adaptive_ceiling, got {} / {} / {}",
                self.adaptive_floor, self.base_threshold, self.adaptive_ceiling
            ));
        }
        if !(self.adaptive_ema_alpha > 0.0 && self.adaptive_ema_alpha <= 1.0) {
            v.push(format!("adaptive_ema_alpha {} outside (0, 1]", self.adaptive_ema_alpha));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Keeps detections with `confidence >= threshold`, preserving order.
pub fn filter_confidence(dets: Vec<Detection>, threshold: f64) -> Vec<Detection> {
    dets.into_iter().filter(|d| d.confidence >= threshold).collect()
}

/// Gaussian Soft-NMS.
///
/// Repeatedly takes the highest remaining score (ties go to the earlier input
/// position) and rescales every other remaining score by `exp(-iou^2 / sigma)`
/// against it. Candidates whose score falls below `min_score` are dropped. The
/// returned detections carry their decayed scores and come out in descending
/// score order.
pub fn soft_nms(dets: Vec<Detection>, sigma: f64, min_score: f64) -> Vec<Detection> {
    let mut pending: Vec<Detection> = dets;
    let mut kept = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let mut best = 0;
        for (i, d) in pending.iter().enumerate().skip(1) {
            if d.confidence > pending[best].confidence {
                best = i;
            }
        }
        // `remove` keeps the remaining candidates in input order, which the tie rule relies on.
        let selected = pending.remove(best);
        pending.retain_mut(|d| {
            let overlap = iou(&selected.bbox, &d.bbox).unwrap_or(0.0);
            if overlap > 0.0 {
                d.confidence *= (-(overlap * overlap) / sigma).exp();
            }
            d.confidence >= min_score
        });
        kept.push(selected);
    }
    kept
}

/// Rescales the base threshold by the running mean detector confidence.
pub fn adaptive_threshold(ema_mean_conf: f64, cfg: &DetPreConfig) -> f64 {
    if !cfg.adaptive_enabled {
        return cfg.base_threshold;
    }
    (cfg.base_threshold * ema_mean_conf / ADAPTIVE_REFERENCE_CONF)
        .clamp(cfg.adaptive_floor, cfg.adaptive_ceiling)
}

/// Exponential moving average of per-frame mean raw confidence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfidenceEma {
    value: Option<f64>,
}

impl ConfidenceEma {
    /// Folds in one frame. Frames without detections leave the average untouched;
    /// the first non-empty frame seeds it.
    pub fn observe(&mut self, dets: &[Detection], alpha: f64) {
        if dets.is_empty() {
            return;
        }
        let mean = dets.iter().map(|d| d.confidence).sum::<f64>() / dets.len() as f64;
        self.value = Some(match self.value {
            Some(prev) => (1.0 - alpha) * prev + alpha * mean,
            None => mean,
        });
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn threshold(&self, cfg: &DetPreConfig) -> f64 {
        match self.value {
            Some(ema) => adaptive_threshold(ema, cfg),
            None => cfg.base_threshold,
        }
    }
}
