//! Detection-to-track association: cue costs, optimal assignment and the
//! age-ordered matching cascade.
//!
//! Confirmed tracks are matched first on appearance (cosine distance to the
//! track's embedding gallery) gated by the Kalman Mahalanobis distance, one
//! age level at a time so recently seen tracks win contested detections.
//! Remaining tentative tracks and just-missed confirmed tracks then fall back
//! to box overlap. Relative depth, when enabled, adds a gated linear term in
//! both stages.

mod lap;

pub use lap::solve_raw;

use crate::detpre::{Detection, Pose};
use crate::geometry::{giou, iou, BBox};
use crate::motion::KalmanFilter;
use crate::tracker::Track;

/// Cost of a pair that must not be matched.
pub const INFEASIBLE: f64 = 1e5;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, fill: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![fill; rows * cols],
        }
    }

    /// Builds from row vectors; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn is_feasible(&self, row: usize, col: usize) -> bool {
        self.get(row, col) < INFEASIBLE
    }

    /// Applies `f` to every feasible entry, leaving sentinels alone.
    pub fn map_feasible(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&c| if c < INFEASIBLE { f(c) } else { c })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    /// `(row, col)` pairs in ascending row order.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

/// Minimum-cost one-to-one assignment with sentinel pairs discarded.
pub fn solve_assignment(costs: &CostMatrix) -> Assignment {
    let raw = solve_raw(costs);
    let mut out = Assignment::default();
    let mut col_used = vec![false; costs.cols()];
    for (row, col) in raw.into_iter().enumerate() {
        match col {
            Some(c) if costs.is_feasible(row, c) => {
                col_used[c] = true;
                out.matches.push((row, c));
            }
            _ => out.unmatched_rows.push(row),
        }
    }
    out.unmatched_cols = (0..costs.cols()).filter(|&c| !col_used[c]).collect();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssocConfig {
    /// Largest admissible `1 - IoU` in the overlap stage.
    pub max_iou_distance: f64,
    /// Largest admissible cosine distance in the appearance stage.
    pub appearance_threshold: f64,
    /// Weight of the relative-depth term; 0 disables the cue, gate included.
    pub depth_weight: f64,
    /// Largest admissible relative-depth difference.
    pub depth_gate: f64,
    /// Gallery updates are skipped for detections below this pose visibility.
    pub pose_visibility_min: f64,
    /// Keypoint confidence needed for a joint to count as visible.
    pub keypoint_conf_min: f64,
    pub use_giou: bool,
}

impl Default for AssocConfig {
    fn default() -> Self {
        Self {
            max_iou_distance: 0.7,
            appearance_threshold: 0.2,
            depth_weight: 0.0,
            depth_gate: 0.2,
            pose_visibility_min: 0.3,
            keypoint_conf_min: 0.5,
            use_giou: false,
        }
    }
}

impl AssocConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.max_iou_distance > 0.0 && self.max_iou_distance <= 1.0) {
            v.push(format!("max_iou_distance {} outside (0, 1]", self.max_iou_distance));
        }
        if !(0.0..=2.0).contains(&self.appearance_threshold) {
            v.push(format!("appearance_threshold {} outside [0, 2]", self.appearance_threshold));
        }
        if !(self.depth_weight >= 0.0 && self.depth_weight.is_finite()) {
            v.push(format!("depth_weight {} must be non-negative", self.depth_weight));
        }
        if !(0.0..=1.0).contains(&self.depth_gate) {
            v.push(format!("depth_gate {} outside [0, 1]", self.depth_gate));
        }
        if !(0.0..=1.0).contains(&self.pose_visibility_min) {
            v.push(format!("pose_visibility_min {} outside [0, 1]", self.pose_visibility_min));
        }
        if !(0.0..=1.0).contains(&self.keypoint_conf_min) {
            v.push(format!("keypoint_conf_min {} outside [0, 1]", self.keypoint_conf_min));
        }
        v
    }
}

/// Smallest cosine distance between `query` and any gallery entry.
pub fn cosine_distance<'a, I>(gallery: I, query: &[f64]) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    gallery
        .into_iter()
        .filter(|g| g.len() == query.len())
        .map(|g| 1.0 - g.iter().zip(query).map(|(a, b)| a * b).sum::<f64>())
        .fold(INFEASIBLE, f64::min)
}

/// `1 - IoU` per (track, detection) pair, or `(1 - GIoU) / 2` with `use_giou`.
/// Entries above `max_iou_distance` become [`INFEASIBLE`].
pub fn iou_cost(track_boxes: &[BBox], det_boxes: &[BBox], use_giou: bool, max_iou_distance: f64) -> CostMatrix {
    let mut m = CostMatrix::new(track_boxes.len(), det_boxes.len(), INFEASIBLE);
    for (i, t) in track_boxes.iter().enumerate() {
        for (j, d) in det_boxes.iter().enumerate() {
            let cost = if use_giou {
                giou(t, d).map(|g| (1.0 - g) / 2.0)
            } else {
                iou(t, d).map(|v| 1.0 - v)
            };
            if let Ok(c) = cost {
                if c <= max_iou_distance {
                    m.set(i, j, c);
                }
            }
        }
    }
    m
}

/// Additive relative-depth cost. Missing depth on either side disables the cue
/// for the pair; a difference beyond `gate` is [`INFEASIBLE`].
pub fn depth_cost_term(track_depth: Option<f64>, det_depth: Option<f64>, weight: f64, gate: f64) -> f64 {
    match (track_depth, det_depth) {
        (Some(t), Some(d)) => {
            let delta = (t - d).abs();
            if delta > gate {
                INFEASIBLE
            } else {
                weight * delta
            }
        }
        _ => 0.0,
    }
}

/// Fraction of keypoints with confidence at least `conf_min`; 1 when no pose is available.
pub fn pose_visibility(keypoints: Option<&Pose>, conf_min: f64) -> f64 {
    match keypoints {
        Some(kps) => kps.iter().filter(|k| k.conf >= conf_min).count() as f64 / kps.len() as f64,
        None => 1.0,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CascadeResult {
    /// `(track index, detection index)` pairs.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

fn depth_term(track: &Track, det: &Detection, cfg: &AssocConfig) -> f64 {
    if cfg.depth_weight > 0.0 {
        depth_cost_term(track.depth_ema, det.rel_depth, cfg.depth_weight, cfg.depth_gate)
    } else {
        0.0
    }
}

fn appearance_cost(track: &Track, det: &Detection, cfg: &AssocConfig, kf: &KalmanFilter) -> f64 {
    let Some(query) = det.embedding.as_deref() else {
        return INFEASIBLE;
    };
    match kf.gating_distance(&track.state, &det.bbox) {
        Ok(d) if d <= kf.config().gate_threshold() => {}
        _ => return INFEASIBLE,
    }
    let appearance = cosine_distance(track.gallery.iter(), query);
    if appearance > cfg.appearance_threshold {
        return INFEASIBLE;
    }
    let depth = depth_term(track, det, cfg);
    if depth >= INFEASIBLE {
        return INFEASIBLE;
    }
    appearance + depth
}

/// Solves one assignment over the given subsets and maps indices back.
fn min_cost_matching(
    track_idx: &[usize],
    det_idx: &[usize],
    cost: impl Fn(usize, usize) -> f64,
) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    if track_idx.is_empty() || det_idx.is_empty() {
        return (Vec::new(), track_idx.to_vec(), det_idx.to_vec());
    }
    let mut m = CostMatrix::new(track_idx.len(), det_idx.len(), INFEASIBLE);
    for (r, &t) in track_idx.iter().enumerate() {
        for (c, &d) in det_idx.iter().enumerate() {
            m.set(r, c, cost(t, d));
        }
    }
    let a = solve_assignment(&m);
    (
        a.matches.iter().map(|&(r, c)| (track_idx[r], det_idx[c])).collect(),
        a.unmatched_rows.iter().map(|&r| track_idx[r]).collect(),
        a.unmatched_cols.iter().map(|&c| det_idx[c]).collect(),
    )
}

/// Associates predicted tracks with detections.
///
/// Tracks must already be predicted for this frame, so every track has
/// `time_since_update >= 1`. A track that missed `max_age` frames is still
/// alive and reaches this frame with `time_since_update == max_age + 1`, so
/// the cascade runs that deep.
pub fn matching_cascade(
    tracks: &[Track],
    detections: &[Detection],
    cfg: &AssocConfig,
    kf: &KalmanFilter,
    max_age: u32,
) -> CascadeResult {
    let (confirmed, unconfirmed): (Vec<usize>, Vec<usize>) =
        (0..tracks.len()).partition(|&i| tracks[i].is_confirmed());

    let mut matches = Vec::new();
    let mut unmatched_dets: Vec<usize> = (0..detections.len()).collect();
    for level in 1..=max_age.saturating_add(1) {
        if unmatched_dets.is_empty() {
            break;
        }
        let at_level: Vec<usize> = confirmed
            .iter()
            .copied()
            .filter(|&i| tracks[i].time_since_update == level)
            .collect();
        if at_level.is_empty() {
            continue;
        }
        let (m, _, rest) = min_cost_matching(&at_level, &unmatched_dets, |t, d| {
            appearance_cost(&tracks[t], &detections[d], cfg, kf)
        });
        matches.extend(m);
        unmatched_dets = rest;
    }

    let matched_in_cascade = |i: usize| matches.iter().any(|&(t, _)| t == i);
    let leftovers: Vec<usize> = confirmed.iter().copied().filter(|&i| !matched_in_cascade(i)).collect();
    let mut iou_candidates = unconfirmed;
    iou_candidates.extend(leftovers.iter().copied().filter(|&i| tracks[i].time_since_update == 1));
    iou_candidates.sort_unstable();
    let mut unmatched_tracks: Vec<usize> =
        leftovers.into_iter().filter(|&i| tracks[i].time_since_update != 1).collect();

    let predicted: Vec<BBox> = iou_candidates.iter().map(|&i| tracks[i].state.bbox()).collect();
    let boxes: Vec<BBox> = unmatched_dets.iter().map(|&j| detections[j].bbox).collect();
    let overlap = iou_cost(&predicted, &boxes, cfg.use_giou, cfg.max_iou_distance);
    let rows: Vec<usize> = (0..iou_candidates.len()).collect();
    let cols: Vec<usize> = (0..unmatched_dets.len()).collect();
    let (m, rest_tracks, rest_dets) = min_cost_matching(&rows, &cols, |r, c| {
        let base = overlap.get(r, c);
        if base >= INFEASIBLE {
            return INFEASIBLE;
        }
        let depth = depth_term(&tracks[iou_candidates[r]], &detections[unmatched_dets[c]], cfg);
        if depth >= INFEASIBLE {
            INFEASIBLE
        } else {
            base + depth
        }
    });
    matches.extend(m.into_iter().map(|(r, c)| (iou_candidates[r], unmatched_dets[c])));
    unmatched_tracks.extend(rest_tracks.into_iter().map(|r| iou_candidates[r]));
    unmatched_tracks.sort_unstable();
    matches.sort_unstable();

    CascadeResult {
        matches,
        unmatched_tracks,
        unmatched_detections: rest_dets.into_iter().map(|c| unmatched_dets[c]).collect(),
    }
}
