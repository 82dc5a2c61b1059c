//! Track lifecycle and the per-frame pipeline: predict, post-process
//! detections, associate, update, spawn, retire, emit.

use std::collections::VecDeque;

use crate::assoc::{matching_cascade, pose_visibility, AssocConfig};
use crate::detpre::{filter_confidence, soft_nms, ConfidenceEma, DetPreConfig, Detection, PEDESTRIAN};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::motion::{KalmanFilter, KalmanState, MotionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

/// Ring buffer of the most recent appearance embeddings of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    budget: usize,
    items: VecDeque<Vec<f64>>,
}

impl Gallery {
    pub fn new(budget: usize) -> Self {
        Self {
            budget: budget.max(1),
            items: VecDeque::new(),
        }
    }

    pub fn push(&mut self, embedding: Vec<f64>) {
        if self.items.len() == self.budget {
            self.items.pop_front();
        }
        self.items.push_back(embedding);
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.items.iter().map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    /// Output identity, assigned when the track is first confirmed.
    pub id: Option<u32>,
    pub state: KalmanState,
    pub status: TrackStatus,
    pub hits: u32,
    pub time_since_update: u32,
    pub gallery: Gallery,
    pub depth_ema: Option<f64>,
    pub last_visibility: f64,
}

impl Track {
    pub fn new(state: KalmanState, nn_budget: usize) -> Self {
        Self {
            id: None,
            state,
            status: TrackStatus::Tentative,
            hits: 1,
            time_since_update: 0,
            gallery: Gallery::new(nn_budget),
            depth_ema: None,
            last_visibility: 1.0,
        }
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == TrackStatus::Confirmed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub detpre: DetPreConfig,
    pub assoc: AssocConfig,
    pub motion: MotionConfig,
    /// Consecutive matches before a track is confirmed and reported.
    pub n_init: u32,
    /// Missed frames a confirmed track survives.
    pub max_age: u32,
    /// Gallery capacity per track.
    pub nn_budget: usize,
    /// Report Kalman posterior boxes instead of raw detection boxes.
    pub output_smoothing: bool,
    /// Smoothing factor of the per-track relative-depth average.
    pub depth_ema_alpha: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            detpre: DetPreConfig::default(),
            assoc: AssocConfig::default(),
            motion: MotionConfig::default(),
            n_init: 3,
            max_age: 50,
            nn_budget: 150,
            output_smoothing: true,
            depth_ema_alpha: 0.3,
        }
    }
}

impl TrackerConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.detpre.violations();
        v.extend(self.assoc.violations());
        v.extend(self.motion.violations());
        if self.n_init < 1 {
            v.push("n_init must be at least 1".into());
        }
        if self.max_age < 1 {
            v.push("max_age must be at least 1".into());
        }
        if self.nn_budget < 1 {
            v.push("nn_budget must be at least 1".into());
        }
        if !(self.depth_ema_alpha > 0.0 && self.depth_ema_alpha <= 1.0) {
            v.push(format!("depth_ema_alpha {} outside (0, 1]", self.depth_ema_alpha));
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

/// One reported box for one confirmed track in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    pub frame: u32,
    pub id: u32,
    pub bbox: BBox,
    pub confidence: f64,
}

pub struct Tracker {
    cfg: TrackerConfig,
    kf: KalmanFilter,
    tracks: Vec<Track>,
    ema: ConfidenceEma,
    next_id: u32,
    last_frame: Option<u32>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            kf: KalmanFilter::new(cfg.motion.clone()),
            cfg,
            tracks: Vec::new(),
            ema: ConfidenceEma::default(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Number of output identities handed out so far.
    pub fn ids_assigned(&self) -> u32 {
        self.next_id - 1
    }

    /// Threshold → confidence filter → Soft-NMS, on pedestrian detections only.
    fn preprocess(&mut self, dets: Vec<Detection>) -> Vec<Detection> {
        let dets: Vec<Detection> = dets.into_iter().filter(|d| d.category == PEDESTRIAN).collect();
        let pre = &self.cfg.detpre;
        self.ema.observe(&dets, pre.adaptive_ema_alpha);
        let threshold = self.ema.threshold(pre);
        let kept = filter_confidence(dets, threshold);
        soft_nms(kept, pre.softnms_sigma, pre.softnms_min_score)
    }

    /// Advances the tracker by one frame and returns the confirmed tracks
    /// matched in it, sorted by id.
    pub fn step(&mut self, frame: u32, frame_dets: Vec<Detection>) -> Result<Vec<TrackRow>> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::FrameOrder { last, got: frame });
            }
        }
        self.last_frame = Some(frame);

        for t in &mut self.tracks {
            t.state = self.kf.predict(&t.state);
            t.time_since_update += 1;
        }

        let dets = self.preprocess(frame_dets);
        let result = matching_cascade(&self.tracks, &dets, &self.cfg.assoc, &self.kf, self.cfg.max_age);

        let Self {
            cfg,
            kf,
            tracks,
            next_id,
            ..
        } = self;
        let mut issue_id = || {
            let id = *next_id;
            *next_id += 1;
            id
        };

        let mut out = Vec::new();
        for &(ti, di) in &result.matches {
            let det = &dets[di];
            let track = &mut tracks[ti];
            track.state = kf.update(&track.state, &det.bbox)?;
            track.hits += 1;
            track.time_since_update = 0;
            absorb_cues(cfg, track, det);
            if track.status == TrackStatus::Tentative && track.hits >= cfg.n_init {
                track.status = TrackStatus::Confirmed;
            }
            if track.is_confirmed() {
                let id = *track.id.get_or_insert_with(&mut issue_id);
                out.push(report(cfg, frame, id, track, det));
            }
        }

        for &ti in &result.unmatched_tracks {
            let t = &mut tracks[ti];
            if t.status == TrackStatus::Tentative || t.time_since_update > cfg.max_age {
                t.status = TrackStatus::Deleted;
            }
        }

        for &di in &result.unmatched_detections {
            let det = &dets[di];
            let mut track = Track::new(kf.initiate(&det.bbox)?, cfg.nn_budget);
            absorb_cues(cfg, &mut track, det);
            if cfg.n_init <= 1 {
                track.status = TrackStatus::Confirmed;
                let id = issue_id();
                track.id = Some(id);
                out.push(report(cfg, frame, id, &track, det));
            }
            tracks.push(track);
        }

        self.tracks.retain(|t| t.status != TrackStatus::Deleted);
        out.sort_by_key(|r| r.id);
        Ok(out)
    }
}

/// Folds a matched or spawning detection's pose, appearance and depth cues into a track.
fn absorb_cues(cfg: &TrackerConfig, track: &mut Track, det: &Detection) {
    let visibility = pose_visibility(det.keypoints.as_deref(), cfg.assoc.keypoint_conf_min);
    track.last_visibility = visibility;
    if visibility >= cfg.assoc.pose_visibility_min {
        if let Some(e) = &det.embedding {
            track.gallery.push(e.clone());
        }
    }
    if let Some(d) = det.rel_depth {
        let alpha = cfg.depth_ema_alpha;
        track.depth_ema = Some(match track.depth_ema {
            Some(prev) => (1.0 - alpha) * prev + alpha * d,
            None => d,
        });
    }
}

fn report(cfg: &TrackerConfig, frame: u32, id: u32, track: &Track, det: &Detection) -> TrackRow {
    let bbox = if cfg.output_smoothing {
        track.state.bbox()
    } else {
        det.bbox
    };
    TrackRow {
        frame,
        id,
        bbox,
        confidence: det.confidence,
    }
}

/// Result of a full-sequence run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceRun {
    /// Output rows sorted by `(frame, id)`.
    pub rows: Vec<TrackRow>,
    pub frames_processed: u32,
    pub warnings: Vec<String>,
}

/// Runs a tracker over detections grouped by frame (`frames[k]` holds the
/// detections of frame `k + 1`).
pub fn run_sequence(frames: Vec<Vec<Detection>>, seq_length: Option<u32>, cfg: &TrackerConfig) -> Result<SequenceRun> {
    let mut tracker = Tracker::new(cfg.clone())?;
    let mut run = SequenceRun::default();
    let available = frames.len() as u32;
    if let Some(len) = seq_length {
        if available > len {
            run.warnings.push(format!(
                "detections reach frame {available} but seqLength is {len}; processing all available frames"
            ));
        }
    }
    for (k, dets) in frames.into_iter().enumerate() {
        let frame = k as u32 + 1;
        run.rows.extend(tracker.step(frame, dets)?);
    }
    run.frames_processed = available;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ped(i: usize, frame: u32) -> Detection {
        let b = BBox::new(100.0 + 300.0 * i as f64 + 2.0 * frame as f64, 200.0, 40.0, 100.0);
        let mut d = Detection::new(frame, b, 0.9);
        let mut e = vec![0.0; 4];
        e[i] = 1.0;
        d.embedding = Some(e);
        d
    }

    fn frame(n: usize, f: u32) -> Vec<Detection> {
        (0..n).map(|i| ped(i, f)).collect()
    }

    #[test]
    fn confirmation_delay() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        assert!(t.step(1, frame(3, 1)).unwrap().is_empty());
        assert!(t.step(2, frame(3, 2)).unwrap().is_empty());
        let out = t.step(3, frame(3, 3)).unwrap();
        assert_eq!(out.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 2, 3]);
        let out = t.step(4, frame(3, 4)).unwrap();
        assert_eq!(out.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn out_of_order_frames_rejected() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(5, vec![]).unwrap();
        assert_eq!(t.step(5, vec![]), Err(Error::FrameOrder { last: 5, got: 5 }));
        assert!(t.step(4, vec![]).is_err());
    }

    #[test]
    fn expired_track_gets_new_id() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        for f in 1..=5 {
            t.step(f, frame(1, f)).unwrap();
        }
        // Absent for 51 frames: time_since_update reaches 51 > max_age.
        for f in 6..=56 {
            t.step(f, vec![]).unwrap();
        }
        assert!(t.tracks().is_empty());
        let mut ids = Vec::new();
        for f in 57..=60 {
            ids.extend(t.step(f, frame(1, 5)).unwrap().into_iter().map(|r| r.id));
        }
        assert!(ids.iter().all(|&id| id == 2), "{ids:?}");
    }

    #[test]
    fn track_survives_fifty_missed_frames() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        for f in 1..=5 {
            t.step(f, frame(1, 5)).unwrap();
        }
        for f in 6..=55 {
            t.step(f, vec![]).unwrap();
        }
        assert_eq!(t.tracks().len(), 1);
        let out = t.step(56, frame(1, 5)).unwrap();
        assert_eq!(out.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn tentative_track_dies_on_first_miss() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(1, frame(1, 1)).unwrap();
        t.step(2, vec![]).unwrap();
        assert!(t.tracks().is_empty());
        assert_eq!(t.ids_assigned(), 0);
    }

    #[test]
    fn low_confidence_detections_ignored() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        for f in 1..=5 {
            let mut dets = frame(1, f);
            dets[0].confidence = 0.55;
            assert!(t.step(f, dets).unwrap().is_empty());
        }
        assert!(t.tracks().is_empty());
    }

    #[test]
    fn raw_box_output_without_smoothing() {
        let cfg = TrackerConfig {
            output_smoothing: false,
            ..Default::default()
        };
        let mut t = Tracker::new(cfg).unwrap();
        let mut last = Vec::new();
        for f in 1..=4 {
            let dets = frame(1, f);
            let b = dets[0].bbox;
            last = t.step(f, dets).unwrap();
            if !last.is_empty() {
                assert_eq!(last[0].bbox, b);
            }
        }
        assert_eq!(last.len(), 1);
    }

    #[test]
    fn gallery_respects_budget() {
        let cfg = TrackerConfig {
            nn_budget: 4,
            ..Default::default()
        };
        let mut t = Tracker::new(cfg).unwrap();
        for f in 1..=20 {
            t.step(f, frame(1, f)).unwrap();
        }
        assert_eq!(t.tracks()[0].gallery.len(), 4);
    }

    #[test]
    fn sequence_driver() {
        let run = run_sequence(vec![], Some(10), &TrackerConfig::default()).unwrap();
        assert!(run.rows.is_empty());

        let frames: Vec<_> = (1..=6).map(|f| frame(2, f)).collect();
        let run = run_sequence(frames, Some(4), &TrackerConfig::default()).unwrap();
        assert_eq!(run.warnings.len(), 1);
        assert_eq!(run.rows.len(), 8);
        let keys: Vec<_> = run.rows.iter().map(|r| (r.frame, r.id)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
