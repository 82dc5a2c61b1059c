//! CLEAR-MOT and identity metrics.
//!
//! Frame-level matching follows the CLEAR convention: a ground-truth object
//! keeps the hypothesis it was last matched to while their overlap stays
//! feasible, the rest is assigned optimally on `1 - IoU`, and a ground-truth
//! object picking up a different hypothesis than its last one counts as an
//! identity switch. Identity metrics use one global gt↔hypothesis assignment
//! that maximizes the number of co-located frames.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::assoc::{solve_assignment, solve_raw, CostMatrix, INFEASIBLE};
use crate::detpre::PEDESTRIAN;
use crate::geometry::{iou, BBox};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub match_iou_min: f64,
    pub consider_categories: Vec<i32>,
    pub min_visibility: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            match_iou_min: 0.5,
            consider_categories: vec![PEDESTRIAN],
            min_visibility: 0.0,
        }
    }
}

impl EvalConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.match_iou_min > 0.0 && self.match_iou_min <= 1.0) {
            v.push(format!("match_iou_min {} outside (0, 1]", self.match_iou_min));
        }
        if !(0.0..=1.0).contains(&self.min_visibility) {
            v.push(format!("min_visibility {} outside [0, 1]", self.min_visibility));
        }
        v
    }

    pub fn validate(&self) -> crate::Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Config(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledBox {
    pub id: u32,
    pub bbox: BBox,
}

/// Boxes keyed by frame, in file order within a frame.
pub type FrameBoxes = BTreeMap<u32, Vec<LabeledBox>>;

/// Accumulated event counts. Ratios are always recomputed from these, never averaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub gt: u64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.gt += o.gt;
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.idsw += o.idsw;
        self.idtp += o.idtp;
        self.idfp += o.idfp;
        self.idfn += o.idfn;
    }
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl Counts {
    /// `1 - (fn + fp + idsw) / gt`; `None` without ground truth. Not clamped.
    pub fn mota(&self) -> Option<f64> {
        if self.gt == 0 {
            None
        } else {
            Some(1.0 - (self.fn_ + self.fp + self.idsw) as f64 / self.gt as f64)
        }
    }

    pub fn precision(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fn_)
    }

    pub fn precision_recall(&self) -> (f64, f64) {
        (self.precision(), self.recall())
    }

    pub fn idf1(&self) -> f64 {
        let gt_frames = self.idtp + self.idfn;
        let hyp_frames = self.idtp + self.idfp;
        if gt_frames == 0 {
            return if hyp_frames == 0 { 1.0 } else { 0.0 };
        }
        2.0 * self.idtp as f64 / (2 * self.idtp + self.idfp + self.idfn) as f64
    }

    pub fn idp(&self) -> f64 {
        ratio_or_one(self.idtp, self.idtp + self.idfp)
    }

    pub fn idr(&self) -> f64 {
        ratio_or_one(self.idtp, self.idtp + self.idfn)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameMatch {
    /// `(gt id, hyp id)` pairs.
    pub matches: Vec<(u32, u32)>,
    pub fp: u64,
    pub fn_: u64,
    pub switches: u64,
}

fn overlap(a: &BBox, b: &BBox) -> f64 {
    iou(a, b).unwrap_or(0.0)
}

/// Matches one frame. `last_match` maps each gt id to the hypothesis it was
/// last matched to and is updated in place.
pub fn match_frame(
    gt: &[LabeledBox],
    hyp: &[LabeledBox],
    last_match: &mut HashMap<u32, u32>,
    iou_min: f64,
) -> FrameMatch {
    let mut gt_done = vec![false; gt.len()];
    let mut hyp_done = vec![false; hyp.len()];
    let mut matches = Vec::new();

    for (gi, g) in gt.iter().enumerate() {
        let Some(&prev) = last_match.get(&g.id) else {
            continue;
        };
        if let Some(hi) = hyp.iter().position(|h| h.id == prev) {
            if !hyp_done[hi] && overlap(&g.bbox, &hyp[hi].bbox) >= iou_min {
                gt_done[gi] = true;
                hyp_done[hi] = true;
                matches.push((g.id, prev));
            }
        }
    }

    let gt_rest: Vec<usize> = (0..gt.len()).filter(|&i| !gt_done[i]).collect();
    let hyp_rest: Vec<usize> = (0..hyp.len()).filter(|&i| !hyp_done[i]).collect();
    let mut cost = CostMatrix::new(gt_rest.len(), hyp_rest.len(), INFEASIBLE);
    for (r, &gi) in gt_rest.iter().enumerate() {
        for (c, &hi) in hyp_rest.iter().enumerate() {
            let v = overlap(&gt[gi].bbox, &hyp[hi].bbox);
            if v >= iou_min {
                cost.set(r, c, 1.0 - v);
            }
        }
    }
    let mut switches = 0;
    let a = solve_assignment(&cost);
    for &(r, c) in &a.matches {
        let (g, h) = (gt[gt_rest[r]].id, hyp[hyp_rest[c]].id);
        if last_match.get(&g).is_some_and(|&prev| prev != h) {
            switches += 1;
        }
        matches.push((g, h));
    }
    for &(g, h) in &matches {
        last_match.insert(g, h);
    }
    let tp = matches.len() as u64;
    FrameMatch {
        matches,
        fp: hyp.len() as u64 - tp,
        fn_: gt.len() as u64 - tp,
        switches,
    }
}

/// Identity-level true positives, false positives and false negatives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdCounts {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

/// Per-identity frame counts and pairwise co-located frame counts.
pub struct IdentityOverlap {
    pub gt_ids: Vec<u32>,
    pub hyp_ids: Vec<u32>,
    pub gt_frames: Vec<u64>,
    pub hyp_frames: Vec<u64>,
    /// `overlap[g][h]`: frames where both exist with IoU at least the threshold.
    pub overlap: Vec<Vec<u64>>,
}

impl IdentityOverlap {
    pub fn build(gt: &FrameBoxes, hyp: &FrameBoxes, iou_min: f64) -> Self {
        let ids = |fb: &FrameBoxes| -> Vec<u32> {
            fb.values().flatten().map(|b| b.id).collect::<BTreeSet<_>>().into_iter().collect()
        };
        let gt_ids = ids(gt);
        let hyp_ids = ids(hyp);
        let gi: HashMap<u32, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let hi: HashMap<u32, usize> = hyp_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut gt_frames = vec![0; gt_ids.len()];
        let mut hyp_frames = vec![0; hyp_ids.len()];
        let mut overlap = vec![vec![0; hyp_ids.len()]; gt_ids.len()];
        for b in gt.values().flatten() {
            gt_frames[gi[&b.id]] += 1;
        }
        for b in hyp.values().flatten() {
            hyp_frames[hi[&b.id]] += 1;
        }
        for (frame, gboxes) in gt {
            let Some(hboxes) = hyp.get(frame) else {
                continue;
            };
            for g in gboxes {
                for h in hboxes {
                    if self::overlap(&g.bbox, &h.bbox) >= iou_min {
                        overlap[gi[&g.id]][hi[&h.id]] += 1;
                    }
                }
            }
        }
        Self {
            gt_ids,
            hyp_ids,
            gt_frames,
            hyp_frames,
            overlap,
        }
    }

    /// Counts for a given partial gt → hyp identity assignment.
    pub fn counts_for(&self, pairs: &[(usize, usize)]) -> IdCounts {
        let idtp: u64 = pairs.iter().map(|&(g, h)| self.overlap[g][h]).sum();
        IdCounts {
            idtp,
            idfn: self.gt_frames.iter().sum::<u64>() - idtp,
            idfp: self.hyp_frames.iter().sum::<u64>() - idtp,
        }
    }
}

/// Optimal identity assignment and its counts.
pub fn id_counts(gt: &FrameBoxes, hyp: &FrameBoxes, iou_min: f64) -> IdCounts {
    let io = IdentityOverlap::build(gt, hyp, iou_min);
    let most = io.overlap.iter().flatten().copied().max().unwrap_or(0) as f64;
    let cost = CostMatrix::from_rows(
        io.overlap
            .iter()
            .map(|row| row.iter().map(|&o| most - o as f64).collect())
            .collect(),
    );
    let pairs: Vec<(usize, usize)> = solve_raw(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(g, h)| h.map(|h| (g, h)))
        .collect();
    io.counts_for(&pairs)
}

/// Identity F1 over whole sequences.
pub fn idf1(gt: &FrameBoxes, hyp: &FrameBoxes, iou_min: f64) -> f64 {
    let c = id_counts(gt, hyp, iou_min);
    Counts {
        idtp: c.idtp,
        idfp: c.idfp,
        idfn: c.idfn,
        ..Default::default()
    }
    .idf1()
}

/// Full evaluation of one sequence.
pub fn evaluate(gt: &FrameBoxes, hyp: &FrameBoxes, iou_min: f64) -> Counts {
    let mut counts = Counts::default();
    let mut last_match = HashMap::new();
    let frames: BTreeSet<u32> = gt.keys().chain(hyp.keys()).copied().collect();
    for f in frames {
        let g = gt.get(&f).map_or(&[][..], Vec::as_slice);
        let h = hyp.get(&f).map_or(&[][..], Vec::as_slice);
        let m = match_frame(g, h, &mut last_match, iou_min);
        counts.gt += g.len() as u64;
        counts.tp += m.matches.len() as u64;
        counts.fp += m.fp;
        counts.fn_ += m.fn_;
        counts.idsw += m.switches;
    }
    let ids = id_counts(gt, hyp, iou_min);
    counts.idtp = ids.idtp;
    counts.idfp = ids.idfp;
    counts.idfn = ids.idfn;
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lb(id: u32, x: f64) -> LabeledBox {
        LabeledBox {
            id,
            bbox: BBox::new(x, 0.0, 10.0, 20.0),
        }
    }

    fn traj(id: u32, frames: std::ops::RangeInclusive<u32>, x: f64) -> FrameBoxes {
        frames.map(|f| (f, vec![lb(id, x)])).collect()
    }

    fn merge(parts: &[FrameBoxes]) -> FrameBoxes {
        let mut out = FrameBoxes::new();
        for p in parts {
            for (f, v) in p {
                out.entry(*f).or_default().extend(v.iter().copied());
            }
        }
        out
    }

    #[test]
    fn frame_identity() {
        let boxes = vec![lb(1, 0.0), lb(2, 50.0)];
        let mut last = HashMap::new();
        let m = match_frame(&boxes, &boxes, &mut last, 0.5);
        assert_eq!((m.fp, m.fn_, m.switches, m.matches.len()), (0, 0, 0, 2));
    }

    #[test]
    fn frame_empty_hyp() {
        let mut last = HashMap::new();
        let m = match_frame(&[lb(1, 0.0), lb(2, 50.0)], &[], &mut last, 0.5);
        assert_eq!((m.fp, m.fn_), (0, 2));
    }

    #[test]
    fn switch_counted_on_new_hypothesis() {
        let mut last = HashMap::new();
        let m = match_frame(&[lb(1, 0.0)], &[lb(7, 0.0)], &mut last, 0.5);
        assert_eq!(m.switches, 0);
        let m = match_frame(&[lb(1, 0.0)], &[lb(9, 0.0)], &mut last, 0.5);
        assert_eq!(m.switches, 1);
        assert_eq!(last[&1], 9);
    }

    #[test]
    fn persistence_beats_better_overlap() {
        let mut last = HashMap::new();
        match_frame(&[lb(1, 0.0)], &[lb(7, 2.0)], &mut last, 0.5);
        // Hyp 9 sits exactly on the gt but 7 is still feasible: keep 7.
        let m = match_frame(&[lb(1, 0.0)], &[lb(7, 2.0), lb(9, 0.0)], &mut last, 0.5);
        assert_eq!(m.matches, vec![(1, 7)]);
        assert_eq!((m.switches, m.fp), (0, 1));
    }

    #[test]
    fn mota_examples() {
        let perfect = Counts { gt: 10, tp: 10, ..Default::default() };
        assert_eq!(perfect.mota(), Some(1.0));
        let c = Counts { gt: 100, fn_: 20, fp: 10, idsw: 5, ..Default::default() };
        assert!((c.mota().unwrap() - 0.65).abs() < 1e-12);
        let misses = Counts { gt: 100, fn_: 100, ..Default::default() };
        assert_eq!(misses.mota(), Some(0.0));
        assert_eq!(Counts::default().mota(), None);
        let bad = Counts { gt: 10, tp: 10, fp: 30, ..Default::default() };
        assert_eq!(bad.mota(), Some(-2.0));
    }

    #[test]
    fn precision_recall_examples() {
        let c = Counts { tp: 5, ..Default::default() };
        assert_eq!(c.precision(), 1.0);
        let c = Counts { tp: 85, fp: 15, ..Default::default() };
        assert!((c.precision() - 0.85).abs() < 1e-12);
        let c = Counts { tp: 90, fn_: 10, ..Default::default() };
        assert!((c.recall() - 0.9).abs() < 1e-12);
        assert_eq!(Counts::default().precision_recall(), (1.0, 1.0));
    }

    #[test]
    fn idf1_examples() {
        let gt = traj(1, 1..=10, 0.0);
        assert_eq!(idf1(&gt, &gt, 0.5), 1.0);

        let half = traj(5, 1..=5, 0.0);
        assert!((idf1(&gt, &half, 0.5) - 2.0 / 3.0).abs() < 1e-12);

        let split = merge(&[traj(5, 1..=5, 0.0), traj(6, 6..=10, 0.0)]);
        assert!((idf1(&gt, &split, 0.5) - 0.5).abs() < 1e-12);

        assert_eq!(idf1(&FrameBoxes::new(), &FrameBoxes::new(), 0.5), 1.0);
        assert_eq!(idf1(&FrameBoxes::new(), &gt, 0.5), 0.0);
    }

    #[test]
    fn self_evaluation_is_perfect() {
        let gt = merge(&[traj(1, 1..=10, 0.0), traj(2, 3..=12, 40.0), traj(3, 5..=6, 80.0)]);
        let c = evaluate(&gt, &gt, 0.5);
        assert_eq!(c.mota(), Some(1.0));
        assert_eq!((c.idf1(), c.precision(), c.recall(), c.idsw), (1.0, 1.0, 1.0, 0));
        assert_eq!(c.tp + c.fn_, c.gt);
    }

    #[test]
    fn dropping_hypotheses() {
        let gt = merge(&[traj(1, 1..=10, 0.0), traj(2, 1..=10, 40.0)]);
        let c = evaluate(&gt, &FrameBoxes::new(), 0.5);
        assert_eq!(c.recall(), 0.0);
        assert_eq!(c.precision(), 1.0);
    }

    #[test]
    fn hypothesis_relabeling_is_neutral() {
        let gt = merge(&[traj(1, 1..=10, 0.0), traj(2, 1..=10, 40.0)]);
        let hyp = merge(&[traj(10, 1..=4, 0.0), traj(11, 5..=10, 0.0), traj(12, 2..=9, 41.0), traj(13, 1..=3, 200.0)]);
        let relabeled: FrameBoxes = hyp
            .iter()
            .map(|(f, v)| (*f, v.iter().map(|b| LabeledBox { id: 100 - b.id, bbox: b.bbox }).collect()))
            .collect();
        assert_eq!(evaluate(&gt, &hyp, 0.5), evaluate(&gt, &relabeled, 0.5));
    }
}
