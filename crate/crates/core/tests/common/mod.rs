#![allow(dead_code)]

use std::collections::BTreeSet;

use motpipe::dataio::{attach_sidecars, parse_det, parse_gt, parse_hypotheses, parse_sidecars, write_tracks};
use motpipe::detpre::Detection;
use motpipe::metrics::{evaluate, Counts, EvalConfig};
use motpipe::synth::SynthScene;
use motpipe::tracker::{run_sequence, SequenceRun, TrackerConfig};

/// Detections of a scene joined with all of its sidecars, one entry per frame.
pub fn scene_frames(scene: &SynthScene) -> Vec<Vec<Detection>> {
    let mut set = parse_det(&scene.det).unwrap();
    let depth = (!scene.depth.is_empty()).then_some(scene.depth.as_str());
    let cues = parse_sidecars(Some(&scene.embed), depth, Some(&scene.pose)).unwrap();
    let warnings = attach_sidecars(&mut set, cues);
    assert!(warnings.is_empty(), "{warnings:?}");
    let mut frames = set.into_frames();
    frames.resize_with(scene.meta.seq_length as usize, Vec::new);
    frames
}

pub struct Outcome {
    pub run: SequenceRun,
    pub counts: Counts,
    pub distinct_ids: usize,
}

/// Tracks a scene and scores it against its own ground truth through the file formats.
pub fn track_scene(scene: &SynthScene, cfg: &TrackerConfig) -> Outcome {
    let run = run_sequence(scene_frames(scene), Some(scene.meta.seq_length), cfg).unwrap();
    let eval = EvalConfig::default();
    let gt = parse_gt(&scene.gt, &eval).unwrap();
    let hyp = parse_hypotheses(&write_tracks(&run.rows), &eval).unwrap();
    let counts = evaluate(&gt, &hyp, eval.match_iou_min);
    let distinct_ids = run.rows.iter().map(|r| r.id).collect::<BTreeSet<_>>().len();
    Outcome {
        run,
        counts,
        distinct_ids,
    }
}
