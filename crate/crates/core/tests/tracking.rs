mod common;

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;

use motpipe::dataio::load_sequence;
use motpipe::detpre::Detection;
use motpipe::motion::KalmanFilter;
use motpipe::synth::{generate, Occlusion, SynthConfig};
use motpipe::tracker::{Tracker, TrackerConfig};
use motpipe::BBox;

use common::{scene_frames, track_scene};

fn walkers(n: usize, frames: u32, jitter: &[f64]) -> Vec<Vec<Detection>> {
    (1..=frames)
        .map(|f| {
            (0..n)
                .map(|i| {
                    let k = (f as usize * n + i) % jitter.len();
                    let b = BBox::new(
                        80.0 + 250.0 * i as f64 + 1.5 * f as f64 + jitter[k],
                        150.0 + 40.0 * i as f64 - 0.5 * f as f64 - jitter[(k + 1) % jitter.len()],
                        50.0,
                        120.0 + jitter[(k + 2) % jitter.len()],
                    );
                    // Distinct confidences identify the detection behind each output row.
                    let mut d = Detection::new(f, b, 0.7 + 0.01 * i as f64 + 0.0001 * f as f64);
                    d.index_in_frame = i;
                    d
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smoothed_center_between_prediction_and_detection(
        n in 1usize..5,
        jitter in proptest::collection::vec(-4.0f64..4.0, 7..20),
    ) {
        let cfg = TrackerConfig::default();
        let kf = KalmanFilter::new(cfg.motion.clone());
        let mut tracker = Tracker::new(cfg).unwrap();
        for (k, dets) in walkers(n, 40, &jitter).into_iter().enumerate() {
            let predicted: HashMap<u32, (f64, f64)> = tracker
                .tracks()
                .iter()
                .filter_map(|t| t.id.map(|id| (id, kf.predict(&t.state).center())))
                .collect();
            let by_conf: Vec<(f64, (f64, f64))> = dets.iter().map(|d| (d.confidence, d.bbox.center())).collect();
            for row in tracker.step(k as u32 + 1, dets).unwrap() {
                let det = by_conf.iter().find(|(c, _)| *c == row.confidence);
                prop_assert!(det.is_some(), "reported confidence {} is not a detection's", row.confidence);
                let Some(&pred) = predicted.get(&row.id) else { continue };
                let (dx, dy) = det.unwrap().1;
                let (cx, cy) = row.bbox.center();
                let between = |v: f64, a: f64, b: f64| v >= a.min(b) - 1e-9 && v <= a.max(b) + 1e-9;
                prop_assert!(between(cx, pred.0, dx), "x {cx} outside [{}, {dx}]", pred.0);
                prop_assert!(between(cy, pred.1, dy), "y {cy} outside [{}, {dy}]", pred.1);
            }
        }
    }

    #[test]
    fn retired_ids_never_return(seed in 0u64..1000) {
        let scene = generate(&SynthConfig {
            seed,
            n_peds: 5,
            n_frames: 80,
            miss_rate: 0.2,
            clutter_rate: 0.5,
            ..Default::default()
        }).unwrap();
        let mut tracker = Tracker::new(TrackerConfig { max_age: 5, ..Default::default() }).unwrap();
        let mut retired: HashSet<u32> = HashSet::new();
        let mut alive: HashSet<u32> = HashSet::new();
        for (k, dets) in scene_frames(&scene).into_iter().enumerate() {
            for row in tracker.step(k as u32 + 1, dets).unwrap() {
                prop_assert!(!retired.contains(&row.id), "id {} reused", row.id);
            }
            let now: HashSet<u32> = tracker.tracks().iter().filter_map(|t| t.id).collect();
            retired.extend(alive.difference(&now));
            alive = now;
        }
        prop_assert!(tracker.ids_assigned() as usize >= alive.len() + retired.len());
    }
}

#[test]
fn longer_memory_never_adds_switches() {
    let scene = generate(&SynthConfig {
        seed: 21,
        n_peds: 8,
        n_frames: 200,
        vel_std: 0.05,
        miss_rate: 0.05,
        clutter_rate: 0.2,
        occlusions: vec![
            Occlusion { ped: 2, start: 40, duration: 15 },
            Occlusion { ped: 5, start: 90, duration: 30 },
            Occlusion { ped: 7, start: 120, duration: 45 },
        ],
        ..Default::default()
    })
    .unwrap();
    let mut previous = u64::MAX;
    for max_age in [5, 10, 20, 35, 50, 80] {
        let idsw = track_scene(&scene, &TrackerConfig { max_age, ..Default::default() }).counts.idsw;
        assert!(idsw <= previous, "max_age {max_age}: {idsw} switches after {previous}");
        previous = idsw;
    }
}

#[test]
fn run_is_deterministic() {
    let scene = generate(&SynthConfig {
        seed: 5,
        n_peds: 10,
        n_frames: 120,
        ..Default::default()
    })
    .unwrap();
    let cfg = TrackerConfig::default();
    assert_eq!(track_scene(&scene, &cfg).run, track_scene(&scene, &cfg).run);
}

#[test]
fn scene_directory_round_trip() {
    let tmp = std::env::temp_dir().join(format!("motpipe-roundtrip-{}", std::process::id()));
    let scene = generate(&SynthConfig {
        seed: 7,
        n_peds: 6,
        n_frames: 60,
        ..Default::default()
    })
    .unwrap();
    scene.write_to(&tmp).unwrap();
    let seq = load_sequence(&tmp).unwrap();
    std::fs::remove_dir_all(&tmp).unwrap();
    assert_eq!(seq.meta, scene.meta);
    assert!(seq.warnings.is_empty(), "{:?}", seq.warnings);
    let from_dir = seq.detections.into_frames();
    let in_memory = scene_frames(&scene);
    assert_eq!(from_dir.len(), 60);
    assert_eq!(&in_memory[..from_dir.len()], &from_dir[..]);
    assert!(from_dir.iter().flatten().all(|d| d.embedding.is_some() && d.rel_depth.is_some()));
}
