//! Seeded synthetic pedestrian scenes written in the same file formats as
//! real MOT17 sequences.
//!
//! Every random signal draws from its own ChaCha8 stream keyed by the seed,
//! so enabling or resizing one signal never shifts the numbers another one
//! sees.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use crate::dataio::{det_line, gt_line, write_text, SequenceMeta, SequencePaths};
use crate::detpre::NUM_KEYPOINTS;
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Frames before an occlusion during which the pedestrian is partially hidden.
pub const PRE_OCCLUSION_FRAMES: u32 = 5;
/// Largest |dot| allowed between two identity embeddings.
pub const MAX_IDENTITY_DOT: f64 = 0.35;

const VISIBLE_KEYPOINT_CONF: f64 = 0.9;
const HIDDEN_KEYPOINT_CONF: f64 = 0.1;
const MAX_EMBEDDING_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stream {
    Paths = 1,
    DetNoise = 2,
    Miss = 3,
    Clutter = 4,
    Embeddings = 5,
    EmbedNoise = 6,
    Confidence = 7,
    Pose = 8,
    Order = 9,
}

fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occlusion {
    /// 1-based pedestrian id as written to the ground truth.
    pub ped: u32,
    pub start: u32,
    pub duration: u32,
}

impl Occlusion {
    pub fn covers(&self, frame: u32) -> bool {
        frame >= self.start && frame < self.start + self.duration
    }

    pub fn is_approaching(&self, frame: u32) -> bool {
        frame < self.start && frame + PRE_OCCLUSION_FRAMES >= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Independent random walkers.
    Random,
    /// Pedestrians in pairs walking toward each other along a shared lane,
    /// crossing mid-sequence.
    Crossing,
    /// Pedestrians in pairs walking side by side with overlapping boxes and
    /// a shared velocity.
    Pairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub name: String,
    pub seed: u64,
    pub n_peds: u32,
    pub n_frames: u32,
    pub im_width: u32,
    pub im_height: u32,
    /// Per-frame velocity perturbation, px/frame.
    pub vel_std: f64,
    pub det_noise_std: f64,
    pub miss_rate: f64,
    /// Expected false detections per frame.
    pub clutter_rate: f64,
    pub embed_dim: usize,
    pub embed_noise_std: f64,
    pub occlusions: Vec<Occlusion>,
    pub depth_lanes: bool,
    pub layout: Layout,
    /// Give every identity the same clean embedding.
    pub identical_embeddings: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            name: "SYNTH".into(),
            seed: 0,
            n_peds: 10,
            n_frames: 300,
            im_width: 1920,
            im_height: 1080,
            vel_std: 0.1,
            det_noise_std: 1.0,
            miss_rate: 0.05,
            clutter_rate: 0.5,
            embed_dim: 128,
            embed_noise_std: 0.01,
            occlusions: Vec::new(),
            depth_lanes: true,
            layout: Layout::Random,
            identical_embeddings: false,
        }
    }
}

impl SynthConfig {
    /// Noise-free scene: exact detections, no misses, no clutter.
    pub fn noiseless(seed: u64, n_peds: u32, n_frames: u32) -> Self {
        Self {
            seed,
            n_peds,
            n_frames,
            vel_std: 0.0,
            det_noise_std: 0.0,
            miss_rate: 0.0,
            clutter_rate: 0.0,
            embed_noise_std: 0.0,
            ..Default::default()
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_peds == 0 {
            v.push("n_peds must be at least 1".into());
        }
        if self.n_frames == 0 {
            v.push("n_frames must be at least 1".into());
        }
        if self.im_width < 64 || self.im_height < 64 {
            v.push("image must be at least 64x64".into());
        }
        if self.embed_dim == 0 {
            v.push("embed_dim must be at least 1".into());
        }
        for (name, x) in [
            ("vel_std", self.vel_std),
            ("det_noise_std", self.det_noise_std),
            ("embed_noise_std", self.embed_noise_std),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                v.push(format!("{name} {x} must be non-negative"));
            }
        }
        for (name, x) in [("miss_rate", self.miss_rate), ("clutter_rate", self.clutter_rate)] {
            if !(0.0..=1.0).contains(&x) {
                v.push(format!("{name} {x} outside [0, 1]"));
            }
        }
        for o in &self.occlusions {
            if o.ped == 0 || o.ped > self.n_peds {
                v.push(format!("occlusion references unknown pedestrian {}", o.ped));
            }
            if o.duration == 0 {
                v.push(format!("occlusion of pedestrian {} has zero duration", o.ped));
            }
            if o.start == 0 {
                v.push(format!("occlusion of pedestrian {} starts at frame 0", o.ped));
            }
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

/// A generated sequence, already rendered to file text.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub meta: SequenceMeta,
    pub seqinfo: String,
    pub gt: String,
    pub det: String,
    pub embed: String,
    /// Empty unless depth lanes are enabled.
    pub depth: String,
    pub pose: String,
}

impl SynthScene {
    /// Writes the scene as a sequence directory readable by
    /// [`load_sequence`](crate::dataio::load_sequence).
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let p = SequencePaths::new(dir);
        write_text(&p.seqinfo, &self.seqinfo)?;
        write_text(&p.gt, &self.gt)?;
        write_text(&p.det, &self.det)?;
        write_text(&p.embed, &self.embed)?;
        write_text(&p.pose, &self.pose)?;
        if !self.depth.is_empty() {
            write_text(&p.depth, &self.depth)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Walker {
    bbox: BBox,
    vx: f64,
    vy: f64,
    /// Index of an earlier walker whose velocity this one copies.
    follows: Option<usize>,
}

impl Walker {
    fn advance(&mut self, vel: &mut impl FnMut() -> f64, width: f64, height: f64) {
        self.vx += vel();
        self.vy += vel();
        let b = &mut self.bbox;
        b.left += self.vx;
        b.top += self.vy;
        reflect(&mut b.left, &mut self.vx, b.width, width);
        reflect(&mut b.top, &mut self.vy, b.height, height);
    }
}

/// Keeps `[pos, pos + size]` inside `[0, limit]`, mirroring position and velocity.
fn reflect(pos: &mut f64, vel: &mut f64, size: f64, limit: f64) {
    if *pos < 0.0 {
        *pos = -*pos;
        *vel = vel.abs();
    }
    if *pos + size > limit {
        *pos = 2.0 * (limit - size) - *pos;
        *vel = -vel.abs();
    }
    *pos = pos.clamp(0.0, (limit - size).max(0.0));
}

fn random_walker(rng: &mut ChaCha8Rng, w: f64, h: f64) -> Walker {
    let height = rng.random_range(0.12..0.25) * h;
    let width = 0.4 * height;
    let speed = rng.random_range(0.5..3.0);
    let dir = rng.random_range(0.0..std::f64::consts::TAU);
    Walker {
        bbox: BBox::new(
            rng.random_range(0.0..w - width),
            rng.random_range(0.0..h - height),
            width,
            height,
        ),
        vx: speed * dir.cos(),
        vy: speed * dir.sin(),
        follows: None,
    }
}

fn crossing_pair(rng: &mut ChaCha8Rng, lane: usize, lanes: usize, cfg: &SynthConfig) -> [Walker; 2] {
    let (w, h) = (cfg.im_width as f64, cfg.im_height as f64);
    let height = rng.random_range(0.12..0.2) * h;
    let width = 0.4 * height;
    let half = cfg.n_frames as f64 / 2.0;
    let max_speed = ((w / 2.0 - width) / half.max(1.0)).max(0.1);
    let speed = rng.random_range(1.5..3.0f64).min(max_speed);
    let lane_center = (lane as f64 + 1.0) * h / (lanes as f64 + 1.0);
    let top = (lane_center - height / 2.0).clamp(0.0, h - height);
    let offset = rng.random_range(-0.1..0.1) * height;
    // Centers meet at the image midline halfway through the sequence; frame 1 is t = 0.
    let start = |dir: f64| w / 2.0 - dir * speed * (half - 1.0) - width / 2.0;
    [
        Walker {
            bbox: BBox::new(start(1.0), top, width, height),
            vx: speed,
            vy: 0.0,
            follows: None,
        },
        Walker {
            bbox: BBox::new(start(-1.0), (top + offset).clamp(0.0, h - height), width, height),
            vx: -speed,
            vy: 0.0,
            follows: None,
        },
    ]
}

fn side_by_side_pair(rng: &mut ChaCha8Rng, leader: usize, cfg: &SynthConfig) -> [Walker; 2] {
    let (w, h) = (cfg.im_width as f64, cfg.im_height as f64);
    let height = rng.random_range(0.12..0.2) * h;
    let width = 0.4 * height;
    let gap = 0.6 * width;
    let span = width + gap;
    let speed = rng.random_range(0.5..2.0f64).min(((w - span) / cfg.n_frames as f64).max(0.0));
    let right = rng.random_bool(0.5);
    let room = (w - span - speed * cfg.n_frames as f64).max(0.0);
    let left = rng.random_range(0.0..=room) + if right { 0.0 } else { speed * cfg.n_frames as f64 };
    let top = rng.random_range(0.0..h - height);
    let vx = if right { speed } else { -speed };
    [
        Walker {
            bbox: BBox::new(left, top, width, height),
            vx,
            vy: 0.0,
            follows: None,
        },
        Walker {
            bbox: BBox::new(left + gap, (top + 0.05 * height).min(h - height), width, height),
            vx,
            vy: 0.0,
            follows: Some(leader),
        },
    ]
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1e-12 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity_embeddings(cfg: &SynthConfig) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream(cfg.seed, Stream::Embeddings);
    let n = cfg.n_peds as usize;
    if cfg.identical_embeddings {
        let v = unit_vector(&mut rng, cfg.embed_dim);
        return Ok(vec![v; n]);
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        draws += 1;
        if draws > MAX_EMBEDDING_DRAWS {
            return Err(Error::Config(vec![format!(
                "cannot draw {n} embeddings of dimension {} with pairwise |dot| < {MAX_IDENTITY_DOT}",
                cfg.embed_dim
            )]));
        }
        let v = unit_vector(&mut rng, cfg.embed_dim);
        if out.iter().all(|u| dot(u, &v).abs() < MAX_IDENTITY_DOT) {
            out.push(v);
        }
    }
    Ok(out)
}

fn write_vector(out: &mut String, frame: u32, idx: usize, v: &[f64]) {
    let _ = write!(out, "{frame},{idx}");
    for x in v {
        let _ = write!(out, ",{x:.6}");
    }
    out.push('\n');
}

fn nearest_other(positions: &[BBox], ped: usize) -> Option<usize> {
    let (cx, cy) = positions[ped].center();
    (0..positions.len())
        .filter(|&j| j != ped)
        .min_by(|&a, &b| {
            let d = |j: usize| {
                let (x, y) = positions[j].center();
                (x - cx).powi(2) + (y - cy).powi(2)
            };
            d(a).total_cmp(&d(b))
        })
}

struct PendingDet {
    bbox: BBox,
    conf: f64,
    embedding: Vec<f64>,
    depth: f64,
    pose_conf: Option<f64>,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthScene> {
    cfg.validate()?;
    let (w, h) = (cfg.im_width as f64, cfg.im_height as f64);
    let n = cfg.n_peds as usize;

    let mut paths = stream(cfg.seed, Stream::Paths);
    let mut walkers: Vec<Walker> = Vec::with_capacity(n);
    match cfg.layout {
        Layout::Random => {
            for _ in 0..n {
                walkers.push(random_walker(&mut paths, w, h));
            }
        }
        Layout::Crossing => {
            let lanes = n / 2;
            for lane in 0..lanes {
                walkers.extend(crossing_pair(&mut paths, lane, lanes, cfg));
            }
            if n % 2 == 1 {
                walkers.push(random_walker(&mut paths, w, h));
            }
        }
        Layout::Pairs => {
            for pair in 0..n / 2 {
                walkers.extend(side_by_side_pair(&mut paths, 2 * pair, cfg));
            }
            if n % 2 == 1 {
                walkers.push(random_walker(&mut paths, w, h));
            }
        }
    }
    let vel_noise = Normal::new(0.0, cfg.vel_std).expect("validated std");
    let det_noise = Normal::new(0.0, cfg.det_noise_std).expect("validated std");
    let embed_noise = Normal::new(0.0, cfg.embed_noise_std).expect("validated std");
    let clutter_count = (cfg.clutter_rate > 0.0).then(|| Poisson::new(cfg.clutter_rate).expect("validated rate"));

    let identities = identity_embeddings(cfg)?;
    let mut noise_rng = stream(cfg.seed, Stream::DetNoise);
    let mut miss_rng = stream(cfg.seed, Stream::Miss);
    let mut clutter_rng = stream(cfg.seed, Stream::Clutter);
    let mut embed_rng = stream(cfg.seed, Stream::EmbedNoise);
    let mut conf_rng = stream(cfg.seed, Stream::Confidence);
    let mut pose_rng = stream(cfg.seed, Stream::Pose);
    let mut order_rng = stream(cfg.seed, Stream::Order);

    // Occluders are fixed from positions at occlusion onset, so paths are simulated up front.
    let mut boxes: Vec<Vec<BBox>> = Vec::with_capacity(cfg.n_frames as usize);
    for frame in 1..=cfg.n_frames {
        if frame > 1 {
            for i in 0..walkers.len() {
                match walkers[i].follows {
                    Some(j) => {
                        let (vx, vy) = (walkers[j].vx, walkers[j].vy);
                        let walker = &mut walkers[i];
                        walker.vx = vx;
                        walker.vy = vy;
                        walker.advance(&mut || 0.0, w, h);
                    }
                    None => walkers[i].advance(&mut || vel_noise.sample(&mut paths), w, h),
                }
            }
        }
        boxes.push(walkers.iter().map(|w| w.bbox).collect());
    }
    let occluders: Vec<Option<usize>> = cfg
        .occlusions
        .iter()
        .map(|o| {
            let at = (o.start.min(cfg.n_frames) - 1) as usize;
            nearest_other(&boxes[at], (o.ped - 1) as usize)
        })
        .collect();

    let (mut gt, mut det, mut embed, mut depth, mut pose) =
        (String::new(), String::new(), String::new(), String::new(), String::new());
    for frame in 1..=cfg.n_frames {
        let positions = &boxes[(frame - 1) as usize];
        let mut pending = Vec::new();
        for (i, truth) in positions.iter().enumerate() {
            let id = i as u32 + 1;
            let hidden = cfg.occlusions.iter().any(|o| o.ped == id && o.covers(frame));
            let _ = writeln!(gt, "{}", gt_line(frame, id, truth, if hidden { 0.0 } else { 1.0 }));

            let missed = miss_rng.random_bool(cfg.miss_rate);
            let noise: [f64; 4] = std::array::from_fn(|_| det_noise.sample(&mut noise_rng));
            let conf = conf_rng.random_range(0.7..1.0);
            if hidden || missed {
                continue;
            }
            let bbox = BBox::new(
                truth.left + noise[0],
                truth.top + noise[1],
                (truth.width + noise[2]).max(1.0),
                (truth.height + noise[3]).max(1.0),
            );

            let mut clean = identities[i].clone();
            let mut pose_conf = VISIBLE_KEYPOINT_CONF;
            for (o, occluder) in cfg.occlusions.iter().zip(&occluders) {
                if o.ped != id || !o.is_approaching(frame) {
                    continue;
                }
                pose_conf = HIDDEN_KEYPOINT_CONF;
                if let Some(j) = occluder {
                    // Progressively more of the occluder leaks into the appearance.
                    let weight = (PRE_OCCLUSION_FRAMES + frame + 1 - o.start) as f64 / PRE_OCCLUSION_FRAMES as f64;
                    clean = clean
                        .iter()
                        .zip(&identities[*j])
                        .map(|(a, b)| (1.0 - weight) * a + weight * b)
                        .collect();
                }
            }
            let embedding = normalized(
                clean
                    .into_iter()
                    .map(|x| x + embed_noise.sample(&mut embed_rng))
                    .collect(),
            );
            pending.push(PendingDet {
                bbox,
                conf,
                embedding,
                depth: (i as f64 + 0.5) / n as f64,
                pose_conf: Some(pose_conf),
            });
        }

        let clutter = clutter_count.as_ref().map_or(0, |p| p.sample(&mut clutter_rng) as usize);
        for _ in 0..clutter {
            let height = clutter_rng.random_range(0.08..0.25) * h;
            let width = 0.4 * height;
            pending.push(PendingDet {
                bbox: BBox::new(
                    clutter_rng.random_range(0.0..w - width),
                    clutter_rng.random_range(0.0..h - height),
                    width,
                    height,
                ),
                conf: clutter_rng.random_range(0.3..0.9),
                embedding: unit_vector(&mut clutter_rng, cfg.embed_dim),
                depth: clutter_rng.random_range(0.0..1.0),
                pose_conf: None,
            });
        }
        pending.shuffle(&mut order_rng);

        for (idx, d) in pending.iter().enumerate() {
            let _ = writeln!(det, "{}", det_line(frame, &d.bbox, d.conf));
            write_vector(&mut embed, frame, idx, &d.embedding);
            if cfg.depth_lanes {
                let _ = writeln!(depth, "{frame},{idx},{:.6}", d.depth);
            }
            if let Some(c) = d.pose_conf {
                let _ = write!(pose, "{frame},{idx}");
                for _ in 0..NUM_KEYPOINTS {
                    let x = d.bbox.left + pose_rng.random_range(0.0..1.0) * d.bbox.width;
                    let y = d.bbox.top + pose_rng.random_range(0.0..1.0) * d.bbox.height;
                    let _ = write!(pose, ",{x:.2},{y:.2},{c:.2}");
                }
                pose.push('\n');
            }
        }
    }

    let meta = SequenceMeta {
        name: cfg.name.clone(),
        frame_rate: 30,
        seq_length: cfg.n_frames,
        im_width: cfg.im_width,
        im_height: cfg.im_height,
    };
    Ok(SynthScene {
        seqinfo: meta.to_ini(),
        meta,
        gt,
        det,
        embed,
        depth,
        pose,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{parse_det, parse_gt, parse_sidecars};
    use crate::metrics::EvalConfig;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            n_peds: 6,
            n_frames: 60,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&small(3)).unwrap(), generate(&small(3)).unwrap());
        assert_ne!(generate(&small(3)).unwrap().det, generate(&small(4)).unwrap().det);
    }

    #[test]
    fn noiseless_detections_equal_ground_truth() {
        let scene = generate(&SynthConfig::noiseless(11, 8, 40)).unwrap();
        let gt = parse_gt(&scene.gt, &EvalConfig::default()).unwrap();
        let dets = parse_det(&scene.det).unwrap();
        for (frame, g) in &gt {
            let mut a: Vec<_> = g.iter().map(|b| (b.bbox.left, b.bbox.top, b.bbox.width, b.bbox.height)).collect();
            let mut b: Vec<_> = dets.frames[frame]
                .iter()
                .map(|d| (d.bbox.left, d.bbox.top, d.bbox.width, d.bbox.height))
                .collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(a, b, "frame {frame}");
        }
    }

    #[test]
    fn ground_truth_stays_inside_image() {
        let cfg = SynthConfig {
            n_frames: 500,
            vel_std: 0.5,
            ..small(5)
        };
        let scene = generate(&cfg).unwrap();
        for b in parse_gt(&scene.gt, &EvalConfig::default()).unwrap().values().flatten() {
            assert!(b.bbox.left >= 0.0 && b.bbox.top >= 0.0);
            assert!(b.bbox.right() <= cfg.im_width as f64 + 0.01);
            assert!(b.bbox.bottom() <= cfg.im_height as f64 + 0.01);
        }
    }

    #[test]
    fn clutter_rate_matches_expectation() {
        let cfg = SynthConfig {
            n_peds: 1,
            n_frames: 2000,
            miss_rate: 0.0,
            clutter_rate: 0.7,
            embed_dim: 8,
            ..small(9)
        };
        let scene = generate(&cfg).unwrap();
        let total = parse_det(&scene.det).unwrap().len() as f64;
        let clutter = total - cfg.n_frames as f64;
        let frames = cfg.n_frames as f64;
        let mean = clutter / frames;
        let sigma = (cfg.clutter_rate / frames).sqrt();
        assert!((mean - cfg.clutter_rate).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn identity_embeddings_are_separated() {
        let cfg = SynthConfig {
            n_peds: 40,
            ..small(1)
        };
        let ids = identity_embeddings(&cfg).unwrap();
        for i in 0..ids.len() {
            assert!((dot(&ids[i], &ids[i]) - 1.0).abs() < 1e-12);
            for j in 0..i {
                assert!(dot(&ids[i], &ids[j]).abs() < MAX_IDENTITY_DOT);
            }
        }
    }

    #[test]
    fn occlusions_suppress_detections_and_flag_pose() {
        let cfg = SynthConfig {
            occlusions: vec![Occlusion { ped: 2, start: 20, duration: 10 }],
            miss_rate: 0.0,
            clutter_rate: 0.0,
            ..small(2)
        };
        let scene = generate(&cfg).unwrap();
        let dets = parse_det(&scene.det).unwrap();
        assert_eq!(dets.frames[&19].len(), 6);
        assert_eq!(dets.frames[&20].len(), 5);
        assert_eq!(dets.frames[&29].len(), 5);
        assert_eq!(dets.frames[&30].len(), 6);
        let cues = parse_sidecars(None, None, Some(&scene.pose)).unwrap();
        let low = |f: u32| (0..6).filter(|&i| cues.pose.get(&(f, i)).is_some_and(|p| p[0].conf < 0.5)).count();
        assert_eq!(low(14), 0);
        assert_eq!(low(15), 1);
        assert_eq!(low(19), 1);
    }

    #[test]
    fn depth_lanes() {
        let cfg = SynthConfig {
            n_peds: 4,
            clutter_rate: 0.0,
            ..small(2)
        };
        let cues = parse_sidecars(None, Some(&generate(&cfg).unwrap().depth), None).unwrap();
        let mut lanes: Vec<f64> = cues.depth.values().copied().collect();
        lanes.sort_by(f64::total_cmp);
        lanes.dedup();
        assert_eq!(lanes, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn invalid_configs_rejected() {
        let cfg = SynthConfig {
            occlusions: vec![Occlusion { ped: 99, start: 1, duration: 3 }],
            ..small(0)
        };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        let cfg = SynthConfig {
            miss_rate: 1.5,
            ..small(0)
        };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn side_by_side_pairs_stay_together() {
        let cfg = SynthConfig {
            layout: Layout::Pairs,
            n_peds: 4,
            n_frames: 200,
            vel_std: 0.2,
            ..small(6)
        };
        let gt = parse_gt(&generate(&cfg).unwrap().gt, &EvalConfig::default()).unwrap();
        for boxes in gt.values() {
            let a = &boxes.iter().find(|b| b.id == 1).unwrap().bbox;
            let b = &boxes.iter().find(|b| b.id == 2).unwrap().bbox;
            assert!(crate::geometry::iou(a, b).unwrap() > 0.1);
        }
    }

    #[test]
    fn crossing_pairs_meet_midway() {
        let cfg = SynthConfig {
            layout: Layout::Crossing,
            vel_std: 0.0,
            n_peds: 2,
            n_frames: 100,
            ..small(4)
        };
        let gt = parse_gt(&generate(&cfg).unwrap().gt, &EvalConfig::default()).unwrap();
        let cx = |f: u32, id: u32| gt[&f].iter().find(|b| b.id == id).unwrap().bbox.center().0;
        assert!(cx(1, 1) < cx(1, 2));
        assert!(cx(100, 1) > cx(100, 2));
    }
}
