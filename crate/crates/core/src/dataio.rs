//! MOT17 sequence files and the embedding/depth/pose sidecars.
//!
//! All formats are header-less, comma-separated UTF-8 with `.` decimals.
//! Parse errors carry the 1-based line number.
//!
//! | file          | columns                                                      |
//! |---------------|--------------------------------------------------------------|
//! | `seqinfo.ini` | `[Sequence]` with name, frameRate, seqLength, imWidth, imHeight |
//! | `det/det.txt` | `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`       |
//! | `gt/gt.txt`   | `frame,id,bb_left,bb_top,bb_width,bb_height,active,category,visibility` |
//! | `embed.csv`   | `frame,det_idx,v0,...,v{D-1}`                                 |
//! | `depth.csv`   | `frame,det_idx,rel_depth`                                     |
//! | `pose.csv`    | `frame,det_idx,x0,y0,c0,...,x16,y16,c16`                      |
//!
//! `det_idx` is the 0-based position of a row among the rows of its frame in
//! `det.txt`, counting every row in file order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::detpre::{Detection, Keypoint, Pose, NUM_KEYPOINTS, PEDESTRIAN};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::metrics::{EvalConfig, FrameBoxes, LabeledBox};
use crate::tracker::TrackRow;

const POSE_COLUMNS: usize = 2 + NUM_KEYPOINTS * 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceMeta {
    pub name: String,
    pub frame_rate: u32,
    pub seq_length: u32,
    pub im_width: u32,
    pub im_height: u32,
}

impl SequenceMeta {
    pub fn to_ini(&self) -> String {
        format!(
            "[Sequence]\nname={}\nframeRate={}\nseqLength={}\nimWidth={}\nimHeight={}\n",
            self.name, self.frame_rate, self.seq_length, self.im_width, self.im_height
        )
    }
}

fn number<T: FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("malformed {what} `{}`", field.trim())))
}

pub fn parse_seqinfo(text: &str) -> Result<SequenceMeta> {
    let mut in_sequence = false;
    let mut seen_section = false;
    let mut values: HashMap<&str, (usize, &str)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            in_sequence = line.eq_ignore_ascii_case("[Sequence]");
            seen_section |= in_sequence;
            continue;
        }
        if !in_sequence {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(i + 1, format!("expected key=value, got `{line}`")));
        };
        values.insert(k.trim(), (i + 1, v.trim()));
    }
    if !seen_section {
        return Err(Error::MissingKey("[Sequence]".into()));
    }
    let get = |key: &str| values.get(key).copied().ok_or_else(|| Error::MissingKey(key.into()));
    let int = |key: &str| -> Result<u32> {
        let (line, v) = get(key)?;
        let n: u32 = number(v, line, key)?;
        if n == 0 {
            return Err(Error::parse(line, format!("{key} must be at least 1")));
        }
        Ok(n)
    };
    Ok(SequenceMeta {
        name: get("name")?.1.to_string(),
        frame_rate: int("frameRate")?,
        seq_length: int("seqLength")?,
        im_width: int("imWidth")?,
        im_height: int("imHeight")?,
    })
}

fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Detections grouped by frame, each frame in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSet {
    pub frames: BTreeMap<u32, Vec<Detection>>,
    /// Rows dropped for non-positive width or height.
    pub dropped: usize,
    pub warnings: Vec<String>,
}

impl DetectionSet {
    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn last_frame(&self) -> u32 {
        self.frames.keys().next_back().copied().unwrap_or(0)
    }

    /// Dense per-frame lists from frame 1 through the last frame with detections.
    pub fn into_frames(self) -> Vec<Vec<Detection>> {
        let last = self.last_frame();
        let mut frames = self.frames;
        (1..=last).map(|f| frames.remove(&f).unwrap_or_default()).collect()
    }
}

pub fn parse_det(text: &str) -> Result<DetectionSet> {
    let mut set = DetectionSet::default();
    let mut rows_seen: HashMap<u32, usize> = HashMap::new();
    for (line, l) in data_lines(text) {
        let f = fields(l);
        if f.len() < 7 {
            return Err(Error::parse(line, format!("expected at least 7 columns, got {}", f.len())));
        }
        let frame: i64 = number(f[0], line, "frame")?;
        if frame < 1 {
            return Err(Error::parse(line, format!("frame {frame} must be at least 1")));
        }
        let frame = frame as u32;
        let bbox = BBox::new(
            number(f[2], line, "bb_left")?,
            number(f[3], line, "bb_top")?,
            number(f[4], line, "bb_width")?,
            number(f[5], line, "bb_height")?,
        );
        let mut confidence: f64 = number(f[6], line, "conf")?;
        for (k, name) in [(7, "x"), (8, "y"), (9, "z")] {
            if let Some(v) = f.get(k) {
                number::<f64>(v, line, name)?;
            }
        }
        let slot = rows_seen.entry(frame).or_insert(0);
        let index_in_frame = *slot;
        *slot += 1;
        if !bbox.is_valid() {
            set.dropped += 1;
            set.warnings
                .push(format!("line {line}: dropped box with non-positive size"));
            continue;
        }
        if !(0.0..=1.0).contains(&confidence) {
            set.warnings
                .push(format!("line {line}: confidence {confidence} clamped to [0, 1]"));
            confidence = confidence.clamp(0.0, 1.0);
        }
        let mut det = Detection::new(frame, bbox, confidence);
        det.index_in_frame = index_in_frame;
        set.frames.entry(frame).or_default().push(det);
    }
    Ok(set)
}

struct GtRow {
    frame: u32,
    id: u32,
    bbox: BBox,
    active: bool,
    category: i32,
    visibility: f64,
}

fn parse_gt_row(line: usize, l: &str) -> Result<GtRow> {
    let f = fields(l);
    if f.len() < 9 {
        return Err(Error::parse(line, format!("expected 9 columns, got {}", f.len())));
    }
    let frame: i64 = number(f[0], line, "frame")?;
    if frame < 1 {
        return Err(Error::parse(line, format!("frame {frame} must be at least 1")));
    }
    let id: i64 = number(f[1], line, "id")?;
    if id < 0 {
        return Err(Error::parse(line, format!("id {id} must be non-negative")));
    }
    let active: f64 = number(f[6], line, "active")?;
    let category: f64 = number(f[7], line, "category")?;
    Ok(GtRow {
        frame: frame as u32,
        id: id as u32,
        bbox: BBox::new(
            number(f[2], line, "bb_left")?,
            number(f[3], line, "bb_top")?,
            number(f[4], line, "bb_width")?,
            number(f[5], line, "bb_height")?,
        ),
        active: active == 1.0,
        category: category as i32,
        visibility: number(f[8], line, "visibility")?,
    })
}

/// Ground truth retained under `cfg`: active rows of a considered category
/// with enough visibility and a valid box.
pub fn parse_gt(text: &str, cfg: &EvalConfig) -> Result<FrameBoxes> {
    let mut out = FrameBoxes::new();
    let mut seen = HashSet::new();
    for (line, l) in data_lines(text) {
        let row = parse_gt_row(line, l)?;
        if !seen.insert((row.frame, row.id)) {
            return Err(Error::parse(
                line,
                format!("duplicate id {} in frame {}", row.id, row.frame),
            ));
        }
        if row.active
            && cfg.consider_categories.contains(&row.category)
            && row.visibility >= cfg.min_visibility
            && row.bbox.is_valid()
        {
            out.entry(row.frame).or_default().push(LabeledBox {
                id: row.id,
                bbox: row.bbox,
            });
        }
    }
    Ok(out)
}

/// Parses a tracker output file. Nine-column input is recognised as the
/// ground-truth layout and filtered like [`parse_gt`], so a gt file can be
/// scored as a hypothesis.
pub fn parse_hypotheses(text: &str, cfg: &EvalConfig) -> Result<FrameBoxes> {
    let gt_layout = data_lines(text).next().is_some_and(|(_, l)| fields(l).len() == 9);
    if gt_layout {
        return parse_gt(text, cfg);
    }
    let mut out = FrameBoxes::new();
    for row in parse_tracks(text)? {
        out.entry(row.frame).or_default().push(LabeledBox {
            id: row.id,
            bbox: row.bbox,
        });
    }
    Ok(out)
}

/// Reads MOT-format track rows (`frame,id,box,conf,...`).
pub fn parse_tracks(text: &str) -> Result<Vec<TrackRow>> {
    let mut rows = Vec::new();
    for (line, l) in data_lines(text) {
        let f = fields(l);
        if f.len() < 6 {
            return Err(Error::parse(line, format!("expected at least 6 columns, got {}", f.len())));
        }
        let frame: i64 = number(f[0], line, "frame")?;
        if frame < 1 {
            return Err(Error::parse(line, format!("frame {frame} must be at least 1")));
        }
        let id: i64 = number(f[1], line, "id")?;
        if id < 0 {
            return Err(Error::parse(line, format!("id {id} must be non-negative")));
        }
        let confidence = match f.get(6) {
            Some(v) => number(v, line, "conf")?,
            None => 1.0,
        };
        rows.push(TrackRow {
            frame: frame as u32,
            id: id as u32,
            bbox: BBox::new(
                number(f[2], line, "bb_left")?,
                number(f[3], line, "bb_top")?,
                number(f[4], line, "bb_width")?,
                number(f[5], line, "bb_height")?,
            ),
            confidence,
        });
    }
    Ok(rows)
}

/// MOT submission text: sorted by `(frame, id)`, 2-decimal boxes, 4-decimal
/// confidence, LF endings.
pub fn write_tracks(rows: &[TrackRow]) -> String {
    let mut sorted: Vec<&TrackRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.id));
    let mut out = String::with_capacity(sorted.len() * 48);
    for r in sorted {
        let b = &r.bbox;
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.4},-1,-1,-1",
            r.frame, r.id, b.left, b.top, b.width, b.height, r.confidence
        );
    }
    out
}

/// Per-detection cues keyed by `(frame, det_idx)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecars {
    pub embeddings: BTreeMap<(u32, usize), Vec<f64>>,
    pub depth: BTreeMap<(u32, usize), f64>,
    pub pose: BTreeMap<(u32, usize), Box<Pose>>,
    pub warnings: Vec<String>,
}

fn key_of(f: &[&str], line: usize) -> Result<(u32, usize)> {
    let frame: i64 = number(f[0], line, "frame")?;
    if frame < 1 {
        return Err(Error::parse(line, format!("frame {frame} must be at least 1")));
    }
    let idx: usize = number(f[1], line, "det_idx")?;
    Ok((frame as u32, idx))
}

pub fn parse_sidecars(embed: Option<&str>, depth: Option<&str>, pose: Option<&str>) -> Result<Sidecars> {
    let mut s = Sidecars::default();
    if let Some(text) = embed {
        let mut dim = None;
        for (line, l) in data_lines(text) {
            let f = fields(l);
            if f.len() < 3 {
                return Err(Error::parse(line, "embedding row needs frame, det_idx and at least one value"));
            }
            let d = *dim.get_or_insert(f.len() - 2);
            if f.len() - 2 != d {
                return Err(Error::parse(
                    line,
                    format!("embedding has {} values, expected {d}", f.len() - 2),
                ));
            }
            let key = key_of(&f, line)?;
            let v: Vec<f64> = f[2..]
                .iter()
                .map(|x| number(x, line, "embedding value"))
                .collect::<Result<_>>()?;
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::parse(line, "embedding has zero or non-finite norm"));
            }
            s.embeddings.insert(key, v.into_iter().map(|x| x / norm).collect());
        }
    }
    if let Some(text) = depth {
        for (line, l) in data_lines(text) {
            let f = fields(l);
            if f.len() != 3 {
                return Err(Error::parse(line, format!("depth row needs 3 columns, got {}", f.len())));
            }
            let key = key_of(&f, line)?;
            let mut d: f64 = number(f[2], line, "rel_depth")?;
            if !(0.0..=1.0).contains(&d) {
                s.warnings.push(format!("line {line}: depth {d} clamped to [0, 1]"));
                d = d.clamp(0.0, 1.0);
            }
            s.depth.insert(key, d);
        }
    }
    if let Some(text) = pose {
        for (line, l) in data_lines(text) {
            let f = fields(l);
            if f.len() != POSE_COLUMNS {
                return Err(Error::parse(
                    line,
                    format!("pose row needs {POSE_COLUMNS} columns, got {}", f.len()),
                ));
            }
            let key = key_of(&f, line)?;
            let mut kps = [Keypoint { x: 0.0, y: 0.0, conf: 0.0 }; NUM_KEYPOINTS];
            for (k, kp) in kps.iter_mut().enumerate() {
                let base = 2 + 3 * k;
                kp.x = number(f[base], line, "keypoint x")?;
                kp.y = number(f[base + 1], line, "keypoint y")?;
                kp.conf = number(f[base + 2], line, "keypoint conf")?;
            }
            s.pose.insert(key, Box::new(kps));
        }
    }
    Ok(s)
}

/// Joins sidecar cues onto detections. Returns a warning per cue without a
/// matching detection.
pub fn attach_sidecars(dets: &mut DetectionSet, cues: Sidecars) -> Vec<String> {
    let mut index: HashMap<(u32, usize), &mut Detection> = HashMap::new();
    for (frame, list) in dets.frames.iter_mut() {
        for d in list.iter_mut() {
            index.insert((*frame, d.index_in_frame), d);
        }
    }
    let mut warnings = cues.warnings;
    let mut orphan = |kind: &str, (f, i): (u32, usize)| {
        warnings.push(format!("{kind} cue for frame {f} det_idx {i} has no detection; discarded"));
    };
    for (k, v) in cues.embeddings {
        match index.get_mut(&k) {
            Some(d) => d.embedding = Some(v),
            None => orphan("embedding", k),
        }
    }
    for (k, v) in cues.depth {
        match index.get_mut(&k) {
            Some(d) => d.rel_depth = Some(v),
            None => orphan("depth", k),
        }
    }
    for (k, v) in cues.pose {
        match index.get_mut(&k) {
            Some(d) => d.keypoints = Some(v),
            None => orphan("pose", k),
        }
    }
    warnings
}

/// Formats one detection row in `det.txt` layout.
pub fn det_line(frame: u32, bbox: &BBox, confidence: f64) -> String {
    format!(
        "{},-1,{:.2},{:.2},{:.2},{:.2},{:.4},-1,-1,-1",
        frame, bbox.left, bbox.top, bbox.width, bbox.height, confidence
    )
}

/// Formats one ground-truth row in `gt.txt` layout.
pub fn gt_line(frame: u32, id: u32, bbox: &BBox, visibility: f64) -> String {
    format!(
        "{},{},{:.2},{:.2},{:.2},{:.2},1,{},{:.2}",
        frame, id, bbox.left, bbox.top, bbox.width, bbox.height, PEDESTRIAN, visibility
    )
}

/// Reads a whole file, naming the path on failure.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    if path.is_file() {
        read_text(path).map(Some)
    } else {
        Ok(None)
    }
}

/// Writes a file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

/// File locations inside a sequence directory.
pub struct SequencePaths {
    pub seqinfo: PathBuf,
    pub det: PathBuf,
    pub gt: PathBuf,
    pub embed: PathBuf,
    pub depth: PathBuf,
    pub pose: PathBuf,
}

impl SequencePaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            seqinfo: dir.join("seqinfo.ini"),
            det: dir.join("det").join("det.txt"),
            gt: dir.join("gt").join("gt.txt"),
            embed: dir.join("embed.csv"),
            depth: dir.join("depth.csv"),
            pose: dir.join("pose.csv"),
        }
    }
}

/// A sequence directory with detections joined to whatever sidecars exist.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub meta: SequenceMeta,
    pub detections: DetectionSet,
    pub warnings: Vec<String>,
}

pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let p = SequencePaths::new(dir);
    let meta = parse_seqinfo(&read_text(&p.seqinfo)?).map_err(|e| e.in_file(&p.seqinfo))?;
    let mut detections = parse_det(&read_text(&p.det)?).map_err(|e| e.in_file(&p.det))?;
    let mut cues = Sidecars::default();
    if let Some(text) = read_optional(&p.embed)? {
        cues.embeddings = parse_sidecars(Some(&text), None, None).map_err(|e| e.in_file(&p.embed))?.embeddings;
    }
    if let Some(text) = read_optional(&p.depth)? {
        let d = parse_sidecars(None, Some(&text), None).map_err(|e| e.in_file(&p.depth))?;
        cues.depth = d.depth;
        cues.warnings = d.warnings;
    }
    if let Some(text) = read_optional(&p.pose)? {
        cues.pose = parse_sidecars(None, None, Some(&text)).map_err(|e| e.in_file(&p.pose))?.pose;
    }
    let mut warnings = std::mem::take(&mut detections.warnings);
    warnings.extend(attach_sidecars(&mut detections, cues));
    Ok(Sequence {
        meta,
        detections,
        warnings,
    })
}
