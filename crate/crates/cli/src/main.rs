//! `motpipe` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 input/parse error.

mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use motpipe::config::{apply_tracker_config, parse_synth_config};
use motpipe::dataio::{
    load_sequence, parse_gt, parse_hypotheses, parse_seqinfo, read_text, write_text, write_tracks, SequencePaths,
};
use motpipe::metrics::{evaluate, Counts, EvalConfig};
use motpipe::report::EvalReport;
use motpipe::synth::{generate, SynthConfig};
use motpipe::tracker::{run_sequence, TrackerConfig};

use manifest::{config_from_snapshot, config_snapshot, RunManifest, SequenceStats};

#[derive(Parser)]
#[command(name = "motpipe", version, about = "Pedestrian tracking, evaluation and synthetic scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one sequence directory and write a MOT-format track file.
    Track(TrackArgs),
    /// Score track files against ground truth and write the report.
    Eval(EvalArgs),
    /// Generate a synthetic sequence directory.
    Synth(SynthArgs),
}

#[derive(Args)]
struct TrackArgs {
    /// Sequence directory with seqinfo.ini and det/det.txt.
    #[arg(long, required_unless_present = "from_manifest")]
    seq: Option<PathBuf>,
    /// Output track file.
    #[arg(long, required_unless_present = "from_manifest")]
    out: Option<PathBuf>,
    /// Flat key=value tracker settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    depth_weight: Option<f64>,
    /// Report raw detection boxes instead of filtered ones.
    #[arg(long)]
    no_smoothing: bool,
    /// Recorded in the manifest; tracking is deterministic and ignores it.
    #[arg(long)]
    seed: Option<u64>,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Re-run with the inputs and settings recorded in a manifest.
    #[arg(long, conflicts_with_all = ["seq", "config", "depth_weight", "no_smoothing"])]
    from_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground truth: a sequence directory or a gt.txt file. Repeat per sequence.
    #[arg(long, required = true)]
    gt: Vec<PathBuf>,
    /// Track file, paired with the --gt at the same position.
    #[arg(long, required = true)]
    hyp: Vec<PathBuf>,
    /// Report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG bar chart.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    iou_min: f64,
}

#[derive(Args)]
struct SynthArgs {
    /// Flat key=value synth settings; defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output sequence directory.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Input(String),
}

impl From<motpipe::Error> for Failure {
    fn from(e: motpipe::Error) -> Self {
        match e {
            motpipe::Error::Config(v) => Failure::Usage(format!("invalid configuration:\n  {}", v.join("\n  "))),
            other => Failure::Input(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Track(a) => cmd_track(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_track(args: TrackArgs) -> CmdResult {
    let started = Instant::now();
    let mut inputs = BTreeMap::new();
    let (seq_dir, out, cfg, seed) = match &args.from_manifest {
        Some(path) => {
            let m = RunManifest::read(path).map_err(Failure::Input)?;
            let cfg = config_from_snapshot(&m.config).map_err(Failure::Input)?;
            let seq = m.inputs.get("seq").ok_or_else(|| Failure::Input("manifest has no seq input".into()))?;
            let out = match &args.out {
                Some(o) => o.clone(),
                None => PathBuf::from(
                    m.outputs
                        .get("tracks")
                        .ok_or_else(|| Failure::Input("manifest has no tracks output".into()))?,
                ),
            };
            inputs.insert("manifest".to_string(), path_string(path));
            (PathBuf::from(seq), out, cfg, args.seed.or(m.seed))
        }
        None => {
            let mut cfg = TrackerConfig::default();
            if let Some(path) = &args.config {
                apply_tracker_config(&mut cfg, &read_text(path)?).map_err(|e| e.in_file(path))?;
                inputs.insert("config".to_string(), path_string(path));
            }
            if let Some(w) = args.depth_weight {
                cfg.assoc.depth_weight = w;
            }
            if args.no_smoothing {
                cfg.output_smoothing = false;
            }
            let seq = args.seq.clone().expect("required by clap");
            let out = args.out.clone().expect("required by clap");
            (seq, out, cfg, args.seed)
        }
    };
    cfg.validate()?;
    inputs.insert("seq".to_string(), path_string(&seq_dir));

    let seq = load_sequence(&seq_dir)?;
    warn_all(&seq.warnings);
    let mut frames = seq.detections.into_frames();
    if (frames.len() as u32) < seq.meta.seq_length {
        frames.resize_with(seq.meta.seq_length as usize, Vec::new);
    }
    let n_frames = frames.len() as u32;
    let tracking = Instant::now();
    let run = run_sequence(frames, Some(seq.meta.seq_length), &cfg)?;
    let secs = tracking.elapsed().as_secs_f64();
    warn_all(&run.warnings);

    write_text(&out, &write_tracks(&run.rows))?;
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", out.display())));
    let mut outputs = BTreeMap::new();
    outputs.insert("tracks".to_string(), path_string(&out));
    let mut warnings = seq.warnings;
    warnings.extend(run.warnings);
    let manifest = RunManifest {
        tool: "motpipe".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "track".into(),
        config: config_snapshot(&cfg),
        inputs,
        outputs,
        seed,
        duration_seconds: started.elapsed().as_secs_f64(),
        sequences: vec![SequenceStats {
            name: seq.meta.name.clone(),
            frames: n_frames,
            frames_per_second: if secs > 0.0 { n_frames as f64 / secs } else { 0.0 },
        }],
        warnings,
    };
    manifest
        .write_atomic(&manifest_path)
        .map_err(|e| Failure::Input(format!("{}: {e}", manifest_path.display())))?;
    eprintln!(
        "{}: {} frames, {} rows, {:.1} frames/s",
        seq.meta.name,
        n_frames,
        run.rows.len(),
        manifest.sequences[0].frames_per_second
    );
    Ok(())
}

/// Ground truth location resolved to a file, a display name, and the
/// sequence length when a seqinfo.ini is available.
struct GtSource {
    name: String,
    file: PathBuf,
    seq_length: Option<u32>,
}

fn resolve_gt(path: &Path) -> Result<GtSource, Failure> {
    if path.is_dir() {
        let p = SequencePaths::new(path);
        let (name, seq_length) = if p.seqinfo.is_file() {
            let meta = parse_seqinfo(&read_text(&p.seqinfo)?).map_err(|e| e.in_file(&p.seqinfo))?;
            (meta.name, Some(meta.seq_length))
        } else {
            (dir_name(path), None)
        };
        return Ok(GtSource {
            name,
            file: p.gt,
            seq_length,
        });
    }
    // `<seq>/gt/gt.txt` is named after `<seq>`.
    let parent = path.parent();
    let name = match parent.and_then(|p| p.file_name()) {
        Some(n) if n == "gt" => parent.and_then(Path::parent).map(dir_name),
        _ => None,
    }
    .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    Ok(GtSource {
        name,
        file: path.to_path_buf(),
        seq_length: None,
    })
}

fn dir_name(p: &Path) -> String {
    p.canonicalize()
        .ok()
        .and_then(|c| c.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path_string(p))
}

fn evaluate_pair(gt: &GtSource, hyp_path: &Path, cfg: &EvalConfig) -> Result<Counts, Failure> {
    let gt_boxes = parse_gt(&read_text(&gt.file)?, cfg).map_err(|e| e.in_file(&gt.file))?;
    let hyp = parse_hypotheses(&read_text(hyp_path)?, cfg).map_err(|e| e.in_file(hyp_path))?;
    if let (Some(len), Some(&last)) = (gt.seq_length, hyp.keys().next_back()) {
        if last > len {
            return Err(Failure::Input(format!(
                "{} has frame {last} but sequence {} has {len} frames; gt and hyp do not belong together",
                hyp_path.display(),
                gt.name
            )));
        }
    }
    Ok(evaluate(&gt_boxes, &hyp, cfg.match_iou_min))
}

fn eval_threads() -> Result<Option<usize>, Failure> {
    match std::env::var("MOTPIPE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!("MOTPIPE_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    if args.gt.len() != args.hyp.len() {
        return Err(Failure::Input(format!(
            "{} --gt but {} --hyp; each sequence needs one of each",
            args.gt.len(),
            args.hyp.len()
        )));
    }
    let cfg = EvalConfig {
        match_iou_min: args.iou_min,
        ..Default::default()
    };
    cfg.validate()?;
    let sources: Vec<GtSource> = args.gt.iter().map(|p| resolve_gt(p)).collect::<Result<_, _>>()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = eval_threads()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Usage(e.to_string()))?;
    let results: Vec<Result<Counts, Failure>> = pool.install(|| {
        sources
            .par_iter()
            .zip(args.hyp.par_iter())
            .map(|(gt, hyp)| evaluate_pair(gt, hyp, &cfg))
            .collect()
    });

    let mut report = EvalReport::default();
    for (src, counts) in sources.iter().zip(results) {
        report.push(src.name.clone(), counts?);
    }
    let csv = report.to_csv();
    write_text(&args.out, &csv)?;
    if let Some(svg) = &args.svg {
        write_text(svg, &report.to_svg())?;
    }
    print!("{csv}");
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CmdResult {
    let cfg = match &args.config {
        Some(path) => parse_synth_config(&read_text(path)?).map_err(|e| e.in_file(path))?,
        None => SynthConfig::default(),
    };
    let scene = generate(&cfg)?;
    scene.write_to(&args.out)?;
    eprintln!(
        "{}: {} pedestrians, {} frames -> {}",
        cfg.name,
        cfg.n_peds,
        cfg.n_frames,
        args.out.display()
    );
    Ok(())
}
