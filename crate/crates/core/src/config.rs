//! Flat `key=value` configuration text for [`TrackerConfig`] and
//! [`SynthConfig`].
//!
//! One setting per line, keys named after the config fields. Blank lines and
//! lines starting with `#` are skipped. Unknown or repeated keys are errors.
//! Unlisted keys keep their defaults.
//!
//! ```
//! use motpipe::config::parse_tracker_config;
//!
//! let cfg = parse_tracker_config("max_age=10\n# comment\nuse_giou = true\n").unwrap();
//! assert_eq!(cfg.max_age, 10);
//! assert!(cfg.assoc.use_giou);
//! ```

use std::collections::HashSet;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::synth::{Layout, Occlusion, SynthConfig};
use crate::tracker::TrackerConfig;

fn value<T: FromStr>(key: &str, raw: &str) -> std::result::Result<T, String> {
    raw.parse()
        .map_err(|_| format!("invalid value `{raw}` for `{key}`"))
}

fn flag(key: &str, raw: &str) -> std::result::Result<bool, String> {
    match raw {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("invalid value `{raw}` for `{key}`; expected true or false")),
    }
}

fn pairs(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(i + 1, format!("expected key=value, got `{line}`")));
        };
        let k = k.trim();
        if !seen.insert(k) {
            return Err(Error::parse(i + 1, format!("key `{k}` set twice")));
        }
        out.push((i + 1, k, v.trim()));
    }
    Ok(out)
}

/// Sets one tracker field by name.
pub fn set_tracker_key(cfg: &mut TrackerConfig, key: &str, raw: &str) -> std::result::Result<(), String> {
    let d = &mut cfg.detpre;
    let a = &mut cfg.assoc;
    let m = &mut cfg.motion;
    match key {
        "base_threshold" => d.base_threshold = value(key, raw)?,
        "softnms_sigma" => d.softnms_sigma = value(key, raw)?,
        "softnms_min_score" => d.softnms_min_score = value(key, raw)?,
        "adaptive_enabled" => d.adaptive_enabled = flag(key, raw)?,
        "adaptive_floor" => d.adaptive_floor = value(key, raw)?,
        "adaptive_ceiling" => d.adaptive_ceiling = value(key, raw)?,
        "adaptive_ema_alpha" => d.adaptive_ema_alpha = value(key, raw)?,
        "max_iou_distance" => a.max_iou_distance = value(key, raw)?,
        "appearance_threshold" => a.appearance_threshold = value(key, raw)?,
        "depth_weight" => a.depth_weight = value(key, raw)?,
        "depth_gate" => a.depth_gate = value(key, raw)?,
        "pose_visibility_min" => a.pose_visibility_min = value(key, raw)?,
        "keypoint_conf_min" => a.keypoint_conf_min = value(key, raw)?,
        "use_giou" => a.use_giou = flag(key, raw)?,
        "std_weight_position" => m.std_weight_position = value(key, raw)?,
        "std_weight_velocity" => m.std_weight_velocity = value(key, raw)?,
        "gate_position_only" => m.gate_position_only = flag(key, raw)?,
        "n_init" => cfg.n_init = value(key, raw)?,
        "max_age" => cfg.max_age = value(key, raw)?,
        "nn_budget" => cfg.nn_budget = value(key, raw)?,
        "output_smoothing" => cfg.output_smoothing = flag(key, raw)?,
        "depth_ema_alpha" => cfg.depth_ema_alpha = value(key, raw)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Every tracker field as `(key, value)`, in a fixed order.
pub fn tracker_entries(cfg: &TrackerConfig) -> Vec<(&'static str, String)> {
    let d = &cfg.detpre;
    let a = &cfg.assoc;
    let m = &cfg.motion;
    let s = |x: &dyn Display| x.to_string();
    vec![
        ("base_threshold", s(&d.base_threshold)),
        ("softnms_sigma", s(&d.softnms_sigma)),
        ("softnms_min_score", s(&d.softnms_min_score)),
        ("adaptive_enabled", s(&d.adaptive_enabled)),
        ("adaptive_floor", s(&d.adaptive_floor)),
        ("adaptive_ceiling", s(&d.adaptive_ceiling)),
        ("adaptive_ema_alpha", s(&d.adaptive_ema_alpha)),
        ("max_iou_distance", s(&a.max_iou_distance)),
        ("appearance_threshold", s(&a.appearance_threshold)),
        ("depth_weight", s(&a.depth_weight)),
        ("depth_gate", s(&a.depth_gate)),
        ("pose_visibility_min", s(&a.pose_visibility_min)),
        ("keypoint_conf_min", s(&a.keypoint_conf_min)),
        ("use_giou", s(&a.use_giou)),
        ("std_weight_position", s(&m.std_weight_position)),
        ("std_weight_velocity", s(&m.std_weight_velocity)),
        ("gate_position_only", s(&m.gate_position_only)),
        ("n_init", s(&cfg.n_init)),
        ("max_age", s(&cfg.max_age)),
        ("nn_budget", s(&cfg.nn_budget)),
        ("output_smoothing", s(&cfg.output_smoothing)),
        ("depth_ema_alpha", s(&cfg.depth_ema_alpha)),
    ]
}

/// Applies `text` on top of `base` without validating the result.
pub fn apply_tracker_config(base: &mut TrackerConfig, text: &str) -> Result<()> {
    for (line, k, v) in pairs(text)? {
        set_tracker_key(base, k, v).map_err(|m| Error::parse(line, m))?;
    }
    Ok(())
}

/// Parses tracker settings over the defaults and validates them.
pub fn parse_tracker_config(text: &str) -> Result<TrackerConfig> {
    let mut cfg = TrackerConfig::default();
    apply_tracker_config(&mut cfg, text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn render(entries: Vec<(&'static str, String)>) -> String {
    entries.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn tracker_config_text(cfg: &TrackerConfig) -> String {
    render(tracker_entries(cfg))
}

/// Parses `ped:start:duration` items separated by `;`.
pub fn parse_occlusions(raw: &str) -> std::result::Result<Vec<Occlusion>, String> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let [ped, start, duration] = parts[..] else {
                return Err(format!("occlusion `{item}` must be ped:start:duration"));
            };
            Ok(Occlusion {
                ped: value("occlusions", ped)?,
                start: value("occlusions", start)?,
                duration: value("occlusions", duration)?,
            })
        })
        .collect()
}

fn occlusions_text(list: &[Occlusion]) -> String {
    list.iter()
        .map(|o| format!("{}:{}:{}", o.ped, o.start, o.duration))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn set_synth_key(cfg: &mut SynthConfig, key: &str, raw: &str) -> std::result::Result<(), String> {
    match key {
        "name" => cfg.name = raw.to_string(),
        "seed" => cfg.seed = value(key, raw)?,
        "n_peds" => cfg.n_peds = value(key, raw)?,
        "n_frames" => cfg.n_frames = value(key, raw)?,
        "im_width" => cfg.im_width = value(key, raw)?,
        "im_height" => cfg.im_height = value(key, raw)?,
        "vel_std" => cfg.vel_std = value(key, raw)?,
        "det_noise_std" => cfg.det_noise_std = value(key, raw)?,
        "miss_rate" => cfg.miss_rate = value(key, raw)?,
        "clutter_rate" => cfg.clutter_rate = value(key, raw)?,
        "embed_dim" => cfg.embed_dim = value(key, raw)?,
        "embed_noise_std" => cfg.embed_noise_std = value(key, raw)?,
        "occlusions" => cfg.occlusions = parse_occlusions(raw)?,
        "depth_lanes" => cfg.depth_lanes = flag(key, raw)?,
        "layout" => {
            cfg.layout = match raw {
                "random" => Layout::Random,
                "crossing" => Layout::Crossing,
                "pairs" => Layout::Pairs,
                _ => return Err(format!("invalid layout `{raw}`; expected random, crossing or pairs")),
            }
        }
        "identical_embeddings" => cfg.identical_embeddings = flag(key, raw)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

pub fn synth_entries(cfg: &SynthConfig) -> Vec<(&'static str, String)> {
    let layout = match cfg.layout {
        Layout::Random => "random",
        Layout::Crossing => "crossing",
        Layout::Pairs => "pairs",
    };
    vec![
        ("name", cfg.name.clone()),
        ("seed", cfg.seed.to_string()),
        ("n_peds", cfg.n_peds.to_string()),
        ("n_frames", cfg.n_frames.to_string()),
        ("im_width", cfg.im_width.to_string()),
        ("im_height", cfg.im_height.to_string()),
        ("vel_std", cfg.vel_std.to_string()),
        ("det_noise_std", cfg.det_noise_std.to_string()),
        ("miss_rate", cfg.miss_rate.to_string()),
        ("clutter_rate", cfg.clutter_rate.to_string()),
        ("embed_dim", cfg.embed_dim.to_string()),
        ("embed_noise_std", cfg.embed_noise_std.to_string()),
        ("occlusions", occlusions_text(&cfg.occlusions)),
        ("depth_lanes", cfg.depth_lanes.to_string()),
        ("layout", layout.to_string()),
        ("identical_embeddings", cfg.identical_embeddings.to_string()),
    ]
}

/// Parses synth settings over the defaults. Value-level errors are reported
/// here; semantic checks happen in [`SynthConfig::validate`].
pub fn parse_synth_config(text: &str) -> Result<SynthConfig> {
    let mut cfg = SynthConfig::default();
    for (line, k, v) in pairs(text)? {
        set_synth_key(&mut cfg, k, v).map_err(|m| Error::parse(line, m))?;
    }
    Ok(cfg)
}

pub fn synth_config_text(cfg: &SynthConfig) -> String {
    render(synth_entries(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tracker_round_trip() {
        let mut cfg = TrackerConfig {
            max_age: 10,
            ..Default::default()
        };
        cfg.assoc.depth_weight = 1.0;
        cfg.motion.std_weight_velocity = 1.0 / 160.0;
        cfg.output_smoothing = false;
        assert_eq!(parse_tracker_config(&tracker_config_text(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn every_tracker_key_is_settable() {
        for (k, v) in tracker_entries(&TrackerConfig::default()) {
            set_tracker_key(&mut TrackerConfig::default(), k, &v).unwrap();
        }
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse_tracker_config("max_age=3\nmax_agee=4\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                message: "unknown key `max_agee`".into()
            }
        );
    }

    #[test]
    fn bad_values() {
        assert!(matches!(parse_tracker_config("n_init=-1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_tracker_config("use_giou=yes"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tracker_config("max_age"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tracker_config("n_init=1\nn_init=2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_tracker_config("base_threshold=1.5"), Err(Error::Config(_))));
    }

    #[test]
    fn occlusion_lists() {
        assert_eq!(
            parse_occlusions("3:50:30; 5:80:20").unwrap(),
            vec![
                Occlusion { ped: 3, start: 50, duration: 30 },
                Occlusion { ped: 5, start: 80, duration: 20 }
            ]
        );
        assert_eq!(parse_occlusions("").unwrap(), vec![]);
        assert!(parse_occlusions("3:50").is_err());
    }

    #[test]
    fn synth_round_trip() {
        let cfg = SynthConfig {
            seed: 42,
            occlusions: parse_occlusions("2:10:5").unwrap(),
            layout: Layout::Crossing,
            identical_embeddings: true,
            ..Default::default()
        };
        assert_eq!(parse_synth_config(&synth_config_text(&cfg)).unwrap(), cfg);
        assert!(parse_synth_config("layout=diagonal").is_err());
    }

    proptest! {
        #[test]
        fn float_settings_survive_text(x in 0.0f64..1.0, y in 1e-6f64..10.0) {
            let mut cfg = TrackerConfig::default();
            cfg.assoc.depth_gate = x;
            cfg.motion.std_weight_position = y;
            let back = parse_tracker_config(&tracker_config_text(&cfg)).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
