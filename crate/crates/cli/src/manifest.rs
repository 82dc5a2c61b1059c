//! Run manifest written next to `track` outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use motpipe::config::{set_tracker_key, tracker_entries};
use motpipe::tracker::TrackerConfig;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SequenceStats {
    pub name: String,
    pub frames: u32,
    pub frames_per_second: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Every tracker setting, keyed by its config file name.
    pub config: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    /// Wall-clock time of the whole command, I/O included.
    pub duration_seconds: f64,
    pub sequences: Vec<SequenceStats>,
    pub warnings: Vec<String>,
}

fn typed(raw: &str) -> Value {
    if let Ok(b) = raw.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(u) = raw.parse::<u64>() {
        return Value::from(u);
    }
    match raw.parse::<f64>() {
        Ok(f) => Value::from(f),
        Err(_) => Value::String(raw.to_string()),
    }
}

pub fn config_snapshot(cfg: &TrackerConfig) -> BTreeMap<String, Value> {
    tracker_entries(cfg)
        .into_iter()
        .map(|(k, v)| (k.to_string(), typed(&v)))
        .collect()
}

/// Rebuilds a tracker config from a snapshot. Keys absent from the snapshot
/// keep their defaults.
pub fn config_from_snapshot(snapshot: &BTreeMap<String, Value>) -> Result<TrackerConfig, String> {
    let mut cfg = TrackerConfig::default();
    for (k, v) in snapshot {
        let raw = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        set_tracker_key(&mut cfg, k, &raw)?;
    }
    Ok(cfg)
}

impl RunManifest {
    /// Writes through a temporary file in the same directory, then renames.
    pub fn write_atomic(&self, path: &Path) -> std::io::Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string_pretty(self)?.as_bytes())?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
