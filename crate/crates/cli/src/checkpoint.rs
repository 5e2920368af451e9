//! Per-mode progress files so interrupted runs resume at the next day.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use reccoord::decentral::IterationTrace;
use reccoord::planner::{DaySchedule, DayStart};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Hash of the scenario and every setting that affects results.
    pub fingerprint: String,
    pub days: Vec<DaySchedule>,
    pub traces: Vec<IterationTrace>,
    /// States entering the next day to plan.
    pub next_start: DayStart,
}

pub fn path(out: &Path, mode: &str) -> PathBuf {
    out.join("checkpoints").join(format!("{mode}.json"))
}

/// The stored checkpoint, if it exists and matches `fingerprint`.
pub fn load(path: &Path, fingerprint: &str) -> Option<Checkpoint> {
    let bytes = fs::read(path).ok()?;
    match serde_json::from_slice::<Checkpoint>(&bytes) {
        Ok(c) if c.fingerprint == fingerprint => Some(c),
        Ok(_) => {
            log::info!("{}: settings changed, starting over", path.display());
            None
        }
        Err(e) => {
            log::warn!("{}: unreadable checkpoint ({e}), starting over", path.display());
            None
        }
    }
}

pub fn save(path: &Path, c: &Checkpoint) -> anyhow::Result<()> {
    let dir = path.parent().expect("checkpoint path has a parent");
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(c)?).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming {}", tmp.display()))?;
    Ok(())
}
