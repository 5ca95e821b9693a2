//! Multi-session manifests:
//!
//! ```toml
//! [[session]]
//! path = "s01.eegt"
//! session = 1
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Every
//! trial of a file is assigned that entry's session id.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{read_trials, TrialSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub session: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    session: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    path: PathBuf,
    session: u32,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let parsed: ManifestFile = toml::from_str(&text)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    if parsed.session.is_empty() {
        return Err(Error::format(format!("{}: no sessions listed", path.display())));
    }
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for e in parsed.session {
        if seen.contains(&e.session) {
            return Err(Error::format(format!(
                "{}: session {} listed twice",
                path.display(),
                e.session
            )));
        }
        seen.push(e.session);
        out.push(ManifestEntry {
            path: if e.path.is_absolute() { e.path } else { base.join(e.path) },
            session: e.session,
        });
    }
    Ok(out)
}

/// Read every file of a manifest into one set.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<TrialSet> {
    let sets = read_manifest(path)?
        .into_iter()
        .map(|e| {
            let mut set = read_trials(&e.path)?;
            set.set_sessions(e.session);
            Ok(set)
        })
        .collect::<Result<Vec<_>>>()?;
    TrialSet::concat(sets)
}
