//! Versioned JSON reports, written atomically.

use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::config::{ConfigSnapshot, ExperimentConfig};
use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    /// Command arguments after the global flags, enough to re-run with `config.text`.
    pub args: Vec<String>,
    /// `tail`, `speed`, `growth`, `scaling` or a command-specific label.
    pub kind: String,
    pub config: ConfigSnapshot,
    pub result: serde_json::Value,
    /// Wall-clock milliseconds; `None` when timing is switched off.
    pub duration_ms: Option<f64>,
}

impl Report {
    pub fn new<T: Serialize>(
        command: &str,
        args: Vec<String>,
        kind: &str,
        config: &ExperimentConfig,
        result: &T,
        duration: Option<Duration>,
    ) -> Result<Self, HarnessError> {
        Ok(Report {
            schema_version: SCHEMA_VERSION,
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            args,
            kind: kind.to_string(),
            config: config.snapshot(),
            result: serde_json::to_value(result)?,
            duration_ms: duration.map(|d| d.as_secs_f64() * 1e3),
        })
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Serialized report with the timing removed; equal across same-seed runs.
    pub fn payload_bytes(&self) -> Result<Vec<u8>, HarnessError> {
        let mut r = self.clone();
        r.duration_ms = None;
        Ok(serde_json::to_vec(&r)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let r: Report = serde_json::from_str(&text)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Domain(format!(
                "{} has schema version {}, expected {SCHEMA_VERSION}",
                path.display(),
                r.schema_version
            )));
        }
        Ok(r)
    }
}

/// Writes to a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HarnessError::Io(e.error))?;
    Ok(())
}
