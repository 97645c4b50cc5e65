//! `manifest.json`: what a command read, wrote and was asked to do.
//!
//! Timestamps come from `SOURCE_DATE_EPOCH` when it is set, so reruns can
//! be compared byte for byte.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::CliError;
use crate::io::{sha256_hex, to_json_pretty, write_file};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path, label: impl Into<String>) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(FileHash {
            path: label.into(),
            sha256: sha256_hex(&bytes),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    /// Effective parameters after defaults and flag overrides.
    pub parameters: serde_json::Value,
    pub inputs: Vec<FileHash>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileHash>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Result<Self, CliError> {
        let now = timestamp()?;
        Ok(RunManifest {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            config: None,
            seed: None,
            rng: None,
            parameters: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at: now.clone(),
            finished_at: now,
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs
            .push(FileHash::of(path, path.display().to_string())?);
        Ok(())
    }

    /// Hashes the listed files in `dir`, stamps the finish time and writes
    /// the manifest next to them.
    pub fn finish(mut self, dir: &Path, outputs: &[&str]) -> Result<(), CliError> {
        for name in outputs {
            self.outputs.push(FileHash::of(&dir.join(name), *name)?);
        }
        self.finished_at = timestamp()?;
        write_file(&dir.join(MANIFEST_FILE), to_json_pretty(&self).as_bytes())
    }
}

/// RFC 3339 UTC time, from `SOURCE_DATE_EPOCH` if set.
pub fn timestamp() -> Result<String, CliError> {
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .map_err(|_| CliError::Usage(format!("SOURCE_DATE_EPOCH `{v}` is not an integer")))?,
        Err(_) => SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs() as i64),
    };
    OffsetDateTime::from_unix_timestamp(secs)
        .ok()
        .and_then(|t| t.format(&Rfc3339).ok())
        .ok_or_else(|| CliError::Usage(format!("timestamp {secs} out of range")))
}
