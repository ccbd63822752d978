//! Report and manifest schemas written by the pipeline.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use antetomo::antedate::BellGroup;
use antetomo::qcore::JsonMatrix;

use crate::{CliError, CliResult};

pub const STATE_REPORT_SCHEMA: &str = "antetomo.state-report.v1";
pub const PROCESS_REPORT_SCHEMA: &str = "antetomo.process-report.v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateReportEntry {
    pub state: String,
    pub bell_group: BellGroup,
    pub rho: JsonMatrix,
    pub fidelity: f64,
    pub fidelity_std: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateReportFile {
    pub schema: String,
    pub entries: Vec<StateReportEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessReportEntry {
    pub bell_group: BellGroup,
    #[serde(rename = "S")]
    pub s: JsonMatrix,
    pub chi: JsonMatrix,
    pub process_fidelity: f64,
    pub fidelity_std: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessReportFile {
    pub schema: String,
    pub entries: Vec<ProcessReportEntry>,
}

/// Record of one pipeline invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Configuration path, when the stage consumed one.
    pub config: Option<String>,
    pub output_dir: String,
    pub seed: u64,
    pub stages: Vec<String>,
    pub outputs: Vec<String>,
    /// Wall-clock time of the run; informational only — outputs depend
    /// solely on inputs, flags, and the seed.
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&Path>, out: &Path, seed: u64) -> Self {
        RunManifest {
            tool: "antetomo".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.map(|p| p.display().to_string()),
            output_dir: out.display().to_string(),
            seed,
            stages: Vec::new(),
            outputs: Vec::new(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Serializes a value as pretty JSON with a trailing newline and writes it
/// under `dir`, creating the directory if needed.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<String> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(name.to_string())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("invalid JSON in {}: {e}", path.display())))
}
