//! Experiment configuration file schema.
//!
//! ```json
//! {
//!   "source": "ideal" | "paper_rho_mle" | { "matrix": [[[re, im], ...], ...] },
//!   "analyzer": { "visibility": 0.89 },
//!   "prepared_states": ["H", "V", "D", "A", "R", "L"],
//!   "trials_per_setting": 100000,
//!   "seed": 42
//! }
//! ```
//!
//! `"paper_rho_mle"` selects the built-in reference source matrix (see
//! `antetomo::fixtures`); an inline matrix must be a valid two-qubit state.

use std::path::Path;

use serde::{Deserialize, Serialize};

use antetomo::qcore::{DensityMatrix, JsonMatrix, StateLabel};
use antetomo::simproto::{BellAnalyzerModel, ExperimentConfig, SourceModel};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    Named(String),
    Inline { matrix: JsonMatrix },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzerSpec {
    pub visibility: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub source: SourceSpec,
    pub analyzer: AnalyzerSpec,
    pub prepared_states: Vec<String>,
    pub trials_per_setting: u64,
    pub seed: u64,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_experiment(&self, seed_override: Option<u64>) -> CliResult<ExperimentConfig> {
        let source = match &self.source {
            SourceSpec::Named(name) => match name.as_str() {
                "ideal" => SourceModel::ideal(),
                "paper_rho_mle" => SourceModel::reference_mle(),
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown source {other:?} (expected \"ideal\", \"paper_rho_mle\", or an inline matrix)"
                    )))
                }
            },
            SourceSpec::Inline { matrix } => {
                let rho = DensityMatrix::new(matrix.0.clone())
                    .map_err(|e| CliError::Validation(format!("inline source matrix: {e}")))?;
                SourceModel::from_density(rho)?
            }
        };
        let analyzer = BellAnalyzerModel::new(self.analyzer.visibility)?;
        let mut prepared_states = Vec::with_capacity(self.prepared_states.len());
        for s in &self.prepared_states {
            prepared_states.push(StateLabel::parse(s)?);
        }
        let config = ExperimentConfig {
            source,
            analyzer,
            prepared_states,
            trials_per_setting: self.trials_per_setting,
            seed: seed_override.unwrap_or(self.seed),
        };
        config.validate()?;
        Ok(config)
    }
}
