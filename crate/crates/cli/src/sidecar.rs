//! JSON run record written next to every output file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    /// Standard-normal draws consumed by the operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns_residual: Option<f64>,
    /// Overall `verify` verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub schema_version: u32,
    pub generator: String,
    /// The fully resolved configuration; replaying it reproduces `outputs`.
    pub config: RunConfig,
    pub outputs: Vec<PathBuf>,
    pub run: RunRecord,
}

impl Sidecar {
    pub fn new(config: RunConfig, outputs: Vec<PathBuf>, run: RunRecord) -> Sidecar {
        Sidecar {
            schema_version: SCHEMA_VERSION,
            generator: concat!("specaug ", env!("CARGO_PKG_VERSION")).to_string(),
            config,
            outputs,
            run,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("sidecar fields serialize");
        text.push('\n');
        text
    }

    pub fn load(path: &Path) -> Result<Sidecar, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let sidecar: Sidecar =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if sidecar.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "{}: schema_version {} is not supported",
                path.display(),
                sidecar.schema_version
            )));
        }
        Ok(sidecar)
    }
}

/// `out.csv` → `out.sidecar.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("sidecar.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_convention() {
        assert_eq!(sidecar_path(Path::new("a/b.csv")), PathBuf::from("a/b.sidecar.json"));
        assert_eq!(sidecar_path(Path::new("report")), PathBuf::from("report.sidecar.json"));
    }

    #[test]
    fn json_round_trip() {
        let s = Sidecar::new(
            RunConfig::default_versioned(),
            vec!["x.csv".into()],
            RunRecord {
                seed: 3,
                draws: Some(16),
                conservation_residual: Some(1.25e-16),
                ..RunRecord::default()
            },
        );
        let back: Sidecar = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
