//! Verification reports and run bundles, serialized as pretty JSON with
//! stable key order so identical runs produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;
use crate::analysis::{CheckRecord, FirstOrderConstants, SecondOrderConstants};
use crate::signals::DivergenceClass;
use crate::ModelOrder;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Hash of the canonical (resolved, serialized) configuration, prefixed
/// with the algorithm name.
pub fn config_hash(canonical_config: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_config.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Whether the flocking certificate's integral condition holds for the
/// configured kernel, and hence whether the decay certificate is backed by
/// the theory or only checked empirically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplicabilityNote {
    pub divergence: DivergenceClass,
    pub certificate_applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_order: Option<FirstOrderConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_order: Option<SecondOrderConstants>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub order: ModelOrder,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub applicability: Option<ApplicabilityNote>,
    pub constants: ConstantsBlock,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.status != crate::analysis::CheckStatus::Fail)
    }
}

pub fn write_report(report: &Report, path: &Path) -> Result<(), IoError> {
    let mut text =
        serde_json::to_string_pretty(report).map_err(|e| IoError::Invalid(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Report, IoError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Invalid(e.to_string()))
}

/// What a run leaves on disk: the exact configuration snapshot, where the
/// artifacts live, and non-deterministic metadata kept out of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBundle {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    /// Canonical TOML snapshot of the resolved configuration.
    pub config: String,
    pub trajectory_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_file: Option<String>,
    pub wall_clock_ms: u64,
}

pub fn write_bundle(bundle: &RunBundle, path: &Path) -> Result<(), IoError> {
    let mut text =
        serde_json::to_string_pretty(bundle).map_err(|e| IoError::Invalid(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_bundle(path: &Path) -> Result<RunBundle, IoError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Invalid(e.to_string()))
}
