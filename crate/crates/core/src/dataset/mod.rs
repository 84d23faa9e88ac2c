//! Benchmark instances, manifests and the commit-history miner.

mod manifest;
mod mining;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{validate_manifest, Manifest, ManifestReport, ManifestRow};
pub use mining::{mine_commits, CommitCandidate, MineError, MiningConfig, TouchedLine};

use crate::context::ContextBundle;
use crate::taxonomy::{Label, Taxonomy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Provenance {
    Commit(String),
    Issue(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Commit(h) => write!(f, "commit {h}"),
            Provenance::Issue(k) => write!(f, "issue {k}"),
        }
    }
}

/// One labelled logging statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkInstance {
    pub id: String,
    pub project: String,
    pub provenance: Provenance,
    pub file_path: String,
    pub function_source: String,
    /// 1-based line within `function_source`.
    pub log_line: u32,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub developer_explanation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ContextBundle>,
}

impl BenchmarkInstance {
    /// Text of the target line, trimmed.
    pub fn log_line_text(&self) -> &str {
        self.function_source.lines().nth(self.log_line as usize - 1).map(str::trim).unwrap_or("")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("manifest total {total} does not equal the sum of its counts ({sum})")]
    ManifestTotal { total: usize, sum: usize },
    #[error("invalid manifest: {0}")]
    ManifestSchema(String),
}

pub fn load_dataset(path: &Path, taxonomy: &Taxonomy) -> Result<Vec<BenchmarkInstance>, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_dataset(&text, taxonomy)
}

/// Parses line-delimited records; blank lines are skipped.
pub fn parse_dataset(text: &str, taxonomy: &Taxonomy) -> Result<Vec<BenchmarkInstance>, DatasetError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let inst: BenchmarkInstance =
            serde_json::from_str(raw).map_err(|e| DatasetError::SchemaError { line, reason: e.to_string() })?;
        check_instance(&inst, taxonomy).map_err(|reason| DatasetError::SchemaError { line, reason })?;
        if !ids.insert(inst.id.clone()) {
            return Err(DatasetError::DuplicateId { line, id: inst.id });
        }
        out.push(inst);
    }
    Ok(out)
}

fn check_instance(inst: &BenchmarkInstance, taxonomy: &Taxonomy) -> Result<(), String> {
    if inst.id.trim().is_empty() {
        return Err("empty id".into());
    }
    match (inst.label, &inst.scenario) {
        (Label::NoDefect, Some(s)) => return Err(format!("NO_DEFECT instance carries scenario {s}")),
        (Label::NoDefect, None) => {}
        (Label::Pattern(_), None) => return Err("defect instance without scenario".into()),
        (Label::Pattern(code), Some(s)) => match taxonomy.scenario(s) {
            None => return Err(format!("unknown scenario {s}")),
            Some((p, _)) if p.code != code => return Err(format!("scenario {s} does not belong to pattern {code}")),
            Some(_) => {}
        },
    }
    let lines = inst.function_source.lines().count();
    if inst.log_line == 0 || inst.log_line as usize > lines {
        return Err(format!("log_line {} outside function_source ({lines} lines)", inst.log_line));
    }
    Ok(())
}

/// One record per line, keys in declaration order.
pub fn write_dataset(instances: &[BenchmarkInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst).expect("instances serialize"));
        out.push('\n');
    }
    out
}
