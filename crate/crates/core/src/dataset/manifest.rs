use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BenchmarkInstance, DatasetError};
use crate::taxonomy::PatternCode;

/// Expected number of instances per pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub counts: BTreeMap<PatternCode, usize>,
    pub total: usize,
}

impl Manifest {
    /// Builds a manifest, rejecting a total that is not the sum of the counts.
    pub fn new(counts: BTreeMap<PatternCode, usize>, total: usize) -> Result<Self, DatasetError> {
        let m = Self { counts, total };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<(), DatasetError> {
        let sum: usize = self.counts.values().sum();
        if sum != self.total {
            return Err(DatasetError::ManifestTotal { total: self.total, sum });
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| DatasetError::ManifestSchema(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DatasetError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    /// Per-pattern counts of a dataset; clean instances are not counted.
    pub fn of(instances: &[BenchmarkInstance]) -> Self {
        let mut counts: BTreeMap<PatternCode, usize> = PatternCode::ALL.into_iter().map(|c| (c, 0)).collect();
        for inst in instances {
            if let Some(c) = inst.label.pattern() {
                *counts.entry(c).or_default() += 1;
            }
        }
        let total = counts.values().sum();
        Self { counts, total }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestRow {
    pub pattern: PatternCode,
    pub expected: usize,
    pub actual: usize,
}

impl ManifestRow {
    pub fn delta(&self) -> i64 {
        self.actual as i64 - self.expected as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestReport {
    pub rows: Vec<ManifestRow>,
    pub expected_total: usize,
    pub actual_total: usize,
}

impl ManifestReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.delta() == 0) && self.expected_total == self.actual_total
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &ManifestRow> {
        self.rows.iter().filter(|r| r.delta() != 0)
    }
}

impl fmt::Display for ManifestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return writeln!(f, "manifest matches: {} instances", self.actual_total);
        }
        writeln!(f, "manifest mismatch:")?;
        for r in self.mismatches() {
            writeln!(f, "  {}: expected {}, found {} ({:+})", r.pattern, r.expected, r.actual, r.delta())?;
        }
        writeln!(
            f,
            "  total: expected {}, found {} ({:+})",
            self.expected_total,
            self.actual_total,
            self.actual_total as i64 - self.expected_total as i64
        )
    }
}

/// Compares per-pattern counts of `instances` with `expected`.
pub fn validate_manifest(instances: &[BenchmarkInstance], expected: &Manifest) -> Result<ManifestReport, DatasetError> {
    expected.check()?;
    let actual = Manifest::of(instances);
    let rows = PatternCode::ALL
        .into_iter()
        .map(|p| ManifestRow {
            pattern: p,
            expected: expected.counts.get(&p).copied().unwrap_or(0),
            actual: actual.counts[&p],
        })
        .collect();
    Ok(ManifestReport { rows, expected_total: expected.total, actual_total: actual.total })
}
