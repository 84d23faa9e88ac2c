//! Source discovery, parsing and the lint pipeline shared by the CLI and benches.

use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use thiserror::Error;
use walkdir::WalkDir;

use crate::context::{ContextBuilder, ContextBundle, ContextConfig};
use crate::dataset::BenchmarkInstance;
use crate::log_extractor::{LogExtractor, LogStatement};
use crate::parallel::{par_map, seq_map};
use crate::rules::{run_rules, Finding, RulesConfig};
use crate::source_model::{build_cfg, parse_bytes, parse_compilation_unit, ParseError, SourceUnit};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("source root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("invalid exclude glob `{glob}`: {reason}")]
    Glob { glob: String, reason: String },
    #[error("cannot read {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("instance {id}: function source not found in {file}")]
    SourceNotFound { id: String, file: String },
    #[error("instance {id}: no logging call on line {line}")]
    NoLoggingCall { id: String, line: u32 },
}

fn glob_set(patterns: &[String]) -> Result<GlobSet, AnalysisError> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let g = Glob::new(p).map_err(|e| AnalysisError::Glob { glob: p.clone(), reason: e.to_string() })?;
        b.add(g);
    }
    b.build().map_err(|e| AnalysisError::Glob { glob: patterns.join(","), reason: e.to_string() })
}

/// `.java` files under `root`, relative to it, sorted, minus excluded globs.
pub fn discover_sources(root: &Path, exclude: &[String]) -> Result<Vec<PathBuf>, AnalysisError> {
    if !root.is_dir() {
        return Err(AnalysisError::MissingRoot(root.to_path_buf()));
    }
    let excluded = glob_set(exclude)?;
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| AnalysisError::Io { path: root.to_path_buf(), reason: e.to_string() })?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|x| x != "java") {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path()).to_path_buf();
        if !excluded.is_match(&rel) {
            out.push(rel);
        }
    }
    out.sort();
    Ok(out)
}

/// Parses every file; units carry the relative path. Failures are returned
/// alongside the successfully parsed units.
pub fn parse_sources(root: &Path, files: &[PathBuf]) -> (Vec<SourceUnit>, Vec<AnalysisError>) {
    let results = par_map(files, |rel| {
        let bytes = std::fs::read(root.join(rel))
            .map_err(|e| AnalysisError::Io { path: rel.clone(), reason: e.to_string() })?;
        parse_bytes(&bytes, rel).map_err(AnalysisError::from)
    });
    let mut units = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(u) => units.push(u),
            Err(e) => errors.push(e),
        }
    }
    (units, errors)
}

/// Findings for every logging statement in `units`, sorted by file, line
/// and rule id.
pub fn lint_units(
    units: &[SourceUnit],
    extractor: &LogExtractor,
    context: &ContextConfig,
    rules: &RulesConfig,
    parallel: bool,
) -> Vec<Finding> {
    let builder = ContextBuilder::new(units);
    let idx: Vec<usize> = (0..units.len()).collect();
    let per_unit = |&u: &usize| lint_unit(&builder, u, extractor, context, rules);
    let nested = if parallel { par_map(&idx, per_unit) } else { seq_map(&idx, per_unit) };
    let mut out: Vec<Finding> = nested.into_iter().flatten().collect();
    out.sort_by(|a, b| (&a.file, a.line, &a.rule_id).cmp(&(&b.file, b.line, &b.rule_id)));
    out
}

fn lint_unit(
    builder: &ContextBuilder<'_>,
    u: usize,
    extractor: &LogExtractor,
    context: &ContextConfig,
    rules: &RulesConfig,
) -> Vec<Finding> {
    let unit = &builder.units()[u];
    let mut out = Vec::new();
    let mut cfgs = std::collections::HashMap::new();
    for stmt in extractor.extract_unit(unit) {
        let cfg = cfgs.entry(stmt.function).or_insert_with(|| build_cfg(&unit.functions[stmt.function]));
        let bundle = builder.bundle(u, &stmt, context);
        out.extend(run_rules(&stmt, &bundle, cfg, rules));
    }
    out
}

/// Wraps an instance's function in a synthetic class so it can be analyzed
/// without the original file.
pub fn snippet_unit(instance: &BenchmarkInstance) -> Result<SourceUnit, ParseError> {
    let text = format!("class D4LSnippet {{\n{}\n}}\n", instance.function_source.trim_end());
    parse_compilation_unit(&text, Path::new(&instance.file_path))
}

/// Finds the unit and logging statement an instance points at.
pub fn locate_instance(
    units: &[SourceUnit],
    extractor: &LogExtractor,
    instance: &BenchmarkInstance,
) -> Result<(usize, LogStatement), AnalysisError> {
    let not_found = || AnalysisError::SourceNotFound { id: instance.id.clone(), file: instance.file_path.clone() };
    let needle = instance.function_source.trim_end_matches(['\n', '\r']);
    let want = Path::new(&instance.file_path);
    let (u, offset) = units
        .iter()
        .enumerate()
        .filter(|(_, unit)| unit.path == want || unit.path.ends_with(want))
        .find_map(|(i, unit)| unit.raw_text.find(needle).map(|o| (i, o)))
        .ok_or_else(not_found)?;
    let unit = &units[u];
    let first_line = unit.raw_text[..offset].matches('\n').count() as u32 + 1;
    let target = first_line + instance.log_line - 1;
    if !unit.line(target).is_some_and(|l| extractor.line_has_logging_call(l)) {
        return Err(AnalysisError::NoLoggingCall { id: instance.id.clone(), line: instance.log_line });
    }
    extractor
        .extract_unit(unit)
        .into_iter()
        .find(|s| (s.line..=s.end_line).contains(&target))
        .map(|s| (u, s))
        .ok_or(AnalysisError::NoLoggingCall { id: instance.id.clone(), line: instance.log_line })
}

/// Context bundle, statement and rule findings for one instance.
#[derive(Debug, Clone)]
pub struct InstanceAnalysis {
    pub unit: usize,
    pub statement: LogStatement,
    pub bundle: ContextBundle,
    pub findings: Vec<Finding>,
}

pub fn analyze_instance(
    builder: &ContextBuilder<'_>,
    extractor: &LogExtractor,
    instance: &BenchmarkInstance,
    context: &ContextConfig,
    rules: &RulesConfig,
) -> Result<InstanceAnalysis, AnalysisError> {
    let (u, statement) = locate_instance(builder.units(), extractor, instance)?;
    let mut bundle = builder.bundle(u, &statement, context);
    bundle.direct = instance.function_source.clone();
    let cfg = build_cfg(&builder.units()[u].functions[statement.function]);
    let findings = run_rules(&statement, &bundle, &cfg, rules);
    Ok(InstanceAnalysis { unit: u, statement, bundle, findings })
}
