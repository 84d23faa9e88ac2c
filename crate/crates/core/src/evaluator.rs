//! Accuracy, macro average, reasoning quadrants and report rendering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BenchmarkInstance;
use crate::prompt::PromptSettings;
use crate::taxonomy::Label;

/// Setting name used for predictions made by the static rules.
pub const RULES_BASELINE: &str = "rules-baseline";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no prediction for instance `{0}`")]
    MissingPrediction(String),
    #[error("more than one prediction for instance `{0}`")]
    DuplicatePrediction(String),
    #[error("prediction for unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("no reasoning judgment for instance `{0}`")]
    MissingJudgment(String),
    #[error("more than one judgment for instance `{0}`")]
    DuplicateJudgment(String),
    #[error("cannot average an empty set of accuracies")]
    EmptyInput,
    #[error("{path}: line {line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance_id: String,
    /// `None` when the model reply could not be obtained or parsed; such
    /// records count as incorrect.
    pub predicted: Option<Label>,
    pub explanation: String,
    /// Prompt setting name (`CoT+K`) or [`RULES_BASELINE`].
    pub settings: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReasonJudgment {
    pub instance_id: String,
    pub reason_correct: bool,
    pub judge: String,
    #[serde(default)]
    pub note: String,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, EvalError> {
    read_jsonl(path)
}

pub fn load_judgments(path: &Path) -> Result<Vec<ReasonJudgment>, EvalError> {
    read_jsonl(path)
}

/// One JSON object per line, in the given order.
pub fn predictions_jsonl(preds: &[PredictionRecord]) -> String {
    preds.iter().map(|p| serde_json::to_string(p).unwrap() + "\n").collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Score clean instances as their own bucket. When off they are ignored.
    pub include_no_defect: bool,
    pub parallelism: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { include_no_defect: true, parallelism: 4 }
    }
}

/// Pairs every instance in scope with its single prediction.
fn pair<'a>(
    preds: &'a [PredictionRecord],
    truth: &'a [BenchmarkInstance],
    include_no_defect: bool,
) -> Result<Vec<(&'a BenchmarkInstance, &'a PredictionRecord)>, EvalError> {
    let ids: BTreeSet<&str> = truth.iter().map(|t| t.id.as_str()).collect();
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::new();
    for p in preds {
        if !ids.contains(p.instance_id.as_str()) {
            return Err(EvalError::UnknownInstance(p.instance_id.clone()));
        }
        if by_id.insert(&p.instance_id, p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.instance_id.clone()));
        }
    }
    truth
        .iter()
        .filter(|t| include_no_defect || t.label != Label::NoDefect)
        .map(|t| by_id.get(t.id.as_str()).map(|p| (t, *p)).ok_or_else(|| EvalError::MissingPrediction(t.id.clone())))
        .collect()
}

/// Percentage of correctly labelled instances per ground-truth label.
/// Labels without instances are absent.
pub fn per_pattern_accuracy(
    preds: &[PredictionRecord],
    truth: &[BenchmarkInstance],
    include_no_defect: bool,
) -> Result<BTreeMap<Label, f64>, EvalError> {
    let mut counts: BTreeMap<Label, (usize, usize)> = BTreeMap::new();
    for (t, p) in pair(preds, truth, include_no_defect)? {
        let c = counts.entry(t.label).or_default();
        c.1 += 1;
        if p.predicted == Some(t.label) {
            c.0 += 1;
        }
    }
    Ok(counts.into_iter().map(|(l, (ok, n))| (l, 100.0 * ok as f64 / n as f64)).collect())
}

/// Unweighted mean of the given accuracies.
pub fn macro_average<K>(per_pattern: &BTreeMap<K, f64>) -> Result<f64, EvalError> {
    if per_pattern.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(per_pattern.values().sum::<f64>() / per_pattern.len() as f64)
}

/// Half-up rounding to one decimal.
pub fn round1(x: f64) -> f64 {
    (x * 10.0 + 0.5 + 1e-9).floor() / 10.0
}

pub fn fmt1(x: f64) -> String {
    format!("{:.1}", round1(x))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct QuadrantCells {
    pub pcrc: f64,
    pub pcri: f64,
    pub pirc: f64,
    pub piri: f64,
}

impl QuadrantCells {
    pub fn sum(&self) -> f64 {
        self.pcrc + self.pcri + self.pirc + self.piri
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadrantTable {
    pub rows: BTreeMap<Label, QuadrantCells>,
    /// Unweighted mean of each cell over the rows.
    pub average: QuadrantCells,
}

/// Crosses label correctness with the judged reasoning correctness.
pub fn quadrant_table(
    preds: &[PredictionRecord],
    truth: &[BenchmarkInstance],
    judgments: &[ReasonJudgment],
    include_no_defect: bool,
) -> Result<QuadrantTable, EvalError> {
    let mut judged: HashMap<&str, bool> = HashMap::new();
    for j in judgments {
        if judged.insert(&j.instance_id, j.reason_correct).is_some() {
            return Err(EvalError::DuplicateJudgment(j.instance_id.clone()));
        }
    }
    let mut counts: BTreeMap<Label, [usize; 4]> = BTreeMap::new();
    for (t, p) in pair(preds, truth, include_no_defect)? {
        let reason = *judged.get(t.id.as_str()).ok_or_else(|| EvalError::MissingJudgment(t.id.clone()))?;
        let cell = match (p.predicted == Some(t.label), reason) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        counts.entry(t.label).or_default()[cell] += 1;
    }
    let rows: BTreeMap<Label, QuadrantCells> = counts
        .into_iter()
        .map(|(l, c)| {
            let n = c.iter().sum::<usize>() as f64;
            let pct = |k: usize| 100.0 * c[k] as f64 / n;
            (l, QuadrantCells { pcrc: pct(0), pcri: pct(1), pirc: pct(2), piri: pct(3) })
        })
        .collect();
    let n = rows.len().max(1) as f64;
    let average = QuadrantCells {
        pcrc: rows.values().map(|r| r.pcrc).sum::<f64>() / n,
        pcri: rows.values().map(|r| r.pcri).sum::<f64>() / n,
        pirc: rows.values().map(|r| r.pirc).sum::<f64>() / n,
        piri: rows.values().map(|r| r.piri).sum::<f64>() / n,
    };
    Ok(QuadrantTable { rows, average })
}

/// Accuracies of one setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingResult {
    pub setting: String,
    pub accuracies: BTreeMap<Label, f64>,
    pub average: f64,
}

impl SettingResult {
    pub fn compute(
        setting: impl Into<String>,
        preds: &[PredictionRecord],
        truth: &[BenchmarkInstance],
        include_no_defect: bool,
    ) -> Result<Self, EvalError> {
        let accuracies = per_pattern_accuracy(preds, truth, include_no_defect)?;
        let average = macro_average(&accuracies)?;
        Ok(Self { setting: setting.into(), accuracies, average })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            _ => Err(format!("unknown format `{s}` (markdown, csv)")),
        }
    }
}

fn setting_rank(name: &str) -> (usize, String) {
    match name.parse::<PromptSettings>() {
        Ok(s) => (s.order(), String::new()),
        Err(_) => (usize::MAX, name.to_string()),
    }
}

/// Difference of the rounded averages against the row without +K/+I in the
/// same prompting strategy, when both rows are present.
fn delta(row: &SettingResult, rows: &[&SettingResult]) -> Option<f64> {
    let s: PromptSettings = row.setting.parse().ok()?;
    let base = PromptSettings::new(s.strategy, false, false);
    if s == base {
        return None;
    }
    let b = rows.iter().find(|r| r.setting.parse::<PromptSettings>().ok() == Some(base))?;
    Some(round1(row.average) - round1(b.average))
}

fn fmt_delta(d: Option<f64>) -> String {
    match d {
        Some(d) => {
            let r = (d * 10.0).round() / 10.0;
            format!("({}{:.1})", if r < 0.0 { "-" } else { "+" }, r.abs())
        }
        None => String::new(),
    }
}

/// Renders one row per setting (prompt settings in their fixed order,
/// other rows after them by name) with one column per label present in any
/// row plus the average and its delta. `header` lines are emitted first as
/// `# key: value`.
pub fn render_report(results: &[SettingResult], header: &[(String, String)], format: ReportFormat) -> String {
    let mut rows: Vec<&SettingResult> = results.iter().collect();
    rows.sort_by_key(|r| setting_rank(&r.setting));
    let labels: Vec<Label> =
        Label::ALL.into_iter().filter(|l| rows.iter().any(|r| r.accuracies.contains_key(l))).collect();
    let col = |l: Label| if l == Label::NoDefect { "ND" } else { l.as_str() };
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let cells = |r: &SettingResult| -> Vec<String> {
        let mut c = vec![r.setting.clone()];
        c.extend(labels.iter().map(|l| r.accuracies.get(l).map(|a| fmt1(*a)).unwrap_or_else(|| "-".into())));
        c.push(fmt1(r.average));
        c.push(fmt_delta(delta(r, &rows)));
        c
    };
    let mut head = vec!["Setting".to_string()];
    head.extend(labels.iter().map(|l| col(*l).to_string()));
    head.push("Average".into());
    head.push("Delta".into());
    match format {
        ReportFormat::Markdown => {
            let _ = writeln!(out, "| {} |", head.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
            for r in &rows {
                let _ = writeln!(out, "| {} |", cells(r).join(" | "));
            }
        }
        ReportFormat::Csv => {
            let _ = writeln!(out, "{}", head.join(","));
            for r in &rows {
                let _ = writeln!(out, "{}", cells(r).join(","));
            }
        }
    }
    out
}

/// Markdown table of quadrant percentages.
pub fn render_quadrants(table: &QuadrantTable) -> String {
    let mut out = String::from("| Pattern | PCRC | PCRI | PIRC | PIRI |\n|---|---|---|---|---|\n");
    let mut row = |name: &str, c: &QuadrantCells| {
        let _ = writeln!(out, "| {name} | {} | {} | {} | {} |", fmt1(c.pcrc), fmt1(c.pcri), fmt1(c.pirc), fmt1(c.piri));
    };
    for (l, c) in &table.rows {
        row(l.as_str(), c);
    }
    row("Average", &table.average);
    out
}
