//! Rule-based detectors for the scenarios that can be checked statically.

use serde::{Deserialize, Serialize};

use crate::context::{ContextBundle, DataFlowSlice};
use crate::log_extractor::{Level, LogStatement};
use crate::source_model::lexer::{tokenize, TokenKind};
use crate::source_model::ControlFlowGraph;
use crate::taxonomy::{Label, PatternCode};

pub const PLACEHOLDER_MISMATCH: &str = "D4L001";
pub const COSTLY_STRING_OPS: &str = "D4L002";
pub const HOT_PATH_LOGGING: &str = "D4L003";
pub const SENSITIVE_KEYWORDS: &str = "D4L004";
pub const EXCEPTION_LEVEL: &str = "D4L005";

pub const RULE_IDS: [&str; 5] =
    [PLACEHOLDER_MISMATCH, COSTLY_STRING_OPS, HOT_PATH_LOGGING, SENSITIVE_KEYWORDS, EXCEPTION_LEVEL];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub file: String,
    pub line: u32,
    pub function: String,
    pub pattern: PatternCode,
    pub scenario: String,
    pub rule_id: String,
    pub rationale: String,
    /// Set for findings that flag a suspicious spot rather than a certain defect.
    pub candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesConfig {
    pub sensitive_keywords: Vec<String>,
    /// Rule ids to skip.
    pub disabled: Vec<String>,
}

impl Default for RulesConfig {
    fn default() -> Self {
        Self {
            sensitive_keywords: [
                "password",
                "passwd",
                "pwd",
                "secret",
                "token",
                "credential",
                "apikey",
                "api_key",
                "private_key",
                "jdbc",
            ]
            .map(String::from)
            .to_vec(),
            disabled: Vec::new(),
        }
    }
}

fn finding(stmt: &LogStatement, pattern: PatternCode, scenario: &str, rule_id: &str, rationale: String) -> Finding {
    Finding {
        file: stmt.file.display().to_string(),
        line: stmt.line,
        function: stmt.function_name.clone(),
        pattern,
        scenario: scenario.to_string(),
        rule_id: rule_id.to_string(),
        rationale,
        candidate: false,
    }
}

/// Placeholder count differs from the number of value arguments (a trailing
/// throwable does not count as a value).
pub fn rule_placeholder_mismatch(stmt: &LogStatement) -> Option<Finding> {
    let values = stmt.args.len() - usize::from(stmt.throwable_last);
    let placeholders = stmt.template.placeholder_count;
    if placeholders == values {
        return None;
    }
    let rationale = if values == 0 && stmt.template.uses_concatenation {
        format!("{placeholders} placeholder(s) but no arguments; the concatenated value never fills them")
    } else {
        format!("{placeholders} placeholder(s) but {values} argument(s)")
    };
    Some(finding(stmt, PatternCode::Vr, "VR-2", PLACEHOLDER_MISMATCH, rationale))
}

/// Message built by concatenation at trace/debug level without a level check.
pub fn rule_costly_string_ops(stmt: &LogStatement) -> Option<Finding> {
    if !stmt.template.uses_concatenation || !matches!(stmt.level, Level::Trace | Level::Debug) || stmt.guard.is_some() {
        return None;
    }
    let rationale = format!(
        "{} message is concatenated before the level check; the string is built even when {} is disabled",
        stmt.level, stmt.level
    );
    Some(finding(stmt, PatternCode::Pf, "PF-2", COSTLY_STRING_OPS, rationale))
}

/// Unguarded info-or-higher call on a control-flow cycle.
pub fn rule_hot_path_logging(stmt: &LogStatement, cfg: &ControlFlowGraph) -> Option<Finding> {
    if stmt.level < Level::Info || stmt.guard.is_some() || !cfg.on_cycle(stmt.stmt) {
        return None;
    }
    let rationale = format!("{} call runs on every iteration of an enclosing loop", stmt.level);
    Some(finding(stmt, PatternCode::Pf, "PF-1", HOT_PATH_LOGGING, rationale))
}

/// A sensitive keyword appears in an argument identifier, the message text,
/// or an identifier along the data-flow slices of the arguments.
pub fn rule_sensitive_keywords(stmt: &LogStatement, slices: &[DataFlowSlice], keywords: &[String]) -> Option<Finding> {
    let mut haystack: Vec<(String, &str)> = Vec::new();
    for e in stmt.args.iter().map(String::as_str).chain(stmt.template.concat_exprs()) {
        for id in identifiers(e) {
            haystack.push((id, "argument"));
        }
    }
    haystack.push((stmt.template.literal_text(), "message text"));
    for s in slices {
        for entry in &s.chain {
            for id in identifiers(&entry.text) {
                haystack.push((id, "data-flow slice"));
            }
        }
    }
    for (text, origin) in &haystack {
        let lower = text.to_lowercase();
        if let Some(k) = keywords.iter().find(|k| lower.contains(&k.to_lowercase())) {
            let rationale = format!("{origin} `{text}` matches sensitive keyword `{k}`");
            return Some(finding(stmt, PatternCode::Ss, "SS-1", SENSITIVE_KEYWORDS, rationale));
        }
    }
    None
}

fn identifiers(expr: &str) -> Vec<String> {
    tokenize(expr).iter().filter(|t| t.kind == TokenKind::Ident).map(|t| t.text(expr).to_string()).collect()
}

/// Exception context logged at trace, debug or info. Reported as a
/// candidate: the right level depends on how often the exception occurs.
pub fn rule_exception_level(stmt: &LogStatement) -> Option<Finding> {
    if !matches!(stmt.level, Level::Trace | Level::Debug | Level::Info) {
        return None;
    }
    let rationale = if stmt.throwable_last {
        format!("exception `{}` logged at {}", stmt.args.last().unwrap(), stmt.level)
    } else if let Some(p) = &stmt.catch_param {
        format!("{} call inside the handler for `{p}`", stmt.level)
    } else {
        return None;
    };
    let mut f = finding(stmt, PatternCode::Lv, "LV-1", EXCEPTION_LEVEL, rationale);
    f.candidate = true;
    Some(f)
}

/// Applies every enabled rule; findings are ordered by rule id.
pub fn run_rules(
    stmt: &LogStatement,
    bundle: &ContextBundle,
    cfg: &ControlFlowGraph,
    config: &RulesConfig,
) -> Vec<Finding> {
    let enabled = |id: &str| !config.disabled.iter().any(|d| d == id);
    let slices = bundle.slices.as_deref().unwrap_or(&[]);
    let mut out = Vec::new();
    let candidates = [
        (PLACEHOLDER_MISMATCH, rule_placeholder_mismatch(stmt)),
        (COSTLY_STRING_OPS, rule_costly_string_ops(stmt)),
        (HOT_PATH_LOGGING, rule_hot_path_logging(stmt, cfg)),
        (SENSITIVE_KEYWORDS, rule_sensitive_keywords(stmt, slices, &config.sensitive_keywords)),
        (EXCEPTION_LEVEL, rule_exception_level(stmt)),
    ];
    for (id, f) in candidates {
        if enabled(id) {
            out.extend(f);
        }
    }
    out
}

/// Single label for a set of findings: VR, then PF, then SS, then LV.
pub fn rules_label(findings: &[Finding]) -> Label {
    [PatternCode::Vr, PatternCode::Pf, PatternCode::Ss, PatternCode::Lv]
        .into_iter()
        .find(|p| findings.iter().any(|f| f.pattern == *p))
        .map_or(Label::NoDefect, Label::Pattern)
}
