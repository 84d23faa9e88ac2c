//! The defect taxonomy: seven patterns, their scenarios, and the closed label set.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::sha256_hex;

pub const BUILTIN_TAXONOMY: &str = include_str!("../data/taxonomy/taxonomy.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternCode {
    Rd,
    Vr,
    Lv,
    Sm,
    Ss,
    Is,
    Pf,
}

impl PatternCode {
    pub const ALL: [PatternCode; 7] = [
        PatternCode::Rd,
        PatternCode::Vr,
        PatternCode::Lv,
        PatternCode::Sm,
        PatternCode::Ss,
        PatternCode::Is,
        PatternCode::Pf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternCode::Rd => "RD",
            PatternCode::Vr => "VR",
            PatternCode::Lv => "LV",
            PatternCode::Sm => "SM",
            PatternCode::Ss => "SS",
            PatternCode::Is => "IS",
            PatternCode::Pf => "PF",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Self::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PatternCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PatternCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PatternCode::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown pattern `{s}`")))
    }
}

/// A ground-truth or predicted label: one pattern or no defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Pattern(PatternCode),
    NoDefect,
}

impl Label {
    pub const ALL: [Label; 8] = [
        Label::Pattern(PatternCode::Rd),
        Label::Pattern(PatternCode::Vr),
        Label::Pattern(PatternCode::Lv),
        Label::Pattern(PatternCode::Sm),
        Label::Pattern(PatternCode::Ss),
        Label::Pattern(PatternCode::Is),
        Label::Pattern(PatternCode::Pf),
        Label::NoDefect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pattern(c) => c.as_str(),
            Label::NoDefect => "NO_DEFECT",
        }
    }

    pub fn pattern(self) -> Option<PatternCode> {
        match self {
            Label::Pattern(c) => Some(c),
            Label::NoDefect => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "NO_DEFECT" {
            return Ok(Label::NoDefect);
        }
        PatternCode::parse(s)
            .filter(|c| c.as_str() == s)
            .map(Label::Pattern)
            .ok_or_else(|| TaxonomyError::UnparsableLabel(s.to_string()))
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub name: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub code: PatternCode,
    pub name: String,
    pub description: String,
    #[serde(rename = "scenario", default)]
    pub scenarios: Vec<ScenarioSpec>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("cannot map `{0}` to a pattern or NO_DEFECT")]
    UnparsableLabel(String),
    #[error("invalid taxonomy file: {0}")]
    Invalid(String),
    #[error("cannot read taxonomy file {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyFile {
    #[allow(dead_code)]
    version: u32,
    pattern: Vec<PatternSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    patterns: Vec<PatternSpec>,
    hash: String,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Taxonomy {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN_TAXONOMY).expect("built-in taxonomy is valid")
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TaxonomyError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::from_toml(&text)
    }

    /// Parses and checks a taxonomy file: every pattern code exactly once, in
    /// canonical order, and scenario ids unique and prefixed by their code.
    pub fn from_toml(text: &str) -> Result<Self, TaxonomyError> {
        let file: TaxonomyFile = toml::from_str(text).map_err(|e| TaxonomyError::Invalid(e.to_string()))?;
        let codes: Vec<_> = file.pattern.iter().map(|p| p.code).collect();
        if codes != PatternCode::ALL {
            return Err(TaxonomyError::Invalid(format!(
                "expected patterns RD, VR, LV, SM, SS, IS, PF in order, found {codes:?}"
            )));
        }
        let mut ids = std::collections::BTreeSet::new();
        for p in &file.pattern {
            for s in &p.scenarios {
                let prefix = format!("{}-", p.code);
                if !s.id.starts_with(&prefix) {
                    return Err(TaxonomyError::Invalid(format!("scenario {} listed under {}", s.id, p.code)));
                }
                if !ids.insert(s.id.clone()) {
                    return Err(TaxonomyError::Invalid(format!("duplicate scenario {}", s.id)));
                }
            }
        }
        Ok(Self { patterns: file.pattern, hash: sha256_hex(text.as_bytes()) })
    }

    /// SHA-256 of the taxonomy source text.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn patterns(&self) -> &[PatternSpec] {
        &self.patterns
    }

    pub fn pattern(&self, code: PatternCode) -> &PatternSpec {
        self.patterns.iter().find(|p| p.code == code).expect("every code is present")
    }

    pub fn lookup(&self, code: &str) -> Result<&PatternSpec, TaxonomyError> {
        PatternCode::parse(code).map(|c| self.pattern(c)).ok_or_else(|| TaxonomyError::UnknownPattern(code.to_string()))
    }

    pub fn scenario(&self, id: &str) -> Option<(&PatternSpec, &ScenarioSpec)> {
        self.patterns.iter().find_map(|p| p.scenarios.iter().find(|s| s.id == id).map(|s| (p, s)))
    }

    pub fn scenario_count(&self) -> usize {
        self.patterns.iter().map(|p| p.scenarios.len()).sum()
    }

    /// Pattern list for prompts; with `include_scenarios` every pattern is
    /// followed by its scenarios.
    pub fn render_knowledge(&self, include_scenarios: bool) -> String {
        let mut out = String::new();
        for p in &self.patterns {
            out.push_str(&pattern_line(p));
            if include_scenarios {
                for s in &p.scenarios {
                    out.push_str(&scenario_line(s));
                }
            }
        }
        out
    }

    /// Only the scenario lines, grouped under their pattern code.
    pub fn render_scenarios(&self) -> String {
        let mut out = String::new();
        for p in &self.patterns {
            if p.scenarios.is_empty() {
                continue;
            }
            out.push_str(&format!("{} ({}):\n", p.code, p.name));
            for s in &p.scenarios {
                out.push_str(&scenario_line(s));
            }
        }
        out
    }

    /// Maps free text onto the closed label set. Accepts pattern codes, full
    /// pattern names, `code: name` combinations, scenario ids and common
    /// no-defect phrasings; anything else, including text naming several
    /// patterns, is rejected.
    pub fn validate_label(&self, s: &str) -> Result<Label, TaxonomyError> {
        let norm = normalize(s);
        if NO_DEFECT_PHRASES.contains(&norm.as_str()) {
            return Ok(Label::NoDefect);
        }
        for p in &self.patterns {
            let code = p.code.as_str().to_ascii_lowercase();
            let name = normalize(&p.name);
            let mut aliases = vec![
                code.clone(),
                name.clone(),
                format!("{code}: {name}"),
                format!("{code} - {name}"),
                format!("{code} {name}"),
                format!("{code} ({name})"),
                format!("{name} ({code})"),
            ];
            if p.code == PatternCode::Sm {
                aliases.push("semantics inconsistent with context".into());
                aliases.push("sm: semantics inconsistent with context".into());
            }
            aliases.extend(p.scenarios.iter().map(|sc| sc.id.to_ascii_lowercase()));
            if aliases.contains(&norm) {
                return Ok(Label::Pattern(p.code));
            }
        }
        Err(TaxonomyError::UnparsableLabel(s.to_string()))
    }
}

const NO_DEFECT_PHRASES: &[&str] = &[
    "no defect",
    "no_defect",
    "no-defect",
    "nodefect",
    "no defects",
    "no defect found",
    "none",
    "no issue",
    "no issues",
];

fn normalize(s: &str) -> String {
    let trimmed = s.trim().trim_matches(|c: char| matches!(c, '`' | '*' | '"' | '\'' | '.' | '[' | ']'));
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn pattern_line(p: &PatternSpec) -> String {
    format!("- {} ({}): {}\n", p.code, p.name, p.description)
}

fn scenario_line(s: &ScenarioSpec) -> String {
    format!("    - {} {}: {}\n", s.id, s.name, s.explanation)
}
