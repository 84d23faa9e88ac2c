//! Prompt assembly for the eight settings and parsing of model replies.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{ContextBundle, DataFlowSlice, FlowPaths};
use crate::dataset::BenchmarkInstance;
use crate::sha256_hex;
use crate::taxonomy::{Label, PatternCode, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Direct,
    Cot,
}

/// Serialized as its display name, e.g. `CoT+K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PromptSettings {
    pub strategy: Strategy,
    pub with_knowledge: bool,
    pub with_interprocedural: bool,
}

impl PromptSettings {
    /// All settings in report order.
    pub const ALL: [PromptSettings; 8] = [
        Self::new(Strategy::Direct, false, false),
        Self::new(Strategy::Direct, true, false),
        Self::new(Strategy::Direct, false, true),
        Self::new(Strategy::Direct, true, true),
        Self::new(Strategy::Cot, false, false),
        Self::new(Strategy::Cot, true, false),
        Self::new(Strategy::Cot, false, true),
        Self::new(Strategy::Cot, true, true),
    ];

    pub const fn new(strategy: Strategy, with_knowledge: bool, with_interprocedural: bool) -> Self {
        Self { strategy, with_knowledge, with_interprocedural }
    }

    /// Position in [`PromptSettings::ALL`].
    pub fn order(&self) -> usize {
        Self::ALL.iter().position(|s| s == self).unwrap()
    }
}

impl fmt::Display for PromptSettings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.strategy {
            Strategy::Direct => "Direct",
            Strategy::Cot => "CoT",
        })?;
        if self.with_knowledge {
            f.write_str("+K")?;
        }
        if self.with_interprocedural {
            f.write_str("+I")?;
        }
        Ok(())
    }
}

impl FromStr for PromptSettings {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Self::ALL
            .into_iter()
            .find(|x| x.to_string().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown setting `{s}` (expected e.g. Direct, CoT+K, Direct+K+I)"))
    }
}

impl Serialize for PromptSettings {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PromptSettings {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    pub instance_id: String,
    pub settings: PromptSettings,
    pub system_text: String,
    pub user_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub explanation: String,
    pub raw: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("instance {0}: +I requested but the context bundle has no flows or slices")]
    MissingContext(String),
    #[error("no label found in response")]
    UnparsableResponse,
    #[error("cannot read template {path}: {reason}")]
    Template { path: String, reason: String },
}

const TEMPLATE_NAMES: [&str; 9] =
    ["system", "task", "taxonomy", "knowledge", "code", "interprocedural", "target", "cot", "answer"];

/// Prompt section templates with `{{name}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    texts: Vec<(String, String)>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptTemplates {
    pub fn builtin() -> Self {
        let files = [
            include_str!("../data/prompts/system.txt"),
            include_str!("../data/prompts/task.txt"),
            include_str!("../data/prompts/taxonomy.txt"),
            include_str!("../data/prompts/knowledge.txt"),
            include_str!("../data/prompts/code.txt"),
            include_str!("../data/prompts/interprocedural.txt"),
            include_str!("../data/prompts/target.txt"),
            include_str!("../data/prompts/cot.txt"),
            include_str!("../data/prompts/answer.txt"),
        ];
        Self { texts: TEMPLATE_NAMES.iter().zip(files).map(|(n, t)| (n.to_string(), t.to_string())).collect() }
    }

    /// Reads `<name>.txt` for every section from `dir`.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let mut texts = Vec::new();
        for name in TEMPLATE_NAMES {
            let path: PathBuf = dir.join(format!("{name}.txt"));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| PromptError::Template { path: path.display().to_string(), reason: e.to_string() })?;
            texts.push((name.to_string(), text));
        }
        Ok(Self { texts })
    }

    fn get(&self, name: &str) -> &str {
        &self.texts.iter().find(|(n, _)| n == name).expect("known template").1
    }

    /// SHA-256 over all section names and texts in fixed order.
    pub fn hash(&self) -> String {
        let mut all = String::new();
        for (n, t) in &self.texts {
            all.push_str(n);
            all.push('\n');
            all.push_str(t);
            all.push('\0');
        }
        sha256_hex(all.as_bytes())
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.trim_end().to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    /// Directory with replacement templates; the built-in set is used when unset.
    pub template_dir: Option<PathBuf>,
    /// Upper bound on user prompt length in characters.
    pub max_chars: usize,
    pub marker: String,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self { template_dir: None, max_chars: 60_000, marker: "ANSWER:".into() }
    }
}

pub struct PromptEngine {
    templates: PromptTemplates,
    taxonomy: Taxonomy,
    max_chars: usize,
    marker: String,
}

impl PromptEngine {
    pub fn new(templates: PromptTemplates, taxonomy: Taxonomy, config: &PromptConfig) -> Self {
        Self { templates, taxonomy, max_chars: config.max_chars, marker: config.marker.clone() }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn templates(&self) -> &PromptTemplates {
        &self.templates
    }

    /// Assembles the prompt: task, taxonomy, scenarios (+K), code, flows and
    /// slices (+I), target line, reasoning instruction (CoT), answer format.
    /// Over the length cap, +I material is dropped in the order forward
    /// paths, backward paths, callee bodies, slices.
    pub fn build_prompt(
        &self,
        instance: &BenchmarkInstance,
        bundle: &ContextBundle,
        settings: PromptSettings,
    ) -> Result<Prompt, PromptError> {
        let inter = if settings.with_interprocedural {
            let (Some(flows), Some(slices)) = (&bundle.flows, &bundle.slices) else {
                return Err(PromptError::MissingContext(instance.id.clone()));
            };
            Some(InterParts {
                backward: flows.backward.clone(),
                forward: flows.forward.clone(),
                slices: slices.clone(),
                callees: bundle.callee_expansions.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            })
        } else {
            None
        };
        let mut user = self.render_user(instance, bundle, settings, inter.as_ref());
        if let Some(mut parts) = inter {
            while user.chars().count() > self.max_chars && parts.shrink() {
                user = self.render_user(instance, bundle, settings, Some(&parts));
            }
        }
        Ok(Prompt {
            instance_id: instance.id.clone(),
            settings,
            system_text: self.templates.get("system").trim_end().to_string(),
            user_text: user,
        })
    }

    fn render_user(
        &self,
        instance: &BenchmarkInstance,
        bundle: &ContextBundle,
        settings: PromptSettings,
        inter: Option<&InterParts>,
    ) -> String {
        let t = &self.templates;
        let mut sections = vec![
            fill(t.get("task"), &[]),
            fill(t.get("taxonomy"), &[("patterns", self.taxonomy.render_knowledge(false).trim_end())]),
        ];
        if settings.with_knowledge {
            sections.push(fill(t.get("knowledge"), &[("scenarios", self.taxonomy.render_scenarios().trim_end())]));
        }
        let source = if bundle.direct.is_empty() { &instance.function_source } else { &bundle.direct };
        sections.push(fill(t.get("code"), &[("file", &instance.file_path), ("function_source", source.trim_end())]));
        if let Some(p) = inter {
            sections.push(fill(
                t.get("interprocedural"),
                &[
                    ("backward", &numbered(&p.backward)),
                    ("forward", &numbered(&p.forward)),
                    ("slices", &render_slices(&p.slices)),
                    ("callees", &render_callees(&p.callees)),
                ],
            ));
        }
        sections.push(fill(
            t.get("target"),
            &[("line", &instance.log_line.to_string()), ("log_statement", instance.log_line_text())],
        ));
        if settings.strategy == Strategy::Cot {
            sections.push(fill(t.get("cot"), &[]));
        }
        sections.push(fill(t.get("answer"), &[("marker", &self.marker)]));
        let mut out = sections.join("\n\n");
        out.push('\n');
        out
    }

    /// Extracts the label: the last answer marker wins, then the last
    /// pattern code mentioned, then the last pattern name or no-defect phrase.
    pub fn parse_response(&self, raw: &str) -> Result<Verdict, PromptError> {
        parse_response_with(raw, &self.taxonomy, &self.marker)
    }
}

struct InterParts {
    backward: Vec<String>,
    forward: Vec<String>,
    slices: Vec<DataFlowSlice>,
    callees: Vec<(String, String)>,
}

impl InterParts {
    fn shrink(&mut self) -> bool {
        if self.forward.pop().is_some() {
            return true;
        }
        if !self.backward.is_empty() {
            self.backward.remove(0);
            return true;
        }
        self.callees.pop().is_some() || self.slices.pop().is_some()
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn numbered(items: &[String]) -> String {
    if items.is_empty() {
        return "  (none)".into();
    }
    items.iter().enumerate().map(|(i, s)| format!("  {}. {}", i + 1, one_line(s))).collect::<Vec<_>>().join("\n")
}

fn render_slices(slices: &[DataFlowSlice]) -> String {
    if slices.is_empty() {
        return "  (none)".into();
    }
    let mut out = Vec::new();
    for s in slices {
        out.push(format!("  {} (source: {})", s.variable, s.source_kind.as_str()));
        if s.chain.is_empty() {
            out.push("    (no local definition)".into());
        }
        for e in &s.chain {
            out.push(format!("    {} line {}: {}", e.function, e.line, one_line(&e.text)));
        }
    }
    out.join("\n")
}

fn render_callees(callees: &[(String, String)]) -> String {
    if callees.is_empty() {
        return "  (none)".into();
    }
    callees.iter().map(|(k, v)| format!("  {k}\n```java\n{}\n```", v.trim_end())).collect::<Vec<_>>().join("\n")
}

/// Response parsing with an explicit taxonomy and marker.
pub fn parse_response_with(raw: &str, taxonomy: &Taxonomy, marker: &str) -> Result<Verdict, PromptError> {
    let lower_marker = marker.to_lowercase();
    let lines: Vec<&str> = raw.lines().collect();
    let mut label = None;
    let mut answer_line = None;
    for (i, line) in lines.iter().enumerate().rev() {
        let lower = line.to_lowercase();
        if let Some(pos) = lower.rfind(&lower_marker) {
            let rest = &line[pos + marker.len()..];
            let parsed = taxonomy
                .validate_label(rest)
                .ok()
                .or_else(|| rest.split_whitespace().next().and_then(|w| taxonomy.validate_label(w).ok()));
            if let Some(l) = parsed {
                label = Some(l);
                answer_line = Some(i);
                break;
            }
        }
    }
    let label = match label {
        Some(l) => l,
        None => last_code_mention(raw)
            .or_else(|| last_name_mention(raw, taxonomy))
            .ok_or(PromptError::UnparsableResponse)?,
    };
    let explanation = lines
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != answer_line)
        .map(|(_, l)| *l)
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string();
    Ok(Verdict { label, explanation, raw: raw.to_string() })
}

fn last_code_mention(raw: &str) -> Option<Label> {
    let re = Regex::new(r"\b(RD|VR|LV|SM|SS|IS|PF|NO_DEFECT)\b").unwrap();
    let m = re.find_iter(raw).last()?;
    if m.as_str() == "NO_DEFECT" {
        Some(Label::NoDefect)
    } else {
        PatternCode::parse(m.as_str()).map(Label::Pattern)
    }
}

fn last_name_mention(raw: &str, taxonomy: &Taxonomy) -> Option<Label> {
    let lower = raw.to_lowercase();
    let mut best: Option<(usize, Label)> = None;
    let mut consider = |needle: &str, label: Label| {
        if let Some(pos) = lower.rfind(needle) {
            if best.is_none_or(|(b, _)| pos > b) {
                best = Some((pos, label));
            }
        }
    };
    for p in taxonomy.patterns() {
        consider(&p.name.to_lowercase(), Label::Pattern(p.code));
    }
    consider("no defect", Label::NoDefect);
    best.map(|(_, l)| l)
}

/// Text of a flow-path section, exposed for callers that render context
/// outside prompts.
pub fn render_flow(flows: &FlowPaths) -> (String, String) {
    (numbered(&flows.backward), numbered(&flows.forward))
}
