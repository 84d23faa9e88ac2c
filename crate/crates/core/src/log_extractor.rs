//! Recognition of logging calls and decomposition of their message template.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source_model::lexer::{tokenize, Token, TokenKind};
use crate::source_model::{Block, FunctionDecl, Role, SourceUnit, StmtId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Trace,
    Debug,
    Info,
    Warn,
    Error,
    Fatal,
}

impl Level {
    pub const ALL: [Level; 6] = [Level::Trace, Level::Debug, Level::Info, Level::Warn, Level::Error, Level::Fatal];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Trace => "trace",
            Level::Debug => "debug",
            Level::Info => "info",
            Level::Warn => "warn",
            Level::Error => "error",
            Level::Fatal => "fatal",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Level::ALL.into_iter().find(|l| l.as_str() == lower).ok_or_else(|| format!("unknown level `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "snake_case")]
pub enum Segment {
    /// Literal text as written in the source, escapes included.
    Literal(String),
    Placeholder,
    /// A non-literal operand of a `+` concatenation.
    ConcatExpr(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogTemplate {
    pub segments: Vec<Segment>,
    pub placeholder_count: usize,
    pub uses_concatenation: bool,
}

impl LogTemplate {
    pub fn literal_text(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Literal(t) => out.push_str(t),
                Segment::Placeholder => out.push_str("{}"),
                Segment::ConcatExpr(_) => {}
            }
        }
        out
    }

    pub fn concat_exprs(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::ConcatExpr(t) => Some(t.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogStatement {
    pub file: PathBuf,
    /// Line of the level method name.
    pub line: u32,
    /// Last line of the call.
    pub end_line: u32,
    pub level: Level,
    pub template: LogTemplate,
    /// Argument expressions after the message, in source order.
    pub args: Vec<String>,
    pub throwable_last: bool,
    /// Condition text of an enclosing level check, e.g. `LOG.isDebugEnabled()`.
    pub guard: Option<String>,
    /// Index of the enclosing function in `SourceUnit::functions`.
    pub function: usize,
    pub function_name: String,
    /// Statement holding the call.
    pub stmt: StmtId,
    /// Caught parameter when the call sits inside a catch handler.
    pub catch_param: Option<String>,
    /// Verbatim call text, from receiver to closing parenthesis.
    pub call_text: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("first logging argument `{0}` is not a string expression")]
    NotAStringHead(String),
    #[error("logging call has no arguments")]
    NoArguments,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    pub logger_pattern: String,
    pub levels: Vec<Level>,
    pub throwable_names: Vec<String>,
    /// Path globs excluded from source discovery.
    pub exclude: Vec<String>,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            logger_pattern: "(?i)^(log|logger|.*_log)$".into(),
            levels: Level::ALL.to_vec(),
            throwable_names: ["e", "ex", "t", "ie", "exception", "throwable"].map(String::from).to_vec(),
            exclude: Vec::new(),
        }
    }
}

/// Logging-call recognizer built from an [`ExtractorConfig`].
#[derive(Debug, Clone)]
pub struct LogExtractor {
    logger: Regex,
    levels: Vec<Level>,
    throwable_names: Vec<String>,
}

impl Default for LogExtractor {
    fn default() -> Self {
        Self::new(&ExtractorConfig::default()).expect("default logger pattern compiles")
    }
}

impl LogExtractor {
    pub fn new(cfg: &ExtractorConfig) -> Result<Self, regex::Error> {
        Ok(Self {
            logger: Regex::new(&cfg.logger_pattern)?,
            levels: cfg.levels.clone(),
            throwable_names: cfg.throwable_names.clone(),
        })
    }

    pub fn is_throwable(&self, expr: &str) -> bool {
        let expr = expr.trim();
        let toks = tokenize(expr);
        matches!(toks.as_slice(), [t] if t.kind == TokenKind::Ident)
            && (self.throwable_names.iter().any(|n| n == expr) || expr.ends_with("Exception"))
    }

    /// Whether a single source line (possibly a fragment of a longer call)
    /// starts a logging call.
    pub fn line_has_logging_call(&self, line: &str) -> bool {
        let toks = tokenize(line);
        (2..toks.len()).any(|i| {
            let name = toks[i].text(line);
            let recv = toks[i - 2];
            toks[i - 1].text(line) == "."
                && toks.get(i + 1).is_some_and(|t| t.text(line) == "(")
                && name.parse::<Level>().is_ok_and(|l| self.levels.contains(&l))
                && name == name.to_ascii_lowercase()
                && ((recv.kind == TokenKind::Ident && self.logger.is_match(recv.text(line)))
                    || toks.get(i + 2).is_some_and(|t| t.is_string()))
        })
    }

    /// Logging calls of every function in the unit, in source order.
    pub fn extract_unit(&self, unit: &SourceUnit) -> Vec<LogStatement> {
        let mut all: Vec<_> = (0..unit.functions.len()).flat_map(|f| self.extract(unit, f)).collect();
        all.sort_by_key(|l| (l.line, l.function));
        all
    }

    /// Logging calls directly inside function `fidx` (calls that belong to a
    /// nested anonymous or local class method are reported there instead).
    pub fn extract(&self, unit: &SourceUnit, fidx: usize) -> Vec<LogStatement> {
        let f = &unit.functions[fidx];
        let inner: Vec<_> = unit
            .functions
            .iter()
            .enumerate()
            .filter(|&(i, g)| {
                i != fidx
                    && g.span.start >= f.span.start
                    && g.span.end <= f.span.end
                    && (g.span.start, g.span.end) != (f.span.start, f.span.end)
            })
            .map(|(_, g)| g.span)
            .collect();
        let mut out = Vec::new();
        for s in &f.statements {
            let text = &unit.raw_text[s.own_span.0..s.own_span.1];
            let toks = tokenize(text);
            for call in self.calls_in(text, &toks) {
                let line = call.line + s.line - 1;
                if inner.iter().any(|sp| sp.start <= line && line <= sp.end) {
                    continue;
                }
                let exprs: Vec<&str> = call.args.iter().map(String::as_str).collect();
                let Ok(template) = parse_template(&exprs) else { continue };
                let args: Vec<String> = call.args[1..].to_vec();
                let throwable_last = args.last().is_some_and(|a| self.is_throwable(a));
                out.push(LogStatement {
                    file: unit.path.clone(),
                    line,
                    end_line: call.end_line + s.line - 1,
                    level: call.level,
                    template,
                    args,
                    throwable_last,
                    guard: guard_of(f, s.id),
                    function: fidx,
                    function_name: f.qualified_name.clone(),
                    stmt: s.id,
                    catch_param: f.ancestors(s.id).find_map(|(_, r)| match r {
                        Role::Catch(p) => Some(p),
                        _ => None,
                    }),
                    call_text: call.text,
                });
            }
        }
        out
    }

    fn calls_in(&self, src: &str, toks: &[Token]) -> Vec<RawCall> {
        let mut out = Vec::new();
        for i in 2..toks.len() {
            let t = toks[i];
            if t.kind != TokenKind::Ident || toks.get(i + 1).map(|n| n.text(src)) != Some("(") {
                continue;
            }
            if toks[i - 1].text(src) != "." {
                continue;
            }
            let Ok(level) = t.text(src).parse::<Level>() else { continue };
            if !self.levels.contains(&level) || t.text(src) != t.text(src).to_ascii_lowercase() {
                continue;
            }
            let Some(close) = matching(src, toks, i + 1) else { continue };
            let args: Vec<String> = split_args(src, &toks[i + 2..close]);
            if args.is_empty() {
                continue;
            }
            let recv = toks[i - 2];
            let named_logger = recv.kind == TokenKind::Ident && self.logger.is_match(recv.text(src));
            if !named_logger && !string_headed(&args[0]) {
                continue;
            }
            let start = chain_start(src, toks, i - 2);
            let mut end = toks[close].end;
            if toks.get(close + 1).is_some_and(|n| n.text(src) == ";") {
                end = toks[close + 1].end;
            }
            out.push(RawCall {
                level,
                line: t.line,
                end_line: toks[close].line,
                args,
                text: src[toks[start].start..end].to_string(),
            });
        }
        out
    }
}

struct RawCall {
    level: Level,
    line: u32,
    end_line: u32,
    args: Vec<String>,
    text: String,
}

/// Logging calls of one function using the default heuristics.
pub fn find_logging_calls(unit: &SourceUnit, fidx: usize) -> Vec<LogStatement> {
    LogExtractor::default().extract(unit, fidx)
}

fn matching(src: &str, toks: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (k, t) in toks.iter().enumerate().skip(open) {
        match t.text(src) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

fn split_args(src: &str, toks: &[Token]) -> Vec<String> {
    if toks.is_empty() {
        return Vec::new();
    }
    split_top(src, toks, ",")
        .into_iter()
        .map(|(a, b)| if a < b { src[toks[a].start..toks[b - 1].end].to_string() } else { String::new() })
        .collect()
}

fn split_top(src: &str, toks: &[Token], sep: &str) -> Vec<(usize, usize)> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.text(src) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            s if s == sep && depth == 0 && t.kind == TokenKind::Punct => {
                parts.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push((start, toks.len()));
    parts
}

/// Start of a dotted receiver chain ending at `i` (`a.b.c` → index of `a`).
fn chain_start(src: &str, toks: &[Token], mut i: usize) -> usize {
    loop {
        if toks[i].text(src) == ")" {
            let mut depth = 0i32;
            let mut k = i;
            loop {
                match toks[k].text(src) {
                    ")" => depth += 1,
                    "(" => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                if k == 0 {
                    return 0;
                }
                k -= 1;
            }
            if k == 0 {
                return 0;
            }
            i = k - 1;
            continue;
        }
        if i >= 2 && toks[i - 1].text(src) == "." {
            i -= 2;
        } else {
            return i;
        }
    }
}

fn string_headed(expr: &str) -> bool {
    let toks = tokenize(expr);
    split_top(expr, &toks, "+").iter().any(|&(a, b)| b == a + 1 && toks[a].is_string())
}

/// Condition of the nearest enclosing level check whose then-branch holds
/// the statement.
fn guard_of(f: &FunctionDecl, id: StmtId) -> Option<String> {
    static CHECK: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"\bis(Trace|Debug|Info|Warn|Error|Fatal)Enabled\s*\(").unwrap());
    f.ancestors(id)
        .filter(|(p, role)| *role == Role::Then && matches!(f.stmt(*p).block, Block::If { .. }))
        .filter_map(|(p, _)| f.stmt(p).header.as_deref())
        .find(|h| CHECK.is_match(h))
        .map(condition_of)
}

fn condition_of(header: &str) -> String {
    let h = header.trim();
    let inner = h.strip_prefix("if").map(str::trim).unwrap_or(h);
    inner.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(inner).trim().to_string()
}

/// Decomposes the message argument of a logging call.
///
/// The first expression is split on top-level `+`; string literals are cut at
/// `{}` placeholders and every other operand becomes a concatenated
/// expression segment.
pub fn parse_template(exprs: &[&str]) -> Result<LogTemplate, ExtractError> {
    let head = *exprs.first().ok_or(ExtractError::NoArguments)?;
    let toks = tokenize(head);
    let operands = split_top(head, &toks, "+");
    let is_literal = |&(a, b): &(usize, usize)| b == a + 1 && toks[a].is_string();
    if !operands.iter().any(is_literal) {
        return Err(ExtractError::NotAStringHead(head.to_string()));
    }
    let mut segments = Vec::new();
    for op in &operands {
        let (a, b) = *op;
        if is_literal(op) {
            split_literal(string_content(toks[a], head), &mut segments);
        } else if a < b {
            segments.push(Segment::ConcatExpr(head[toks[a].start..toks[b - 1].end].to_string()));
        }
    }
    let placeholder_count = segments.iter().filter(|s| **s == Segment::Placeholder).count();
    let uses_concatenation = segments.iter().any(|s| matches!(s, Segment::ConcatExpr(_)));
    Ok(LogTemplate { segments, placeholder_count, uses_concatenation })
}

fn string_content(t: Token, src: &str) -> &str {
    let text = t.text(src);
    if t.kind == TokenKind::TextBlock {
        let inner = text.strip_prefix("\"\"\"").unwrap_or(text);
        inner.strip_suffix("\"\"\"").unwrap_or(inner)
    } else {
        let inner = text.strip_prefix('"').unwrap_or(text);
        inner.strip_suffix('"').unwrap_or(inner)
    }
}

/// Splits raw literal content at `{}`. A `{}` preceded by an odd number of
/// runtime backslashes (`\\{}` in source) is an escaped placeholder.
fn split_literal(content: &str, out: &mut Vec<Segment>) {
    let bytes = content.as_bytes();
    let mut lit_start = 0;
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b'{' && bytes[i + 1] == b'}' {
            let slashes = bytes[..i].iter().rev().take_while(|&&c| c == b'\\').count();
            if (slashes / 2) % 2 == 0 {
                if lit_start < i {
                    out.push(Segment::Literal(content[lit_start..i].to_string()));
                }
                out.push(Segment::Placeholder);
                i += 2;
                lit_start = i;
                continue;
            }
        }
        i += 1;
    }
    if lit_start < content.len() {
        out.push(Segment::Literal(content[lit_start..].to_string()));
    }
}
