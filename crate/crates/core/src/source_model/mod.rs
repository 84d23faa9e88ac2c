//! Tolerant model of Java source: compilation units, methods, statements,
//! intra-procedural control-flow graphs and a name+arity call graph.
//!
//! The supported subset covers class/interface/enum/record bodies, methods and
//! constructors, local declarations, assignments, calls, `if`/`else`,
//! `for`/`while`/`do`, `try`/`catch`/`finally`, `return` and `throw`.
//! Everything else (switch, synchronized, labels, lambdas, anonymous class
//! bodies inside expressions, annotated locals) becomes an opaque statement.

mod calls;
mod cfg;
mod expr;
pub mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calls::{resolve_calls, CallGraph, CallSite, Callee};
pub use cfg::{build_cfg, ControlFlowGraph};
pub use parser::parse_compilation_unit;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{path}:{line}: unbalanced delimiter `{delimiter}`")]
    UnbalancedDelimiters { path: PathBuf, line: u32, delimiter: char },
    #[error("{path}: not valid UTF-8 (byte offset {offset})")]
    EncodingError { path: PathBuf, offset: usize },
}

/// Parses raw bytes, rejecting input that is not UTF-8.
pub fn parse_bytes(bytes: &[u8], path: &Path) -> Result<SourceUnit, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ParseError::EncodingError { path: path.to_path_buf(), offset: e.valid_up_to() })?;
    parse_compilation_unit(text, path)
}

/// Variables read by an expression, classified lexically.
pub fn expr_vars(src: &str, toks: &[lexer::Token]) -> BTreeSet<String> {
    expr::Expr::new(src, toks).vars()
}

/// Index of a statement inside its function's arena. Statements are numbered
/// in pre-order, so a compound statement precedes its children.
pub type StmtId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: PathBuf,
    pub package: String,
    pub types: Vec<TypeDecl>,
    /// Every method body in the file, in source order.
    pub functions: Vec<FunctionDecl>,
    pub raw_text: String,
    line_starts: Vec<usize>,
}

impl SourceUnit {
    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    /// Text of a 1-based line, without its terminator.
    pub fn line(&self, line: u32) -> Option<&str> {
        let idx = (line as usize).checked_sub(1)?;
        let start = *self.line_starts.get(idx)?;
        let end = self.line_starts.get(idx + 1).copied().unwrap_or(self.raw_text.len());
        Some(self.raw_text[start..end].trim_end_matches(['\n', '\r']))
    }

    pub fn function_named(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name || f.qualified_name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
    Anonymous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub qualified_name: String,
    pub kind: TypeKind,
    pub fields: BTreeSet<String>,
    /// Indexes into `SourceUnit::functions`.
    pub methods: Vec<usize>,
    pub nested: Vec<TypeDecl>,
    pub span: LineSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub type_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub qualified_name: String,
    pub name: String,
    pub parameters: Vec<Parameter>,
    /// Top-level statements of the body, in source order.
    pub body: Vec<StmtId>,
    /// Statement arena in pre-order.
    pub statements: Vec<Statement>,
    pub span: LineSpan,
    /// Verbatim text of the declaration, signature included.
    pub source: String,
    /// Fields declared by the enclosing type and its outer types.
    pub fields_in_scope: BTreeSet<String>,
    /// Whether the declaration has a body (abstract and interface methods do not).
    pub has_body: bool,
}

impl FunctionDecl {
    pub fn arity(&self) -> usize {
        self.parameters.len()
    }

    pub fn stmt(&self, id: StmtId) -> &Statement {
        &self.statements[id]
    }

    pub fn is_parameter(&self, name: &str) -> bool {
        self.parameters.iter().any(|p| p.name == name)
    }

    /// Innermost statement whose own tokens (header for compound kinds)
    /// cover `line`.
    pub fn statement_at_line(&self, line: u32) -> Option<StmtId> {
        self.statements.iter().filter(|s| s.line <= line && line <= s.own_end_line).map(|s| s.id).next_back()
    }

    /// Chain of enclosing statements from the innermost parent outwards.
    pub fn ancestors(&self, id: StmtId) -> impl Iterator<Item = (StmtId, Role)> + '_ {
        let mut cur = id;
        std::iter::from_fn(move || {
            let s = &self.statements[cur];
            let parent = s.parent?;
            let role = s.role.clone();
            cur = parent;
            Some((parent, role))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatementKind {
    Assignment,
    Declaration,
    Call,
    If,
    Loop,
    Try,
    Return,
    Throw,
    Opaque,
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StatementKind::Assignment => "assignment",
            StatementKind::Declaration => "declaration",
            StatementKind::Call => "call",
            StatementKind::If => "if",
            StatementKind::Loop => "loop",
            StatementKind::Try => "try",
            StatementKind::Return => "return",
            StatementKind::Throw => "throw",
            StatementKind::Opaque => "opaque",
        };
        f.write_str(s)
    }
}

/// Position of a statement relative to its parent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Role {
    Body,
    Then,
    Else,
    LoopBody,
    TryBody,
    /// Inside the handler whose caught parameter has this name.
    Catch(String),
    Finally,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopKind {
    For,
    ForEach,
    While,
    DoWhile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchClause {
    pub param: String,
    pub types: Vec<String>,
    pub line: u32,
    pub body: Vec<StmtId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    None,
    If { then_branch: Vec<StmtId>, else_branch: Option<Vec<StmtId>> },
    Loop { kind: LoopKind, body: Vec<StmtId> },
    Try { body: Vec<StmtId>, catches: Vec<CatchClause>, finally: Option<Vec<StmtId>> },
}

/// One variable written by a statement together with what its value reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assign {
    pub target: String,
    pub uses: BTreeSet<String>,
    /// The value comes (at least in part) from a method or constructor call.
    pub has_call: bool,
    /// Method invocations in the value expression as (name, arity).
    pub calls: Vec<(String, usize)>,
}

/// A method invocation found in a statement's own tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub name: String,
    pub arity: usize,
    pub line: u32,
    pub receiver: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub id: StmtId,
    pub kind: StatementKind,
    /// Verbatim source, including nested statements for compound kinds.
    pub text: String,
    /// Verbatim header for compound kinds (`if (x)`, `for (...)`, `try`).
    pub header: Option<String>,
    pub line: u32,
    pub end_line: u32,
    /// Last line of the statement's own tokens (the header for compound kinds).
    pub own_end_line: u32,
    /// Byte range of the statement's own tokens in the unit text.
    pub own_span: (usize, usize),
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    pub assigns: Vec<Assign>,
    pub calls: Vec<Invocation>,
    pub block: Block,
    pub parent: Option<StmtId>,
    pub role: Role,
}

impl Statement {
    /// Text shown for this statement as a single CFG node.
    pub fn display_text(&self) -> &str {
        self.header.as_deref().unwrap_or(&self.text)
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<StmtId> {
        match &self.block {
            Block::None => Vec::new(),
            Block::If { then_branch, else_branch } => {
                then_branch.iter().chain(else_branch.iter().flatten()).copied().collect()
            }
            Block::Loop { body, .. } => body.clone(),
            Block::Try { body, catches, finally } => body
                .iter()
                .chain(catches.iter().flat_map(|c| c.body.iter()))
                .chain(finally.iter().flatten())
                .copied()
                .collect(),
        }
    }

    pub fn assign_for(&self, var: &str) -> Option<&Assign> {
        self.assigns.iter().rev().find(|a| a.target == var)
    }
}

#[cfg(test)]
mod tests;
