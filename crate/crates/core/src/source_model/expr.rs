//! Lexical analysis of expression token runs: variable reads, invocations and
//! assignment targets. No types are resolved; identifiers are classified by
//! their neighbours.

use std::collections::BTreeSet;

use super::lexer::{is_keyword, Token, TokenKind};
use super::Invocation;

pub(crate) struct Expr<'a> {
    pub src: &'a str,
    pub toks: &'a [Token],
}

impl<'a> Expr<'a> {
    pub fn new(src: &'a str, toks: &'a [Token]) -> Self {
        Self { src, toks }
    }

    fn text(&self, i: usize) -> &'a str {
        self.toks[i].text(self.src)
    }

    fn at(&self, i: usize) -> Option<&'a str> {
        self.toks.get(i).map(|t| t.text(self.src))
    }

    fn is_ident(&self, i: usize) -> bool {
        self.toks.get(i).is_some_and(|t| t.kind == TokenKind::Ident)
    }

    /// Identifiers read as variables.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut i = 0;
        while i < self.toks.len() {
            let t = self.text(i);
            if t == "new" {
                i = self.skip_creation_type(i + 1);
                continue;
            }
            if t == "instanceof" {
                i = self.skip_type(i + 1);
                continue;
            }
            if self.is_variable_at(i) {
                out.insert(t.to_string());
            }
            i += 1;
        }
        out
    }

    fn is_variable_at(&self, i: usize) -> bool {
        if !self.is_ident(i) {
            return false;
        }
        let t = self.text(i);
        if is_keyword(t) {
            return false;
        }
        let prev = if i > 0 { self.at(i - 1) } else { None };
        if matches!(prev, Some("." | "::" | "@")) {
            return false;
        }
        let next = self.at(i + 1);
        if next == Some("(") {
            return false;
        }
        let upper = t.chars().next().is_some_and(char::is_uppercase);
        if upper && matches!(next, Some("." | "::" | "<")) && !is_constant_name(t) {
            return false;
        }
        // `(Type) operand` cast.
        if prev == Some("(") && next == Some(")") && upper {
            let after = self.toks.get(i + 2);
            if after.is_some_and(|a| a.kind != TokenKind::Punct || matches!(a.text(self.src), "(" | "!" | "~")) {
                return false;
            }
        }
        // Generic type arguments in a cast or declaration fragment.
        if matches!(prev, Some("<" | ",")) && matches!(next, Some(">" | ",")) && upper {
            return false;
        }
        true
    }

    fn skip_creation_type(&self, mut i: usize) -> usize {
        while i < self.toks.len() && !matches!(self.text(i), "(" | "[" | "{") {
            i += 1;
        }
        i
    }

    fn skip_type(&self, mut i: usize) -> usize {
        let mut angle = 0i32;
        while i < self.toks.len() {
            match self.text(i) {
                "<" => angle += 1,
                ">" => angle -= 1,
                "." | "[" | "]" | "," | "?" | "&" => {}
                _ if self.is_ident(i) => {
                    if angle == 0 && !matches!(self.at(i + 1), Some("." | "<" | "[")) {
                        return i + 1;
                    }
                }
                _ if angle <= 0 => return i,
                _ => {}
            }
            i += 1;
        }
        i
    }

    /// Method invocations (not constructors).
    pub fn invocations(&self) -> Vec<Invocation> {
        let mut out = Vec::new();
        for i in 0..self.toks.len() {
            if !self.is_ident(i) || self.at(i + 1) != Some("(") {
                continue;
            }
            let name = self.text(i);
            if is_keyword(name) {
                continue;
            }
            let prev = if i > 0 { self.at(i - 1) } else { None };
            if prev == Some("new") {
                continue;
            }
            // Skip a constructor name reached through a qualified `new a.b.C(`.
            if prev == Some(".") && self.preceded_by_new(i) {
                continue;
            }
            let receiver = if prev == Some(".") && i >= 2 {
                match self.text(i - 2) {
                    ")" | "]" => Some("<expr>".to_string()),
                    r => Some(r.to_string()),
                }
            } else {
                None
            };
            let arity = self.arity_from(i + 1);
            out.push(Invocation { name: name.to_string(), arity, line: self.toks[i].line, receiver });
        }
        out
    }

    fn preceded_by_new(&self, mut i: usize) -> bool {
        while i >= 2 && self.at(i - 1) == Some(".") && self.is_ident(i - 2) {
            i -= 2;
        }
        i >= 1 && self.at(i - 1) == Some("new")
    }

    pub fn has_creation(&self) -> bool {
        (0..self.toks.len()).any(|i| self.text(i) == "new")
    }

    /// Number of top-level arguments inside the parenthesis opening at `open`.
    fn arity_from(&self, open: usize) -> usize {
        let mut depth = 0i32;
        let mut commas = 0;
        let mut any = false;
        for i in open..self.toks.len() {
            match self.text(i) {
                "(" | "[" | "{" => {
                    depth += 1;
                    if depth > 1 {
                        any = true;
                    }
                }
                ")" | "]" | "}" => {
                    depth -= 1;
                    if depth == 0 {
                        return if any { commas + 1 } else { 0 };
                    }
                }
                "," if depth == 1 => commas += 1,
                _ => any = true,
            }
        }
        if any {
            commas + 1
        } else {
            0
        }
    }

    /// All non-keyword identifiers, used as the conservative read set of
    /// opaque statements.
    pub fn all_identifiers(&self) -> BTreeSet<String> {
        (0..self.toks.len())
            .filter(|&i| self.is_ident(i) && !is_keyword(self.text(i)))
            .map(|i| self.text(i).to_string())
            .collect()
    }
}

fn is_constant_name(s: &str) -> bool {
    s.len() > 1
        && s.chars().all(|c| c.is_uppercase() || c.is_ascii_digit() || c == '_')
        && s.chars().any(char::is_alphabetic)
}

/// Splits a token range at top-level occurrences of `sep`.
pub(crate) fn split_top_level(src: &str, toks: &[Token], sep: &str) -> Vec<(usize, usize)> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.text(src) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            s if s == sep && depth == 0 => {
                parts.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push((start, toks.len()));
    parts
}

pub(crate) const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

/// Index of the first top-level assignment operator.
pub(crate) fn top_level_assignment(src: &str, toks: &[Token]) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        match t.text(src) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            s if depth == 0 && t.kind == TokenKind::Punct && ASSIGN_OPS.contains(&s) => return Some(i),
            _ => {}
        }
    }
    None
}
