use std::collections::BTreeSet;
use std::path::Path;

use super::expr::{split_top_level, top_level_assignment, Expr};
use super::lexer::{is_keyword, tokenize, Token, TokenKind, PRIMITIVES};
use super::{
    Assign, Block, CatchClause, FunctionDecl, LineSpan, LoopKind, Parameter, ParseError, Role, SourceUnit, Statement,
    StatementKind, StmtId, TypeDecl, TypeKind,
};

/// Parses one Java compilation unit.
///
/// Only unmatched `(`/`[`/`{` delimiters reject the file; every other
/// unsupported construct degrades to an opaque statement.
pub fn parse_compilation_unit(text: &str, path: &Path) -> Result<SourceUnit, ParseError> {
    let toks = tokenize(text);
    let pairs = match_delimiters(text, &toks).map_err(|(line, delimiter)| ParseError::UnbalancedDelimiters {
        path: path.to_path_buf(),
        line,
        delimiter,
    })?;
    let mut p = Parser { src: text, toks: &toks, pairs, functions: Vec::new(), package: String::new() };
    let types = p.compilation_unit();
    let mut line_starts = vec![0];
    line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
    if line_starts.len() > 1 && *line_starts.last().unwrap() == text.len() {
        line_starts.pop();
    }
    Ok(SourceUnit {
        path: path.to_path_buf(),
        package: p.package,
        types,
        functions: p.functions,
        raw_text: text.to_string(),
        line_starts,
    })
}

fn match_delimiters(src: &str, toks: &[Token]) -> Result<Vec<Option<usize>>, (u32, char)> {
    let mut pairs = vec![None; toks.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        let s = t.text(src);
        match s {
            "(" | "[" | "{" => stack.push(i),
            ")" | "]" | "}" => {
                let want = match s {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                match stack.pop() {
                    Some(open) if toks[open].text(src) == want => {
                        pairs[open] = Some(i);
                        pairs[i] = Some(open);
                    }
                    _ => return Err((t.line, s.chars().next().unwrap())),
                }
            }
            _ => {}
        }
    }
    if let Some(open) = stack.pop() {
        let t = toks[open];
        return Err((t.line, t.text(src).chars().next().unwrap()));
    }
    Ok(pairs)
}

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    pairs: Vec<Option<usize>>,
    functions: Vec<FunctionDecl>,
    package: String,
}

/// Where a class body sits, used to build qualified names and field scope.
#[derive(Clone, Default)]
struct Scope {
    prefix: String,
    fields: BTreeSet<String>,
}

impl<'a> Parser<'a> {
    fn t(&self, i: usize) -> &'a str {
        self.toks.get(i).map_or("", |t| t.text(self.src))
    }

    fn is_ident(&self, i: usize) -> bool {
        self.toks.get(i).is_some_and(|t| t.kind == TokenKind::Ident)
    }

    fn close(&self, open: usize) -> usize {
        self.pairs[open].expect("delimiters are matched before parsing")
    }

    fn slice(&self, from: usize, to: usize) -> &'a str {
        if from >= to {
            return "";
        }
        &self.src[self.toks[from].start..self.toks[to - 1].end]
    }

    fn compilation_unit(&mut self) -> Vec<TypeDecl> {
        let mut types = Vec::new();
        let mut i = 0;
        let n = self.toks.len();
        while i < n {
            match self.t(i) {
                "package" => {
                    let end = self.find_semicolon(i, n);
                    self.package = self.slice(i + 1, end).split_whitespace().collect();
                    i = end + 1;
                }
                "import" => i = self.find_semicolon(i, n) + 1,
                ";" => i += 1,
                _ => {
                    let scope = Scope {
                        prefix: if self.package.is_empty() { String::new() } else { format!("{}.", self.package) },
                        fields: BTreeSet::new(),
                    };
                    match self.member(i, n, &scope, &mut types) {
                        Some(next) => i = next,
                        None => i += 1,
                    }
                }
            }
        }
        types
    }

    fn find_semicolon(&self, from: usize, end: usize) -> usize {
        let mut i = from;
        while i < end {
            match self.t(i) {
                ";" => return i,
                "(" | "[" | "{" => i = self.close(i) + 1,
                _ => i += 1,
            }
        }
        end
    }

    fn skip_annotation(&self, i: usize) -> usize {
        // `@` Name(.Name)* [( ... )]
        let mut j = i + 1;
        while self.is_ident(j) {
            j += 1;
            if self.t(j) == "." {
                j += 1;
            } else {
                break;
            }
        }
        if self.t(j) == "(" {
            j = self.close(j) + 1;
        }
        j
    }

    fn skip_modifiers(&self, mut i: usize, end: usize) -> usize {
        while i < end {
            let t = self.t(i);
            if t == "@" && self.t(i + 1) != "interface" {
                i = self.skip_annotation(i);
            } else if MODIFIERS.contains(&t) {
                i += 1;
            } else if t == "non" && self.t(i + 1) == "-" && self.t(i + 2) == "sealed" {
                i += 3;
            } else {
                break;
            }
        }
        i
    }

    /// Parses one class-body (or top-level) member starting at `start`.
    /// Returns the index after it, or `None` if nothing was consumed.
    fn member(&mut self, start: usize, end: usize, scope: &Scope, types: &mut Vec<TypeDecl>) -> Option<usize> {
        let i = self.skip_modifiers(start, end);
        if i >= end {
            return Some(end);
        }
        let kind = match (self.t(i), self.t(i + 1)) {
            ("class", _) => Some(TypeKind::Class),
            ("interface", _) => Some(TypeKind::Interface),
            ("enum", _) if self.is_ident(i + 1) => Some(TypeKind::Enum),
            ("record", _) if self.is_ident(i + 1) && self.t(i + 2) != "=" => Some(TypeKind::Record),
            ("@", "interface") => Some(TypeKind::Annotation),
            _ => None,
        };
        if let Some(kind) = kind {
            let name_idx = if kind == TypeKind::Annotation { i + 2 } else { i + 1 };
            let mut j = name_idx;
            while j < end && self.t(j) != "{" && self.t(j) != ";" {
                if self.t(j) == "(" {
                    j = self.close(j);
                }
                j += 1;
            }
            if j >= end || self.t(j) != "{" {
                return Some(j + 1);
            }
            let close = self.close(j);
            let decl = self.type_body(self.t(name_idx), kind, j, close, scope, self.toks[start].line);
            types.push(decl);
            return Some(close + 1);
        }
        if self.t(i) == "{" {
            // Initializer block.
            return Some(self.close(i) + 1);
        }
        if self.t(i) == ";" {
            return Some(i + 1);
        }
        // Method, constructor or field: scan to the first top-level `(`, `=`, `;` or `{`.
        let mut j = i;
        while j < end {
            match self.t(j) {
                "(" => {
                    if j > i && self.is_ident(j - 1) && !is_keyword(self.t(j - 1)) {
                        return Some(self.method(start, j, end, scope));
                    }
                    j = self.close(j) + 1;
                }
                "=" | ";" => {
                    let stop = self.find_semicolon(i, end);
                    return Some(stop + 1);
                }
                "{" => return Some(self.close(j) + 1),
                _ => j += 1,
            }
        }
        Some(end)
    }

    fn type_body(
        &mut self,
        name: &str,
        kind: TypeKind,
        open: usize,
        close: usize,
        outer: &Scope,
        start_line: u32,
    ) -> TypeDecl {
        let qualified = format!("{}{}", outer.prefix, name);
        let mut first = open + 1;
        if kind == TypeKind::Enum {
            // Skip the constant list up to the first top-level `;`.
            let semi = self.find_semicolon(first, close);
            first = if semi < close { semi + 1 } else { close };
        }
        let mut fields = self.collect_fields(first, close);
        if kind == TypeKind::Record {
            // Record components precede the body.
            let mut k = open;
            while k > 0 && self.t(k) != ")" {
                k -= 1;
            }
            if self.t(k) == ")" {
                let lp = self.close(k);
                for p in self.parameters(lp + 1, k) {
                    fields.insert(p.name);
                }
            }
        }
        let scope = Scope { prefix: format!("{qualified}."), fields: outer.fields.union(&fields).cloned().collect() };
        let before = self.functions.len();
        let mut nested = Vec::new();
        let mut i = first;
        while i < close {
            match self.member(i, close, &scope, &mut nested) {
                Some(next) if next > i => i = next,
                _ => i += 1,
            }
        }
        let methods = (before..self.functions.len())
            .filter(|&f| self.functions[f].qualified_name.rsplit_once('.').map(|x| x.0) == Some(qualified.as_str()))
            .collect();
        TypeDecl {
            name: name.to_string(),
            qualified_name: qualified,
            kind,
            fields,
            methods,
            nested,
            span: LineSpan { start: start_line, end: self.toks[close].line },
        }
    }

    /// Field names declared directly in a class body.
    fn collect_fields(&self, first: usize, close: usize) -> BTreeSet<String> {
        let mut fields = BTreeSet::new();
        let mut i = first;
        while i < close {
            let m = self.skip_modifiers(i, close);
            if m >= close {
                break;
            }
            match self.t(m) {
                "class" | "interface" | "enum" | "record" | "@" => {
                    let mut j = m;
                    while j < close && self.t(j) != "{" {
                        j += 1;
                    }
                    i = if j < close { self.close(j) + 1 } else { close };
                    continue;
                }
                "{" => {
                    i = self.close(m) + 1;
                    continue;
                }
                ";" => {
                    i = m + 1;
                    continue;
                }
                _ => {}
            }
            let mut j = m;
            let mut angle = 0i32;
            let mut is_field = false;
            while j < close {
                match self.t(j) {
                    "<" => angle += 1,
                    ">" => angle -= 1,
                    "(" => break,
                    "{" => break,
                    "=" | ";" | "," if angle <= 0 => {
                        is_field = true;
                        break;
                    }
                    _ => {}
                }
                j += 1;
            }
            if is_field {
                let semi = self.find_semicolon(m, close);
                for (a, b) in split_top_level(self.src, &self.toks[m..semi], ",") {
                    let part = &self.toks[m + a..m + b];
                    let eq = part.iter().position(|t| t.text(self.src) == "=").unwrap_or(part.len());
                    let mut k = eq;
                    while k > 0 && matches!(part[k - 1].text(self.src), "[" | "]") {
                        k -= 1;
                    }
                    if k > 0 && part[k - 1].kind == TokenKind::Ident {
                        fields.insert(part[k - 1].text(self.src).to_string());
                    }
                }
                i = semi + 1;
            } else if j < close && self.t(j) == "(" {
                let mut k = self.close(j) + 1;
                while k < close && self.t(k) != "{" && self.t(k) != ";" {
                    k += 1;
                }
                i = if k < close && self.t(k) == "{" { self.close(k) + 1 } else { k + 1 };
            } else if j < close && self.t(j) == "{" {
                i = self.close(j) + 1;
            } else {
                i = j + 1;
            }
        }
        fields
    }

    fn parameters(&self, from: usize, to: usize) -> Vec<Parameter> {
        let toks = &self.toks[from..to];
        if toks.is_empty() {
            return Vec::new();
        }
        // Angle-aware split on commas.
        let mut parts = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        for (k, t) in toks.iter().enumerate() {
            match t.text(self.src) {
                "<" | "(" | "[" => depth += 1,
                ">" | ")" | "]" => depth -= 1,
                "," if depth == 0 => {
                    parts.push((start, k));
                    start = k + 1;
                }
                _ => {}
            }
        }
        parts.push((start, toks.len()));
        parts
            .into_iter()
            .filter_map(|(a, b)| {
                let mut a = from + a;
                let b = from + b;
                a = self.skip_modifiers(a, b);
                let name_idx = (a..b).rev().find(|&k| self.is_ident(k) && !is_keyword(self.t(k)))?;
                Some(Parameter {
                    name: self.t(name_idx).to_string(),
                    type_text: self.slice(a, name_idx).trim().to_string(),
                })
            })
            .collect()
    }

    fn method(&mut self, start: usize, lparen: usize, end: usize, scope: &Scope) -> usize {
        let rparen = self.close(lparen);
        let name = self.t(lparen - 1).to_string();
        let parameters = self.parameters(lparen + 1, rparen);
        let mut j = rparen + 1;
        while j < end && !matches!(self.t(j), "{" | ";") {
            j += 1;
        }
        let qualified_name = format!("{}{}", scope.prefix, name);
        let has_body = j < end && self.t(j) == "{";
        let last = if has_body { self.close(j) } else { j.min(end.saturating_sub(1)) };
        let source = self.declaration_text(start, last);
        let mut builder = BodyBuilder { p: self, stmts: Vec::new(), nested_scopes: Vec::new() };
        let body = if has_body {
            let close = builder.p.close(j);
            builder.block(j + 1, close, None, Role::Body)
        } else {
            Vec::new()
        };
        let BodyBuilder { stmts, nested_scopes, .. } = builder;
        let decl = FunctionDecl {
            qualified_name: qualified_name.clone(),
            name,
            parameters,
            body,
            statements: stmts,
            span: LineSpan { start: self.toks[start].line, end: self.toks[last].line },
            source,
            fields_in_scope: scope.fields.clone(),
            has_body,
        };
        self.functions.push(decl);
        // Anonymous and local class bodies found inside opaque statements.
        for (k, (open, close)) in nested_scopes.into_iter().enumerate() {
            let anon_scope = Scope { prefix: format!("{qualified_name}$"), fields: scope.fields.clone() };
            let label = format!("{}", k + 1);
            let _ = self.type_body(&label, TypeKind::Anonymous, open, close, &anon_scope, self.toks[open].line);
        }
        last + 1
    }

    /// Verbatim declaration text; starts at the beginning of the line when
    /// only indentation precedes the first token.
    fn declaration_text(&self, first: usize, last: usize) -> String {
        let start = self.toks[first].start;
        let line_start = self.src[..start].rfind('\n').map_or(0, |p| p + 1);
        let from = if self.src[line_start..start].trim().is_empty() { line_start } else { start };
        self.src[from..self.toks[last].end].to_string()
    }
}

struct BodyBuilder<'p, 'a> {
    p: &'p mut Parser<'a>,
    stmts: Vec<Statement>,
    nested_scopes: Vec<(usize, usize)>,
}

impl<'p, 'a> BodyBuilder<'p, 'a> {
    fn t(&self, i: usize) -> &'a str {
        self.p.t(i)
    }

    fn close(&self, i: usize) -> usize {
        self.p.close(i)
    }

    /// Statements in `[from, to)`, flattening nested bare blocks.
    fn block(&mut self, from: usize, to: usize, parent: Option<StmtId>, role: Role) -> Vec<StmtId> {
        let mut ids = Vec::new();
        let mut i = from;
        while i < to {
            let (mut got, next) = self.statement(i, to, parent, role.clone());
            ids.append(&mut got);
            i = next.max(i + 1);
        }
        ids
    }

    /// Index just past the statement starting at `i`.
    fn stmt_end(&self, i: usize, to: usize) -> usize {
        if i >= to {
            return to;
        }
        match self.t(i) {
            "{" => self.close(i) + 1,
            ";" => i + 1,
            "if" if self.t(i + 1) == "(" => {
                let after = self.stmt_end(self.close(i + 1) + 1, to);
                if after < to && self.t(after) == "else" {
                    self.stmt_end(after + 1, to)
                } else {
                    after
                }
            }
            "for" | "while" if self.t(i + 1) == "(" => self.stmt_end(self.close(i + 1) + 1, to),
            "do" => {
                let body_end = self.stmt_end(i + 1, to);
                self.p.find_semicolon(body_end, to) + 1
            }
            "try" => {
                let mut j = i + 1;
                if self.t(j) == "(" {
                    j = self.close(j) + 1;
                }
                if self.t(j) == "{" {
                    j = self.close(j) + 1;
                }
                while j < to && self.t(j) == "catch" && self.t(j + 1) == "(" {
                    j = self.close(j + 1) + 1;
                    if self.t(j) == "{" {
                        j = self.close(j) + 1;
                    }
                }
                if j < to && self.t(j) == "finally" && self.t(j + 1) == "{" {
                    j = self.close(j + 1) + 1;
                }
                j
            }
            "switch" | "synchronized" if self.t(i + 1) == "(" => {
                let j = self.close(i + 1) + 1;
                let j = if self.t(j) == "{" { self.close(j) + 1 } else { j };
                if j < to && self.t(j) == ";" {
                    j + 1
                } else {
                    j
                }
            }
            t if self.p.is_ident(i) && self.t(i + 1) == ":" && !is_keyword(t) => self.stmt_end(i + 2, to),
            _ => {
                let mut j = i;
                while j < to {
                    match self.t(j) {
                        ";" => return j + 1,
                        "(" | "[" => j = self.close(j) + 1,
                        "{" => {
                            let c = self.close(j);
                            j = c + 1;
                            // Local class declarations end at their closing brace.
                            if self.is_local_type_decl(i) {
                                return j;
                            }
                        }
                        _ => j += 1,
                    }
                }
                to
            }
        }
    }

    fn is_local_type_decl(&self, i: usize) -> bool {
        let m = self.p.skip_modifiers(i, self.p.toks.len());
        matches!(self.t(m), "class" | "interface" | "enum")
            || (self.t(m) == "record" && self.p.is_ident(m + 1) && self.t(m + 2) != "=")
    }

    fn alloc(&mut self, first: usize, parent: Option<StmtId>, role: Role) -> StmtId {
        let id = self.stmts.len();
        let tok = self.p.toks[first];
        self.stmts.push(Statement {
            id,
            kind: StatementKind::Opaque,
            text: String::new(),
            header: None,
            line: tok.line,
            end_line: tok.line,
            own_end_line: tok.line,
            own_span: (tok.start, tok.end),
            defs: BTreeSet::new(),
            uses: BTreeSet::new(),
            assigns: Vec::new(),
            calls: Vec::new(),
            block: Block::None,
            parent,
            role,
        });
        id
    }

    fn finish(&mut self, id: StmtId, from: usize, to: usize, own_to: usize) {
        let text = self.p.slice(from, to).to_string();
        let s = &mut self.stmts[id];
        s.text = text;
        s.end_line = self.p.toks[to - 1].line;
        s.own_end_line = self.p.toks[own_to - 1].line;
        s.own_span = (self.p.toks[from].start, self.p.toks[own_to - 1].end);
    }

    fn statement(&mut self, i: usize, to: usize, parent: Option<StmtId>, role: Role) -> (Vec<StmtId>, usize) {
        match self.t(i) {
            ";" => (Vec::new(), i + 1),
            "{" => {
                let c = self.close(i);
                (self.block(i + 1, c, parent, role), c + 1)
            }
            "if" if self.t(i + 1) == "(" => self.if_stmt(i, to, parent, role),
            "for" | "while" if self.t(i + 1) == "(" => self.loop_stmt(i, to, parent, role),
            "do" => self.do_stmt(i, to, parent, role),
            "try" if matches!(self.t(i + 1), "{" | "(") => self.try_stmt(i, to, parent, role),
            _ => {
                let end = self.stmt_end(i, to).min(to);
                let id = self.alloc(i, parent, role);
                self.finish(id, i, end, end);
                self.simple(id, i, end);
                (vec![id], end)
            }
        }
    }

    fn if_stmt(&mut self, i: usize, to: usize, parent: Option<StmtId>, role: Role) -> (Vec<StmtId>, usize) {
        let rp = self.close(i + 1);
        let id = self.alloc(i, parent, role);
        let then_end = self.stmt_end(rp + 1, to);
        let then_branch = self.block(rp + 1, then_end, Some(id), Role::Then);
        let mut end = then_end;
        let mut else_branch = None;
        if end < to && self.t(end) == "else" {
            let else_end = self.stmt_end(end + 1, to);
            else_branch = Some(self.block(end + 1, else_end, Some(id), Role::Else));
            end = else_end;
        }
        self.finish(id, i, end, rp + 1);
        self.header(id, i, rp + 1, StatementKind::If, i + 2, rp);
        self.stmts[id].block = Block::If { then_branch, else_branch };
        (vec![id], end)
    }

    fn loop_stmt(&mut self, i: usize, to: usize, parent: Option<StmtId>, role: Role) -> (Vec<StmtId>, usize) {
        let rp = self.close(i + 1);
        let id = self.alloc(i, parent, role);
        let end = self.stmt_end(rp + 1, to);
        let body = self.block(rp + 1, end, Some(id), Role::LoopBody);
        self.finish(id, i, end, rp + 1);
        let kind = if self.t(i) == "while" {
            self.header(id, i, rp + 1, StatementKind::Loop, i + 2, rp);
            LoopKind::While
        } else {
            self.for_header(id, i, rp)
        };
        self.stmts[id].block = Block::Loop { kind, body };
        (vec![id], end)
    }

    fn do_stmt(&mut self, i: usize, to: usize, parent: Option<StmtId>, role: Role) -> (Vec<StmtId>, usize) {
        let id = self.alloc(i, parent, role);
        let body_end = self.stmt_end(i + 1, to);
        let body = self.block(i + 1, body_end, Some(id), Role::LoopBody);
        let semi = self.p.find_semicolon(body_end, to);
        let end = (semi + 1).min(to);
        self.finish(id, i, end, end);
        if self.t(body_end) == "while" && self.t(body_end + 1) == "(" {
            let rp = self.close(body_end + 1);
            self.header(id, body_end, rp + 1, StatementKind::Loop, body_end + 2, rp);
            let s = &mut self.stmts[id];
            s.line = self.p.toks[body_end].line;
            s.own_span = (self.p.toks[body_end].start, self.p.toks[rp].end);
        } else {
            self.stmts[id].kind = StatementKind::Loop;
            self.stmts[id].header = Some("do".into());
        }
        self.stmts[id].block = Block::Loop { kind: LoopKind::DoWhile, body };
        (vec![id], end)
    }

    fn try_stmt(&mut self, i: usize, to: usize, parent: Option<StmtId>, role: Role) -> (Vec<StmtId>, usize) {
        let id = self.alloc(i, parent, role);
        let mut j = i + 1;
        let mut header_end = i + 1;
        let mut resource_assigns = Vec::new();
        if self.t(j) == "(" {
            let rp = self.close(j);
            for (a, b) in split_top_level(self.p.src, &self.p.toks[j + 1..rp], ";") {
                if a < b {
                    if let Some(decl) = self.declaration(j + 1 + a, j + 1 + b) {
                        resource_assigns.extend(decl);
                    }
                }
            }
            header_end = rp + 1;
            j = rp + 1;
        }
        let mut body = Vec::new();
        if self.t(j) == "{" {
            let c = self.close(j);
            body = self.block(j + 1, c, Some(id), Role::TryBody);
            j = c + 1;
        }
        let mut catches = Vec::new();
        while j < to && self.t(j) == "catch" && self.t(j + 1) == "(" {
            let rp = self.close(j + 1);
            let params = &self.p.toks[j + 2..rp];
            let param = params
                .iter()
                .rev()
                .find(|t| t.kind == TokenKind::Ident && !is_keyword(t.text(self.p.src)))
                .map(|t| t.text(self.p.src).to_string())
                .unwrap_or_default();
            let types = params
                .iter()
                .filter(|t| t.kind == TokenKind::Ident && !is_keyword(t.text(self.p.src)))
                .map(|t| t.text(self.p.src).to_string())
                .filter(|t| *t != param)
                .collect();
            let line = self.p.toks[j].line;
            j = rp + 1;
            let mut cbody = Vec::new();
            if self.t(j) == "{" {
                let c = self.close(j);
                cbody = self.block(j + 1, c, Some(id), Role::Catch(param.clone()));
                j = c + 1;
            }
            catches.push(CatchClause { param, types, line, body: cbody });
        }
        let mut finally = None;
        if j < to && self.t(j) == "finally" && self.t(j + 1) == "{" {
            let c = self.close(j + 1);
            finally = Some(self.block(j + 2, c, Some(id), Role::Finally));
            j = c + 1;
        }
        let end = j.min(to);
        self.finish(id, i, end, header_end);
        let s = &mut self.stmts[id];
        s.kind = StatementKind::Try;
        s.header = Some(self.p.slice(i, header_end).to_string());
        for a in &resource_assigns {
            s.defs.insert(a.target.clone());
            s.uses.extend(a.uses.iter().cloned());
        }
        s.assigns = resource_assigns;
        s.block = Block::Try { body, catches, finally };
        (vec![id], end)
    }

    /// Sets kind, header text, uses and calls of a compound statement from
    /// the condition tokens `[cond_from, cond_to)`.
    fn header(&mut self, id: StmtId, from: usize, to: usize, kind: StatementKind, cond_from: usize, cond_to: usize) {
        let toks = &self.p.toks[cond_from..cond_to];
        let e = Expr::new(self.p.src, toks);
        let (uses, calls) = (e.vars(), e.invocations());
        let s = &mut self.stmts[id];
        s.kind = kind;
        s.header = Some(self.p.slice(from, to).to_string());
        s.uses = uses;
        s.calls = calls;
    }

    fn for_header(&mut self, id: StmtId, i: usize, rp: usize) -> LoopKind {
        self.header(id, i, rp + 1, StatementKind::Loop, i + 2, rp);
        let inner = (i + 2, rp);
        let parts = split_top_level(self.p.src, &self.p.toks[inner.0..inner.1], ";");
        if parts.len() == 1 {
            // for (T x : expr)
            let colon = (inner.0..inner.1).find(|&k| self.t(k) == ":");
            if let Some(colon) = colon {
                let var = (inner.0..colon).rev().find(|&k| self.p.is_ident(k) && !is_keyword(self.t(k)));
                let e = Expr::new(self.p.src, &self.p.toks[colon + 1..inner.1]);
                let uses = e.vars();
                let has_call = !e.invocations().is_empty() || e.has_creation();
                let calls = e.invocations().into_iter().map(|c| (c.name, c.arity)).collect();
                let s = &mut self.stmts[id];
                s.uses = uses.clone();
                if let Some(v) = var {
                    let target = self.p.t(v).to_string();
                    s.defs.insert(target.clone());
                    s.assigns.push(Assign { target, uses, has_call, calls });
                }
            }
            return LoopKind::ForEach;
        }
        let mut assigns = Vec::new();
        let (init, update) = (parts[0], parts.get(2).copied());
        if init.0 < init.1 {
            let (a, b) = (inner.0 + init.0, inner.0 + init.1);
            match self.declaration(a, b) {
                Some(d) => assigns.extend(d),
                None => {
                    for (x, y) in split_top_level(self.p.src, &self.p.toks[a..b], ",") {
                        assigns.extend(self.assignment(a + x, a + y));
                    }
                }
            }
        }
        if let Some(update) = update {
            let (a, b) = (inner.0 + update.0, inner.0 + update.1);
            for (x, y) in split_top_level(self.p.src, &self.p.toks[a..b], ",") {
                assigns.extend(self.assignment(a + x, a + y));
            }
        }
        let s = &mut self.stmts[id];
        for a in &assigns {
            s.defs.insert(a.target.clone());
            s.uses.extend(a.uses.iter().cloned());
        }
        s.assigns = assigns;
        LoopKind::For
    }

    /// Tries to read `[final] Type name [= init] {, name [= init]}` from `[a, b)`.
    fn declaration(&self, a: usize, b: usize) -> Option<Vec<Assign>> {
        let mut i = a;
        while i < b && (self.t(i) == "final" || self.t(i) == "@") {
            i = if self.t(i) == "@" { self.p.skip_annotation(i) } else { i + 1 };
        }
        // Type: Ident(.Ident)* [<...>] ([])*
        if !self.p.is_ident(i) || (is_keyword(self.t(i)) && !PRIMITIVES.contains(&self.t(i))) {
            return None;
        }
        i += 1;
        while self.t(i) == "." && self.p.is_ident(i + 1) {
            i += 2;
        }
        if self.t(i) == "<" {
            let mut depth = 0i32;
            while i < b {
                match self.t(i) {
                    "<" => depth += 1,
                    ">" => {
                        depth -= 1;
                        if depth == 0 {
                            i += 1;
                            break;
                        }
                    }
                    "(" | ")" | ";" | "=" => return None,
                    _ => {}
                }
                i += 1;
            }
            // Nested generics may close inside a qualified tail.
            while self.t(i) == "." && self.p.is_ident(i + 1) {
                i += 2;
            }
        }
        while self.t(i) == "[" && self.t(i + 1) == "]" {
            i += 2;
        }
        if i >= b || !self.p.is_ident(i) || is_keyword(self.t(i)) {
            return None;
        }
        if !matches!(self.t(i + 1), "=" | ";" | "," | "[" | ":") && i + 1 != b {
            return None;
        }
        let mut out = Vec::new();
        for (x, y) in split_top_level(self.p.src, &self.p.toks[i..b], ",") {
            let (x, y) = (i + x, i + y);
            if x >= y || !self.p.is_ident(x) {
                continue;
            }
            let name = self.t(x).to_string();
            if let Some(eq) = (x..y).find(|&k| self.t(k) == "=") {
                let e = Expr::new(self.p.src, &self.p.toks[eq + 1..y]);
                let invs = e.invocations();
                out.push(Assign {
                    target: name,
                    uses: e.vars(),
                    has_call: !invs.is_empty() || e.has_creation(),
                    calls: invs.into_iter().map(|c| (c.name, c.arity)).collect(),
                });
            }
        }
        Some(out)
    }

    /// Assignment or increment in `[a, b)`.
    fn assignment(&self, a: usize, b: usize) -> Option<Assign> {
        let toks = &self.p.toks[a..b];
        if toks.is_empty() {
            return None;
        }
        if let Some(op) = top_level_assignment(self.p.src, toks) {
            let lhs = &toks[..op];
            let rhs = Expr::new(self.p.src, &toks[op + 1..]);
            let compound = toks[op].text(self.p.src) != "=";
            let target = assign_target(self.p.src, lhs)?;
            let mut uses = rhs.vars();
            let lhs_e = Expr::new(self.p.src, lhs);
            if compound || lhs.len() > 1 {
                uses.extend(lhs_e.vars());
            }
            let invs = rhs.invocations();
            return Some(Assign {
                target,
                uses,
                has_call: !invs.is_empty() || rhs.has_creation(),
                calls: invs.into_iter().map(|c| (c.name, c.arity)).collect(),
            });
        }
        let texts: Vec<&str> = toks.iter().map(|t| t.text(self.p.src)).collect();
        let target = match texts.as_slice() {
            [v, "++" | "--"] | ["++" | "--", v] if toks.iter().any(|t| t.kind == TokenKind::Ident) => v.to_string(),
            _ => return None,
        };
        if is_keyword(&target) {
            return None;
        }
        let uses = BTreeSet::from([target.clone()]);
        Some(Assign { target, uses, has_call: false, calls: Vec::new() })
    }

    fn simple(&mut self, id: StmtId, from: usize, to: usize) {
        let mut end = to;
        if end > from && self.t(end - 1) == ";" {
            end -= 1;
        }
        let toks = &self.p.toks[from..end];
        let src = self.p.src;
        let first = self.t(from);
        let opaque_tokens = toks.iter().any(|t| matches!(t.text(src), "{" | "->"));
        let e = Expr::new(src, toks);

        let (kind, assigns, uses, calls): (StatementKind, Vec<Assign>, BTreeSet<String>, _) =
            if matches!(first, "return" | "throw") && !opaque_tokens {
                let e = Expr::new(src, &toks[1..]);
                let kind = if first == "return" { StatementKind::Return } else { StatementKind::Throw };
                (kind, Vec::new(), e.vars(), e.invocations())
            } else if opaque_tokens || is_opaque_head(first) || (self.p.is_ident(from) && self.t(from + 1) == ":") {
                self.note_nested_class_bodies(from, to);
                (StatementKind::Opaque, Vec::new(), e.all_identifiers(), e.invocations())
            } else if let Some(decl) = self.declaration(from, end) {
                let uses = decl.iter().flat_map(|a| a.uses.iter().cloned()).collect();
                (StatementKind::Declaration, decl, uses, e.invocations())
            } else if let Some(assign) = self.assignment(from, end) {
                let mut uses: BTreeSet<String> = assign.uses.clone();
                uses.extend(e.vars().into_iter().filter(|v| *v != assign.target || assign.uses.contains(v)));
                (StatementKind::Assignment, vec![assign], uses, e.invocations())
            } else {
                let invs = e.invocations();
                if !invs.is_empty() || e.has_creation() {
                    (StatementKind::Call, Vec::new(), e.vars(), invs)
                } else {
                    (StatementKind::Opaque, Vec::new(), e.all_identifiers(), invs)
                }
            };
        let s = &mut self.stmts[id];
        s.kind = kind;
        s.defs = assigns.iter().map(|a| a.target.clone()).collect();
        s.uses = uses;
        s.assigns = assigns;
        s.calls = calls;
    }

    /// Records `new T(...) { ... }` and local `class X { ... }` bodies so their
    /// methods are still extracted.
    fn note_nested_class_bodies(&mut self, from: usize, to: usize) {
        let mut k = from;
        while k < to {
            match self.t(k) {
                "new" => {
                    let mut j = k + 1;
                    while j < to && !matches!(self.t(j), "(" | "[" | "{" | ";") {
                        j += 1;
                    }
                    if j < to && self.t(j) == "(" {
                        let after = self.close(j) + 1;
                        if after < to && self.t(after) == "{" {
                            self.nested_scopes.push((after, self.close(after)));
                        }
                    }
                    k = j;
                }
                "class" if self.p.is_ident(k + 1) => {
                    let mut j = k;
                    while j < to && self.t(j) != "{" {
                        j += 1;
                    }
                    if j < to {
                        self.nested_scopes.push((j, self.close(j)));
                        k = self.close(j);
                    }
                }
                _ => {}
            }
            k += 1;
        }
    }
}

fn is_opaque_head(first: &str) -> bool {
    matches!(
        first,
        "switch"
            | "synchronized"
            | "break"
            | "continue"
            | "assert"
            | "yield"
            | "@"
            | "class"
            | "interface"
            | "enum"
            | "else"
            | "catch"
            | "finally"
            | "case"
            | "default"
    )
}

fn assign_target(src: &str, lhs: &[Token]) -> Option<String> {
    let first = lhs.first()?;
    if first.kind != TokenKind::Ident || is_keyword(first.text(src)) {
        return None;
    }
    match lhs.get(1).map(|t| t.text(src)) {
        None | Some("[") => Some(first.text(src).to_string()),
        _ => None,
    }
}
