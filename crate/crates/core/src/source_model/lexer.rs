//! Tolerant Java tokenizer.
//!
//! Comments and whitespace are dropped; every token keeps its byte span and
//! 1-based line so callers can slice verbatim text out of the original source.
//! Malformed input never fails here: an unterminated string stops at the end
//! of its line and an unterminated block comment runs to the end of the file.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    StringLit,
    TextBlock,
    CharLit,
    Number,
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    pub line: u32,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_string(&self) -> bool {
        matches!(self.kind, TokenKind::StringLit | TokenKind::TextBlock)
    }

    pub fn is_literal(&self) -> bool {
        matches!(self.kind, TokenKind::StringLit | TokenKind::TextBlock | TokenKind::CharLit | TokenKind::Number)
    }
}

// Longest first.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<",
];

pub fn tokenize(src: &str) -> Vec<Token> {
    Lexer { src, bytes: src.as_bytes(), pos: 0, line: 1, tokens: Vec::new() }.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    tokens: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Vec<Token> {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            match b {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' | 0x0c => self.pos += 1,
                b'/' if self.peek(1) == Some(b'/') => self.skip_line_comment(),
                b'/' if self.peek(1) == Some(b'*') => self.skip_block_comment(),
                b'"' if self.peek(1) == Some(b'"') && self.peek(2) == Some(b'"') => self.text_block(),
                b'"' => self.quoted(b'"', TokenKind::StringLit),
                b'\'' => self.quoted(b'\'', TokenKind::CharLit),
                b'0'..=b'9' => self.number(),
                b'.' if matches!(self.peek(1), Some(b'0'..=b'9')) => self.number(),
                _ if b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80 => self.ident(),
                _ => self.punct(),
            }
        }
        self.tokens
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: u32) {
        self.tokens.push(Token { kind, start, end: self.pos, line });
    }

    fn skip_line_comment(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
    }

    fn skip_block_comment(&mut self) {
        self.pos += 2;
        while self.pos < self.bytes.len() {
            if self.bytes[self.pos] == b'*' && self.peek(1) == Some(b'/') {
                self.pos += 2;
                return;
            }
            if self.bytes[self.pos] == b'\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
    }

    fn text_block(&mut self) {
        let (start, line) = (self.pos, self.line);
        self.pos += 3;
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'\\' => self.pos += 2,
                b'"' if self.peek(1) == Some(b'"') && self.peek(2) == Some(b'"') => {
                    self.pos += 3;
                    break;
                }
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                _ => self.pos += 1,
            }
        }
        self.pos = self.pos.min(self.bytes.len());
        self.push(TokenKind::TextBlock, start, line);
    }

    fn quoted(&mut self, quote: u8, kind: TokenKind) {
        let (start, line) = (self.pos, self.line);
        self.pos += 1;
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'\\' => self.pos += 2,
                b'\n' => break,
                c if c == quote => {
                    self.pos += 1;
                    break;
                }
                _ => self.pos += 1,
            }
        }
        self.pos = self.pos.min(self.bytes.len());
        self.push(kind, start, line);
    }

    fn number(&mut self) {
        let (start, line) = (self.pos, self.line);
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            let exponent_sign = (c == b'+' || c == b'-')
                && matches!(self.bytes[self.pos - 1], b'e' | b'E' | b'p' | b'P')
                && !self.src[start..self.pos].starts_with("0x");
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || exponent_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.push(TokenKind::Number, start, line);
    }

    fn ident(&mut self) {
        let (start, line) = (self.pos, self.line);
        let rest = &self.src[self.pos..];
        let len: usize = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_alphanumeric() || c == '_' || c == '$'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        // A stray non-identifier multi-byte char still has to make progress.
        self.pos += len.max(rest.chars().next().map_or(1, char::len_utf8));
        self.push(TokenKind::Ident, start, line);
    }

    fn punct(&mut self) {
        let (start, line) = (self.pos, self.line);
        let rest = &self.src[self.pos..];
        let len = OPERATORS
            .iter()
            .find(|op| rest.starts_with(*op))
            .map(|op| op.len())
            .unwrap_or_else(|| rest.chars().next().map_or(1, char::len_utf8));
        self.pos += len;
        self.push(TokenKind::Punct, start, line);
    }
}

pub const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
    "var",
    "yield",
    "record",
];

pub const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "double", "float", "int", "long", "short", "void", "var"];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}
