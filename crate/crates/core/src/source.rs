//! Tolerant lexical model of partial code.
//!
//! Tokenization is total: any input produces a token stream whose lexemes
//! concatenate back to the input, with unknown characters surfaced as
//! [`TokenKind::Error`] tokens. Comments and string literals are single
//! tokens, so braces inside them never count as structure.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Keyword table for a statically-typed, brace-delimited language.
///
/// Swapping the table is enough to retarget the tokenizer; everything else is
/// punctuation-driven.
#[derive(Debug, Clone, Copy)]
pub struct Language {
    pub keywords: &'static [&'static str],
    /// Keywords that are really literal values (`true`, `null`, ...).
    pub literal_words: &'static [&'static str],
    /// Keywords that open a type declaration body (all map to `class`).
    pub type_decl_words: &'static [&'static str],
}

pub const JAVA: Language = Language {
    keywords: &[
        "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
        "const", "continue", "default", "do", "double", "else", "enum", "extends", "final",
        "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
        "interface", "long", "native", "new", "package", "private", "protected", "public",
        "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
        "throw", "throws", "transient", "try", "void", "volatile", "while",
    ],
    literal_words: &["true", "false", "null"],
    type_decl_words: &["class", "interface", "enum"],
};

impl Language {
    pub fn is_keyword(&self, word: &str) -> bool {
        self.keywords.contains(&word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Keyword,
    Identifier,
    Punct,
    Operator,
    Literal,
    Comment,
    Whitespace,
    Error,
}

impl TokenKind {
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Whitespace | TokenKind::Comment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Range<usize>,
    /// 1-based line of the token's first byte.
    pub line: usize,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_punct(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Punct, lexeme)
    }

    pub fn is_keyword(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Keyword, lexeme)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    /// 1-based.
    pub number: usize,
    /// Byte span including the terminating newline, if any.
    pub span: Range<usize>,
    /// Indentation column of the first non-blank character (tabs stop every 4).
    pub indent: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub text: String,
    pub lines: Vec<Line>,
    pub tokens: Vec<Token>,
}

impl SourceUnit {
    /// Line record containing byte `offset`.
    pub fn line_at(&self, offset: usize) -> Option<&Line> {
        let idx = self.lines.partition_point(|l| l.span.end <= offset);
        self.lines.get(idx)
    }

    pub fn significant_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| !t.kind.is_trivia())
    }
}

/// The six nested code block kinds, in their stable ordinal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Class,
    Method,
    If,
    For,
    While,
    Switch,
}

impl BlockKind {
    pub const ALL: [BlockKind; 6] = [
        BlockKind::Class,
        BlockKind::Method,
        BlockKind::If,
        BlockKind::For,
        BlockKind::While,
        BlockKind::Switch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Class => "class",
            BlockKind::Method => "method",
            BlockKind::If => "if",
            BlockKind::For => "for",
            BlockKind::While => "while",
            BlockKind::Switch => "switch",
        }
    }

    /// `<kind>_block_<k>`
    pub fn block_id(self, k: usize) -> String {
        format!("{}_block_{}", self.as_str(), k)
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown block kind `{0}`")]
pub struct UnknownBlockKind(pub String);

impl FromStr for BlockKind {
    type Err = UnknownBlockKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BlockKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownBlockKind(s.to_string()))
    }
}

/// Parses a block id of the form `<kind>_block_<k>` with `k >= 1`.
pub fn parse_block_id(s: &str) -> Option<(BlockKind, usize)> {
    let (kind, num) = s.split_once("_block_")?;
    let kind = kind.parse().ok()?;
    if num.is_empty() || num.starts_with('0') || !num.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((kind, num.parse().ok()?))
}

pub fn is_block_id(s: &str) -> bool {
    parse_block_id(s).is_some()
}

/// Replaces CRLF with LF, as done when loading input files.
pub fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n")
}

pub fn indent_width(line: &str) -> usize {
    let mut col = 0;
    for c in line.chars() {
        match c {
            ' ' => col += 1,
            '\t' => col = (col / 4 + 1) * 4,
            _ => break,
        }
    }
    col
}

fn build_lines(text: &str) -> Vec<Line> {
    let mut lines = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    while start < bytes.len() {
        let end = match text[start..].find('\n') {
            Some(i) => start + i + 1,
            None => bytes.len(),
        };
        let content = &text[start..end];
        let indent = if content.trim().is_empty() { 0 } else { indent_width(content) };
        lines.push(Line { number: lines.len() + 1, span: start..end, indent });
        start = end;
    }
    lines
}

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "=", "<", ">", "+", "-", "*", "/",
    "%", "!", "~", "?", "&", "|", "^",
];

const PUNCTS: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.', '@', ':'];

pub fn tokenize(text: &str) -> SourceUnit {
    tokenize_with(text, &JAVA)
}

pub fn tokenize_with(text: &str, lang: &Language) -> SourceUnit {
    let lines = build_lines(text);
    let mut tokens = Vec::new();
    let mut pos = 0;
    let mut line = 1;
    while pos < text.len() {
        let rest = &text[pos..];
        let (kind, len) = scan_token(rest, lang);
        debug_assert!(len > 0);
        let lexeme = &rest[..len];
        tokens.push(Token { kind, lexeme: lexeme.to_string(), span: pos..pos + len, line });
        line += lexeme.matches('\n').count();
        pos += len;
    }
    SourceUnit { text: text.to_string(), lines, tokens }
}

fn scan_token(rest: &str, lang: &Language) -> (TokenKind, usize) {
    let mut chars = rest.char_indices();
    let (_, c) = chars.next().expect("non-empty input");
    let first_len = c.len_utf8();

    if c.is_whitespace() {
        let len = rest.find(|ch: char| !ch.is_whitespace()).unwrap_or(rest.len());
        return (TokenKind::Whitespace, len);
    }
    if rest.starts_with("//") {
        let len = rest.find('\n').unwrap_or(rest.len());
        return (TokenKind::Comment, len);
    }
    if let Some(body) = rest.strip_prefix("/*") {
        let len = body.find("*/").map(|i| i + 4).unwrap_or(rest.len());
        return (TokenKind::Comment, len);
    }
    if c == '"' || c == '\'' {
        return scan_quoted(rest, c);
    }
    if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
        return (TokenKind::Literal, scan_number(rest));
    }
    if c.is_alphabetic() || c == '_' || c == '$' {
        let len = rest
            .find(|ch: char| !(ch.is_alphanumeric() || ch == '_' || ch == '$'))
            .unwrap_or(rest.len());
        let word = &rest[..len];
        let kind = if lang.literal_words.contains(&word) {
            TokenKind::Literal
        } else if lang.is_keyword(word) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        };
        return (kind, len);
    }
    if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
        return (TokenKind::Operator, op.len());
    }
    if PUNCTS.contains(&c) {
        return (TokenKind::Punct, first_len);
    }
    (TokenKind::Error, first_len)
}

/// String and char literals; an unterminated literal stops at the end of its
/// line and is reported as an error token.
fn scan_quoted(rest: &str, quote: char) -> (TokenKind, usize) {
    let mut escaped = false;
    for (i, ch) in rest.char_indices().skip(1) {
        if ch == '\n' {
            return (TokenKind::Error, i);
        }
        if escaped {
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == quote {
            return (TokenKind::Literal, i + ch.len_utf8());
        }
    }
    (TokenKind::Error, rest.len())
}

fn scan_number(rest: &str) -> usize {
    let bytes = rest.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let exp_sign = (b == b'+' || b == b'-')
            && i > 0
            && matches!(bytes[i - 1], b'e' | b'E')
            && !rest.starts_with("0x")
            && !rest.starts_with("0X");
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || exp_sign {
            i += 1;
        } else {
            break;
        }
    }
    i.max(1)
}

/// One detected block opener.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOpener {
    pub kind: BlockKind,
    /// From the first token of the declaration (modifiers included) to the end
    /// of the header proper (closing `)` or the token before `{`).
    pub header: Range<usize>,
    /// Byte offset just after `{`, or of the first body token when brace-less.
    pub body_start: usize,
    pub braced: bool,
    pub low_confidence: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Class,
    Method,
    Other,
}

/// Scans for block openers in source order.
///
/// Keyword blocks are found by keyword; methods by the shape
/// `identifier ( ... ) [throws ...] {` at class-member depth.
pub fn find_block_openers(unit: &SourceUnit) -> Vec<BlockOpener> {
    let toks: Vec<&Token> = unit.significant_tokens().collect();
    let mut out = Vec::new();
    let mut stack: Vec<Ctx> = Vec::new();
    // brace index -> context to push when we reach it
    let mut pending: Vec<(usize, Ctx)> = Vec::new();

    let mut i = 0;
    while i < toks.len() {
        let t = toks[i];
        if t.is_punct("{") {
            let ctx = match pending.iter().position(|(idx, _)| *idx == i) {
                Some(p) => pending.swap_remove(p).1,
                None => Ctx::Other,
            };
            stack.push(ctx);
            i += 1;
            continue;
        }
        if t.is_punct("}") {
            stack.pop();
            i += 1;
            continue;
        }

        let member_level = matches!(stack.last(), None | Some(Ctx::Class));

        if t.kind == TokenKind::Keyword && JAVA.type_decl_words.contains(&t.lexeme.as_str()) {
            let after_dot = i > 0 && toks[i - 1].is_punct(".");
            if !after_dot {
                if let Some(brace) = find_forward(&toks, i + 1, |x| x.is_punct("{"), |x| x.is_punct(";") || x.is_punct("}")) {
                    let start = decl_start(&toks, i);
                    out.push(BlockOpener {
                        kind: BlockKind::Class,
                        header: toks[start].span.start..toks[brace - 1].span.end,
                        body_start: toks[brace].span.end,
                        braced: true,
                        low_confidence: !toks.get(i + 1).is_some_and(|n| n.kind == TokenKind::Identifier),
                    });
                    pending.push((brace, Ctx::Class));
                    i += 1;
                    continue;
                }
            }
        }

        let keyword_kind = match t.lexeme.as_str() {
            "if" => Some(BlockKind::If),
            "for" => Some(BlockKind::For),
            "while" => Some(BlockKind::While),
            "switch" => Some(BlockKind::Switch),
            _ => None,
        };
        if let (Some(kind), TokenKind::Keyword) = (keyword_kind, t.kind) {
            let do_while = kind == BlockKind::While && i > 0 && toks[i - 1].is_punct("}");
            let (header_end, after) = match toks.get(i + 1) {
                Some(n) if n.is_punct("(") => match matching_paren(&toks, i + 1) {
                    Some(close) => (close, close + 1),
                    None => (toks.len() - 1, toks.len()),
                },
                _ => (i, i + 1),
            };
            let paren_ok = toks.get(i + 1).is_some_and(|n| n.is_punct("("));
            let braced = toks.get(after).is_some_and(|n| n.is_punct("{"));
            let body_start = match toks.get(after) {
                Some(n) if braced => n.span.end,
                Some(n) => n.span.start,
                None => unit.text.len(),
            };
            out.push(BlockOpener {
                kind,
                header: t.span.start..toks[header_end].span.end,
                body_start,
                braced,
                low_confidence: !paren_ok || do_while,
            });
            if braced {
                pending.push((after, Ctx::Other));
            }
            i += 1;
            continue;
        }

        if member_level && t.kind == TokenKind::Identifier {
            if let Some(brace) = method_shape(&toks, i) {
                let start = decl_start(&toks, i);
                out.push(BlockOpener {
                    kind: BlockKind::Method,
                    header: toks[start].span.start..toks[brace - 1].span.end,
                    body_start: toks[brace].span.end,
                    braced: true,
                    low_confidence: false,
                });
                pending.push((brace, Ctx::Method));
                i = brace;
                continue;
            }
        }
        i += 1;
    }
    out
}

fn find_forward(
    toks: &[&Token],
    from: usize,
    hit: impl Fn(&Token) -> bool,
    stop: impl Fn(&Token) -> bool,
) -> Option<usize> {
    (from..toks.len()).take_while(|&j| !stop(toks[j])).find(|&j| hit(toks[j]))
}

/// Index of the `)` matching the `(` at `open`.
pub(crate) fn matching_paren(toks: &[&Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (j, t) in toks.iter().enumerate().skip(open) {
        if t.is_punct("(") {
            depth += 1;
        } else if t.is_punct(")") {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        } else if t.is_punct("{") || t.is_punct("}") || t.is_punct(";") && depth == 0 {
            return None;
        }
    }
    None
}

/// `name ( params ) [throws A, B] {` starting at the identifier `i`; returns
/// the index of the `{`.
fn method_shape(toks: &[&Token], i: usize) -> Option<usize> {
    if !toks.get(i + 1)?.is_punct("(") {
        return None;
    }
    if i > 0 {
        let prev = toks[i - 1];
        let bad_prev = prev.is_keyword("new")
            || prev.is_punct(".")
            || prev.kind == TokenKind::Operator
            || prev.is_keyword("return")
            || prev.is_punct("(")
            || prev.is_punct(",");
        if bad_prev {
            return None;
        }
    }
    let close = matching_paren(toks, i + 1)?;
    let mut j = close + 1;
    if toks.get(j)?.is_keyword("throws") {
        j += 1;
        while j < toks.len() && (toks[j].kind == TokenKind::Identifier || toks[j].is_punct(",") || toks[j].is_punct(".")) {
            j += 1;
        }
    }
    toks.get(j)?.is_punct("{").then_some(j)
}

/// Walks back from `i` over modifiers, types and annotations to the start of
/// the declaration.
fn decl_start(toks: &[&Token], i: usize) -> usize {
    let mut j = i;
    while j > 0 {
        let p = toks[j - 1];
        let boundary = p.is_punct(";") || p.is_punct("{") || p.is_punct("}") || is_block_id(&p.lexeme);
        if boundary {
            break;
        }
        // annotation arguments such as `@Foo(x)`
        if p.is_punct(")") {
            let mut depth = 0usize;
            let mut k = j - 1;
            loop {
                if toks[k].is_punct(")") {
                    depth += 1;
                } else if toks[k].is_punct("(") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                if k == 0 {
                    return j;
                }
                k -= 1;
            }
            if k >= 2 && toks[k - 2].is_punct("@") {
                j = k - 2;
                continue;
            }
            break;
        }
        j -= 1;
    }
    j
}

/// Canonical label form used for matching: whitespace runs collapse to one
/// space, ends are trimmed and trailing `;` are stripped.
pub fn normalize_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for word in label.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    loop {
        let trimmed = out.trim_end();
        let Some(stripped) = trimmed.strip_suffix(';') else {
            let len = trimmed.len();
            out.truncate(len);
            break;
        };
        let len = stripped.len();
        out.truncate(len);
    }
    out
}
