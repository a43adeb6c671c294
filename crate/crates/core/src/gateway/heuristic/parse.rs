//! Tolerant, indentation-aware parser for partial code.
//!
//! Braces are trusted when present; when they are missing or unbalanced the
//! layout decides. A token that starts a line left of a block's body column
//! closes that block, and a `}` left of the header column belongs to an
//! enclosing block. Unbraced bodies take every following line at or right of
//! their first line's column.

use std::ops::Range;

use crate::source::{is_block_id, tokenize, BlockKind, SourceUnit, Token, TokenKind};

const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub kind: ItemKind,
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemKind {
    Stmt(String),
    Jump(Jump, String),
    Placeholder(String),
    Block(Box<Block>),
    /// A bare `{ ... }`, or the body of `try`/`do`; its items run in line.
    Inline(Vec<Item>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Jump {
    Return,
    Throw,
    Break,
    Continue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub shape: Shape,
    /// Line of the first header token (1-based).
    pub line: usize,
    /// Line of the last token.
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    If { arms: Vec<(String, Vec<Item>)>, otherwise: Option<Vec<Item>> },
    For { header: ForHeader, body: Vec<Item> },
    While { cond: String, body: Vec<Item> },
    Switch { subject: String, groups: Vec<Group> },
    Method { signature: String, body: Vec<Item> },
    Class { header: String, members: Vec<Item> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForHeader {
    Classic { init: Option<String>, cond: Option<String>, update: Option<String> },
    Each(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub labels: Vec<String>,
    pub body: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub items: Vec<Item>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy)]
struct Tok<'a> {
    t: &'a Token,
    first_on_line: bool,
    indent: usize,
}

impl Tok<'_> {
    fn lx(&self) -> &str {
        &self.t.lexeme
    }
    fn punct(&self, p: &str) -> bool {
        self.t.is_punct(p)
    }
    fn kw(&self, k: &str) -> bool {
        self.t.is_keyword(k)
    }
    fn line(&self) -> usize {
        self.t.line
    }
}

/// Parses `text`. `base_indent` overrides the column of the first line, for
/// block texts cut out of the middle of a line.
pub fn parse(text: &str, base_indent: Option<usize>) -> Parsed {
    let unit = tokenize(text);
    let mut p = Parser::new(&unit, base_indent);
    let items = p.items_top();
    Parsed { items, warnings: p.warnings }
}

struct Parser<'a> {
    unit: &'a SourceUnit,
    toks: Vec<Tok<'a>>,
    pos: usize,
    depth: usize,
    warnings: Vec<String>,
}

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "strictfp", "native",
    "synchronized", "transient", "volatile",
];

const STMT_STOP_KEYWORDS: &[&str] = &[
    "if", "for", "while", "switch", "do", "return", "throw", "break", "continue", "case",
    "default", "else", "try",
];

const PRIMITIVES: &[&str] = &["int", "long", "short", "byte", "char", "boolean", "float", "double", "void"];

impl<'a> Parser<'a> {
    fn new(unit: &'a SourceUnit, base_indent: Option<usize>) -> Self {
        let mut toks = Vec::new();
        let mut last_line = 0;
        for t in unit.significant_tokens() {
            let indent = match (t.line, base_indent) {
                (1, Some(b)) => b,
                _ => unit.lines.get(t.line - 1).map_or(0, |l| l.indent),
            };
            toks.push(Tok { t, first_on_line: t.line != last_line, indent });
            last_line = t.line;
        }
        Parser { unit, toks, pos: 0, depth: 0, warnings: Vec::new() }
    }

    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<Tok<'a>> {
        self.toks.get(self.pos + k).copied()
    }

    fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    fn start(&self) -> usize {
        self.peek().map_or(self.unit.text.len(), |t| t.t.span.start)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].t.span.end
        }
    }

    /// Source text of tokens `[a, b)` with comments dropped and whitespace
    /// collapsed.
    fn text_of(&self, a: usize, b: usize) -> String {
        if a >= b {
            return String::new();
        }
        let lo = self.toks[a].t.span.start;
        let hi = self.toks[b - 1].t.span.end;
        let mut out = String::new();
        for t in &self.unit.tokens {
            if t.span.start < lo || t.span.end > hi {
                continue;
            }
            match t.kind {
                TokenKind::Comment => out.push(' '),
                _ => out.push_str(&t.lexeme),
            }
        }
        crate::source::normalize_label(&out)
    }

    fn items_top(&mut self) -> Vec<Item> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            if t.punct("}") {
                self.warn(format!("line {}: unmatched `}}`", t.line()));
                self.pos += 1;
                continue;
            }
            let before = self.pos;
            if let Some(item) = self.item(true) {
                items.push(item);
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        items
    }

    /// One item starting at the current token. Returns `None` for tokens that
    /// produce nothing (empty statements, imports, stray keywords).
    fn item(&mut self, member_level: bool) -> Option<Item> {
        let t = self.peek()?;
        if self.depth >= MAX_DEPTH {
            if t.punct("{") {
                return Some(self.opaque());
            }
            let (a, b) = self.statement();
            return (b > a).then(|| Item { kind: ItemKind::Stmt(self.text_of(a, b)), span: t.t.span.start..self.prev_end() });
        }
        self.depth += 1;
        let item = self.item_inner(member_level, t);
        self.depth -= 1;
        item
    }

    fn item_inner(&mut self, member_level: bool, t: Tok<'a>) -> Option<Item> {
        let start = t.t.span.start;
        if t.punct(";") {
            self.pos += 1;
            return None;
        }
        if t.kw("package") || t.kw("import") {
            self.statement();
            return None;
        }
        if t.kw("else") {
            self.warn(format!("line {}: `else` without `if`", t.line()));
            self.pos += 1;
            return None;
        }
        if t.kw("case") || t.kw("default") {
            self.warn(format!("line {}: `{}` outside switch", t.line(), t.lx()));
            self.case_label();
            return None;
        }
        if t.punct("{") {
            self.pos += 1;
            let (items, _) = self.braced_body(t.indent, t.line(), member_level);
            return Some(Item { kind: ItemKind::Inline(items), span: start..self.prev_end() });
        }
        if t.kw("do") || t.kw("try") || t.kw("finally") {
            self.pos += 1;
            let body = self.body(t.indent, t.line(), "do");
            return Some(Item { kind: ItemKind::Inline(body), span: start..self.prev_end() });
        }
        if t.kw("catch") {
            self.pos += 1;
            if self.peek().is_some_and(|n| n.punct("(")) {
                self.paren_group();
            }
            let body = self.body(t.indent, t.line(), "catch");
            return Some(Item { kind: ItemKind::Inline(body), span: start..self.prev_end() });
        }
        if t.t.kind == TokenKind::Identifier && is_block_id(t.lx()) && self.placeholder_ok() {
            self.pos += 1;
            return Some(Item { kind: ItemKind::Placeholder(t.lx().to_string()), span: start..self.prev_end() });
        }
        if let Some(item) = self.block(member_level) {
            return Some(item);
        }
        let jump = match t.lx() {
            "return" if t.t.kind == TokenKind::Keyword => Some(Jump::Return),
            "throw" if t.t.kind == TokenKind::Keyword => Some(Jump::Throw),
            "break" if t.t.kind == TokenKind::Keyword => Some(Jump::Break),
            "continue" if t.t.kind == TokenKind::Keyword => Some(Jump::Continue),
            _ => None,
        };
        let (a, b) = self.statement();
        if self.pos == a {
            return None;
        }
        let label = self.text_of(a, b);
        let span = start..self.prev_end();
        Some(match jump {
            Some(j) => Item { kind: ItemKind::Jump(j, label), span },
            None => Item { kind: ItemKind::Stmt(label), span },
        })
    }

    fn placeholder_ok(&self) -> bool {
        match self.peek_at(1) {
            None => true,
            Some(n) => {
                let blocked = n.punct(".") || n.punct("(") || n.punct("[") || n.t.kind == TokenKind::Operator;
                !blocked
            }
        }
    }

    /// Consumes a balanced `{...}` as one opaque statement (nesting cap).
    fn opaque(&mut self) -> Item {
        let start = self.start();
        let a = self.pos;
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            self.pos += 1;
            if t.punct("{") {
                depth += 1;
            } else if t.punct("}") {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    break;
                }
            }
        }
        self.warn("nesting too deep; block kept as one statement".into());
        Item { kind: ItemKind::Stmt(self.text_of(a, self.pos)), span: start..self.prev_end() }
    }

    fn case_label(&mut self) -> String {
        let a = self.pos;
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            if t.punct("(") {
                depth += 1;
            } else if t.punct(")") {
                depth = depth.saturating_sub(1);
            } else if depth == 0 && (t.punct(":") || t.lx() == "->") {
                let label = self.text_of(a, self.pos);
                self.pos += 1;
                return label;
            } else if (depth == 0 && (t.punct(";") || t.punct("{") || t.punct("}"))) || (self.pos > a && t.first_on_line) {
                break;
            }
            self.pos += 1;
        }
        self.text_of(a, self.pos)
    }

    /// Token range `[a, b)` of a simple statement; the trailing `;` is
    /// consumed but excluded.
    fn statement(&mut self) -> (usize, usize) {
        let a = self.pos;
        let Some(first) = self.peek() else { return (a, a) };
        let base = first.indent;
        let mut parens = 0usize;
        let mut allow_brace = false;
        while let Some(t) = self.peek() {
            if self.pos > a {
                if t.first_on_line && (t.indent < base || (parens == 0 && t.indent <= base)) {
                    break;
                }
                if parens == 0 && t.t.kind == TokenKind::Keyword && STMT_STOP_KEYWORDS.contains(&t.lx()) {
                    break;
                }
            }
            match t.lx() {
                ";" if t.t.kind == TokenKind::Punct && parens == 0 => {
                    let b = self.pos;
                    self.pos += 1;
                    return (a, b);
                }
                "(" | "[" if t.t.kind == TokenKind::Punct => parens += 1,
                ")" | "]" if t.t.kind == TokenKind::Punct => parens = parens.saturating_sub(1),
                "}" if t.t.kind == TokenKind::Punct => break,
                "{" if t.t.kind == TokenKind::Punct => {
                    if !(allow_brace || parens > 0) {
                        break;
                    }
                    self.skip_braces();
                    continue;
                }
                "=" | "->" | "new" => allow_brace = true,
                _ => {}
            }
            self.pos += 1;
        }
        (a, self.pos)
    }

    fn skip_braces(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            self.pos += 1;
            if t.punct("{") {
                depth += 1;
            } else if t.punct("}") {
                depth -= 1;
                if depth == 0 {
                    return;
                }
            }
        }
    }

    /// Consumes `( ... )` starting at the current `(`; returns the inner token
    /// range. Without a matching `)` the group ends at the line end or at a
    /// `{`.
    fn paren_group(&mut self) -> (usize, usize) {
        let open = self.pos;
        let line = self.toks[open].line();
        self.pos += 1;
        let a = self.pos;
        let mut depth = 1usize;
        while let Some(t) = self.peek() {
            if t.punct("(") {
                depth += 1;
            } else if t.punct(")") {
                depth -= 1;
                if depth == 0 {
                    let b = self.pos;
                    self.pos += 1;
                    return (a, b);
                }
            } else if t.punct("{") || t.punct("}") || (t.line() != line && t.first_on_line) {
                break;
            }
            self.pos += 1;
        }
        self.warn(format!("line {line}: unclosed `(`"));
        (a, self.pos)
    }

    fn block(&mut self, member_level: bool) -> Option<Item> {
        let t = self.peek()?;
        let next_paren = self.peek_at(1).is_some_and(|n| n.punct("("));
        if t.t.kind == TokenKind::Keyword && next_paren {
            let kind = match t.lx() {
                "if" => Some(BlockKind::If),
                "for" => Some(BlockKind::For),
                "while" => Some(BlockKind::While),
                "switch" => Some(BlockKind::Switch),
                _ => None,
            };
            if let Some(kind) = kind {
                return Some(self.keyword_block(kind));
            }
        }
        if let Some(brace) = self.class_shape() {
            return Some(self.class_block(brace));
        }
        if member_level {
            if let Some(brace) = self.method_shape() {
                return Some(self.method_block(brace));
            }
        }
        None
    }

    /// Skips modifiers and annotations from the current position.
    fn after_modifiers(&self) -> usize {
        let mut i = self.pos;
        loop {
            match self.toks.get(i) {
                Some(t) if t.t.kind == TokenKind::Keyword && MODIFIERS.contains(&t.lx()) => i += 1,
                Some(t) if t.punct("@") && self.toks.get(i + 1).is_some_and(|n| n.t.kind == TokenKind::Identifier) => {
                    i += 2;
                    if self.toks.get(i).is_some_and(|n| n.punct("(")) {
                        let mut depth = 0usize;
                        while let Some(t) = self.toks.get(i) {
                            i += 1;
                            if t.punct("(") {
                                depth += 1;
                            } else if t.punct(")") {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                        }
                    }
                }
                _ => return i,
            }
        }
    }

    fn class_shape(&self) -> Option<usize> {
        let i = self.after_modifiers();
        let kw = self.toks.get(i)?;
        let is_decl = kw.t.kind == TokenKind::Keyword && crate::source::JAVA.type_decl_words.contains(&kw.lx());
        if !is_decl || self.toks.get(i + 1)?.t.kind != TokenKind::Identifier {
            return None;
        }
        (i + 2..self.toks.len())
            .take_while(|&j| !(self.toks[j].punct(";") || self.toks[j].punct("}")))
            .find(|&j| self.toks[j].punct("{"))
    }

    fn method_shape(&self) -> Option<usize> {
        let first = self.peek()?;
        if first.t.kind == TokenKind::Keyword && !MODIFIERS.contains(&first.lx()) && !PRIMITIVES.contains(&first.lx()) {
            return None;
        }
        let mut j = self.after_modifiers();
        let mut prev_ident = false;
        while let Some(t) = self.toks.get(j) {
            if t.punct("(") {
                break;
            }
            let typeish = t.t.kind == TokenKind::Identifier
                || (t.t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.lx()))
                || t.punct("[")
                || t.punct("]")
                || t.punct(".");
            if !typeish {
                return None;
            }
            prev_ident = t.t.kind == TokenKind::Identifier;
            j += 1;
        }
        if !prev_ident || j < 1 || self.toks.get(j.wrapping_sub(2)).is_some_and(|p| p.punct(".")) {
            return None;
        }
        let mut depth = 0usize;
        let mut k = j;
        loop {
            let t = self.toks.get(k)?;
            if t.punct("(") {
                depth += 1;
            } else if t.punct(")") {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            } else if t.punct("{") || t.punct("}") || t.punct(";") {
                return None;
            }
            k += 1;
        }
        k += 1;
        if self.toks.get(k).is_some_and(|t| t.kw("throws")) {
            k += 1;
            while self.toks.get(k).is_some_and(|t| t.t.kind == TokenKind::Identifier || t.punct(",") || t.punct(".")) {
                k += 1;
            }
        }
        self.toks.get(k)?.punct("{").then_some(k)
    }

    fn class_block(&mut self, brace: usize) -> Item {
        let first = self.peek().unwrap();
        let start = first.t.span.start;
        let header = self.text_of(self.pos, brace);
        self.pos = brace + 1;
        let (members, _) = self.braced_body(first.indent, first.line(), true);
        self.finish(BlockKind::Class, Shape::Class { header, members }, start, first.line())
    }

    fn method_block(&mut self, brace: usize) -> Item {
        let first = self.peek().unwrap();
        let start = first.t.span.start;
        let signature = self.text_of(self.pos, brace);
        self.pos = brace + 1;
        let (body, _) = self.braced_body(first.indent, first.line(), false);
        self.finish(BlockKind::Method, Shape::Method { signature, body }, start, first.line())
    }

    fn finish(&self, kind: BlockKind, shape: Shape, start: usize, line: usize) -> Item {
        let end_line = if self.pos == 0 { line } else { self.toks[self.pos - 1].line() };
        Item {
            kind: ItemKind::Block(Box::new(Block { kind, shape, line, end_line })),
            span: start..self.prev_end(),
        }
    }

    fn keyword_block(&mut self, kind: BlockKind) -> Item {
        let kw = self.peek().unwrap();
        let start = kw.t.span.start;
        let h = kw.indent;
        self.pos += 1;
        let (a, b) = self.paren_group();
        let header_line = self.toks[self.pos - 1].line();
        let shape = match kind {
            BlockKind::If => {
                let mut arms = vec![(self.text_of(a, b), self.body(h, header_line, "if"))];
                let mut otherwise = None;
                while let Some(e) = self.peek() {
                    if !(e.kw("else") && (!e.first_on_line || e.indent >= h)) {
                        break;
                    }
                    self.pos += 1;
                    let is_elif = self.peek().is_some_and(|n| n.kw("if")) && self.peek_at(1).is_some_and(|n| n.punct("("));
                    if is_elif {
                        self.pos += 1;
                        let (a, b) = self.paren_group();
                        let line = self.toks[self.pos - 1].line();
                        arms.push((self.text_of(a, b), self.body(h, line, "else if")));
                    } else {
                        otherwise = Some(self.body(h, e.line(), "else"));
                        break;
                    }
                }
                Shape::If { arms, otherwise }
            }
            BlockKind::For => {
                let header = self.for_header(a, b);
                Shape::For { header, body: self.body(h, header_line, "for") }
            }
            BlockKind::While => {
                let cond = self.text_of(a, b);
                Shape::While { cond, body: self.body(h, header_line, "while") }
            }
            _ => {
                let subject = self.text_of(a, b);
                let groups = self.switch_body(h);
                Shape::Switch { subject, groups }
            }
        };
        self.finish(kind, shape, start, kw.line())
    }

    /// Body after a header whose last token is on `header_line`.
    fn body(&mut self, h: usize, header_line: usize, what: &str) -> Vec<Item> {
        let Some(t) = self.peek() else { return Vec::new() };
        if t.punct(";") {
            let adopt = match self.peek_at(1) {
                Some(n) if n.punct("{") => true,
                Some(n) => {
                    n.first_on_line
                        && n.indent > h
                        && !(n.punct("}") || n.kw("else") || n.kw("case") || n.kw("default"))
                }
                None => false,
            };
            self.pos += 1;
            if !adopt {
                return Vec::new();
            }
            self.warn(format!(
                "line {}: empty statement after `{what}` header; following block adopted as body",
                t.line()
            ));
        }
        let t = match self.peek() {
            Some(t) => t,
            None => return Vec::new(),
        };
        if t.punct("{") {
            self.pos += 1;
            return self.braced_body(h, t.line(), false).0;
        }
        self.unbraced_body(h, header_line)
    }

    /// Items up to the closing `}` (consumed) or an implicit close. Returns
    /// whether a `}` closed the body.
    fn braced_body(&mut self, h: usize, open_line: usize, member_level: bool) -> (Vec<Item>, bool) {
        let b = match self.peek() {
            Some(t) if t.line() != open_line => t.indent,
            _ => h + 1,
        };
        let mut items = Vec::new();
        loop {
            let Some(t) = self.peek() else {
                self.warn(format!("block opened on line {open_line} is not closed"));
                return (items, false);
            };
            if t.punct("}") {
                if t.first_on_line && t.indent < h {
                    self.warn(format!("line {}: missing `}}` for block opened on line {open_line}", t.line()));
                    return (items, false);
                }
                self.pos += 1;
                return (items, true);
            }
            if t.first_on_line && t.indent < b {
                self.warn(format!("line {}: missing `}}` for block opened on line {open_line}", t.line()));
                return (items, false);
            }
            let before = self.pos;
            if let Some(item) = self.item(member_level) {
                items.push(item);
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
    }

    fn stops_unbraced(t: &Tok) -> bool {
        t.punct("}") || t.kw("else") || t.kw("case") || t.kw("default")
    }

    fn unbraced_body(&mut self, h: usize, header_line: usize) -> Vec<Item> {
        let Some(first) = self.peek() else { return Vec::new() };
        if Self::stops_unbraced(&first) {
            return Vec::new();
        }
        let same_line = first.line() == header_line;
        let b = if same_line { h + 1 } else { first.indent };
        let single = !same_line && b <= h;
        let mut items = Vec::new();
        let mut count = 0;
        while let Some(t) = self.peek() {
            if count > 0 && (single || Self::stops_unbraced(&t) || !t.first_on_line || t.indent < b) {
                break;
            }
            let before = self.pos;
            if let Some(item) = self.item(false) {
                items.push(item);
            }
            if self.pos == before {
                self.pos += 1;
            }
            count += 1;
        }
        if items.len() > 1 {
            self.warn(format!("line {}: unbraced body spans {} statements", first.line(), items.len()));
        }
        items
    }

    fn switch_body(&mut self, h: usize) -> Vec<Group> {
        let mut groups: Vec<Group> = Vec::new();
        let Some(open) = self.peek() else { return groups };
        if open.punct(";") {
            self.pos += 1;
        }
        if !self.peek().is_some_and(|t| t.punct("{")) {
            self.warn(format!("line {}: switch without body", open.line()));
            return groups;
        }
        let open_line = self.peek().unwrap().line();
        self.pos += 1;
        let b = match self.peek() {
            Some(t) if t.line() != open_line => t.indent,
            _ => h + 1,
        };
        while let Some(t) = self.peek() {
            if t.punct("}") {
                if !(t.first_on_line && t.indent < h) {
                    self.pos += 1;
                }
                break;
            }
            if t.first_on_line && t.indent < b {
                self.warn(format!("line {}: missing `}}` for switch", t.line()));
                break;
            }
            if t.kw("case") || t.kw("default") {
                let label = self.case_label();
                match groups.last_mut() {
                    Some(g) if g.body.is_empty() => g.labels.push(label),
                    _ => groups.push(Group { labels: vec![label], body: Vec::new() }),
                }
                continue;
            }
            let before = self.pos;
            if let Some(item) = self.item(false) {
                if groups.is_empty() {
                    groups.push(Group { labels: Vec::new(), body: Vec::new() });
                }
                groups.last_mut().unwrap().body.push(item);
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        groups
    }

    fn is_operand_end(t: &Tok) -> bool {
        matches!(t.t.kind, TokenKind::Identifier | TokenKind::Literal)
            || t.punct(")")
            || t.punct("]")
            || t.lx() == "++"
            || t.lx() == "--"
    }

    fn is_operand_start(t: &Tok) -> bool {
        matches!(t.t.kind, TokenKind::Identifier | TokenKind::Literal)
            || t.punct("(")
            || t.kw("new")
            || t.kw("this")
            || t.lx() == "!"
    }

    /// Last index `j` in `[a, b)` such that a statement boundary lies between
    /// `j` and `j + 1`.
    fn missing_semicolon_split(&self, a: usize, b: usize) -> Option<usize> {
        let mut found = None;
        for j in a..b.saturating_sub(1) {
            let (x, y) = (&self.toks[j], &self.toks[j + 1]);
            if !(Self::is_operand_end(x) && Self::is_operand_start(y)) {
                continue;
            }
            let decl_head = j == a || self.toks[j - 1].punct(",") || self.toks[j - 1].kw("final");
            let type_name = y.t.kind == TokenKind::Identifier
                && ((x.t.kind == TokenKind::Identifier && decl_head)
                    || (x.punct("]") && j > a && self.toks[j - 1].punct("[")));
            if !type_name {
                found = Some(j);
            }
        }
        found
    }

    fn for_header(&mut self, a: usize, b: usize) -> ForHeader {
        let mut parts: Vec<(usize, usize)> = Vec::new();
        let mut depth = 0usize;
        let mut from = a;
        let mut colon = None;
        for j in a..b {
            let t = &self.toks[j];
            if t.punct("(") || t.punct("[") {
                depth += 1;
            } else if t.punct(")") || t.punct("]") {
                depth = depth.saturating_sub(1);
            } else if depth == 0 && t.punct(";") {
                parts.push((from, j));
                from = j + 1;
            } else if depth == 0 && t.punct(":") && colon.is_none() {
                colon = Some(j);
            }
        }
        parts.push((from, b));
        if parts.len() == 1 && colon.is_some() {
            return ForHeader::Each(self.text_of(a, b));
        }
        let line = self.toks.get(a).map_or(0, |t| t.line());
        if parts.len() < 3 {
            self.warn(format!("line {line}: `for` header has {} parts; splitting at a missing `;`", parts.len()));
        }
        while parts.len() < 3 {
            let split = parts
                .iter()
                .enumerate()
                .find_map(|(i, &(x, y))| self.missing_semicolon_split(x, y).map(|j| (i, j)));
            match split {
                Some((i, j)) => {
                    let (x, y) = parts[i];
                    parts[i] = (x, j + 1);
                    parts.insert(i + 1, (j + 1, y));
                }
                None => break,
            }
        }
        while parts.len() > 3 {
            let (_, y) = parts.pop().unwrap();
            let last = parts.last_mut().unwrap();
            last.1 = y;
        }
        let text = |p: Option<&(usize, usize)>| p.map(|&(x, y)| self.text_of(x, y)).filter(|s| !s.is_empty());
        ForHeader::Classic { init: text(parts.first()), cond: text(parts.get(1)), update: text(parts.get(2)) }
    }
}

/// One entry of a pre-order walk over the block tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSite {
    pub kind: BlockKind,
    pub depth: usize,
    /// Index of the parent in the walk.
    pub parent: Option<usize>,
    pub span: Range<usize>,
    pub lines: (usize, usize),
}

/// Pre-order list of blocks in `items`.
pub fn block_sites(items: &[Item]) -> Vec<BlockSite> {
    fn walk(items: &[Item], depth: usize, parent: Option<usize>, out: &mut Vec<BlockSite>) {
        for item in items {
            match &item.kind {
                ItemKind::Block(b) => {
                    let idx = out.len();
                    out.push(BlockSite {
                        kind: b.kind,
                        depth,
                        parent,
                        span: item.span.clone(),
                        lines: (b.line, b.end_line),
                    });
                    for child in b.children() {
                        walk(child, depth + 1, Some(idx), out);
                    }
                }
                ItemKind::Inline(inner) => walk(inner, depth, parent, out),
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    walk(items, 1, None, &mut out);
    out
}

impl Block {
    /// Item lists nested directly in this block.
    pub fn children(&self) -> Vec<&[Item]> {
        match &self.shape {
            Shape::If { arms, otherwise } => {
                let mut v: Vec<&[Item]> = arms.iter().map(|(_, b)| b.as_slice()).collect();
                v.extend(otherwise.as_deref());
                v
            }
            Shape::For { body, .. } | Shape::While { body, .. } | Shape::Method { body, .. } => vec![body],
            Shape::Switch { groups, .. } => groups.iter().map(|g| g.body.as_slice()).collect(),
            Shape::Class { members, .. } => vec![members],
        }
    }
}
