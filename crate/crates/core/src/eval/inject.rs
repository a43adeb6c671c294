//! Error injectors used to build the erroneous datasets from clean code.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    MissingBrace,
    MissingSemicolon,
    MissingOperator,
    EmptyStatement,
    ScopeError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    /// Explicit syntax error.
    Ese,
    /// Implicit semantic error.
    Ise,
}

impl InjectionKind {
    pub const ALL: [InjectionKind; 5] = [
        InjectionKind::MissingBrace,
        InjectionKind::MissingSemicolon,
        InjectionKind::MissingOperator,
        InjectionKind::EmptyStatement,
        InjectionKind::ScopeError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InjectionKind::MissingBrace => "missing_brace",
            InjectionKind::MissingSemicolon => "missing_semicolon",
            InjectionKind::MissingOperator => "missing_operator",
            InjectionKind::EmptyStatement => "empty_statement",
            InjectionKind::ScopeError => "scope_error",
        }
    }

    pub fn category(self) -> Category {
        match self {
            InjectionKind::MissingBrace | InjectionKind::MissingSemicolon | InjectionKind::MissingOperator => {
                Category::Ese
            }
            InjectionKind::EmptyStatement | InjectionKind::ScopeError => Category::Ise,
        }
    }
}

impl fmt::Display for InjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InjectionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.replace('-', "_");
        InjectionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown injection kind `{s}`"))
    }
}

/// Replace `delete` bytes at `offset` with `insert`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub offset: usize,
    pub delete: usize,
    pub insert: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub kind: InjectionKind,
    pub seed: u64,
    /// 1-based line of the (first) mutated site in the original.
    pub line: usize,
    pub eligible_sites: usize,
    /// Edits on the mutated text that restore the original, applied in order.
    pub inverse: Vec<Edit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectError {
    #[error("no eligible site for {0}")]
    NoEligibleSite(InjectionKind),
}

pub fn apply_edits(text: &str, edits: &[Edit]) -> String {
    let mut out = text.to_string();
    for e in edits {
        out.replace_range(e.offset..e.offset + e.delete, &e.insert);
    }
    out
}

/// Restores the original from a mutated text and its record.
pub fn invert(mutated: &str, record: &MutationRecord) -> String {
    apply_edits(mutated, &record.inverse)
}

/// A candidate mutation: edits on the original, listed back to front.
struct Site {
    line: usize,
    forward: Vec<Edit>,
}

struct Scan<'a> {
    text: &'a str,
    toks: Vec<&'a Token>,
    /// For every `{` or `(` index in `toks`, the index of its match.
    partner: Vec<Option<usize>>,
}

impl<'a> Scan<'a> {
    fn new(text: &'a str, unit: &'a crate::source::SourceUnit) -> Self {
        let toks: Vec<&Token> = unit.significant_tokens().collect();
        let mut partner = vec![None; toks.len()];
        let mut braces = Vec::new();
        let mut parens = Vec::new();
        for (i, t) in toks.iter().enumerate() {
            let stack = match t.lexeme.as_str() {
                "{" if t.kind == TokenKind::Punct => {
                    braces.push(i);
                    continue;
                }
                "(" if t.kind == TokenKind::Punct => {
                    parens.push(i);
                    continue;
                }
                "}" => &mut braces,
                ")" => &mut parens,
                _ => continue,
            };
            if let Some(open) = stack.pop() {
                partner[open] = Some(i);
                partner[i] = Some(open);
            }
        }
        Scan { text, toks, partner }
    }

    fn line_of(&self, offset: usize) -> &'a str {
        let start = self.text[..offset].rfind('\n').map_or(0, |p| p + 1);
        let end = self.text[offset..].find('\n').map_or(self.text.len(), |p| offset + p);
        &self.text[start..end]
    }

    /// `{` is the last thing on its line.
    fn ends_line(&self, i: usize) -> bool {
        self.toks.get(i + 1).is_none_or(|n| n.line != self.toks[i].line)
    }

    /// `}` stands alone on its line.
    fn alone(&self, i: usize) -> bool {
        self.line_of(self.toks[i].span.start).trim() == "}"
    }

    /// Index of the keyword heading a `( ... )` group whose `)` is at `close`.
    fn header_keyword(&self, close: usize) -> Option<&'a str> {
        let open = self.partner[close]?;
        let kw = self.toks.get(open.checked_sub(1)?)?;
        (kw.kind == TokenKind::Keyword && matches!(kw.lexeme.as_str(), "if" | "for" | "while"))
            .then_some(kw.lexeme.as_str())
    }

    /// Lines of the body between a `{` and its `}` holding a statement end.
    fn statement_lines(&self, open: usize, close: usize) -> usize {
        let mut lines: Vec<usize> = self.toks[open + 1..close]
            .iter()
            .filter(|t| t.is_punct(";") || t.is_punct("}"))
            .map(|t| t.line)
            .collect();
        lines.dedup();
        lines.len()
    }
}

fn delete(offset: usize, len: usize) -> Edit {
    Edit { offset, delete: len, insert: String::new() }
}

fn sites(text: &str, kind: InjectionKind) -> Vec<Site> {
    let unit = tokenize(text);
    let s = Scan::new(text, &unit);
    let t = &s.toks;
    let mut out = Vec::new();
    match kind {
        InjectionKind::MissingBrace => {
            for (i, tok) in t.iter().enumerate() {
                if !tok.is_punct("}") || !s.alone(i) {
                    continue;
                }
                if s.partner[i].is_some_and(|open| s.ends_line(open)) {
                    out.push(Site { line: tok.line, forward: vec![delete(tok.span.start, 1)] });
                }
            }
        }
        InjectionKind::MissingSemicolon => {
            for (i, tok) in t.iter().enumerate() {
                if !tok.is_keyword("for") || !t.get(i + 1).is_some_and(|n| n.is_punct("(")) {
                    continue;
                }
                let Some(close) = s.partner[i + 1] else { continue };
                let semis: Vec<usize> = (i + 2..close).filter(|&j| t[j].is_punct(";")).collect();
                // All three header parts present.
                if semis.len() == 2 && semis[0] > i + 2 && semis[1] > semis[0] + 1 && close > semis[1] + 1 {
                    let semi = t[semis[1]];
                    out.push(Site { line: semi.line, forward: vec![delete(semi.span.start, 1)] });
                }
            }
        }
        InjectionKind::MissingOperator => {
            for (i, tok) in t.iter().enumerate() {
                if tok.kind != TokenKind::Operator || !is_binary_operator(&tok.lexeme) || i == 0 {
                    continue;
                }
                let operand_before = |x: &Token| {
                    matches!(x.kind, TokenKind::Identifier | TokenKind::Literal)
                        || x.is_punct(")")
                        || x.is_punct("]")
                        || x.is_keyword("this")
                };
                let operand_after = |x: &Token| {
                    matches!(x.kind, TokenKind::Identifier | TokenKind::Literal) || x.is_punct("(")
                };
                if operand_before(t[i - 1]) && t.get(i + 1).is_some_and(|n| operand_after(n)) {
                    out.push(Site {
                        line: tok.line,
                        forward: vec![Edit { offset: tok.span.start, delete: tok.lexeme.len(), insert: "?".into() }],
                    });
                }
            }
        }
        InjectionKind::EmptyStatement => {
            for (i, tok) in t.iter().enumerate() {
                if tok.is_punct(")") && s.header_keyword(i).is_some() && t.get(i + 1).is_some_and(|n| n.is_punct("{")) {
                    out.push(Site { line: tok.line, forward: vec![Edit { offset: tok.span.end, delete: 0, insert: ";".into() }] });
                }
            }
        }
        InjectionKind::ScopeError => {
            for (i, tok) in t.iter().enumerate() {
                if !tok.is_punct("{") || i == 0 || !t[i - 1].is_punct(")") || s.header_keyword(i - 1).is_none() {
                    continue;
                }
                let Some(close) = s.partner[i] else { continue };
                if !s.ends_line(i) || !s.alone(close) || s.statement_lines(i, close) < 2 {
                    continue;
                }
                // A following `else` would attach to the wrong statement.
                if t.get(close + 1).is_some_and(|n| n.is_keyword("else")) {
                    continue;
                }
                out.push(Site { line: tok.line, forward: vec![delete(t[close].span.start, 1), delete(tok.span.start, 1)] });
            }
        }
    }
    out
}

fn is_binary_operator(op: &str) -> bool {
    matches!(op, "+" | "-" | "*" | "/" | "%" | "<" | ">" | "<=" | ">=" | "==" | "!=" | "&&" | "||")
}

/// Applies one `kind` mutation at a site chosen by `seed`.
pub fn inject_error(code: &str, kind: InjectionKind, seed: u64) -> Result<(String, MutationRecord), InjectError> {
    let candidates = sites(code, kind);
    if candidates.is_empty() {
        return Err(InjectError::NoEligibleSite(kind));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let site = &candidates[rng.gen_range(0..candidates.len())];
    let mutated = apply_edits(code, &site.forward);
    let mut ordered = site.forward.clone();
    ordered.sort_by_key(|e| e.offset);
    let mut inverse = Vec::with_capacity(ordered.len());
    let mut shift: isize = 0;
    for e in &ordered {
        let at = (e.offset as isize + shift) as usize;
        inverse.push(Edit { offset: at, delete: e.insert.len(), insert: code[e.offset..e.offset + e.delete].to_string() });
        shift += e.insert.len() as isize - e.delete as isize;
    }
    // Back to front, so earlier offsets are untouched.
    inverse.reverse();
    Ok((
        mutated,
        MutationRecord { kind, seed, line: site.line, eligible_sites: candidates.len(), inverse },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_semicolon_in_for_header() {
        let code = "for (int i=0; i<10; i++) {\n    sum = sum + i;\n}\n";
        let (m, rec) = inject_error(code, InjectionKind::MissingSemicolon, 1).unwrap();
        assert_eq!(m, "for (int i=0; i<10 i++) {\n    sum = sum + i;\n}\n");
        assert_eq!(invert(&m, &rec), code);
    }

    #[test]
    fn empty_statement_after_header() {
        let code = "for (int i = 0; i < 10; i++) {\n    sum = sum + 1;\n}\n";
        let (m, _) = inject_error(code, InjectionKind::EmptyStatement, 7).unwrap();
        assert_eq!(m, "for (int i = 0; i < 10; i++); {\n    sum = sum + 1;\n}\n");
    }

    #[test]
    fn missing_operator_becomes_wildcard() {
        let (m, rec) = inject_error("x = a + b;\n", InjectionKind::MissingOperator, 3).unwrap();
        assert_eq!(m, "x = a ? b;\n");
        assert_eq!(rec.eligible_sites, 1);
    }

    #[test]
    fn unary_minus_is_not_a_site() {
        assert_eq!(
            inject_error("n = -n;\n", InjectionKind::MissingOperator, 1),
            Err(InjectError::NoEligibleSite(InjectionKind::MissingOperator))
        );
    }

    #[test]
    fn scope_error_needs_two_statements() {
        let one = "while (k > 0) {\n    k--;\n}\n";
        assert!(inject_error(one, InjectionKind::ScopeError, 1).is_err());
        let two = "while (k > 0) {\n    sum += k;\n    k--;\n}\n";
        let (m, rec) = inject_error(two, InjectionKind::ScopeError, 1).unwrap();
        assert_eq!(m, "while (k > 0) \n    sum += k;\n    k--;\n\n");
        assert_eq!(invert(&m, &rec), two);
    }

    #[test]
    fn missing_brace_skips_else_lines() {
        let code = "if (a) {\n    x();\n} else {\n    y();\n}\n";
        let (m, rec) = inject_error(code, InjectionKind::MissingBrace, 1).unwrap();
        assert_eq!(rec.eligible_sites, 1);
        assert_eq!(m, "if (a) {\n    x();\n} else {\n    y();\n\n");
    }

    #[test]
    fn seed_is_deterministic() {
        let code = "if (a < b) {\n    c = a * b + d;\n}\n";
        for seed in 0..20 {
            assert_eq!(
                inject_error(code, InjectionKind::MissingOperator, seed),
                inject_error(code, InjectionKind::MissingOperator, seed)
            );
        }
    }

    #[test]
    fn kinds_roundtrip_names() {
        for k in InjectionKind::ALL {
            assert_eq!(k.as_str().parse::<InjectionKind>().unwrap(), k);
        }
        assert_eq!(InjectionKind::ScopeError.category(), Category::Ise);
        assert_eq!(InjectionKind::MissingOperator.category(), Category::Ese);
    }
}
