//! CFGText, the line-oriented serialization exchanged with completion units.
//!
//! ```text
//! cfg v1
//! node <id> "<label>"
//! edge <from> <to> ["<label>"]
//! ```
//!
//! The parser skips lines that are not directives and stops at a second
//! header, so surrounding prose in a completion is harmless.

use std::collections::HashSet;
use std::fmt::Write;

use super::{is_valid_node_id, Cfg};

pub const HEADER: &str = "cfg v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfgTextError {
    #[error("no `cfg v1` header")]
    MissingHeader,
    #[error("line {line}: edge refers to undeclared node `{id}`")]
    UnknownNodeRef { line: usize, id: String },
    #[error("line {line}: duplicate node id `{id}`")]
    DuplicateNodeId { line: usize, id: String },
    #[error("line {line}: invalid node id `{id}`")]
    InvalidNodeId { line: usize, id: String },
    #[error("line {line}: malformed directive")]
    Malformed { line: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
}

pub fn parse_cfgtext(text: &str) -> Result<Cfg, CfgTextError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    if !lines.any(|(_, l)| l == HEADER) {
        return Err(CfgTextError::MissingHeader);
    }
    let mut g = Cfg::new();
    let mut ids = HashSet::new();
    for (line, l) in lines {
        if l == HEADER {
            break;
        }
        if let Some(rest) = l.strip_prefix("node ") {
            let (id, rest) = split_word(rest);
            let (label, rest) = quoted(rest).ok_or(CfgTextError::Malformed { line })?;
            if !rest.trim().is_empty() {
                return Err(CfgTextError::Malformed { line });
            }
            if !is_valid_node_id(id) {
                return Err(CfgTextError::InvalidNodeId { line, id: id.to_string() });
            }
            if !ids.insert(id.to_string()) {
                return Err(CfgTextError::DuplicateNodeId { line, id: id.to_string() });
            }
            g.add_node(id, label);
        } else if let Some(rest) = l.strip_prefix("edge ") {
            let (from, rest) = split_word(rest);
            let (to, rest) = split_word(rest);
            if from.is_empty() || to.is_empty() {
                return Err(CfgTextError::Malformed { line });
            }
            let rest = rest.trim();
            let label = if rest.is_empty() {
                None
            } else {
                match quoted(rest) {
                    Some((label, tail)) if tail.trim().is_empty() => Some(label),
                    _ => return Err(CfgTextError::Malformed { line }),
                }
            };
            for id in [from, to] {
                if !ids.contains(id) {
                    return Err(CfgTextError::UnknownNodeRef { line, id: id.to_string() });
                }
            }
            g.add_edge(from, to, label.as_deref());
        }
    }
    if g.nodes.is_empty() {
        return Err(CfgTextError::EmptyGraph);
    }
    Ok(g)
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    let end = s.find(char::is_whitespace).unwrap_or(s.len());
    (&s[..end], &s[end..])
}

/// Reads a double-quoted string with `\"` and `\\` escapes.
fn quoted(s: &str) -> Option<(String, &str)> {
    let s = s.trim_start();
    let body = s.strip_prefix('"')?;
    let mut out = String::new();
    let mut chars = body.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Some((out, &body[i + 1..])),
            '\\' => match chars.next() {
                Some((_, e @ ('"' | '\\'))) => out.push(e),
                Some((_, e)) => {
                    out.push('\\');
                    out.push(e);
                }
                None => return None,
            },
            c => out.push(c),
        }
    }
    None
}

fn escape(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

pub fn emit_cfgtext(g: &Cfg) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for n in &g.nodes {
        let _ = writeln!(out, "node {} \"{}\"", n.id, escape(&n.label));
    }
    for e in &g.edges {
        match &e.label {
            Some(l) => {
                let _ = writeln!(out, "edge {} {} \"{}\"", e.from, e.to, escape(l));
            }
            None => {
                let _ = writeln!(out, "edge {} {}", e.from, e.to);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::testgen::arb_cfg;
    use proptest::prelude::*;

    #[test]
    fn minimal_graph() {
        let g = parse_cfgtext("cfg v1\nnode entry \"entry\"\n").unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.entry, "entry");
        assert_eq!(emit_cfgtext(&g), "cfg v1\nnode entry \"entry\"\n");
    }

    #[test]
    fn forward_reference_rejected() {
        let err = parse_cfgtext("cfg v1\nedge a b \"true\"\nnode a \"x\"\nnode b \"y\"\n").unwrap_err();
        assert!(matches!(err, CfgTextError::UnknownNodeRef { line: 2, .. }));
    }

    #[test]
    fn header_required() {
        assert_eq!(parse_cfgtext("node a \"x\"\n"), Err(CfgTextError::MissingHeader));
    }

    #[test]
    fn duplicate_ids() {
        let err = parse_cfgtext("cfg v1\nnode a \"x\"\nnode a \"y\"\n").unwrap_err();
        assert!(matches!(err, CfgTextError::DuplicateNodeId { line: 3, .. }));
    }

    #[test]
    fn prose_is_skipped() {
        let text = "Sure, here is the CFG:\ncfg v1\nnode a \"x = 1\"\nThe graph has one node.\ncfg v1\nnode b \"y\"\n";
        let g = parse_cfgtext(text).unwrap();
        assert_eq!(g.nodes.len(), 1);
    }

    #[test]
    fn if_block_cfg_counts() {
        // condition, two branches, join
        let text = r#"cfg v1
node if1_n0 "if ((i ? j) < 3)"
node if1_n1 "print(i)"
node if1_n2 "print(j)"
node if1_n3 "end if"
edge if1_n0 if1_n1 "true"
edge if1_n0 if1_n2 "false"
edge if1_n1 if1_n3
edge if1_n2 if1_n3
"#;
        let g = parse_cfgtext(text).unwrap();
        assert_eq!((g.nodes.len(), g.edges.len()), (4, 4));
        assert_eq!(g.edges[0].label.as_deref(), Some("true"));
        assert_eq!(g.edges[2].label, None);
    }

    #[test]
    fn quotes_and_backslashes_roundtrip() {
        let mut g = Cfg::new();
        g.add_node("a", r#"s = "x\"y" + '\\'"#);
        let text = emit_cfgtext(&g);
        assert_eq!(parse_cfgtext(&text).unwrap(), g);
    }

    #[test]
    fn malformed_node_line() {
        let err = parse_cfgtext("cfg v1\nnode a x\n").unwrap_err();
        assert_eq!(err, CfgTextError::Malformed { line: 2 });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn parse_emit_roundtrip(g in arb_cfg(8, false)) {
            let text = emit_cfgtext(&g);
            let back = parse_cfgtext(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(emit_cfgtext(&back), text);
        }
    }
}
