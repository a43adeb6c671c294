//! Output grammars of the structure and extraction units.
//!
//! ```text
//! structure:
//! block class_block_1 kind=class depth=1 parent=none lines=1-9
//! block method_block_1 kind=method depth=2 parent=class_block_1 lines=2-8
//! ```
//!
//! ```text
//! blocks:
//! begin if_block_1
//! if (x) {
//!     y();
//! }
//! end if_block_1
//! ```

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source::{parse_block_id, BlockKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyEntry {
    pub id: String,
    pub kind: BlockKind,
    pub depth: usize,
    pub parent: Option<String>,
    pub lines: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructureHierarchy {
    pub entries: Vec<HierarchyEntry>,
}

impl StructureHierarchy {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&HierarchyEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Entries that are nobody's parent, in listing order.
    pub fn leaves(&self) -> Vec<&HierarchyEntry> {
        let parents: BTreeSet<&str> = self.entries.iter().filter_map(|e| e.parent.as_deref()).collect();
        self.entries.iter().filter(|e| !parents.contains(e.id.as_str())).collect()
    }

    pub fn max_depth(&self) -> usize {
        self.entries.iter().map(|e| e.depth).max().unwrap_or(0)
    }

    /// Checks id uniqueness, id/kind agreement, parent-before-child and the
    /// depth rule.
    pub fn check(&self) -> Result<(), StructureTextError> {
        let mut depth: HashMap<&str, usize> = HashMap::new();
        for e in &self.entries {
            match parse_block_id(&e.id) {
                Some((kind, _)) if kind == e.kind => {}
                _ => return Err(StructureTextError::BadId(e.id.clone())),
            }
            let want = match &e.parent {
                None => 1,
                Some(p) => match depth.get(p.as_str()) {
                    Some(d) => d + 1,
                    None => return Err(StructureTextError::ParentNotBefore(e.id.clone())),
                },
            };
            if e.depth != want {
                return Err(StructureTextError::BadDepth(e.id.clone()));
            }
            if depth.insert(&e.id, e.depth).is_some() {
                return Err(StructureTextError::DuplicateId(e.id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureTextError {
    #[error("no `structure:` line")]
    MissingHeader,
    #[error("line {0}: malformed block line")]
    Malformed(usize),
    #[error("block id `{0}` does not match its kind")]
    BadId(String),
    #[error("duplicate block id `{0}`")]
    DuplicateId(String),
    #[error("parent of `{0}` is not listed before it")]
    ParentNotBefore(String),
    #[error("depth of `{0}` does not follow its parent")]
    BadDepth(String),
}

pub fn emit_structure_text(h: &StructureHierarchy) -> String {
    let mut out = String::from("structure:\n");
    for e in &h.entries {
        out.push_str(&format!(
            "block {} kind={} depth={} parent={}",
            e.id,
            e.kind,
            e.depth,
            e.parent.as_deref().unwrap_or("none")
        ));
        if let Some((a, b)) = e.lines {
            out.push_str(&format!(" lines={a}-{b}"));
        }
        out.push('\n');
    }
    out
}

/// Lenient outside the listing, strict on `block` lines.
pub fn parse_structure_text(text: &str) -> Result<StructureHierarchy, StructureTextError> {
    let mut lines = text.lines().enumerate();
    lines
        .by_ref()
        .find(|(_, l)| l.trim() == "structure:")
        .ok_or(StructureTextError::MissingHeader)?;
    let mut h = StructureHierarchy::default();
    for (i, line) in lines {
        let line = line.trim();
        if line == "structure:" {
            break;
        }
        let Some(rest) = line.strip_prefix("block ") else { continue };
        h.entries.push(parse_block_line(rest).ok_or(StructureTextError::Malformed(i + 1))?);
    }
    h.check()?;
    Ok(h)
}

fn parse_block_line(rest: &str) -> Option<HierarchyEntry> {
    let mut words = rest.split_whitespace();
    let id = words.next()?.to_string();
    let (mut kind, mut depth, mut parent, mut lines) = (None, None, None, None);
    for w in words {
        let (k, v) = w.split_once('=')?;
        match k {
            "kind" => kind = Some(v.parse::<BlockKind>().ok()?),
            "depth" => depth = Some(v.parse::<usize>().ok()?),
            "parent" => parent = Some((v != "none").then(|| v.to_string())),
            "lines" => {
                let (a, b) = v.split_once('-')?;
                lines = Some((a.parse().ok()?, b.parse().ok()?));
            }
            _ => return None,
        }
    }
    Some(HierarchyEntry { id, kind: kind?, depth: depth?, parent: parent?, lines })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedBlock {
    pub id: String,
    pub kind: BlockKind,
    pub text: String,
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractTextError {
    #[error("no `blocks:` line")]
    MissingHeader,
    #[error("block `{0}` is not terminated")]
    Unterminated(String),
    #[error("block `{0}` is empty")]
    EmptyBlock(String),
    #[error("block `{0}` appears twice")]
    DuplicateBlock(String),
}

pub fn emit_extract_text<'a>(blocks: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::from("blocks:\n");
    for (id, text) in blocks {
        out.push_str(&format!("begin {id}\n{text}\nend {id}\n"));
    }
    out
}

/// `(id, text)` pairs in listed order. Text between `begin` and `end` is
/// taken verbatim.
pub fn parse_extract_text(text: &str) -> Result<Vec<(String, String)>, ExtractTextError> {
    let mut lines = text.split('\n');
    lines
        .by_ref()
        .find(|l| l.trim_end() == "blocks:")
        .ok_or(ExtractTextError::MissingHeader)?;
    let mut out: Vec<(String, String)> = Vec::new();
    while let Some(line) = lines.next() {
        let line = line.trim_end();
        if line == "blocks:" {
            break;
        }
        let Some(id) = line.strip_prefix("begin ").map(str::trim) else { continue };
        let end = format!("end {id}");
        let mut body: Vec<&str> = Vec::new();
        let mut closed = false;
        for l in lines.by_ref() {
            if l.trim_end() == end {
                closed = true;
                break;
            }
            body.push(l);
        }
        if !closed {
            return Err(ExtractTextError::Unterminated(id.to_string()));
        }
        let body = body.join("\n");
        if body.trim().is_empty() {
            return Err(ExtractTextError::EmptyBlock(id.to_string()));
        }
        if out.iter().any(|(seen, _)| seen == id) {
            return Err(ExtractTextError::DuplicateBlock(id.to_string()));
        }
        out.push((id.to_string(), body));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, depth: usize, parent: Option<&str>) -> HierarchyEntry {
        HierarchyEntry {
            id: id.into(),
            kind: parse_block_id(id).unwrap().0,
            depth,
            parent: parent.map(Into::into),
            lines: Some((depth, 10 - depth)),
        }
    }

    #[test]
    fn structure_roundtrip() {
        let h = StructureHierarchy {
            entries: vec![
                entry("class_block_1", 1, None),
                entry("method_block_1", 2, Some("class_block_1")),
                entry("if_block_1", 3, Some("method_block_1")),
                entry("if_block_2", 3, Some("method_block_1")),
            ],
        };
        let text = emit_structure_text(&h);
        assert!(text.starts_with("structure:\nblock class_block_1 kind=class depth=1 parent=none lines=1-9\n"));
        assert_eq!(parse_structure_text(&format!("Sure.\n{text}\nDone.")).unwrap(), h);
        let leaves: Vec<_> = h.leaves().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(leaves, vec!["if_block_1", "if_block_2"]);
    }

    #[test]
    fn structure_invariants_enforced() {
        let bad_depth = "structure:\nblock if_block_1 kind=if depth=2 parent=none\n";
        assert_eq!(parse_structure_text(bad_depth), Err(StructureTextError::BadDepth("if_block_1".into())));
        let late_parent = "structure:\nblock if_block_1 kind=if depth=2 parent=for_block_1\nblock for_block_1 kind=for depth=1 parent=none\n";
        assert!(matches!(parse_structure_text(late_parent), Err(StructureTextError::ParentNotBefore(_))));
        let wrong_kind = "structure:\nblock if_block_1 kind=for depth=1 parent=none\n";
        assert!(matches!(parse_structure_text(wrong_kind), Err(StructureTextError::BadId(_))));
        assert!(matches!(
            parse_structure_text("structure:\nblock if_block_1 kind=if depth=x parent=none\n"),
            Err(StructureTextError::Malformed(2))
        ));
        assert_eq!(parse_structure_text("nothing"), Err(StructureTextError::MissingHeader));
        assert!(parse_structure_text("structure:\n").unwrap().is_empty());
    }

    #[test]
    fn extract_roundtrip_keeps_indentation() {
        let a = "if (x) {\n        y();\n    }";
        let b = "while (k)\n  k--;";
        let text = emit_extract_text([("if_block_1", a), ("while_block_1", b)]);
        let got = parse_extract_text(&format!("Here you go:\n{text}")).unwrap();
        assert_eq!(got, vec![("if_block_1".into(), a.into()), ("while_block_1".into(), b.into())]);
    }

    #[test]
    fn extract_errors() {
        assert_eq!(parse_extract_text("begin a\nx\nend a"), Err(ExtractTextError::MissingHeader));
        assert_eq!(
            parse_extract_text("blocks:\nbegin if_block_1\nx\n"),
            Err(ExtractTextError::Unterminated("if_block_1".into()))
        );
        assert_eq!(
            parse_extract_text("blocks:\nbegin if_block_1\n \nend if_block_1\n"),
            Err(ExtractTextError::EmptyBlock("if_block_1".into()))
        );
    }
}
