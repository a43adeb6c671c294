use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::Cfg;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingEntry { entry: String },
    DuplicateNodeId { id: String },
    DanglingEndpoint { from: String, to: String },
    Unreachable { node: String },
    /// A `true` out-edge without a `false` sibling, or the reverse.
    DanglingBranch { node: String, present: String },
    DuplicateEdge { from: String, to: String, label: Option<String> },
    NoExit,
}

impl Violation {
    pub fn is_unreachable(&self) -> bool {
        matches!(self, Violation::Unreachable { .. })
    }
}

/// Structural problems of `g`; empty iff well-formed.
pub fn validate_cfg(g: &Cfg) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for n in &g.nodes {
        if !ids.insert(n.id.as_str()) {
            out.push(Violation::DuplicateNodeId { id: n.id.clone() });
        }
    }
    if !ids.contains(g.entry.as_str()) {
        out.push(Violation::MissingEntry { entry: g.entry.clone() });
    }

    let mut seen = BTreeSet::new();
    for e in &g.edges {
        if !ids.contains(e.from.as_str()) || !ids.contains(e.to.as_str()) {
            out.push(Violation::DanglingEndpoint { from: e.from.clone(), to: e.to.clone() });
        }
        if !seen.insert((&e.from, &e.to, &e.label)) {
            out.push(Violation::DuplicateEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                label: e.label.clone(),
            });
        }
    }

    if ids.contains(g.entry.as_str()) {
        let mut reached = BTreeSet::from([g.entry.as_str()]);
        let mut queue = VecDeque::from([g.entry.as_str()]);
        while let Some(id) = queue.pop_front() {
            for e in g.out_edges(id) {
                if reached.insert(e.to.as_str()) {
                    queue.push_back(e.to.as_str());
                }
            }
        }
        for n in &g.nodes {
            if !reached.contains(n.id.as_str()) {
                out.push(Violation::Unreachable { node: n.id.clone() });
            }
        }
    }

    let mut branches: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for e in &g.edges {
        let slot = branches.entry(e.from.as_str()).or_default();
        match e.label.as_deref() {
            Some("true") => slot.0 = true,
            Some("false") => slot.1 = true,
            _ => {}
        }
    }
    for n in &g.nodes {
        match branches.get(n.id.as_str()) {
            Some((true, false)) => {
                out.push(Violation::DanglingBranch { node: n.id.clone(), present: "true".into() })
            }
            Some((false, true)) => {
                out.push(Violation::DanglingBranch { node: n.id.clone(), present: "false".into() })
            }
            _ => {}
        }
    }

    if g.nodes.len() > 1 && g.sinks().is_empty() {
        out.push(Violation::NoExit);
    }
    out
}
