//! Control flow graph model.
//!
//! A [`Cfg`] is an ordered list of nodes and edges. Node and edge order is
//! significant for serialization but not for [`Cfg::same_structure`].

mod dot;
mod fuse;
mod text;
mod validate;

pub use dot::emit_dot;
pub use fuse::{fuse, FuseError};
pub use text::{emit_cfgtext, parse_cfgtext, CfgTextError};
pub use validate::{validate_cfg, Violation};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::source::is_block_id;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CfgNode {
    pub id: String,
    pub label: String,
    pub placeholder: bool,
}

impl CfgNode {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        let label = label.into();
        CfgNode { id: id.into(), placeholder: is_block_id(&label), label }
    }

    /// A node whose label starts with `return`, `throw`, `break` or
    /// `continue` ends its path and is never an exit.
    pub fn is_terminal(&self) -> bool {
        is_terminal_label(&self.label)
    }
}

pub fn is_terminal_label(label: &str) -> bool {
    let first = label
        .trim_start()
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .next()
        .unwrap_or("");
    matches!(first, "return" | "throw" | "break" | "continue")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CfgEdge {
    pub from: String,
    pub to: String,
    pub label: Option<String>,
}

impl CfgEdge {
    pub fn new(from: impl Into<String>, to: impl Into<String>, label: Option<&str>) -> Self {
        CfgEdge {
            from: from.into(),
            to: to.into(),
            label: label.filter(|l| !l.is_empty()).map(str::to_string),
        }
    }

    pub fn label_str(&self) -> &str {
        self.label.as_deref().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub edges: Vec<CfgEdge>,
    /// Id of the entry node; the first node unless set otherwise.
    pub entry: String,
}

pub fn is_valid_node_id(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

impl Cfg {
    pub fn new() -> Self {
        Cfg::default()
    }

    /// Single-node graph.
    pub fn single(id: &str, label: &str) -> Self {
        let mut g = Cfg::new();
        g.add_node(id, label);
        g
    }

    /// Appends a node; the first node added becomes the entry.
    pub fn add_node(&mut self, id: impl Into<String>, label: impl Into<String>) -> &str {
        let node = CfgNode::new(id, label);
        if self.nodes.is_empty() {
            self.entry = node.id.clone();
        }
        self.nodes.push(node);
        &self.nodes.last().unwrap().id
    }

    /// Appends an edge unless the same triple already exists.
    pub fn add_edge(&mut self, from: &str, to: &str, label: Option<&str>) {
        let edge = CfgEdge::new(from, to, label);
        if !self.edges.contains(&edge) {
            self.edges.push(edge);
        }
    }

    pub fn node(&self, id: &str) -> Option<&CfgNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.node(id).is_some()
    }

    pub fn entry_node(&self) -> Option<&CfgNode> {
        self.node(&self.entry)
    }

    pub fn out_edges<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CfgEdge> + 'a {
        self.edges.iter().filter(move |e| e.from == id)
    }

    pub fn in_edges<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CfgEdge> + 'a {
        self.edges.iter().filter(move |e| e.to == id)
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.out_edges(id).count()
    }

    /// Out-degree-0 nodes that are not terminal, in node order.
    pub fn exits(&self) -> Vec<&CfgNode> {
        let with_out: BTreeSet<&str> = self.edges.iter().map(|e| e.from.as_str()).collect();
        self.nodes
            .iter()
            .filter(|n| !with_out.contains(n.id.as_str()) && !n.is_terminal())
            .collect()
    }

    /// Out-degree-0 nodes, terminal or not.
    pub fn sinks(&self) -> Vec<&CfgNode> {
        let with_out: BTreeSet<&str> = self.edges.iter().map(|e| e.from.as_str()).collect();
        self.nodes.iter().filter(|n| !with_out.contains(n.id.as_str())).collect()
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &CfgNode> {
        self.nodes.iter().filter(|n| n.placeholder)
    }

    /// True when the node has at least one labeled out-edge.
    pub fn is_condition(&self, id: &str) -> bool {
        self.out_edges(id).any(|e| e.label.is_some())
    }

    /// Equality of node, edge and entry sets, ignoring list order.
    pub fn same_structure(&self, other: &Cfg) -> bool {
        let nodes = |g: &Cfg| g.nodes.iter().cloned().collect::<BTreeSet<_>>();
        let edges = |g: &Cfg| g.edges.iter().cloned().collect::<BTreeSet<_>>();
        self.entry == other.entry
            && self.nodes.len() == other.nodes.len()
            && self.edges.len() == other.edges.len()
            && nodes(self) == nodes(other)
            && edges(self) == edges(other)
    }

    /// Position-indexed form: node labels in list order plus the sorted edge
    /// set over node positions. Two graphs with equal canonical forms differ
    /// only in their node ids.
    pub fn canonical(&self) -> CanonicalCfg {
        let pos: HashMap<&str, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut edges: Vec<(usize, usize, Option<String>)> = self
            .edges
            .iter()
            .map(|e| (pos[e.from.as_str()], pos[e.to.as_str()], e.label.clone()))
            .collect();
        edges.sort();
        CanonicalCfg {
            labels: self.nodes.iter().map(|n| n.label.clone()).collect(),
            edges,
            entry: pos.get(self.entry.as_str()).copied(),
        }
    }

    /// Multiset of labels, for checks that ignore ids entirely.
    pub fn label_multiset(&self) -> Vec<String> {
        let mut v: Vec<String> = self.nodes.iter().map(|n| n.label.clone()).collect();
        v.sort();
        v
    }

    /// Multiset of `(from label, to label, edge label)`.
    pub fn edge_label_multiset(&self) -> Vec<(String, String, String)> {
        let label = |id: &str| self.node(id).map(|n| n.label.clone()).unwrap_or_default();
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|e| (label(&e.from), label(&e.to), e.label_str().to_string()))
            .collect();
        v.sort();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCfg {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, Option<String>)>,
    pub entry: Option<usize>,
}

#[cfg(test)]
pub(crate) mod testgen {
    //! Random graph generators shared by the cfg tests.
    use super::*;
    use proptest::prelude::*;

    pub const LABELS: &[&str] = &["a = 1", "b++", "c(x)", "print(i)", "x > 0", "return y", "i < n"];

    /// Random DAG in which every node is reachable from `n0`.
    pub fn arb_dag(max_nodes: usize) -> impl Strategy<Value = Cfg> {
        (1..=max_nodes)
            .prop_flat_map(|n| {
                let labels = prop::collection::vec(prop::sample::select(LABELS), n);
                let parents = prop::collection::vec(any::<prop::sample::Index>(), n);
                let extra = prop::collection::vec((0..n, 0..n, 0..4u8), 0..n);
                (Just(n), labels, parents, extra)
            })
            .prop_map(|(n, labels, parents, extra)| {
                let mut g = Cfg::new();
                for (i, l) in labels.iter().enumerate().take(n) {
                    g.add_node(format!("n{i}"), *l);
                }
                let label = |l: u8| match l {
                    0 | 1 => None,
                    2 => Some("true"),
                    _ => Some("false"),
                };
                for (i, p) in parents.iter().enumerate().skip(1) {
                    g.add_edge(&format!("n{}", p.index(i)), &format!("n{i}"), None);
                }
                for (a, b, l) in extra {
                    if a < b {
                        g.add_edge(&format!("n{a}"), &format!("n{b}"), label(l));
                    }
                }
                g
            })
    }

    /// Random valid graph with `n` nodes (ids `n0..`), edges drawn from the
    /// candidate pairs. When `dag` is set, edges only go forward.
    pub fn arb_cfg(max_nodes: usize, dag: bool) -> impl Strategy<Value = Cfg> {
        (1..=max_nodes)
            .prop_flat_map(move |n| {
                let labels = prop::collection::vec(prop::sample::select(LABELS), n);
                let edges = prop::collection::vec((0..n, 0..n, 0..4u8), 0..(n * 2));
                (Just(n), labels, edges)
            })
            .prop_map(move |(n, labels, edges)| {
                let mut g = Cfg::new();
                for (i, l) in labels.iter().enumerate().take(n) {
                    g.add_node(format!("n{i}"), *l);
                }
                for (a, b, l) in edges {
                    if dag && a >= b {
                        continue;
                    }
                    let label = match l {
                        0 | 1 => None,
                        2 => Some("true"),
                        _ => Some("false"),
                    };
                    g.add_edge(&format!("n{a}"), &format!("n{b}"), label);
                }
                g
            })
    }
}
