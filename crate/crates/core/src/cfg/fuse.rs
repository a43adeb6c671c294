//! Placeholder substitution.

use std::collections::{HashMap, HashSet};

use super::{Cfg, CfgEdge, CfgNode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FuseError {
    #[error("no placeholder node labeled `{0}`")]
    NoSuchPlaceholder(String),
    #[error("{count} placeholder nodes labeled `{id}`")]
    MultiplePlaceholderMatches { id: String, count: usize },
    #[error("inner graph entry `{0}` is not one of its nodes")]
    InnerMissingEntry(String),
}

/// Replaces the placeholder node labeled `placeholder_id` in `outer` with
/// `inner`.
///
/// The inner entry takes over the placeholder's id and list position, so
/// edges into the placeholder now reach the inner entry. Each edge out of the
/// placeholder is replaced by one copy per exit of `inner`. Remaining inner
/// nodes follow the entry in the node list and get `_f<n>` suffixes when
/// their ids collide.
pub fn fuse(outer: &Cfg, placeholder_id: &str, inner: &Cfg) -> Result<Cfg, FuseError> {
    let matches: Vec<usize> = outer
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.placeholder && n.label == placeholder_id)
        .map(|(i, _)| i)
        .collect();
    let p_idx = match matches.as_slice() {
        [] => return Err(FuseError::NoSuchPlaceholder(placeholder_id.to_string())),
        [i] => *i,
        many => {
            return Err(FuseError::MultiplePlaceholderMatches {
                id: placeholder_id.to_string(),
                count: many.len(),
            })
        }
    };
    let inner_entry = inner
        .entry_node()
        .ok_or_else(|| FuseError::InnerMissingEntry(inner.entry.clone()))?;
    let p_id = outer.nodes[p_idx].id.clone();

    let mut used: HashSet<String> = outer.nodes.iter().map(|n| n.id.clone()).collect();
    let mut rename: HashMap<&str, String> = HashMap::new();
    rename.insert(inner_entry.id.as_str(), p_id.clone());
    for n in &inner.nodes {
        if n.id == inner_entry.id {
            continue;
        }
        let id = if used.contains(&n.id) {
            (1..).map(|k| format!("{}_f{}", n.id, k)).find(|c| !used.contains(c)).unwrap()
        } else {
            n.id.clone()
        };
        used.insert(id.clone());
        rename.insert(n.id.as_str(), id);
    }

    let mut nodes = Vec::with_capacity(outer.nodes.len() + inner.nodes.len() - 1);
    nodes.extend_from_slice(&outer.nodes[..p_idx]);
    nodes.push(CfgNode { id: p_id.clone(), ..inner_entry.clone() });
    for n in &inner.nodes {
        if n.id != inner_entry.id {
            nodes.push(CfgNode { id: rename[n.id.as_str()].clone(), ..n.clone() });
        }
    }
    nodes.extend_from_slice(&outer.nodes[p_idx + 1..]);

    let exits: Vec<String> = inner.exits().iter().map(|n| rename[n.id.as_str()].clone()).collect();
    let inner_edges: Vec<CfgEdge> = inner
        .edges
        .iter()
        .map(|e| CfgEdge {
            from: rename[e.from.as_str()].clone(),
            to: rename[e.to.as_str()].clone(),
            label: e.label.clone(),
        })
        .collect();

    let mut edges = Vec::new();
    let mut inner_placed = false;
    for e in &outer.edges {
        if e.from == p_id {
            if !inner_placed {
                edges.extend(inner_edges.iter().cloned());
                inner_placed = true;
            }
            for x in &exits {
                edges.push(CfgEdge { from: x.clone(), to: e.to.clone(), label: e.label.clone() });
            }
        } else {
            edges.push(e.clone());
        }
    }
    if !inner_placed {
        edges.extend(inner_edges);
    }

    Ok(Cfg { nodes, edges, entry: outer.entry.clone() })
}
