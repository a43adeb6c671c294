//! Node and edge coverage of a generated CFG against a gold CFG.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfg::Cfg;
use crate::source::{normalize_label, tokenize, TokenKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub node_coverage: f64,
    pub edge_coverage: f64,
    /// (gold id, generated id)
    pub matched_nodes: Vec<(String, String)>,
    pub wrong_nodes: Vec<String>,
    /// Gold edges as (from, to, label).
    pub matched_edges: Vec<(String, String, String)>,
    pub wrong_edges: Vec<(String, String, String)>,
    pub spurious_nodes: Vec<String>,
    pub spurious_edges: Vec<(String, String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("gold CFG has no nodes")]
    EmptyGold,
}

fn sig_tokens(label: &str) -> Vec<(TokenKind, String)> {
    tokenize(&normalize_label(label)).significant_tokens().map(|t| (t.kind, t.lexeme.clone())).collect()
}

/// Generated label `generated` stands for gold label `gold`: equal after
/// normalization, or equal token by token where the generated side has `?`
/// in place of an operator.
pub fn labels_match(generated: &str, gold: &str) -> bool {
    let (a, b) = (normalize_label(generated), normalize_label(gold));
    if a == b {
        return true;
    }
    if !a.contains('?') {
        return false;
    }
    let (ta, tb) = (sig_tokens(&a), sig_tokens(&b));
    ta.len() == tb.len()
        && ta.iter().zip(&tb).all(|(x, y)| {
            x == y || (x.0 == TokenKind::Operator && x.1 == "?" && y.0 == TokenKind::Operator)
        })
}

/// Label with every operator collapsed to `?`, so wildcard pairs share it.
fn coarse_label(label: &str) -> String {
    sig_tokens(label)
        .into_iter()
        .map(|(k, s)| if k == TokenKind::Operator { "?".to_string() } else { s })
        .collect::<Vec<_>>()
        .join(" ")
}

fn digest<T: Hash>(v: &T) -> u64 {
    let mut h = DefaultHasher::new();
    v.hash(&mut h);
    h.finish()
}

const REFINE_ROUNDS: usize = 4;

/// (direction, edge label, neighbour colour)
type Neighbour = (u8, String, u64);

/// Colour refinement: per round, a node's colour folds in the colours of its
/// neighbours and the labels of the connecting edges.
fn colours(g: &Cfg) -> Vec<Vec<u64>> {
    let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut rounds = vec![g.nodes.iter().map(|n| digest(&coarse_label(&n.label))).collect::<Vec<u64>>()];
    for _ in 0..REFINE_ROUNDS {
        let prev = rounds.last().unwrap();
        let mut sig: Vec<(u64, Vec<Neighbour>)> = prev.iter().map(|&c| (c, Vec::new())).collect();
        for e in &g.edges {
            let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) else { continue };
            let l = normalize_label(e.label_str());
            sig[a].1.push((0, l.clone(), prev[b]));
            sig[b].1.push((1, l, prev[a]));
        }
        let next = sig
            .into_iter()
            .map(|(c, mut n)| {
                n.sort();
                digest(&(c, n))
            })
            .collect();
        rounds.push(next);
    }
    rounds
}

/// Rounds of refinement on which two nodes still agree.
fn agreement(gold: &[Vec<u64>], gen: &[Vec<u64>], i: usize, j: usize) -> usize {
    gold.iter().zip(gen).take_while(|(a, b)| a[i] == b[j]).count()
}

/// Gold node order: breadth first from the entry, then the unreached ones.
fn visit_order(g: &Cfg) -> Vec<usize> {
    let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut seen = vec![false; g.nodes.len()];
    let mut order = Vec::with_capacity(g.nodes.len());
    for start in 0..g.nodes.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for e in g.out_edges(&g.nodes[i].id) {
                if let Some(&j) = index.get(e.to.as_str()) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    order
}

fn try_augment(i: usize, cand: &[Vec<usize>], seen: &mut [bool], to_gold: &mut [Option<usize>], to_gen: &mut [Option<usize>]) -> bool {
    for &j in &cand[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if to_gold[j].is_none_or(|k| try_augment(k, cand, seen, to_gold, to_gen)) {
            to_gold[j] = Some(i);
            to_gen[i] = Some(j);
            return true;
        }
    }
    false
}

/// Maximum matching of gold nodes to generated nodes with matching labels.
/// Returns, per gold node, its generated image.
pub fn match_nodes(generated: &Cfg, gold: &Cfg) -> Vec<Option<usize>> {
    let cand: Vec<Vec<usize>> = gold
        .nodes
        .iter()
        .map(|g| (0..generated.nodes.len()).filter(|&j| labels_match(&generated.nodes[j].label, &g.label)).collect())
        .collect();
    let (cg, cx) = (colours(gold), colours(generated));
    let gen_index: HashMap<&str, usize> =
        generated.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let gold_index: HashMap<&str, usize> = gold.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();

    let mut to_gen: Vec<Option<usize>> = vec![None; gold.nodes.len()];
    let mut to_gold: Vec<Option<usize>> = vec![None; generated.nodes.len()];
    for i in visit_order(gold) {
        // Edges to already matched neighbours that the candidate would keep.
        let kept = |j: usize| {
            let gj = &generated.nodes[j].id;
            let out = gold.out_edges(&gold.nodes[i].id).filter(|e| {
                to_gen[gold_index[e.to.as_str()]].is_some_and(|t| {
                    generated.out_edges(gj).any(|x| gen_index[x.to.as_str()] == t)
                })
            });
            let inc = gold.in_edges(&gold.nodes[i].id).filter(|e| {
                to_gen[gold_index[e.from.as_str()]].is_some_and(|s| {
                    generated.in_edges(gj).any(|x| gen_index[x.from.as_str()] == s)
                })
            });
            out.count() + inc.count()
        };
        let best = cand[i]
            .iter()
            .copied()
            .filter(|&j| to_gold[j].is_none())
            .map(|j| (kept(j), agreement(&cg, &cx, i, j), std::cmp::Reverse(j)))
            .max();
        if let Some((_, _, std::cmp::Reverse(j))) = best {
            to_gen[i] = Some(j);
            to_gold[j] = Some(i);
        }
    }
    // Greedy choices can block a later node; augmenting paths restore the
    // maximum without unmatching anyone.
    for i in 0..gold.nodes.len() {
        if to_gen[i].is_none() {
            let mut seen = vec![false; generated.nodes.len()];
            try_augment(i, &cand, &mut seen, &mut to_gold, &mut to_gen);
        }
    }
    to_gen
}

fn edge_key(e: &crate::cfg::CfgEdge) -> (String, String, String) {
    (e.from.clone(), e.to.clone(), e.label_str().to_string())
}

fn ratio(total: usize, wrong: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        (total - wrong) as f64 / total as f64
    }
}

pub fn coverage(generated: &Cfg, gold: &Cfg) -> Result<CoverageReport, CoverageError> {
    if gold.nodes.is_empty() {
        return Err(CoverageError::EmptyGold);
    }
    let to_gen = match_nodes(generated, gold);
    let gold_index: HashMap<&str, usize> = gold.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();

    let mut matched_nodes = Vec::new();
    let mut wrong_nodes = Vec::new();
    let mut gen_used = vec![false; generated.nodes.len()];
    for (i, n) in gold.nodes.iter().enumerate() {
        match to_gen[i] {
            Some(j) => {
                gen_used[j] = true;
                matched_nodes.push((n.id.clone(), generated.nodes[j].id.clone()));
            }
            None => wrong_nodes.push(n.id.clone()),
        }
    }

    let mut edge_used = vec![false; generated.edges.len()];
    let mut matched_edges = Vec::new();
    let mut wrong_edges = Vec::new();
    for e in &gold.edges {
        let image = |id: &str| gold_index.get(id).and_then(|&i| to_gen[i]).map(|j| generated.nodes[j].id.as_str());
        let hit = match (image(&e.from), image(&e.to)) {
            (Some(a), Some(b)) => generated.edges.iter().enumerate().position(|(k, x)| {
                !edge_used[k]
                    && x.from == a
                    && x.to == b
                    && normalize_label(x.label_str()) == normalize_label(e.label_str())
            }),
            _ => None,
        };
        match hit {
            Some(k) => {
                edge_used[k] = true;
                matched_edges.push(edge_key(e));
            }
            None => wrong_edges.push(edge_key(e)),
        }
    }

    Ok(CoverageReport {
        node_coverage: ratio(gold.nodes.len(), wrong_nodes.len()),
        edge_coverage: ratio(gold.edges.len(), wrong_edges.len()),
        matched_nodes,
        wrong_nodes,
        matched_edges,
        wrong_edges,
        spurious_nodes: generated
            .nodes
            .iter()
            .zip(&gen_used)
            .filter(|(_, u)| !**u)
            .map(|(n, _)| n.id.clone())
            .collect(),
        spurious_edges: generated
            .edges
            .iter()
            .zip(&edge_used)
            .filter(|(_, u)| !**u)
            .map(|(e, _)| edge_key(e))
            .collect(),
    })
}
