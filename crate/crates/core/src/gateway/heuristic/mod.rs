//! Deterministic stand-in for the model: implements every unit with a
//! tolerant parser and rule-based CFG construction.

pub mod build;
pub mod parse;

use std::collections::HashMap;

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::cfg::{emit_cfgtext, fuse, parse_cfgtext, Cfg};
use crate::prompt::{
    emit_extract_text, emit_structure_text, BlockCfgInput, ExtractInput, FusionInput, HierarchyEntry,
    StructureHierarchy, StructureInput, WholeInput,
};
use crate::source::{parse_block_id, tokenize, BlockKind, TokenKind};

use super::{Backend, BackendError, BackendRequest};
use build::{build_cfg, node_prefix};
use parse::{block_sites, parse, BlockSite};

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicBackend;

impl Backend for HeuristicBackend {
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        heuristic_complete(&req.unit_id, &req.structured_input)
    }

    fn model(&self) -> &str {
        "heuristic"
    }
}

fn input<T: DeserializeOwned>(unit: &str, v: &Value) -> Result<T, BackendError> {
    serde_json::from_value(v.clone())
        .map_err(|e| BackendError::BadInput { unit: unit.to_string(), detail: e.to_string() })
}

/// Completion text for `unit_id`. Pure: equal inputs give equal outputs.
pub fn heuristic_complete(unit_id: &str, structured_input: &Value) -> Result<String, BackendError> {
    match unit_id {
        "structure" => {
            let StructureInput { code } = input(unit_id, structured_input)?;
            Ok(emit_structure_text(&structure(&code)))
        }
        "extract" => {
            let ExtractInput { code, hierarchy } = input(unit_id, structured_input)?;
            Ok(extract(&code, &hierarchy))
        }
        "blockcfg" => {
            let BlockCfgInput { block_id, text, base_indent, .. } = input(unit_id, structured_input)?;
            let built = build_cfg(&text, Some(base_indent), &node_prefix(&block_id));
            Ok(with_warnings(&built.warnings, &emit_cfgtext(&built.cfg)))
        }
        "fusion" => {
            let FusionInput { parts } = input(unit_id, structured_input)?;
            fusion(unit_id, &parts).map(|g| emit_cfgtext(&g))
        }
        "direct" | "cot" => {
            let WholeInput { code } = input(unit_id, structured_input)?;
            let built = build_cfg(&code, None, "g");
            let mut out = String::new();
            if unit_id == "cot" {
                out.push_str(&emit_structure_text(&structure(&code)));
            }
            out.push_str(&with_warnings(&built.warnings, &emit_cfgtext(&built.cfg)));
            Ok(out)
        }
        other => Err(BackendError::UnsupportedUnit(other.to_string())),
    }
}

fn with_warnings(warnings: &[String], cfgtext: &str) -> String {
    let mut out: String = warnings.iter().map(|w| format!("# warning: {w}\n")).collect();
    out.push_str(cfgtext);
    out
}

/// Largest placeholder number per kind already present in `code`.
fn existing_numbers(code: &str) -> HashMap<BlockKind, usize> {
    let mut max = HashMap::new();
    for t in tokenize(code).tokens.iter().filter(|t| t.kind == TokenKind::Identifier) {
        if let Some((kind, k)) = parse_block_id(&t.lexeme) {
            let m = max.entry(kind).or_insert(0);
            *m = (*m).max(k);
        }
    }
    max
}

/// Block tree of `code`, numbered per kind after the placeholders it
/// already contains.
pub fn structure(code: &str) -> StructureHierarchy {
    let sites = block_sites(&parse(code, None).items);
    let mut next = existing_numbers(code);
    let mut ids: Vec<String> = Vec::with_capacity(sites.len());
    let mut entries = Vec::with_capacity(sites.len());
    for site in &sites {
        let k = next.entry(site.kind).or_insert(0);
        *k += 1;
        let id = site.kind.block_id(*k);
        entries.push(HierarchyEntry {
            id: id.clone(),
            kind: site.kind,
            depth: site.depth,
            parent: site.parent.map(|p| ids[p].clone()),
            lines: Some(site.lines),
        });
        ids.push(id);
    }
    StructureHierarchy { entries }
}

/// Pairs hierarchy entries with parsed blocks: position by position when the
/// two listings agree on kinds, otherwise by kind and first line, then by
/// kind in order.
fn match_sites<'a>(h: &StructureHierarchy, sites: &'a [BlockSite]) -> Vec<Option<&'a BlockSite>> {
    if h.entries.len() == sites.len() && h.entries.iter().zip(sites).all(|(e, s)| e.kind == s.kind) {
        return sites.iter().map(Some).collect();
    }
    let mut used = vec![false; sites.len()];
    h.entries
        .iter()
        .map(|e| {
            let by_line = sites
                .iter()
                .enumerate()
                .find(|(i, s)| !used[*i] && s.kind == e.kind && e.lines.is_some_and(|(a, _)| a == s.lines.0));
            let pick = by_line.or_else(|| sites.iter().enumerate().find(|(i, s)| !used[*i] && s.kind == e.kind));
            pick.map(|(i, s)| {
                used[i] = true;
                s
            })
        })
        .collect()
}

pub fn extract(code: &str, h: &StructureHierarchy) -> String {
    let sites = block_sites(&parse(code, None).items);
    let matched = match_sites(h, &sites);
    let leaves: Vec<&str> = h.leaves().iter().map(|e| e.id.as_str()).collect();
    let mut picked: Vec<(&str, &BlockSite)> = h
        .entries
        .iter()
        .zip(&matched)
        .filter(|(e, _)| leaves.contains(&e.id.as_str()))
        .filter_map(|(e, s)| s.map(|s| (e.id.as_str(), s)))
        .collect();
    picked.sort_by_key(|(_, s)| s.span.start);
    emit_extract_text(picked.iter().map(|(id, s)| (*id, &code[s.span.clone()])))
}

fn fusion(unit: &str, parts: &[crate::prompt::FusionPart]) -> Result<Cfg, BackendError> {
    let bad = |detail: String| BackendError::BadInput { unit: unit.to_string(), detail };
    let mut graphs = Vec::with_capacity(parts.len());
    for p in parts {
        graphs.push((p.id.as_str(), parse_cfgtext(&p.cfg).map_err(|e| bad(format!("{}: {e}", p.id)))?));
    }
    let mut rest = graphs.split_off(1.min(graphs.len()));
    let Some((_, mut g)) = graphs.pop() else { return Err(bad("no graphs".into())) };
    while !rest.is_empty() {
        let Some(i) = rest.iter().position(|(id, _)| g.placeholders().any(|n| n.label == *id)) else {
            return Err(bad(format!("`{}` has no placeholder to fill", rest[0].0)));
        };
        let (id, inner) = rest.remove(i);
        g = fuse(&g, id, &inner).map_err(|e| bad(e.to_string()))?;
    }
    Ok(g)
}
