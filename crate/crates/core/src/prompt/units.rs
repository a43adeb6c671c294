use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfg::{emit_cfgtext, parse_cfgtext, validate_cfg, Cfg, CfgTextError, Violation};
use crate::gateway::{Backend, BackendError, BackendRequest, ModelParams};
use crate::kb::{placeholder_words, retrieve_examples, KbError, KnowledgeBase, GENERIC};
use crate::source::parse_block_id;

use super::text::{parse_extract_text, parse_structure_text, NestedBlock, StructureHierarchy};
use super::{
    blockcfg_payload, extract_payload, fusion_payload, structure_payload, task_description, whole_payload,
    BlockCfgInput, ExtractInput, FusionInput, FusionPart, Prompt, PromptError, StructureInput, UnitId, WholeInput,
    EXAMPLES_PER_UNIT,
};

/// Where the block CFG unit takes its examples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retrieval {
    /// The examples of the block's own kind.
    #[default]
    ByKind,
    /// One fixed set for every kind.
    Generic,
}

#[derive(Debug, Clone)]
pub struct UnitOptions {
    /// Extra attempts after unparseable output.
    pub retries: u32,
    pub params: ModelParams,
    pub retrieval: Retrieval,
    /// Block CFGs with more violations than this are rejected.
    pub max_violations: usize,
}

impl Default for UnitOptions {
    fn default() -> Self {
        UnitOptions { retries: 2, params: ModelParams::default(), retrieval: Retrieval::ByKind, max_violations: 16 }
    }
}

/// One prompt/completion round of a unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub unit: UnitId,
    pub prompt: String,
    pub completion: String,
    pub attempts: u32,
}

#[derive(Debug, Error)]
pub enum UnitError {
    #[error("{unit} unit: backend failed on attempt {attempts}: {source}")]
    Backend {
        unit: UnitId,
        attempts: u32,
        #[source]
        source: BackendError,
    },
    #[error("{} unit: unparseable output after {} attempt(s): {detail}", exchange.unit, exchange.attempts)]
    Unparseable { detail: String, exchange: Box<Exchange> },
    #[error("structure unit found no blocks")]
    EmptyHierarchy { exchange: Box<Exchange> },
    #[error("extracted block `{id}` does not occur in the code")]
    SpanNotFound { id: String, exchange: Box<Exchange> },
    #[error("cfg of `{id}` has {} violations", violations.len())]
    ValidationFailed { id: String, violations: Vec<Violation>, exchange: Box<Exchange> },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("{0}")]
    Precondition(String),
}

impl UnitError {
    pub fn unit(&self) -> Option<UnitId> {
        match self {
            UnitError::Backend { unit, .. } => Some(*unit),
            UnitError::Unparseable { exchange, .. }
            | UnitError::EmptyHierarchy { exchange }
            | UnitError::SpanNotFound { exchange, .. }
            | UnitError::ValidationFailed { exchange, .. } => Some(exchange.unit),
            _ => None,
        }
    }

    pub fn exchange(&self) -> Option<&Exchange> {
        match self {
            UnitError::Unparseable { exchange, .. }
            | UnitError::EmptyHierarchy { exchange }
            | UnitError::SpanNotFound { exchange, .. }
            | UnitError::ValidationFailed { exchange, .. } => Some(exchange),
            _ => None,
        }
    }
}

/// Parses the graph that starts at the last `cfg v1` line, so that answers
/// showing intermediate graphs first are read by their final one.
pub fn parse_final_cfgtext(text: &str) -> Result<Cfg, CfgTextError> {
    let start = text
        .match_indices("cfg v1")
        .map(|(i, _)| i)
        .filter(|&i| i == 0 || text.as_bytes()[i - 1] == b'\n')
        .last();
    parse_cfgtext(start.map_or(text, |i| &text[i..]))
}

/// `# warning: ...` lines of a completion.
pub fn warnings_of(completion: &str) -> Vec<String> {
    completion.lines().filter_map(|l| l.strip_prefix("# warning: ")).map(str::to_string).collect()
}

fn examples(
    kb: &KnowledgeBase,
    unit: UnitId,
    kind: Option<&str>,
) -> Result<Vec<(String, String)>, KbError> {
    Ok(retrieve_examples(kb, unit, kind, EXAMPLES_PER_UNIT)?
        .into_iter()
        .map(|r| (r.input.clone(), r.output.clone()))
        .collect())
}

/// Sends `prompt` until `parse` accepts the completion, at most
/// `1 + retries` times.
fn call<T>(
    backend: &dyn Backend,
    prompt: &Prompt,
    input: serde_json::Value,
    opts: &UnitOptions,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<(T, Exchange), UnitError> {
    let unit = prompt.unit_id;
    let req = BackendRequest {
        unit_id: unit.as_str().to_string(),
        prompt_text: prompt.rendered.clone(),
        structured_input: input,
        params: opts.params.clone(),
    };
    let mut last = (String::new(), String::new());
    for attempt in 1..=opts.retries + 1 {
        let completion =
            backend.complete(&req).map_err(|source| UnitError::Backend { unit, attempts: attempt, source })?;
        let exchange = |completion: String| Exchange {
            unit,
            prompt: prompt.rendered.clone(),
            completion,
            attempts: attempt,
        };
        match parse(&completion) {
            Ok(v) => return Ok((v, exchange(completion))),
            Err(detail) => {
                log::warn!("{unit} unit attempt {attempt}: {detail}");
                last = (detail, completion);
            }
        }
    }
    Err(UnitError::Unparseable {
        detail: last.0,
        exchange: Box::new(Exchange { unit, prompt: prompt.rendered.clone(), completion: last.1, attempts: opts.retries + 1 }),
    })
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("unit inputs serialize")
}

pub fn unit_structure(
    code: &str,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    opts: &UnitOptions,
) -> Result<(StructureHierarchy, Exchange), UnitError> {
    let prompt = Prompt::new(
        UnitId::Structure,
        task_description(UnitId::Structure),
        examples(kb, UnitId::Structure, None)?,
        structure_payload(code),
    )?;
    let input = json(&StructureInput { code: code.to_string() });
    let (h, exchange) = call(backend, &prompt, input, opts, |c| parse_structure_text(c).map_err(|e| e.to_string()))?;
    if h.is_empty() {
        return Err(UnitError::EmptyHierarchy { exchange: Box::new(exchange) });
    }
    Ok((h, exchange))
}

pub fn unit_extract_block(
    code: &str,
    hierarchy: &StructureHierarchy,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    opts: &UnitOptions,
) -> Result<(Vec<NestedBlock>, Exchange), UnitError> {
    if hierarchy.is_empty() {
        return Err(UnitError::Precondition("extraction needs a nonempty hierarchy".into()));
    }
    let prompt = Prompt::new(
        UnitId::Extract,
        task_description(UnitId::Extract),
        examples(kb, UnitId::Extract, None)?,
        extract_payload(code, hierarchy),
    )?;
    let input = json(&ExtractInput { code: code.to_string(), hierarchy: hierarchy.clone() });
    let leaves: BTreeSet<&str> = hierarchy.leaves().iter().map(|e| e.id.as_str()).collect();
    let (blocks, exchange) = call(backend, &prompt, input, opts, |c| {
        let blocks = parse_extract_text(c).map_err(|e| e.to_string())?;
        let got: BTreeSet<&str> = blocks.iter().map(|(id, _)| id.as_str()).collect();
        if got != leaves {
            return Err(format!("extracted {got:?}, innermost blocks are {leaves:?}"));
        }
        Ok(blocks)
    })?;
    match locate(code, hierarchy, blocks) {
        Ok(v) => Ok((v, exchange)),
        Err(id) => Err(UnitError::SpanNotFound { id, exchange: Box::new(exchange) }),
    }
}

/// Finds each block's text in `code`. A match on the block's first listed
/// line is preferred; matches never overlap. Result is in source order.
fn locate(
    code: &str,
    hierarchy: &StructureHierarchy,
    blocks: Vec<(String, String)>,
) -> Result<Vec<NestedBlock>, String> {
    let line_of = |offset: usize| code[..offset].bytes().filter(|&b| b == b'\n').count() + 1;
    let mut out: Vec<NestedBlock> = Vec::new();
    for (id, text) in blocks {
        let entry = hierarchy.get(&id).expect("ids checked against the hierarchy");
        let free = |start: usize| {
            let end = start + text.len();
            out.iter().all(|b| end <= b.span.start || start >= b.span.end)
        };
        let starts: Vec<usize> = code.match_indices(text.as_str()).map(|(i, _)| i).filter(|&i| free(i)).collect();
        let start = starts
            .iter()
            .copied()
            .find(|&i| entry.lines.is_some_and(|(a, _)| line_of(i) == a))
            .or_else(|| starts.first().copied())
            .ok_or_else(|| id.clone())?;
        out.push(NestedBlock { id, kind: entry.kind, span: start..start + text.len(), text });
    }
    out.sort_by_key(|b| b.span.start);
    Ok(out)
}

pub fn unit_block_cfg(
    block: &NestedBlock,
    base_indent: usize,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    opts: &UnitOptions,
) -> Result<(Cfg, Exchange), UnitError> {
    let bucket = match opts.retrieval {
        Retrieval::ByKind => block.kind.as_str(),
        Retrieval::Generic => GENERIC,
    };
    let prompt = Prompt::new(
        UnitId::BlockCfg,
        task_description(UnitId::BlockCfg),
        examples(kb, UnitId::BlockCfg, Some(bucket))?,
        blockcfg_payload(&block.text),
    )?;
    let input = json(&BlockCfgInput {
        block_id: block.id.clone(),
        kind: block.kind,
        text: block.text.clone(),
        base_indent,
    });
    let mut expected = placeholder_words(&block.text);
    expected.sort();
    let (g, exchange) = call(backend, &prompt, input, opts, |c| {
        let g = parse_cfgtext(c).map_err(|e| e.to_string())?;
        let mut got: Vec<String> = g.placeholders().map(|n| n.label.clone()).collect();
        got.sort();
        if got != expected {
            return Err(format!("placeholder nodes {got:?}, code has {expected:?}"));
        }
        Ok(g)
    })?;
    let violations = validate_cfg(&g);
    if violations.len() > opts.max_violations {
        return Err(UnitError::ValidationFailed { id: block.id.clone(), violations, exchange: Box::new(exchange) });
    }
    Ok((g, exchange))
}

/// Fuses `parts`, outer graph first, into one graph without placeholders.
pub fn unit_fusion(
    parts: &[(String, Cfg)],
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    opts: &UnitOptions,
) -> Result<(Cfg, Exchange), UnitError> {
    if parts.len() < 2 {
        return Err(UnitError::Precondition("fusion needs at least two graphs".into()));
    }
    let parts: Vec<FusionPart> =
        parts.iter().map(|(id, g)| FusionPart { id: id.clone(), cfg: emit_cfgtext(g) }).collect();
    let prompt = Prompt::new(
        UnitId::Fusion,
        task_description(UnitId::Fusion),
        examples(kb, UnitId::Fusion, None)?,
        fusion_payload(&parts),
    )?;
    let fused_ids: BTreeSet<&str> = parts[1..].iter().map(|p| p.id.as_str()).collect();
    let input = json(&FusionInput { parts: parts.clone() });
    call(backend, &prompt, input, opts, |c| {
        let g = parse_final_cfgtext(c).map_err(|e| e.to_string())?;
        if let Some(n) = g.placeholders().find(|n| fused_ids.contains(n.label.as_str())) {
            return Err(format!("placeholder `{}` left unfused", n.label));
        }
        Ok(g)
    })
}

/// Single-call variants: `cot` and `direct`.
pub fn unit_whole(
    unit: UnitId,
    code: &str,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    opts: &UnitOptions,
) -> Result<(Cfg, Exchange), UnitError> {
    if !matches!(unit, UnitId::Cot | UnitId::Direct) {
        return Err(UnitError::Precondition(format!("{unit} is not a single-call unit")));
    }
    let examples = match unit {
        UnitId::Cot => retrieve_examples(kb, unit, None, 1)?
            .into_iter()
            .map(|r| (r.input.clone(), r.output.clone()))
            .collect(),
        _ => Vec::new(),
    };
    let prompt = Prompt::new(unit, task_description(unit), examples, whole_payload(code))?;
    let input = json(&WholeInput { code: code.to_string() });
    call(backend, &prompt, input, opts, |c| {
        let g = parse_final_cfgtext(c).map_err(|e| e.to_string())?;
        if let Some(n) = g.placeholders().find(|n| parse_block_id(&n.label).is_some()) {
            if !code.contains(n.label.as_str()) {
                return Err(format!("unexpected placeholder `{}`", n.label));
            }
        }
        Ok(g)
    })
}
