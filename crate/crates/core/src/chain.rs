//! The chain: peel innermost blocks until one block is left, build a CFG per
//! block, then fuse the graphs back together innermost first.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfg::{fuse, Cfg, FuseError};
use crate::gateway::{Backend, ModelParams};
use crate::kb::{placeholder_words, KnowledgeBase};
use crate::prompt::{
    unit_block_cfg, unit_extract_block, unit_fusion, unit_structure, unit_whole, warnings_of, Exchange,
    NestedBlock, Retrieval, StructureHierarchy, UnitError, UnitId, UnitOptions,
};
use crate::source::{indent_width, parse_block_id, tokenize, BlockKind, SourceUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Chain,
    ChainNoapr,
    Cot,
    Direct,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Chain, Variant::ChainNoapr, Variant::Cot, Variant::Direct];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Chain => "chain",
            Variant::ChainNoapr => "chain_noapr",
            Variant::Cot => "cot",
            Variant::Direct => "direct",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    /// Accepts `chain-noapr` as well as `chain_noapr`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.replace('-', "_");
        Variant::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub max_iterations: usize,
    pub retries: u32,
    /// Parallel block CFG calls.
    pub jobs: usize,
    pub params: ModelParams,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_iterations: 100, retries: 2, jobs: 4, params: ModelParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub id: String,
    pub original: String,
    /// Span of `original` in the text before masking.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedCode {
    pub text: String,
    pub substitutions: Vec<Substitution>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelStep {
    /// As reported by the structure unit, with its local ids.
    pub hierarchy: StructureHierarchy,
    pub blocks: Vec<NestedBlock>,
    pub masked: MaskedCode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub final_cfg: Cfg,
    pub peel_trace: Vec<PeelStep>,
    pub block_cfgs: BTreeMap<String, Cfg>,
    pub variant: Variant,
    pub transcript: Vec<Exchange>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("no block found")]
    NoBlockFound { exchanges: Vec<Exchange> },
    #[error("input is empty")]
    EmptyInput,
    #[error("peel loop exceeded {limit} iterations")]
    IterationLimitExceeded { limit: usize },
    #[error("masking block `{id}` did not shrink the code")]
    NoProgress { id: String },
    #[error("block `{id}` no longer matches the code at its span")]
    SpanMismatch { id: String },
    #[error("`{id}` already occurs in the code")]
    IdInUse { id: String },
    #[error("placeholder `{id}` does not occur exactly once in the masked code")]
    PlaceholderMissing { id: String },
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error("fusing `{child}` into `{parent}`: {source}")]
    Fusion {
        parent: String,
        child: String,
        #[source]
        source: FuseError,
    },
}

impl ChainError {
    pub fn unit(&self) -> Option<UnitId> {
        match self {
            ChainError::Unit(e) => e.unit(),
            ChainError::Fusion { .. } => Some(UnitId::Fusion),
            _ => None,
        }
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// Offsets where `id` occurs as a whole word.
fn word_positions(text: &str, id: &str) -> Vec<usize> {
    let bytes = text.as_bytes();
    text.match_indices(id)
        .map(|(i, _)| i)
        .filter(|&i| {
            let end = i + id.len();
            (i == 0 || !is_word_byte(bytes[i - 1])) && (end == bytes.len() || !is_word_byte(bytes[end]))
        })
        .collect()
}

pub fn mask_block(code: &str, block: &NestedBlock) -> Result<MaskedCode, ChainError> {
    mask_blocks(code, std::slice::from_ref(block))
}

/// Replaces each block's span by its id. Spans must not overlap.
pub fn mask_blocks(code: &str, blocks: &[NestedBlock]) -> Result<MaskedCode, ChainError> {
    let mut sorted: Vec<&NestedBlock> = blocks.iter().collect();
    sorted.sort_by_key(|b| b.span.start);
    let mut text = String::with_capacity(code.len());
    let mut cursor = 0;
    for b in &sorted {
        let ok = b.span.start >= cursor
            && b.span.end <= code.len()
            && code.get(b.span.clone()) == Some(b.text.as_str());
        if !ok {
            return Err(ChainError::SpanMismatch { id: b.id.clone() });
        }
        if !word_positions(code, &b.id).is_empty() {
            return Err(ChainError::IdInUse { id: b.id.clone() });
        }
        text.push_str(&code[cursor..b.span.start]);
        text.push_str(&b.id);
        cursor = b.span.end;
    }
    text.push_str(&code[cursor..]);
    let substitutions = sorted
        .iter()
        .map(|b| Substitution { id: b.id.clone(), original: b.text.clone(), span: b.span.clone() })
        .collect();
    Ok(MaskedCode { text, substitutions })
}

/// Inverse of [`mask_blocks`]. Each id is expected as a whole word at the
/// position its span maps to.
pub fn splice(masked: &MaskedCode) -> Result<String, ChainError> {
    let mut subs: Vec<&Substitution> = masked.substitutions.iter().collect();
    subs.sort_by_key(|s| s.span.start);
    let bytes = masked.text.as_bytes();
    let mut out = String::with_capacity(masked.text.len());
    let mut cursor = 0;
    let mut shift = 0isize;
    for s in subs {
        let at = s.span.start as isize - shift;
        let missing = || ChainError::PlaceholderMissing { id: s.id.clone() };
        if at < cursor as isize {
            return Err(missing());
        }
        let at = at as usize;
        let end = at + s.id.len();
        let whole = masked.text.get(at..end) == Some(s.id.as_str())
            && (at == 0 || !is_word_byte(bytes[at - 1]))
            && (end == bytes.len() || !is_word_byte(bytes[end]));
        if !whole {
            return Err(missing());
        }
        out.push_str(&masked.text[cursor..at]);
        out.push_str(&s.original);
        cursor = end;
        shift += s.original.len() as isize - s.id.len() as isize;
    }
    out.push_str(&masked.text[cursor..]);
    Ok(out)
}

/// Run-wide block ids: one counter per kind, skipping ids the input already
/// uses.
#[derive(Debug, Clone, Default)]
pub struct BlockNumbering {
    next: HashMap<BlockKind, usize>,
    reserved: HashSet<String>,
    assigned: HashSet<String>,
}

impl BlockNumbering {
    pub fn new(original: &str) -> Self {
        BlockNumbering { reserved: placeholder_words(original).into_iter().collect(), ..Default::default() }
    }

    pub fn next_id(&mut self, kind: BlockKind) -> String {
        loop {
            let k = self.next.entry(kind).or_insert(0);
            *k += 1;
            let id = kind.block_id(*k);
            if !self.reserved.contains(&id) {
                self.assigned.insert(id.clone());
                return id;
            }
        }
    }

    pub fn is_assigned(&self, id: &str) -> bool {
        self.assigned.contains(id)
    }
}

fn significant_len(code: &str) -> usize {
    tokenize(code).significant_tokens().count()
}

fn line_indent(code: &str, offset: usize) -> usize {
    let start = code[..offset].rfind('\n').map_or(0, |i| i + 1);
    indent_width(&code[start..])
}

pub struct PeelOutcome {
    pub step: PeelStep,
    pub exchanges: Vec<Exchange>,
    /// Indentation of the line each block starts on, by block id.
    pub base_indents: Vec<(String, usize)>,
}

/// One round of structure extraction, block extraction and masking.
pub fn peel_step(
    code: &str,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    opts: &UnitOptions,
    numbering: &mut BlockNumbering,
) -> Result<PeelOutcome, ChainError> {
    let (hierarchy, ex1) = match unit_structure(code, backend, kb, opts) {
        Ok(v) => v,
        Err(UnitError::EmptyHierarchy { exchange }) => {
            return Err(ChainError::NoBlockFound { exchanges: vec![*exchange] })
        }
        Err(e) => return Err(e.into()),
    };
    let (mut blocks, ex2) = unit_extract_block(code, &hierarchy, backend, kb, opts)?;
    for b in &mut blocks {
        b.id = numbering.next_id(b.kind);
    }
    let masked = mask_blocks(code, &blocks)?;
    if significant_len(&masked.text) >= significant_len(code) {
        return Err(ChainError::NoProgress { id: blocks[0].id.clone() });
    }
    let base_indents = blocks.iter().map(|b| (b.id.clone(), line_indent(code, b.span.start))).collect();
    Ok(PeelOutcome { step: PeelStep { hierarchy, blocks, masked }, exchanges: vec![ex1, ex2], base_indents })
}

fn unit_options(variant: Variant, limits: &Limits) -> UnitOptions {
    UnitOptions {
        retries: limits.retries,
        params: limits.params.clone(),
        retrieval: if variant == Variant::ChainNoapr { Retrieval::Generic } else { Retrieval::ByKind },
        ..UnitOptions::default()
    }
}

pub fn run_pipeline(
    unit: &SourceUnit,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    variant: Variant,
    limits: &Limits,
) -> Result<ChainResult, ChainError> {
    if unit.text.trim().is_empty() {
        return Err(ChainError::EmptyInput);
    }
    let opts = unit_options(variant, limits);
    match variant {
        Variant::Cot | Variant::Direct => {
            let id = if variant == Variant::Cot { UnitId::Cot } else { UnitId::Direct };
            let (final_cfg, exchange) = unit_whole(id, &unit.text, backend, kb, &opts)?;
            Ok(ChainResult {
                final_cfg,
                peel_trace: Vec::new(),
                block_cfgs: BTreeMap::new(),
                variant,
                warnings: warnings_of(&exchange.completion),
                transcript: vec![exchange],
            })
        }
        Variant::Chain | Variant::ChainNoapr => run_chain(&unit.text, backend, kb, variant, limits, &opts),
    }
}

fn run_chain(
    original: &str,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    variant: Variant,
    limits: &Limits,
    opts: &UnitOptions,
) -> Result<ChainResult, ChainError> {
    let mut numbering = BlockNumbering::new(original);
    let mut code = original.to_string();
    let mut trace: Vec<PeelStep> = Vec::new();
    let mut transcript: Vec<Exchange> = Vec::new();
    let mut indents: HashMap<String, usize> = HashMap::new();
    let mut iteration = 0;
    let root = loop {
        let trimmed = code.trim();
        if numbering.is_assigned(trimmed) {
            break trimmed.to_string();
        }
        if iteration >= limits.max_iterations {
            return Err(ChainError::IterationLimitExceeded { limit: limits.max_iterations });
        }
        iteration += 1;
        match peel_step(&code, backend, kb, opts, &mut numbering) {
            Ok(out) => {
                transcript.extend(out.exchanges);
                indents.extend(out.base_indents);
                code = out.step.masked.text.clone();
                trace.push(out.step);
            }
            Err(ChainError::NoBlockFound { exchanges }) => {
                // What is left has no block of its own; it becomes one block.
                transcript.extend(exchanges);
                let id = numbering.next_id(BlockKind::Method);
                let block = NestedBlock { id: id.clone(), kind: BlockKind::Method, text: code.clone(), span: 0..code.len() };
                indents.insert(id.clone(), line_indent(&code, 0));
                let masked = mask_block(&code, &block)?;
                trace.push(PeelStep { hierarchy: StructureHierarchy::default(), blocks: vec![block], masked });
                break id;
            }
            Err(e) => return Err(e),
        }
    };

    let blocks: Vec<&NestedBlock> = trace.iter().flat_map(|s| &s.blocks).collect();
    let results = block_cfgs_parallel(&blocks, &indents, backend, kb, opts, limits.jobs);
    let mut block_cfgs = BTreeMap::new();
    let mut warnings = Vec::new();
    for (block, result) in blocks.iter().zip(results) {
        let (g, exchange) = result?;
        warnings.extend(warnings_of(&exchange.completion).into_iter().map(|w| format!("{}: {w}", block.id)));
        transcript.push(exchange);
        block_cfgs.insert(block.id.clone(), g);
    }

    let mut fused: HashMap<String, Cfg> = HashMap::new();
    for block in &blocks {
        let mut g = block_cfgs[&block.id].clone();
        let children: Vec<String> = g
            .placeholders()
            .map(|n| n.label.clone())
            .filter(|l| fused.contains_key(l))
            .collect();
        for child in children {
            let inner = &fused[&child];
            let oracle = fuse(&g, &child, inner).map_err(|source| ChainError::Fusion {
                parent: block.id.clone(),
                child: child.clone(),
                source,
            })?;
            let parts = [(block.id.clone(), g), (child.clone(), inner.clone())];
            let (ai, exchange) = unit_fusion(&parts, backend, kb, opts)?;
            transcript.push(exchange);
            if ai.label_multiset() != oracle.label_multiset()
                || ai.edge_label_multiset() != oracle.edge_label_multiset()
            {
                warnings.push(format!("fusion of {child} into {}: unit output differs from the oracle", block.id));
            }
            g = oracle;
        }
        fused.insert(block.id.clone(), g);
    }
    let final_cfg = fused.remove(&root).expect("root block is part of the trace");
    Ok(ChainResult { final_cfg, peel_trace: trace, block_cfgs, variant, transcript, warnings })
}

type BlockResult = Result<(Cfg, Exchange), UnitError>;

fn block_cfgs_parallel(
    blocks: &[&NestedBlock],
    indents: &HashMap<String, usize>,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    opts: &UnitOptions,
    jobs: usize,
) -> Vec<BlockResult> {
    let slots: Vec<Mutex<Option<BlockResult>>> = blocks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(block) = blocks.get(i) else { break };
        let indent = indents.get(&block.id).copied().unwrap_or(0);
        *slots[i].lock().unwrap() = Some(unit_block_cfg(block, indent, backend, kb, opts));
    };
    let workers = jobs.clamp(1, blocks.len().max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every block is processed")).collect()
}

/// Rebuilds the input from the trace: splice the last masked text back
/// through every step.
pub fn reconstruct(result: &ChainResult) -> Result<String, ChainError> {
    let Some(last) = result.peel_trace.last() else { return Ok(String::new()) };
    let mut text = last.masked.text.clone();
    for step in result.peel_trace.iter().rev() {
        text = splice(&MaskedCode { text, substitutions: step.masked.substitutions.clone() })?;
    }
    Ok(text)
}

/// Kind of a block id, for callers holding only the id.
pub fn kind_of(id: &str) -> Option<BlockKind> {
    parse_block_id(id).map(|(k, _)| k)
}
