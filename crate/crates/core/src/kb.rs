//! Example store for few-shot prompts.
//!
//! Layout: `<dir>/<unit>/<kind>/<nn>.json`, where `<kind>` is a block kind or
//! `generic` for the block CFG unit and `any` for the others.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfg::validate_cfg;
use crate::prompt::{parse_extract_text, parse_structure_text, UnitId, EXAMPLES_PER_UNIT};
use crate::source::{tokenize, BlockKind, TokenKind};

pub const GENERIC: &str = "generic";
pub const ANY: &str = "any";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub unit: UnitId,
    pub kind: Option<String>,
    pub input: String,
    pub output: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    buckets: BTreeMap<(UnitId, String), Vec<ExampleRecord>>,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no {unit} examples for kind `{kind}`")]
    MissingKindSet { unit: UnitId, kind: String },
    #[error("{unit}/{kind} has {found} examples, expected {expected}")]
    SetSize { unit: UnitId, kind: String, found: usize, expected: usize },
    #[error("{file}: {violation}")]
    InvalidExample { file: PathBuf, violation: String },
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
}

/// Example counts the loader insists on.
fn required_sets() -> Vec<(UnitId, String, usize)> {
    let mut v = vec![
        (UnitId::Structure, ANY.to_string(), EXAMPLES_PER_UNIT),
        (UnitId::Extract, ANY.to_string(), EXAMPLES_PER_UNIT),
        (UnitId::Fusion, ANY.to_string(), EXAMPLES_PER_UNIT),
        (UnitId::Cot, ANY.to_string(), 1),
    ];
    for kind in BlockKind::ALL {
        v.push((UnitId::BlockCfg, kind.as_str().to_string(), EXAMPLES_PER_UNIT));
    }
    v.push((UnitId::BlockCfg, GENERIC.to_string(), EXAMPLES_PER_UNIT));
    v
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> KbError + '_ {
    move |source| KbError::Io { path: path.to_path_buf(), source }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, KbError> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io(dir))?;
    v.sort();
    Ok(v)
}

pub fn load_kb(dir: &Path) -> Result<KnowledgeBase, KbError> {
    let mut kb = KnowledgeBase::default();
    for unit_dir in sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()) {
        let name = unit_dir.file_name().unwrap().to_string_lossy().to_string();
        let unit: UnitId = name.parse().map_err(|e: String| KbError::InvalidExample {
            file: unit_dir.clone(),
            violation: e,
        })?;
        for kind_dir in sorted_entries(&unit_dir)?.into_iter().filter(|p| p.is_dir()) {
            let kind = kind_dir.file_name().unwrap().to_string_lossy().to_string();
            check_kind_dir(unit, &kind).map_err(|violation| KbError::InvalidExample {
                file: kind_dir.clone(),
                violation,
            })?;
            let files = sorted_entries(&kind_dir)?
                .into_iter()
                .filter(|p| p.extension().is_some_and(|e| e == "json"));
            for file in files {
                let text = std::fs::read_to_string(&file).map_err(io(&file))?;
                let record: ExampleRecord = serde_json::from_str(&text).map_err(|e| {
                    KbError::InvalidExample { file: file.clone(), violation: e.to_string() }
                })?;
                check_record(&record, unit, &kind)
                    .map_err(|violation| KbError::InvalidExample { file: file.clone(), violation })?;
                kb.buckets.entry((unit, kind.clone())).or_default().push(record);
            }
        }
    }
    for (unit, kind, expected) in required_sets() {
        match kb.buckets.get(&(unit, kind.clone())) {
            None => return Err(KbError::MissingKindSet { unit, kind }),
            Some(v) if v.len() != expected => {
                return Err(KbError::SetSize { unit, kind, found: v.len(), expected })
            }
            Some(_) => {}
        }
    }
    Ok(kb)
}

fn check_kind_dir(unit: UnitId, kind: &str) -> Result<(), String> {
    let ok = match unit {
        UnitId::BlockCfg => kind == GENERIC || kind.parse::<BlockKind>().is_ok(),
        _ => kind == ANY,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("`{kind}` is not a kind directory of {unit}"))
    }
}

/// Block ids appearing as identifier tokens of `text`.
pub(crate) fn placeholder_words(text: &str) -> Vec<String> {
    tokenize(text)
        .tokens
        .into_iter()
        .filter(|t| t.kind == TokenKind::Identifier && crate::source::is_block_id(&t.lexeme))
        .map(|t| t.lexeme)
        .collect()
}

fn check_record(r: &ExampleRecord, unit: UnitId, kind: &str) -> Result<(), String> {
    if r.unit != unit {
        return Err(format!("unit `{}` filed under `{unit}`", r.unit));
    }
    let want_kind = (kind != ANY).then_some(kind);
    if r.kind.as_deref() != want_kind {
        return Err(format!("kind {:?} filed under `{kind}`", r.kind));
    }
    if r.input.trim().is_empty() {
        return Err("empty input".into());
    }
    match unit {
        UnitId::Structure => {
            let h = parse_structure_text(&r.output).map_err(|e| e.to_string())?;
            if h.is_empty() {
                return Err("empty structure".into());
            }
        }
        UnitId::Extract => {
            let blocks = parse_extract_text(&r.output).map_err(|e| e.to_string())?;
            if blocks.is_empty() {
                return Err("no blocks".into());
            }
            if let Some((id, _)) = blocks.iter().find(|(_, text)| !r.input.contains(text.as_str())) {
                return Err(format!("block `{id}` is not part of the input"));
            }
        }
        UnitId::BlockCfg | UnitId::Fusion | UnitId::Cot | UnitId::Direct => {
            let g = crate::prompt::parse_final_cfgtext(&r.output).map_err(|e| e.to_string())?;
            let violations = validate_cfg(&g);
            if !violations.is_empty() {
                return Err(format!("cfg violations: {violations:?}"));
            }
            let mut got: Vec<String> = g.placeholders().map(|n| n.label.clone()).collect();
            let mut expected = if unit == UnitId::BlockCfg { placeholder_words(&r.input) } else { Vec::new() };
            got.sort();
            expected.sort();
            if got != expected {
                return Err(format!("placeholder nodes {got:?} do not match the input's {expected:?}"));
            }
        }
    }
    Ok(())
}

impl KnowledgeBase {
    pub fn len(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> impl Iterator<Item = &ExampleRecord> {
        self.buckets.values().flatten()
    }

    pub fn count(&self, unit: UnitId) -> usize {
        self.buckets.iter().filter(|((u, _), _)| *u == unit).map(|(_, v)| v.len()).sum()
    }
}

/// The first `k` records of a bucket, in file order. `kind` is a block kind
/// or `generic` for the block CFG unit and ignored otherwise.
pub fn retrieve_examples<'a>(
    kb: &'a KnowledgeBase,
    unit: UnitId,
    kind: Option<&str>,
    k: usize,
) -> Result<Vec<&'a ExampleRecord>, KbError> {
    let key = match unit {
        UnitId::BlockCfg => {
            let kind = kind.ok_or_else(|| KbError::UnknownKind(String::new()))?;
            if kind != GENERIC && kind.parse::<BlockKind>().is_err() {
                return Err(KbError::UnknownKind(kind.to_string()));
            }
            kind
        }
        _ => ANY,
    };
    Ok(kb
        .buckets
        .get(&(unit, key.to_string()))
        .map(|v| v.iter().take(k).collect())
        .unwrap_or_default())
}
