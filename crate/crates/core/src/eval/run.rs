//! Evaluation runs over a corpus directory.
//!
//! Samples are `<corpus>/<id>.java`; the gold CFG of a sample is
//! `<gold>/<base>.cfg`, where `<base>` is the id up to its first `.`. Injected
//! samples are named `<base>.<kind>.<seed>` and share the gold of `<base>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::coverage::coverage;
use crate::cfg::{parse_cfgtext, Cfg, CfgTextError};
use crate::chain::{run_pipeline, Limits, Variant};
use crate::gateway::Backend;
use crate::kb::KnowledgeBase;
use crate::source::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub id: String,
    pub node_cov: f64,
    pub edge_cov: f64,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub node_cov: f64,
    pub edge_cov: f64,
    pub samples: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub variant: Variant,
    pub samples: Vec<SampleResult>,
    /// `None` for an empty corpus.
    pub means: Option<Means>,
    pub by_kind: BTreeMap<String, Means>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no gold CFG for sample `{0}`")]
    GoldMissing(String),
    #[error("{path}: {source}")]
    Gold { path: PathBuf, source: CfgTextError },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io { path: path.to_path_buf(), source }
}

/// `(id, path)` of every `.java` file, sorted by id.
pub fn corpus_samples(corpus: &Path) -> Result<Vec<(String, PathBuf)>, EvalError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(corpus).map_err(io(corpus))? {
        let path = entry.map_err(io(corpus))?.path();
        if path.extension().is_some_and(|e| e == "java") {
            let id = path.file_stem().unwrap().to_string_lossy().to_string();
            out.push((id, path));
        }
    }
    out.sort();
    Ok(out)
}

fn base_id(id: &str) -> &str {
    id.split('.').next().unwrap_or(id)
}

fn kind_of_sample(id: &str) -> Option<String> {
    id.split('.').nth(1).map(str::to_string)
}

pub fn load_gold(path: &Path) -> Result<Cfg, EvalError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    parse_cfgtext(&text).map_err(|source| EvalError::Gold { path: path.to_path_buf(), source })
}

fn means<'a>(rows: impl Iterator<Item = &'a SampleResult>) -> Option<Means> {
    let rows: Vec<_> = rows.collect();
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    Some(Means {
        node_cov: rows.iter().map(|r| r.node_cov).sum::<f64>() / n,
        edge_cov: rows.iter().map(|r| r.edge_cov).sum::<f64>() / n,
        samples: rows.len(),
        failed: rows.iter().filter(|r| r.failed).count(),
    })
}

pub fn run_eval(
    corpus: &Path,
    gold_dir: &Path,
    variant: Variant,
    backend: &dyn Backend,
    kb: &KnowledgeBase,
    limits: &Limits,
) -> Result<EvalReport, EvalError> {
    let samples = corpus_samples(corpus)?;
    let mut golds = BTreeMap::new();
    for (id, _) in &samples {
        let base = base_id(id);
        if !golds.contains_key(base) {
            let path = gold_dir.join(format!("{base}.cfg"));
            if !path.is_file() {
                return Err(EvalError::GoldMissing(id.clone()));
            }
            golds.insert(base.to_string(), load_gold(&path)?);
        }
    }

    let mut rows = Vec::with_capacity(samples.len());
    for (id, path) in &samples {
        let text = crate::load_source(path).map_err(io(path))?;
        let gold = &golds[base_id(id)];
        let scored = run_pipeline(&tokenize(&text), backend, kb, variant, limits)
            .map_err(|e| e.to_string())
            .and_then(|r| coverage(&r.final_cfg, gold).map_err(|e| e.to_string()));
        rows.push(match scored {
            Ok(c) => SampleResult {
                id: id.clone(),
                node_cov: c.node_coverage,
                edge_cov: c.edge_coverage,
                failed: false,
                kind: kind_of_sample(id),
                error: None,
            },
            Err(e) => {
                log::warn!("{id}: {e}");
                SampleResult {
                    id: id.clone(),
                    node_cov: 0.0,
                    edge_cov: 0.0,
                    failed: true,
                    kind: kind_of_sample(id),
                    error: Some(e),
                }
            }
        });
    }

    let mut by_kind = BTreeMap::new();
    let kinds: std::collections::BTreeSet<&str> = rows.iter().filter_map(|r| r.kind.as_deref()).collect();
    for k in kinds {
        if let Some(m) = means(rows.iter().filter(|r| r.kind.as_deref() == Some(k))) {
            by_kind.insert(k.to_string(), m);
        }
    }
    Ok(EvalReport {
        dataset: corpus.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default(),
        variant,
        means: means(rows.iter()),
        samples: rows,
        by_kind,
    })
}

pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| dataset | method | node | edge | samples | failed |");
    let _ = writeln!(out, "|---|---|---|---|---|---|");
    let mut row = |name: &str, m: &Means| {
        let _ = writeln!(
            out,
            "| {name} | {} | {:.2} | {:.2} | {} | {} |",
            report.variant, m.node_cov, m.edge_cov, m.samples, m.failed
        );
    };
    if let Some(m) = &report.means {
        row(&report.dataset, m);
    }
    for (k, m) in &report.by_kind {
        row(&format!("{}/{k}", report.dataset), m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids() {
        assert_eq!(base_id("s03.missing_brace.2"), "s03");
        assert_eq!(kind_of_sample("s03.missing_brace.2").as_deref(), Some("missing_brace"));
        assert_eq!(kind_of_sample("s03"), None);
    }

    #[test]
    fn empty_means() {
        assert_eq!(means(std::iter::empty()), None);
    }
}
