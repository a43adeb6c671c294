//! Error-tolerant control-flow-graph generation for partial code.
//!
//! The pipeline is a chain of completion units: structure hierarchy
//! extraction, nested block extraction, per-block CFG generation and graph
//! fusion. Each unit talks to a pluggable [`gateway::Backend`]; the bundled
//! heuristic backend implements every unit without a model.

pub mod cfg;
pub mod chain;
pub mod eval;
pub mod gateway;
pub mod kb;
pub mod prompt;
pub mod source;

pub use cfg::{Cfg, CfgEdge, CfgNode};
pub use chain::{run_pipeline, ChainError, ChainResult, Limits, Variant};
pub use source::{tokenize, BlockKind, SourceUnit};

use std::path::Path;

/// Reads a source file: invalid UTF-8 is replaced, CRLF becomes LF.
pub fn load_source(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(source::normalize_newlines(&String::from_utf8_lossy(&bytes)))
}
