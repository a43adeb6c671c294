//! Datasets, coverage metrics and evaluation runs.

pub mod coverage;
pub mod inject;
pub mod run;

pub use coverage::{coverage, labels_match, CoverageError, CoverageReport};
pub use inject::{apply_edits, inject_error, invert, Category, Edit, InjectError, InjectionKind, MutationRecord};
pub use run::{render_table, run_eval, EvalError, EvalReport, SampleResult};
