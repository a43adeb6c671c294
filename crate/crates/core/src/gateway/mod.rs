//! Completion backends.
//!
//! Every AI unit call goes through a [`Backend`]. Requests carry the rendered
//! prompt for model backends and the structured unit input for the
//! heuristic one; cassettes key on the prompt only.

pub mod cassette;
pub mod heuristic;
mod remote;

pub use cassette::{cassette_key, Cassette, CassetteEntry, RecordingBackend, ReplayBackend};
pub use heuristic::{heuristic_complete, HeuristicBackend};
pub use remote::{RemoteBackend, RemoteConfig, WireStyle, API_KEY_VAR};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub model: String,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { temperature: 0.0, max_tokens: 2048, model: "heuristic".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub unit_id: String,
    pub prompt_text: String,
    pub structured_input: serde_json::Value,
    pub params: ModelParams,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("cassette has no entry for this {unit} prompt")]
    CassetteMiss { unit: String },
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("transport: {0}")]
    Transport(String),
    #[error("response has no completion text")]
    NoCompletion,
    #[error("unsupported unit `{0}`")]
    UnsupportedUnit(String),
    #[error("bad structured input for {unit}: {detail}")]
    BadInput { unit: String, detail: String },
    #[error("credential variable {0} is not set")]
    MissingCredential(&'static str),
    #[error("cassette io: {0}")]
    Io(#[from] std::io::Error),
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError>;

    /// Model name recorded in cassettes.
    fn model(&self) -> &str;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        (**self).complete(req)
    }

    fn model(&self) -> &str {
        (**self).model()
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        (**self).complete(req)
    }

    fn model(&self) -> &str {
        (**self).model()
    }
}
