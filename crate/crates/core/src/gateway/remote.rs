use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendError, BackendRequest};

pub const API_KEY_VAR: &str = "CFGCHAIN_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireStyle {
    /// `{model, messages: [{role: "user", content}], ..}`
    #[default]
    Chat,
    /// `{model, prompt, ..}`
    Completion,
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub style: WireStyle,
    pub timeout: Duration,
    pub attempts: u32,
    pub backoff: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            style: WireStyle::Chat,
            timeout: Duration::from_secs(60),
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig, api_key: String) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(RemoteBackend { config, api_key, client })
    }

    /// Reads the credential from [`API_KEY_VAR`].
    pub fn from_env(config: RemoteConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_VAR)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(BackendError::MissingCredential(API_KEY_VAR))?;
        RemoteBackend::new(config, key)
    }

    fn body(&self, req: &BackendRequest) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "temperature": req.params.temperature,
            "max_tokens": req.params.max_tokens,
        });
        match self.config.style {
            WireStyle::Chat => {
                body["messages"] = json!([{ "role": "user", "content": req.prompt_text }]);
            }
            WireStyle::Completion => body["prompt"] = json!(req.prompt_text),
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, BackendError> {
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout
                } else {
                    BackendError::Transport(e.to_string())
                }
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Http { status: status.as_u16(), body: text });
        }
        let value: Value = serde_json::from_str(&text).map_err(|_| BackendError::NoCompletion)?;
        extract_completion(&value).ok_or(BackendError::NoCompletion)
    }
}

fn retryable(e: &BackendError) -> bool {
    match e {
        BackendError::Http { status, .. } => *status == 429 || *status >= 500,
        BackendError::Timeout | BackendError::Transport(_) => true,
        _ => false,
    }
}

/// First completion text of a chat, completion or message style response.
pub(crate) fn extract_completion(v: &Value) -> Option<String> {
    let first = &v["choices"][0];
    [
        &first["message"]["content"],
        &first["text"],
        &v["completion"],
        &v["content"][0]["text"],
    ]
    .into_iter()
    .find_map(|c| c.as_str().map(str::to_string))
}

impl Backend for RemoteBackend {
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        let body = self.body(req);
        let mut last = BackendError::Timeout;
        for i in 0..self.config.attempts.max(1) {
            if i > 0 {
                std::thread::sleep(self.config.backoff * 2u32.pow(i - 1));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(e) if retryable(&e) => {
                    log::warn!("remote attempt {} failed: {e}", i + 1);
                    last = e;
                }
                Err(e) => return Err(e),
            }
        }
        Err(last)
    }

    fn model(&self) -> &str {
        &self.config.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ModelParams;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves the canned `(status, body)` responses in order and reports each
    /// request's authorization header and body.
    fn mock(responses: Vec<(u16, &'static str)>) -> (String, mpsc::Receiver<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat", listener.local_addr().unwrap());
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line["authorization:".len()..].trim().to_string();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                tx.send((auth, String::from_utf8(buf).unwrap())).unwrap();
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (url, rx)
    }

    fn req() -> BackendRequest {
        BackendRequest {
            unit_id: "direct".into(),
            prompt_text: "Input:\nx\nOutput:\n".into(),
            structured_input: Value::Null,
            params: ModelParams::default(),
        }
    }

    fn config(url: String) -> RemoteConfig {
        RemoteConfig { backoff: Duration::from_millis(1), ..RemoteConfig::new(url, "m1") }
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, rx) = mock(vec![
            (503, "{}"),
            (200, r#"{"choices":[{"message":{"role":"assistant","content":"cfg v1"}}]}"#),
        ]);
        let b = RemoteBackend::new(config(url), "k-123".into()).unwrap();
        assert_eq!(b.complete(&req()).unwrap(), "cfg v1");
        let (auth, body) = rx.recv().unwrap();
        assert_eq!(auth, "Bearer k-123");
        let body: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(body["temperature"], json!(0.0));
        assert_eq!(body["model"], json!("m1"));
        assert_eq!(body["messages"][0]["content"], json!("Input:\nx\nOutput:\n"));
        assert!(rx.recv().is_ok());
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, rx) = mock(vec![(401, "denied")]);
        let b = RemoteBackend::new(config(url), "k".into()).unwrap();
        match b.complete(&req()) {
            Err(BackendError::Http { status: 401, body }) => assert_eq!(body, "denied"),
            other => panic!("{other:?}"),
        }
        assert!(rx.recv().is_ok());
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let (url, _rx) = mock(vec![(500, "a"), (500, "b"), (500, "c")]);
        let b = RemoteBackend::new(config(url), "k".into()).unwrap();
        assert!(matches!(b.complete(&req()), Err(BackendError::Http { status: 500, .. })));
    }

    #[test]
    fn completion_style_body() {
        let (url, rx) = mock(vec![(200, r#"{"choices":[{"text":"hi"}]}"#)]);
        let cfg = RemoteConfig { style: WireStyle::Completion, ..config(url) };
        let b = RemoteBackend::new(cfg, "k".into()).unwrap();
        assert_eq!(b.complete(&req()).unwrap(), "hi");
        let (_, body) = rx.recv().unwrap();
        let body: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(body["prompt"], json!("Input:\nx\nOutput:\n"));
        assert!(body.get("messages").is_none());
    }

    #[test]
    fn completion_field_fallbacks() {
        assert_eq!(extract_completion(&json!({"completion": "a"})).as_deref(), Some("a"));
        assert_eq!(extract_completion(&json!({"content": [{"text": "b"}]})).as_deref(), Some("b"));
        assert_eq!(extract_completion(&json!({"x": 1})), None);
    }
}
