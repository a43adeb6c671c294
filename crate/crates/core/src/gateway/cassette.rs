//! JSON Lines cassettes: record prompt/completion pairs, replay them by
//! exact prompt digest.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Backend, BackendError, BackendRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub key: String,
    pub unit_id: String,
    pub prompt_text: String,
    pub completion_text: String,
    pub model: String,
    pub recorded_at: String,
}

/// Lower-case hex SHA-256 of the prompt.
pub fn cassette_key(prompt_text: &str) -> String {
    hex::encode(Sha256::digest(prompt_text.as_bytes()))
}

/// Loaded cassette. Lookups read an immutable snapshot; appends are
/// serialized and also written through to the file when one is attached.
#[derive(Debug, Default)]
pub struct Cassette {
    entries: RwLock<Arc<HashMap<String, CassetteEntry>>>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl Cassette {
    pub fn in_memory() -> Self {
        Cassette::default()
    }

    /// Reads a cassette file. The first entry wins for a repeated key.
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let map = read_entries(path)?;
        Ok(Cassette { entries: RwLock::new(Arc::new(map)), file: None, path: Some(path.into()) })
    }

    /// Opens `path` for appending, loading what it already holds.
    pub fn open_append(path: &Path) -> std::io::Result<Self> {
        let map = if path.exists() { read_entries(path)? } else { HashMap::new() };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Cassette {
            entries: RwLock::new(Arc::new(map)),
            file: Some(Mutex::new(file)),
            path: Some(path.into()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn snapshot(&self) -> Arc<HashMap<String, CassetteEntry>> {
        self.entries.read().unwrap().clone()
    }

    pub fn lookup(&self, prompt_text: &str) -> Option<CassetteEntry> {
        self.snapshot().get(&cassette_key(prompt_text)).cloned()
    }

    /// Adds an entry unless its key is present. Returns whether it was added.
    pub fn append(&self, entry: CassetteEntry) -> std::io::Result<bool> {
        let mut guard = self.entries.write().unwrap();
        if guard.contains_key(&entry.key) {
            return Ok(false);
        }
        if let Some(file) = &self.file {
            let mut line = serde_json::to_string(&entry)?;
            line.push('\n');
            let mut f = file.lock().unwrap();
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        let mut map = HashMap::clone(&guard);
        map.insert(entry.key.clone(), entry);
        *guard = Arc::new(map);
        Ok(true)
    }
}

fn read_entries(path: &Path) -> std::io::Result<HashMap<String, CassetteEntry>> {
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CassetteEntry = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {e}", path.display(), i + 1),
            )
        })?;
        map.entry(entry.key.clone()).or_insert(entry);
    }
    Ok(map)
}

pub struct ReplayBackend {
    cassette: Cassette,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> Self {
        ReplayBackend { cassette }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(ReplayBackend::new(Cassette::load(path)?))
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        self.cassette
            .lookup(&req.prompt_text)
            .map(|e| e.completion_text)
            .ok_or_else(|| BackendError::CassetteMiss { unit: req.unit_id.clone() })
    }

    fn model(&self) -> &str {
        "replay"
    }
}

/// Forwards to `inner` and appends each new exchange to the cassette.
/// Prompts already on the cassette are answered from it.
pub struct RecordingBackend<B> {
    inner: B,
    cassette: Cassette,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B, cassette: Cassette) -> Self {
        RecordingBackend { inner, cassette }
    }

    pub fn cassette(&self) -> &Cassette {
        &self.cassette
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        if let Some(hit) = self.cassette.lookup(&req.prompt_text) {
            return Ok(hit.completion_text);
        }
        let completion = self.inner.complete(req)?;
        self.cassette.append(CassetteEntry {
            key: cassette_key(&req.prompt_text),
            unit_id: req.unit_id.clone(),
            prompt_text: req.prompt_text.clone(),
            completion_text: completion.clone(),
            model: self.inner.model().to_string(),
            recorded_at: chrono::Utc::now().to_rfc3339(),
        })?;
        Ok(completion)
    }

    fn model(&self) -> &str {
        self.inner.model()
    }
}
