//! Record/replay cache: JSON-lines of request-key -> response text.
//!
//! Replay mode serves only the cache and fails loudly on a miss; it can
//! never reach the network. Record mode wraps another backend, serves
//! repeats from the cache, and appends each new record to the file.

use super::{Backend, BackendKind, ClientError, CompletionRequest, CompletionResponse};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// One cache line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub key: String,
    pub response_text: String,
}

/// Load a cache file into a key -> response map. A missing file is an
/// empty cache only for recording; replay construction requires the file.
pub fn load_cache(path: &Path) -> Result<HashMap<String, String>, ClientError> {
    let file = File::open(path)?;
    let mut map = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReplayRecord = serde_json::from_str(&line).map_err(|e| {
            ClientError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad cache line {}: {e}", idx + 1),
            ))
        })?;
        map.insert(record.key, record.response_text);
    }
    Ok(map)
}

pub struct ReplayBackend {
    cache: HashMap<String, String>,
    calls: AtomicUsize,
}

impl ReplayBackend {
    pub fn open(path: &Path) -> Result<ReplayBackend, ClientError> {
        Ok(ReplayBackend {
            cache: load_cache(path)?,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn from_map(cache: HashMap<String, String>) -> ReplayBackend {
        ReplayBackend {
            cache,
            calls: AtomicUsize::new(0),
        }
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = request.cache_key();
        match self.cache.get(&key) {
            Some(text) => Ok(CompletionResponse {
                text: text.clone(),
                backend: BackendKind::Replay,
                cached: true,
            }),
            None => Err(ClientError::ReplayMiss(key)),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }
}

struct RecordState {
    cache: HashMap<String, String>,
    file: File,
}

/// Wraps another backend and persists every new (request, response) pair.
pub struct RecordBackend {
    inner: Box<dyn Backend>,
    state: Mutex<RecordState>,
    calls: AtomicUsize,
}

impl RecordBackend {
    /// Open (or create) `path` and resume from any records already in it.
    pub fn create(inner: Box<dyn Backend>, path: &Path) -> Result<RecordBackend, ClientError> {
        let cache = if path.exists() {
            load_cache(path)?
        } else {
            HashMap::new()
        };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordBackend {
            inner,
            state: Mutex::new(RecordState { cache, file }),
            calls: AtomicUsize::new(0),
        })
    }
}

impl Backend for RecordBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = request.cache_key();

        // Holding the lock across the inner call serializes writers and
        // keeps identical concurrent requests from recording twice.
        let mut state = self.state.lock().unwrap();
        if let Some(text) = state.cache.get(&key) {
            return Ok(CompletionResponse {
                text: text.clone(),
                backend: BackendKind::Record,
                cached: true,
            });
        }

        let response = self.inner.complete(request)?;
        let record = ReplayRecord {
            key: key.clone(),
            response_text: response.text.clone(),
        };
        let line = serde_json::to_string(&record).expect("record serialization cannot fail");
        state.file.write_all(line.as_bytes())?;
        state.file.write_all(b"\n")?;
        state.file.flush()?;
        state.cache.insert(key, response.text.clone());

        Ok(CompletionResponse {
            text: response.text,
            backend: BackendKind::Record,
            cached: false,
        })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Record
    }
}
