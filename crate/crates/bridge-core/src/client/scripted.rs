//! Canned-response backend for deterministic tests: pops a FIFO queue.

use super::{Backend, BackendKind, ClientError, CompletionRequest, CompletionResponse};
use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub struct ScriptedBackend {
    queue: Mutex<VecDeque<String>>,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> ScriptedBackend
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            queue: Mutex::new(responses.into_iter().map(Into::into).collect()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap().len()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = self
            .queue
            .lock()
            .unwrap()
            .pop_front()
            .ok_or(ClientError::ScriptExhausted)?;
        Ok(CompletionResponse {
            text,
            backend: BackendKind::Scripted,
            cached: false,
        })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }
}
