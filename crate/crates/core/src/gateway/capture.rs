//! Request/response capture log and its scripted replay.
//!
//! The capture log is JSONL, one [`TranscriptEntry`] per line. The same file
//! loads as a [`ScriptedTranscript`], which hands the recorded responses back
//! in order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, ChatResponse, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<ChatRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ChatResponse>,
    /// Recorded failure, replayed as a transport error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TranscriptEntry {
    pub fn text(text: impl Into<String>) -> Self {
        let text = text.into();
        let completion_tokens = text.split_whitespace().count() as u32;
        Self {
            request: None,
            response: Some(ChatResponse { text, prompt_tokens: 0, completion_tokens, latency_ms: 0 }),
            error: None,
        }
    }
}

/// Wraps a provider and appends every exchange to a JSONL sink.
pub struct CaptureProvider<P> {
    inner: P,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl<P: ChatProvider> CaptureProvider<P> {
    pub fn to_file(inner: P, path: &Path) -> std::io::Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::to_writer(inner, Box::new(BufWriter::new(file))))
    }

    pub fn to_writer(inner: P, sink: Box<dyn Write + Send>) -> Self {
        Self { inner, sink: Mutex::new(sink) }
    }
}

impl<P: ChatProvider> ChatProvider for CaptureProvider<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let result = self.inner.complete(request);
        let entry = TranscriptEntry {
            request: Some(request.clone()),
            response: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(ToString::to_string),
        };
        let line = serde_json::to_string(&entry).expect("transcript entry serialises");
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(sink, "{line}").and_then(|_| sink.flush()) {
            tracing::warn!("failed to write capture log: {e}");
        }
        result
    }

    fn max_parallelism(&self) -> usize {
        self.inner.max_parallelism()
    }
}

/// Recorded responses replayed in file order.
#[derive(Debug)]
pub struct ScriptedTranscript {
    entries: Vec<TranscriptEntry>,
    cursor: Mutex<usize>,
}

impl ScriptedTranscript {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Self { entries, cursor: Mutex::new(0) }
    }

    pub fn from_texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::new(texts.into_iter().map(TranscriptEntry::text).collect())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - *self.cursor.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub(crate) fn next_response(&self, _request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut cursor = self.cursor.lock().unwrap_or_else(|e| e.into_inner());
        let Some(entry) = self.entries.get(*cursor) else {
            return Err(GatewayError::Transport("scripted transcript exhausted".into()));
        };
        *cursor += 1;
        match (&entry.response, &entry.error) {
            (Some(r), _) => Ok(r.clone()),
            (None, Some(e)) => Err(GatewayError::Transport(format!("scripted failure: {e}"))),
            (None, None) => Err(GatewayError::Malformed("transcript entry has no response".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockBehaviour, MockProvider};

    #[test]
    fn capture_then_replay_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("capture.jsonl");
        let live = CaptureProvider::to_file(MockProvider::auto(3), &path).unwrap();
        let requests: Vec<ChatRequest> =
            (0..4).map(|i| ChatRequest::new(format!("Task: thing {i}")).with_replicate(i)).collect();
        let recorded: Vec<ChatResponse> = requests.iter().map(|r| live.complete(r).unwrap()).collect();
        drop(live);

        let replay = MockProvider::new(0, MockBehaviour::Scripted(ScriptedTranscript::load(&path).unwrap()));
        assert_eq!(replay.max_parallelism(), 1);
        for (req, want) in requests.iter().zip(&recorded) {
            assert_eq!(&replay.complete(req).unwrap(), want);
        }
        assert!(matches!(replay.complete(&requests[0]), Err(GatewayError::Transport(_))));
    }
}
