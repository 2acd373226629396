//! Language-model provider interface, transcript store and the three
//! implementations: a deterministic mock, an HTTP client and a replayer
//! that answers from a recorded transcript.
//!
//! Every request goes through a [`Session`], which appends the exchange to
//! the run transcript before the caller sees the response.

pub mod embed;
pub mod http;
pub mod mock;
pub mod replay;

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use embed::{hash_embedding, MOCK_DIMENSION};
pub use http::HttpProvider;
pub use mock::MockProvider;
pub use replay::ReplayProvider;

/// What a request is for. Providers may specialise on it; the mock does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Embed,
    ExtractStructure,
    HypotheticalDocument,
    GradeQuality,
    LocalSummary,
    GlobalJudgment,
    CrossExamine,
}

impl Purpose {
    pub fn as_str(&self) -> &'static str {
        match self {
            Purpose::Embed => "embed",
            Purpose::ExtractStructure => "extract-structure",
            Purpose::HypotheticalDocument => "hypothetical-document",
            Purpose::GradeQuality => "grade-quality",
            Purpose::LocalSummary => "local-summary",
            Purpose::GlobalJudgment => "global-judgment",
            Purpose::CrossExamine => "cross-examine",
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Purpose {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown purpose {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentRole {
    System,
    User,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub role: SegmentRole,
    pub content: String,
}

/// For [`Purpose::Embed`] each user segment is one input text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub purpose: Purpose,
    pub segments: Vec<Segment>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ProviderRequest {
    pub fn completion(purpose: Purpose, system: &str, user: String, max_tokens: u32) -> Self {
        Self {
            purpose,
            segments: vec![
                Segment {
                    role: SegmentRole::System,
                    content: system.to_string(),
                },
                Segment {
                    role: SegmentRole::User,
                    content: user,
                },
            ],
            temperature: 0.0,
            max_tokens,
        }
    }

    pub fn embed(texts: &[String]) -> Self {
        Self {
            purpose: Purpose::Embed,
            segments: texts
                .iter()
                .map(|t| Segment {
                    role: SegmentRole::User,
                    content: t.clone(),
                })
                .collect(),
            temperature: 0.0,
            max_tokens: 0,
        }
    }

    /// Concatenated user content.
    pub fn user_text(&self) -> String {
        self.segments
            .iter()
            .filter(|s| s.role == SegmentRole::User)
            .map(|s| s.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// SHA-256 over the canonical JSON form; the replay key.
    pub fn digest(&self) -> String {
        let json = crate::canonical::to_canonical_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embeddings: Vec<Vec<f64>>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub provider_id: String,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider returned an invalid payload: {0}")]
    Malformed(String),
    #[error("no recorded response for {purpose} request {digest}")]
    NotRecorded { purpose: Purpose, digest: String },
}

pub trait Provider: Send + Sync {
    fn id(&self) -> String;
    fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

/// One persisted exchange.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub request_digest: String,
    pub request: ProviderRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ProviderResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Append-only transcript, optionally mirrored to a JSONL file. Appends
/// are serialised by a mutex, so concurrent callers never interleave lines.
#[derive(Debug, Default)]
pub struct Transcript {
    inner: Mutex<TranscriptInner>,
}

#[derive(Debug, Default)]
struct TranscriptInner {
    entries: Vec<TranscriptEntry>,
    sink: Option<(PathBuf, File)>,
}

impl Transcript {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_file(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner: Mutex::new(TranscriptInner {
                entries: Vec::new(),
                sink: Some((path.to_path_buf(), file)),
            }),
        })
    }

    pub fn append(
        &self,
        request: &ProviderRequest,
        outcome: &Result<ProviderResponse, ProviderError>,
    ) -> std::io::Result<u64> {
        let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let seq = inner.entries.len() as u64;
        let entry = TranscriptEntry {
            seq,
            request_digest: request.digest(),
            request: request.clone(),
            response: outcome.as_ref().ok().cloned(),
            error: outcome.as_ref().err().map(|e| e.to_string()),
        };
        if let Some((_, file)) = inner.sink.as_mut() {
            let mut line = serde_json::to_string(&entry).map_err(std::io::Error::other)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        inner.entries.push(entry);
        Ok(seq)
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.inner
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .entries
            .clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_jsonl(&self) -> String {
        self.entries()
            .iter()
            .map(|e| serde_json::to_string(e).unwrap_or_default() + "\n")
            .collect()
    }
}

pub fn read_transcript(path: &Path) -> std::io::Result<Vec<TranscriptEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {e}", path.display(), i + 1),
            )
        })?;
        out.push(entry);
    }
    Ok(out)
}

pub fn parse_transcript(jsonl: &str) -> Result<Vec<TranscriptEntry>, serde_json::Error> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// A provider bound to the transcript of one run.
pub struct Session<'a> {
    pub provider: &'a dyn Provider,
    pub transcript: &'a Transcript,
}

/// Reference to a transcript entry, as recorded in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeRef {
    pub seq: u64,
    pub purpose: Purpose,
    pub request_digest: String,
    pub ok: bool,
}

impl<'a> Session<'a> {
    pub fn new(provider: &'a dyn Provider, transcript: &'a Transcript) -> Self {
        Self {
            provider,
            transcript,
        }
    }

    /// Sends and records. A transcript write failure is reported as the
    /// provider being unavailable, since the response may not be used
    /// unrecorded.
    pub fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let outcome = self.provider.send(request);
        self.transcript
            .append(request, &outcome)
            .map_err(|e| ProviderError::Unavailable(format!("transcript write failed: {e}")))?;
        outcome
    }

    /// Sends a completion and parses the response as JSON with `parse`,
    /// retrying once on a malformed payload.
    pub fn send_parsed<T>(
        &self,
        request: &ProviderRequest,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ProviderError> {
        let mut last = String::new();
        for _ in 0..2 {
            let response = self.send(request)?;
            match parse(&response.text) {
                Ok(v) => return Ok(v),
                Err(e) => last = e,
            }
        }
        Err(ProviderError::Malformed(last))
    }

    /// Embeds `texts` in one request.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let response = self.send(&ProviderRequest::embed(texts))?;
        if response.embeddings.len() != texts.len() {
            return Err(ProviderError::Malformed(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                response.embeddings.len()
            )));
        }
        Ok(response.embeddings)
    }
}

/// Provider selection, from flags or the `EQUISCOPE_PROVIDER*` variables.
#[derive(Clone, Debug, PartialEq)]
pub enum ProviderChoice {
    Mock { seed: u64 },
    Http { url: String, key: Option<String> },
}

impl ProviderChoice {
    pub const ENV_KIND: &'static str = "EQUISCOPE_PROVIDER";
    pub const ENV_URL: &'static str = "EQUISCOPE_PROVIDER_URL";
    pub const ENV_KEY: &'static str = "EQUISCOPE_PROVIDER_KEY";

    /// `kind` overrides `EQUISCOPE_PROVIDER`; the default is the mock.
    pub fn from_env(kind: Option<&str>, seed: u64) -> Result<Self, String> {
        let env_kind = std::env::var(Self::ENV_KIND).ok();
        let kind = kind.map(str::to_string).or(env_kind).unwrap_or_else(|| "mock".into());
        match kind.as_str() {
            "mock" => Ok(ProviderChoice::Mock { seed }),
            "http" => {
                let url = std::env::var(Self::ENV_URL)
                    .map_err(|_| format!("{} must be set for the http provider", Self::ENV_URL))?;
                Ok(ProviderChoice::Http {
                    url,
                    key: std::env::var(Self::ENV_KEY).ok(),
                })
            }
            other => Err(format!("unknown provider {other:?}; expected mock or http")),
        }
    }

    pub fn build(&self) -> Box<dyn Provider> {
        match self {
            ProviderChoice::Mock { seed } => Box::new(MockProvider::new(*seed)),
            ProviderChoice::Http { url, key } => Box::new(HttpProvider::new(url, key.clone())),
        }
    }
}

/// First fenced ```json block in `text`, or the whole text when unfenced.
pub fn json_block(text: &str) -> Option<&str> {
    if let Some(start) = text.find("```json") {
        let rest = &text[start + "```json".len()..];
        let end = rest.find("```")?;
        return Some(rest[..end].trim());
    }
    let t = text.trim();
    (t.starts_with('{') || t.starts_with('[')).then_some(t)
}
