//! Evidence domain types, bundle loading and identity reconciliation.
//!
//! A bundle is a directory of heterogeneous project evidence (version
//! control log, chat exports, email, meetings, tasks, peer assessment,
//! context records, prose/code documents and media). Loading resolves every
//! alias through an [`IdentityMap`]; aliases that do not resolve are kept
//! on the record and listed in [`EvidenceBundle::unresolved_aliases`].

mod git;
mod identity;
mod load;
mod time;
mod write;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use git::{parse_git_numstat, parse_git_numstat_file, render_git_log, GitLog};
pub use identity::{IdentityEntry, IdentityMap, SourceKind};
pub use load::{load_bundle, load_bundle_with_default_identities, FileCount, LoadReport};
pub use time::{Timestamp, Window};
pub use write::write_bundle_dir;

#[derive(Debug, thiserror::Error)]
pub enum EvidenceError {
    #[error("bundle manifest not found at {0}")]
    MissingManifest(PathBuf),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("roster must contain at least 2 students, found {0}")]
    RosterTooSmall(usize),
    #[error("project window start must precede its end")]
    EmptyWindow,
    #[error("alias {alias:?} ({kind}) maps to both {first} and {second}")]
    ConflictingIdentity {
        alias: String,
        kind: SourceKind,
        first: StudentId,
        second: StudentId,
    },
    #[error("identity entry for {alias:?} ({kind}) names {student}, who is not on the roster")]
    IdentityOutsideRoster {
        alias: String,
        kind: SourceKind,
        student: StudentId,
    },
    #[error("invalid identities file: {0}")]
    InvalidIdentities(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Opaque roster identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StudentId(String);

impl StudentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StudentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StudentId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Student {
    pub id: StudentId,
    pub display_name: String,
}

/// One problem found while reading a bundle file. Records with problems
/// are excluded from the bundle and reported here instead.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseIssue {
    pub file: String,
    /// 1-based line for line-oriented files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    /// 0-based element index for JSON array files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub message: String,
}

impl ParseIssue {
    pub fn at(file: &str, line: usize, message: impl Into<String>) -> Self {
        Self {
            file: file.to_string(),
            line: Some(line),
            index: None,
            message: message.into(),
        }
    }

    pub fn element(file: &str, index: usize, message: impl Into<String>) -> Self {
        Self {
            file: file.to_string(),
            line: None,
            index: Some(index),
            message: message.into(),
        }
    }

    pub fn file(file: &str, message: impl Into<String>) -> Self {
        Self {
            file: file.to_string(),
            line: None,
            index: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.index) {
            (Some(l), _) => write!(f, "{}:{}: {}", self.file, l, self.message),
            (None, Some(i)) => write!(f, "{}[{}]: {}", self.file, i, self.message),
            (None, None) => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub hash: String,
    pub author_alias: String,
    pub author: Option<StudentId>,
    pub timestamp: Timestamp,
    pub lines_added: u64,
    pub lines_deleted: u64,
    pub files: Vec<String>,
    pub message: String,
    pub out_of_window: bool,
}

impl CommitRecord {
    /// Added minus deleted lines, floored at zero.
    pub fn net_lines(&self) -> u64 {
        self.lines_added.saturating_sub(self.lines_deleted)
    }

    pub fn churn(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    Prose,
    Code,
}

impl ArtifactKind {
    const CODE_EXTENSIONS: &'static [&'static str] = &[
        "rs", "py", "js", "ts", "tsx", "jsx", "java", "kt", "c", "h", "cc", "cpp", "hpp", "cs",
        "go", "rb", "swift", "scala", "sh", "sql", "html", "css", "php", "r", "m",
    ];

    pub fn from_path(path: &str) -> Self {
        let ext = path
            .rsplit_once('.')
            .map(|(_, e)| e.to_ascii_lowercase())
            .unwrap_or_default();
        if Self::CODE_EXTENSIONS.contains(&ext.as_str()) {
            ArtifactKind::Code
        } else {
            ArtifactKind::Prose
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorSpan {
    pub student: StudentId,
    pub word_count: u64,
    pub char_count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextArtifact {
    /// Path relative to the bundle root, e.g. `text/report.md`.
    pub path: String,
    pub kind: ArtifactKind,
    pub per_author_spans: Vec<AuthorSpan>,
    pub body: String,
}

impl TextArtifact {
    pub fn total_words(&self) -> u64 {
        self.body.split_whitespace().count() as u64
    }

    pub fn span_of(&self, student: &StudentId) -> Option<&AuthorSpan> {
        self.per_author_spans.iter().find(|s| &s.student == student)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediaKind {
    Image,
    Audio,
    Video,
    Slides,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediaArtifact {
    pub path: String,
    pub author: StudentId,
    pub kind: MediaKind,
    pub size_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_count: Option<u32>,
}

impl MediaArtifact {
    /// Checks that kind-specific fields are present exactly when the kind
    /// calls for them.
    pub fn validate(&self) -> Result<(), String> {
        let timed = matches!(self.kind, MediaKind::Audio | MediaKind::Video);
        match (timed, self.duration_seconds) {
            (true, None) => return Err("audio/video media requires duration_seconds".into()),
            (false, Some(_)) => {
                return Err("duration_seconds is only valid for audio/video media".into())
            }
            (true, Some(d)) if !(d.is_finite() && d >= 0.0) => {
                return Err("duration_seconds must be a non-negative number".into())
            }
            _ => {}
        }
        match (self.kind == MediaKind::Slides, self.page_count) {
            (true, None) => Err("slides media requires page_count".into()),
            (false, Some(_)) => Err("page_count is only valid for slides media".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub id: String,
    pub sender_alias: String,
    pub sender: Option<StudentId>,
    pub timestamp: Timestamp,
    pub text: String,
    pub reply_to: Option<String>,
    pub mentions: Vec<String>,
    /// Resolved mention targets, in mention order, unresolved ones omitted.
    pub mentioned: Vec<StudentId>,
    pub channel: String,
    pub out_of_window: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmailRecord {
    pub id: String,
    pub sender_alias: String,
    pub sender: Option<StudentId>,
    pub recipient_aliases: Vec<String>,
    pub recipients: Vec<StudentId>,
    pub timestamp: Timestamp,
    pub subject: String,
    pub body: String,
    pub out_of_window: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeetingRecord {
    pub id: String,
    pub start: Timestamp,
    pub duration_minutes: f64,
    pub attendee_aliases: Vec<String>,
    pub attendees: Vec<StudentId>,
    pub minutes_text: String,
    pub out_of_window: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Open,
    Done,
    Abandoned,
}

/// Fixed task taxonomy; task diversity is an entropy over it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskCategory {
    Research,
    Writing,
    Coding,
    Design,
    Admin,
    Review,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 6] = [
        TaskCategory::Research,
        TaskCategory::Writing,
        TaskCategory::Coding,
        TaskCategory::Design,
        TaskCategory::Admin,
        TaskCategory::Review,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskCategory::Research => "research",
            TaskCategory::Writing => "writing",
            TaskCategory::Coding => "coding",
            TaskCategory::Design => "design",
            TaskCategory::Admin => "admin",
            TaskCategory::Review => "review",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
    }

    /// Keyword fallback for records that carry no category. First matching
    /// rule wins; anything unmatched is treated as admin work.
    pub fn classify(text: &str) -> Self {
        const RULES: &[(TaskCategory, &[&str])] = &[
            (TaskCategory::Review, &["review", "test", "proofread", "check", "qa"]),
            (TaskCategory::Coding, &["code", "implement", "fix", "bug", "refactor", "api", "build"]),
            (TaskCategory::Design, &["design", "mockup", "diagram", "ui", "ux", "architecture"]),
            (TaskCategory::Research, &["research", "investigate", "survey", "literature", "explore"]),
            (TaskCategory::Writing, &["write", "draft", "report", "document", "essay", "section"]),
        ];
        let lower = text.to_lowercase();
        let words: BTreeSet<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        RULES
            .iter()
            .find(|(_, keys)| {
                keys.iter()
                    .any(|k| words.iter().any(|w| w.starts_with(k)))
            })
            .map(|(c, _)| *c)
            .unwrap_or(TaskCategory::Admin)
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub title: String,
    pub description: String,
    pub assignee_alias: Option<String>,
    pub assignee: Option<StudentId>,
    pub created: Timestamp,
    pub due: Option<Timestamp>,
    pub completed_at: Option<Timestamp>,
    pub status: TaskStatus,
    pub category: TaskCategory,
    pub out_of_window: bool,
}

impl TaskRecord {
    pub fn validate(&self) -> Result<(), String> {
        match (self.status, self.completed_at) {
            (TaskStatus::Done, None) => Err("done task requires completed_at".into()),
            (TaskStatus::Open | TaskStatus::Abandoned, Some(_)) => {
                Err("completed_at is only valid for done tasks".into())
            }
            (_, Some(c)) if c < self.created => Err("completed_at precedes created".into()),
            _ => Ok(()),
        }
    }

    /// Done on or before the due date (no due date counts as on time).
    pub fn done_on_time(&self) -> bool {
        match (self.status, self.completed_at, self.due) {
            (TaskStatus::Done, Some(c), Some(d)) => c <= d,
            (TaskStatus::Done, Some(_), None) => true,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerAssessmentItem {
    pub rater_alias: String,
    pub rater: Option<StudentId>,
    pub ratee_alias: String,
    pub ratee: Option<StudentId>,
    pub category_label: String,
    pub score: u8,
    pub comment: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextKind {
    PersonalCircumstanceAbsence,
    PastGrade,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub student: StudentId,
    pub kind: ContextKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default)]
    pub note: String,
}

impl ContextRecord {
    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            ContextKind::PersonalCircumstanceAbsence => match self.interval {
                None => Err("absence record requires an interval".into()),
                Some(w) if w.start >= w.end => Err("absence interval is empty".into()),
                _ => Ok(()),
            },
            ContextKind::PastGrade => match self.value {
                None => Err("past-grade record requires a value".into()),
                Some(v) if !(0.0..=100.0).contains(&v) => {
                    Err(format!("past grade {v} outside 0..100"))
                }
                _ => Ok(()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnresolvedAlias {
    pub source_kind: SourceKind,
    pub alias: String,
}

/// The complete, identity-resolved evidence of one team project.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub project_id: String,
    pub project_window: Window,
    pub team_grade: f64,
    pub roster: Vec<Student>,
    pub allow_self_assessment: bool,
    pub task_description: String,
    pub commits: Vec<CommitRecord>,
    pub text_artifacts: Vec<TextArtifact>,
    pub media_artifacts: Vec<MediaArtifact>,
    pub chat_messages: Vec<ChatMessage>,
    pub emails: Vec<EmailRecord>,
    pub meetings: Vec<MeetingRecord>,
    pub tasks: Vec<TaskRecord>,
    pub pa_items: Vec<PeerAssessmentItem>,
    pub context_records: Vec<ContextRecord>,
    pub unresolved_aliases: Vec<UnresolvedAlias>,
}

impl EvidenceBundle {
    pub fn student_ids(&self) -> Vec<StudentId> {
        self.roster.iter().map(|s| s.id.clone()).collect()
    }

    pub fn is_on_roster(&self, id: &StudentId) -> bool {
        self.roster.iter().any(|s| &s.id == id)
    }

    pub fn display_name(&self, id: &StudentId) -> Option<&str> {
        self.roster
            .iter()
            .find(|s| &s.id == id)
            .map(|s| s.display_name.as_str())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = crate::canonical::to_canonical_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_invariants() {
        let t = |status, completed: Option<&str>| TaskRecord {
            id: "t".into(),
            title: "x".into(),
            description: String::new(),
            assignee_alias: None,
            assignee: None,
            created: Timestamp::parse("2024-01-02T00:00:00Z").unwrap(),
            due: None,
            completed_at: completed.map(|c| Timestamp::parse(c).unwrap()),
            status,
            category: TaskCategory::Admin,
            out_of_window: false,
        };
        assert!(t(TaskStatus::Done, Some("2024-01-03T00:00:00Z")).validate().is_ok());
        assert!(t(TaskStatus::Done, None).validate().is_err());
        assert!(t(TaskStatus::Open, Some("2024-01-03T00:00:00Z")).validate().is_err());
        assert!(t(TaskStatus::Done, Some("2024-01-01T00:00:00Z")).validate().is_err());
    }

    #[test]
    fn media_kind_fields() {
        let mut m = MediaArtifact {
            path: "media/a.mp4".into(),
            author: "s1".into(),
            kind: MediaKind::Video,
            size_bytes: 10,
            duration_seconds: Some(60.0),
            page_count: None,
        };
        assert!(m.validate().is_ok());
        m.page_count = Some(2);
        assert!(m.validate().is_err());
        m.kind = MediaKind::Slides;
        m.duration_seconds = None;
        assert!(m.validate().is_ok());
    }

    #[test]
    fn category_fallback() {
        assert_eq!(TaskCategory::classify("Implement the parser"), TaskCategory::Coding);
        assert_eq!(TaskCategory::classify("Book a room"), TaskCategory::Admin);
        assert_eq!(TaskCategory::parse("Writing"), Some(TaskCategory::Writing));
    }

    #[test]
    fn artifact_kind() {
        assert_eq!(ArtifactKind::from_path("text/main.rs"), ArtifactKind::Code);
        assert_eq!(ArtifactKind::from_path("text/report.md"), ArtifactKind::Prose);
    }
}
