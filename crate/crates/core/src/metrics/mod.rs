//! Per-student metrics computed directly from an evidence bundle.
//!
//! Every metric carries a fixed orientation and a support count (number of
//! underlying events). A metric that needs evidence to mean anything
//! (quality-type) is marked unavailable at zero support; volume metrics
//! stay available with value 0.

mod conversation;
mod coordination;
mod readability;
mod sentiment;
mod submission;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::evidence::{EvidenceBundle, MediaKind, StudentId, Window};
use crate::framework::Benchmark;

pub use conversation::conversation_metrics;
pub use coordination::coordination_metrics;
pub use readability::{count_syllables, text_readability, Readability};
pub use sentiment::{sentiment_score, LexiconAnalyzer, SentimentAnalyzer, Valence};
pub use submission::{submission_metrics, weighted_skew};

/// Identifier of a metric: the table codes `1a`..`3f` plus the derived
/// inputs the default benchmark registry needs, and one peer-assessment
/// column per benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricId {
    CommitCount,
    NetCodeLines,
    WordCount,
    CharCount,
    CommitInterval,
    WeightedSkew,
    CodeStandard,
    TextComplexity,
    MediaWorkload,
    SendCount,
    MessageLength,
    SendReceiveRatio,
    ResponseLatency,
    SendInterval,
    LongestSilence,
    MessageReadability,
    InteractionDiversity,
    Sentiment,
    Attendance,
    AttendanceSkew,
    MeetingTime,
    TaskFidelity,
    AssignmentFidelity,
    TaskDiversity,
    QualityGrade,
    Relevance,
    DeadlineAdherence,
    CommitMessageReadability,
    AdminShare,
    Pa(Benchmark),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
    /// Signed, informational; aggregated as `|x|` lower-better.
    Signed,
}

impl MetricId {
    /// All non-peer-assessment metrics in canonical order.
    pub const STANDARD: [MetricId; 29] = [
        MetricId::CommitCount,
        MetricId::NetCodeLines,
        MetricId::WordCount,
        MetricId::CharCount,
        MetricId::CommitInterval,
        MetricId::WeightedSkew,
        MetricId::CodeStandard,
        MetricId::TextComplexity,
        MetricId::MediaWorkload,
        MetricId::SendCount,
        MetricId::MessageLength,
        MetricId::SendReceiveRatio,
        MetricId::ResponseLatency,
        MetricId::SendInterval,
        MetricId::LongestSilence,
        MetricId::MessageReadability,
        MetricId::InteractionDiversity,
        MetricId::Sentiment,
        MetricId::Attendance,
        MetricId::AttendanceSkew,
        MetricId::MeetingTime,
        MetricId::TaskFidelity,
        MetricId::AssignmentFidelity,
        MetricId::TaskDiversity,
        MetricId::QualityGrade,
        MetricId::Relevance,
        MetricId::DeadlineAdherence,
        MetricId::CommitMessageReadability,
        MetricId::AdminShare,
    ];

    pub fn code(&self) -> String {
        let fixed = match self {
            MetricId::CommitCount => "1a",
            MetricId::NetCodeLines => "1b",
            MetricId::WordCount => "1c",
            MetricId::CharCount => "1d",
            MetricId::CommitInterval => "1e",
            MetricId::WeightedSkew => "1f",
            MetricId::CodeStandard => "1g",
            MetricId::TextComplexity => "1h",
            MetricId::MediaWorkload => "1i",
            MetricId::SendCount => "2a",
            MetricId::MessageLength => "2b",
            MetricId::SendReceiveRatio => "2c",
            MetricId::ResponseLatency => "2d",
            MetricId::SendInterval => "2e",
            MetricId::LongestSilence => "2f",
            MetricId::MessageReadability => "2g",
            MetricId::InteractionDiversity => "2h",
            MetricId::Sentiment => "2i",
            MetricId::Attendance => "3a",
            MetricId::AttendanceSkew => "3b",
            MetricId::MeetingTime => "3c",
            MetricId::TaskFidelity => "3d",
            MetricId::AssignmentFidelity => "3e",
            MetricId::TaskDiversity => "3f",
            MetricId::QualityGrade => "quality-grade",
            MetricId::Relevance => "relevance",
            MetricId::DeadlineAdherence => "deadline-adherence",
            MetricId::CommitMessageReadability => "commit-message-readability",
            MetricId::AdminShare => "admin-share",
            MetricId::Pa(b) => return format!("pa:{}", b.as_str()),
        };
        fixed.to_string()
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricId::CommitCount => "Commit Count",
            MetricId::NetCodeLines => "Net Code Lines",
            MetricId::WordCount => "Word Count",
            MetricId::CharCount => "Character Count",
            MetricId::CommitInterval => "Commit Interval",
            MetricId::WeightedSkew => "Weighted Skew",
            MetricId::CodeStandard => "Code Standard",
            MetricId::TextComplexity => "Text Complexity",
            MetricId::MediaWorkload => "Media Workload",
            MetricId::SendCount => "Messages Sent",
            MetricId::MessageLength => "Message Length",
            MetricId::SendReceiveRatio => "Send/Receive Ratio",
            MetricId::ResponseLatency => "Response Latency",
            MetricId::SendInterval => "Send Interval",
            MetricId::LongestSilence => "Longest Silence",
            MetricId::MessageReadability => "Message Readability",
            MetricId::InteractionDiversity => "Interaction Diversity",
            MetricId::Sentiment => "Sentiment",
            MetricId::Attendance => "Attendance",
            MetricId::AttendanceSkew => "Attendance Skew",
            MetricId::MeetingTime => "Meeting Time",
            MetricId::TaskFidelity => "Task Fidelity",
            MetricId::AssignmentFidelity => "Assignment Fidelity",
            MetricId::TaskDiversity => "Task Diversity",
            MetricId::QualityGrade => "Quality Grade",
            MetricId::Relevance => "Relevance",
            MetricId::DeadlineAdherence => "Deadline Adherence",
            MetricId::CommitMessageReadability => "Commit Message Readability",
            MetricId::AdminShare => "Admin Share",
            MetricId::Pa(_) => "Peer Assessment",
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            MetricId::CommitInterval
            | MetricId::ResponseLatency
            | MetricId::SendInterval
            | MetricId::LongestSilence => Orientation::LowerBetter,
            MetricId::WeightedSkew | MetricId::AttendanceSkew => Orientation::Signed,
            _ => Orientation::HigherBetter,
        }
    }

    /// Quality-type metrics are meaningless without evidence and become
    /// unavailable at zero support.
    pub fn needs_support(&self) -> bool {
        matches!(
            self,
            MetricId::WeightedSkew
                | MetricId::CodeStandard
                | MetricId::TextComplexity
                | MetricId::MessageLength
                | MetricId::ResponseLatency
                | MetricId::MessageReadability
                | MetricId::Sentiment
                | MetricId::QualityGrade
                | MetricId::TaskFidelity
                | MetricId::AssignmentFidelity
                | MetricId::DeadlineAdherence
                | MetricId::CommitMessageReadability
                | MetricId::AdminShare
                | MetricId::Relevance
                | MetricId::Pa(_)
        )
    }

    /// The value fed into normalisation: signed metrics become `|x|`
    /// (snapping float noise to 0), sentiment moves from `[-1, 1]` to `[0, 1]`
    /// and a negative readability score counts as 0.
    pub fn rating_input(&self, value: f64) -> f64 {
        match self.orientation() {
            Orientation::Signed => {
                let a = value.abs();
                if a < 1e-9 {
                    0.0
                } else {
                    a
                }
            }
            _ if *self == MetricId::Sentiment => (value + 1.0) / 2.0,
            _ if self.is_readability() => value.max(0.0),
            _ => value,
        }
    }

    fn is_readability(&self) -> bool {
        matches!(
            self,
            MetricId::TextComplexity | MetricId::MessageReadability | MetricId::CommitMessageReadability
        )
    }

    /// Orientation used by normalisation after [`MetricId::rating_input`].
    pub fn rating_orientation(&self) -> Orientation {
        match self.orientation() {
            Orientation::Signed => Orientation::LowerBetter,
            o => o,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(b) = s.strip_prefix("pa:") {
            return b.parse::<Benchmark>().map(MetricId::Pa);
        }
        MetricId::STANDARD
            .into_iter()
            .find(|m| m.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric id {s:?}"))
    }
}

impl Serialize for MetricId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric_id: MetricId,
    pub student: StudentId,
    pub value: f64,
    pub orientation: Orientation,
    pub support: u64,
    pub available: bool,
}

impl MetricValue {
    pub fn new(metric_id: MetricId, student: &StudentId, value: f64, support: u64) -> Self {
        let value = if value.is_finite() { value } else { 0.0 };
        Self {
            metric_id,
            student: student.clone(),
            value,
            orientation: metric_id.orientation(),
            support,
            available: support > 0 || !metric_id.needs_support(),
        }
    }

    pub fn unavailable(metric_id: MetricId, student: &StudentId) -> Self {
        Self {
            available: false,
            ..Self::new(metric_id, student, 0.0, 0)
        }
    }
}

/// Raw metric values per student.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub project_window: Option<Window>,
    pub rows: BTreeMap<StudentId, BTreeMap<MetricId, MetricValue>>,
}

impl MetricTable {
    pub fn new(window: Window) -> Self {
        Self {
            project_window: Some(window),
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, v: MetricValue) {
        self.rows
            .entry(v.student.clone())
            .or_default()
            .insert(v.metric_id, v);
    }

    pub fn merge(&mut self, other: MetricTable) {
        if self.project_window.is_none() {
            self.project_window = other.project_window;
        }
        for (_, row) in other.rows {
            for (_, v) in row {
                self.insert(v);
            }
        }
    }

    pub fn get(&self, student: &StudentId, metric: MetricId) -> Option<&MetricValue> {
        self.rows.get(student).and_then(|r| r.get(&metric))
    }

    /// Every metric id present for any student, in canonical order.
    pub fn metric_ids(&self) -> Vec<MetricId> {
        let mut ids: Vec<MetricId> = self
            .rows
            .values()
            .flat_map(|r| r.keys().copied())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Values of one metric in roster order; `None` where missing.
    pub fn column(&self, roster: &[StudentId], metric: MetricId) -> Vec<Option<&MetricValue>> {
        roster.iter().map(|s| self.get(s, metric)).collect()
    }

    /// A metric is available for the team when at least one student has it.
    pub fn team_available(&self, metric: MetricId) -> bool {
        self.rows
            .values()
            .any(|r| r.get(&metric).is_some_and(|v| v.available))
    }
}

/// Per-kind weights for the media workload score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediaWeights {
    pub image: f64,
    pub other: f64,
    pub slides_per_page: f64,
    pub audio_per_minute: f64,
    pub video_per_minute: f64,
}

impl Default for MediaWeights {
    fn default() -> Self {
        Self {
            image: 1.0,
            other: 1.0,
            slides_per_page: 1.0,
            audio_per_minute: 1.0,
            video_per_minute: 1.0,
        }
    }
}

impl MediaWeights {
    pub fn score(&self, kind: MediaKind, duration_seconds: Option<f64>, pages: Option<u32>) -> f64 {
        match kind {
            MediaKind::Image => self.image,
            MediaKind::Other => self.other,
            MediaKind::Slides => self.slides_per_page * f64::from(pages.unwrap_or(0)),
            MediaKind::Audio => self.audio_per_minute * duration_seconds.unwrap_or(0.0) / 60.0,
            MediaKind::Video => self.video_per_minute * duration_seconds.unwrap_or(0.0) / 60.0,
        }
    }
}

/// Every metric computable without a provider: submission, conversation,
/// coordination and the record-based extras.
pub fn direct_metrics(
    bundle: &EvidenceBundle,
    media: &MediaWeights,
    analyzer: &dyn SentimentAnalyzer,
) -> MetricTable {
    let mut table = MetricTable::new(bundle.project_window);
    table.merge(submission_metrics(bundle, media));
    table.merge(conversation_metrics(bundle, analyzer));
    table.merge(coordination_metrics(bundle));
    table.merge(record_metrics(bundle));
    table
}

/// Deadline adherence and commit-message readability.
pub fn record_metrics(bundle: &EvidenceBundle) -> MetricTable {
    let mut table = MetricTable::new(bundle.project_window);
    for s in bundle.student_ids() {
        let own: Vec<_> = bundle
            .tasks
            .iter()
            .filter(|t| t.assignee.as_ref() == Some(&s))
            .collect();
        let on_time = own.iter().filter(|t| t.done_on_time()).count();
        let adherence = if own.is_empty() {
            0.0
        } else {
            on_time as f64 / own.len() as f64
        };
        table.insert(MetricValue::new(
            MetricId::DeadlineAdherence,
            &s,
            adherence,
            own.len() as u64,
        ));

        let messages: Vec<&str> = bundle
            .commits
            .iter()
            .filter(|c| c.author.as_ref() == Some(&s))
            .map(|c| c.message.as_str())
            .collect();
        let r = text_readability(&messages.join("\n"));
        table.insert(MetricValue::new(
            MetricId::CommitMessageReadability,
            &s,
            r.score,
            messages.len() as u64,
        ));
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for m in MetricId::STANDARD {
            assert_eq!(m.code().parse::<MetricId>().unwrap(), m);
        }
        for b in Benchmark::ALL {
            let m = MetricId::Pa(b);
            assert_eq!(m.code().parse::<MetricId>().unwrap(), m);
        }
        let json = serde_json::to_string(&MetricId::Pa(Benchmark::Tone)).unwrap();
        assert_eq!(json, "\"pa:tone\"");
    }

    #[test]
    fn orientation_registry() {
        let lower: Vec<_> = MetricId::STANDARD
            .into_iter()
            .filter(|m| m.orientation() == Orientation::LowerBetter)
            .map(|m| m.code())
            .collect();
        assert_eq!(lower, ["1e", "2d", "2e", "2f"]);
        assert_eq!(MetricId::WeightedSkew.rating_orientation(), Orientation::LowerBetter);
        assert_eq!(MetricId::AttendanceSkew.rating_input(-0.5), 0.5);
        assert_eq!(MetricId::Sentiment.rating_input(-1.0), 0.0);
    }

    #[test]
    fn media_weights() {
        let w = MediaWeights::default();
        let total = w.score(MediaKind::Video, Some(600.0), None)
            + w.score(MediaKind::Image, None, None)
            + w.score(MediaKind::Image, None, None);
        assert!((total - 12.0).abs() < 1e-12);
    }
}
