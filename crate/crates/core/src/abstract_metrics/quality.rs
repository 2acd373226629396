use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::evidence::{ArtifactKind, MediaArtifact, StudentId, TextArtifact};
use crate::provider::{json_block, ProviderRequest, Purpose, Session};

const SYSTEM: &str = "You grade student work against a rubric. Give each criterion an integer \
score from 1 to 5 and a one-sentence justification.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContributionType {
    Code,
    Text,
    Media,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricItem {
    pub criterion: String,
    /// Descriptors for levels 1..=5.
    pub levels: [String; 5],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentGuide {
    pub contribution_type: ContributionType,
    pub rubric_items: Vec<RubricItem>,
    pub worked_examples: Vec<String>,
}

fn item(criterion: &str, levels: [&str; 5]) -> RubricItem {
    RubricItem {
        criterion: criterion.to_string(),
        levels: levels.map(str::to_string),
    }
}

impl AssessmentGuide {
    pub fn shipped(kind: ContributionType) -> Self {
        let (rubric_items, worked_examples) = match kind {
            ContributionType::Code => (
                vec![
                    item("correctness", [
                        "does not run or is mostly wrong",
                        "runs with frequent errors",
                        "works for common cases",
                        "works with minor gaps",
                        "correct including edge cases",
                    ]),
                    item("readability", [
                        "unreadable",
                        "hard to follow",
                        "followable with effort",
                        "clear with small lapses",
                        "clear naming and structure throughout",
                    ]),
                    item("maintainability", [
                        "monolithic and duplicated",
                        "heavy duplication",
                        "some structure",
                        "well factored with minor duplication",
                        "cleanly factored and tested",
                    ]),
                ],
                vec!["A 40-line parser with tests for empty input and malformed lines: correctness 5.".into()],
            ),
            ContributionType::Text => (
                vec![
                    item("clarity", [
                        "incomprehensible",
                        "frequently unclear",
                        "mostly clear",
                        "clear with minor lapses",
                        "consistently clear",
                    ]),
                    item("structure", [
                        "no discernible order",
                        "weak ordering",
                        "adequate sections",
                        "logical flow",
                        "tight and well signposted",
                    ]),
                    item("substance", [
                        "no relevant content",
                        "thin",
                        "adequate",
                        "solid and supported",
                        "insightful and well supported",
                    ]),
                ],
                vec!["A methods section that names each step and its rationale: structure 4.".into()],
            ),
            ContributionType::Media => (
                vec![
                    item("fitness for purpose", [
                        "unusable",
                        "barely usable",
                        "serviceable",
                        "effective",
                        "exemplary",
                    ]),
                    item("production quality", [
                        "broken or unreadable",
                        "rough",
                        "acceptable",
                        "polished with minor flaws",
                        "polished",
                    ]),
                ],
                vec!["A ten-slide deck with one idea per slide and readable fonts: fitness 4.".into()],
            ),
        };
        Self {
            contribution_type: kind,
            rubric_items,
            worked_examples,
        }
    }

    pub fn criteria(&self) -> Vec<&str> {
        self.rubric_items.iter().map(|i| i.criterion.as_str()).collect()
    }
}

/// Tool-style rule check: violations counted against units (lines or
/// sentences) and mapped onto 1..5.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterministicGrade {
    pub violations: u64,
    pub units: u64,
    pub score: f64,
}

fn to_scale(violations: u64, units: u64) -> f64 {
    let rate = if units == 0 { 0.0 } else { (violations as f64 / units as f64).min(1.0) };
    1.0 + 4.0 * (1.0 - rate)
}

pub const MAX_LINE: usize = 100;

/// Per line: over-long, trailing whitespace, tab indentation, and a
/// TODO/FIXME/XXX marker each count once.
pub fn grade_code(body: &str) -> DeterministicGrade {
    let mut violations = 0;
    let mut units = 0;
    for line in body.lines() {
        units += 1;
        violations += u64::from(line.chars().count() > MAX_LINE);
        violations += u64::from(line.ends_with([' ', '\t']));
        violations += u64::from(line.starts_with('\t'));
        violations += u64::from(["TODO", "FIXME", "XXX"].iter().any(|m| line.contains(m)));
    }
    DeterministicGrade {
        violations,
        units,
        score: to_scale(violations, units),
    }
}

pub const MAX_SENTENCE_WORDS: usize = 40;

/// Per sentence: over-long, a doubled word, a lowercase start, and a
/// double space each count once.
pub fn grade_prose(body: &str) -> DeterministicGrade {
    let mut violations = 0;
    let mut units = 0;
    for sentence in body.split(['.', '!', '?', '\n']) {
        let trimmed = sentence.trim();
        if trimmed.is_empty() {
            continue;
        }
        units += 1;
        let words: Vec<String> = trimmed
            .split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        violations += u64::from(words.len() > MAX_SENTENCE_WORDS);
        violations += u64::from(words.windows(2).any(|p| p[0] == p[1]));
        violations += u64::from(trimmed.chars().next().is_some_and(char::is_lowercase));
        violations += u64::from(trimmed.contains("  "));
    }
    DeterministicGrade {
        violations,
        units,
        score: to_scale(violations, units),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionScore {
    pub criterion: String,
    pub score: u8,
    pub justification: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityGrade {
    /// `artifact:<path>` or `media:<path>`.
    pub artifact: String,
    pub contribution_type: ContributionType,
    pub students: Vec<StudentId>,
    pub rubric_scores: Vec<CriterionScore>,
    pub rubric_mean: Option<f64>,
    pub deterministic: Option<DeterministicGrade>,
    /// Mean of the rubric mean and the deterministic score where both exist.
    pub total: Option<f64>,
    /// The provider component is missing.
    pub partial: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScores {
    scores: Vec<CriterionScore>,
}

fn parse_scores(text: &str, guide: &AssessmentGuide) -> Result<Vec<CriterionScore>, String> {
    let body = json_block(text).ok_or("response holds no JSON object")?;
    let raw: RawScores = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for criterion in guide.criteria() {
        let mut hits = raw.scores.iter().filter(|s| s.criterion == criterion);
        let s = hits.next().ok_or(format!("missing criterion {criterion:?}"))?;
        if hits.next().is_some() {
            return Err(format!("criterion {criterion:?} scored twice"));
        }
        if !(1..=5).contains(&s.score) {
            return Err(format!("criterion {criterion:?}: score {} outside 1..5", s.score));
        }
        if s.justification.trim().is_empty() {
            return Err(format!("criterion {criterion:?}: empty justification"));
        }
        out.push(s.clone());
    }
    if raw.scores.len() != out.len() {
        return Err("scores name criteria outside the guide".into());
    }
    Ok(out)
}

fn grade_request(reference: &str, guide: &AssessmentGuide, content: &str) -> ProviderRequest {
    let data = json!({
        "artifact": reference,
        "contribution_type": guide.contribution_type,
        "criteria": guide.criteria(),
        "rubric": guide.rubric_items,
        "worked_examples": guide.worked_examples,
        "content": content,
    });
    let user = format!(
        "Grade the artifact against every rubric criterion.\n\
Respond with JSON only: {{\"scores\": [{{\"criterion\", \"score\", \"justification\"}}]}}.\n\n\
```json\n{}\n```\n",
        serde_json::to_string_pretty(&data).unwrap_or_default()
    );
    ProviderRequest::completion(Purpose::GradeQuality, SYSTEM, user, 1024)
}

fn combine(
    artifact: String,
    contribution_type: ContributionType,
    students: Vec<StudentId>,
    rubric: Option<Vec<CriterionScore>>,
    deterministic: Option<DeterministicGrade>,
) -> QualityGrade {
    let rubric_mean = rubric
        .as_ref()
        .filter(|r| !r.is_empty())
        .map(|r| r.iter().map(|s| f64::from(s.score)).sum::<f64>() / r.len() as f64);
    let total = match (rubric_mean, &deterministic) {
        (Some(r), Some(d)) => Some((r + d.score) / 2.0),
        (Some(r), None) => Some(r),
        (None, Some(d)) => Some(d.score),
        (None, None) => None,
    };
    QualityGrade {
        artifact,
        contribution_type,
        students,
        rubric_scores: rubric.unwrap_or_default(),
        rubric_mean,
        deterministic,
        total,
        partial: rubric_mean.is_none(),
    }
}

/// Rubric grade from the provider paired with the deterministic grader.
/// Without the provider the grade is deterministic only and flagged
/// partial.
pub fn grade_text_artifact(artifact: &TextArtifact, session: Option<&Session>) -> QualityGrade {
    let (kind, det) = match artifact.kind {
        ArtifactKind::Code => (ContributionType::Code, grade_code(&artifact.body)),
        ArtifactKind::Prose => (ContributionType::Text, grade_prose(&artifact.body)),
    };
    let guide = AssessmentGuide::shipped(kind);
    let reference = format!("artifact:{}", artifact.path);
    let rubric = session.and_then(|s| {
        s.send_parsed(&grade_request(&reference, &guide, &artifact.body), |t| parse_scores(t, &guide))
            .ok()
    });
    let students = artifact.per_author_spans.iter().map(|s| s.student.clone()).collect();
    combine(reference, kind, students, rubric, Some(det))
}

/// Media has no deterministic grader; the provider sees metadata only.
pub fn grade_media_artifact(media: &MediaArtifact, session: Option<&Session>) -> QualityGrade {
    let guide = AssessmentGuide::shipped(ContributionType::Media);
    let reference = format!("media:{}", media.path);
    let content = serde_json::to_string(media).unwrap_or_default();
    let rubric = session.and_then(|s| {
        s.send_parsed(&grade_request(&reference, &guide, &content), |t| parse_scores(t, &guide))
            .ok()
    });
    combine(reference, ContributionType::Media, vec![media.author.clone()], rubric, None)
}
