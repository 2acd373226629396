//! Metrics that need a language model: task and assignment fidelity, task
//! diversity, rubric quality and hypothetical-document relevance.
//!
//! Every provider exchange goes through a [`Session`], so it is recorded
//! before its result is used. A failed stage leaves its metrics
//! unavailable and the rest of the analysis untouched.

mod extract;
mod quality;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::evidence::{EvidenceBundle, MeetingRecord, StudentId, TaskCategory};
use crate::measures::WeightConfig;
use crate::metrics::{MetricId, MetricTable, MetricValue};
use crate::num::{cosine, map_cosine, normalized_entropy};
use crate::provider::{ProviderRequest, Purpose, Session};

pub use extract::{
    extract_structure, extraction_request, resolve_student, student_outputs, ExtractedGoal, ExtractedTask,
    Extraction, StudentOutput, WorkSummary,
};
pub use quality::{
    grade_code, grade_media_artifact, grade_prose, grade_text_artifact, AssessmentGuide, ContributionType,
    CriterionScore, DeterministicGrade, QualityGrade, RubricItem, MAX_LINE, MAX_SENTENCE_WORDS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskOrigin {
    Record,
    Extracted,
}

/// A task as used by fidelity and diversity: records when the bundle has
/// any, extracted tasks otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectiveTask {
    pub id: String,
    pub statement: String,
    pub assignee: Option<StudentId>,
    pub category: TaskCategory,
    pub origin: TaskOrigin,
}

pub fn effective_tasks(bundle: &EvidenceBundle, extraction: Option<&Extraction>) -> Vec<EffectiveTask> {
    if !bundle.tasks.is_empty() {
        return bundle
            .tasks
            .iter()
            .map(|t| EffectiveTask {
                id: t.id.clone(),
                statement: t.title.clone(),
                assignee: t.assignee.clone(),
                category: t.category,
                origin: TaskOrigin::Record,
            })
            .collect();
    }
    extraction
        .map(|x| {
            x.tasks
                .iter()
                .map(|t| EffectiveTask {
                    id: t.id.clone(),
                    statement: t.statement.clone(),
                    assignee: t.assignee.clone(),
                    category: t.category,
                    origin: TaskOrigin::Extracted,
                })
                .collect()
        })
        .unwrap_or_default()
}

fn centroid(vectors: &[Vec<f64>]) -> Option<Vec<f64>> {
    let first = vectors.first()?;
    let mut c = vec![0.0; first.len()];
    for v in vectors {
        for (a, b) in c.iter_mut().zip(v) {
            *a += b;
        }
    }
    let n = vectors.len() as f64;
    Some(c.into_iter().map(|x| x / n).collect())
}

/// Mapped cosine between each meeting embedding and the centroid of the
/// goal embeddings; `None` for all meetings when there are no goals.
pub fn task_fidelity(goals: &[Vec<f64>], meetings: &[Vec<f64>]) -> Vec<Option<f64>> {
    let Some(c) = centroid(goals) else {
        return vec![None; meetings.len()];
    };
    meetings.iter().map(|m| cosine(&c, m).map(map_cosine)).collect()
}

/// `(matched, assigned)` per assignee: a task counts as matched when some
/// summary by the same student reaches `theta` in mapped cosine.
pub fn assignment_fidelity(
    tasks: &[(StudentId, Vec<f64>)],
    summaries: &[(StudentId, Vec<f64>)],
    theta: f64,
) -> BTreeMap<StudentId, (usize, usize)> {
    let mut out: BTreeMap<StudentId, (usize, usize)> = BTreeMap::new();
    for (student, task) in tasks {
        let matched = summaries
            .iter()
            .filter(|(s, _)| s == student)
            .any(|(_, w)| cosine(task, w).map(map_cosine).unwrap_or(0.0) >= theta);
        let e = out.entry(student.clone()).or_default();
        e.0 += usize::from(matched);
        e.1 += 1;
    }
    out
}

/// Normalised entropy of one student's categories over the `team_k`
/// categories the team's task list uses; 0 when the team uses at most one.
pub fn task_diversity(categories: &[TaskCategory], team_k: usize) -> f64 {
    if team_k <= 1 {
        return 0.0;
    }
    let mut counts: BTreeMap<TaskCategory, f64> = BTreeMap::new();
    for c in categories {
        *counts.entry(*c).or_default() += 1.0;
    }
    let counts: Vec<f64> = counts.into_values().collect();
    normalized_entropy(&counts, team_k)
}

/// Best mapped cosine of an output against any hypothetical document.
pub fn relevance(documents: &[Vec<f64>], output: &[f64]) -> Option<f64> {
    documents
        .iter()
        .filter_map(|d| cosine(d, output).map(map_cosine))
        .fold(None, |best, x| Some(best.map_or(x, |b: f64| b.max(x))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeetingFidelity {
    pub meeting: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypotheticalDocument {
    pub goal: String,
    pub text: String,
}

/// Intermediate results kept for the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AbstractReport {
    pub extraction: Option<Extraction>,
    pub tasks: Vec<EffectiveTask>,
    pub meeting_fidelity: Vec<MeetingFidelity>,
    pub quality: Vec<QualityGrade>,
    pub hypothetical_documents: Vec<HypotheticalDocument>,
    pub failures: Vec<StageFailure>,
}

impl AbstractReport {
    fn fail(&mut self, stage: &str, reason: impl ToString) {
        self.failures.push(StageFailure {
            stage: stage.to_string(),
            reason: reason.to_string(),
        });
    }
}

const HYPOTHETICAL_SYSTEM: &str = "You write the deliverable a strong student team would hand in \
for one project goal. Write the document itself, in plain prose, with no commentary.";

fn hypothetical_request(bundle: &EvidenceBundle, goal: &ExtractedGoal) -> ProviderRequest {
    let data = json!({
        "task_description": bundle.task_description,
        "goal": { "id": goal.id, "statement": goal.statement },
    });
    let user = format!(
        "Write the expected deliverable for this goal.\n\n```json\n{}\n```\n",
        serde_json::to_string_pretty(&data).unwrap_or_default()
    );
    ProviderRequest::completion(Purpose::HypotheticalDocument, HYPOTHETICAL_SYSTEM, user, 1024)
}

fn mean_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Runs every provider-backed stage in a fixed order and returns one value
/// per student for each of 1g, quality-grade, relevance, 3d, 3e, 3f and
/// admin-share.
pub fn abstract_metrics(
    bundle: &EvidenceBundle,
    session: &Session,
    config: &WeightConfig,
) -> (MetricTable, AbstractReport) {
    let roster = bundle.student_ids();
    let mut report = AbstractReport::default();
    let mut table = MetricTable::new(bundle.project_window);

    let extraction = match extract_structure(bundle, session) {
        Ok(x) => Some(x),
        Err(e) => {
            report.fail("extract-structure", e);
            None
        }
    };
    let goals: Vec<ExtractedGoal> = extraction.as_ref().map(|x| x.goals.clone()).unwrap_or_default();
    let tasks = effective_tasks(bundle, extraction.as_ref());

    // 3d
    let minuted: Vec<&MeetingRecord> =
        bundle.meetings.iter().filter(|m| !m.minutes_text.trim().is_empty()).collect();
    let mut fidelity: BTreeMap<&str, f64> = BTreeMap::new();
    if !goals.is_empty() && !minuted.is_empty() {
        let goal_texts: Vec<String> = goals.iter().map(|g| g.statement.clone()).collect();
        let meeting_texts: Vec<String> = minuted.iter().map(|m| m.minutes_text.clone()).collect();
        match session.embed(&goal_texts).and_then(|g| Ok((g, session.embed(&meeting_texts)?))) {
            Ok((g, m)) => {
                for (meeting, v) in minuted.iter().zip(task_fidelity(&g, &m)) {
                    if let Some(v) = v {
                        fidelity.insert(meeting.id.as_str(), v);
                        report.meeting_fidelity.push(MeetingFidelity {
                            meeting: meeting.id.clone(),
                            value: v,
                        });
                    }
                }
            }
            Err(e) => report.fail("task-fidelity", e),
        }
    }
    for s in &roster {
        let values: Vec<f64> = bundle
            .meetings
            .iter()
            .filter(|m| m.attendees.contains(s))
            .filter_map(|m| fidelity.get(m.id.as_str()).copied())
            .collect();
        table.insert(MetricValue::new(MetricId::TaskFidelity, s, mean_of(&values), values.len() as u64));
    }

    // 3e
    let assigned: Vec<&EffectiveTask> = tasks.iter().filter(|t| t.assignee.is_some()).collect();
    let mut counts: BTreeMap<StudentId, (usize, usize)> = BTreeMap::new();
    if let Some(x) = &extraction {
        if !assigned.is_empty() {
            let task_texts: Vec<String> = assigned.iter().map(|t| t.statement.clone()).collect();
            let summary_texts: Vec<String> = x.work_summaries.iter().map(|w| w.statement.clone()).collect();
            match session.embed(&task_texts).and_then(|t| Ok((t, session.embed(&summary_texts)?))) {
                Ok((te, we)) => {
                    let tasks_in: Vec<(StudentId, Vec<f64>)> = assigned
                        .iter()
                        .zip(te)
                        .filter_map(|(t, e)| t.assignee.clone().map(|a| (a, e)))
                        .collect();
                    let summaries_in: Vec<(StudentId, Vec<f64>)> = x
                        .work_summaries
                        .iter()
                        .zip(we)
                        .map(|(w, e)| (w.student.clone(), e))
                        .collect();
                    counts = assignment_fidelity(&tasks_in, &summaries_in, config.theta_match);
                }
                Err(e) => report.fail("assignment-fidelity", e),
            }
        }
    }
    for s in &roster {
        let v = match counts.get(s) {
            Some(&(m, n)) if n > 0 => MetricValue::new(MetricId::AssignmentFidelity, s, m as f64 / n as f64, n as u64),
            _ => MetricValue::unavailable(MetricId::AssignmentFidelity, s),
        };
        table.insert(v);
    }

    // 3f and admin-share come from the task list alone.
    let team_k = tasks.iter().map(|t| t.category).collect::<BTreeSet<_>>().len();
    for s in &roster {
        let own: Vec<TaskCategory> = tasks
            .iter()
            .filter(|t| t.assignee.as_ref() == Some(s))
            .map(|t| t.category)
            .collect();
        let n = own.len() as u64;
        table.insert(MetricValue::new(MetricId::TaskDiversity, s, task_diversity(&own, team_k), n));
        let admin = own.iter().filter(|c| **c == TaskCategory::Admin).count() as f64;
        let share = if n == 0 { 0.0 } else { admin / n as f64 };
        table.insert(MetricValue::new(MetricId::AdminShare, s, share, n));
    }

    // 1g and quality-grade
    let mut any_partial = false;
    for a in &bundle.text_artifacts {
        let g = grade_text_artifact(a, Some(session));
        any_partial |= g.partial;
        report.quality.push(g);
    }
    for m in &bundle.media_artifacts {
        let g = grade_media_artifact(m, Some(session));
        any_partial |= g.partial;
        report.quality.push(g);
    }
    if any_partial {
        report.fail("grade-quality", "provider rubric missing for some artifacts; deterministic grade only");
    }
    for s in &roster {
        let mut code = Vec::new();
        let mut other = Vec::new();
        for g in report.quality.iter().filter(|g| g.students.contains(s)) {
            let Some(total) = g.total else { continue };
            match g.contribution_type {
                ContributionType::Code => code.push(total),
                _ => other.push(total),
            }
        }
        table.insert(MetricValue::new(MetricId::CodeStandard, s, mean_of(&code), code.len() as u64));
        table.insert(MetricValue::new(MetricId::QualityGrade, s, mean_of(&other), other.len() as u64));
    }
    // relevance
    let mut rel: BTreeMap<StudentId, f64> = BTreeMap::new();
    if !bundle.task_description.trim().is_empty() {
        let sources: Vec<ExtractedGoal> = if goals.is_empty() {
            vec![ExtractedGoal {
                id: "task".into(),
                statement: bundle.task_description.trim().to_string(),
            }]
        } else {
            goals.clone()
        };
        for goal in &sources {
            match session.send(&hypothetical_request(bundle, goal)) {
                Ok(r) if !r.text.trim().is_empty() => report.hypothetical_documents.push(HypotheticalDocument {
                    goal: goal.id.clone(),
                    text: r.text,
                }),
                Ok(_) => report.fail("relevance", format!("empty hypothetical document for {}", goal.id)),
                Err(e) => report.fail("relevance", e),
            }
        }
        let outputs: Vec<(StudentId, String)> = roster
            .iter()
            .map(|s| {
                let text: Vec<String> = student_outputs(bundle, s).into_iter().map(|o| o.text).collect();
                (s.clone(), text.join("\n"))
            })
            .filter(|(_, t)| !t.trim().is_empty())
            .collect();
        if !report.hypothetical_documents.is_empty() && !outputs.is_empty() {
            let docs: Vec<String> = report.hypothetical_documents.iter().map(|d| d.text.clone()).collect();
            let texts: Vec<String> = outputs.iter().map(|(_, t)| t.clone()).collect();
            match session.embed(&docs).and_then(|d| Ok((d, session.embed(&texts)?))) {
                Ok((de, oe)) => {
                    for ((s, _), e) in outputs.iter().zip(oe) {
                        if let Some(v) = relevance(&de, &e) {
                            rel.insert(s.clone(), v);
                        }
                    }
                }
                Err(e) => report.fail("relevance", e),
            }
        }
    }
    for s in &roster {
        let v = match rel.get(s) {
            Some(&v) => MetricValue::new(MetricId::Relevance, s, v, 1),
            None => MetricValue::new(MetricId::Relevance, s, 0.0, 0),
        };
        table.insert(v);
    }

    report.extraction = extraction;
    report.tasks = tasks;
    (table, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::embed::hash_embedding;

    fn emb(text: &str) -> Vec<f64> {
        hash_embedding(7, 64, text)
    }

    #[test]
    fn self_similarity_and_orthogonality() {
        let g = vec![emb("parse commit logs")];
        let f = task_fidelity(&g, &[emb("parse commit logs")]);
        assert!((f[0].unwrap() - 1.0).abs() < 1e-12);
        let mut a = vec![0.0; 4];
        a[0] = 1.0;
        let mut b = vec![0.0; 4];
        b[1] = 1.0;
        assert_eq!(task_fidelity(&[a], &[b]), vec![Some(0.5)]);
        assert_eq!(task_fidelity(&[], &[emb("x")]), vec![None]);
    }

    #[test]
    fn assignment_counts() {
        let s = StudentId::new("s1");
        let t = StudentId::new("s2");
        let tasks = vec![
            (s.clone(), emb("write the parser")),
            (s.clone(), emb("draft the report")),
            (t.clone(), emb("book the room")),
        ];
        let summaries = vec![(s.clone(), emb("write the parser")), (t.clone(), emb("draft the report"))];
        let out = assignment_fidelity(&tasks, &summaries, 0.75);
        assert_eq!(out[&s], (1, 2));
        assert_eq!(out[&t].1, 1);
        assert_eq!(assignment_fidelity(&tasks, &[], 0.75)[&s], (0, 2));
    }

    #[test]
    fn diversity_examples() {
        use TaskCategory::*;
        assert_eq!(task_diversity(&[Coding, Coding], 3), 0.0);
        assert!((task_diversity(&[Coding, Writing], 2) - 1.0).abs() < 1e-12);
        // H(3/4, 1/4) / ln 2
        let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln()) / 2f64.ln();
        assert!((task_diversity(&[Coding, Coding, Coding, Writing], 2) - h).abs() < 1e-12);
        assert!((h - 0.811).abs() < 1e-3);
        assert_eq!(task_diversity(&[], 2), 0.0);
        assert_eq!(task_diversity(&[Coding], 1), 0.0);
    }

    #[test]
    fn relevance_takes_best_document() {
        let docs = vec![emb("unrelated words here"), emb("the final report")];
        assert!((relevance(&docs, &emb("the final report")).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(relevance(&[], &emb("x")), None);
    }
}
