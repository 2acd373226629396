use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::evidence::{EvidenceBundle, StudentId, TaskCategory};
use crate::provider::{json_block, ProviderError, ProviderRequest, Purpose, Session};

const SYSTEM: &str = "You extract project structure from student team evidence. \
Report only what the evidence states. Every item must point at the record it came from.";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedGoal {
    pub id: String,
    pub statement: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedTask {
    pub id: String,
    pub statement: String,
    pub assignee: Option<StudentId>,
    /// Meeting id the task was agreed in.
    pub source: String,
    pub category: TaskCategory,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkSummary {
    pub student: StudentId,
    pub statement: String,
    /// Output refs such as `commit:<hash>` or `artifact:<path>`.
    pub sources: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub goals: Vec<ExtractedGoal>,
    pub tasks: Vec<ExtractedTask>,
    pub work_summaries: Vec<WorkSummary>,
    /// Items dropped for missing or dangling provenance.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<String>,
}

/// One piece of text a student produced, addressable by `reference`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StudentOutput {
    pub reference: String,
    pub text: String,
}

/// Everything a student wrote, in bundle order: commit messages, chat
/// messages, emails and text artifacts they hold a span in.
pub fn student_outputs(bundle: &EvidenceBundle, student: &StudentId) -> Vec<StudentOutput> {
    let mut out = Vec::new();
    for c in bundle.commits.iter().filter(|c| c.author.as_ref() == Some(student)) {
        out.push(StudentOutput {
            reference: format!("commit:{}", c.hash),
            text: c.message.clone(),
        });
    }
    for m in bundle.chat_messages.iter().filter(|m| m.sender.as_ref() == Some(student)) {
        out.push(StudentOutput {
            reference: format!("chat:{}", m.id),
            text: m.text.clone(),
        });
    }
    for e in bundle.emails.iter().filter(|e| e.sender.as_ref() == Some(student)) {
        out.push(StudentOutput {
            reference: format!("email:{}", e.id),
            text: format!("{}\n{}", e.subject, e.body),
        });
    }
    for a in bundle.text_artifacts.iter().filter(|a| a.span_of(student).is_some()) {
        out.push(StudentOutput {
            reference: format!("artifact:{}", a.path),
            text: a.body.clone(),
        });
    }
    out
}

pub fn extraction_request(bundle: &EvidenceBundle) -> ProviderRequest {
    let meetings: Vec<_> = bundle
        .meetings
        .iter()
        .map(|m| json!({ "id": m.id, "minutes": m.minutes_text }))
        .collect();
    let students: Vec<_> = bundle
        .student_ids()
        .iter()
        .map(|s| {
            let outputs: Vec<_> = student_outputs(bundle, s)
                .into_iter()
                .map(|o| json!({ "ref": o.reference, "text": o.text }))
                .collect();
            json!({ "id": s, "outputs": outputs })
        })
        .collect();
    let data = json!({
        "task_description": bundle.task_description,
        "meetings": meetings,
        "students": students,
    });
    let categories: Vec<&str> = TaskCategory::ALL.iter().map(|c| c.as_str()).collect();
    let user = format!(
        "List the project goals stated in the task description, the tasks agreed in \
meeting minutes and the work each student reports as completed.\n\
Task categories: {}.\n\
Respond with JSON only: {{\"goals\": [{{\"id\", \"statement\"}}], \
\"tasks\": [{{\"id\", \"statement\", \"assignee\", \"source\", \"category\"}}], \
\"work_summaries\": [{{\"student\", \"statement\", \"sources\"}}]}}.\n\n\
```json\n{}\n```\n",
        categories.join(", "),
        serde_json::to_string_pretty(&data).unwrap_or_default()
    );
    ProviderRequest::completion(Purpose::ExtractStructure, SYSTEM, user, 2048)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtraction {
    goals: Vec<RawGoal>,
    tasks: Vec<RawTask>,
    work_summaries: Vec<RawSummary>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGoal {
    id: String,
    statement: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    id: String,
    statement: String,
    assignee: Option<String>,
    source: String,
    category: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSummary {
    student: String,
    statement: String,
    sources: Vec<String>,
}

/// Roster id or display name, case-insensitively.
pub fn resolve_student(bundle: &EvidenceBundle, name: &str) -> Option<StudentId> {
    let name = name.trim().trim_start_matches('@');
    bundle
        .roster
        .iter()
        .find(|s| s.id.as_str().eq_ignore_ascii_case(name) || s.display_name.eq_ignore_ascii_case(name))
        .map(|s| s.id.clone())
}

/// Schema check only; provenance is checked against the bundle afterwards.
fn parse(text: &str) -> Result<RawExtraction, String> {
    let body = json_block(text).ok_or("response holds no JSON object")?;
    let raw: RawExtraction = serde_json::from_str(body).map_err(|e| e.to_string())?;
    for t in &raw.tasks {
        if TaskCategory::parse(&t.category).is_none() {
            return Err(format!("task {}: unknown category {:?}", t.id, t.category));
        }
    }
    Ok(raw)
}

fn provenance(bundle: &EvidenceBundle, raw: RawExtraction) -> Extraction {
    let mut out = Extraction::default();
    let meeting_ids: BTreeSet<&str> = bundle.meetings.iter().map(|m| m.id.as_str()).collect();
    for g in raw.goals {
        if g.statement.trim().is_empty() {
            out.rejected.push(format!("goal {}: empty statement", g.id));
        } else if bundle.task_description.trim().is_empty() {
            out.rejected.push(format!("goal {}: no task description to cite", g.id));
        } else {
            out.goals.push(ExtractedGoal {
                id: g.id,
                statement: g.statement.trim().to_string(),
            });
        }
    }
    for t in raw.tasks {
        if !meeting_ids.contains(t.source.as_str()) {
            out.rejected.push(format!("task {}: unknown source meeting {:?}", t.id, t.source));
            continue;
        }
        let assignee = match t.assignee.as_deref() {
            None | Some("") => None,
            Some(name) => match resolve_student(bundle, name) {
                Some(s) => Some(s),
                None => {
                    out.rejected.push(format!("task {}: assignee {name:?} is not on the roster", t.id));
                    continue;
                }
            },
        };
        out.tasks.push(ExtractedTask {
            id: t.id,
            statement: t.statement.trim().to_string(),
            assignee,
            source: t.source,
            category: TaskCategory::parse(&t.category).unwrap_or(TaskCategory::Admin),
        });
    }
    for w in raw.work_summaries {
        let Some(student) = resolve_student(bundle, &w.student) else {
            out.rejected.push(format!("work summary {:?}: unknown student {:?}", w.statement, w.student));
            continue;
        };
        let known: BTreeSet<String> = student_outputs(bundle, &student)
            .into_iter()
            .map(|o| o.reference)
            .collect();
        let sources: Vec<String> = w.sources.into_iter().filter(|s| known.contains(s)).collect();
        if sources.is_empty() {
            out.rejected.push(format!("work summary {:?}: cites no output of {student}", w.statement));
            continue;
        }
        out.work_summaries.push(WorkSummary {
            student,
            statement: w.statement.trim().to_string(),
            sources,
        });
    }
    out
}

/// Goals, tasks and work summaries with provenance pointers into the
/// bundle. A malformed response is retried once.
pub fn extract_structure(bundle: &EvidenceBundle, session: &Session) -> Result<Extraction, ProviderError> {
    let raw = session.send_parsed(&extraction_request(bundle), parse)?;
    Ok(provenance(bundle, raw))
}
