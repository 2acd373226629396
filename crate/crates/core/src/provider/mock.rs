//! Deterministic offline provider.
//!
//! Embeddings are seeded hash projections. Completions are templates over
//! the JSON data block of the prompt; structure extraction echoes the
//! annotation lines planted in the evidence:
//!
//! * `Goal: <statement>` in the task description,
//! * `Task @<student> [<category>]: <statement>` or `Task: <statement>` in
//!   meeting minutes,
//! * `Done: <statement>` in anything a student wrote.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use super::embed::{hash_embedding, MOCK_DIMENSION};
use super::{json_block, Provider, ProviderError, ProviderRequest, ProviderResponse, Purpose, SegmentRole};
use crate::evidence::TaskCategory;

#[derive(Clone, Debug)]
pub struct MockProvider {
    seed: u64,
    dimension: usize,
    adversarial: bool,
    failing: BTreeSet<Purpose>,
    malformed: BTreeSet<Purpose>,
    rubric_score: u8,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            dimension: MOCK_DIMENSION,
            adversarial: false,
            failing: BTreeSet::new(),
            malformed: BTreeSet::new(),
            rubric_score: 3,
        }
    }

    /// Injects one fabricated claim and one misquoted number into every
    /// global judgment.
    pub fn adversarial(mut self) -> Self {
        self.adversarial = true;
        self
    }

    /// Requests with this purpose fail as if the provider were down.
    pub fn failing(mut self, purpose: Purpose) -> Self {
        self.failing.insert(purpose);
        self
    }

    /// Requests with this purpose get a payload that is not valid JSON.
    pub fn malformed(mut self, purpose: Purpose) -> Self {
        self.malformed.insert(purpose);
        self
    }

    pub fn with_rubric_score(mut self, score: u8) -> Self {
        self.rubric_score = score.clamp(1, 5);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn complete(&self, request: &ProviderRequest) -> String {
        let user = request.user_text();
        let data: Value = json_block(&user)
            .and_then(|b| serde_json::from_str(b).ok())
            .unwrap_or(Value::Null);
        let out = match request.purpose {
            Purpose::Embed => Value::Null,
            Purpose::ExtractStructure => extract(&data),
            Purpose::HypotheticalDocument => {
                return data["goal"]["statement"].as_str().unwrap_or("").to_string();
            }
            Purpose::GradeQuality => self.grade(&data),
            Purpose::LocalSummary => local_summary(&data),
            Purpose::GlobalJudgment => self.global(&data),
            Purpose::CrossExamine => cross_examine(&data),
        };
        serde_json::to_string_pretty(&out).unwrap_or_default()
    }

    fn grade(&self, data: &Value) -> Value {
        let scores: Vec<Value> = data["criteria"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(Value::as_str)
            .map(|c| {
                json!({
                    "criterion": c,
                    "score": self.rubric_score,
                    "justification": format!("Fixed mock assessment of {c}."),
                })
            })
            .collect();
        json!({ "scores": scores })
    }

    fn global(&self, data: &Value) -> Value {
        let markers = data["markers"].as_array().cloned().unwrap_or_default();
        let mut claims: Vec<Value> = markers
            .iter()
            .map(|m| {
                json!({
                    "subject": m["student"],
                    "predicate": "flagged",
                    "datum_ref": m["ref"],
                    "value": round2(m["deviation_sd"].as_f64().unwrap_or(0.0)),
                })
            })
            .collect();
        let mut steps: Vec<String> = markers
            .iter()
            .map(|m| {
                format!(
                    "Review the {} evidence for {}.",
                    m["benchmark"].as_str().unwrap_or("benchmark"),
                    m["student"].as_str().unwrap_or("the student")
                )
            })
            .collect();
        steps.dedup();
        if self.adversarial {
            claims.push(json!({
                "subject": "intruder",
                "predicate": "flagged",
                "datum_ref": "marker:quality:A:intruder",
                "value": 2.5,
            }));
            if let Some(o) = data["objective"].as_array().and_then(|a| a.first()) {
                claims.push(json!({
                    "subject": o["student"],
                    "predicate": "scored",
                    "datum_ref": o["ref"],
                    "value": round2(o["value"].as_f64().unwrap_or(0.0) + 0.5),
                }));
            }
        }
        let confidence = if markers.is_empty() { "low" } else { "medium" };
        json!({
            "claims": claims,
            "suggested_investigation_steps": steps,
            "confidence": confidence,
        })
    }
}

impl Provider for MockProvider {
    fn id(&self) -> String {
        format!("mock-seed-{}", self.seed)
    }

    fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        if self.failing.contains(&request.purpose) {
            return Err(ProviderError::Unavailable(format!(
                "mock configured to fail {} requests",
                request.purpose
            )));
        }
        let prompt_tokens = request
            .segments
            .iter()
            .map(|s| s.content.split_whitespace().count() as u64)
            .sum();
        if request.purpose == Purpose::Embed {
            let embeddings: Vec<Vec<f64>> = request
                .segments
                .iter()
                .filter(|s| s.role == SegmentRole::User)
                .map(|s| hash_embedding(self.seed, self.dimension, &s.content))
                .collect();
            return Ok(ProviderResponse {
                text: String::new(),
                embeddings,
                prompt_tokens,
                completion_tokens: 0,
                provider_id: self.id(),
                wall_time_ms: 0,
            });
        }
        let text = if self.malformed.contains(&request.purpose) {
            "{ this is not valid json".to_string()
        } else {
            self.complete(request)
        };
        Ok(ProviderResponse {
            completion_tokens: text.split_whitespace().count() as u64,
            text,
            embeddings: Vec::new(),
            prompt_tokens,
            provider_id: self.id(),
            wall_time_ms: 0,
        })
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// `label: rest` with a case-insensitive label, after list bullets.
fn annotation<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let line = line.trim().trim_start_matches(['-', '*']).trim_start();
    let head = line.get(..label.len())?;
    if !head.eq_ignore_ascii_case(label) {
        return None;
    }
    Some(&line[label.len()..])
}

fn extract(data: &Value) -> Value {
    let mut goals = Vec::new();
    for line in data["task_description"].as_str().unwrap_or("").lines() {
        if let Some(rest) = annotation(line, "goal:") {
            let statement = rest.trim();
            if !statement.is_empty() {
                goals.push(json!({ "id": format!("g{}", goals.len() + 1), "statement": statement }));
            }
        }
    }

    let mut tasks = Vec::new();
    for meeting in data["meetings"].as_array().into_iter().flatten() {
        let source = meeting["id"].as_str().unwrap_or("");
        for line in meeting["minutes"].as_str().unwrap_or("").lines() {
            let Some(rest) = annotation(line, "task")
                .filter(|r| r.starts_with([':', ' ', '@', '[']))
            else {
                continue;
            };
            let Some((head, statement)) = rest.split_once(':') else {
                continue;
            };
            let statement = statement.trim();
            if statement.is_empty() {
                continue;
            }
            let assignee = head
                .split_whitespace()
                .find_map(|w| w.strip_prefix('@'))
                .map(str::to_string);
            let category = head
                .find('[')
                .and_then(|i| head[i + 1..].split(']').next())
                .and_then(TaskCategory::parse)
                .unwrap_or_else(|| TaskCategory::classify(statement));
            tasks.push(json!({
                "id": format!("x{}", tasks.len() + 1),
                "statement": statement,
                "assignee": assignee,
                "source": source,
                "category": category.as_str(),
            }));
        }
    }

    let mut summaries: Vec<Value> = Vec::new();
    for student in data["students"].as_array().into_iter().flatten() {
        let id = student["id"].as_str().unwrap_or("");
        for output in student["outputs"].as_array().into_iter().flatten() {
            let source = output["ref"].as_str().unwrap_or("");
            for line in output["text"].as_str().unwrap_or("").lines() {
                let Some(idx) = line.to_ascii_lowercase().find("done:") else {
                    continue;
                };
                let statement = line[idx + "done:".len()..].trim();
                if statement.is_empty() {
                    continue;
                }
                let existing = summaries
                    .iter_mut()
                    .find(|s| s["student"] == id && s["statement"] == statement);
                match existing {
                    Some(s) => {
                        if let Some(arr) = s["sources"].as_array_mut() {
                            arr.push(json!(source));
                        }
                    }
                    None => summaries.push(json!({
                        "student": id,
                        "statement": statement,
                        "sources": [source],
                    })),
                }
            }
        }
    }
    json!({ "goals": goals, "tasks": tasks, "work_summaries": summaries })
}

fn local_summary(data: &Value) -> Value {
    let dimension = data["dimension"].as_str().unwrap_or("dimension");
    let markers = data["markers"].as_array().cloned().unwrap_or_default();
    let features: Vec<Value> = markers
        .iter()
        .map(|m| {
            let direction = if m["scenario"] == "A" { "above" } else { "below" };
            json!({
                "ref": m["ref"],
                "student": m["student"],
                "direction": direction,
                "note": m["implication"],
            })
        })
        .collect();
    let narrative = if markers.is_empty() {
        format!("No conflict markers fired in the {dimension} dimension.")
    } else {
        format!(
            "{} conflict marker(s) fired in the {dimension} dimension.",
            markers.len()
        )
    };
    json!({ "salient_features": features, "narrative": narrative })
}

fn cross_examine(data: &Value) -> Value {
    let verdicts: Vec<Value> = data["claims"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|c| json!({ "index": c["index"], "supported": true }))
        .collect();
    json!({ "verdicts": verdicts })
}
