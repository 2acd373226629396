//! Hierarchical advisory prompts: one local summary per dimension, a
//! global judgment over them, then a two-pass validation.
//!
//! Claims travel as `(subject, predicate, datum_ref, value)` triples so the
//! referential pass is mechanical. The provider cross-examination runs on
//! whatever survives it and can only remove claims. Without a completed
//! validation pass no judgment is emitted.

mod data;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::conflict::ConflictMarker;
use crate::context::AdjustmentFactor;
use crate::evidence::{PeerAssessmentItem, StudentId};
use crate::framework::Dimension;
use crate::measures::{BaseMeasures, ObjectiveMeasures, WeightConfig};
use crate::metrics::MetricTable;
use crate::provider::{json_block, ProviderError, ProviderRequest, Purpose, Session};

pub use data::{Datum, DatumIndex, DatumKind};
pub use validate::{check_claim, cross_examine, ClaimStatus, ValidationEntry};

pub const TEMPLATE_VERSION: &str = "v1";

const SYSTEM: &str = include_str!("../../templates/v1/system.txt");
const LOCAL: &str = include_str!("../../templates/v1/local.txt");
const GLOBAL: &str = include_str!("../../templates/v1/global.txt");
pub(crate) const CROSS: &str = include_str!("../../templates/v1/cross_examine.txt");

pub const DISCLAIMER: &str = "This advisory text is decision support for the instructor. It profiles \
recorded activity, may be incomplete or wrong, and is not a grade or a grading recommendation. \
Any decision about a student remains with the instructor.";

pub const NO_SIGNALS: &str = "No inequality signals were detected: no conflict marker fired in any benchmark.";

pub(crate) fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (k, v) in slots {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SalientFeature {
    #[serde(rename = "ref")]
    pub reference: String,
    pub student: StudentId,
    pub direction: Direction,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSummary {
    pub dimension: Dimension,
    pub available: bool,
    pub salient_features: Vec<SalientFeature>,
    pub narrative: String,
    pub citations: Vec<String>,
    /// Features dropped for citing a datum absent from the run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
}

impl LocalSummary {
    pub fn unavailable(dimension: Dimension, reason: &str) -> Self {
        Self {
            dimension,
            available: false,
            salient_features: Vec::new(),
            narrative: format!("Local summary for {} unavailable: {reason}", dimension.title()),
            citations: Vec::new(),
            dropped: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Claim {
    pub subject: String,
    pub predicate: String,
    pub datum_ref: String,
    #[serde(default)]
    pub value: Option<f64>,
}

/// Global judgment as the provider returned it, before validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftJudgment {
    pub claims: Vec<Claim>,
    pub suggested_investigation_steps: Vec<String>,
    pub confidence: Confidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryJudgment {
    pub summary: String,
    /// Prose generated from the surviving claims only.
    pub narratives: BTreeMap<StudentId, String>,
    pub flagged_conflicts: Vec<String>,
    pub suggested_investigation_steps: Vec<String>,
    pub confidence: Confidence,
    pub disclaimer: String,
    pub validation_log: Vec<ValidationEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvisoryStatus {
    Complete,
    /// The global judgment could not be produced.
    Unavailable,
    /// A judgment was produced but validation did not complete.
    Withheld,
    /// Advisory disabled for this run.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryReport {
    pub template_version: String,
    pub status: AdvisoryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub local_summaries: Vec<LocalSummary>,
    pub judgment: Option<AdvisoryJudgment>,
    pub disclaimer: String,
}

impl AdvisoryReport {
    pub fn skipped(reason: &str) -> Self {
        Self {
            template_version: TEMPLATE_VERSION.into(),
            status: AdvisoryStatus::Skipped,
            reason: Some(reason.into()),
            local_summaries: Vec::new(),
            judgment: None,
            disclaimer: DISCLAIMER.into(),
        }
    }
}

/// Everything the advisor may look at, all from the same run.
pub struct RunView<'a> {
    pub roster: &'a [StudentId],
    pub display_names: &'a BTreeMap<StudentId, String>,
    pub metrics: &'a MetricTable,
    pub base: &'a BaseMeasures,
    pub objective: &'a ObjectiveMeasures,
    pub markers: &'a [ConflictMarker],
    pub adjustments: &'a [AdjustmentFactor],
    pub pa_notes: &'a [PeerAssessmentItem],
    pub config: &'a WeightConfig,
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn marker_lines(markers: &[&ConflictMarker]) -> String {
    if markers.is_empty() {
        return "No markers fired in this dimension.".into();
    }
    markers
        .iter()
        .map(|m| {
            format!(
                "- {}: student {}, {} scenario {}, value {}, gini {}, {} SD from the team mean. Implication: {}",
                m.id,
                m.student,
                m.benchmark.title(),
                m.scenario,
                f4(m.value),
                f4(m.gini),
                format!("{:+.4}", m.deviation_sd),
                m.implication_text
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn marker_json(m: &ConflictMarker) -> serde_json::Value {
    json!({
        "ref": m.id,
        "benchmark": m.benchmark,
        "scenario": m.scenario,
        "student": m.student,
        "implication": m.implication_text,
        "value": m.value,
        "gini": m.gini,
        "deviation_sd": m.deviation_sd,
    })
}

/// Deterministic local prompt for one dimension.
pub fn build_local_prompt(dimension: Dimension, view: &RunView) -> ProviderRequest {
    let benchmarks = dimension.benchmarks();
    let mut base_rows = vec![format!(
        "| student | {} |",
        benchmarks.iter().map(|b| b.title()).collect::<Vec<_>>().join(" | ")
    )];
    let mut base_json = Vec::new();
    for s in view.roster {
        let cells: Vec<String> = benchmarks.iter().map(|b| f4(view.base.get(s, *b))).collect();
        base_rows.push(format!("| {s} | {} |", cells.join(" | ")));
        for b in &benchmarks {
            base_json.push(json!({
                "ref": DatumIndex::base_ref(*b, s),
                "benchmark": b,
                "student": s,
                "value": view.base.get(s, *b),
            }));
        }
    }
    let mut metric_rows = Vec::new();
    let mut metric_json = Vec::new();
    for b in &benchmarks {
        let Some(mask) = view.config.benchmark_masks.get(b) else { continue };
        for m in mask.keys() {
            let mut cells = Vec::new();
            for s in view.roster {
                match view.metrics.get(s, *m).filter(|v| v.available) {
                    Some(v) => {
                        cells.push(format!("{s}={}", f4(v.value)));
                        metric_json.push(json!({
                            "ref": DatumIndex::metric_ref(*m, s),
                            "metric": m,
                            "student": s,
                            "value": v.value,
                        }));
                    }
                    None => cells.push(format!("{s}=n/a")),
                }
            }
            metric_rows.push(format!("- {} {} ({}): {}", b.as_str(), m.code(), m.name(), cells.join(", ")));
        }
    }
    let markers: Vec<&ConflictMarker> = view.markers.iter().filter(|m| m.dimension == dimension).collect();
    let data = json!({
        "dimension": dimension,
        "markers": markers.iter().map(|m| marker_json(m)).collect::<Vec<_>>(),
        "base": base_json,
        "metrics": metric_json,
    });
    let user = fill(
        LOCAL,
        &[
            ("dimension", dimension.title().to_string()),
            ("benchmarks", benchmarks.iter().map(|b| b.title()).collect::<Vec<_>>().join(", ")),
            ("base_table", base_rows.join("\n")),
            ("metric_table", if metric_rows.is_empty() { "none".into() } else { metric_rows.join("\n") }),
            ("markers", marker_lines(&markers)),
            ("data", serde_json::to_string_pretty(&data).unwrap_or_default()),
        ],
    );
    ProviderRequest::completion(Purpose::LocalSummary, SYSTEM, user, 1024)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLocal {
    salient_features: Vec<SalientFeature>,
    narrative: String,
}

fn parse_local(text: &str) -> Result<RawLocal, String> {
    let body = json_block(text).ok_or("response holds no JSON object")?;
    serde_json::from_str(body).map_err(|e| e.to_string())
}

pub fn local_summary(dimension: Dimension, view: &RunView, index: &DatumIndex, session: &Session) -> LocalSummary {
    let raw = match session.send_parsed(&build_local_prompt(dimension, view), parse_local) {
        Ok(r) => r,
        Err(e) => return LocalSummary::unavailable(dimension, &e.to_string()),
    };
    let mut out = LocalSummary {
        dimension,
        available: true,
        salient_features: Vec::new(),
        narrative: raw.narrative,
        citations: Vec::new(),
        dropped: Vec::new(),
    };
    for f in raw.salient_features {
        match index.get(&f.reference) {
            Some(d) if d.student == f.student => {
                if !out.citations.contains(&f.reference) {
                    out.citations.push(f.reference.clone());
                }
                out.salient_features.push(f);
            }
            _ => out.dropped.push(f.reference),
        }
    }
    out
}

pub fn build_global_prompt(locals: &[LocalSummary], view: &RunView) -> ProviderRequest {
    let objective_rows: Vec<String> = view
        .roster
        .iter()
        .map(|s| {
            let cells: Vec<String> = Dimension::ALL
                .iter()
                .map(|d| format!("{} {}", d.title(), f4(view.objective.get(s, *d))))
                .collect();
            format!("- {s}: {}", cells.join(", "))
        })
        .collect();
    let objective_json: Vec<_> = view
        .roster
        .iter()
        .flat_map(|s| {
            Dimension::ALL.iter().map(move |d| {
                json!({
                    "ref": DatumIndex::objective_ref(*d, s),
                    "dimension": d,
                    "student": s,
                    "value": view.objective.get(s, *d),
                })
            })
        })
        .collect();
    let adjustments: Vec<&AdjustmentFactor> = view
        .adjustments
        .iter()
        .filter(|a| a.factor != 1.0 || a.presence_factor != 1.0)
        .collect();
    let adjustment_lines = if adjustments.is_empty() {
        "none".to_string()
    } else {
        adjustments
            .iter()
            .map(|a| {
                format!(
                    "- {}: factor {}, presence factor {}, absence fraction {}",
                    a.student,
                    f4(a.factor),
                    f4(a.presence_factor),
                    f4(a.absence_fraction)
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let pa_lines = if view.pa_notes.is_empty() {
        "none".to_string()
    } else {
        view.pa_notes
            .iter()
            .map(|p| {
                format!(
                    "- {} on {} ({}): {}{}",
                    p.rater_alias,
                    p.ratee_alias,
                    p.category_label,
                    p.score,
                    p.comment.as_deref().map(|c| format!(", \"{c}\"")).unwrap_or_default()
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let locals_text = locals
        .iter()
        .map(|l| format!("- {}: {}", l.dimension.title(), l.narrative))
        .collect::<Vec<_>>()
        .join("\n");
    let all: Vec<&ConflictMarker> = view.markers.iter().collect();
    let data = json!({
        "markers": view.markers.iter().map(marker_json).collect::<Vec<_>>(),
        "objective": objective_json,
        "adjustments": adjustments.iter().map(|a| json!({
            "ref": DatumIndex::adjustment_ref(&a.student),
            "student": a.student,
            "factor": a.factor,
            "presence_factor": a.presence_factor,
        })).collect::<Vec<_>>(),
        "local_summaries": locals.iter().map(|l| json!({
            "dimension": l.dimension,
            "available": l.available,
            "narrative": l.narrative,
            "salient_features": l.salient_features,
        })).collect::<Vec<_>>(),
    });
    let user = fill(
        GLOBAL,
        &[
            (
                "roster",
                view.roster
                    .iter()
                    .map(|s| match view.display_names.get(s) {
                        Some(n) => format!("{s} ({n})"),
                        None => s.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(", "),
            ),
            ("locals", locals_text),
            ("objective_table", objective_rows.join("\n")),
            (
                "markers",
                if all.is_empty() { "No markers fired in any dimension.".into() } else { marker_lines(&all) },
            ),
            ("adjustments", adjustment_lines),
            ("pa_notes", pa_lines),
            ("data", serde_json::to_string_pretty(&data).unwrap_or_default()),
        ],
    );
    ProviderRequest::completion(Purpose::GlobalJudgment, SYSTEM, user, 2048)
}

fn parse_draft(text: &str) -> Result<DraftJudgment, String> {
    let body = json_block(text).ok_or("response holds no JSON object")?;
    serde_json::from_str(body).map_err(|e| e.to_string())
}

pub fn global_judgment(locals: &[LocalSummary], view: &RunView, session: &Session) -> Result<DraftJudgment, ProviderError> {
    session.send_parsed(&build_global_prompt(locals, view), parse_draft)
}

fn mentions_grade(text: &str) -> bool {
    let lower = text.to_lowercase();
    ["grade", "mark ", "marks", "score"].iter().any(|w| lower.contains(w)) && lower.chars().any(|c| c.is_ascii_digit())
}

fn sentence(claim: &Claim, datum: &Datum, name: &str) -> String {
    match &datum.kind {
        DatumKind::Marker { benchmark, scenario, implication } => format!(
            "{name} is flagged on {} (scenario {scenario}, {:+.2} SD from the team mean). {implication}",
            benchmark.title(),
            datum.value
        ),
        DatumKind::Base { benchmark } => {
            format!("{name} has a {} base measure of {:.2}.", benchmark.title(), datum.value)
        }
        DatumKind::Objective { dimension } => {
            format!("{name} has a {} objective measure of {:.2}.", dimension.title(), datum.value)
        }
        DatumKind::Metric { metric } => format!("{name} has {} at {:.2}.", metric.name(), datum.value),
        DatumKind::Adjustment => format!(
            "{name} received a contextual adjustment factor of {:.3} ({}).",
            datum.value, claim.predicate
        ),
    }
}

/// Validates a draft and writes the narrative from the surviving claims.
/// `Err` means validation could not complete and nothing may be shown.
pub fn validate_judgment(
    draft: &DraftJudgment,
    view: &RunView,
    index: &DatumIndex,
    session: &Session,
) -> Result<AdvisoryJudgment, ProviderError> {
    let mut log: Vec<ValidationEntry> = draft.claims.iter().map(|c| check_claim(c, view.roster, index)).collect();
    cross_examine(&mut log, index, session)?;

    let mut narratives: BTreeMap<StudentId, Vec<String>> = BTreeMap::new();
    for entry in log.iter().filter(|e| e.status == ClaimStatus::Supported) {
        let Some(datum) = index.get(&entry.claim.datum_ref) else { continue };
        let name = view
            .display_names
            .get(&datum.student)
            .cloned()
            .unwrap_or_else(|| datum.student.to_string());
        let line = sentence(&entry.claim, datum, &name);
        let lines = narratives.entry(datum.student.clone()).or_default();
        if !lines.contains(&line) {
            lines.push(line);
        }
    }
    let narratives: BTreeMap<StudentId, String> = view
        .roster
        .iter()
        .map(|s| {
            let text = match narratives.remove(s) {
                Some(lines) => lines.join(" "),
                None => {
                    let name = view.display_names.get(s).cloned().unwrap_or_else(|| s.to_string());
                    format!("No supported finding concerns {name}.")
                }
            };
            (s.clone(), text)
        })
        .collect();
    let summary = if view.markers.is_empty() {
        NO_SIGNALS.to_string()
    } else {
        let students: std::collections::BTreeSet<&StudentId> = view.markers.iter().map(|m| &m.student).collect();
        format!(
            "{} conflict marker(s) fired, concerning {} student(s). Review the cited evidence before drawing conclusions.",
            view.markers.len(),
            students.len()
        )
    };
    Ok(AdvisoryJudgment {
        summary,
        narratives,
        flagged_conflicts: view.markers.iter().map(|m| m.id.clone()).collect(),
        suggested_investigation_steps: draft
            .suggested_investigation_steps
            .iter()
            .filter(|s| !mentions_grade(s))
            .cloned()
            .collect(),
        confidence: draft.confidence,
        disclaimer: DISCLAIMER.into(),
        validation_log: log,
    })
}

/// Local summaries, global judgment and validation, strictly in that
/// order so the transcript sequence is reproducible.
pub fn run_advisor(view: &RunView, session: &Session) -> AdvisoryReport {
    let index = DatumIndex::build(view);
    let locals: Vec<LocalSummary> = Dimension::ALL
        .iter()
        .map(|d| local_summary(*d, view, &index, session))
        .collect();
    let mut report = AdvisoryReport {
        template_version: TEMPLATE_VERSION.into(),
        status: AdvisoryStatus::Complete,
        reason: None,
        local_summaries: locals,
        judgment: None,
        disclaimer: DISCLAIMER.into(),
    };
    let draft = match global_judgment(&report.local_summaries, view, session) {
        Ok(d) => d,
        Err(e) => {
            report.status = AdvisoryStatus::Unavailable;
            report.reason = Some(format!("global judgment unavailable: {e}"));
            return report;
        }
    };
    match validate_judgment(&draft, view, &index, session) {
        Ok(j) => report.judgment = Some(j),
        Err(e) => {
            report.status = AdvisoryStatus::Withheld;
            report.reason = Some(format!("validation did not complete: {e}"));
        }
    }
    report
}

#[cfg(test)]
mod tests;
