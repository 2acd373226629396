//! One analysis run end to end, and the report it produces.
//!
//! The report body depends only on the bundle, the configuration and the
//! provider's responses; run ids, clocks and instructor review live in the
//! [`RunEnvelope`] so that the body of a finished run never changes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::abstract_metrics::{abstract_metrics, AbstractReport};
use crate::advisor::{run_advisor, AdvisoryReport, RunView, TEMPLATE_VERSION};
use crate::conflict::{detect_markers, ConflictMarker, InequalityStat};
use crate::context::{adjustments, apply_adjustments, classify_pa, pa_metrics, with_pa_columns, AdjustmentFactor, LabelMap, PaClassification};
use crate::evidence::{EvidenceBundle, PeerAssessmentItem, Student, StudentId, UnresolvedAlias};
use crate::framework::Benchmark;
use crate::measures::{
    aggregate_base, aggregate_objective, normalize, project_grades, BaseMeasures, GradeProjection, NormalizedTable,
    ObjectiveMeasures, SubjectiveMode, WeightConfig,
};
use crate::metrics::{direct_metrics, LexiconAnalyzer, MetricTable};
use crate::provider::{ExchangeRef, Session};

pub const SCHEMA_VERSION: u32 = 1;

/// How scenario B is read; shown at the top of every report.
pub const SCENARIO_RULE: &str = "Scenario A fires when a benchmark's Gini index is at least g* and the student \
sits at least d SD above the team mean. Scenario B fires when the Gini index is at least g* and the student \
sits at least d SD below the team mean, i.e. isolated low performance inside an unequal benchmark.";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub schema_version: u32,
    pub engine_version: String,
    pub template_version: String,
    pub project_id: String,
    /// SHA-256 of the canonical bundle.
    pub bundle_digest: String,
    /// `None` when the run used no provider.
    pub provider_id: Option<String>,
    pub scenario_rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeerAssessmentSection {
    pub mode: SubjectiveMode,
    /// Bias-corrected ratings; empty unless the mode is `measures`.
    pub classification: PaClassification,
    /// Items passed to the advisor instead of the measures.
    pub advisor_items: Vec<PeerAssessmentItem>,
}

/// Every computed quantity of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub roster: Vec<Student>,
    pub metrics: MetricTable,
    pub normalized: NormalizedTable,
    /// Configuration actually used for aggregation, i.e. with any
    /// peer-assessment columns appended.
    pub effective_config: WeightConfig,
    pub base: BaseMeasures,
    pub objective: ObjectiveMeasures,
    pub inequality_unadjusted: Vec<InequalityStat>,
    pub conflict_markers_unadjusted: Vec<ConflictMarker>,
    /// Non-neutral factors only; an empty list means adjusted equals
    /// unadjusted.
    pub adjustments: Vec<AdjustmentFactor>,
    pub adjusted_base: BaseMeasures,
    pub adjusted_objective: ObjectiveMeasures,
    pub inequality: Vec<InequalityStat>,
    /// Fired on the adjusted base measures, sorted by dimension, benchmark,
    /// scenario and student.
    pub conflict_markers: Vec<ConflictMarker>,
    pub grade_projection: Option<GradeProjection>,
    pub peer_assessment: PeerAssessmentSection,
    pub abstract_stage: Option<AbstractReport>,
    pub advisory: AdvisoryReport,
    pub transcript: Vec<ExchangeRef>,
    pub unresolved_aliases: Vec<UnresolvedAlias>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub header: ReportHeader,
    /// Configuration as submitted.
    pub config: WeightConfig,
    pub analysis: Analysis,
}

impl ReportBody {
    /// Canonical bytes; equal inputs give equal bytes.
    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_canonical_string(self).unwrap_or_default()
    }
}

/// One instructor override. The engine records it and never applies it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverrideRecord {
    /// What the override is about, e.g. a marker id or `grade:<student>`.
    pub target: String,
    pub value: serde_json::Value,
    pub note: String,
    pub author: String,
    pub at: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub reviewed: bool,
    pub annotation: Option<String>,
    pub overrides: Vec<OverrideRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Running,
    Complete,
    Failed,
}

/// Mutable bookkeeping around an immutable report body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunEnvelope {
    pub run_id: String,
    pub project_id: String,
    pub bundle_version: String,
    pub status: RunStatus,
    pub created_at: String,
    pub started_at: Option<String>,
    pub completed_at: Option<String>,
    pub config: WeightConfig,
    /// Run this one was derived from, for what-if runs.
    pub base_run: Option<String>,
    /// Requested provider kind; `None` follows the environment.
    #[serde(default)]
    pub provider: Option<String>,
    pub report_path: Option<String>,
    pub transcript_path: Option<String>,
    pub error: Option<String>,
    pub review: Review,
}

fn neutral(f: &AdjustmentFactor) -> bool {
    f.factor == 1.0 && f.presence_factor == 1.0
}

/// Runs the whole pipeline. Without a session the provider-backed metrics
/// are unavailable and the advisory section is marked skipped.
pub fn run_analysis(
    bundle: &EvidenceBundle,
    config: &WeightConfig,
    labels: &LabelMap,
    session: Option<&Session>,
) -> ReportBody {
    let roster = bundle.student_ids();
    let mut warnings = Vec::new();

    let mut table = direct_metrics(bundle, &config.media_weights, &LexiconAnalyzer::shipped());
    let abstract_stage = session.map(|s| {
        let (t, report) = abstract_metrics(bundle, s, config);
        table.merge(t);
        for f in &report.failures {
            warnings.push(format!("{} stage failed: {}", f.stage, f.reason));
        }
        report
    });

    let classification = classify_pa(&bundle.pa_items, labels);
    let mut effective_config = config.clone();
    let peer_assessment = match config.subjective_mode {
        SubjectiveMode::Measures => {
            table.merge(pa_metrics(&classification, &roster, bundle.project_window));
            effective_config = with_pa_columns(config, classification.by_benchmark.keys().copied());
            PeerAssessmentSection {
                mode: config.subjective_mode,
                advisor_items: classification.advisor_evidence.clone(),
                classification,
            }
        }
        SubjectiveMode::AdvisorOnly => PeerAssessmentSection {
            mode: config.subjective_mode,
            classification: PaClassification::default(),
            advisor_items: bundle.pa_items.clone(),
        },
        SubjectiveMode::Off => PeerAssessmentSection {
            mode: config.subjective_mode,
            classification: PaClassification::default(),
            advisor_items: Vec::new(),
        },
    };

    let normalized = normalize(&table, &roster);
    let base = aggregate_base(&normalized, &roster, &effective_config);
    for (b, basis) in &base.basis {
        if basis.neutral {
            warnings.push(format!("{b}: no available metric; held at the neutral value 1"));
        }
    }
    let objective = aggregate_objective(&base, &roster, &effective_config);
    let unadjusted = detect_markers(&base, &roster, &effective_config);

    let (factors, adjusted_base) = if config.context_adjust {
        let all = adjustments(&bundle.context_records, &bundle.project_window, &roster, config);
        let kept: Vec<AdjustmentFactor> = all.into_iter().filter(|f| !neutral(f)).collect();
        let adjusted = apply_adjustments(&base, &kept);
        (kept, adjusted)
    } else {
        (Vec::new(), base.clone())
    };
    let adjusted_objective = aggregate_objective(&adjusted_base, &roster, &effective_config);
    let adjusted = detect_markers(&adjusted_base, &roster, &effective_config);
    warnings.extend(adjusted.warnings.iter().cloned());
    let grade_projection = project_grades(&adjusted_objective, &roster, bundle.team_grade, config.grade_projection);

    let display_names: BTreeMap<StudentId, String> =
        bundle.roster.iter().map(|s| (s.id.clone(), s.display_name.clone())).collect();
    let advisory = match session {
        Some(s) => {
            let view = RunView {
                roster: &roster,
                display_names: &display_names,
                metrics: &table,
                base: &adjusted_base,
                objective: &adjusted_objective,
                markers: &adjusted.markers,
                adjustments: &factors,
                pa_notes: &peer_assessment.advisor_items,
                config: &effective_config,
            };
            run_advisor(&view, s)
        }
        None => AdvisoryReport::skipped("no provider configured"),
    };
    let transcript = session
        .map(|s| {
            s.transcript
                .entries()
                .into_iter()
                .map(|e| ExchangeRef {
                    seq: e.seq,
                    purpose: e.request.purpose,
                    request_digest: e.request_digest,
                    ok: e.error.is_none(),
                })
                .collect()
        })
        .unwrap_or_default();

    ReportBody {
        header: ReportHeader {
            schema_version: SCHEMA_VERSION,
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            template_version: TEMPLATE_VERSION.to_string(),
            project_id: bundle.project_id.clone(),
            bundle_digest: bundle.digest(),
            provider_id: session.map(|s| s.provider.id()),
            scenario_rule: SCENARIO_RULE.to_string(),
        },
        config: config.clone(),
        analysis: Analysis {
            roster: bundle.roster.clone(),
            metrics: table,
            normalized,
            effective_config,
            base,
            objective,
            inequality_unadjusted: unadjusted.inequality,
            conflict_markers_unadjusted: unadjusted.markers,
            adjustments: factors,
            adjusted_base,
            adjusted_objective,
            inequality: adjusted.inequality,
            conflict_markers: adjusted.markers,
            grade_projection,
            peer_assessment,
            abstract_stage,
            advisory,
            transcript,
            unresolved_aliases: bundle.unresolved_aliases.clone(),
            warnings,
        },
    }
}

/// Marker ids only in `a`, then marker ids only in `b`.
pub fn marker_diff(a: &[ConflictMarker], b: &[ConflictMarker]) -> (Vec<String>, Vec<String>) {
    let ids = |m: &[ConflictMarker]| m.iter().map(|x| x.id.clone()).collect::<std::collections::BTreeSet<_>>();
    let (x, y) = (ids(a), ids(b));
    (x.difference(&y).cloned().collect(), y.difference(&x).cloned().collect())
}

/// Benchmarks whose base measure is neutral for want of evidence.
pub fn neutral_benchmarks(base: &BaseMeasures) -> Vec<Benchmark> {
    base.basis.iter().filter(|(_, b)| b.neutral).map(|(k, _)| *k).collect()
}
