//! Contextual adjustment (absence, past grades) and peer-assessment
//! classification with rater bias correction.
//!
//! Factors multiply the base measures: Presence receives the presence
//! factor, every other benchmark the general factor, and adjusted objective
//! measures are re-aggregated from the adjusted base. Unadjusted values are
//! kept alongside.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evidence::{ContextKind, ContextRecord, PeerAssessmentItem, StudentId, Window};
use crate::framework::Benchmark;
use crate::measures::{BaseMeasures, WeightConfig};
use crate::metrics::{MetricId, MetricTable, MetricValue};
use crate::num::interval_union_length;

const DEFAULT_LABELS: &str = include_str!("../data/pa_labels.json");

/// Union of a student's absence intervals over the project length.
pub fn absence_fraction(
    records: &[ContextRecord],
    window: &Window,
    roster: &[StudentId],
) -> BTreeMap<StudentId, f64> {
    let total = window.duration_hours();
    roster
        .iter()
        .map(|s| {
            let intervals: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| &r.student == s && r.kind == ContextKind::PersonalCircumstanceAbsence)
                .filter_map(|r| r.interval)
                .map(|iv| (iv.start.hours_since(&window.start), iv.end.hours_since(&window.start)))
                .collect();
            let covered = interval_union_length(&intervals, 0.0, total);
            let fraction = if total > 0.0 { (covered / total).clamp(0.0, 1.0) } else { 0.0 };
            (s.clone(), fraction)
        })
        .collect()
}

/// Student mean past grade over the mean of the per-student means. A
/// student without past grades, or a team mean of zero, gives 1.
pub fn past_grade_ratio(records: &[ContextRecord], roster: &[StudentId]) -> BTreeMap<StudentId, f64> {
    let per_student: BTreeMap<&StudentId, f64> = roster
        .iter()
        .filter_map(|s| {
            let grades: Vec<f64> = records
                .iter()
                .filter(|r| &r.student == s && r.kind == ContextKind::PastGrade)
                .filter_map(|r| r.value)
                .collect();
            (!grades.is_empty()).then(|| (s, grades.iter().sum::<f64>() / grades.len() as f64))
        })
        .collect();
    let team = if per_student.is_empty() {
        0.0
    } else {
        per_student.values().sum::<f64>() / per_student.len() as f64
    };
    roster
        .iter()
        .map(|s| {
            let ratio = match per_student.get(s) {
                Some(g) if team > 0.0 => g / team,
                _ => 1.0,
            };
            (s.clone(), ratio)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentFactor {
    pub student: StudentId,
    /// Applied to every benchmark except Presence.
    pub factor: f64,
    /// Applied to Presence.
    pub presence_factor: f64,
    pub absence_fraction: f64,
    /// `min(1 / (1 - absence), 1 + δ)`.
    pub absence_compensation: f64,
    pub past_grade_ratio: f64,
}

pub fn adjustment(
    student: &StudentId,
    absence: f64,
    past_grade_ratio: f64,
    config: &WeightConfig,
) -> AdjustmentFactor {
    let delta = config.adjustment_clamp;
    let clamp = |x: f64| x.clamp(1.0 - delta, 1.0 + delta);
    let compensation = if absence >= 1.0 {
        1.0 + delta
    } else {
        (1.0 / (1.0 - absence)).min(1.0 + delta)
    };
    let grade_term = config.past_grade_weight * (past_grade_ratio - 1.0);
    AdjustmentFactor {
        student: student.clone(),
        factor: clamp(1.0 + grade_term),
        presence_factor: clamp(1.0 + config.absence_weight * (compensation - 1.0) + grade_term),
        absence_fraction: absence,
        absence_compensation: compensation,
        past_grade_ratio,
    }
}

pub fn adjustments(
    records: &[ContextRecord],
    window: &Window,
    roster: &[StudentId],
    config: &WeightConfig,
) -> Vec<AdjustmentFactor> {
    let absence = absence_fraction(records, window, roster);
    let ratio = past_grade_ratio(records, roster);
    roster
        .iter()
        .map(|s| adjustment(s, absence[s], ratio[s], config))
        .collect()
}

pub fn apply_adjustments(base: &BaseMeasures, factors: &[AdjustmentFactor]) -> BaseMeasures {
    let mut out = base.clone();
    for f in factors {
        for b in Benchmark::ALL {
            let k = if b == Benchmark::Presence { f.presence_factor } else { f.factor };
            out.scale(&f.student, b, k);
        }
    }
    out
}

/// Case-insensitive exact map from peer-assessment labels to benchmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMap {
    labels: BTreeMap<String, Benchmark>,
}

impl LabelMap {
    pub fn parse(json: &str) -> Result<Self, String> {
        let raw: BTreeMap<String, String> = serde_json::from_str(json).map_err(|e| e.to_string())?;
        let mut labels = BTreeMap::new();
        for (label, bench) in raw {
            let b = bench
                .parse::<Benchmark>()
                .map_err(|e| format!("label {label:?}: {e}"))?;
            labels.insert(label.trim().to_lowercase(), b);
        }
        Ok(Self { labels })
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_LABELS).expect("shipped label map parses")
    }

    pub fn lookup(&self, label: &str) -> Option<Benchmark> {
        self.labels.get(&label.trim().to_lowercase()).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectedRating {
    pub rater: StudentId,
    pub ratee: StudentId,
    pub benchmark: Benchmark,
    pub raw: u8,
    pub corrected: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PaClassification {
    pub by_benchmark: BTreeMap<Benchmark, Vec<CorrectedRating>>,
    /// Items whose label matched no benchmark, or whose rater or ratee did
    /// not resolve; these reach the advisor as free-text evidence.
    pub advisor_evidence: Vec<PeerAssessmentItem>,
    pub grand_mean: Option<f64>,
    pub rater_means: BTreeMap<StudentId, f64>,
}

/// Sorts items into benchmarks and rescales each rater's scores by
/// `grand mean / rater mean`, both taken over all matched items.
pub fn classify_pa(items: &[PeerAssessmentItem], labels: &LabelMap) -> PaClassification {
    let mut out = PaClassification::default();
    let mut matched: Vec<(StudentId, StudentId, Benchmark, u8)> = Vec::new();
    for item in items {
        match (&item.rater, &item.ratee, labels.lookup(&item.category_label)) {
            (Some(r), Some(e), Some(b)) => matched.push((r.clone(), e.clone(), b, item.score)),
            _ => out.advisor_evidence.push(item.clone()),
        }
    }
    if matched.is_empty() {
        return out;
    }
    let grand = matched.iter().map(|m| f64::from(m.3)).sum::<f64>() / matched.len() as f64;
    let mut given: BTreeMap<&StudentId, (f64, usize)> = BTreeMap::new();
    for (r, _, _, score) in &matched {
        let e = given.entry(r).or_default();
        e.0 += f64::from(*score);
        e.1 += 1;
    }
    out.rater_means = given
        .iter()
        .map(|(r, (sum, n))| ((*r).clone(), sum / *n as f64))
        .collect();
    out.grand_mean = Some(grand);
    for (rater, ratee, b, raw) in &matched {
        let rater_mean = out.rater_means[rater];
        out.by_benchmark.entry(*b).or_default().push(CorrectedRating {
            rater: rater.clone(),
            ratee: ratee.clone(),
            benchmark: *b,
            raw: *raw,
            corrected: f64::from(*raw) * grand / rater_mean,
        });
    }
    out
}

/// One `pa:<benchmark>` metric per matched benchmark: the mean corrected
/// rating each student received.
pub fn pa_metrics(pa: &PaClassification, roster: &[StudentId], window: Window) -> MetricTable {
    let mut table = MetricTable::new(window);
    for (b, ratings) in &pa.by_benchmark {
        for s in roster {
            let received: Vec<f64> = ratings
                .iter()
                .filter(|r| &r.ratee == s)
                .map(|r| r.corrected)
                .collect();
            let value = if received.is_empty() {
                0.0
            } else {
                received.iter().sum::<f64>() / received.len() as f64
            };
            table.insert(MetricValue::new(MetricId::Pa(*b), s, value, received.len() as u64));
        }
    }
    table
}

/// Appends each `pa:<benchmark>` column at `pa_weight`, scaling the
/// benchmark's existing weights by `1 - pa_weight`.
pub fn with_pa_columns(config: &WeightConfig, benchmarks: impl IntoIterator<Item = Benchmark>) -> WeightConfig {
    let mut out = config.clone();
    for b in benchmarks {
        let mask = out.benchmark_masks.entry(b).or_default();
        for w in mask.values_mut() {
            *w *= 1.0 - config.pa_weight;
        }
        mask.insert(MetricId::Pa(b), config.pa_weight);
    }
    out
}
