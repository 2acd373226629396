//! Team-relative normalisation (AutoRating), weighted aggregation into the
//! nine base measures and the three objective measures, and the optional
//! individual grade projection.

mod config;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evidence::StudentId;
use crate::framework::{Benchmark, Dimension};
use crate::metrics::{MetricId, MetricTable, Orientation};
use crate::num::Scalar;

pub use config::{
    ConfigError, ConfigIssue, ConfigOverrides, ProjectionMode, SubjectiveMode, WeightConfig,
    MASK_SUM_TOLERANCE,
};

/// Team-relative values with 1.0 as the team average.
///
/// Lower-better values are mirrored first with `x' = (max + min) - x`.
/// Each value is then divided by the team mean; a zero mean yields all 1.
/// `Signed` values are folded to `|x|` and treated as lower-better.
pub fn autorate<T: Scalar>(values: &[T], orientation: Orientation) -> Vec<T> {
    if values.is_empty() {
        return Vec::new();
    }
    let folded: Vec<T> = match orientation {
        Orientation::Signed => values.iter().map(|x| x.abs()).collect(),
        _ => values.to_vec(),
    };
    let mirrored: Vec<T> = match orientation {
        Orientation::HigherBetter => folded,
        Orientation::LowerBetter | Orientation::Signed => {
            let max = folded.iter().copied().fold(T::neg_infinity(), T::max);
            let min = folded.iter().copied().fold(T::infinity(), T::min);
            folded.iter().map(|&x| max + min - x).collect()
        }
    };
    let n = T::from_usize_lossy(mirrored.len());
    let mean = mirrored.iter().copied().sum::<T>() / n;
    if mean == T::zero() || !mean.is_finite() {
        return vec![T::one(); mirrored.len()];
    }
    mirrored.iter().map(|&x| x / mean).collect()
}

/// `(indiv / team) × team_grade`; a non-positive team average gives the
/// team grade unchanged.
pub fn final_grade_projection<T: Scalar>(indiv_avg: T, team_avg: T, team_grade: T) -> T {
    if team_avg <= T::zero() {
        return team_grade;
    }
    indiv_avg / team_avg * team_grade
}

/// `team_grade × √(indiv / team)`.
pub fn sqrt_grade_projection<T: Scalar>(indiv_avg: T, team_avg: T, team_grade: T) -> T {
    if team_avg <= T::zero() {
        return team_grade;
    }
    team_grade * (indiv_avg / team_avg).max(T::zero()).sqrt()
}

/// Linear projections rescaled so they sum to `n × team_grade`.
pub fn constant_sum_projection<T: Scalar>(indiv: &[T], team_grade: T) -> Vec<T> {
    let n = T::from_usize_lossy(indiv.len());
    let total: T = indiv.iter().copied().sum();
    if total <= T::zero() {
        return vec![team_grade; indiv.len()];
    }
    indiv.iter().map(|&x| x / total * n * team_grade).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMetric {
    pub metric_id: MetricId,
    pub student: StudentId,
    pub value: f64,
    /// False when the student had no evidence for this metric and got the
    /// neutral value.
    pub available: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTable {
    pub rows: BTreeMap<StudentId, BTreeMap<MetricId, NormalizedMetric>>,
    /// Metrics with no available value for any student.
    pub unavailable: Vec<MetricId>,
}

impl NormalizedTable {
    pub fn get(&self, student: &StudentId, metric: MetricId) -> Option<&NormalizedMetric> {
        self.rows.get(student).and_then(|r| r.get(&metric))
    }
}

/// AutoRating of every metric in `table`, over the students for whom it is
/// available. Students without the metric get the neutral 1.0.
pub fn normalize(table: &MetricTable, roster: &[StudentId]) -> NormalizedTable {
    let mut out = NormalizedTable::default();
    for metric in table.metric_ids() {
        if !table.team_available(metric) {
            out.unavailable.push(metric);
            continue;
        }
        let present: Vec<(&StudentId, f64)> = roster
            .iter()
            .filter_map(|s| {
                let v = table.get(s, metric)?;
                v.available.then(|| (s, metric.rating_input(v.value)))
            })
            .collect();
        let values: Vec<f64> = present.iter().map(|p| p.1).collect();
        let rated = autorate(&values, metric.rating_orientation());
        let by_student: BTreeMap<&StudentId, f64> =
            present.iter().map(|p| p.0).zip(rated).collect();
        for s in roster {
            let (value, available) = match by_student.get(s) {
                Some(v) => (*v, true),
                None => (1.0, false),
            };
            out.rows.entry(s.clone()).or_default().insert(
                metric,
                NormalizedMetric {
                    metric_id: metric,
                    student: s.clone(),
                    value,
                    available,
                },
            );
        }
    }
    out
}

/// How a benchmark was actually computed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkBasis {
    /// Weights after dropping unavailable metrics and renormalising.
    pub effective_weights: BTreeMap<MetricId, f64>,
    pub dropped: Vec<MetricId>,
    /// No metric was available; every student got the neutral 1.0.
    pub neutral: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasures {
    pub values: BTreeMap<StudentId, BTreeMap<Benchmark, f64>>,
    pub basis: BTreeMap<Benchmark, BenchmarkBasis>,
}

impl BaseMeasures {
    pub fn get(&self, student: &StudentId, b: Benchmark) -> f64 {
        self.values
            .get(student)
            .and_then(|r| r.get(&b))
            .copied()
            .unwrap_or(1.0)
    }

    /// One benchmark across `roster`, in roster order.
    pub fn column(&self, roster: &[StudentId], b: Benchmark) -> Vec<f64> {
        roster.iter().map(|s| self.get(s, b)).collect()
    }

    /// Multiplies every value of benchmark `b` for `student` by `factor`.
    pub fn scale(&mut self, student: &StudentId, b: Benchmark, factor: f64) {
        if let Some(v) = self.values.get_mut(student).and_then(|r| r.get_mut(&b)) {
            *v *= factor;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveMeasures {
    pub values: BTreeMap<StudentId, BTreeMap<Dimension, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade_projection: Option<GradeProjection>,
}

impl ObjectiveMeasures {
    pub fn get(&self, student: &StudentId, d: Dimension) -> f64 {
        self.values
            .get(student)
            .and_then(|r| r.get(&d))
            .copied()
            .unwrap_or(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeProjection {
    pub mode: ProjectionMode,
    pub team_grade: f64,
    pub per_student: BTreeMap<StudentId, f64>,
}

pub fn aggregate_base(
    normalized: &NormalizedTable,
    roster: &[StudentId],
    config: &WeightConfig,
) -> BaseMeasures {
    let mut out = BaseMeasures::default();
    for b in Benchmark::ALL {
        let mask = config.benchmark_masks.get(&b).cloned().unwrap_or_default();
        let mut basis = BenchmarkBasis::default();
        let mut kept = BTreeMap::new();
        for (m, w) in &mask {
            let present = roster.iter().any(|s| normalized.get(s, *m).is_some());
            if present {
                kept.insert(*m, *w);
            } else {
                basis.dropped.push(*m);
            }
        }
        let total: f64 = kept.values().sum();
        if kept.is_empty() || total <= 0.0 {
            basis.neutral = true;
        } else {
            basis.effective_weights = kept.into_iter().map(|(m, w)| (m, w / total)).collect();
        }
        for s in roster {
            let value = if basis.neutral {
                1.0
            } else {
                basis
                    .effective_weights
                    .iter()
                    .map(|(m, w)| w * normalized.get(s, *m).map_or(1.0, |n| n.value))
                    .sum()
            };
            out.values.entry(s.clone()).or_default().insert(b, value);
        }
        out.basis.insert(b, basis);
    }
    out
}

pub fn aggregate_objective(base: &BaseMeasures, roster: &[StudentId], config: &WeightConfig) -> ObjectiveMeasures {
    let mut out = ObjectiveMeasures::default();
    for d in Dimension::ALL {
        let mask = config.dimension_masks.get(&d).cloned().unwrap_or_default();
        let total: f64 = mask.values().sum();
        for s in roster {
            let value = if total <= 0.0 {
                1.0
            } else {
                mask.iter().map(|(b, w)| w / total * base.get(s, *b)).sum()
            };
            out.values.entry(s.clone()).or_default().insert(d, value);
        }
    }
    out
}

/// Grade projection from the mean of each student's objective measures.
pub fn project_grades(
    objective: &ObjectiveMeasures,
    roster: &[StudentId],
    team_grade: f64,
    mode: ProjectionMode,
) -> Option<GradeProjection> {
    if mode == ProjectionMode::Off || roster.is_empty() {
        return None;
    }
    let indiv: Vec<f64> = roster
        .iter()
        .map(|s| Dimension::ALL.iter().map(|d| objective.get(s, *d)).sum::<f64>() / 3.0)
        .collect();
    let team = indiv.iter().sum::<f64>() / indiv.len() as f64;
    let grades: Vec<f64> = match mode {
        ProjectionMode::Off => return None,
        ProjectionMode::Linear => indiv
            .iter()
            .map(|&x| final_grade_projection(x, team, team_grade))
            .collect(),
        ProjectionMode::SquareRoot => indiv
            .iter()
            .map(|&x| sqrt_grade_projection(x, team, team_grade))
            .collect(),
        ProjectionMode::ConstantSum => constant_sum_projection(&indiv, team_grade),
    };
    Some(GradeProjection {
        mode,
        team_grade,
        per_student: roster.iter().cloned().zip(grades).collect(),
    })
}
