//! Inequality per base measure and the scenario A/B conflict markers.
//!
//! A benchmark is examined when its Gini index reaches g*. Within such a
//! benchmark a student at or above `mean + d·sd` fires scenario A and a
//! student at or below `mean - d·sd` fires scenario B (population SD).
//! Both scenarios require high inequality: an isolated outlier cannot sit
//! in an equal team.

use serde::{Deserialize, Serialize};

use crate::evidence::StudentId;
use crate::framework::{Benchmark, Dimension, Scenario};
use crate::measures::{BaseMeasures, WeightConfig};
use crate::metrics::MetricId;
use crate::num::{mean, population_sd, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("gini is undefined for negative value {0}")]
pub struct NegativeValue(pub f64);

/// Gini index `ΣΣ|x_i - x_j| / (2 n² μ)`, evaluated in O(n log n) via the
/// sorted form `Σ (2i - n - 1) x_(i) / (n² μ)`. Zero for fewer than two
/// values or an all-zero vector.
pub fn gini<T: Scalar>(values: &[T]) -> Result<T, NegativeValue> {
    if let Some(neg) = values.iter().find(|x| **x < T::zero()) {
        return Err(NegativeValue(neg.to_f64().unwrap_or(f64::NAN)));
    }
    let n = values.len();
    if n < 2 {
        return Ok(T::zero());
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let total: T = sorted.iter().copied().sum();
    if total <= T::zero() {
        return Ok(T::zero());
    }
    let nt = T::from_usize_lossy(n);
    let weighted: T = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let rank = T::from_usize_lossy(2 * (i + 1)) - nt - T::one();
            rank * x
        })
        .sum();
    // n² μ = n · total
    Ok((weighted / (nt * total)).max(T::zero()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityStat {
    pub benchmark: Benchmark,
    pub gini: f64,
    pub team_mean: f64,
    pub team_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConflictMarker {
    /// `marker:<benchmark>:<A|B>:<student>`
    pub id: String,
    pub dimension: Dimension,
    pub benchmark: Benchmark,
    pub scenario: Scenario,
    pub student: StudentId,
    pub value: f64,
    pub gini: f64,
    pub team_mean: f64,
    pub team_sd: f64,
    pub deviation_sd: f64,
    pub implication_text: String,
    pub evidence_refs: Vec<MetricId>,
}

impl ConflictMarker {
    pub fn ref_for(benchmark: Benchmark, scenario: Scenario, student: &StudentId) -> String {
        format!("marker:{benchmark}:{scenario}:{student}")
    }

    /// Re-checks the defining inequalities from the marker's own fields.
    pub fn is_sound(&self, g_star: f64, d: f64) -> bool {
        let z_ok = match self.scenario {
            Scenario::A => self.deviation_sd >= d,
            Scenario::B => self.deviation_sd <= -d,
        };
        let z_consistent = self.team_sd > 0.0
            && ((self.value - self.team_mean) / self.team_sd - self.deviation_sd).abs() < 1e-9;
        self.gini >= g_star && z_ok && z_consistent
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub inequality: Vec<InequalityStat>,
    pub markers: Vec<ConflictMarker>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn detect_markers(base: &BaseMeasures, roster: &[StudentId], config: &WeightConfig) -> MarkerSet {
    let mut out = MarkerSet::default();
    let g_star = config.gini_threshold;
    let d = config.deviation_threshold;
    for b in Benchmark::ALL {
        let mut column = base.column(roster, b);
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        if min < 0.0 {
            out.warnings.push(format!(
                "{b}: negative base measure {min}; values shifted by {} before the Gini index",
                -min
            ));
            for x in &mut column {
                *x -= min;
            }
        }
        let g = gini(&column).unwrap_or(0.0);
        let mu = mean(&column).unwrap_or(0.0);
        let sd = population_sd(&column).unwrap_or(0.0);
        out.inequality.push(InequalityStat {
            benchmark: b,
            gini: g,
            team_mean: mu,
            team_sd: sd,
        });
        if g < g_star {
            continue;
        }
        // a non-negative vector with positive Gini cannot be constant
        debug_assert!(sd > 0.0, "{b}: gini {g} with zero spread");
        if sd <= 0.0 {
            continue;
        }
        let refs: Vec<MetricId> = base
            .basis
            .get(&b)
            .map(|basis| basis.effective_weights.keys().copied().collect())
            .unwrap_or_default();
        for (s, &x) in roster.iter().zip(&column) {
            let z = (x - mu) / sd;
            let scenario = if z >= d {
                Scenario::A
            } else if z <= -d {
                Scenario::B
            } else {
                continue;
            };
            out.markers.push(ConflictMarker {
                id: ConflictMarker::ref_for(b, scenario, s),
                dimension: b.dimension(),
                benchmark: b,
                scenario,
                student: s.clone(),
                value: x,
                gini: g,
                team_mean: mu,
                team_sd: sd,
                deviation_sd: z,
                implication_text: b.implication(scenario).to_string(),
                evidence_refs: refs.clone(),
            });
        }
    }
    out.markers.sort_by(|a, b| {
        (a.dimension, a.benchmark, a.scenario, &a.student).cmp(&(b.dimension, b.benchmark, b.scenario, &b.student))
    });
    out
}
