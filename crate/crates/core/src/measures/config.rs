//! Analysis configuration: aggregation masks, marker thresholds and the
//! context/peer-assessment knobs. Overrides are merged per mask over the
//! defaults and then validated as a whole.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::framework::{Benchmark, Dimension};
use crate::metrics::{MediaWeights, MetricId};

/// Tolerance on the sum of a mask's weights.
pub const MASK_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubjectiveMode {
    /// Peer assessment is bias-corrected and folded into base measures.
    #[default]
    Measures,
    /// Peer assessment only reaches the advisor.
    AdvisorOnly,
    /// Peer assessment is ignored.
    Off,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    #[default]
    Off,
    Linear,
    SquareRoot,
    ConstantSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub benchmark_masks: BTreeMap<Benchmark, BTreeMap<MetricId, f64>>,
    pub dimension_masks: BTreeMap<Dimension, BTreeMap<Benchmark, f64>>,
    /// g*: minimum Gini for a benchmark to fire markers.
    pub gini_threshold: f64,
    /// d: distance from the team mean, in population SD units.
    pub deviation_threshold: f64,
    pub theta_match: f64,
    pub media_weights: MediaWeights,
    /// δ: adjustment factors stay within `[1 - δ, 1 + δ]`.
    pub adjustment_clamp: f64,
    pub absence_weight: f64,
    pub past_grade_weight: f64,
    /// Weight of the peer-assessment column appended to a benchmark.
    pub pa_weight: f64,
    pub subjective_mode: SubjectiveMode,
    pub context_adjust: bool,
    pub grade_projection: ProjectionMode,
    pub seed: u64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        use MetricId::*;
        let equal = |ids: &[MetricId]| -> BTreeMap<MetricId, f64> {
            let w = 1.0 / ids.len() as f64;
            ids.iter().map(|m| (*m, w)).collect()
        };
        let benchmark_masks = BTreeMap::from([
            (
                Benchmark::Quantity,
                equal(&[CommitCount, NetCodeLines, WordCount, CharCount, MediaWorkload]),
            ),
            (Benchmark::Quality, equal(&[CodeStandard, TextComplexity, QualityGrade])),
            (Benchmark::Relevance, equal(&[Relevance, TaskFidelity])),
            (Benchmark::Tone, equal(&[Sentiment])),
            (
                Benchmark::Effectiveness,
                equal(&[MessageLength, MessageReadability, ResponseLatency]),
            ),
            (
                Benchmark::Presence,
                equal(&[SendCount, SendInterval, LongestSilence, Attendance, MeetingTime]),
            ),
            (Benchmark::Adherence, equal(&[DeadlineAdherence, AssignmentFidelity])),
            (
                Benchmark::Organisation,
                equal(&[WeightedSkew, AttendanceSkew, CommitMessageReadability]),
            ),
            (Benchmark::Support, equal(&[TaskDiversity, AdminShare])),
        ]);
        let dimension_masks = Dimension::ALL
            .into_iter()
            .map(|d| {
                let third = 1.0 / 3.0;
                (d, d.benchmarks().into_iter().map(|b| (b, third)).collect())
            })
            .collect();
        Self {
            benchmark_masks,
            dimension_masks,
            gini_threshold: 0.3,
            deviation_threshold: 1.0,
            theta_match: 0.75,
            media_weights: MediaWeights::default(),
            adjustment_clamp: 0.15,
            absence_weight: 0.5,
            past_grade_weight: 0.5,
            pa_weight: 0.25,
            subjective_mode: SubjectiveMode::Measures,
            context_adjust: true,
            grade_projection: ProjectionMode::Off,
            seed: 0,
        }
    }
}

/// A configuration problem located by a dotted path such as
/// `benchmark_masks.quantity`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            issues: vec![ConfigIssue {
                path: path.into(),
                message: message.into(),
            }],
        }
    }
}

impl std::error::Error for ConfigError {}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        f.write_str(&lines.join("; "))
    }
}

/// Partial configuration as written in `config.json` or sent to the
/// service. Keys stay strings so diagnostics can name what was written.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark_masks: Option<BTreeMap<String, BTreeMap<String, f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_masks: Option<BTreeMap<String, BTreeMap<String, f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gini_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_match: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_weights: Option<MediaWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjustment_clamp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absence_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub past_grade_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pa_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subjective_mode: Option<SubjectiveMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_adjust: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade_projection: Option<ProjectionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::single("$", e.to_string()))
    }

    /// Overrides layered on top of `self`; masks merge per benchmark or
    /// dimension, scalars replace.
    pub fn then(mut self, other: &ConfigOverrides) -> ConfigOverrides {
        fn merge(
            a: &mut Option<BTreeMap<String, BTreeMap<String, f64>>>,
            b: &Option<BTreeMap<String, BTreeMap<String, f64>>>,
        ) {
            if let Some(b) = b {
                let target = a.get_or_insert_with(BTreeMap::new);
                for (k, v) in b {
                    target.insert(k.clone(), v.clone());
                }
            }
        }
        merge(&mut self.benchmark_masks, &other.benchmark_masks);
        merge(&mut self.dimension_masks, &other.dimension_masks);
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            gini_threshold,
            deviation_threshold,
            theta_match,
            media_weights,
            adjustment_clamp,
            absence_weight,
            past_grade_weight,
            pa_weight,
            subjective_mode,
            context_adjust,
            grade_projection,
            seed
        );
        self
    }
}

impl WeightConfig {
    /// Defaults with `overrides` applied, then validated.
    pub fn from_overrides(overrides: &ConfigOverrides) -> Result<Self, ConfigError> {
        let mut cfg = WeightConfig::default();
        let mut issues = Vec::new();

        for (name, mask) in overrides.benchmark_masks.iter().flatten() {
            let path = format!("benchmark_masks.{name}");
            let Ok(b) = name.parse::<Benchmark>() else {
                issues.push(ConfigIssue {
                    path,
                    message: "unknown benchmark".into(),
                });
                continue;
            };
            let mut parsed = BTreeMap::new();
            for (metric, w) in mask {
                match metric.parse::<MetricId>() {
                    Ok(m) => {
                        parsed.insert(m, *w);
                    }
                    Err(_) => issues.push(ConfigIssue {
                        path: format!("{path}.{metric}"),
                        message: "unknown metric id".into(),
                    }),
                }
            }
            cfg.benchmark_masks.insert(b, parsed);
        }
        for (name, mask) in overrides.dimension_masks.iter().flatten() {
            let path = format!("dimension_masks.{name}");
            let Ok(d) = name.parse::<Dimension>() else {
                issues.push(ConfigIssue {
                    path,
                    message: "unknown dimension".into(),
                });
                continue;
            };
            let mut parsed = BTreeMap::new();
            for (bench, w) in mask {
                match bench.parse::<Benchmark>() {
                    Ok(b) => {
                        parsed.insert(b, *w);
                    }
                    Err(_) => issues.push(ConfigIssue {
                        path: format!("{path}.{bench}"),
                        message: "unknown benchmark".into(),
                    }),
                }
            }
            cfg.dimension_masks.insert(d, parsed);
        }

        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &overrides.$f { cfg.$f = v.clone(); } )* };
        }
        set!(
            gini_threshold,
            deviation_threshold,
            theta_match,
            media_weights,
            adjustment_clamp,
            absence_weight,
            past_grade_weight,
            pa_weight,
            subjective_mode,
            context_adjust,
            grade_projection,
            seed
        );

        if let Err(e) = cfg.validate() {
            issues.extend(e.issues);
        }
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError { issues })
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Self::from_overrides(&ConfigOverrides::from_json(text)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        for b in Benchmark::ALL {
            let path = format!("benchmark_masks.{b}");
            match self.benchmark_masks.get(&b) {
                None => issues.push(ConfigIssue {
                    path,
                    message: "mask missing".into(),
                }),
                Some(mask) => check_mask(&path, mask.iter().map(|(k, v)| (k.code(), *v)), &mut issues),
            }
        }
        for d in Dimension::ALL {
            let path = format!("dimension_masks.{d}");
            match self.dimension_masks.get(&d) {
                None => issues.push(ConfigIssue {
                    path,
                    message: "mask missing".into(),
                }),
                Some(mask) => check_mask(
                    &path,
                    mask.iter().map(|(k, v)| (k.as_str().to_string(), *v)),
                    &mut issues,
                ),
            }
        }
        let mut range = |path: &str, v: f64, ok: bool, expect: &str| {
            if !ok || !v.is_finite() {
                issues.push(ConfigIssue {
                    path: path.into(),
                    message: format!("{v} is out of range, expected {expect}"),
                });
            }
        };
        let g = self.gini_threshold;
        range("gini_threshold", g, g > 0.0 && g < 1.0, "a value in (0, 1)");
        let d = self.deviation_threshold;
        range("deviation_threshold", d, d > 0.0, "a value > 0");
        let t = self.theta_match;
        range("theta_match", t, (0.0..=1.0).contains(&t), "a value in [0, 1]");
        let c = self.adjustment_clamp;
        range("adjustment_clamp", c, (0.0..1.0).contains(&c), "a value in [0, 1)");
        let a = self.absence_weight;
        range("absence_weight", a, a >= 0.0, "a value >= 0");
        let p = self.past_grade_weight;
        range("past_grade_weight", p, p >= 0.0, "a value >= 0");
        let w = self.pa_weight;
        range("pa_weight", w, (0.0..1.0).contains(&w), "a value in [0, 1)");
        let m = &self.media_weights;
        for (name, v) in [
            ("image", m.image),
            ("other", m.other),
            ("slides_per_page", m.slides_per_page),
            ("audio_per_minute", m.audio_per_minute),
            ("video_per_minute", m.video_per_minute),
        ] {
            range(&format!("media_weights.{name}"), v, v >= 0.0, "a value >= 0");
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }
}

fn check_mask(path: &str, weights: impl Iterator<Item = (String, f64)>, issues: &mut Vec<ConfigIssue>) {
    let mut sum = 0.0;
    let mut empty = true;
    for (key, w) in weights {
        empty = false;
        if !w.is_finite() || w < 0.0 {
            issues.push(ConfigIssue {
                path: format!("{path}.{key}"),
                message: format!("weight {w} must be finite and non-negative"),
            });
        }
        sum += w;
    }
    if empty {
        issues.push(ConfigIssue {
            path: path.into(),
            message: "mask is empty".into(),
        });
    } else if !((sum - 1.0).abs() <= MASK_SUM_TOLERANCE) {
        issues.push(ConfigIssue {
            path: path.into(),
            message: format!("weights sum to {sum}, expected 1 (tolerance {MASK_SUM_TOLERANCE:e})"),
        });
    }
}
