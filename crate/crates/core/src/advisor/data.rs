use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RunView;
use crate::evidence::StudentId;
use crate::framework::{Benchmark, Dimension, Scenario};
use crate::metrics::MetricId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatumKind {
    Marker {
        benchmark: Benchmark,
        scenario: Scenario,
        implication: String,
    },
    Base {
        benchmark: Benchmark,
    },
    Objective {
        dimension: Dimension,
    },
    Metric {
        metric: MetricId,
    },
    Adjustment,
}

/// One citable value of the run. A marker's value is its deviation in SDs;
/// an adjustment's value is its general factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Datum {
    #[serde(flatten)]
    pub kind: DatumKind,
    pub student: StudentId,
    pub value: f64,
}

/// Every datum the advisor may cite, by ref.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatumIndex {
    data: BTreeMap<String, Datum>,
}

impl DatumIndex {
    pub fn base_ref(b: Benchmark, s: &StudentId) -> String {
        format!("base:{b}:{s}")
    }

    pub fn objective_ref(d: Dimension, s: &StudentId) -> String {
        format!("objective:{}:{s}", d.as_str())
    }

    pub fn metric_ref(m: MetricId, s: &StudentId) -> String {
        format!("metric:{}:{s}", m.code())
    }

    pub fn adjustment_ref(s: &StudentId) -> String {
        format!("adjustment:{s}")
    }

    pub fn build(view: &RunView) -> Self {
        let mut data = BTreeMap::new();
        for m in view.markers {
            data.insert(
                m.id.clone(),
                Datum {
                    kind: DatumKind::Marker {
                        benchmark: m.benchmark,
                        scenario: m.scenario,
                        implication: m.implication_text.clone(),
                    },
                    student: m.student.clone(),
                    value: m.deviation_sd,
                },
            );
        }
        for s in view.roster {
            for b in Benchmark::ALL {
                data.insert(
                    Self::base_ref(b, s),
                    Datum {
                        kind: DatumKind::Base { benchmark: b },
                        student: s.clone(),
                        value: view.base.get(s, b),
                    },
                );
            }
            for d in Dimension::ALL {
                data.insert(
                    Self::objective_ref(d, s),
                    Datum {
                        kind: DatumKind::Objective { dimension: d },
                        student: s.clone(),
                        value: view.objective.get(s, d),
                    },
                );
            }
            if let Some(row) = view.metrics.rows.get(s) {
                for (id, v) in row.iter().filter(|(_, v)| v.available) {
                    data.insert(
                        Self::metric_ref(*id, s),
                        Datum {
                            kind: DatumKind::Metric { metric: *id },
                            student: s.clone(),
                            value: v.value,
                        },
                    );
                }
            }
        }
        for a in view.adjustments {
            data.insert(
                Self::adjustment_ref(&a.student),
                Datum {
                    kind: DatumKind::Adjustment,
                    student: a.student.clone(),
                    value: a.factor,
                },
            );
        }
        Self { data }
    }

    pub fn get(&self, reference: &str) -> Option<&Datum> {
        self.data.get(reference)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}
