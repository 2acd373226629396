use std::collections::BTreeMap;

use super::*;
use crate::conflict::detect_markers;
use crate::evidence::Timestamp;
use crate::evidence::Window;
use crate::framework::Benchmark;
use crate::measures::aggregate_objective;
use crate::provider::mock::MockProvider;
use crate::provider::Transcript;

struct Fixture {
    roster: Vec<StudentId>,
    names: BTreeMap<StudentId, String>,
    metrics: MetricTable,
    base: BaseMeasures,
    objective: ObjectiveMeasures,
    markers: Vec<ConflictMarker>,
    config: WeightConfig,
}

fn fixture(quantity: &[f64]) -> Fixture {
    let roster: Vec<StudentId> = (1..=quantity.len()).map(|i| StudentId::new(format!("s{i}"))).collect();
    let names = roster.iter().map(|s| (s.clone(), format!("Student {s}"))).collect();
    let mut base = BaseMeasures::default();
    for (s, q) in roster.iter().zip(quantity) {
        base.values.insert(
            s.clone(),
            Benchmark::ALL.into_iter().map(|b| (b, if b == Benchmark::Quantity { *q } else { 1.0 })).collect(),
        );
    }
    let config = WeightConfig::default();
    let objective = aggregate_objective(&base, &roster, &config);
    let markers = detect_markers(&base, &roster, &config).markers;
    let window = Window {
        start: Timestamp::parse("2024-01-01T00:00:00Z").unwrap(),
        end: Timestamp::parse("2024-02-01T00:00:00Z").unwrap(),
    };
    Fixture {
        roster,
        names,
        metrics: MetricTable::new(window),
        base,
        objective,
        markers,
        config,
    }
}

impl Fixture {
    fn view(&self) -> RunView<'_> {
        RunView {
            roster: &self.roster,
            display_names: &self.names,
            metrics: &self.metrics,
            base: &self.base,
            objective: &self.objective,
            markers: &self.markers,
            adjustments: &[],
            pa_notes: &[],
            config: &self.config,
        }
    }
}

#[test]
fn local_prompt_is_deterministic_and_states_silence() {
    let f = fixture(&[0.0, 1.5, 1.5]);
    let a = build_local_prompt(Dimension::Contribution, &f.view());
    let b = build_local_prompt(Dimension::Contribution, &f.view());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.user_text().contains("marker:quantity:B:s1"));
    assert!(a.user_text().contains("Social loafing"));
    let quiet = build_local_prompt(Dimension::Interaction, &f.view());
    assert!(quiet.user_text().contains("No markers fired in this dimension."));
}

#[test]
fn honest_judgment_keeps_every_claim() {
    let f = fixture(&[0.0, 1.5, 1.5]);
    assert_eq!(f.markers.len(), 1);
    let transcript = Transcript::in_memory();
    let mock = MockProvider::new(1);
    let report = run_advisor(&f.view(), &Session::new(&mock, &transcript));
    assert_eq!(report.status, AdvisoryStatus::Complete);
    let j = report.judgment.unwrap();
    assert!(j.validation_log.iter().all(|e| e.status == ClaimStatus::Supported));
    assert_eq!(j.flagged_conflicts, vec!["marker:quantity:B:s1".to_string()]);
    assert!(j.narratives[&f.roster[0]].contains("Social loafing"));
    assert_eq!(j.disclaimer, DISCLAIMER);
    assert_eq!(report.local_summaries[0].citations, vec!["marker:quantity:B:s1".to_string()]);
    // three local summaries, one global judgment, one cross-examination
    assert_eq!(transcript.len(), 5);
}

#[test]
fn fabricated_claims_are_removed_and_logged() {
    let f = fixture(&[0.0, 1.5, 1.5]);
    let transcript = Transcript::in_memory();
    let mock = MockProvider::new(1).adversarial();
    let report = run_advisor(&f.view(), &Session::new(&mock, &transcript));
    let j = report.judgment.unwrap();
    let intruder = j
        .validation_log
        .iter()
        .find(|e| e.claim.subject == "intruder")
        .unwrap();
    assert_eq!(intruder.status, ClaimStatus::Removed);
    assert!(intruder.supporting_datum.is_none());
    let misquoted = j
        .validation_log
        .iter()
        .find(|e| e.claim.predicate == "scored")
        .unwrap();
    assert_eq!(misquoted.status, ClaimStatus::Removed);
    let prose = serde_json::to_string(&j.narratives).unwrap();
    assert!(!prose.contains("intruder"));
    assert!(!prose.contains("objective measure"));
}

#[test]
fn validator_outage_withholds_judgment() {
    let f = fixture(&[0.0, 1.5, 1.5]);
    let transcript = Transcript::in_memory();
    let mock = MockProvider::new(1).failing(Purpose::CrossExamine);
    let report = run_advisor(&f.view(), &Session::new(&mock, &transcript));
    assert_eq!(report.status, AdvisoryStatus::Withheld);
    assert!(report.judgment.is_none());
    assert_eq!(report.disclaimer, DISCLAIMER);
}

#[test]
fn malformed_validator_also_withholds() {
    let f = fixture(&[1.0, 1.0, 1.0]);
    let transcript = Transcript::in_memory();
    let mock = MockProvider::new(1).malformed(Purpose::CrossExamine);
    let report = run_advisor(&f.view(), &Session::new(&mock, &transcript));
    assert_eq!(report.status, AdvisoryStatus::Withheld);
}

#[test]
fn global_outage_leaves_judgment_unavailable() {
    let f = fixture(&[0.0, 1.5, 1.5]);
    let transcript = Transcript::in_memory();
    let mock = MockProvider::new(1).failing(Purpose::GlobalJudgment);
    let report = run_advisor(&f.view(), &Session::new(&mock, &transcript));
    assert_eq!(report.status, AdvisoryStatus::Unavailable);
    assert!(report.judgment.is_none());
    assert_eq!(report.local_summaries.len(), 3);
}

#[test]
fn failed_local_summary_becomes_stub() {
    let f = fixture(&[0.0, 1.5, 1.5]);
    let transcript = Transcript::in_memory();
    let mock = MockProvider::new(1).failing(Purpose::LocalSummary);
    let report = run_advisor(&f.view(), &Session::new(&mock, &transcript));
    assert!(report.local_summaries.iter().all(|l| !l.available));
    assert_eq!(report.status, AdvisoryStatus::Complete);
}

#[test]
fn quiet_team_states_no_signals() {
    let f = fixture(&[1.0, 1.0, 1.0]);
    let transcript = Transcript::in_memory();
    let mock = MockProvider::new(1);
    let report = run_advisor(&f.view(), &Session::new(&mock, &transcript));
    let j = report.judgment.unwrap();
    assert_eq!(j.summary, NO_SIGNALS);
    assert!(j.validation_log.is_empty());
}

#[test]
fn referential_rules() {
    let f = fixture(&[0.0, 1.5, 1.5]);
    let view = f.view();
    let index = DatumIndex::build(&view);
    let claim = |subject: &str, predicate: &str, datum: &str, value: Option<f64>| Claim {
        subject: subject.into(),
        predicate: predicate.into(),
        datum_ref: datum.into(),
        value,
    };
    let z = f.markers[0].deviation_sd;
    let ok = check_claim(&claim("s1", "flagged", "marker:quantity:B:s1", Some(z)), &f.roster, &index);
    assert_eq!(ok.status, ClaimStatus::Supported);
    let rounded = (z * 100.0).round() / 100.0;
    let ok = check_claim(&claim("s1", "flagged", "marker:quantity:B:s1", Some(rounded)), &f.roster, &index);
    assert_eq!(ok.status, ClaimStatus::Supported);
    for bad in [
        claim("s9", "flagged", "marker:quantity:B:s1", None),
        claim("s2", "flagged", "marker:quantity:B:s1", None),
        claim("s1", "flagged", "marker:quality:A:s1", None),
        claim("s1", "scored", "marker:quantity:B:s1", None),
        claim("s1", "flagged", "marker:quantity:B:s1", Some(z + 0.01)),
    ] {
        assert_eq!(check_claim(&bad, &f.roster, &index).status, ClaimStatus::Removed, "{bad:?}");
    }
}

#[test]
fn grade_talk_is_filtered_from_steps() {
    assert!(mentions_grade("Give s1 a grade of 55"));
    assert!(!mentions_grade("Review the quantity evidence for s1."));
}
