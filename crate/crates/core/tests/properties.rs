use equiscope_core::conflict::{detect_markers, gini};
use equiscope_core::context::{adjustment, classify_pa, LabelMap};
use equiscope_core::evidence::{PeerAssessmentItem, StudentId};
use equiscope_core::framework::{Benchmark, Scenario};
use equiscope_core::measures::{autorate, constant_sum_projection, BaseMeasures, WeightConfig};
use equiscope_core::metrics::Orientation;
use proptest::prelude::*;

fn team() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1000.0, 2..=8)
}

fn brute_gini(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    if mu == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mu)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn autorate_has_mean_one(x in team(), lower in any::<bool>()) {
        let o = if lower { Orientation::LowerBetter } else { Orientation::HigherBetter };
        let n = autorate(&x, o);
        prop_assert_eq!(n.len(), x.len());
        prop_assert!((mean(&n) - 1.0).abs() <= 1e-9);
        prop_assert!(n.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn autorate_ignores_scale(x in team(), c in prop::sample::select(vec![0.5, 2.0, 10.0, 1e-3, 7.5])) {
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = autorate(&x, Orientation::HigherBetter);
        let b = autorate(&scaled, Orientation::HigherBetter);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-9, "{p} vs {q}");
        }
    }

    #[test]
    fn raising_one_value_helps_only_that_student(x in team(), i in 0usize..8, bump in 0.1f64..100.0) {
        prop_assume!(x.iter().sum::<f64>() > 0.0);
        let i = i % x.len();
        let mut y = x.clone();
        y[i] += bump;
        let before = autorate(&x, Orientation::HigherBetter);
        let after = autorate(&y, Orientation::HigherBetter);
        prop_assert!(after[i] > before[i]);
        for j in (0..x.len()).filter(|j| *j != i) {
            prop_assert!(after[j] <= before[j] + 1e-12);
        }
    }

    #[test]
    fn gini_matches_pairwise_definition(x in team()) {
        let g = gini(&x).unwrap();
        prop_assert!((g - brute_gini(&x)).abs() <= 1e-9);
        prop_assert!((0.0..1.0).contains(&g));
    }

    #[test]
    fn gini_ignores_scale(x in team(), c in prop::sample::select(vec![0.5, 2.0, 10.0])) {
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        prop_assert!((gini(&x).unwrap() - gini(&scaled).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn constant_sum_conserves_the_pool(x in prop::collection::vec(0.01f64..5.0, 2..=8), grade in 0.0f64..100.0) {
        let p = constant_sum_projection(&x, grade);
        prop_assert!((p.iter().sum::<f64>() - grade * x.len() as f64).abs() <= 1e-6);
    }

    #[test]
    fn adjustment_factors_stay_in_band(absence in 0.0f64..=1.0, ratio in 0.0f64..3.0, delta in 0.0f64..0.5) {
        let config = WeightConfig { adjustment_clamp: delta, ..WeightConfig::default() };
        let f = adjustment(&StudentId::new("s1"), absence, ratio, &config);
        for k in [f.factor, f.presence_factor] {
            prop_assert!(k >= 1.0 - delta - 1e-12 && k <= 1.0 + delta + 1e-12);
        }
    }

    #[test]
    fn bias_correction_keeps_the_grand_mean(
        scores in prop::collection::vec((0usize..4, 0usize..4, 1u8..=5, 0usize..3), 1..40)
    ) {
        let labels = ["quantity", "tone", "support"];
        let items: Vec<PeerAssessmentItem> = scores
            .iter()
            .map(|(r, e, s, l)| PeerAssessmentItem {
                rater_alias: format!("s{r}"),
                rater: Some(StudentId::new(format!("s{r}"))),
                ratee_alias: format!("s{e}"),
                ratee: Some(StudentId::new(format!("s{e}"))),
                category_label: labels[*l].into(),
                score: *s,
                comment: None,
            })
            .collect();
        let pa = classify_pa(&items, &LabelMap::shipped());
        let corrected: Vec<f64> = pa.by_benchmark.values().flatten().map(|r| r.corrected).collect();
        let raw: Vec<f64> = items.iter().map(|i| f64::from(i.score)).collect();
        prop_assert_eq!(corrected.len(), items.len());
        prop_assert!((mean(&corrected) - mean(&raw)).abs() <= 1e-9);
        prop_assert!((pa.grand_mean.unwrap() - mean(&raw)).abs() <= 1e-9);
    }

    #[test]
    fn every_marker_satisfies_its_rule(cols in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 3), 9)) {
        let roster: Vec<StudentId> = (1..=3).map(|i| StudentId::new(format!("s{i}"))).collect();
        let mut base = BaseMeasures::default();
        for (k, s) in roster.iter().enumerate() {
            base.values.insert(s.clone(), Benchmark::ALL.iter().zip(&cols).map(|(b, c)| (*b, c[k])).collect());
        }
        let config = WeightConfig::default();
        let set = detect_markers(&base, &roster, &config);
        for m in &set.markers {
            prop_assert!(m.gini >= config.gini_threshold);
            match m.scenario {
                Scenario::A => prop_assert!(m.deviation_sd >= config.deviation_threshold),
                Scenario::B => prop_assert!(m.deviation_sd <= -config.deviation_threshold),
            }
            let column = base.column(&roster, m.benchmark);
            prop_assert!((gini(&column).unwrap() - m.gini).abs() <= 1e-12);
        }
    }
}

#[test]
fn examples() {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    assert!(close(&autorate(&[90.0, 75.0, 60.0], Orientation::HigherBetter), &[1.2, 1.0, 0.8]));
    assert!(close(&autorate(&[0.0, 0.0, 0.0], Orientation::HigherBetter), &[1.0, 1.0, 1.0]));
    assert!((gini(&[1.0f64, 2.0, 3.0, 4.0]).unwrap() - 0.25).abs() < 1e-12);
}
