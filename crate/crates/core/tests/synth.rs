use std::collections::BTreeSet;

use equiscope_core::conflict::detect_markers;
use equiscope_core::evidence::load_bundle_with_default_identities;
use equiscope_core::measures::{aggregate_base, normalize, WeightConfig};
use equiscope_core::metrics::direct_metrics;
use equiscope_core::metrics::LexiconAnalyzer;
use equiscope_core::synth::*;

fn fired(out: &SynthOutput) -> Vec<ExpectedMarker> {
    let config = WeightConfig::default();
    let roster = out.bundle.student_ids();
    let table = direct_metrics(&out.bundle, &config.media_weights, &LexiconAnalyzer::shipped());
    let base = aggregate_base(&normalize(&table, &roster), &roster, &config);
    let mut got: Vec<ExpectedMarker> = detect_markers(&base, &roster, &config)
        .markers
        .into_iter()
        .map(|m| ExpectedMarker {
            benchmark: m.benchmark,
            scenario: m.scenario,
            student: m.student,
        })
        .collect();
    got.sort();
    got
}

#[test]
fn balanced_team_is_quiet() {
    for n in 2..=5 {
        for seed in 0..5 {
            let out = generate(&team_with(Archetype::Balanced, n - 1), seed, default_window()).unwrap();
            assert!(out.labels.expected_markers.is_empty());
            assert!(fired(&out).is_empty(), "n={n} seed={seed}: {:?}", fired(&out));
        }
    }
}

#[test]
fn planted_archetypes_fire_their_labels() {
    for archetype in [
        Archetype::Loafer,
        Archetype::Hog,
        Archetype::Ghost,
        Archetype::PoorCommunicator,
        Archetype::CliqueMember,
        Archetype::LateStarter,
    ] {
        for seed in 1..=10 {
            let out = generate(&team_with(archetype, 2), seed, default_window()).unwrap();
            assert_eq!(fired(&out), out.labels.expected_markers, "{archetype:?} seed {seed}");
        }
    }
}

#[test]
fn loafer_label_matches_at_partial_intensity() {
    let mut team = team_with(Archetype::Loafer, 2);
    for intensity in [0.2, 0.5, 0.97, 1.0] {
        team[0].intensity = intensity;
        let out = generate(&team, 3, default_window()).unwrap();
        assert_eq!(fired(&out), out.labels.expected_markers, "intensity {intensity}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let team = team_with(Archetype::Hog, 3);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_synth(&generate(&team, 42, default_window()).unwrap(), a.path()).unwrap();
    write_synth(&generate(&team, 42, default_window()).unwrap(), b.path()).unwrap();
    let files = |root: &std::path::Path| -> BTreeSet<_> {
        walk(root).into_iter().map(|p| p.strip_prefix(root).unwrap().to_path_buf()).collect()
    };
    assert_eq!(files(a.path()), files(b.path()));
    for rel in files(a.path()) {
        assert_eq!(std::fs::read(a.path().join(&rel)).unwrap(), std::fs::read(b.path().join(&rel)).unwrap(), "{rel:?}");
    }
    let other = generate(&team, 43, default_window()).unwrap();
    assert_ne!(other.bundle, generate(&team, 42, default_window()).unwrap().bundle);
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn written_bundle_loads_cleanly_and_equal() {
    for archetype in [Archetype::Ghost, Archetype::CliqueMember, Archetype::LateStarter] {
        let out = generate(&team_with(archetype, 3), 7, default_window()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_synth(&out, dir.path()).unwrap();
        let report = load_bundle_with_default_identities(dir.path()).unwrap();
        assert!(report.is_clean(), "{:?}", report.issues);
        assert_eq!(report.bundle, out.bundle, "{archetype:?}");
        let labels: Labels =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("labels.json")).unwrap()).unwrap();
        assert_eq!(labels, out.labels);
    }
}

