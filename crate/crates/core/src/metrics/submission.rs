use crate::evidence::{ArtifactKind, EvidenceBundle};

use super::{text_readability, MediaWeights, MetricId, MetricTable, MetricValue};

/// Commit count, net code lines, word and character counts, commit
/// interval, weighted skew, prose readability and media workload.
pub fn submission_metrics(bundle: &EvidenceBundle, media: &MediaWeights) -> MetricTable {
    let window = bundle.project_window;
    let mut table = MetricTable::new(window);
    for s in bundle.student_ids() {
        let mut commits: Vec<_> = bundle
            .commits
            .iter()
            .filter(|c| c.author.as_ref() == Some(&s))
            .collect();
        commits.sort_by_key(|c| c.timestamp);
        let n = commits.len() as u64;

        table.insert(MetricValue::new(MetricId::CommitCount, &s, n as f64, n));
        let net: u64 = commits.iter().map(|c| c.net_lines()).sum();
        table.insert(MetricValue::new(MetricId::NetCodeLines, &s, net as f64, n));

        let interval = if commits.len() < 2 {
            window.duration_hours()
        } else {
            let gaps: f64 = commits
                .windows(2)
                .map(|w| w[1].timestamp.hours_since(&w[0].timestamp))
                .sum();
            gaps / (commits.len() - 1) as f64
        };
        table.insert(MetricValue::new(
            MetricId::CommitInterval,
            &s,
            interval,
            n.saturating_sub(1),
        ));

        let points: Vec<(f64, f64)> = commits
            .iter()
            .map(|c| (window.fraction(&c.timestamp), c.churn() as f64))
            .collect();
        table.insert(MetricValue::new(MetricId::WeightedSkew, &s, weighted_skew(&points), n));

        let spans: Vec<_> = bundle
            .text_artifacts
            .iter()
            .filter_map(|t| t.span_of(&s).map(|span| (t, span)))
            .collect();
        let words: u64 = spans.iter().map(|(_, sp)| sp.word_count).sum();
        let chars: u64 = spans.iter().map(|(_, sp)| sp.char_count).sum();
        let authored = spans.len() as u64;
        table.insert(MetricValue::new(MetricId::WordCount, &s, words as f64, authored));
        table.insert(MetricValue::new(MetricId::CharCount, &s, chars as f64, authored));

        // readability of the prose this student wrote, weighted by their words in it
        let (mut weighted, mut weight, mut docs) = (0.0, 0.0, 0u64);
        for (t, sp) in &spans {
            if t.kind != ArtifactKind::Prose || sp.word_count == 0 {
                continue;
            }
            let r = text_readability(&t.body);
            if r.words == 0 {
                continue;
            }
            weighted += r.score * sp.word_count as f64;
            weight += sp.word_count as f64;
            docs += 1;
        }
        let complexity = if weight > 0.0 { weighted / weight } else { 0.0 };
        table.insert(MetricValue::new(MetricId::TextComplexity, &s, complexity, docs));

        let own_media: Vec<_> = bundle
            .media_artifacts
            .iter()
            .filter(|m| m.author == s)
            .collect();
        let workload: f64 = own_media
            .iter()
            .map(|m| media.score(m.kind, m.duration_seconds, m.page_count))
            .sum();
        table.insert(MetricValue::new(
            MetricId::MediaWorkload,
            &s,
            workload,
            own_media.len() as u64,
        ));
    }
    table
}

/// Third standardised moment of `(position, weight)` points. Zero weights
/// everywhere fall back to equal weights. Fewer than 3 points or (near)
/// zero variance gives 0.
pub fn weighted_skew(points: &[(f64, f64)]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let total: f64 = points.iter().map(|p| p.1.max(0.0)).sum();
    let weight = |w: f64| if total > 0.0 { w.max(0.0) / total } else { 1.0 / points.len() as f64 };
    let mu: f64 = points.iter().map(|&(x, w)| weight(w) * x).sum();
    let var: f64 = points.iter().map(|&(x, w)| weight(w) * (x - mu).powi(2)).sum();
    if var < 1e-12 {
        return 0.0;
    }
    let m3: f64 = points.iter().map(|&(x, w)| weight(w) * (x - mu).powi(3)).sum();
    m3 / var.powf(1.5)
}
