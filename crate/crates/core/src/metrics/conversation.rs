use std::collections::{BTreeMap, HashMap};

use crate::evidence::{EvidenceBundle, StudentId, Timestamp};
use crate::num::normalized_entropy;

use super::{sentiment_score, text_readability, MetricId, MetricTable, MetricValue, SentimentAnalyzer};

/// Send volume, message length, send/receive ratio, response latency,
/// send interval, longest silence, message readability, interaction
/// diversity and sentiment.
pub fn conversation_metrics(bundle: &EvidenceBundle, analyzer: &dyn SentimentAnalyzer) -> MetricTable {
    let window = bundle.project_window;
    let duration = window.duration_hours();
    let roster = bundle.student_ids();
    let by_id: HashMap<&str, _> = bundle
        .chat_messages
        .iter()
        .map(|m| (m.id.as_str(), m))
        .collect();

    let mut table = MetricTable::new(window);
    for s in &roster {
        let chats: Vec<_> = bundle
            .chat_messages
            .iter()
            .filter(|m| m.sender.as_ref() == Some(s))
            .collect();
        let emails: Vec<_> = bundle
            .emails
            .iter()
            .filter(|e| e.sender.as_ref() == Some(s))
            .collect();
        let texts: Vec<&str> = chats
            .iter()
            .map(|m| m.text.as_str())
            .chain(emails.iter().map(|e| e.body.as_str()))
            .collect();
        let sends = texts.len() as u64;

        table.insert(MetricValue::new(MetricId::SendCount, s, sends as f64, sends));

        let chars: usize = texts.iter().map(|t| t.chars().count()).sum();
        let length = if sends == 0 { 0.0 } else { chars as f64 / sends as f64 };
        table.insert(MetricValue::new(MetricId::MessageLength, s, length, sends));

        let replies_received = bundle
            .chat_messages
            .iter()
            .filter(|m| m.sender.as_ref() != Some(s))
            .filter(|m| {
                m.reply_to
                    .as_deref()
                    .and_then(|r| by_id.get(r))
                    .is_some_and(|target| target.sender.as_ref() == Some(s))
            })
            .count();
        let mentions_received = bundle
            .chat_messages
            .iter()
            .filter(|m| m.sender.as_ref() != Some(s) && m.mentioned.contains(s))
            .count();
        let emails_received = bundle
            .emails
            .iter()
            .filter(|e| e.sender.as_ref() != Some(s) && e.recipients.contains(s))
            .count();
        let received = (replies_received + mentions_received + emails_received) as u64;
        table.insert(MetricValue::new(
            MetricId::SendReceiveRatio,
            s,
            sends as f64 / (received as f64 + 1.0),
            sends + received,
        ));

        // latency only for explicit replies to someone else's message
        let latencies: Vec<f64> = chats
            .iter()
            .filter_map(|m| {
                let target = by_id.get(m.reply_to.as_deref()?)?;
                if target.sender.as_ref() == Some(s) {
                    return None;
                }
                Some(m.timestamp.minutes_since(&target.timestamp).max(0.0))
            })
            .collect();
        let latency = mean_or_zero(&latencies);
        table.insert(MetricValue::new(
            MetricId::ResponseLatency,
            s,
            latency,
            latencies.len() as u64,
        ));

        let mut send_times: Vec<Timestamp> = chats
            .iter()
            .map(|m| m.timestamp)
            .chain(emails.iter().map(|e| e.timestamp))
            .collect();
        send_times.sort();
        let gaps = consecutive_gaps(&send_times);
        let interval = if gaps.is_empty() { duration } else { mean_or_zero(&gaps) };
        table.insert(MetricValue::new(MetricId::SendInterval, s, interval, gaps.len() as u64));

        let mut activity = send_times.clone();
        activity.extend(
            bundle
                .commits
                .iter()
                .filter(|c| c.author.as_ref() == Some(s))
                .map(|c| c.timestamp),
        );
        activity.extend(
            bundle
                .meetings
                .iter()
                .filter(|m| m.attendees.contains(s))
                .map(|m| m.start),
        );
        activity.sort();
        let activity_gaps = consecutive_gaps(&activity);
        let silence = activity_gaps
            .iter()
            .copied()
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))))
            .unwrap_or(duration);
        table.insert(MetricValue::new(
            MetricId::LongestSilence,
            s,
            silence,
            activity_gaps.len() as u64,
        ));

        let r = text_readability(&texts.join("\n"));
        table.insert(MetricValue::new(MetricId::MessageReadability, s, r.score, r.support()));

        let mut counterparties: BTreeMap<&StudentId, f64> = BTreeMap::new();
        for m in &chats {
            if let Some(target) = m.reply_to.as_deref().and_then(|r| by_id.get(r)) {
                if let Some(t) = target.sender.as_ref().filter(|t| *t != s) {
                    *counterparties.entry(t).or_default() += 1.0;
                }
            }
            for t in m.mentioned.iter().filter(|t| *t != s) {
                *counterparties.entry(t).or_default() += 1.0;
            }
        }
        let counts: Vec<f64> = counterparties.values().copied().collect();
        let diversity = normalized_entropy(&counts, roster.len().saturating_sub(1));
        let contacts: f64 = counts.iter().sum();
        table.insert(MetricValue::new(
            MetricId::InteractionDiversity,
            s,
            diversity,
            contacts as u64,
        ));

        let (sentiment, valence) = sentiment_score(analyzer, texts.iter().copied());
        let mut v = MetricValue::new(MetricId::Sentiment, s, sentiment, valence.matched);
        // with messages but no lexicon hits the tone is neutral, not unknown
        v.available = sends > 0;
        table.insert(v);
    }
    table
}

fn consecutive_gaps(sorted: &[Timestamp]) -> Vec<f64> {
    sorted.windows(2).map(|w| w[1].hours_since(&w[0])).collect()
}

fn mean_or_zero(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
