use crate::evidence::EvidenceBundle;

use super::{MetricId, MetricTable, MetricValue};

/// Attendance fraction, attendance skew (first half of meetings by date
/// minus second half) and total minutes attended.
pub fn coordination_metrics(bundle: &EvidenceBundle) -> MetricTable {
    let mut table = MetricTable::new(bundle.project_window);
    let mut meetings: Vec<_> = bundle.meetings.iter().collect();
    meetings.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.id.cmp(&b.id)));
    let held = meetings.len();
    let half = held / 2;

    for s in bundle.student_ids() {
        let attended: Vec<bool> = meetings.iter().map(|m| m.attendees.contains(&s)).collect();
        let count = attended.iter().filter(|a| **a).count();
        let support = held as u64;

        let fraction = if held == 0 { 0.0 } else { count as f64 / held as f64 };
        table.insert(MetricValue::new(MetricId::Attendance, &s, fraction, support));

        let rate = |xs: &[bool]| xs.iter().filter(|a| **a).count() as f64 / xs.len() as f64;
        let (first, second) = attended.split_at(half);
        let skew = if first.is_empty() || second.is_empty() {
            0.0
        } else {
            rate(first) - rate(second)
        };
        table.insert(MetricValue::new(MetricId::AttendanceSkew, &s, skew, support));

        let minutes: f64 = meetings
            .iter()
            .zip(&attended)
            .filter(|(_, a)| **a)
            .map(|(m, _)| m.duration_minutes)
            .sum();
        table.insert(MetricValue::new(MetricId::MeetingTime, &s, minutes, support));
    }
    table
}
