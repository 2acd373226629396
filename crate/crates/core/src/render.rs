//! Human-readable renderings of a report body.

use std::fmt::Write;

use crate::advisor::{AdvisoryStatus, ClaimStatus};
use crate::framework::{Benchmark, Dimension};
use crate::pipeline::ReportBody;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?}; expected text or markdown")),
        }
    }
}

struct Table {
    head: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Markdown => {
                let _ = writeln!(out, "| {} |", self.head.join(" | "));
                let _ = writeln!(out, "|{}", "---|".repeat(self.head.len()));
                for r in &self.rows {
                    let _ = writeln!(out, "| {} |", r.join(" | "));
                }
            }
            Format::Text => {
                let widths: Vec<usize> = (0..self.head.len())
                    .map(|i| {
                        self.rows
                            .iter()
                            .map(|r| r[i].chars().count())
                            .chain([self.head[i].chars().count()])
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let line = |cells: &[String]| {
                    cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:<w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                        .trim_end()
                        .to_string()
                };
                let _ = writeln!(out, "{}", line(&self.head));
                for r in &self.rows {
                    let _ = writeln!(out, "{}", line(r));
                }
            }
        }
        out
    }
}

fn heading(out: &mut String, format: Format, level: usize, title: &str) {
    // no blank line before the first heading
    let gap = if out.is_empty() { "" } else { "\n" };
    match format {
        Format::Markdown => {
            let _ = writeln!(out, "{gap}{} {title}\n", "#".repeat(level));
        }
        Format::Text => {
            let rule = if level == 1 { '=' } else { '-' };
            let _ = writeln!(out, "{gap}{title}\n{}", rule.to_string().repeat(title.chars().count()));
        }
    }
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

pub fn render(body: &ReportBody, format: Format) -> String {
    let a = &body.analysis;
    let h = &body.header;
    let mut out = String::new();
    heading(&mut out, format, 1, &format!("Contribution report: {}", h.project_id));
    let _ = writeln!(out, "Schema {}, engine {}, templates {}", h.schema_version, h.engine_version, h.template_version);
    let _ = writeln!(out, "Bundle digest: {}", h.bundle_digest);
    let _ = writeln!(out, "Provider: {}", h.provider_id.as_deref().unwrap_or("none"));
    let _ = writeln!(
        out,
        "Thresholds: g* = {}, d = {} SD",
        body.config.gini_threshold, body.config.deviation_threshold
    );
    let _ = writeln!(out, "\n{}", h.scenario_rule);

    heading(&mut out, format, 2, "Objective measures");
    let mut head = vec!["student".to_string()];
    head.extend(Dimension::ALL.iter().map(|d| d.title().to_string()));
    let rows = a
        .roster
        .iter()
        .map(|s| {
            let mut r = vec![format!("{} ({})", s.display_name, s.id)];
            r.extend(Dimension::ALL.iter().map(|d| {
                let adj = a.adjusted_objective.get(&s.id, *d);
                let raw = a.objective.get(&s.id, *d);
                if adj == raw {
                    f3(adj)
                } else {
                    format!("{} (unadjusted {})", f3(adj), f3(raw))
                }
            }));
            r
        })
        .collect();
    out.push_str(&Table { head, rows }.render(format));

    heading(&mut out, format, 2, "Base measures");
    let mut head = vec!["benchmark".to_string()];
    head.extend(a.roster.iter().map(|s| s.id.to_string()));
    head.push("gini".into());
    let rows = Benchmark::ALL
        .iter()
        .map(|b| {
            let mut r = vec![b.title().to_string()];
            r.extend(a.roster.iter().map(|s| f3(a.adjusted_base.get(&s.id, *b))));
            let g = a.inequality.iter().find(|i| i.benchmark == *b).map_or(0.0, |i| i.gini);
            r.push(f3(g));
            r
        })
        .collect();
    out.push_str(&Table { head, rows }.render(format));

    heading(&mut out, format, 2, "Conflict markers");
    if a.conflict_markers.is_empty() {
        let _ = writeln!(out, "No marker fired.");
    } else {
        for m in &a.conflict_markers {
            let _ = writeln!(
                out,
                "- {} {} scenario {} for {}: value {}, gini {}, {:+.2} SD. {}",
                m.benchmark.dimension().title(),
                m.benchmark.title(),
                m.scenario,
                m.student,
                f3(m.value),
                f3(m.gini),
                m.deviation_sd,
                m.implication_text
            );
        }
    }
    let before: Vec<&str> = a.conflict_markers_unadjusted.iter().map(|m| m.id.as_str()).collect();
    let after: Vec<&str> = a.conflict_markers.iter().map(|m| m.id.as_str()).collect();
    if before != after {
        let _ = writeln!(out, "\nBefore contextual adjustment: {}", before.join(", "));
    }

    if !a.adjustments.is_empty() {
        heading(&mut out, format, 2, "Contextual adjustments");
        for f in &a.adjustments {
            let _ = writeln!(
                out,
                "- {}: factor {}, presence factor {} (absence {}, past-grade ratio {})",
                f.student,
                f3(f.factor),
                f3(f.presence_factor),
                f3(f.absence_fraction),
                f3(f.past_grade_ratio)
            );
        }
    }

    if let Some(p) = &a.grade_projection {
        heading(&mut out, format, 2, "Grade projection (advisory)");
        for (s, g) in &p.per_student {
            let _ = writeln!(out, "- {s}: {g:.2}");
        }
    }

    heading(&mut out, format, 2, "Advisory");
    let adv = &a.advisory;
    let status = match adv.status {
        AdvisoryStatus::Complete => "complete",
        AdvisoryStatus::Unavailable => "unavailable",
        AdvisoryStatus::Withheld => "withheld",
        AdvisoryStatus::Skipped => "skipped",
    };
    let _ = writeln!(out, "Status: {status}");
    if let Some(r) = &adv.reason {
        let _ = writeln!(out, "Reason: {r}");
    }
    if let Some(j) = &adv.judgment {
        let _ = writeln!(out, "\n{}", j.summary);
        for (s, n) in &j.narratives {
            let _ = writeln!(out, "\n{s}: {n}");
        }
        if !j.suggested_investigation_steps.is_empty() {
            let _ = writeln!(out, "\nSuggested steps:");
            for step in &j.suggested_investigation_steps {
                let _ = writeln!(out, "- {step}");
            }
        }
        let removed = j.validation_log.iter().filter(|e| e.status == ClaimStatus::Removed).count();
        let _ = writeln!(
            out,
            "\nClaims checked: {}, removed as unsupported: {removed}",
            j.validation_log.len()
        );
    }
    let _ = writeln!(out, "\n{}", adv.disclaimer);

    if !a.warnings.is_empty() {
        heading(&mut out, format, 2, "Warnings");
        for w in &a.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}
