use std::fs;
use std::path::Path;

use serde_json::json;

use super::git::render_git_log;
use super::load::SIDECAR_SUFFIX;
use super::*;

/// Writes `bundle` out in the on-disk bundle layout so that loading the
/// directory with the same identities yields an equal bundle.
pub fn write_bundle_dir(
    bundle: &EvidenceBundle,
    identities: &IdentityMap,
    dir: &Path,
) -> Result<(), EvidenceError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EvidenceError::Io { path, source }
    };
    let put = |rel: &str, contents: &[u8]| -> Result<(), EvidenceError> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io(parent))?;
        }
        fs::write(&path, contents).map_err(io(&path))
    };
    let json_bytes = |v: &serde_json::Value| {
        let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
        s.push('\n');
        s.into_bytes()
    };

    fs::create_dir_all(dir).map_err(io(dir))?;
    put(
        "manifest.json",
        &json_bytes(&json!({
            "project_id": bundle.project_id,
            "window": bundle.project_window,
            "team_grade": bundle.team_grade,
            "roster": bundle.roster,
            "task_description": "task.md",
            "allow_self_assessment": bundle.allow_self_assessment,
        })),
    )?;
    put("task.md", bundle.task_description.as_bytes())?;
    put(
        "identities.json",
        &json_bytes(&json!({ "entries": identities.entries() })),
    )?;
    put("commits.log", render_git_log(&bundle.commits).as_bytes())?;

    let mut chat = String::new();
    for m in &bundle.chat_messages {
        let mut line = json!({
            "id": m.id,
            "sender": m.sender_alias,
            "ts": m.timestamp,
            "text": m.text,
            "mentions": m.mentions,
            "channel": m.channel,
        });
        if let Some(r) = &m.reply_to {
            line["reply_to"] = json!(r);
        }
        chat.push_str(&line.to_string());
        chat.push('\n');
    }
    put("chat/messages.jsonl", chat.as_bytes())?;

    let mut email = String::new();
    for e in &bundle.emails {
        let line = json!({
            "id": e.id,
            "sender": e.sender_alias,
            "recipients": e.recipient_aliases,
            "ts": e.timestamp,
            "subject": e.subject,
            "body": e.body,
        });
        email.push_str(&line.to_string());
        email.push('\n');
    }
    put("email/messages.jsonl", email.as_bytes())?;

    let meetings: Vec<_> = bundle
        .meetings
        .iter()
        .map(|m| {
            json!({
                "id": m.id,
                "start": m.start,
                "duration_minutes": m.duration_minutes,
                "attendees": m.attendee_aliases,
                "minutes": m.minutes_text,
            })
        })
        .collect();
    put("meetings.json", &json_bytes(&json!(meetings)))?;

    let tasks: Vec<_> = bundle
        .tasks
        .iter()
        .map(|t| {
            json!({
                "id": t.id,
                "title": t.title,
                "description": t.description,
                "assignee": t.assignee_alias,
                "created": t.created,
                "due": t.due,
                "completed_at": t.completed_at,
                "status": t.status,
                "category": t.category,
            })
        })
        .collect();
    put("tasks.json", &json_bytes(&json!(tasks)))?;

    let mut pa = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| EvidenceError::Io {
        path: dir.join("pa.csv"),
        source: std::io::Error::other(e.to_string()),
    };
    pa.write_record(["rater", "ratee", "category", "score", "comment"])
        .map_err(csv_err)?;
    for item in &bundle.pa_items {
        pa.write_record([
            item.rater_alias.as_str(),
            item.ratee_alias.as_str(),
            item.category_label.as_str(),
            &item.score.to_string(),
            item.comment.as_deref().unwrap_or(""),
        ])
        .map_err(csv_err)?;
    }
    let pa_bytes = pa.into_inner().map_err(|e| EvidenceError::Io {
        path: dir.join("pa.csv"),
        source: std::io::Error::other(e.to_string()),
    })?;
    put("pa.csv", &pa_bytes)?;

    put(
        "context.json",
        &json_bytes(&serde_json::to_value(&bundle.context_records).expect("context serialises")),
    )?;

    for t in &bundle.text_artifacts {
        put(&t.path, t.body.as_bytes())?;
        put(
            &format!("{}{SIDECAR_SUFFIX}", t.path),
            &json_bytes(&json!({ "spans": t.per_author_spans })),
        )?;
    }
    for m in &bundle.media_artifacts {
        put(&m.path, &vec![0u8; m.size_bytes as usize])?;
        let mut side = json!({ "author": m.author, "kind": m.kind });
        if let Some(d) = m.duration_seconds {
            side["duration_seconds"] = json!(d);
        }
        if let Some(p) = m.page_count {
            side["page_count"] = json!(p);
        }
        put(&format!("{}{SIDECAR_SUFFIX}", m.path), &json_bytes(&side))?;
    }
    Ok(())
}
