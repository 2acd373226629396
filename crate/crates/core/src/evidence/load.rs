use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::git::parse_git_numstat_file;
use super::*;

/// Result of reading a bundle directory.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub bundle: EvidenceBundle,
    /// Records that failed to parse or validate, with file and line.
    pub issues: Vec<ParseIssue>,
    /// Per-file record accounting: every input record is either parsed or
    /// reported as an issue.
    pub counts: BTreeMap<String, FileCount>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FileCount {
    pub records: usize,
    pub parsed: usize,
    pub errors: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    project_id: String,
    window: Window,
    team_grade: f64,
    roster: Vec<Student>,
    #[serde(default)]
    task_description: Option<String>,
    #[serde(default)]
    allow_self_assessment: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChatLine {
    id: String,
    sender: String,
    ts: Timestamp,
    text: String,
    #[serde(default)]
    reply_to: Option<String>,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default)]
    channel: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmailLine {
    #[serde(default)]
    id: Option<String>,
    sender: String,
    recipients: Vec<String>,
    ts: Timestamp,
    #[serde(default)]
    subject: String,
    #[serde(default)]
    body: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeetingEntry {
    #[serde(default)]
    id: Option<String>,
    start: Timestamp,
    duration_minutes: f64,
    #[serde(default)]
    attendees: Vec<String>,
    #[serde(default, alias = "minutes_text")]
    minutes: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    id: String,
    title: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    assignee: Option<String>,
    created: Timestamp,
    #[serde(default)]
    due: Option<Timestamp>,
    #[serde(default)]
    completed_at: Option<Timestamp>,
    status: TaskStatus,
    #[serde(default)]
    category: Option<String>,
}

#[derive(Deserialize)]
struct PaRow {
    rater: String,
    ratee: String,
    category: String,
    score: String,
    #[serde(default)]
    comment: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TextSidecar {
    spans: Vec<AuthorSpan>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MediaSidecar {
    author: StudentId,
    kind: MediaKind,
    #[serde(default)]
    duration_seconds: Option<f64>,
    #[serde(default)]
    page_count: Option<u32>,
}

pub(super) const SIDECAR_SUFFIX: &str = ".attrib.json";

/// Loads a bundle, reading `identities.json` from the bundle root when it
/// exists and using an empty identity map otherwise.
pub fn load_bundle_with_default_identities(root: &Path) -> Result<LoadReport, EvidenceError> {
    let path = root.join("identities.json");
    let identities = if path.exists() {
        let raw = read(&path)?;
        serde_json::from_str(&raw).map_err(|e| EvidenceError::InvalidIdentities(e.to_string()))?
    } else {
        IdentityMap::empty()
    };
    load_bundle(root, &identities)
}

/// Reads the bundle directory at `root`.
///
/// Fatal problems (missing or invalid manifest, roster below two, identity
/// entries naming unknown students) return an error. Per-record problems
/// are collected in [`LoadReport::issues`] and never abort the load.
pub fn load_bundle(root: &Path, identities: &IdentityMap) -> Result<LoadReport, EvidenceError> {
    let manifest_path = root.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(EvidenceError::MissingManifest(manifest_path));
    }
    let manifest: ManifestFile = serde_json::from_str(&read(&manifest_path)?)
        .map_err(|e| EvidenceError::InvalidManifest(e.to_string()))?;
    validate_manifest(&manifest)?;
    let roster_ids: BTreeSet<StudentId> = manifest.roster.iter().map(|s| s.id.clone()).collect();
    for entry in identities.entries() {
        if !roster_ids.contains(&entry.student) {
            return Err(EvidenceError::IdentityOutsideRoster {
                alias: entry.alias.clone(),
                kind: entry.source_kind,
                student: entry.student.clone(),
            });
        }
    }

    let mut ctx = Loader {
        root,
        identities,
        roster: roster_ids,
        window: manifest.window,
        issues: Vec::new(),
        counts: BTreeMap::new(),
        unresolved: BTreeSet::new(),
    };

    let task_description = match &manifest.task_description {
        Some(rel) => match fs::read_to_string(root.join(rel)) {
            Ok(s) => s,
            Err(e) => {
                ctx.issues
                    .push(ParseIssue::file(rel, format!("cannot read task description: {e}")));
                String::new()
            }
        },
        None => String::new(),
    };

    let commits = ctx.load_commits()?;
    let chat_messages = ctx.load_chat()?;
    let emails = ctx.load_email()?;
    let meetings = ctx.load_meetings()?;
    let tasks = ctx.load_tasks()?;
    let pa_items = ctx.load_pa(manifest.allow_self_assessment)?;
    let context_records = ctx.load_context()?;
    let text_artifacts = ctx.load_text()?;
    let media_artifacts = ctx.load_media()?;

    let bundle = EvidenceBundle {
        project_id: manifest.project_id,
        project_window: manifest.window,
        team_grade: manifest.team_grade,
        roster: manifest.roster,
        allow_self_assessment: manifest.allow_self_assessment,
        task_description,
        commits,
        text_artifacts,
        media_artifacts,
        chat_messages,
        emails,
        meetings,
        tasks,
        pa_items,
        context_records,
        unresolved_aliases: ctx.unresolved.into_iter().collect(),
    };
    Ok(LoadReport {
        bundle,
        issues: ctx.issues,
        counts: ctx.counts,
    })
}

fn validate_manifest(m: &ManifestFile) -> Result<(), EvidenceError> {
    if m.project_id.trim().is_empty() {
        return Err(EvidenceError::InvalidManifest("project_id is empty".into()));
    }
    if m.window.start >= m.window.end {
        return Err(EvidenceError::EmptyWindow);
    }
    if !(0.0..=100.0).contains(&m.team_grade) {
        return Err(EvidenceError::InvalidManifest(format!(
            "team_grade {} outside 0..100",
            m.team_grade
        )));
    }
    let mut seen = BTreeSet::new();
    for s in &m.roster {
        if s.id.as_str().trim().is_empty() {
            return Err(EvidenceError::InvalidManifest("roster entry with empty id".into()));
        }
        if !seen.insert(&s.id) {
            return Err(EvidenceError::InvalidManifest(format!(
                "duplicate roster id {}",
                s.id
            )));
        }
    }
    if m.roster.len() < 2 {
        return Err(EvidenceError::RosterTooSmall(m.roster.len()));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, EvidenceError> {
    fs::read_to_string(path).map_err(|source| EvidenceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Loader<'a> {
    root: &'a Path,
    identities: &'a IdentityMap,
    roster: BTreeSet<StudentId>,
    window: Window,
    issues: Vec<ParseIssue>,
    counts: BTreeMap<String, FileCount>,
    unresolved: BTreeSet<UnresolvedAlias>,
}

impl Loader<'_> {
    fn resolve(&mut self, alias: &str, kind: SourceKind) -> Option<StudentId> {
        match self.identities.resolve(alias, kind) {
            Some(id) => Some(id.clone()),
            None => {
                self.unresolved.insert(UnresolvedAlias {
                    source_kind: kind,
                    alias: alias.to_string(),
                });
                None
            }
        }
    }

    fn count(&mut self, file: &str) -> &mut FileCount {
        self.counts.entry(file.to_string()).or_default()
    }

    fn ok(&mut self, file: &str) {
        let c = self.count(file);
        c.records += 1;
        c.parsed += 1;
    }

    fn fail(&mut self, issue: ParseIssue) {
        let c = self.count(&issue.file);
        c.records += 1;
        c.errors += 1;
        self.issues.push(issue);
    }

    fn rel(&self, path: &Path) -> String {
        path.strip_prefix(self.root)
            .unwrap_or(path)
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/")
    }

    fn load_commits(&mut self) -> Result<Vec<CommitRecord>, EvidenceError> {
        let path = self.root.join("commits.log");
        if !path.is_file() {
            return Ok(Vec::new());
        }
        let text = read(&path)?;
        let log = parse_git_numstat_file(&text, "commits.log");
        let header_issues = log.rejected_commits;
        {
            let c = self.count("commits.log");
            c.records += log.commits.len() + header_issues;
            c.parsed += log.commits.len();
            c.errors += header_issues;
        }
        // numstat-level problems do not drop a commit; they are still reported
        self.issues.extend(log.issues);
        let mut commits = log.commits;
        for c in &mut commits {
            c.author = self.resolve(&c.author_alias, SourceKind::GitAuthor);
            c.out_of_window = !self.window.contains(&c.timestamp);
        }
        commits.sort_by(|a, b| (a.timestamp, &a.hash).cmp(&(b.timestamp, &b.hash)));
        Ok(commits)
    }

    fn jsonl_files(&self, dir: &str) -> Result<Vec<PathBuf>, EvidenceError> {
        let d = self.root.join(dir);
        if !d.is_dir() {
            return Ok(Vec::new());
        }
        let mut files: Vec<PathBuf> = list_files(&d)?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        Ok(files)
    }

    fn load_chat(&mut self) -> Result<Vec<ChatMessage>, EvidenceError> {
        let mut parsed: Vec<(String, usize, ChatMessage)> = Vec::new();
        for path in self.jsonl_files("chat")? {
            let file = self.rel(&path);
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let text = read(&path)?;
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<ChatLine>(line) {
                    Ok(raw) => {
                        let sender = self.resolve(&raw.sender, SourceKind::ChatHandle);
                        let mentioned = raw
                            .mentions
                            .iter()
                            .filter_map(|m| self.resolve(m, SourceKind::ChatHandle))
                            .collect();
                        let msg = ChatMessage {
                            out_of_window: !self.window.contains(&raw.ts),
                            id: raw.id,
                            sender_alias: raw.sender,
                            sender,
                            timestamp: raw.ts,
                            text: raw.text,
                            reply_to: raw.reply_to,
                            mentions: raw.mentions,
                            mentioned,
                            channel: raw.channel.unwrap_or_else(|| stem.clone()),
                        };
                        parsed.push((file.clone(), idx + 1, msg));
                    }
                    Err(e) => self.fail(ParseIssue::at(&file, idx + 1, e.to_string())),
                }
            }
        }

        // ids must be unique; reply_to must point at an earlier message
        let mut first_seen: HashMap<String, Timestamp> = HashMap::new();
        let mut dupes = BTreeSet::new();
        for (file, line, m) in &parsed {
            if first_seen.insert(m.id.clone(), m.timestamp).is_some() {
                dupes.insert((file.clone(), *line));
            }
        }
        let mut out = Vec::with_capacity(parsed.len());
        for (file, line, m) in parsed {
            if dupes.contains(&(file.clone(), line)) {
                self.fail(ParseIssue::at(&file, line, format!("duplicate message id {:?}", m.id)));
                continue;
            }
            if let Some(target) = &m.reply_to {
                match first_seen.get(target) {
                    None => {
                        self.fail(ParseIssue::at(
                            &file,
                            line,
                            format!("reply_to {target:?} references no message in the bundle"),
                        ));
                        continue;
                    }
                    Some(t) if *t > m.timestamp => {
                        self.fail(ParseIssue::at(
                            &file,
                            line,
                            format!("reply_to {target:?} references a later message"),
                        ));
                        continue;
                    }
                    _ => {}
                }
            }
            self.ok(&file);
            out.push(m);
        }
        out.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        Ok(out)
    }

    fn load_email(&mut self) -> Result<Vec<EmailRecord>, EvidenceError> {
        let mut out = Vec::new();
        for path in self.jsonl_files("email")? {
            let file = self.rel(&path);
            let text = read(&path)?;
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let raw = match serde_json::from_str::<EmailLine>(line) {
                    Ok(r) => r,
                    Err(e) => {
                        self.fail(ParseIssue::at(&file, idx + 1, e.to_string()));
                        continue;
                    }
                };
                if raw.recipients.is_empty() {
                    self.fail(ParseIssue::at(&file, idx + 1, "email has no recipients"));
                    continue;
                }
                let sender = self.resolve(&raw.sender, SourceKind::EmailAddress);
                let recipients = raw
                    .recipients
                    .iter()
                    .filter_map(|r| self.resolve(r, SourceKind::EmailAddress))
                    .collect();
                self.ok(&file);
                out.push(EmailRecord {
                    id: raw.id.unwrap_or_else(|| format!("{file}:{}", idx + 1)),
                    out_of_window: !self.window.contains(&raw.ts),
                    sender_alias: raw.sender,
                    sender,
                    recipient_aliases: raw.recipients,
                    recipients,
                    timestamp: raw.ts,
                    subject: raw.subject,
                    body: raw.body,
                });
            }
        }
        out.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        Ok(out)
    }

    /// Reads a JSON array file; returns `(index, element)` pairs. A file
    /// that is not an array is a single file-level issue.
    fn json_array(&mut self, name: &str) -> Result<Vec<(usize, serde_json::Value)>, EvidenceError> {
        let path = self.root.join(name);
        if !path.is_file() {
            return Ok(Vec::new());
        }
        let text = read(&path)?;
        match serde_json::from_str::<Vec<serde_json::Value>>(&text) {
            Ok(items) => Ok(items.into_iter().enumerate().collect()),
            Err(e) => {
                self.fail(ParseIssue::file(name, format!("expected a JSON array: {e}")));
                Ok(Vec::new())
            }
        }
    }

    fn load_meetings(&mut self) -> Result<Vec<MeetingRecord>, EvidenceError> {
        let file = "meetings.json";
        let mut out = Vec::new();
        for (i, value) in self.json_array(file)? {
            let raw: MeetingEntry = match serde_json::from_value(value) {
                Ok(r) => r,
                Err(e) => {
                    self.fail(ParseIssue::element(file, i, e.to_string()));
                    continue;
                }
            };
            if !(raw.duration_minutes.is_finite() && raw.duration_minutes > 0.0) {
                self.fail(ParseIssue::element(file, i, "duration_minutes must be > 0"));
                continue;
            }
            let attendees = raw
                .attendees
                .iter()
                .filter_map(|a| self.resolve(a, SourceKind::MeetingName))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            self.ok(file);
            out.push(MeetingRecord {
                id: raw.id.unwrap_or_else(|| format!("meeting-{}", i + 1)),
                out_of_window: !self.window.contains(&raw.start),
                start: raw.start,
                duration_minutes: raw.duration_minutes,
                attendee_aliases: raw.attendees,
                attendees,
                minutes_text: raw.minutes,
            });
        }
        out.sort_by(|a, b| (a.start, &a.id).cmp(&(b.start, &b.id)));
        Ok(out)
    }

    fn load_tasks(&mut self) -> Result<Vec<TaskRecord>, EvidenceError> {
        let file = "tasks.json";
        let mut out = Vec::new();
        for (i, value) in self.json_array(file)? {
            let raw: TaskEntry = match serde_json::from_value(value) {
                Ok(r) => r,
                Err(e) => {
                    self.fail(ParseIssue::element(file, i, e.to_string()));
                    continue;
                }
            };
            let category = match raw.category.as_deref() {
                Some(c) => match TaskCategory::parse(c) {
                    Some(c) => c,
                    None => {
                        self.fail(ParseIssue::element(file, i, format!("unknown task category {c:?}")));
                        continue;
                    }
                },
                None => TaskCategory::classify(&format!("{} {}", raw.title, raw.description)),
            };
            let assignee = raw
                .assignee
                .as_deref()
                .and_then(|a| self.resolve(a, SourceKind::TaskAssignee));
            let task = TaskRecord {
                id: raw.id,
                out_of_window: !self.window.contains(&raw.created),
                title: raw.title,
                description: raw.description,
                assignee_alias: raw.assignee,
                assignee,
                created: raw.created,
                due: raw.due,
                completed_at: raw.completed_at,
                status: raw.status,
                category,
            };
            if let Err(msg) = task.validate() {
                self.fail(ParseIssue::element(file, i, msg));
                continue;
            }
            self.ok(file);
            out.push(task);
        }
        Ok(out)
    }

    fn load_pa(&mut self, allow_self: bool) -> Result<Vec<PeerAssessmentItem>, EvidenceError> {
        let file = "pa.csv";
        let path = self.root.join(file);
        if !path.is_file() {
            return Ok(Vec::new());
        }
        let mut reader = match csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&path) {
            Ok(r) => r,
            Err(e) => {
                self.fail(ParseIssue::file(file, e.to_string()));
                return Ok(Vec::new());
            }
        };
        let expected = ["rater", "ratee", "category", "score", "comment"];
        match reader.headers() {
            Ok(h) if h.iter().eq(expected.iter().copied()) => {}
            Ok(h) => {
                self.fail(ParseIssue::at(
                    file,
                    1,
                    format!("expected header {:?}, got {:?}", expected.join(","), h.iter().collect::<Vec<_>>().join(",")),
                ));
                return Ok(Vec::new());
            }
            Err(e) => {
                self.fail(ParseIssue::at(file, 1, e.to_string()));
                return Ok(Vec::new());
            }
        }
        let mut out = Vec::new();
        for row in reader.records() {
            let record = match row {
                Ok(r) => r,
                Err(e) => {
                    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                    self.fail(ParseIssue::at(file, line, e.to_string()));
                    continue;
                }
            };
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let raw: PaRow = match record.deserialize(None) {
                Ok(r) => r,
                Err(e) => {
                    self.fail(ParseIssue::at(file, line, e.to_string()));
                    continue;
                }
            };
            let score = match raw.score.parse::<u8>() {
                Ok(s) if (1..=5).contains(&s) => s,
                _ => {
                    self.fail(ParseIssue::at(file, line, format!("score {:?} outside 1..5", raw.score)));
                    continue;
                }
            };
            let rater = self.identities.resolve(&raw.rater, SourceKind::PaName).cloned();
            let ratee = self.identities.resolve(&raw.ratee, SourceKind::PaName).cloned();
            let same = match (&rater, &ratee) {
                (Some(a), Some(b)) => a == b,
                _ => raw.rater == raw.ratee,
            };
            if same && !allow_self {
                self.fail(ParseIssue::at(file, line, "self-assessment is not enabled for this project"));
                continue;
            }
            let rater = self.resolve(&raw.rater, SourceKind::PaName);
            let ratee = self.resolve(&raw.ratee, SourceKind::PaName);
            self.ok(file);
            out.push(PeerAssessmentItem {
                rater_alias: raw.rater,
                rater,
                ratee_alias: raw.ratee,
                ratee,
                category_label: raw.category,
                score,
                comment: raw.comment.filter(|c| !c.is_empty()),
            });
        }
        Ok(out)
    }

    fn load_context(&mut self) -> Result<Vec<ContextRecord>, EvidenceError> {
        let file = "context.json";
        let mut out = Vec::new();
        for (i, value) in self.json_array(file)? {
            let rec: ContextRecord = match serde_json::from_value(value) {
                Ok(r) => r,
                Err(e) => {
                    self.fail(ParseIssue::element(file, i, e.to_string()));
                    continue;
                }
            };
            if !self.roster.contains(&rec.student) {
                self.fail(ParseIssue::element(file, i, format!("student {} is not on the roster", rec.student)));
                continue;
            }
            if let Err(msg) = rec.validate() {
                self.fail(ParseIssue::element(file, i, msg));
                continue;
            }
            self.ok(file);
            out.push(rec);
        }
        Ok(out)
    }

    /// Non-sidecar files under `dir`, each paired with its sidecar path.
    fn attributed_files(&self, dir: &str) -> Result<Vec<(PathBuf, PathBuf)>, EvidenceError> {
        let d = self.root.join(dir);
        if !d.is_dir() {
            return Ok(Vec::new());
        }
        let mut files: Vec<PathBuf> = list_files(&d)?
            .into_iter()
            .filter(|p| !p.to_string_lossy().ends_with(SIDECAR_SUFFIX))
            .collect();
        files.sort();
        Ok(files
            .into_iter()
            .map(|p| {
                let mut side = p.clone().into_os_string();
                side.push(SIDECAR_SUFFIX);
                (p, PathBuf::from(side))
            })
            .collect())
    }

    fn load_text(&mut self) -> Result<Vec<TextArtifact>, EvidenceError> {
        let mut out = Vec::new();
        for (path, sidecar) in self.attributed_files("text")? {
            let rel = self.rel(&path);
            let body = match fs::read_to_string(&path) {
                Ok(b) => b,
                Err(e) => {
                    self.fail(ParseIssue::file(&rel, format!("unreadable text artifact: {e}")));
                    continue;
                }
            };
            let spans = match fs::read_to_string(&sidecar) {
                Ok(raw) => match serde_json::from_str::<TextSidecar>(&raw) {
                    Ok(s) => s.spans,
                    Err(e) => {
                        self.fail(ParseIssue::file(&rel, format!("invalid attribution sidecar: {e}")));
                        continue;
                    }
                },
                Err(_) => {
                    self.fail(ParseIssue::file(&rel, "missing attribution sidecar"));
                    continue;
                }
            };
            if let Some(s) = spans.iter().find(|s| !self.roster.contains(&s.student)) {
                let msg = format!("attributed student {} is not on the roster", s.student);
                self.fail(ParseIssue::file(&rel, msg));
                continue;
            }
            let artifact = TextArtifact {
                kind: ArtifactKind::from_path(&rel),
                path: rel.clone(),
                per_author_spans: spans,
                body,
            };
            let attributed: u64 = artifact.per_author_spans.iter().map(|s| s.word_count).sum();
            if attributed > artifact.total_words() {
                self.fail(ParseIssue::file(
                    &rel,
                    format!(
                        "attributed words {attributed} exceed document word count {}",
                        artifact.total_words()
                    ),
                ));
                continue;
            }
            self.ok(&rel);
            out.push(artifact);
        }
        Ok(out)
    }

    fn load_media(&mut self) -> Result<Vec<MediaArtifact>, EvidenceError> {
        let mut out = Vec::new();
        for (path, sidecar) in self.attributed_files("media")? {
            let rel = self.rel(&path);
            let size_bytes = fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
            let side: MediaSidecar = match fs::read_to_string(&sidecar) {
                Ok(raw) => match serde_json::from_str(&raw) {
                    Ok(s) => s,
                    Err(e) => {
                        self.fail(ParseIssue::file(&rel, format!("invalid attribution sidecar: {e}")));
                        continue;
                    }
                },
                Err(_) => {
                    self.fail(ParseIssue::file(&rel, "missing attribution sidecar"));
                    continue;
                }
            };
            if !self.roster.contains(&side.author) {
                self.fail(ParseIssue::file(&rel, format!("author {} is not on the roster", side.author)));
                continue;
            }
            let media = MediaArtifact {
                path: rel.clone(),
                author: side.author,
                kind: side.kind,
                size_bytes,
                duration_seconds: side.duration_seconds,
                page_count: side.page_count,
            };
            if let Err(msg) = media.validate() {
                self.fail(ParseIssue::file(&rel, msg));
                continue;
            }
            self.ok(&rel);
            out.push(media);
        }
        Ok(out)
    }
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>, EvidenceError> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).map_err(|source| EvidenceError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| EvidenceError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let p = entry.path();
        if p.is_dir() {
            out.extend(list_files(&p)?);
        } else {
            out.push(p);
        }
    }
    Ok(out)
}
