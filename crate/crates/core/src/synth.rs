//! Seeded generator of labelled evidence bundles with planted behaviours.
//!
//! Balanced members share one exact activity schedule (symmetric commit
//! timing, constant churn, fixed sentiment counts); the seed only varies
//! names, wording and hashes. Archetypes scale that schedule, so a planted
//! effect is the only inequality large enough to fire a marker.
//!
//! Labels come from the planted levels alone: each archetype moves a fixed
//! set of benchmarks to a known level, and the label set is what the
//! marker rule gives on those idealised levels.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conflict::gini;
use crate::evidence::{
    write_bundle_dir, ArtifactKind, AuthorSpan, ChatMessage, CommitRecord, EvidenceBundle, EvidenceError,
    IdentityEntry, IdentityMap, MediaArtifact, MediaKind, MeetingRecord, SourceKind, Student, StudentId,
    TaskCategory, TaskRecord, TaskStatus, TextArtifact, Timestamp, Window,
};
use crate::framework::{Benchmark, Scenario};
use crate::measures::{autorate, WeightConfig};
use crate::metrics::Orientation;
use crate::num::{mean, population_sd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    Balanced,
    Loafer,
    Hog,
    Ghost,
    CliqueMember,
    PoorCommunicator,
    LateStarter,
}

impl Archetype {
    /// Benchmarks the archetype moves and the level it moves them to, with
    /// 1 as a balanced member. Clique members and late starters shift only
    /// metrics outside the default masks or stay below the default
    /// thresholds, so they plant nothing.
    pub fn planted_levels(&self, intensity: f64) -> Vec<(Benchmark, f64)> {
        let i = intensity;
        match self {
            Archetype::Loafer => vec![(Benchmark::Quantity, 1.0 - i)],
            Archetype::Hog => vec![(Benchmark::Quantity, 1.0 + HOG_SCALE * i)],
            Archetype::Ghost => vec![
                (Benchmark::Quantity, 1.0 - i),
                (Benchmark::Presence, 1.0 - i),
                (Benchmark::Adherence, 1.0 - i),
            ],
            Archetype::PoorCommunicator => vec![(Benchmark::Tone, 1.0 - i)],
            Archetype::Balanced | Archetype::CliqueMember | Archetype::LateStarter => Vec::new(),
        }
    }

    fn volume(&self, i: f64) -> f64 {
        match self {
            Archetype::Loafer | Archetype::Ghost => 1.0 - i,
            Archetype::Hog => 1.0 + HOG_SCALE * i,
            _ => 1.0,
        }
    }
}

/// A hog at full intensity does ten times the work of a balanced member.
pub const HOG_SCALE: f64 = 9.0;

const COMMITS: f64 = 14.0;
const NOTE_SENTENCES: f64 = 60.0;
const ROUNDS: usize = 20;
const MEETINGS: usize = 10;
const TASKS: usize = 4;
const TASK_CATEGORIES: [TaskCategory; TASKS] =
    [TaskCategory::Coding, TaskCategory::Writing, TaskCategory::Research, TaskCategory::Review];
/// Evaluative sentences per ordinary chat message; each carries exactly
/// one lexicon word of valence ±1.
const EVALUATIONS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehaviourProfile {
    pub student: StudentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    pub archetype: Archetype,
    #[serde(default = "full")]
    pub intensity: f64,
}

fn full() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExpectedMarker {
    pub benchmark: Benchmark,
    pub scenario: Scenario,
    pub student: StudentId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub seed: u64,
    pub profiles: Vec<BehaviourProfile>,
    /// Sorted by benchmark, scenario, student.
    pub expected_markers: Vec<ExpectedMarker>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub bundle: EvidenceBundle,
    pub identities: IdentityMap,
    pub labels: Labels,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("at least 2 profiles are required, got {0}")]
    TooFewProfiles(usize),
    #[error("student {0} appears in more than one profile")]
    DuplicateStudent(StudentId),
    #[error("intensity {1} for {0} is outside [0, 1]")]
    Intensity(StudentId, f64),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("labels: {0}")]
    Labels(#[from] serde_json::Error),
    #[error("labels: {0}")]
    Io(#[from] std::io::Error),
}

/// Ten weeks from Monday 6 January 2025.
pub fn default_window() -> Window {
    let start = Utc.with_ymd_and_hms(2025, 1, 6, 0, 0, 0).single().expect("valid date");
    Window {
        start: Timestamp::from_utc(start),
        end: Timestamp::from_utc(start + Duration::days(70)),
    }
}

/// Expected marker set for a team under `config`'s thresholds, from the
/// planted levels only. Realised counts are rounded, so a level whose
/// Gini lies within a few hundredths of g* may land on either side.
pub fn expected_markers(profiles: &[BehaviourProfile], config: &WeightConfig) -> Vec<ExpectedMarker> {
    let mut levels: BTreeMap<Benchmark, Vec<f64>> = BTreeMap::new();
    for (i, p) in profiles.iter().enumerate() {
        for (b, level) in p.archetype.planted_levels(p.intensity) {
            levels.entry(b).or_insert_with(|| vec![1.0; profiles.len()])[i] = level;
        }
    }
    let mut out = Vec::new();
    for (b, raw) in levels {
        let x = autorate(&raw, Orientation::HigherBetter);
        let g = gini(&x).unwrap_or(0.0);
        let mu = mean(&x).unwrap_or(0.0);
        let sd = population_sd(&x).unwrap_or(0.0);
        if g < config.gini_threshold || sd <= 0.0 {
            continue;
        }
        for (p, v) in profiles.iter().zip(&x) {
            let z = (v - mu) / sd;
            let scenario = if z >= config.deviation_threshold {
                Scenario::A
            } else if z <= -config.deviation_threshold {
                Scenario::B
            } else {
                continue;
            };
            out.push(ExpectedMarker {
                benchmark: b,
                scenario,
                student: p.student.clone(),
            });
        }
    }
    out.sort();
    out
}

const GIVEN_NAMES: &[&str] = &[
    "Avery", "Blake", "Casey", "Devon", "Emery", "Finley", "Harper", "Jordan", "Kendall", "Logan", "Morgan",
    "Parker", "Quinn", "Reese", "Rowan", "Sawyer", "Skyler", "Taylor",
];
const FAMILY_NAMES: &[&str] = &[
    "Abbott", "Baker", "Chen", "Diaz", "Evans", "Fischer", "Garcia", "Haddad", "Ito", "Jensen", "Kowalski",
    "Larsen", "Moreau", "Novak", "Okafor", "Patel", "Rossi", "Silva",
];
const NOUNS: &[&str] = &[
    "parser", "dataset", "schema", "chart", "prototype", "interview", "outline", "budget", "timeline", "survey",
    "glossary", "sampler", "exporter", "importer", "dashboard", "scheduler", "index", "archive", "sketch",
    "poster", "storyboard", "notebook", "pipeline", "tracker",
];
const POSITIVE: &[&str] = &[
    "amazing", "awesome", "brilliant", "excellent", "fantastic", "outstanding", "perfect", "superb", "wonderful",
];
const NEGATIVE: &[&str] = &["awful", "disgusting", "horrible", "pathetic", "stupid", "terrible", "useless"];
const EVALUATIVE: &[&str] = &[
    "The {noun} draft looks {eval}.",
    "Your notes on the {noun} were {eval}.",
    "That {noun} change is {eval}.",
];
const NEUTRAL_CHAT: &[&str] = &[
    "Let us meet after the lecture to plan the {noun}.",
    "I will look at the {noun} tonight.",
    "Can someone share the {noun} link?",
];
const NOTE_SENTENCES_POOL: &[&str] = &[
    "We compared the {noun} results against the baseline.",
    "The {noun} section explains how the data was collected.",
    "Each {noun} entry lists its source and date.",
    "This part of the {noun} covers the main steps.",
    "We kept the {noun} short so it fits on one page.",
];
const COMMIT_MESSAGES: &[&str] = &[
    "Add {noun} handling",
    "Refactor the {noun} module",
    "Update {noun} tests",
    "Clean up {noun} helpers",
    "Document the {noun} flow",
];
const TASK_TEMPLATES: [&str; TASKS] = [
    "implement the {noun} module",
    "draft the {noun} section",
    "collect sources on the {noun}",
    "review the {noun} tests",
];
const GOALS: &[&str] = &[
    "load raw activity logs into a clean dataset",
    "summarise the dataset in a written report",
    "present the findings in a short talk",
];

fn fill(template: &str, noun: &str, eval: &str) -> String {
    template.replace("{noun}", noun).replace("{eval}", eval)
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [&'a str]) -> &'a str {
    pool.choose(rng).copied().unwrap_or("")
}

fn at(window: &Window, seconds: i64) -> Timestamp {
    Timestamp::from_utc(window.start.utc() + Duration::seconds(seconds))
}

/// `count` instants laid out symmetrically over `[from, to]` seconds, so
/// that equal weights give a timeline skew of exactly zero.
fn symmetric_offsets(from: i64, to: i64, count: usize) -> Vec<i64> {
    let span = to - from;
    let k = count as i64;
    let mut out = vec![0; count];
    for j in 0..count.div_ceil(2) {
        let offset = span * (2 * j as i64 + 1) / (2 * k);
        out[j] = from + offset;
        out[count - 1 - j] = to - offset;
    }
    out
}

struct Member<'a> {
    profile: &'a BehaviourProfile,
    name: String,
    handle: String,
    /// Seconds after the window start before which the member is inactive.
    start: i64,
    tasks: Vec<(String, TaskCategory)>,
}

impl Member<'_> {
    fn id(&self) -> &StudentId {
        &self.profile.student
    }

    fn archetype(&self) -> Archetype {
        self.profile.archetype
    }

    fn intensity(&self) -> f64 {
        self.profile.intensity
    }

    /// Ghosts drop out of the first `intensity` share of rounds.
    fn takes_part(&self, index: usize, total: usize, at: i64) -> bool {
        if at < self.start {
            return false;
        }
        match self.archetype() {
            Archetype::Ghost => (index as f64 + 0.5) / total as f64 >= self.intensity(),
            _ => true,
        }
    }
}

fn hash(rng: &mut ChaCha8Rng) -> String {
    format!("{:016x}{:016x}{:08x}", rng.random::<u64>(), rng.random::<u64>(), rng.random::<u32>())
}

pub fn generate(profiles: &[BehaviourProfile], seed: u64, window: Window) -> Result<SynthOutput, SynthError> {
    if profiles.len() < 2 {
        return Err(SynthError::TooFewProfiles(profiles.len()));
    }
    let mut seen = BTreeSet::new();
    for p in profiles {
        if !seen.insert(&p.student) {
            return Err(SynthError::DuplicateStudent(p.student.clone()));
        }
        if !(0.0..=1.0).contains(&p.intensity) {
            return Err(SynthError::Intensity(p.student.clone(), p.intensity));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = (window.end.utc() - window.start.utc()).num_seconds();
    let day = 86_400;

    let mut given: Vec<&str> = GIVEN_NAMES.to_vec();
    given.shuffle(&mut rng);
    let mut family: Vec<&str> = FAMILY_NAMES.to_vec();
    family.shuffle(&mut rng);
    let mut nouns: Vec<&str> = NOUNS.to_vec();
    nouns.shuffle(&mut rng);

    let mut members: Vec<Member> = Vec::new();
    for (i, p) in profiles.iter().enumerate() {
        let first = given[i % given.len()];
        let name = p
            .display_name
            .clone()
            .unwrap_or_else(|| format!("{first} {}", family[i % family.len()]));
        let handle = format!("{}{}", first.to_lowercase(), i + 1);
        let start = match p.archetype {
            Archetype::LateStarter => (0.6 * p.intensity * duration as f64).round() as i64,
            _ => 0,
        };
        let tasks = (0..TASKS)
            .map(|j| {
                let noun = nouns[(i * TASKS + j) % nouns.len()];
                let title = if i * TASKS + j < nouns.len() {
                    TASK_TEMPLATES[j].replace("{noun}", noun)
                } else {
                    format!("{} {}", TASK_TEMPLATES[j].replace("{noun}", noun), i + 1)
                };
                (title, TASK_CATEGORIES[j])
            })
            .collect();
        members.push(Member {
            profile: p,
            name,
            handle,
            start,
            tasks,
        });
    }

    let roster: Vec<Student> = members
        .iter()
        .map(|m| Student {
            id: m.id().clone(),
            display_name: m.name.clone(),
        })
        .collect();
    let mut entries = Vec::new();
    for m in &members {
        for (kind, alias) in [
            (SourceKind::GitAuthor, m.name.clone()),
            (SourceKind::ChatHandle, m.handle.clone()),
            (SourceKind::MeetingName, m.name.clone()),
            (SourceKind::TaskAssignee, m.id().to_string()),
            (SourceKind::PaName, m.name.clone()),
        ] {
            entries.push(IdentityEntry {
                alias,
                source_kind: kind,
                student: m.id().clone(),
            });
        }
    }
    let identities = IdentityMap::new(entries)?;

    // commits, text and media
    let mut commits = Vec::new();
    let mut text_artifacts = Vec::new();
    let mut media_artifacts = Vec::new();
    for m in &members {
        let volume = m.archetype().volume(m.intensity());
        let count = (COMMITS * volume).round() as usize;
        for (k, offset) in symmetric_offsets(m.start, duration, count).into_iter().enumerate() {
            let noun = pick(&mut rng, &nouns);
            let message = fill(pick(&mut rng, COMMIT_MESSAGES), noun, "");
            commits.push(CommitRecord {
                hash: hash(&mut rng),
                author_alias: m.name.clone(),
                author: Some(m.id().clone()),
                timestamp: at(&window, offset),
                lines_added: 40,
                lines_deleted: 10,
                files: vec![format!("src/{}_{}.py", m.id(), k % 3)],
                message,
                out_of_window: false,
            });
        }

        let sentences = (NOTE_SENTENCES * volume).round() as usize;
        let per_file = NOTE_SENTENCES as usize;
        for (f, chunk_start) in (0..sentences).step_by(per_file).enumerate() {
            let n = per_file.min(sentences - chunk_start);
            let mut body = String::new();
            for s in 0..n {
                let noun = pick(&mut rng, &nouns);
                body.push_str(&fill(pick(&mut rng, NOTE_SENTENCES_POOL), noun, ""));
                body.push(if s % 5 == 4 { '\n' } else { ' ' });
            }
            let body = body.trim_end().to_string() + "\n";
            text_artifacts.push(TextArtifact {
                path: format!("text/{}-notes-{}.md", m.id(), f + 1),
                kind: ArtifactKind::Prose,
                per_author_spans: vec![AuthorSpan {
                    student: m.id().clone(),
                    word_count: body.split_whitespace().count() as u64,
                    char_count: body.chars().count() as u64,
                }],
                body,
            });
        }

        let files = volume.round() as usize;
        for f in 0..files {
            let noun = pick(&mut rng, &nouns);
            let body = format!(
                "def summarise_{noun}(values):\n    total = 0\n    for value in values:\n        total += value\n    return total / max(len(values), 1)\n"
            );
            text_artifacts.push(TextArtifact {
                path: format!("text/code/{}_{}.py", m.id(), f + 1),
                kind: ArtifactKind::Code,
                per_author_spans: vec![AuthorSpan {
                    student: m.id().clone(),
                    word_count: body.split_whitespace().count() as u64,
                    char_count: body.chars().count() as u64,
                }],
                body,
            });
            media_artifacts.push(MediaArtifact {
                path: format!("media/{}-figure-{}.png", m.id(), f + 1),
                author: m.id().clone(),
                kind: MediaKind::Image,
                size_bytes: 1024,
                duration_seconds: None,
                page_count: None,
            });
        }
    }

    // chat rounds, with task completions announced in chat
    let round_at = |r: usize| day + (r as i64) * (7 * day / 2);
    let mut done_at: BTreeMap<(usize, usize), Timestamp> = BTreeMap::new();
    let mut due_at: BTreeMap<(usize, usize), Timestamp> = BTreeMap::new();
    let done_rounds: Vec<Vec<usize>> = members
        .iter()
        .map(|m| {
            let active: Vec<usize> = (0..ROUNDS).filter(|r| round_at(*r) >= m.start).collect();
            (0..TASKS)
                .map(|j| active[((j + 1) * active.len() / (TASKS + 1)).min(active.len() - 1)])
                .collect()
        })
        .collect();
    let mut chat_messages = Vec::new();
    let mut next_id = 1;
    for r in 0..ROUNDS {
        let t0 = round_at(r);
        let mut order: Vec<usize> = (0..members.len())
            .filter(|&i| members[i].takes_part(r, ROUNDS, t0))
            .collect();
        let len = order.len();
        if len > 0 {
            order.rotate_left(r % len);
        }
        let clique_round = |i: usize| {
            members[i].archetype() == Archetype::CliqueMember
                && (r as f64 + 0.5) / ROUNDS as f64 <= members[i].intensity()
        };
        let mut previous: Option<(String, usize)> = None;
        let mut last_clique: Option<String> = None;
        for (pos, &i) in order.iter().enumerate() {
            let m = &members[i];
            let ts = at(&window, t0 + 30 * 60 * pos as i64);
            let negative = m.archetype() == Archetype::PoorCommunicator
                && (r as f64 + 0.5) / ROUNDS as f64 <= m.intensity();
            let eval_pool = if negative { NEGATIVE } else { POSITIVE };
            let task = done_rounds[i].iter().position(|&dr| dr == r);
            let text = match task {
                Some(j) => {
                    done_at.insert((i, j), ts);
                    format!(
                        "Done: {}\n{}",
                        m.tasks[j].0,
                        fill("That was {eval}.", "", pick(&mut rng, eval_pool))
                    )
                }
                None => {
                    let mut parts = Vec::new();
                    for _ in 0..EVALUATIONS {
                        let noun = pick(&mut rng, &nouns);
                        let eval = pick(&mut rng, eval_pool);
                        parts.push(fill(pick(&mut rng, EVALUATIVE), noun, eval));
                    }
                    let noun = pick(&mut rng, &nouns);
                    parts.push(fill(pick(&mut rng, NEUTRAL_CHAT), noun, ""));
                    parts.join(" ")
                }
            };
            let reply_to = if clique_round(i) {
                last_clique.clone()
            } else {
                previous.as_ref().map(|(id, _)| id.clone())
            };
            let id = format!("c{next_id:04}");
            next_id += 1;
            chat_messages.push(ChatMessage {
                id: id.clone(),
                sender_alias: m.handle.clone(),
                sender: Some(m.id().clone()),
                timestamp: ts,
                text,
                reply_to,
                mentions: Vec::new(),
                mentioned: Vec::new(),
                channel: "general".into(),
                out_of_window: false,
            });
            if m.archetype() == Archetype::CliqueMember {
                last_clique = Some(id.clone());
            }
            previous = Some((id, i));
        }
        for (i, rounds) in done_rounds.iter().enumerate() {
            for (j, dr) in rounds.iter().enumerate() {
                if *dr == r {
                    due_at.insert((i, j), at(&window, t0 + day));
                }
            }
        }
    }

    let meetings: Vec<MeetingRecord> = (0..MEETINGS)
        .map(|w| {
            let start = day * 7 / 2 + (w as i64) * 7 * day;
            let attendees: Vec<&Member> = members.iter().filter(|m| m.takes_part(w, MEETINGS, start)).collect();
            let mut minutes = format!("Weekly sync {}.\n", w + 1);
            if w < TASKS {
                for m in &members {
                    let (title, cat) = &m.tasks[w];
                    minutes.push_str(&format!("Task @{} [{}]: {}\n", m.id(), cat, title));
                }
            }
            minutes.push_str(&format!("Notes: we went over the {} plan.\n", nouns[w % nouns.len()]));
            MeetingRecord {
                id: format!("m{:02}", w + 1),
                start: at(&window, start),
                duration_minutes: 60.0,
                attendee_aliases: attendees.iter().map(|m| m.name.clone()).collect(),
                attendees: attendees.iter().map(|m| m.id().clone()).collect(),
                minutes_text: minutes,
                out_of_window: false,
            }
        })
        .collect();

    let mut tasks = Vec::new();
    for (i, m) in members.iter().enumerate() {
        for (j, (title, category)) in m.tasks.iter().enumerate() {
            let completed = done_at.get(&(i, j)).copied();
            tasks.push(TaskRecord {
                id: format!("t-{}-{}", m.id(), j + 1),
                title: title.clone(),
                description: String::new(),
                assignee_alias: Some(m.id().to_string()),
                assignee: Some(m.id().clone()),
                created: at(&window, day / 2),
                due: due_at.get(&(i, j)).copied(),
                completed_at: completed,
                status: if completed.is_some() { TaskStatus::Done } else { TaskStatus::Open },
                category: *category,
                out_of_window: false,
            });
        }
    }

    // the loader's orderings, so that a written bundle reloads equal
    commits.sort_by(|a, b| (a.timestamp, &a.hash).cmp(&(b.timestamp, &b.hash)));
    text_artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    media_artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let task_description = format!(
        "Build a small learning-analytics tool as a team.\n\n{}\n",
        GOALS.iter().map(|g| format!("Goal: {g}")).collect::<Vec<_>>().join("\n")
    );
    let bundle = EvidenceBundle {
        project_id: format!("synth-{seed}"),
        project_window: window,
        team_grade: 75.0,
        roster,
        allow_self_assessment: false,
        task_description,
        commits,
        text_artifacts,
        media_artifacts,
        chat_messages,
        emails: Vec::new(),
        meetings,
        tasks,
        pa_items: Vec::new(),
        context_records: Vec::new(),
        unresolved_aliases: Vec::new(),
    };
    let labels = Labels {
        seed,
        profiles: profiles.to_vec(),
        expected_markers: expected_markers(profiles, &WeightConfig::default()),
    };
    Ok(SynthOutput {
        bundle,
        identities,
        labels,
    })
}

/// Writes the bundle directory and `labels.json` into `dir`.
pub fn write_synth(out: &SynthOutput, dir: &Path) -> Result<(), SynthError> {
    write_bundle_dir(&out.bundle, &out.identities, dir)?;
    let mut labels = serde_json::to_string_pretty(&out.labels)?;
    labels.push('\n');
    std::fs::write(dir.join("labels.json"), labels)?;
    Ok(())
}

pub fn read_profiles(json: &str) -> Result<Vec<BehaviourProfile>, serde_json::Error> {
    serde_json::from_str(json)
}

/// One archetype at full intensity plus `balanced` balanced members, ids
/// `s1..`.
pub fn team_with(archetype: Archetype, balanced: usize) -> Vec<BehaviourProfile> {
    std::iter::once(archetype)
        .chain(std::iter::repeat_n(Archetype::Balanced, balanced))
        .enumerate()
        .map(|(i, a)| BehaviourProfile {
            student: StudentId::new(format!("s{}", i + 1)),
            display_name: None,
            archetype: a,
            intensity: 1.0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_layout() {
        let o = symmetric_offsets(0, 100, 4);
        assert_eq!(o, vec![12, 37, 63, 88]);
        let o = symmetric_offsets(10, 20, 1);
        assert_eq!(o, vec![15]);
        assert!(symmetric_offsets(0, 10, 0).is_empty());
    }

    #[test]
    fn planted_labels() {
        let cfg = WeightConfig::default();
        assert!(expected_markers(&team_with(Archetype::Balanced, 2), &cfg).is_empty());
        let loafer = expected_markers(&team_with(Archetype::Loafer, 2), &cfg);
        assert_eq!(
            loafer,
            vec![ExpectedMarker {
                benchmark: Benchmark::Quantity,
                scenario: Scenario::B,
                student: StudentId::new("s1")
            }]
        );
        // a lone zero among three equals reaches a Gini of only 0.25
        assert!(expected_markers(&team_with(Archetype::Loafer, 3), &cfg).is_empty());
        let hog = expected_markers(&team_with(Archetype::Hog, 2), &cfg);
        assert_eq!(hog[0].scenario, Scenario::A);
        assert_eq!(expected_markers(&team_with(Archetype::Ghost, 2), &cfg).len(), 3);
    }

    #[test]
    fn rejects_bad_profiles() {
        let one = &team_with(Archetype::Balanced, 0);
        assert!(matches!(generate(one, 1, default_window()), Err(SynthError::TooFewProfiles(1))));
        let mut dup = team_with(Archetype::Balanced, 1);
        dup[1].student = dup[0].student.clone();
        assert!(matches!(generate(&dup, 1, default_window()), Err(SynthError::DuplicateStudent(_))));
        let mut hot = team_with(Archetype::Hog, 1);
        hot[0].intensity = 1.5;
        assert!(matches!(generate(&hot, 1, default_window()), Err(SynthError::Intensity(..))));
    }
}
