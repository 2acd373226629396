//! Exact-match identity reconciliation across evidence sources.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EvidenceError, StudentId};

/// Where an alias was observed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    GitAuthor,
    ChatHandle,
    EmailAddress,
    MeetingName,
    TaskAssignee,
    PaName,
}

impl SourceKind {
    pub const ALL: [SourceKind; 6] = [
        SourceKind::GitAuthor,
        SourceKind::ChatHandle,
        SourceKind::EmailAddress,
        SourceKind::MeetingName,
        SourceKind::TaskAssignee,
        SourceKind::PaName,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SourceKind::GitAuthor => "git-author",
            SourceKind::ChatHandle => "chat-handle",
            SourceKind::EmailAddress => "email-address",
            SourceKind::MeetingName => "meeting-name",
            SourceKind::TaskAssignee => "task-assignee",
            SourceKind::PaName => "pa-name",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityEntry {
    pub alias: String,
    pub source_kind: SourceKind,
    pub student: StudentId,
}

/// Mapping of `(alias, source_kind)` pairs onto roster students.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IdentityMap {
    entries: Vec<IdentityEntry>,
    #[serde(skip)]
    index: BTreeMap<(SourceKind, String), StudentId>,
}

#[derive(Deserialize)]
struct IdentityFile {
    #[serde(default)]
    entries: Vec<IdentityEntry>,
}

impl<'de> Deserialize<'de> for IdentityMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = IdentityFile::deserialize(d)?;
        IdentityMap::new(file.entries).map_err(serde::de::Error::custom)
    }
}

impl IdentityMap {
    /// Builds the map, rejecting a pair that points at two different students.
    /// Repeating an identical entry is accepted.
    pub fn new(entries: Vec<IdentityEntry>) -> Result<Self, EvidenceError> {
        let mut index: BTreeMap<(SourceKind, String), StudentId> = BTreeMap::new();
        let mut kept = Vec::with_capacity(entries.len());
        for entry in entries {
            let key = (entry.source_kind, entry.alias.clone());
            match index.get(&key) {
                Some(existing) if existing != &entry.student => {
                    return Err(EvidenceError::ConflictingIdentity {
                        alias: entry.alias,
                        kind: entry.source_kind,
                        first: existing.clone(),
                        second: entry.student,
                    });
                }
                Some(_) => continue,
                None => {
                    index.insert(key, entry.student.clone());
                    kept.push(entry);
                }
            }
        }
        Ok(Self {
            entries: kept,
            index,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[IdentityEntry] {
        &self.entries
    }

    /// Exact `(alias, kind)` lookup. `None` means unresolved.
    pub fn resolve(&self, alias: &str, kind: SourceKind) -> Option<&StudentId> {
        self.index.get(&(kind, alias.to_string()))
    }

    pub fn students(&self) -> BTreeSet<&StudentId> {
        self.index.values().collect()
    }

    /// Aliases of one student under one source kind, in sorted order.
    pub fn aliases_of(&self, student: &StudentId, kind: SourceKind) -> Vec<&str> {
        self.index
            .iter()
            .filter(|((k, _), s)| *k == kind && *s == student)
            .map(|((_, a), _)| a.as_str())
            .collect()
    }
}
