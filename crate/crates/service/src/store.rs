//! Persistence for projects, bundle versions and runs.
//!
//! Layout under the data directory:
//!
//! ```text
//! projects/<project_id>/project.json
//! projects/<project_id>/bundles/<digest>/...      unpacked bundle
//! projects/<project_id>/bundles/<digest>.validation.json
//! runs/<run_id>/run.json                          envelope
//! runs/<run_id>/report.json                       body, written once
//! runs/<run_id>/transcript.jsonl
//! ```
//!
//! Bundle versions are named by the digest of the loaded bundle, so
//! uploading the same evidence twice yields the same version.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use equiscope_core::evidence::{load_bundle_with_default_identities, EvidenceBundle, FileCount, ParseIssue};
use equiscope_core::pipeline::RunEnvelope;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0} already exists")]
    Conflict(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("storage failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for StoreError {
    fn from(e: serde_json::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleVersion {
    pub version: String,
    pub uploaded_at: String,
    /// True when the bundle loaded without a single record issue.
    pub valid: bool,
    pub issue_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub project_id: String,
    /// Manifest as submitted.
    pub manifest: serde_json::Value,
    pub created_at: String,
    pub bundle_versions: Vec<BundleVersion>,
}

impl ProjectRecord {
    /// Most recently uploaded valid version.
    pub fn latest_valid(&self) -> Option<&BundleVersion> {
        self.bundle_versions.iter().rev().find(|v| v.valid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub project_id: String,
    pub version: String,
    pub valid: bool,
    /// The same content had been uploaded before.
    pub existing: bool,
    pub roster_size: usize,
    pub issues: Vec<ParseIssue>,
    pub counts: BTreeMap<String, FileCount>,
}

/// Storage interface; [`FileStore`] is the shipped implementation.
pub trait Store: Send + Sync {
    fn create_project(&self, record: &ProjectRecord) -> Result<(), StoreError>;
    fn project(&self, id: &str) -> Result<ProjectRecord, StoreError>;
    fn projects(&self) -> Result<Vec<ProjectRecord>, StoreError>;
    /// Unpacks a `.tar.gz` bundle archive, validates it and records the
    /// version on the project.
    fn put_bundle(&self, project: &str, archive: &[u8], now: &str) -> Result<ValidationReport, StoreError>;
    fn load_bundle(&self, project: &str, version: &str) -> Result<EvidenceBundle, StoreError>;
    fn next_run_id(&self) -> Result<String, StoreError>;
    fn put_run(&self, run: &RunEnvelope) -> Result<(), StoreError>;
    fn run(&self, id: &str) -> Result<RunEnvelope, StoreError>;
    /// Runs of one project in creation order.
    fn runs(&self, project: &str) -> Result<Vec<RunEnvelope>, StoreError>;
    /// Writes the report body; refuses to overwrite.
    fn put_report(&self, run_id: &str, body: &str) -> Result<String, StoreError>;
    fn report(&self, run_id: &str) -> Result<String, StoreError>;
    fn transcript_path(&self, run_id: &str) -> Result<PathBuf, StoreError>;
}

pub struct FileStore {
    root: PathBuf,
    // serialises read-modify-write of project and run records
    lock: Mutex<()>,
}

pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().ok_or_else(|| StoreError::Io(format!("{} has no parent", path.display())))?;
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| StoreError::Io(e.to_string()))?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => StoreError::NotFound(what.to_string()),
        _ => StoreError::Io(e.to_string()),
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, StoreError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Directory holding `manifest.json`: the archive root or its single
/// top-level directory.
fn bundle_root(dir: &Path) -> Option<PathBuf> {
    if dir.join("manifest.json").is_file() {
        return Some(dir.to_path_buf());
    }
    let subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    match subdirs.as_slice() {
        [only] if only.join("manifest.json").is_file() => Some(only.clone()),
        _ => None,
    }
}

impl FileStore {
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(root.join("projects"))?;
        fs::create_dir_all(root.join("runs"))?;
        Ok(Self {
            root: root.to_path_buf(),
            lock: Mutex::new(()),
        })
    }

    fn guard(&self) -> std::sync::MutexGuard<'_, ()> {
        self.lock.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn project_dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::Invalid(format!("project id {id:?}")));
        }
        Ok(self.root.join("projects").join(id))
    }

    fn run_dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::Invalid(format!("run id {id:?}")));
        }
        Ok(self.root.join("runs").join(id))
    }

    fn write_project(&self, record: &ProjectRecord) -> Result<(), StoreError> {
        let path = self.project_dir(&record.project_id)?.join("project.json");
        write_atomic(&path, &to_json(record)?)
    }
}

impl Store for FileStore {
    fn create_project(&self, record: &ProjectRecord) -> Result<(), StoreError> {
        let _g = self.guard();
        let dir = self.project_dir(&record.project_id)?;
        if dir.join("project.json").exists() {
            return Err(StoreError::Conflict(format!("project {}", record.project_id)));
        }
        self.write_project(record)
    }

    fn project(&self, id: &str) -> Result<ProjectRecord, StoreError> {
        read_json(&self.project_dir(id)?.join("project.json"), &format!("project {id}"))
    }

    fn projects(&self) -> Result<Vec<ProjectRecord>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join("projects"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();
        ids.iter().map(|id| self.project(id)).collect()
    }

    fn put_bundle(&self, project: &str, archive: &[u8], now: &str) -> Result<ValidationReport, StoreError> {
        let bundles = self.project_dir(project)?.join("bundles");
        self.project(project)?;
        fs::create_dir_all(&bundles)?;
        let staging = tempfile::tempdir_in(&bundles)?;
        let mut raw = Vec::new();
        flate2::read::GzDecoder::new(archive)
            .read_to_end(&mut raw)
            .map_err(|e| StoreError::Invalid(format!("archive is not gzip: {e}")))?;
        // entries escaping the target directory are skipped by unpack
        tar::Archive::new(raw.as_slice())
            .unpack(staging.path())
            .map_err(|e| StoreError::Invalid(format!("archive is not a tar file: {e}")))?;
        let root = bundle_root(staging.path())
            .ok_or_else(|| StoreError::Invalid("archive holds no manifest.json".into()))?;
        let load = load_bundle_with_default_identities(&root).map_err(|e| StoreError::Invalid(e.to_string()))?;
        let version = load.bundle.digest();
        let report = ValidationReport {
            project_id: project.to_string(),
            version: version.clone(),
            valid: load.is_clean(),
            existing: false,
            roster_size: load.bundle.roster.len(),
            issues: load.issues.clone(),
            counts: load.counts.clone(),
        };

        let _g = self.guard();
        let mut record = self.project(project)?;
        let target = bundles.join(&version);
        let existing = target.exists();
        if !existing {
            fs::rename(&root, &target)?;
            write_atomic(&bundles.join(format!("{version}.validation.json")), &to_json(&report)?)?;
        }
        if !record.bundle_versions.iter().any(|v| v.version == version) {
            record.bundle_versions.push(BundleVersion {
                version: version.clone(),
                uploaded_at: now.to_string(),
                valid: report.valid,
                issue_count: report.issues.len(),
            });
            self.write_project(&record)?;
        }
        Ok(ValidationReport { existing, ..report })
    }

    fn load_bundle(&self, project: &str, version: &str) -> Result<EvidenceBundle, StoreError> {
        if !valid_id(version) {
            return Err(StoreError::Invalid(format!("bundle version {version:?}")));
        }
        let dir = self.project_dir(project)?.join("bundles").join(version);
        if !dir.is_dir() {
            return Err(StoreError::NotFound(format!("bundle version {version}")));
        }
        let load = load_bundle_with_default_identities(&dir).map_err(|e| StoreError::Io(e.to_string()))?;
        if load.bundle.digest() != version {
            return Err(StoreError::Io(format!("bundle version {version} no longer matches its digest")));
        }
        Ok(load.bundle)
    }

    fn next_run_id(&self) -> Result<String, StoreError> {
        let _g = self.guard();
        let n = fs::read_dir(self.root.join("runs"))?.count() + 1;
        let id = format!("run-{n:06}");
        fs::create_dir_all(self.root.join("runs").join(&id))?;
        Ok(id)
    }

    fn put_run(&self, run: &RunEnvelope) -> Result<(), StoreError> {
        let _g = self.guard();
        write_atomic(&self.run_dir(&run.run_id)?.join("run.json"), &to_json(run)?)
    }

    fn run(&self, id: &str) -> Result<RunEnvelope, StoreError> {
        read_json(&self.run_dir(id)?.join("run.json"), &format!("run {id}"))
    }

    fn runs(&self, project: &str) -> Result<Vec<RunEnvelope>, StoreError> {
        self.project(project)?;
        let mut ids: Vec<String> = fs::read_dir(self.root.join("runs"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();
        let mut out = Vec::new();
        for id in ids {
            match self.run(&id) {
                Ok(r) if r.project_id == project => out.push(r),
                // a run directory is created before its first record
                Ok(_) | Err(StoreError::NotFound(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    fn put_report(&self, run_id: &str, body: &str) -> Result<String, StoreError> {
        let path = self.run_dir(run_id)?.join("report.json");
        if path.exists() {
            return Err(StoreError::Conflict(format!("report of {run_id}")));
        }
        write_atomic(&path, body.as_bytes())?;
        Ok(format!("runs/{run_id}/report.json"))
    }

    fn report(&self, run_id: &str) -> Result<String, StoreError> {
        fs::read_to_string(self.run_dir(run_id)?.join("report.json"))
            .map_err(|_| StoreError::NotFound(format!("report of {run_id}")))
    }

    fn transcript_path(&self, run_id: &str) -> Result<PathBuf, StoreError> {
        Ok(self.run_dir(run_id)?.join("transcript.jsonl"))
    }
}
