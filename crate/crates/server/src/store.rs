//! Persistence behind a small storage interface.
//!
//! The file layout under the data directory:
//!
//! * `bank.json`, the canonical bank document, and `bank.version`
//! * `users.json`
//! * `learners/<id>.json`, one profile per registered learner
//! * `sessions.log`, append-only JSON lines of run events

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use assess_core::{export_bank, import_bank, EducationLevel, LearnerProfile, QuestionBank};

use crate::auth::{Credential, Role};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} is corrupt: {message}")]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub username: String,
    pub role: Role,
    pub education_level: EducationLevel,
    pub credential: Credential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunEventKind {
    Created,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub session_id: String,
    /// Username or guest token subject.
    pub taker: String,
    pub role: Role,
    pub event: RunEventKind,
    pub at: DateTime<Utc>,
}

pub trait Store: Send + Sync {
    fn load_bank(&self) -> Result<Option<QuestionBank>, StoreError>;
    fn save_bank(&self, bank: &QuestionBank) -> Result<(), StoreError>;
    fn load_users(&self) -> Result<Vec<UserRecord>, StoreError>;
    fn save_users(&self, users: &[UserRecord]) -> Result<(), StoreError>;
    fn load_profile(&self, learner: &str) -> Result<Option<LearnerProfile>, StoreError>;
    fn save_profile(&self, profile: &LearnerProfile) -> Result<(), StoreError>;
    fn append_run(&self, entry: &RunLogEntry) -> Result<(), StoreError>;
    fn runs(&self) -> Result<Vec<RunLogEntry>, StoreError>;
}

#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

fn corrupt(path: &Path, message: impl ToString) -> StoreError {
    StoreError::Corrupt { path: path.to_owned(), message: message.to_string() }
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let learners = root.join("learners");
        fs::create_dir_all(&learners).map_err(io_err(&learners))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn read_optional(&self, path: &Path) -> Result<Option<String>, StoreError> {
        match fs::read_to_string(path) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(path)(e)),
        }
    }

    /// Writes through a temporary file so readers never see a partial document.
    fn write_atomic(&self, path: &Path, contents: &[u8]) -> Result<(), StoreError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, contents).map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))
    }

    fn profile_path(&self, learner: &str) -> PathBuf {
        self.root.join("learners").join(format!("{learner}.json"))
    }
}

impl Store for FileStore {
    fn load_bank(&self) -> Result<Option<QuestionBank>, StoreError> {
        let path = self.root.join("bank.json");
        let Some(text) = self.read_optional(&path)? else {
            return Ok(None);
        };
        let bank = import_bank(&text).map_err(|e| corrupt(&path, e))?;
        let version_path = self.root.join("bank.version");
        let version = match self.read_optional(&version_path)? {
            Some(v) => v.trim().parse().map_err(|e| corrupt(&version_path, e))?,
            None => 0,
        };
        Ok(Some(bank.with_version(version)))
    }

    fn save_bank(&self, bank: &QuestionBank) -> Result<(), StoreError> {
        self.write_atomic(&self.root.join("bank.json"), export_bank(bank).as_bytes())?;
        self.write_atomic(&self.root.join("bank.version"), format!("{}\n", bank.version()).as_bytes())
    }

    fn load_users(&self) -> Result<Vec<UserRecord>, StoreError> {
        let path = self.root.join("users.json");
        match self.read_optional(&path)? {
            Some(text) => serde_json::from_str(&text).map_err(|e| corrupt(&path, e)),
            None => Ok(Vec::new()),
        }
    }

    fn save_users(&self, users: &[UserRecord]) -> Result<(), StoreError> {
        let text = serde_json::to_vec_pretty(users).expect("users serialize");
        self.write_atomic(&self.root.join("users.json"), &text)
    }

    fn load_profile(&self, learner: &str) -> Result<Option<LearnerProfile>, StoreError> {
        let path = self.profile_path(learner);
        match self.read_optional(&path)? {
            Some(text) => serde_json::from_str(&text).map(Some).map_err(|e| corrupt(&path, e)),
            None => Ok(None),
        }
    }

    fn save_profile(&self, profile: &LearnerProfile) -> Result<(), StoreError> {
        let text = serde_json::to_vec_pretty(profile).expect("profiles serialize");
        self.write_atomic(&self.profile_path(&profile.learner_id), &text)
    }

    fn append_run(&self, entry: &RunLogEntry) -> Result<(), StoreError> {
        let path = self.root.join("sessions.log");
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        let mut line = serde_json::to_vec(entry).expect("log entries serialize");
        line.push(b'\n');
        file.write_all(&line).map_err(io_err(&path))
    }

    fn runs(&self) -> Result<Vec<RunLogEntry>, StoreError> {
        let path = self.root.join("sessions.log");
        let Some(text) = self.read_optional(&path)? else {
            return Ok(Vec::new());
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| corrupt(&path, e)))
            .collect()
    }
}

#[derive(Debug, Default)]
struct Memory {
    bank: Option<QuestionBank>,
    users: Vec<UserRecord>,
    profiles: BTreeMap<String, LearnerProfile>,
    runs: Vec<RunLogEntry>,
    profile_writes: usize,
}

/// Volatile store for tests and throwaway servers.
#[derive(Debug, Default)]
pub struct MemoryStore {
    inner: Mutex<Memory>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_bank(bank: QuestionBank) -> Self {
        let store = Self::default();
        store.inner.lock().expect("store lock").bank = Some(bank);
        store
    }

    /// Number of profile writes since creation.
    pub fn profile_writes(&self) -> usize {
        self.inner.lock().expect("store lock").profile_writes
    }
}

impl Store for MemoryStore {
    fn load_bank(&self) -> Result<Option<QuestionBank>, StoreError> {
        Ok(self.inner.lock().expect("store lock").bank.clone())
    }

    fn save_bank(&self, bank: &QuestionBank) -> Result<(), StoreError> {
        self.inner.lock().expect("store lock").bank = Some(bank.clone());
        Ok(())
    }

    fn load_users(&self) -> Result<Vec<UserRecord>, StoreError> {
        Ok(self.inner.lock().expect("store lock").users.clone())
    }

    fn save_users(&self, users: &[UserRecord]) -> Result<(), StoreError> {
        self.inner.lock().expect("store lock").users = users.to_vec();
        Ok(())
    }

    fn load_profile(&self, learner: &str) -> Result<Option<LearnerProfile>, StoreError> {
        Ok(self.inner.lock().expect("store lock").profiles.get(learner).cloned())
    }

    fn save_profile(&self, profile: &LearnerProfile) -> Result<(), StoreError> {
        let mut inner = self.inner.lock().expect("store lock");
        inner.profile_writes += 1;
        inner.profiles.insert(profile.learner_id.clone(), profile.clone());
        Ok(())
    }

    fn append_run(&self, entry: &RunLogEntry) -> Result<(), StoreError> {
        self.inner.lock().expect("store lock").runs.push(entry.clone());
        Ok(())
    }

    fn runs(&self) -> Result<Vec<RunLogEntry>, StoreError> {
        Ok(self.inner.lock().expect("store lock").runs.clone())
    }
}
