use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use chrono::TimeDelta;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use assess_core::{AssessmentSession, BankError, EducationLevel, LearnerProfile, QuestionBank, TopicId};

use crate::auth::{Claims, Credential, Role, TokenError, TokenSigner};
use crate::clock::Clock;
use crate::error::ApiError;
use crate::store::{Store, StoreError, UserRecord};

pub type SharedState = Arc<AppState>;

/// A session held in memory between creation and submission.
#[derive(Debug)]
pub struct LiveSession {
    pub owner: String,
    pub role: Role,
    /// Bank snapshot the questions were drawn from; grading uses the same one.
    pub bank: Arc<QuestionBank>,
    pub session: AssessmentSession,
    pub clusters: Vec<TopicId>,
}

pub struct AppState {
    store: Arc<dyn Store>,
    clock: Arc<dyn Clock>,
    signer: TokenSigner,
    rng: Mutex<ChaCha8Rng>,
    bank: RwLock<Arc<QuestionBank>>,
    bank_writer: Mutex<()>,
    users: RwLock<BTreeMap<String, UserRecord>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<LiveSession>>>>,
    learner_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    token_ttl: TimeDelta,
}

impl AppState {
    /// Loads the bank and users from `store`. `seed` drives session ids,
    /// selection seeds and credential salts.
    pub fn new(
        store: Arc<dyn Store>,
        clock: Arc<dyn Clock>,
        token_secret: &[u8],
        seed: u64,
    ) -> Result<Self, StoreError> {
        let bank = store.load_bank()?.unwrap_or_default();
        let users = store.load_users()?.into_iter().map(|u| (u.username.clone(), u)).collect();
        Ok(Self {
            store,
            clock,
            signer: TokenSigner::new(token_secret),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            bank: RwLock::new(Arc::new(bank)),
            bank_writer: Mutex::new(()),
            users: RwLock::new(users),
            sessions: Mutex::new(HashMap::new()),
            learner_locks: Mutex::new(HashMap::new()),
            token_ttl: TimeDelta::hours(12),
        })
    }

    pub fn store(&self) -> &dyn Store {
        self.store.as_ref()
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    pub fn next_u64(&self) -> u64 {
        self.rng.lock().expect("rng lock").next_u64()
    }

    pub fn new_id(&self, prefix: &str) -> String {
        format!("{prefix}-{:016x}", self.next_u64())
    }

    pub fn issue_token(&self, sub: &str, role: Role) -> String {
        let exp = (self.clock.now() + self.token_ttl).timestamp();
        self.signer.issue(&Claims { sub: sub.to_owned(), role, exp })
    }

    pub fn verify_token(&self, token: &str) -> Result<Claims, TokenError> {
        self.signer.verify(token, self.clock.now())
    }

    /// Current bank snapshot. Readers never observe a half-applied mutation.
    pub fn snapshot(&self) -> Arc<QuestionBank> {
        self.bank.read().expect("bank lock").clone()
    }

    /// Applies `f` to a copy of the bank, persists it and publishes it.
    /// Mutations are serialized; on error nothing changes.
    pub fn mutate_bank<T>(
        &self,
        f: impl FnOnce(&mut QuestionBank) -> Result<T, BankError>,
    ) -> Result<(T, u64), ApiError> {
        let _writer = self.bank_writer.lock().expect("writer lock");
        let mut next = (*self.snapshot()).clone();
        let out = f(&mut next)?;
        self.store.save_bank(&next)?;
        let version = next.version();
        *self.bank.write().expect("bank lock") = Arc::new(next);
        Ok((out, version))
    }

    pub fn user(&self, username: &str) -> Option<UserRecord> {
        self.users.read().expect("users lock").get(username).cloned()
    }

    pub fn users(&self) -> Vec<UserRecord> {
        self.users.read().expect("users lock").values().cloned().collect()
    }

    /// Adds a user and persists the user list. `None` if the name is taken.
    pub fn add_user(
        &self,
        username: &str,
        password: &str,
        role: Role,
        education_level: EducationLevel,
    ) -> Result<Option<UserRecord>, StoreError> {
        let mut users = self.users.write().expect("users lock");
        if users.contains_key(username) {
            return Ok(None);
        }
        let credential = Credential::new(password, &mut *self.rng.lock().expect("rng lock"));
        let record = UserRecord { username: username.to_owned(), role, education_level, credential };
        users.insert(username.to_owned(), record.clone());
        let all: Vec<UserRecord> = users.values().cloned().collect();
        if let Err(e) = self.store.save_users(&all) {
            users.remove(username);
            return Err(e);
        }
        Ok(Some(record))
    }

    /// Creates the admin account unless a user with that name exists.
    pub fn bootstrap_admin(&self, username: &str, password: &str) -> Result<(), StoreError> {
        let level = EducationLevel::new(5).expect("rank in range");
        self.add_user(username, password, Role::Admin, level).map(|_| ())
    }

    /// Stored profile, or a fresh one for a registered user who has none yet.
    pub fn profile(&self, username: &str) -> Result<Option<LearnerProfile>, StoreError> {
        if let Some(p) = self.store.load_profile(username)? {
            return Ok(Some(p));
        }
        Ok(self.user(username).map(|u| LearnerProfile::new(u.username, u.education_level)))
    }

    /// Serializes profile updates per learner.
    pub fn learner_lock(&self, username: &str) -> Arc<Mutex<()>> {
        self.learner_locks.lock().expect("locks lock").entry(username.to_owned()).or_default().clone()
    }

    pub fn insert_session(&self, id: String, live: LiveSession) {
        self.sessions.lock().expect("sessions lock").insert(id, Arc::new(Mutex::new(live)));
    }

    pub fn session(&self, id: &str) -> Option<Arc<Mutex<LiveSession>>> {
        self.sessions.lock().expect("sessions lock").get(id).cloned()
    }
}
