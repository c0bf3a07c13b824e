use std::collections::BTreeMap;

use axum::extract::{FromRequest, Path, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use assess_core::analytics::{engagement_counters, EngagementCounters, RunEvent};
use assess_core::bank::{Body, Stem};
use assess_core::{
    import_bank, select, Answer, AssessmentSession, Difficulty, EducationLevel, KnowledgeLevel, Learner, Question,
    QuestionId, QuestionType, Response, SelectionCriteria, SessionRecord, SessionReport, SessionState, TopicId,
    TopicNode,
};

use crate::auth::{Identity, Role};
use crate::error::ApiError;
use crate::state::{LiveSession, SharedState};
use crate::store::{RunEventKind, RunLogEntry};

/// JSON body extractor whose rejections use the error envelope.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

pub fn router(state: SharedState) -> Router {
    let api = Router::new()
        .route("/auth/register", post(register))
        .route("/auth/login", post(login))
        .route("/auth/guest", post(guest))
        .route("/users", get(list_users).post(create_user))
        .route("/topics", get(list_topics).post(create_topic))
        .route("/topics/{id}", get(get_topic).put(update_topic).delete(delete_topic))
        .route("/questions", get(list_questions).post(create_question))
        .route("/questions/{id}", get(get_question).put(update_question).delete(delete_question))
        .route("/bank", get(export).put(replace_bank))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/answers", post(record_answers))
        .route("/sessions/{id}/submit", post(submit))
        .route("/profile", get(profile))
        .route("/history", get(history))
        .route("/analytics/engagement", get(engagement))
        .fallback(|| async { ApiError::not_found("endpoint") });
    Router::new().nest("/api/v1", api).with_state(state)
}

const MAX_NAME: usize = 64;

fn valid_username(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= MAX_NAME
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.starts_with('.')
}

fn check_credentials(username: &str, password: &str) -> Result<(), ApiError> {
    if !valid_username(username) {
        return Err(ApiError::bad_request(
            "username must be 1-64 characters of letters, digits, `_`, `-` or `.`, not starting with `.`",
        ));
    }
    if password.chars().count() < 8 {
        return Err(ApiError::bad_request("password must have at least 8 characters"));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterRequest {
    pub username: String,
    pub password: String,
    pub education_level: EducationLevel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoginRequest {
    pub username: String,
    pub password: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TokenResponse {
    pub token: String,
    pub username: String,
    pub role: Role,
}

async fn register(
    State(state): State<SharedState>,
    ApiJson(req): ApiJson<RegisterRequest>,
) -> Result<(StatusCode, Json<TokenResponse>), ApiError> {
    check_credentials(&req.username, &req.password)?;
    state
        .add_user(&req.username, &req.password, Role::Student, req.education_level)?
        .ok_or_else(|| ApiError::conflict(format!("username `{}` is taken", req.username)))?;
    let token = state.issue_token(&req.username, Role::Student);
    Ok((StatusCode::CREATED, Json(TokenResponse { token, username: req.username, role: Role::Student })))
}

async fn login(
    State(state): State<SharedState>,
    ApiJson(req): ApiJson<LoginRequest>,
) -> Result<Json<TokenResponse>, ApiError> {
    let user = state
        .user(&req.username)
        .filter(|u| u.credential.verify(&req.password))
        .ok_or_else(|| ApiError::unauthenticated("unknown user or wrong password"))?;
    let token = state.issue_token(&user.username, user.role);
    Ok(Json(TokenResponse { token, username: user.username, role: user.role }))
}

/// Guests get a short-lived token with a random subject; nothing is stored.
async fn guest(State(state): State<SharedState>) -> Json<TokenResponse> {
    let sub = state.new_id("guest");
    let token = state.issue_token(&sub, Role::Guest);
    Json(TokenResponse { token, username: sub, role: Role::Guest })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UserView {
    pub username: String,
    pub role: Role,
    pub education_level: EducationLevel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateUserRequest {
    pub username: String,
    pub password: String,
    pub role: Role,
    #[serde(default)]
    pub education_level: Option<EducationLevel>,
}

async fn list_users(State(state): State<SharedState>, who: Identity) -> Result<Json<Vec<UserView>>, ApiError> {
    who.require_admin()?;
    let users = state
        .users()
        .into_iter()
        .map(|u| UserView { username: u.username, role: u.role, education_level: u.education_level })
        .collect();
    Ok(Json(users))
}

async fn create_user(
    State(state): State<SharedState>,
    who: Identity,
    ApiJson(req): ApiJson<CreateUserRequest>,
) -> Result<(StatusCode, Json<UserView>), ApiError> {
    who.require_admin()?;
    check_credentials(&req.username, &req.password)?;
    if req.role == Role::Guest {
        return Err(ApiError::bad_request("guest accounts cannot be registered"));
    }
    let level = req.education_level.unwrap_or(EducationLevel::new(3).expect("rank in range"));
    let user = state
        .add_user(&req.username, &req.password, req.role, level)?
        .ok_or_else(|| ApiError::conflict(format!("username `{}` is taken", req.username)))?;
    Ok((
        StatusCode::CREATED,
        Json(UserView { username: user.username, role: user.role, education_level: user.education_level }),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Mutation<T> {
    #[serde(flatten)]
    pub item: T,
    pub version: u64,
}

async fn list_topics(State(state): State<SharedState>, _who: Identity) -> Json<Vec<TopicNode>> {
    Json(state.snapshot().topics().iter().cloned().collect())
}

async fn get_topic(
    State(state): State<SharedState>,
    _who: Identity,
    Path(id): Path<String>,
) -> Result<Json<TopicNode>, ApiError> {
    let bank = state.snapshot();
    let node = bank.topics().get(&id).ok_or_else(|| ApiError::not_found(format_args!("topic `{id}`")))?;
    Ok(Json(node.clone()))
}

async fn create_topic(
    State(state): State<SharedState>,
    who: Identity,
    ApiJson(node): ApiJson<TopicNode>,
) -> Result<(StatusCode, Json<Mutation<TopicNode>>), ApiError> {
    who.require_author()?;
    let (_, version) = state.mutate_bank(|bank| bank.add_topic(node.clone()))?;
    Ok((StatusCode::CREATED, Json(Mutation { item: node, version })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicUpdate {
    pub name: String,
    #[serde(default)]
    pub parent: Option<TopicId>,
}

/// Replaces a topic's name and parent. Omitting `parent` makes it a root.
async fn update_topic(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
    ApiJson(update): ApiJson<TopicUpdate>,
) -> Result<Json<Mutation<TopicNode>>, ApiError> {
    who.require_author()?;
    let (node, version) = state.mutate_bank(|bank| {
        let current = bank.topics().get(&id).cloned().ok_or_else(|| assess_core::BankError::UnknownTopic {
            topic: id.as_str().into(),
            question: None,
        })?;
        if current.parent != update.parent {
            bank.reparent_topic(&id, update.parent.clone())?;
        }
        if current.name != update.name {
            bank.rename_topic(&id, update.name.clone())?;
        }
        Ok(bank.topics().get(&id).cloned().expect("topic still present"))
    })?;
    Ok(Json(Mutation { item: node, version }))
}

async fn delete_topic(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
) -> Result<Json<Mutation<TopicNode>>, ApiError> {
    who.require_author()?;
    let (node, version) = state.mutate_bank(|bank| bank.remove_topic(&id))?;
    Ok(Json(Mutation { item: node, version }))
}

async fn list_questions(State(state): State<SharedState>, who: Identity) -> Result<Json<Vec<Question>>, ApiError> {
    who.require_author()?;
    Ok(Json(state.snapshot().questions().cloned().collect()))
}

async fn get_question(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
) -> Result<Json<Question>, ApiError> {
    who.require_author()?;
    let bank = state.snapshot();
    let q = bank.question(&id).ok_or_else(|| ApiError::not_found(format_args!("question `{id}`")))?;
    Ok(Json(q.clone()))
}

/// Question documents are decoded after the role check so students learn nothing
/// about validation from a forbidden request.
fn decode_question(value: Value) -> Result<Question, ApiError> {
    serde_json::from_value(value).map_err(|e| {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", e.to_string())
            .with_details(json!([{ "code": "malformed_question", "message": e.to_string() }]))
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuestionMutation {
    pub id: QuestionId,
    pub version: u64,
}

async fn create_question(
    State(state): State<SharedState>,
    who: Identity,
    ApiJson(value): ApiJson<Value>,
) -> Result<(StatusCode, Json<QuestionMutation>), ApiError> {
    who.require_author()?;
    let q = decode_question(value)?;
    let id = q.id.clone();
    let (_, version) = state.mutate_bank(|bank| bank.add_question(q))?;
    Ok((StatusCode::CREATED, Json(QuestionMutation { id, version })))
}

async fn update_question(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
    ApiJson(value): ApiJson<Value>,
) -> Result<Json<QuestionMutation>, ApiError> {
    who.require_author()?;
    let q = decode_question(value)?;
    if q.id.as_str() != id {
        return Err(ApiError::bad_request(format!("body id `{}` does not match path id `{id}`", q.id)));
    }
    let (_, version) = state.mutate_bank(|bank| bank.replace_question(q))?;
    Ok(Json(QuestionMutation { id: id.into(), version }))
}

async fn delete_question(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
) -> Result<Json<QuestionMutation>, ApiError> {
    who.require_author()?;
    let (_, version) = state.mutate_bank(|bank| bank.remove_question(&id))?;
    Ok(Json(QuestionMutation { id: id.into(), version }))
}

/// Canonical bank document, the same bytes `assess bank export` writes.
async fn export(State(state): State<SharedState>, who: Identity) -> Result<impl IntoResponse, ApiError> {
    who.require_author()?;
    let text = assess_core::export_bank(&state.snapshot());
    Ok(([(CONTENT_TYPE, "application/json")], text))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BankSummary {
    pub topics: usize,
    pub questions: usize,
    pub version: u64,
}

async fn replace_bank(
    State(state): State<SharedState>,
    who: Identity,
    text: String,
) -> Result<Json<BankSummary>, ApiError> {
    who.require_admin()?;
    let imported = import_bank(&text)?;
    let ((topics, questions), version) = state.mutate_bank(|bank| {
        let next = imported.with_version(bank.version() + 1);
        let sizes = (next.topics().len(), next.len());
        *bank = next;
        Ok(sizes)
    })?;
    Ok(Json(BankSummary { topics, questions, version }))
}

/// A question as shown to a learner: no key, no explanations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionView {
    pub id: QuestionId,
    #[serde(rename = "type")]
    pub kind: QuestionType,
    pub stem: Stem,
    pub body: Body,
    pub difficulty: Difficulty,
    pub education_level: EducationLevel,
    pub topics: Vec<TopicId>,
    /// Topic the item is grouped under in this session.
    pub cluster: TopicId,
}

impl QuestionView {
    pub fn new(q: &Question, cluster: TopicId) -> Self {
        QuestionView {
            id: q.id.clone(),
            kind: q.kind(),
            stem: q.stem.clone(),
            body: q.body.clone(),
            difficulty: q.difficulty,
            education_level: q.education_level,
            topics: q.topics.clone(),
            cluster,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub state: SessionState,
    pub criteria: SelectionCriteria,
    pub questions: Vec<QuestionView>,
    pub answers: BTreeMap<QuestionId, Response>,
}

impl SessionView {
    fn of(live: &LiveSession) -> Self {
        let questions = live
            .session
            .questions()
            .iter()
            .zip(&live.clusters)
            .map(|(id, cluster)| QuestionView::new(live.bank.question(id.as_str()).expect("snapshot"), cluster.clone()))
            .collect();
        SessionView {
            session_id: live.session.id().to_owned(),
            state: live.session.state(),
            criteria: live.session.criteria().clone(),
            questions,
            answers: live.session.answers().clone(),
        }
    }
}

async fn create_session(
    State(state): State<SharedState>,
    who: Identity,
    ApiJson(mut criteria): ApiJson<SelectionCriteria>,
) -> Result<Json<SessionView>, ApiError> {
    if criteria.seed.is_none() {
        criteria.seed = Some(state.next_u64());
    }
    let bank = state.snapshot();
    let profile = if who.role().is_registered() { state.profile(who.sub())? } else { None };
    let learner = match &profile {
        Some(p) => Learner::Registered(p),
        None => Learner::Guest,
    };
    let selection = select(&bank, &criteria, learner)?;
    if selection.questions.is_empty() {
        let diagnostic = selection.diagnostic.clone().unwrap_or_default();
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_selection", diagnostic.clone())
            .with_details(json!({ "diagnostic": diagnostic, "matched": selection.matched })));
    }
    let id = state.new_id("s");
    let live = LiveSession {
        owner: who.sub().to_owned(),
        role: who.role(),
        session: AssessmentSession::new(id.clone(), criteria, selection.ids()),
        clusters: selection.clusters.clone(),
        bank: bank.clone(),
    };
    let view = SessionView::of(&live);
    state.store().append_run(&RunLogEntry {
        session_id: id.clone(),
        taker: who.sub().to_owned(),
        role: who.role(),
        event: RunEventKind::Created,
        at: state.clock().now(),
    })?;
    state.insert_session(id, live);
    Ok(Json(view))
}

fn owned_session(
    state: &SharedState,
    who: &Identity,
    id: &str,
) -> Result<std::sync::Arc<std::sync::Mutex<LiveSession>>, ApiError> {
    let live = state.session(id).ok_or_else(|| ApiError::not_found(format_args!("session `{id}`")))?;
    let owner_matches = live.lock().expect("session lock").owner == who.sub();
    if owner_matches {
        Ok(live)
    } else {
        Err(ApiError::not_found(format_args!("session `{id}`")))
    }
}

async fn get_session(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let live = owned_session(&state, &who, &id)?;
    let view = SessionView::of(&live.lock().expect("session lock"));
    Ok(Json(view))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswersRequest {
    pub answers: Vec<Answer>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswersAccepted {
    pub session_id: String,
    pub state: SessionState,
    pub answered: usize,
}

/// Records a batch of answers. The batch is applied only if every answer is valid.
async fn record_answers(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AnswersRequest>,
) -> Result<Json<AnswersAccepted>, ApiError> {
    let live = owned_session(&state, &who, &id)?;
    let mut live = live.lock().expect("session lock");
    let bank = live.bank.clone();
    let mut session = live.session.clone();
    for answer in req.answers {
        session.record_answer(&bank, answer)?;
    }
    live.session = session;
    Ok(Json(AnswersAccepted {
        session_id: id,
        state: live.session.state(),
        answered: live.session.answers().len(),
    }))
}

/// Grades and finalizes the session. Registered learners' profiles are updated;
/// guests' results are returned and forgotten.
async fn submit(
    State(state): State<SharedState>,
    who: Identity,
    Path(id): Path<String>,
) -> Result<Json<SessionReport>, ApiError> {
    let live = owned_session(&state, &who, &id)?;
    let mut live = live.lock().expect("session lock");
    let bank = live.bank.clone();
    let mut session = live.session.clone();
    session.submit(&bank)?;
    session.finalize(state.clock().now())?;
    if live.role.is_registered() {
        let lock = state.learner_lock(&live.owner);
        let _guard = lock.lock().expect("learner lock");
        let mut profile = state
            .profile(&live.owner)?
            .ok_or_else(|| ApiError::unauthenticated(format!("user `{}` no longer exists", live.owner)))?;
        profile.update(&session)?;
        state.store().save_profile(&profile)?;
    }
    let report = session.report(&bank).expect("submitted sessions have results");
    let completed = session.completed_at().expect("finalized");
    live.session = session;
    state.store().append_run(&RunLogEntry {
        session_id: id,
        taker: live.owner.clone(),
        role: live.role,
        event: RunEventKind::Submitted,
        at: completed,
    })?;
    Ok(Json(report))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileView {
    pub learner_id: String,
    pub education_level: EducationLevel,
    pub knowledge: BTreeMap<TopicId, KnowledgeLevel>,
    pub sessions: usize,
}

async fn profile(State(state): State<SharedState>, who: Identity) -> Result<Json<ProfileView>, ApiError> {
    who.require_registered()?;
    let p = state.profile(who.sub())?.ok_or_else(|| ApiError::not_found(format_args!("user `{}`", who.sub())))?;
    Ok(Json(ProfileView {
        learner_id: p.learner_id.clone(),
        education_level: p.education_level,
        knowledge: p.knowledge().clone(),
        sessions: p.history().len(),
    }))
}

/// Finalized sessions, newest first.
async fn history(State(state): State<SharedState>, who: Identity) -> Result<Json<Vec<SessionRecord>>, ApiError> {
    who.require_registered()?;
    let p = state.profile(who.sub())?.ok_or_else(|| ApiError::not_found(format_args!("user `{}`", who.sub())))?;
    Ok(Json(p.history().iter().rev().cloned().collect()))
}

/// Counters over submitted runs, guests included.
async fn engagement(State(state): State<SharedState>, who: Identity) -> Result<Json<EngagementCounters>, ApiError> {
    who.require_author()?;
    let runs: Vec<RunEvent> = state
        .store()
        .runs()?
        .into_iter()
        .filter(|r| r.event == RunEventKind::Submitted)
        .map(|r| RunEvent { taker: r.taker, timestamp: r.at })
        .collect();
    Ok(Json(engagement_counters(&runs)))
}
