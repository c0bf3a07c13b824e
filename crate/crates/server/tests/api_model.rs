//! Random operation sequences checked against a small reference model of
//! session ownership, lifecycle and history.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use axum::http::StatusCode;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use assess_core::synth::{generate_bank, random_response, BankShape};
use assess_core::{Answer, QuestionBank, QuestionId};
use assess_server::store::MemoryStore;
use common::Harness;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Created,
    InProgress,
    Finalized,
}

#[derive(Debug)]
struct ModelSession {
    id: String,
    owner: usize,
    questions: Vec<QuestionId>,
    answered: BTreeSet<QuestionId>,
    phase: Phase,
}

#[derive(Default)]
struct Model {
    sessions: Vec<ModelSession>,
    /// Submitted session ids per user, oldest first.
    history: BTreeMap<usize, Vec<String>>,
}

fn random_criteria(bank: &QuestionBank, rng: &mut ChaCha8Rng) -> Value {
    let topics: Vec<&str> = bank.topics().iter().map(|t| t.id.as_str()).collect();
    let n = rng.gen_range(1..=2);
    let picked: Vec<&str> = topics.choose_multiple(rng, n).copied().collect();
    let rule = match rng.gen_range(0..4) {
        0 => json!({ "kind": "by_difficulty", "relation": "at_least", "pivot": "easy" }),
        1 => {
            let pivot = ["easy", "medium", "difficult"][rng.gen_range(0..3)];
            json!({ "kind": "by_difficulty", "relation": "match", "pivot": pivot })
        }
        2 => json!({ "kind": "by_knowledge", "relation": "at_most", "pivot": "high" }),
        _ => json!({ "kind": "by_education", "relation": "at_least", "pivot": rng.gen_range(1..=5) }),
    };
    json!({ "topics": picked, "rule": rule, "count": rng.gen_range(1..8) })
}

async fn run(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = BankShape { questions: 60, ..BankShape::default() };
    let bank = generate_bank(&shape, &mut rng);
    let h = Harness::new(Arc::new(MemoryStore::with_bank(bank.clone())));
    let users = [h.register("ana", 2).await, h.register("ben", 4).await, h.guest().await];
    let registered = |u: usize| u < 2;
    let mut model = Model::default();

    for step in 0..80 {
        let user = rng.gen_range(0..users.len());
        let token = &users[user];
        let own: Vec<usize> = (0..model.sessions.len()).filter(|&i| model.sessions[i].owner == user).collect();
        let pick = if !own.is_empty() && rng.gen_bool(0.75) {
            own.choose(&mut rng).copied()
        } else if model.sessions.is_empty() {
            None
        } else {
            Some(rng.gen_range(0..model.sessions.len()))
        };
        let ctx = format!("seed {seed} step {step}");
        match (rng.gen_range(0..5), pick) {
            (0, _) | (_, None) => {
                let r = h.post("/api/v1/sessions", token, random_criteria(&bank, &mut rng)).await;
                match r.status {
                    StatusCode::OK => {
                        let v = r.json();
                        assert_eq!(v["state"], "created", "{ctx}");
                        let questions: Vec<QuestionId> = v["questions"]
                            .as_array()
                            .unwrap()
                            .iter()
                            .map(|q| q["id"].as_str().unwrap().into())
                            .collect();
                        assert!(!questions.is_empty(), "{ctx}");
                        model.sessions.push(ModelSession {
                            id: v["session_id"].as_str().unwrap().to_owned(),
                            owner: user,
                            questions,
                            answered: BTreeSet::new(),
                            phase: Phase::Created,
                        });
                    }
                    StatusCode::UNPROCESSABLE_ENTITY => assert_eq!(r.code(), "empty_selection", "{ctx}"),
                    other => panic!("{ctx}: unexpected {other}"),
                }
            }
            (1, Some(i)) => {
                let s = &mut model.sessions[i];
                let foreign_item = rng.gen_bool(0.15);
                let mut answers = Vec::new();
                for id in &s.questions {
                    if rng.gen_bool(0.5) {
                        let payload = random_response(bank.question(id.as_str()).unwrap(), &mut rng);
                        answers.push(Answer::new(id.clone(), payload));
                    }
                }
                let valid = answers.len();
                if foreign_item {
                    answers.push(Answer::new("zz-missing", assess_core::Response::Boolean(true)));
                }
                let r = h.post(&format!("/api/v1/sessions/{}/answers", s.id), token, json!({ "answers": answers })).await;
                if s.owner != user {
                    assert_eq!(r.status, StatusCode::NOT_FOUND, "{ctx}");
                } else if s.phase == Phase::Finalized && valid > 0 {
                    assert_eq!(r.status, StatusCode::CONFLICT, "{ctx}");
                } else if foreign_item {
                    assert_eq!(r.status, StatusCode::BAD_REQUEST, "{ctx}");
                } else {
                    assert_eq!(r.status, StatusCode::OK, "{ctx}");
                    if !answers.is_empty() {
                        s.phase = Phase::InProgress;
                    }
                    s.answered.extend(answers.into_iter().map(|a| a.question_id));
                    let v = r.json();
                    assert_eq!(v["answered"], s.answered.len(), "{ctx}");
                }
            }
            (2, Some(i)) => {
                let s = &mut model.sessions[i];
                let r = h.post(&format!("/api/v1/sessions/{}/submit", s.id), token, json!(null)).await;
                if s.owner != user {
                    assert_eq!(r.status, StatusCode::NOT_FOUND, "{ctx}");
                } else if s.phase == Phase::Finalized {
                    assert_eq!(r.status, StatusCode::CONFLICT, "{ctx}");
                } else {
                    assert_eq!(r.status, StatusCode::OK, "{ctx}");
                    assert_eq!(r.json()["items"].as_array().unwrap().len(), s.questions.len(), "{ctx}");
                    s.phase = Phase::Finalized;
                    if registered(user) {
                        model.history.entry(user).or_default().push(s.id.clone());
                    }
                }
            }
            (3, Some(i)) => {
                let s = &model.sessions[i];
                let r = h.get(&format!("/api/v1/sessions/{}", s.id), token).await;
                if s.owner != user {
                    assert_eq!(r.status, StatusCode::NOT_FOUND, "{ctx}");
                } else {
                    let phase = match s.phase {
                        Phase::Created => "created",
                        Phase::InProgress => "in_progress",
                        Phase::Finalized => "finalized",
                    };
                    let v = r.json();
                    assert_eq!(v["state"], phase, "{ctx}");
                    assert_eq!(v["answers"].as_object().unwrap().len(), s.answered.len(), "{ctx}");
                }
            }
            _ => {
                let r = h.get("/api/v1/history", token).await;
                if !registered(user) {
                    assert_eq!(r.status, StatusCode::FORBIDDEN, "{ctx}");
                    continue;
                }
                let listed: Vec<String> = r
                    .json()
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|x| x["session_id"].as_str().unwrap().to_owned())
                    .collect();
                let mut expected = model.history.get(&user).cloned().unwrap_or_default();
                expected.reverse();
                assert_eq!(listed, expected, "{ctx}");
            }
        }
    }

    let submitted: Vec<&ModelSession> = model.sessions.iter().filter(|s| s.phase == Phase::Finalized).collect();
    assert!(submitted.len() >= 3, "seed {seed}: only {} sessions submitted", submitted.len());
    let takers: BTreeSet<usize> = submitted.iter().map(|s| s.owner).collect();
    let admin = h.admin().await;
    let counters = h.get("/api/v1/analytics/engagement", &admin).await.json();
    assert_eq!(
        counters,
        json!({
            "unique_takers": takers.len(),
            "total_runs": submitted.len(),
            "reruns": submitted.len() - takers.len(),
        }),
        "seed {seed}"
    );
}

#[tokio::test]
async fn random_operation_sequences_follow_the_model() {
    for seed in 0..25 {
        run(seed).await;
    }
}
