mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use axum::http::StatusCode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use assess_core::synth::{correct_response, wrong_response};
use assess_core::{
    select, Answer, AssessmentSession, LearnerProfile, Learner, QuestionBank, Response, SelectionCriteria,
};
use assess_server::store::{FileStore, MemoryStore};
use common::{fixture_bank, Harness};

fn harness() -> Harness {
    Harness::new(Arc::new(MemoryStore::with_bank(fixture_bank())))
}

/// Strings of length four or more taken from keys and explanations that never
/// appear in the question's public fields.
fn secrets(bank: &QuestionBank) -> Vec<String> {
    fn strings(v: &Value, out: &mut Vec<String>) {
        match v {
            Value::String(s) => out.push(s.clone()),
            Value::Array(a) => a.iter().for_each(|x| strings(x, out)),
            Value::Object(o) => o.iter().for_each(|(k, x)| {
                out.push(k.clone());
                strings(x, out)
            }),
            _ => {}
        }
    }
    let mut public = String::new();
    let mut hidden = Vec::new();
    for q in bank.questions() {
        let mut doc = serde_json::to_value(q).unwrap();
        let key = doc.as_object_mut().unwrap().remove("key").unwrap_or(Value::Null);
        let explanations = doc.as_object_mut().unwrap().remove("explanations").unwrap_or(Value::Null);
        public.push_str(&doc.to_string());
        strings(&key, &mut hidden);
        if let Value::Object(e) = explanations {
            hidden.extend(e.values().filter_map(|v| v.as_str().map(str::to_owned)));
        }
    }
    let mut all: Vec<String> =
        hidden.into_iter().filter(|s| s.chars().count() >= 4 && !public.contains(s.as_str())).collect();
    all.sort();
    all.dedup();
    all
}

fn assert_no_leak(body: &[u8], secrets: &[String], context: &str) {
    fn walk(v: &Value, context: &str) {
        match v {
            Value::Object(o) => {
                for (k, x) in o {
                    assert!(k != "key" && k != "explanations", "{context}: field `{k}` exposed");
                    walk(x, context);
                }
            }
            Value::Array(a) => a.iter().for_each(|x| walk(x, context)),
            _ => {}
        }
    }
    let text = String::from_utf8_lossy(body);
    if let Ok(v) = serde_json::from_slice::<Value>(body) {
        walk(&v, context);
    }
    for s in secrets {
        assert!(!text.contains(s.as_str()), "{context}: secret {s:?} exposed");
    }
}

#[test]
fn the_fixture_has_secrets_to_guard() {
    let s = secrets(&fixture_bank());
    assert!(s.len() >= 10, "{s:?}");
    assert!(s.iter().any(|x| !x.contains(' ')), "no key strings among {s:?}");
}

fn criteria_for(i: usize) -> Value {
    let rules = [
        json!({ "kind": "by_difficulty", "relation": "at_most", "pivot": "medium" }),
        json!({ "kind": "by_difficulty", "relation": "at_least", "pivot": "easy" }),
        json!({ "kind": "by_knowledge", "relation": "match", "pivot": "good" }),
        json!({ "kind": "by_education", "relation": "at_least", "pivot": 1 }),
        json!({ "kind": "by_education", "relation": "at_most" }),
        json!({ "kind": "auto" }),
    ];
    let topics = [json!(["econ"]), json!(["econ.micro.demand.linear", "econ.micro.demand.price_elasticity"])];
    json!({
        "topics": topics[i % 2],
        "rule": rules[i % rules.len()],
        "count": 3 + i % 9,
        "include_likert": i % 3 == 0,
    })
}

fn answer_for(bank: &QuestionBank, id: &str, rng: &mut ChaCha8Rng) -> Response {
    let q = bank.question(id).unwrap();
    match rng.gen_range(0..3) {
        0 => correct_response(q),
        1 => wrong_response(q).unwrap_or_else(|| correct_response(q)),
        _ => Response::Skip,
    }
}

/// Runs a session over HTTP and replays the same inputs through the core
/// types. The submit body must equal the serialized core report byte for byte.
#[tokio::test]
async fn http_sessions_match_core_composition() {
    let h = harness();
    let bank = fixture_bank();
    let secrets = secrets(&bank);
    let student = h.register("stu", 3).await;
    let mut profile = LearnerProfile::new("stu", assess_core::EducationLevel::new(3).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    for i in 0..24 {
        let r = h.post("/api/v1/sessions", &student, criteria_for(i)).await;
        if r.status == StatusCode::UNPROCESSABLE_ENTITY {
            assert_eq!(r.code(), "empty_selection");
            continue;
        }
        assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
        assert_no_leak(&r.bytes, &secrets, "create");
        let created = r.json();
        let id = created["session_id"].as_str().unwrap().to_owned();
        let criteria: SelectionCriteria = serde_json::from_value(created["criteria"].clone()).unwrap();
        assert!(criteria.seed.is_some(), "seed echoed");

        let expected = select(&bank, &criteria, Learner::Registered(&profile)).unwrap();
        let served: Vec<&str> = created["questions"].as_array().unwrap().iter().map(|q| q["id"].as_str().unwrap()).collect();
        let expected_ids = expected.ids();
        assert_eq!(served, expected_ids.iter().map(|q| q.as_str()).collect::<Vec<_>>());
        let clusters: Vec<&str> =
            created["questions"].as_array().unwrap().iter().map(|q| q["cluster"].as_str().unwrap()).collect();
        assert_eq!(clusters, expected.clusters.iter().map(|t| t.as_str()).collect::<Vec<_>>());

        let mut core = AssessmentSession::new(id.clone(), criteria.clone(), expected_ids.clone());
        let mut answers = Vec::new();
        for q in &expected_ids {
            if rng.gen_bool(0.8) {
                answers.push(Answer::new(q.clone(), answer_for(&bank, q.as_str(), &mut rng)));
            }
        }
        for a in &answers {
            core.record_answer(&bank, a.clone()).unwrap();
        }
        let r = h.post(&format!("/api/v1/sessions/{id}/answers"), &student, json!({ "answers": answers })).await;
        assert_eq!(r.status, StatusCode::OK);
        assert_no_leak(&r.bytes, &secrets, "answers");
        let r = h.get(&format!("/api/v1/sessions/{id}"), &student).await;
        assert_no_leak(&r.bytes, &secrets, "view");

        let r = h.post(&format!("/api/v1/sessions/{id}/submit"), &student, json!(null)).await;
        assert_eq!(r.status, StatusCode::OK);
        core.submit(&bank).unwrap();
        core.finalize(h.state.store().runs().unwrap().last().unwrap().at).unwrap();
        let report = core.report(&bank).unwrap();
        assert_eq!(r.bytes, serde_json::to_vec(&report).unwrap(), "session {i}");
        profile.update(&core).unwrap();
    }
    let stored = h.state.store().load_profile("stu").unwrap().unwrap();
    assert_eq!(stored, profile);
}

#[tokio::test]
async fn guests_are_limited_and_leave_no_trace() {
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap();
    assess_server::store::Store::save_bank(&store, &fixture_bank()).unwrap();
    let h = Harness::new(Arc::new(store));
    let learners = dir.path().join("learners");
    let snapshot = |p: &Path| -> BTreeMap<String, Vec<u8>> {
        fs::read_dir(p)
            .unwrap()
            .map(|e| e.unwrap())
            .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
            .collect()
    };
    let stu = h.register("stu", 2).await;
    let first = json!({ "topics": ["econ"], "rule": { "kind": "by_difficulty", "relation": "match", "pivot": "easy" }, "count": 4 });
    let first = h.post("/api/v1/sessions", &stu, first).await;
    let id = first.json()["session_id"].as_str().unwrap().to_owned();
    h.post(&format!("/api/v1/sessions/{id}/submit"), &stu, json!(null)).await;
    let before = snapshot(&learners);
    assert_eq!(before.len(), 1);

    let guest = h.guest().await;
    for rule in [json!({ "kind": "auto" }), json!({ "kind": "by_knowledge", "relation": "match" }), json!({ "kind": "by_education", "relation": "match" })] {
        let r = h.post("/api/v1/sessions", &guest, json!({ "topics": ["econ"], "rule": rule, "count": 3 })).await;
        assert_eq!(r.status, StatusCode::FORBIDDEN, "{rule}");
    }
    let secrets = secrets(&fixture_bank());
    for pivot in ["low", "good", "high"] {
        let criteria = json!({
            "topics": ["econ"],
            "rule": { "kind": "by_knowledge", "relation": "match", "pivot": pivot },
            "count": 5,
        });
        let r = h.post("/api/v1/sessions", &guest, criteria).await;
        assert_eq!(r.status, StatusCode::OK);
        assert_no_leak(&r.bytes, &secrets, "guest create");
        let view = r.json();
        let id = view["session_id"].as_str().unwrap();
        let answers: Vec<Value> = view["questions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|q| json!({ "question_id": q["id"], "payload": null }))
            .collect();
        let r = h.post(&format!("/api/v1/sessions/{id}/answers"), &guest, json!({ "answers": answers })).await;
        assert_eq!(r.status, StatusCode::OK);
        let r = h.post(&format!("/api/v1/sessions/{id}/submit"), &guest, json!(null)).await;
        assert_eq!(r.status, StatusCode::OK);
        assert_eq!(r.json()["session_id"], id);
    }
    assert_eq!(h.get("/api/v1/profile", &guest).await.status, StatusCode::FORBIDDEN);
    assert_eq!(h.get("/api/v1/history", &guest).await.status, StatusCode::FORBIDDEN);
    assert_eq!(snapshot(&learners), before, "guest runs wrote learner data");

    let admin = h.admin().await;
    let counters = h.get("/api/v1/analytics/engagement", &admin).await.json();
    assert_eq!(counters, json!({ "unique_takers": 2, "total_runs": 4, "reruns": 2 }));
}

#[tokio::test]
async fn guest_runs_never_touch_profiles() {
    let store = Arc::new(MemoryStore::with_bank(fixture_bank()));
    let h = Harness::new(store.clone());
    let guest = h.guest().await;
    for i in 0..6 {
        let criteria = json!({ "topics": ["econ"], "rule": { "kind": "by_difficulty", "relation": "at_least", "pivot": "easy" }, "count": 2 + i });
        let id = h.post("/api/v1/sessions", &guest, criteria).await.json()["session_id"].as_str().unwrap().to_owned();
        assert_eq!(h.post(&format!("/api/v1/sessions/{id}/submit"), &guest, json!(null)).await.status, StatusCode::OK);
    }
    assert_eq!(store.profile_writes(), 0);
}

#[tokio::test]
async fn history_is_newest_first_and_levels_follow() {
    let h = harness();
    let bank = fixture_bank();
    let stu = h.register("stu", 3).await;
    let mut ids = Vec::new();
    for all_correct in [true, false] {
        let criteria = json!({ "topics": ["econ.micro.demand.linear"], "rule": { "kind": "by_difficulty", "relation": "at_least", "pivot": "easy" }, "count": 10 });
        let view = h.post("/api/v1/sessions", &stu, criteria).await.json();
        let id = view["session_id"].as_str().unwrap().to_owned();
        let answers: Vec<Answer> = view["questions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|q| {
                let q = bank.question(q["id"].as_str().unwrap()).unwrap();
                let payload = if all_correct { correct_response(q) } else { wrong_response(q).unwrap() };
                Answer::new(q.id.clone(), payload)
            })
            .collect();
        h.post(&format!("/api/v1/sessions/{id}/answers"), &stu, json!({ "answers": answers })).await;
        let report = h.post(&format!("/api/v1/sessions/{id}/submit"), &stu, json!(null)).await.json();
        let expected = if all_correct { "high" } else { "low" };
        assert_eq!(report["topics"][0]["inferred_level"], expected);
        let profile = h.get("/api/v1/profile", &stu).await.json();
        assert_eq!(profile["knowledge"]["econ.micro.demand.linear"], expected);
        ids.push(id);
    }
    let history = h.get("/api/v1/history", &stu).await.json();
    let listed: Vec<&str> = history.as_array().unwrap().iter().map(|r| r["session_id"].as_str().unwrap()).collect();
    assert_eq!(listed, [ids[1].as_str(), ids[0].as_str()]);
    assert!(history[0]["timestamp"].as_str() > history[1]["timestamp"].as_str());
}

#[tokio::test]
async fn session_lifecycle_errors() {
    let h = harness();
    let bank = fixture_bank();
    let ana = h.register("ana", 3).await;
    let bob = h.register("bob", 3).await;
    let criteria = json!({ "topics": ["econ"], "rule": { "kind": "by_difficulty", "relation": "at_least", "pivot": "easy" }, "count": 6, "seed": 9 });
    let r = h.post("/api/v1/sessions", &ana, criteria).await;
    assert_eq!(r.json()["criteria"]["seed"], 9);
    let view = r.json();
    let id = view["session_id"].as_str().unwrap().to_owned();
    let first = view["questions"][0]["id"].as_str().unwrap().to_owned();
    let second = view["questions"][1]["id"].as_str().unwrap().to_owned();
    let good = Answer::new(first.as_str(), correct_response(bank.question(&first).unwrap()));

    for path in [format!("/api/v1/sessions/{id}"), "/api/v1/sessions/s-unknown".to_owned()] {
        let r = h.get(&path, &bob).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND);
    }
    let r = h.post(&format!("/api/v1/sessions/{id}/submit"), &bob, json!(null)).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    // A bad answer anywhere in the batch rejects the whole batch.
    let wrong_shape = json!({ "question_id": second, "payload": { "x": 1.0, "y": 2.0 } });
    let r = h.post(&format!("/api/v1/sessions/{id}/answers"), &ana, json!({ "answers": [good, wrong_shape] })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.code(), "invalid_answer");
    assert_eq!(r.json()["details"]["question_id"], second);
    let foreign = json!({ "question_id": "not-here", "payload": true });
    let r = h.post(&format!("/api/v1/sessions/{id}/answers"), &ana, json!({ "answers": [good, foreign] })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let view = h.get(&format!("/api/v1/sessions/{id}"), &ana).await.json();
    assert_eq!(view["state"], "created");
    assert_eq!(view["answers"], json!({}));

    let r = h.post(&format!("/api/v1/sessions/{id}/answers"), &ana, json!({ "answers": [good] })).await;
    assert_eq!(r.json(), json!({ "session_id": id, "state": "in_progress", "answered": 1 }));

    let r = h.post(&format!("/api/v1/sessions/{id}/submit"), &ana, json!(null)).await;
    assert_eq!(r.status, StatusCode::OK);
    let report = r.json();
    assert_eq!(report["items"].as_array().unwrap().len(), 6);
    let r = h.post(&format!("/api/v1/sessions/{id}/submit"), &ana, json!(null)).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = h.post(&format!("/api/v1/sessions/{id}/answers"), &ana, json!({ "answers": [good] })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(h.get(&format!("/api/v1/sessions/{id}"), &ana).await.json()["state"], "finalized");
    assert_eq!(h.get("/api/v1/history", &ana).await.json().as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn criteria_errors() {
    let h = harness();
    let stu = h.register("stu", 3).await;
    let cases = [
        (json!({ "topics": ["nope"], "rule": { "kind": "auto" }, "count": 3 }), StatusCode::BAD_REQUEST, "invalid_criteria"),
        (json!({ "topics": [], "rule": { "kind": "auto" }, "count": 3 }), StatusCode::BAD_REQUEST, "invalid_criteria"),
        (json!({ "topics": ["econ"], "rule": { "kind": "auto" }, "count": 0 }), StatusCode::BAD_REQUEST, "invalid_criteria"),
        (json!({ "topics": ["econ"], "rule": { "kind": "sideways" }, "count": 3 }), StatusCode::BAD_REQUEST, "invalid_request"),
        (
            json!({ "topics": ["econ"], "rule": { "kind": "by_education", "relation": "above", "pivot": 5 }, "count": 3 }),
            StatusCode::UNPROCESSABLE_ENTITY,
            "empty_selection",
        ),
    ];
    for (criteria, status, code) in cases {
        let r = h.post("/api/v1/sessions", &stu, criteria.clone()).await;
        assert_eq!((r.status, r.code().as_str()), (status, code), "{criteria}");
    }
    let r = h
        .post("/api/v1/sessions", &stu, json!({ "topics": ["econ"], "rule": { "kind": "by_education", "relation": "above", "pivot": 5 }, "count": 3 }))
        .await;
    assert!(!r.json()["details"]["diagnostic"].as_str().unwrap().is_empty());
    assert_eq!(r.json()["details"]["matched"], 0);
}

#[tokio::test]
async fn all_correct_submission_has_no_weaknesses() {
    let h = harness();
    let bank = fixture_bank();
    let guest = h.guest().await;
    let criteria = json!({ "topics": ["econ"], "rule": { "kind": "by_difficulty", "relation": "match", "pivot": "medium" }, "count": 10 });
    let r = h.post("/api/v1/sessions", &guest, criteria).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_no_leak(&r.bytes, &secrets(&bank), "guest create");
    let view = r.json();
    let questions = view["questions"].as_array().unwrap();
    assert!(!questions.is_empty() && questions.len() <= 10);
    let id = view["session_id"].as_str().unwrap();
    let answers: Vec<Answer> = questions
        .iter()
        .map(|q| {
            let q = bank.question(q["id"].as_str().unwrap()).unwrap();
            Answer::new(q.id.clone(), correct_response(q))
        })
        .collect();
    h.post(&format!("/api/v1/sessions/{id}/answers"), &guest, json!({ "answers": answers })).await;
    let report = h.post(&format!("/api/v1/sessions/{id}/submit"), &guest, json!(null)).await.json();
    let topics = report["topics"].as_array().unwrap();
    assert!(!topics.is_empty());
    assert!(topics.iter().all(|t| t["percent"] == 100.0), "{report}");
    assert_eq!(report["weaknesses"], json!([]));
    assert_eq!(report["erroneous"], json!([]));
    assert!(report["items"].as_array().unwrap().iter().all(|i| i.get("explanations").is_none()));
}
