#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeDelta};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use assess_core::{import_bank, QuestionBank};
use assess_server::clock::SteppingClock;
use assess_server::store::Store;
use assess_server::{router, AppState, SharedState};

pub const FIXTURE: &str = include_str!("../../../../fixtures/microeconomics.json");
pub const ADMIN: (&str, &str) = ("root", "root-password");

pub fn fixture_bank() -> QuestionBank {
    import_bank(FIXTURE).expect("fixture imports")
}

pub struct Reply {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or(Value::Null)
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_owned()
    }
}

pub struct Harness {
    pub app: Router,
    pub state: SharedState,
}

impl Harness {
    /// Server over `store` with a stepping clock and an admin account.
    pub fn new(store: Arc<dyn Store>) -> Self {
        let clock = SteppingClock::new(DateTime::from_timestamp(1_700_000_000, 0).unwrap(), TimeDelta::seconds(7));
        let state = Arc::new(AppState::new(store, Arc::new(clock), b"test-secret-test-secret", 42).unwrap());
        state.bootstrap_admin(ADMIN.0, ADMIN.1).unwrap();
        Harness { app: router(state.clone()), state }
    }

    pub async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let body = body.map(|b| serde_json::to_vec(&b).unwrap());
        self.raw(method, path, token, body, "application/json").await
    }

    pub async fn raw(
        &self,
        method: Method,
        path: &str,
        token: Option<&str>,
        body: Option<Vec<u8>>,
        content_type: &str,
    ) -> Reply {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req.header(header::CONTENT_TYPE, content_type).body(Body::from(b)),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, bytes }
    }

    pub async fn get(&self, path: &str, token: &str) -> Reply {
        self.call(Method::GET, path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> Reply {
        self.call(Method::POST, path, Some(token), Some(body)).await
    }

    pub async fn login(&self, user: &str, password: &str) -> String {
        let r = self
            .call(Method::POST, "/api/v1/auth/login", None, Some(json!({ "username": user, "password": password })))
            .await;
        assert_eq!(r.status, StatusCode::OK, "login {user}");
        r.json()["token"].as_str().unwrap().to_owned()
    }

    pub async fn admin(&self) -> String {
        self.login(ADMIN.0, ADMIN.1).await
    }

    pub async fn register(&self, user: &str, education_level: u8) -> String {
        let body = json!({ "username": user, "password": "password-123", "education_level": education_level });
        let r = self.call(Method::POST, "/api/v1/auth/register", None, Some(body)).await;
        assert_eq!(r.status, StatusCode::CREATED, "register {user}: {}", String::from_utf8_lossy(&r.bytes));
        r.json()["token"].as_str().unwrap().to_owned()
    }

    pub async fn educator(&self, user: &str) -> String {
        let admin = self.admin().await;
        let body = json!({ "username": user, "password": "password-123", "role": "educator" });
        let r = self.post("/api/v1/users", &admin, body).await;
        assert_eq!(r.status, StatusCode::CREATED);
        self.login(user, "password-123").await
    }

    pub async fn guest(&self) -> String {
        let r = self.call(Method::POST, "/api/v1/auth/guest", None, None).await;
        assert_eq!(r.status, StatusCode::OK);
        r.json()["token"].as_str().unwrap().to_owned()
    }
}
