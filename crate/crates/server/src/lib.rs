//! HTTP service: bank authoring, quiz sessions, learner profiles and
//! engagement analytics over a JSON API under `/api/v1`.

pub mod auth;
pub mod clock;
pub mod error;
pub mod routes;
pub mod state;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use routes::router;
pub use state::{AppState, SharedState};

use clock::SystemClock;
use store::{FileStore, StoreError};

#[derive(Debug, Clone)]
pub struct Config {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    pub token_secret: Vec<u8>,
    /// Username and password of an admin account created on first start.
    pub admin: Option<(String, String)>,
    /// Seed for ids, salts and selection seeds. Random when absent.
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Opens the data directory and builds the shared state.
pub fn open_state(config: &Config) -> Result<SharedState, StoreError> {
    let store = Arc::new(FileStore::open(&config.data_dir)?);
    let seed = config.seed.unwrap_or_else(rand::random);
    let state = AppState::new(store, Arc::new(SystemClock), &config.token_secret, seed)?;
    if let Some((user, password)) = &config.admin {
        state.bootstrap_admin(user, password)?;
    }
    Ok(Arc::new(state))
}

pub async fn serve(config: Config) -> Result<(), ServeError> {
    let state = open_state(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServeError::Bind { addr: config.bind, source })?;
    axum::serve(listener, router(state)).await?;
    Ok(())
}
