//! `assess bank validate|import|export`.

use std::path::Path;

use serde::Serialize;

use assess_core::{export_bank, import_bank, BankError, QuestionBank};
use assess_server::store::{FileStore, Store, StoreError};

use crate::error::{read_file, write_file, CliError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BankSummary {
    pub topics: usize,
    pub questions: usize,
    pub version: u64,
}

impl BankSummary {
    fn of(bank: &QuestionBank) -> Self {
        BankSummary { topics: bank.topics().len(), questions: bank.len(), version: bank.version() }
    }
}

fn diagnostics(err: &BankError) -> CliError {
    CliError::Domain(err.violations().into_iter().map(|v| format!("{}: {v}", v.code())).collect())
}

fn store_error(err: StoreError) -> CliError {
    match err {
        StoreError::Io { path, source } => CliError::Io { path, source },
        corrupt @ StoreError::Corrupt { .. } => CliError::domain(corrupt.to_string()),
    }
}

pub fn load(path: &Path) -> Result<QuestionBank, CliError> {
    import_bank(&read_file(path)?).map_err(|e| diagnostics(&e))
}

pub fn validate(path: &Path) -> Result<BankSummary, CliError> {
    load(path).map(|b| BankSummary::of(&b))
}

/// Validates `path` and installs it as the bank of the data directory.
pub fn import(path: &Path, data_dir: &Path) -> Result<BankSummary, CliError> {
    let bank = load(path)?;
    let store = FileStore::open(data_dir).map_err(store_error)?;
    let previous = store.load_bank().map_err(store_error)?.map_or(0, |b| b.version());
    let bank = bank.with_version(previous + 1);
    store.save_bank(&bank).map_err(store_error)?;
    Ok(BankSummary::of(&bank))
}

/// Writes the data directory's bank to `path` in canonical form.
pub fn export(path: &Path, data_dir: &Path) -> Result<BankSummary, CliError> {
    let store = FileStore::open(data_dir).map_err(store_error)?;
    let bank = store
        .load_bank()
        .map_err(store_error)?
        .ok_or_else(|| CliError::domain(format!("{}: no bank has been imported", data_dir.display())))?;
    write_file(path, export_bank(&bank).as_bytes())?;
    Ok(BankSummary::of(&bank))
}
