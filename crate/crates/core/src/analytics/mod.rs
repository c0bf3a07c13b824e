//! Evaluation instruments: SUS scoring, two-sample t-tests and engagement counts.

mod engagement;
mod special;
mod sus;
mod ttest;

use thiserror::Error;

pub use engagement::{engagement_counters, EngagementCounters, RunEvent};
pub use special::{ln_gamma, regularized_incomplete_beta, student_t_two_tailed};
pub use sus::{sus_mean, sus_score, SusResponse};
pub use ttest::{t_test_two_sample, TTestResult, TTestVariant};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("SUS responses have exactly 10 items, got {0}")]
    WrongLength(usize),
    #[error("SUS item {item} is {value}, expected 1..=5")]
    OutOfRange { item: usize, value: i64 },
    #[error("no input")]
    EmptyInput,
    #[error("sample {sample} has {len} value(s); at least 2 are needed")]
    InsufficientData { sample: char, len: usize },
    #[error("sample {sample} contains a non-finite value")]
    NonFinite { sample: char },
}
