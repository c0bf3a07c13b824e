use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// One quiz run by a registered learner id or a guest token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunEvent {
    pub taker: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementCounters {
    pub unique_takers: usize,
    pub total_runs: usize,
    /// Runs beyond each taker's first.
    pub reruns: usize,
}

pub fn engagement_counters(log: &[RunEvent]) -> EngagementCounters {
    let unique_takers = log.iter().map(|e| e.taker.as_str()).collect::<HashSet<_>>().len();
    EngagementCounters { unique_takers, total_runs: log.len(), reruns: log.len() - unique_takers }
}
