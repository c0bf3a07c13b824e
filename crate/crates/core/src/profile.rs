//! Knowledge inference and learner profiles.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::QuestionBank;
use crate::grading::{ItemScore, TopicResult};
use crate::ids::{QuestionId, TopicId};
use crate::levels::{EducationLevel, KnowledgeLevel};
use crate::selection::SelectionCriteria;
use crate::session::{AssessmentSession, SessionResults, SessionState};

/// Lower bound of the `good` band (inclusive).
pub const GOOD_THRESHOLD: f64 = 50.0;
/// Upper bound of the `good` band (inclusive); anything above is `high`.
pub const HIGH_THRESHOLD: f64 = 75.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("percent {0} is outside 0..=100")]
    OutOfRange(f64),
    #[error("session `{0}` is not finalized")]
    SessionNotFinal(String),
    #[error("session `{session}` completed at {at}, not after the latest recorded session")]
    OutOfOrder { session: String, at: DateTime<Utc> },
}

/// `[0, 50)` is low, `[50, 75]` is good, `(75, 100]` is high.
pub fn infer_level(percent: f64) -> Result<KnowledgeLevel, ProfileError> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(ProfileError::OutOfRange(percent));
    }
    Ok(if percent < GOOD_THRESHOLD {
        KnowledgeLevel::Low
    } else if percent <= HIGH_THRESHOLD {
        KnowledgeLevel::Good
    } else {
        KnowledgeLevel::High
    })
}

/// Immutable summary of one finalized assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub timestamp: DateTime<Utc>,
    pub criteria: SelectionCriteria,
    pub topic_results: Vec<TopicResult>,
    pub levels: BTreeMap<TopicId, KnowledgeLevel>,
    pub items: Vec<ItemScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerProfile {
    pub learner_id: String,
    pub education_level: EducationLevel,
    knowledge: BTreeMap<TopicId, KnowledgeLevel>,
    history: Vec<SessionRecord>,
}

impl LearnerProfile {
    pub fn new(learner_id: impl Into<String>, education_level: EducationLevel) -> Self {
        Self {
            learner_id: learner_id.into(),
            education_level,
            knowledge: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    /// Levels stored for the topics assessed so far.
    pub fn knowledge(&self) -> &BTreeMap<TopicId, KnowledgeLevel> {
        &self.knowledge
    }

    /// Finalized sessions, oldest first.
    pub fn history(&self) -> &[SessionRecord] {
        &self.history
    }

    /// Level for `topic`: the stored one, or else derived from the most recent
    /// session that graded items inside the topic's subtree.
    pub fn knowledge_for(&self, bank: &QuestionBank, topic: &str) -> Option<KnowledgeLevel> {
        if let Some(level) = self.knowledge.get(topic) {
            return Some(*level);
        }
        self.history.iter().rev().find_map(|record| {
            let (mut weighted, mut weight) = (0.0, 0.0);
            for item in record.items.iter().filter(|i| i.graded) {
                let Some(q) = bank.question(item.question_id.as_str()) else {
                    continue;
                };
                if bank.is_tagged_within(q, topic) {
                    weighted += item.score.unwrap_or(0.0) * q.weight;
                    weight += q.weight;
                }
            }
            (weight > 0.0).then(|| infer_level((100.0 * weighted / weight).clamp(0.0, 100.0)).ok())?
        })
    }

    /// Applies a finalized session: every topic it assessed takes the level of
    /// this session's percentage and a record is appended. Other topics keep
    /// their levels.
    pub fn update(&mut self, session: &AssessmentSession) -> Result<(), ProfileError> {
        let (Some(results), Some(at)) = (session.results(), session.completed_at()) else {
            return Err(ProfileError::SessionNotFinal(session.id().to_owned()));
        };
        if session.state() != SessionState::Finalized {
            return Err(ProfileError::SessionNotFinal(session.id().to_owned()));
        }
        if self.history.last().is_some_and(|last| last.timestamp >= at) {
            return Err(ProfileError::OutOfOrder { session: session.id().to_owned(), at });
        }
        let levels: BTreeMap<TopicId, KnowledgeLevel> =
            results.topics.iter().map(|r| (r.topic_id.clone(), r.inferred_level)).collect();
        self.knowledge.extend(levels.iter().map(|(t, l)| (t.clone(), *l)));
        self.history.push(SessionRecord {
            session_id: session.id().to_owned(),
            timestamp: at,
            criteria: session.criteria().clone(),
            topic_results: results.topics.clone(),
            levels,
            items: results.items.clone(),
        });
        Ok(())
    }
}

/// Free-function form of [`LearnerProfile::update`].
pub fn update_profile(profile: &mut LearnerProfile, session: &AssessmentSession) -> Result<(), ProfileError> {
    profile.update(session)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeaknessEntry {
    pub topic_id: TopicId,
    pub percent: f64,
    pub level: KnowledgeLevel,
    /// Low performance: the learner is pointed back to this topic's material.
    pub weak: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErroneousItem {
    pub question_id: QuestionId,
    pub score: f64,
    /// Declared topics of the question.
    pub concepts: Vec<TopicId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeaknessReport {
    /// Ascending by percent, ties by topic id.
    pub topics: Vec<WeaknessEntry>,
    /// Graded items that did not score 1, in session order.
    pub erroneous: Vec<ErroneousItem>,
}

impl WeaknessReport {
    pub fn weak_topics(&self) -> impl Iterator<Item = &WeaknessEntry> {
        self.topics.iter().filter(|e| e.weak)
    }
}

pub fn weakness_report(results: &SessionResults) -> WeaknessReport {
    let mut topics: Vec<WeaknessEntry> = results
        .topics
        .iter()
        .map(|r| WeaknessEntry {
            topic_id: r.topic_id.clone(),
            percent: r.percent,
            level: r.inferred_level,
            weak: r.inferred_level == KnowledgeLevel::Low,
        })
        .collect();
    topics.sort_by(|a, b| a.percent.total_cmp(&b.percent).then_with(|| a.topic_id.cmp(&b.topic_id)));
    let erroneous = results
        .items
        .iter()
        .filter_map(|item| {
            let score = item.score.filter(|s| item.graded && *s < 1.0)?;
            Some(ErroneousItem {
                question_id: item.question_id.clone(),
                score,
                concepts: results.concepts.get(&item.question_id).cloned().unwrap_or_default(),
            })
        })
        .collect();
    WeaknessReport { topics, erroneous }
}
