//! Assessment session lifecycle: created, in progress, submitted, finalized.
//!
//! Transitions only move forward. Submitting grades every selected item
//! (unanswered items count as skips) and rolls scores up per topic.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::QuestionBank;
use crate::grading::{self, Answer, GradingError, ItemScore, Response, TopicResult};
use crate::ids::{QuestionId, TopicId};
use crate::profile::{weakness_report, ErroneousItem, WeaknessEntry};
use crate::selection::SelectionCriteria;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    InProgress,
    Submitted,
    Finalized,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionState::Created => "created",
            SessionState::InProgress => "in_progress",
            SessionState::Submitted => "submitted",
            SessionState::Finalized => "finalized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("session cannot move from {from} to {to}")]
    Transition { from: SessionState, to: SessionState },
    #[error("question `{0}` is not part of this session")]
    NotInSession(QuestionId),
    #[error(transparent)]
    Grading(#[from] GradingError),
}

/// Graded outcome of a submitted session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResults {
    /// One entry per selected question, in presentation order.
    pub items: Vec<ItemScore>,
    pub topics: Vec<TopicResult>,
    /// Declared topics of every selected question.
    pub concepts: BTreeMap<QuestionId, Vec<TopicId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentSession {
    id: String,
    criteria: SelectionCriteria,
    questions: Vec<QuestionId>,
    state: SessionState,
    answers: BTreeMap<QuestionId, Response>,
    results: Option<SessionResults>,
    completed_at: Option<DateTime<Utc>>,
}

impl AssessmentSession {
    pub fn new(id: impl Into<String>, criteria: SelectionCriteria, questions: Vec<QuestionId>) -> Self {
        Self {
            id: id.into(),
            criteria,
            questions,
            state: SessionState::Created,
            answers: BTreeMap::new(),
            results: None,
            completed_at: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn criteria(&self) -> &SelectionCriteria {
        &self.criteria
    }

    pub fn questions(&self) -> &[QuestionId] {
        &self.questions
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn answers(&self) -> &BTreeMap<QuestionId, Response> {
        &self.answers
    }

    pub fn results(&self) -> Option<&SessionResults> {
        self.results.as_ref()
    }

    pub fn completed_at(&self) -> Option<DateTime<Utc>> {
        self.completed_at
    }

    fn advance(&mut self, to: SessionState) -> Result<(), SessionError> {
        let allowed = matches!(
            (self.state, to),
            (SessionState::Created, SessionState::InProgress)
                | (SessionState::InProgress, SessionState::Submitted)
                | (SessionState::Submitted, SessionState::Finalized)
        );
        if !allowed {
            return Err(SessionError::Transition { from: self.state, to });
        }
        self.state = to;
        Ok(())
    }

    pub fn start(&mut self) -> Result<(), SessionError> {
        self.advance(SessionState::InProgress)
    }

    /// Records (or replaces) an answer. Starts the session if needed.
    pub fn record_answer(&mut self, bank: &QuestionBank, answer: Answer) -> Result<(), SessionError> {
        if !self.questions.contains(&answer.question_id) {
            return Err(SessionError::NotInSession(answer.question_id));
        }
        if self.state > SessionState::InProgress {
            return Err(SessionError::Transition { from: self.state, to: SessionState::InProgress });
        }
        let q = bank
            .question(answer.question_id.as_str())
            .ok_or_else(|| GradingError::UnknownQuestion(answer.question_id.clone()))?;
        grading::check_shape(q, &answer.payload)?;
        if self.state == SessionState::Created {
            self.start()?;
        }
        self.answers.insert(answer.question_id, answer.payload);
        Ok(())
    }

    /// Grades the session. Unanswered items are graded as skips.
    pub fn submit(&mut self, bank: &QuestionBank) -> Result<&SessionResults, SessionError> {
        if self.state == SessionState::Created {
            self.start()?;
        }
        if self.state != SessionState::InProgress {
            return Err(SessionError::Transition { from: self.state, to: SessionState::Submitted });
        }
        let results = grade_session(bank, &self.questions, &self.answers, &self.criteria.topics)?;
        self.advance(SessionState::Submitted)?;
        Ok(self.results.insert(results))
    }

    pub fn finalize(&mut self, at: DateTime<Utc>) -> Result<(), SessionError> {
        self.advance(SessionState::Finalized)?;
        self.completed_at = Some(at);
        Ok(())
    }

    /// Learner-facing report. `None` until the session has been submitted.
    pub fn report(&self, bank: &QuestionBank) -> Option<SessionReport> {
        let results = self.results.as_ref()?;
        Some(SessionReport::compose(&self.id, bank, &self.answers, results))
    }
}

/// Grades `questions` with `answers` and aggregates over the `assessed` topics.
pub fn grade_session(
    bank: &QuestionBank,
    questions: &[QuestionId],
    answers: &BTreeMap<QuestionId, Response>,
    assessed: &[TopicId],
) -> Result<SessionResults, GradingError> {
    let mut items = Vec::with_capacity(questions.len());
    let mut concepts = BTreeMap::new();
    for id in questions {
        let q = bank
            .question(id.as_str())
            .ok_or_else(|| GradingError::UnknownQuestion(id.clone()))?;
        let payload = answers.get(id).cloned().unwrap_or_default();
        items.push(grading::grade_item(q, &Answer { question_id: id.clone(), payload })?);
        concepts.insert(id.clone(), q.topics.clone());
    }
    let topics = grading::aggregate_topics(bank, &items, assessed)?;
    Ok(SessionResults { items, topics, concepts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFeedback {
    pub question_id: QuestionId,
    pub graded: bool,
    pub score: Option<f64>,
    /// `Some(true)` only for a score of exactly 1.
    pub correct: Option<bool>,
    /// Explanations for the parts answered wrongly.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub explanations: BTreeMap<String, String>,
}

/// What the learner sees after submitting. Contains no answer keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub topics: Vec<TopicResult>,
    /// Low-performance topics, weakest first.
    pub weaknesses: Vec<WeaknessEntry>,
    pub erroneous: Vec<ErroneousItem>,
    pub items: Vec<ItemFeedback>,
}

impl SessionReport {
    pub fn compose(
        session_id: &str,
        bank: &QuestionBank,
        answers: &BTreeMap<QuestionId, Response>,
        results: &SessionResults,
    ) -> Self {
        let report = weakness_report(results);
        let items = results
            .items
            .iter()
            .map(|item| {
                let explanations = bank
                    .question(item.question_id.as_str())
                    .map(|q| {
                        let response = answers.get(&item.question_id).cloned().unwrap_or_default();
                        grading::mistakes(q, &response)
                            .into_iter()
                            .filter_map(|part| q.explanations.get(&part).map(|text| (part, text.clone())))
                            .collect()
                    })
                    .unwrap_or_default();
                ItemFeedback {
                    question_id: item.question_id.clone(),
                    graded: item.graded,
                    score: item.score,
                    correct: item.score.map(|s| s == 1.0),
                    explanations,
                }
            })
            .collect();
        SessionReport {
            session_id: session_id.to_owned(),
            topics: results.topics.clone(),
            weaknesses: report.weak_topics().cloned().collect(),
            erroneous: report.erroneous,
            items,
        }
    }
}
