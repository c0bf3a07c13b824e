//! Topic hierarchy and question bank.
//!
//! Questions are tagged at any node of the topic forest. Tags are stored as
//! declared; membership in ancestor topics is resolved at query time by
//! [`QuestionBank::topic_closure`].

mod format;
mod question;
mod topics;

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

pub use format::{export_bank, import_bank, FORMAT_VERSION};
pub use question::{
    Body, Choice, ChoiceBody, DragDropBody, FillBlanksBody, HotspotBody, Key, LikertBody, MatchingBody,
    OptionList, Question, QuestionType, Region, SelectListsBody, SequenceBody, Stem, TrueFalseBody,
    HOTSPOT_PART,
};
pub use topics::{TopicHierarchy, TopicNode};

use crate::ids::{QuestionId, TopicId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BankError {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("invalid {kind} id `{id}`")]
    InvalidId { kind: &'static str, id: String },
    #[error("topic `{topic}` names unknown parent `{parent}`")]
    UnknownParent { topic: TopicId, parent: TopicId },
    #[error("placing topic `{topic}` under `{parent}` would create a cycle")]
    CycleDetected { topic: TopicId, parent: TopicId },
    #[error("{}unknown topic `{topic}`", question_prefix(.question))]
    UnknownTopic { topic: TopicId, question: Option<QuestionId> },
    #[error("topic `{0}` still has subtopics or tagged questions")]
    TopicInUse(TopicId),
    #[error("unknown question `{0}`")]
    UnknownQuestion(QuestionId),
    #[error("question `{0}` has no topics")]
    NoTopics(QuestionId),
    #[error("question `{question}`: weight must be positive, got {weight}")]
    NonPositiveWeight { question: QuestionId, weight: f64 },
    #[error("question `{question}`: malformed key: {reason}")]
    MalformedKey { question: QuestionId, reason: String },
    #[error("question `{question}`: malformed body: {reason}")]
    MalformedBody { question: QuestionId, reason: String },
    #[error("question `{question}`: explanation for undeclared part `{part}`")]
    UnknownPart { question: QuestionId, part: String },
    #[error("parse error at line {line}, column {column} ({path}): {message}")]
    Parse { line: usize, column: usize, path: String, message: String },
    #[error("{} validation error(s): {}", .0.len(), ValidationList(.0))]
    Validation(Vec<BankError>),
}

fn question_prefix(question: &Option<QuestionId>) -> String {
    question.as_ref().map(|q| format!("question `{q}`: ")).unwrap_or_default()
}

struct ValidationList<'a>(&'a [BankError]);

impl fmt::Display for ValidationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl BankError {
    /// A single violation stays as itself; several are wrapped in `Validation`.
    pub fn from_violations(mut violations: Vec<BankError>) -> Option<BankError> {
        match violations.len() {
            0 => None,
            1 => violations.pop(),
            _ => Some(BankError::Validation(violations)),
        }
    }

    /// Flattens into individual violations.
    pub fn violations(&self) -> Vec<&BankError> {
        match self {
            BankError::Validation(list) => list.iter().flat_map(BankError::violations).collect(),
            other => vec![other],
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            BankError::DuplicateId { .. } => "duplicate_id",
            BankError::InvalidId { .. } => "invalid_id",
            BankError::UnknownParent { .. } => "unknown_parent",
            BankError::CycleDetected { .. } => "cycle_detected",
            BankError::UnknownTopic { .. } => "unknown_topic",
            BankError::TopicInUse(_) => "topic_in_use",
            BankError::UnknownQuestion(_) => "unknown_question",
            BankError::NoTopics(_) => "no_topics",
            BankError::NonPositiveWeight { .. } => "non_positive_weight",
            BankError::MalformedKey { .. } => "malformed_key",
            BankError::MalformedBody { .. } => "malformed_body",
            BankError::UnknownPart { .. } => "unknown_part",
            BankError::Parse { .. } => "parse_error",
            BankError::Validation(_) => "validation_error",
        }
    }
}

/// Snapshot of the topic forest and the questions tagged into it.
///
/// Mutations validate first and leave the bank untouched on error. `version`
/// increases by one on every successful mutation. Equality compares content
/// only and ignores `version`.
#[derive(Debug, Clone, Default)]
pub struct QuestionBank {
    topics: TopicHierarchy,
    questions: IndexMap<QuestionId, Question>,
    version: u64,
}

impl PartialEq for QuestionBank {
    fn eq(&self, other: &Self) -> bool {
        self.topics == other.topics && self.questions == other.questions
    }
}

impl QuestionBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn topics(&self) -> &TopicHierarchy {
        &self.topics
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Restores a version counter persisted alongside an exported document.
    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.get(id)
    }

    pub fn questions(&self) -> impl Iterator<Item = &Question> {
        self.questions.values()
    }

    pub fn add_topic(&mut self, node: TopicNode) -> Result<(), BankError> {
        self.topics.add(node)?;
        self.version += 1;
        Ok(())
    }

    pub fn reparent_topic(&mut self, id: &str, parent: Option<TopicId>) -> Result<(), BankError> {
        self.topics.reparent(id, parent)?;
        self.version += 1;
        Ok(())
    }

    pub fn rename_topic(&mut self, id: &str, name: impl Into<String>) -> Result<(), BankError> {
        self.topics.rename(id, name)?;
        self.version += 1;
        Ok(())
    }

    /// Removes a topic with no subtopics and no tagged questions.
    pub fn remove_topic(&mut self, id: &str) -> Result<TopicNode, BankError> {
        if self.questions().any(|q| q.topics.iter().any(|t| t.as_str() == id)) {
            return Err(BankError::TopicInUse(id.into()));
        }
        let node = self.topics.remove_leaf(id)?;
        self.version += 1;
        Ok(node)
    }

    /// All violations `q` would cause if stored, ignoring an existing question with the same id.
    pub fn check_question(&self, q: &Question) -> Vec<BankError> {
        let mut errors = q.check();
        for t in &q.topics {
            if !self.topics.contains(t.as_str()) {
                errors.push(BankError::UnknownTopic { topic: t.clone(), question: Some(q.id.clone()) });
            }
        }
        errors
    }

    pub fn add_question(&mut self, q: Question) -> Result<(), BankError> {
        let mut errors = Vec::new();
        if self.questions.contains_key(&q.id) {
            errors.push(BankError::DuplicateId { kind: "question", id: q.id.to_string() });
        }
        errors.extend(self.check_question(&q));
        if let Some(err) = BankError::from_violations(errors) {
            return Err(err);
        }
        self.questions.insert(q.id.clone(), q);
        self.version += 1;
        Ok(())
    }

    /// Replaces the stored question with the same id, keeping its position.
    pub fn replace_question(&mut self, q: Question) -> Result<(), BankError> {
        if !self.questions.contains_key(&q.id) {
            return Err(BankError::UnknownQuestion(q.id));
        }
        if let Some(err) = BankError::from_violations(self.check_question(&q)) {
            return Err(err);
        }
        self.questions.insert(q.id.clone(), q);
        self.version += 1;
        Ok(())
    }

    pub fn remove_question(&mut self, id: &str) -> Result<Question, BankError> {
        let q = self
            .questions
            .shift_remove(id)
            .ok_or_else(|| BankError::UnknownQuestion(id.into()))?;
        self.version += 1;
        Ok(q)
    }

    /// Whether any of the question's declared topics lies in the subtree at `topic`.
    pub fn is_tagged_within(&self, q: &Question, topic: &str) -> bool {
        q.topics.iter().any(|t| self.topics.is_within(t.as_str(), topic))
    }

    /// Questions whose declared topics intersect the subtree rooted at `topic`, in bank order.
    pub fn closure(&self, topic: &str) -> Result<impl Iterator<Item = &Question>, BankError> {
        if !self.topics.contains(topic) {
            return Err(BankError::UnknownTopic { topic: topic.into(), question: None });
        }
        let topic = topic.to_owned();
        Ok(self.questions().filter(move |q| self.is_tagged_within(q, &topic)))
    }

    /// Ids of every question visible at `topic`: tagged there or anywhere beneath it.
    pub fn topic_closure(&self, topic: &str) -> Result<BTreeSet<QuestionId>, BankError> {
        Ok(self.closure(topic)?.map(|q| q.id.clone()).collect())
    }

    pub(crate) fn from_parts(topics: TopicHierarchy, questions: IndexMap<QuestionId, Question>) -> Self {
        Self { topics, questions, version: 0 }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::levels::{Difficulty, EducationLevel};

    fn bank() -> QuestionBank {
        let mut b = QuestionBank::new();
        b.add_topic(TopicNode::root("econ", "Economics")).unwrap();
        b.add_topic(TopicNode::child("econ.demand", "Demand", "econ")).unwrap();
        b.add_topic(TopicNode::child("econ.demand.elasticity", "Elasticity", "econ.demand")).unwrap();
        b.add_topic(TopicNode::child("econ.supply", "Supply", "econ")).unwrap();
        b
    }

    fn mc(id: &str, topic: &str, key: &str) -> Question {
        Question {
            id: id.into(),
            stem: Stem::text("What is the price elasticity of demand?"),
            body: Body::MultipleChoice(ChoiceBody {
                options: (1..=4).map(|i| Choice::new(i.to_string(), format!("option {i}"))).collect(),
            }),
            key: Some(Key::Choice(key.into())),
            difficulty: Difficulty::Medium,
            education_level: EducationLevel::new(3).unwrap(),
            weight: 1.0,
            topics: vec![topic.into()],
            explanations: BTreeMap::new(),
        }
    }

    #[test]
    fn question_is_visible_at_every_ancestor() {
        let mut b = bank();
        b.add_question(mc("q1", "econ.demand.elasticity", "2")).unwrap();
        for t in ["econ.demand.elasticity", "econ.demand", "econ"] {
            assert!(b.topic_closure(t).unwrap().contains("q1"), "{t}");
        }
        assert!(b.topic_closure("econ.supply").unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_questions_without_mutating() {
        let mut b = bank();
        let before = b.version();
        assert!(matches!(
            b.add_question(mc("q1", "econ", "9")),
            Err(BankError::MalformedKey { .. })
        ));
        assert!(matches!(
            b.add_question(mc("q1", "missing", "1")),
            Err(BankError::UnknownTopic { .. })
        ));
        let mut zero = mc("q1", "econ", "1");
        zero.weight = 0.0;
        assert!(matches!(b.add_question(zero), Err(BankError::NonPositiveWeight { .. })));
        assert_eq!(b.version(), before);
        assert!(b.is_empty());

        b.add_question(mc("q1", "econ", "1")).unwrap();
        assert_eq!(b.version(), before + 1);
        assert!(matches!(
            b.add_question(mc("q1", "econ", "1")),
            Err(BankError::DuplicateId { .. })
        ));
    }

    #[test]
    fn several_violations_are_aggregated() {
        let mut b = bank();
        let mut q = mc("q1", "missing", "9");
        q.weight = -1.0;
        let err = b.add_question(q).unwrap_err();
        assert_eq!(err.violations().len(), 3, "{err}");
    }

    #[test]
    fn topics_in_use_cannot_be_removed() {
        let mut b = bank();
        b.add_question(mc("q1", "econ.supply", "1")).unwrap();
        assert!(matches!(b.remove_topic("econ.supply"), Err(BankError::TopicInUse(_))));
        b.remove_question("q1").unwrap();
        b.remove_topic("econ.supply").unwrap();
    }

    #[test]
    fn unknown_topic_query() {
        assert!(matches!(bank().topic_closure("nope"), Err(BankError::UnknownTopic { .. })));
    }
}
