//! Core of a formative self-assessment platform.
//!
//! * [`bank`]: topic forest, typed questions, bank documents.
//! * [`selection`]: turns learner criteria into an ordered, clustered quiz.
//! * [`grading`]: per-item scoring and weighted per-topic percentages.
//! * [`profile`]: knowledge levels, learner profiles, weakness reports.
//! * [`session`]: the assessment lifecycle tying the above together.
//! * [`analytics`]: SUS scoring, two-sample t-tests, engagement counters.
//! * [`synth`]: generated banks and scripted responses.

pub mod analytics;
pub mod bank;
pub mod grading;
pub mod ids;
pub mod levels;
pub mod profile;
pub mod selection;
pub mod session;
pub mod synth;

pub use bank::{export_bank, import_bank, BankError, Question, QuestionBank, QuestionType, TopicHierarchy, TopicNode};
pub use grading::{aggregate_topics, grade_item, Answer, GradingError, ItemScore, Response, TopicResult};
pub use ids::{QuestionId, TopicId};
pub use levels::{Difficulty, EducationLevel, KnowledgeLevel, Relation};
pub use profile::{infer_level, update_profile, weakness_report, LearnerProfile, ProfileError, SessionRecord};
pub use selection::{select, select_auto, Learner, Rule, Selection, SelectionCriteria, SelectionError};
pub use session::{AssessmentSession, SessionError, SessionReport, SessionResults, SessionState};
