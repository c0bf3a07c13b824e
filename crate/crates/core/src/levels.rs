//! Ordinal scales shared by the bank, the selection rules and the learner profile.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Difficulty of an item. Ordered `Easy < Medium < Difficult`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy = 1,
    Medium = 2,
    Difficult = 3,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Difficult];

    pub fn rank(self) -> u8 {
        self as u8
    }

    /// The knowledge level this difficulty is aimed at.
    pub fn knowledge_level(self) -> KnowledgeLevel {
        match self {
            Difficulty::Easy => KnowledgeLevel::Low,
            Difficulty::Medium => KnowledgeLevel::Good,
            Difficulty::Difficult => KnowledgeLevel::High,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Difficult => "difficult",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inferred understanding of a topic. Ordered `Low < Good < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeLevel {
    Low = 1,
    Good = 2,
    High = 3,
}

impl KnowledgeLevel {
    pub const ALL: [KnowledgeLevel; 3] = [KnowledgeLevel::Low, KnowledgeLevel::Good, KnowledgeLevel::High];

    /// Difficulty band matching this level: low/easy, good/medium, high/difficult.
    pub fn difficulty(self) -> Difficulty {
        match self {
            KnowledgeLevel::Low => Difficulty::Easy,
            KnowledgeLevel::Good => Difficulty::Medium,
            KnowledgeLevel::High => Difficulty::Difficult,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KnowledgeLevel::Low => "low",
            KnowledgeLevel::Good => "good",
            KnowledgeLevel::High => "high",
        }
    }
}

impl fmt::Display for KnowledgeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("education level must be within 1..=5, got {0}")]
pub struct InvalidEducationLevel(pub i64);

/// Schooling tier a question targets, ranked 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct EducationLevel(u8);

impl EducationLevel {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn new(rank: i64) -> Result<Self, InvalidEducationLevel> {
        if (Self::MIN as i64..=Self::MAX as i64).contains(&rank) {
            Ok(Self(rank as u8))
        } else {
            Err(InvalidEducationLevel(rank))
        }
    }

    pub fn rank(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = EducationLevel> {
        (Self::MIN..=Self::MAX).map(EducationLevel)
    }
}

impl TryFrom<i64> for EducationLevel {
    type Error = InvalidEducationLevel;

    fn try_from(rank: i64) -> Result<Self, Self::Error> {
        Self::new(rank)
    }
}

impl From<EducationLevel> for u8 {
    fn from(level: EducationLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for EducationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Display labels for the five education ranks; configurable per deployment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EducationLabels([String; 5]);

impl EducationLabels {
    pub fn new(labels: [String; 5]) -> Self {
        Self(labels)
    }

    pub fn label(&self, level: EducationLevel) -> &str {
        &self.0[level.rank() as usize - 1]
    }
}

impl Default for EducationLabels {
    fn default() -> Self {
        Self([
            "Primary".to_owned(),
            "Lower secondary".to_owned(),
            "Upper secondary".to_owned(),
            "Undergraduate".to_owned(),
            "Postgraduate".to_owned(),
        ])
    }
}

/// Comparison applied between an item attribute and a pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    AtMost,
    Match,
    AtLeast,
    Above,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::Below,
        Relation::AtMost,
        Relation::Match,
        Relation::AtLeast,
        Relation::Above,
    ];

    /// Whether `value <relation> pivot` holds.
    pub fn holds<T: Ord>(self, value: &T, pivot: &T) -> bool {
        match self {
            Relation::Below => value < pivot,
            Relation::AtMost => value <= pivot,
            Relation::Match => value == pivot,
            Relation::AtLeast => value >= pivot,
            Relation::Above => value > pivot,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Below => "below",
            Relation::AtMost => "at_most",
            Relation::Match => "match",
            Relation::AtLeast => "at_least",
            Relation::Above => "above",
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown relation `{s}`"))
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
