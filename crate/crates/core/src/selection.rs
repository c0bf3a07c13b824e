//! Criteria-driven question selection.
//!
//! Candidates are the questions visible under the requested topics. A rule
//! filters them, the survivors are clustered by their narrowest subtopic and,
//! when there are more than requested, sampled down proportionally per
//! cluster with a seeded generator.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{Question, QuestionBank, QuestionType};
use crate::ids::{QuestionId, TopicId};
use crate::levels::{Difficulty, EducationLevel, KnowledgeLevel, Relation};
use crate::profile::LearnerProfile;

/// Knowledge level assumed for a topic the profile has no evidence for.
pub const DEFAULT_KNOWLEDGE: KnowledgeLevel = KnowledgeLevel::Good;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// Compare item difficulty with a fixed pivot.
    ByDifficulty { relation: Relation, pivot: Difficulty },
    /// Compare item difficulty with the learner's knowledge level. A declared
    /// `pivot` wins over the profile.
    ByKnowledge {
        relation: Relation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pivot: Option<KnowledgeLevel>,
    },
    /// Compare the item's education level with the learner's. A declared
    /// `pivot` wins over the profile.
    ByEducation {
        relation: Relation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pivot: Option<EducationLevel>,
    },
    /// Profile-driven: matching education level, difficulty from the stored
    /// knowledge of each topic.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    pub topics: Vec<TopicId>,
    pub rule: Rule,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub include_likert: bool,
}

impl SelectionCriteria {
    pub fn new(topics: Vec<TopicId>, rule: Rule, count: usize) -> Self {
        Self { topics, rule, count, seed: None, include_likert: false }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Who is asking. Guests have no stored profile.
#[derive(Debug, Clone, Copy)]
pub enum Learner<'a> {
    Guest,
    Registered(&'a LearnerProfile),
}

impl<'a> Learner<'a> {
    fn profile(self) -> Option<&'a LearnerProfile> {
        match self {
            Learner::Guest => None,
            Learner::Registered(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("unknown topic `{0}`")]
    UnknownTopic(TopicId),
    #[error("{0}")]
    MissingProfile(&'static str),
    #[error("invalid criteria: {0}")]
    InvalidCriteria(String),
}

#[derive(Debug, Clone)]
pub struct Selection<'a> {
    /// Ordered by cluster topic id, then difficulty, then question id.
    pub questions: Vec<&'a Question>,
    /// Cluster topic of each entry in `questions`.
    pub clusters: Vec<TopicId>,
    /// Number of questions that satisfied the rule before sampling.
    pub matched: usize,
    /// Set when nothing matched.
    pub diagnostic: Option<String>,
}

impl Selection<'_> {
    pub fn ids(&self) -> Vec<QuestionId> {
        self.questions.iter().map(|q| q.id.clone()).collect()
    }
}

/// The deepest declared topic of `q` lying inside one of `requested`;
/// ties go to the smallest id.
pub fn narrowest_topic<'b>(bank: &'b QuestionBank, q: &'b Question, requested: &[TopicId]) -> Option<&'b TopicId> {
    let topics = bank.topics();
    q.topics
        .iter()
        .filter(|t| requested.iter().any(|r| topics.is_within(t.as_str(), r.as_str())))
        .min_by(|a, b| {
            topics
                .depth(b.as_str())
                .cmp(&topics.depth(a.as_str()))
                .then_with(|| a.cmp(b))
        })
}

fn validate(bank: &QuestionBank, topics: &[TopicId], count: usize) -> Result<(), SelectionError> {
    if topics.is_empty() {
        return Err(SelectionError::InvalidCriteria("at least one topic is required".into()));
    }
    if count == 0 {
        return Err(SelectionError::InvalidCriteria("count must be at least 1".into()));
    }
    if let Some(t) = topics.iter().find(|t| !bank.topics().contains(t.as_str())) {
        return Err(SelectionError::UnknownTopic(t.clone()));
    }
    Ok(())
}

/// Applies `criteria` for `learner`. An empty result is not an error.
pub fn select<'a>(
    bank: &'a QuestionBank,
    criteria: &SelectionCriteria,
    learner: Learner<'_>,
) -> Result<Selection<'a>, SelectionError> {
    validate(bank, &criteria.topics, criteria.count)?;
    let profile = learner.profile();
    let filter: Box<dyn Fn(&TopicId, &Question) -> bool> = match criteria.rule {
        Rule::ByDifficulty { relation, pivot } => Box::new(move |_, q| relation.holds(&q.difficulty, &pivot)),
        Rule::ByKnowledge { relation, pivot } => {
            let pivots = knowledge_pivots(bank, &criteria.topics, pivot, profile)?;
            Box::new(move |t, q| relation.holds(&q.difficulty, &pivots[t].difficulty()))
        }
        Rule::ByEducation { relation, pivot } => {
            let pivot = pivot.or(profile.map(|p| p.education_level)).ok_or(SelectionError::MissingProfile(
                "selection by education level needs a declared level or a registered profile",
            ))?;
            Box::new(move |_, q| relation.holds(&q.education_level, &pivot))
        }
        Rule::Auto => {
            let profile = profile.ok_or(SelectionError::MissingProfile("auto mode needs a registered profile"))?;
            return Ok(auto(bank, profile, criteria));
        }
    };
    Ok(assemble(bank, criteria, |t, q| filter(t, q)))
}

/// Profile-driven selection: per topic, items at the learner's education level
/// whose difficulty matches the stored knowledge for that topic (good when unrecorded).
pub fn select_auto<'a>(
    bank: &'a QuestionBank,
    profile: &LearnerProfile,
    topics: &[TopicId],
    count: usize,
) -> Result<Selection<'a>, SelectionError> {
    let criteria = SelectionCriteria::new(topics.to_vec(), Rule::Auto, count);
    validate(bank, topics, count)?;
    Ok(auto(bank, profile, &criteria))
}

fn auto<'a>(bank: &'a QuestionBank, profile: &LearnerProfile, criteria: &SelectionCriteria) -> Selection<'a> {
    let difficulty: BTreeMap<&TopicId, Difficulty> = criteria
        .topics
        .iter()
        .map(|t| {
            let level = profile.knowledge_for(bank, t.as_str()).unwrap_or(DEFAULT_KNOWLEDGE);
            (t, level.difficulty())
        })
        .collect();
    let education = profile.education_level;
    assemble(bank, criteria, |t, q| q.education_level == education && q.difficulty == difficulty[t])
}

fn knowledge_pivots(
    bank: &QuestionBank,
    topics: &[TopicId],
    declared: Option<KnowledgeLevel>,
    profile: Option<&LearnerProfile>,
) -> Result<BTreeMap<TopicId, KnowledgeLevel>, SelectionError> {
    topics
        .iter()
        .map(|t| {
            let level = match (declared, profile) {
                (Some(level), _) => level,
                (None, Some(p)) => p.knowledge_for(bank, t.as_str()).unwrap_or(DEFAULT_KNOWLEDGE),
                (None, None) => {
                    return Err(SelectionError::MissingProfile(
                        "selection by knowledge level needs a declared level or a registered profile",
                    ))
                }
            };
            Ok((t.clone(), level))
        })
        .collect()
}

/// Collects candidates per requested topic, clusters, orders and samples them.
fn assemble<'a>(
    bank: &'a QuestionBank,
    criteria: &SelectionCriteria,
    keep: impl Fn(&TopicId, &Question) -> bool,
) -> Selection<'a> {
    let mut matched: IndexMap<&QuestionId, &Question> = IndexMap::new();
    for topic in &criteria.topics {
        let closure = bank.closure(topic.as_str()).expect("topics validated");
        for q in closure {
            if q.kind() == QuestionType::Likert && !criteria.include_likert {
                continue;
            }
            if keep(topic, q) {
                matched.insert(&q.id, q);
            }
        }
    }

    let mut clusters: BTreeMap<&TopicId, Vec<&Question>> = BTreeMap::new();
    for q in matched.values() {
        let cluster = narrowest_topic(bank, q, &criteria.topics).expect("candidate lies in a requested subtree");
        clusters.entry(cluster).or_default().push(q);
    }
    for items in clusters.values_mut() {
        items.sort_by(|a, b| a.difficulty.cmp(&b.difficulty).then_with(|| a.id.cmp(&b.id)));
    }

    let total = matched.len();
    let quotas = if total > criteria.count {
        let sizes: Vec<usize> = clusters.values().map(Vec::len).collect();
        largest_remainder(&sizes, criteria.count)
    } else {
        clusters.values().map(Vec::len).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(criteria.seed.unwrap_or(0));
    let mut questions = Vec::with_capacity(total.min(criteria.count));
    let mut cluster_ids = Vec::with_capacity(questions.capacity());
    for ((topic, items), quota) in clusters.into_iter().zip(quotas) {
        let picked: Vec<usize> = if quota == items.len() {
            (0..quota).collect()
        } else {
            let mut idx = index::sample(&mut rng, items.len(), quota).into_vec();
            idx.sort_unstable();
            idx
        };
        for i in picked {
            questions.push(items[i]);
            cluster_ids.push(topic.clone());
        }
    }

    let diagnostic = (total == 0).then(|| {
        format!(
            "no questions under {} satisfy the {} rule",
            criteria.topics.iter().map(|t| format!("`{t}`")).collect::<Vec<_>>().join(", "),
            rule_name(&criteria.rule)
        )
    });
    Selection { questions, clusters: cluster_ids, matched: total, diagnostic }
}

fn rule_name(rule: &Rule) -> String {
    match rule {
        Rule::ByDifficulty { relation, pivot } => format!("difficulty {relation} {pivot}"),
        Rule::ByKnowledge { relation, .. } => format!("knowledge {relation}"),
        Rule::ByEducation { relation, .. } => format!("education {relation}"),
        Rule::Auto => "auto".to_owned(),
    }
}

/// Splits `count` across groups proportionally to `sizes` (Hamilton's method).
///
/// Requires `count <= sizes.iter().sum()`. Leftover seats go to the largest
/// remainders; ties favour earlier groups.
pub fn largest_remainder(sizes: &[usize], count: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    assert!(count <= total, "cannot allocate {count} seats over {total} items");
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|s| s * count / total).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // remainders compared exactly as integers over the common denominator `total`
    order.sort_by(|&a, &b| ((sizes[b] * count) % total).cmp(&((sizes[a] * count) % total)).then(a.cmp(&b)));
    let leftover = count - quotas.iter().sum::<usize>();
    for &i in order.iter().take(leftover) {
        quotas[i] += 1;
    }
    quotas
}
