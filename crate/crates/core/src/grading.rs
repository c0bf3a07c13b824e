//! Per-item scoring and weight-normalized topic aggregation.
//!
//! Every keyed type scores into `[0, 1]`:
//!
//! | type | score |
//! |---|---|
//! | multiple_choice, true_false, hotspot | 1 when correct, else 0 |
//! | multiple_response | `max(0, (hits - false picks) / |key|)` |
//! | fill_blanks | fraction of blanks matching an accepted string (trimmed, case-insensitive) |
//! | matching, drag_drop, select_lists | fraction of keyed pairs placed correctly |
//! | sequence | fraction of items in their keyed position |
//!
//! Likert responses are recorded but never scored.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{Body, Choice, Key, Question, QuestionBank, QuestionType, HOTSPOT_PART};
use crate::ids::{QuestionId, TopicId};
use crate::levels::KnowledgeLevel;
use crate::profile::infer_level;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradingError {
    #[error("answer to question `{question}` does not fit a {kind} question: {reason}")]
    ShapeMismatch { question: QuestionId, kind: QuestionType, reason: String },
    #[error("unknown question `{0}`")]
    UnknownQuestion(QuestionId),
}

/// A learner's response payload. Shapes mirror the answer keys; `null` is an explicit skip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    #[default]
    Skip,
    /// true_false
    Boolean(bool),
    /// likert point, 1-based
    Scale(u32),
    /// multiple_choice option id
    Choice(String),
    /// multiple_response selection, sequence ordering
    Ids(Vec<String>),
    /// hotspot click in image pixel space
    Point { x: f64, y: f64 },
    /// fill_blanks texts, matching / drag_drop / select_lists assignments
    Map(BTreeMap<String, String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub question_id: QuestionId,
    #[serde(default)]
    pub payload: Response,
}

impl Answer {
    pub fn new(question_id: impl Into<QuestionId>, payload: Response) -> Self {
        Self { question_id: question_id.into(), payload }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub question_id: QuestionId,
    /// In `[0, 1]`; `None` for ungraded (likert) items.
    pub score: Option<f64>,
    /// `score * weight`.
    pub weighted: Option<f64>,
    pub graded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicResult {
    pub topic_id: TopicId,
    /// Weighted mean score over graded items attributed to the topic, in `[0, 100]`.
    pub percent: f64,
    pub item_count: usize,
    pub inferred_level: KnowledgeLevel,
}

fn mismatch(q: &Question, reason: impl Into<String>) -> GradingError {
    GradingError::ShapeMismatch { question: q.id.clone(), kind: q.kind(), reason: reason.into() }
}

fn declared<'a>(q: &Question, choices: &'a [Choice], id: &str) -> Result<&'a Choice, GradingError> {
    choices
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| mismatch(q, format!("`{id}` is not declared")))
}

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Checks the payload shape against the question and returns it unchanged when valid.
pub fn check_shape<'r>(q: &Question, response: &'r Response) -> Result<&'r Response, GradingError> {
    if matches!(response, Response::Skip) {
        return Ok(response);
    }
    match (&q.body, response) {
        (Body::MultipleChoice(b), Response::Choice(id)) => {
            declared(q, &b.options, id)?;
        }
        (Body::MultipleResponse(b), Response::Ids(ids)) => {
            let mut seen = BTreeSet::new();
            for id in ids {
                declared(q, &b.options, id)?;
                if !seen.insert(id) {
                    return Err(mismatch(q, format!("option `{id}` selected twice")));
                }
            }
        }
        (Body::TrueFalse(_), Response::Boolean(_)) => {}
        (Body::FillBlanks(b), Response::Map(texts)) => {
            if let Some(extra) = texts.keys().find(|k| !b.blanks.contains(k)) {
                return Err(mismatch(q, format!("blank `{extra}` is not declared")));
            }
        }
        (Body::Matching(b), Response::Map(pairs)) => {
            for (l, r) in pairs {
                declared(q, &b.left, l)?;
                declared(q, &b.right, r)?;
            }
        }
        (Body::Sequence(b), Response::Ids(order)) => {
            let items: BTreeSet<&str> = b.items.iter().map(|c| c.id.as_str()).collect();
            let given: BTreeSet<&str> = order.iter().map(String::as_str).collect();
            if order.len() != items.len() || given != items {
                return Err(mismatch(q, "ordering must be a permutation of the items"));
            }
        }
        (Body::Hotspot(_), Response::Point { .. }) => {}
        (Body::DragDrop(b), Response::Map(placements)) => {
            for (item, zone) in placements {
                declared(q, &b.items, item)?;
                declared(q, &b.zones, zone)?;
            }
        }
        (Body::SelectLists(b), Response::Map(picks)) => {
            for (list_id, option) in picks {
                let list = b
                    .lists
                    .iter()
                    .find(|l| &l.id == list_id)
                    .ok_or_else(|| mismatch(q, format!("list `{list_id}` is not declared")))?;
                declared(q, &list.options, option)?;
            }
        }
        (Body::Likert(b), Response::Scale(point)) => {
            if *point < 1 || *point > b.points as u32 {
                return Err(mismatch(q, format!("point {point} outside 1..={}", b.points)));
            }
        }
        _ => return Err(mismatch(q, "payload has the wrong shape")),
    }
    Ok(response)
}

/// Score in `[0, 1]` for a shape-checked response to a keyed question.
fn score(q: &Question, response: &Response) -> f64 {
    let key = q.key.as_ref().expect("keyed question in a validated bank");
    let map_score = |given: &BTreeMap<String, String>, key: &BTreeMap<String, String>| {
        let hits = key.iter().filter(|(k, v)| given.get(*k) == Some(*v)).count();
        fraction(hits, key.len())
    };
    match (response, key) {
        (Response::Skip, _) => 0.0,
        (Response::Choice(id), Key::Choice(k)) => f64::from(u8::from(id == k)),
        (Response::Boolean(b), Key::Boolean(k)) => f64::from(u8::from(b == k)),
        (Response::Ids(selected), Key::Ids(k)) if q.kind() == QuestionType::MultipleResponse => {
            let hits = selected.iter().filter(|s| k.contains(s)).count();
            let false_picks = selected.len() - hits;
            (hits.saturating_sub(false_picks)) as f64 / k.len() as f64
        }
        (Response::Ids(order), Key::Ids(k)) => {
            let hits = order.iter().zip(k).filter(|(a, b)| a == b).count();
            fraction(hits, k.len())
        }
        (Response::Map(texts), Key::Blanks(accepted)) => {
            let hits = accepted
                .iter()
                .filter(|(blank, options)| {
                    texts
                        .get(*blank)
                        .map(|t| normalize(t))
                        .is_some_and(|t| options.iter().any(|o| normalize(o) == t))
                })
                .count();
            fraction(hits, accepted.len())
        }
        (Response::Map(given), Key::Map(k)) => map_score(given, k),
        (Response::Point { x, y }, Key::Region(region)) => f64::from(u8::from(region.contains(*x, *y))),
        _ => unreachable!("shape checked before scoring"),
    }
}

/// Grades one answer. Likert items yield `graded = false` and no score.
pub fn grade_item(q: &Question, answer: &Answer) -> Result<ItemScore, GradingError> {
    if answer.question_id != q.id {
        return Err(GradingError::UnknownQuestion(answer.question_id.clone()));
    }
    let response = check_shape(q, &answer.payload)?;
    if !q.is_graded() {
        return Ok(ItemScore { question_id: q.id.clone(), score: None, weighted: None, graded: false });
    }
    let s = score(q, response);
    Ok(ItemScore { question_id: q.id.clone(), score: Some(s), weighted: Some(s * q.weight), graded: true })
}

/// Looks the question up in `bank` and grades the answer.
pub fn grade_answer(bank: &QuestionBank, answer: &Answer) -> Result<ItemScore, GradingError> {
    let q = bank
        .question(answer.question_id.as_str())
        .ok_or_else(|| GradingError::UnknownQuestion(answer.question_id.clone()))?;
    grade_item(q, answer)
}

/// Part ids the learner got wrong; explanations for these are shown after submission.
///
/// Empty for correct and ungraded answers. A skip marks every part wrong.
pub fn mistakes(q: &Question, response: &Response) -> Vec<String> {
    let Some(key) = &q.key else {
        return Vec::new();
    };
    if matches!(response, Response::Skip) {
        return q.body.part_ids().into_iter().map(str::to_owned).collect();
    }
    let mut wrong: Vec<String> = match (response, key) {
        (Response::Choice(id), Key::Choice(k)) if id != k => vec![id.clone()],
        (Response::Boolean(b), Key::Boolean(k)) if b != k => vec![b.to_string()],
        (Response::Ids(selected), Key::Ids(k)) if q.kind() == QuestionType::MultipleResponse => selected
            .iter()
            .filter(|s| !k.contains(s))
            .chain(k.iter().filter(|c| !selected.contains(c)))
            .cloned()
            .collect(),
        (Response::Ids(order), Key::Ids(k)) => order
            .iter()
            .zip(k)
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.clone())
            .collect(),
        (Response::Map(texts), Key::Blanks(accepted)) => accepted
            .iter()
            .filter(|(blank, options)| {
                !texts
                    .get(*blank)
                    .is_some_and(|t| options.iter().any(|o| normalize(o) == normalize(t)))
            })
            .map(|(blank, _)| blank.clone())
            .collect(),
        (Response::Map(given), Key::Map(k)) => k
            .iter()
            .filter(|(part, v)| given.get(*part) != Some(*v))
            .map(|(part, _)| part.clone())
            .collect(),
        (Response::Point { x, y }, Key::Region(region)) if !region.contains(*x, *y) => {
            vec![HOTSPOT_PART.to_owned()]
        }
        _ => Vec::new(),
    };
    wrong.sort();
    wrong.dedup();
    wrong
}

/// Topics an item is attributed to: its declared topics plus every ancestor
/// up to the highest assessed topic on each line. With no assessed topics the
/// roll-up reaches the roots. Each topic appears once.
pub fn attributed_topics<'b>(
    bank: &'b QuestionBank,
    q: &'b Question,
    assessed: &[TopicId],
) -> BTreeSet<&'b TopicId> {
    let mut out = BTreeSet::new();
    for tag in &q.topics {
        let chain: Vec<&TopicId> = std::iter::once(tag).chain(bank.topics().ancestors(tag.as_str())).collect();
        let reach = if assessed.is_empty() {
            Some(chain.len())
        } else {
            chain.iter().rposition(|t| assessed.contains(t)).map(|i| i + 1)
        };
        if let Some(reach) = reach {
            out.extend(&chain[..reach]);
        }
    }
    out
}

/// Per-topic weighted percentages over the graded items in `scores`, sorted by topic id.
///
/// Topics without graded items are omitted.
pub fn aggregate_topics(
    bank: &QuestionBank,
    scores: &[ItemScore],
    assessed: &[TopicId],
) -> Result<Vec<TopicResult>, GradingError> {
    #[derive(Default)]
    struct Acc {
        weighted: f64,
        weight: f64,
        count: usize,
    }
    let mut acc: BTreeMap<&TopicId, Acc> = BTreeMap::new();
    for item in scores {
        let q = bank
            .question(item.question_id.as_str())
            .ok_or_else(|| GradingError::UnknownQuestion(item.question_id.clone()))?;
        let Some(score) = item.score.filter(|_| item.graded) else {
            continue;
        };
        for topic in attributed_topics(bank, q, assessed) {
            let a = acc.entry(topic).or_default();
            a.weighted += score * q.weight;
            a.weight += q.weight;
            a.count += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(topic, a)| {
            let percent = (100.0 * (a.weighted / a.weight)).clamp(0.0, 100.0);
            TopicResult {
                topic_id: topic.clone(),
                percent,
                item_count: a.count,
                inferred_level: infer_level(percent).expect("percent clamped into range"),
            }
        })
        .collect())
}

/// Weighted percentage over all graded items, or `None` when nothing was graded.
pub fn overall_percent(bank: &QuestionBank, scores: &[ItemScore]) -> Option<f64> {
    let (mut weighted, mut weight) = (0.0, 0.0);
    for item in scores.iter().filter(|i| i.graded) {
        let q = bank.question(item.question_id.as_str())?;
        weighted += item.score? * q.weight;
        weight += q.weight;
    }
    (weight > 0.0).then(|| (100.0 * (weighted / weight)).clamp(0.0, 100.0))
}
