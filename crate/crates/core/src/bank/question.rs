use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::BankError;
use crate::ids::{QuestionId, TopicId};
use crate::levels::{Difficulty, EducationLevel};

/// The ten supported item formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    MultipleChoice,
    MultipleResponse,
    TrueFalse,
    FillBlanks,
    Matching,
    Sequence,
    Hotspot,
    DragDrop,
    SelectLists,
    Likert,
}

impl QuestionType {
    pub const ALL: [QuestionType; 10] = [
        QuestionType::MultipleChoice,
        QuestionType::MultipleResponse,
        QuestionType::TrueFalse,
        QuestionType::FillBlanks,
        QuestionType::Matching,
        QuestionType::Sequence,
        QuestionType::Hotspot,
        QuestionType::DragDrop,
        QuestionType::SelectLists,
        QuestionType::Likert,
    ];

    /// Likert items have no correct answer and are never scored.
    pub fn is_keyed(self) -> bool {
        self != QuestionType::Likert
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::MultipleChoice => "multiple_choice",
            QuestionType::MultipleResponse => "multiple_response",
            QuestionType::TrueFalse => "true_false",
            QuestionType::FillBlanks => "fill_blanks",
            QuestionType::Matching => "matching",
            QuestionType::Sequence => "sequence",
            QuestionType::Hotspot => "hotspot",
            QuestionType::DragDrop => "drag_drop",
            QuestionType::SelectLists => "select_lists",
            QuestionType::Likert => "likert",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Question text plus an optional opaque media URI (image, video, animation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stem {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<String>,
}

impl Stem {
    pub fn text(text: impl Into<String>) -> Self {
        Self { text: text.into(), media: None }
    }
}

/// A labelled, addressable part of a question body (an option, a matching side, a zone...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<String>,
}

impl Choice {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into(), media: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceBody {
    pub options: Vec<Choice>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueFalseBody {}

/// `text` marks blanks inline as `{{blank_id}}`; `blanks` lists them in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillBlanksBody {
    pub text: String,
    pub blanks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingBody {
    pub left: Vec<Choice>,
    pub right: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceBody {
    pub items: Vec<Choice>,
}

/// Clickable image; coordinates are in image pixel space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotspotBody {
    pub image: String,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragDropBody {
    pub items: Vec<Choice>,
    pub zones: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionList {
    pub id: String,
    pub options: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectListsBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub lists: Vec<OptionList>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikertBody {
    pub points: u8,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

/// Type-specific presentation payload. The variant determines the question type.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Body {
    MultipleChoice(ChoiceBody),
    MultipleResponse(ChoiceBody),
    TrueFalse(TrueFalseBody),
    FillBlanks(FillBlanksBody),
    Matching(MatchingBody),
    Sequence(SequenceBody),
    Hotspot(HotspotBody),
    DragDrop(DragDropBody),
    SelectLists(SelectListsBody),
    Likert(LikertBody),
}

impl Body {
    pub fn kind(&self) -> QuestionType {
        match self {
            Body::MultipleChoice(_) => QuestionType::MultipleChoice,
            Body::MultipleResponse(_) => QuestionType::MultipleResponse,
            Body::TrueFalse(_) => QuestionType::TrueFalse,
            Body::FillBlanks(_) => QuestionType::FillBlanks,
            Body::Matching(_) => QuestionType::Matching,
            Body::Sequence(_) => QuestionType::Sequence,
            Body::Hotspot(_) => QuestionType::Hotspot,
            Body::DragDrop(_) => QuestionType::DragDrop,
            Body::SelectLists(_) => QuestionType::SelectLists,
            Body::Likert(_) => QuestionType::Likert,
        }
    }

    /// Decodes the JSON body of a question of the given type.
    pub fn decode(kind: QuestionType, value: Value) -> Result<Body, serde_json::Error> {
        use serde_json::from_value as de;
        Ok(match kind {
            QuestionType::MultipleChoice => Body::MultipleChoice(de(value)?),
            QuestionType::MultipleResponse => Body::MultipleResponse(de(value)?),
            QuestionType::TrueFalse => Body::TrueFalse(de(value)?),
            QuestionType::FillBlanks => Body::FillBlanks(de(value)?),
            QuestionType::Matching => Body::Matching(de(value)?),
            QuestionType::Sequence => Body::Sequence(de(value)?),
            QuestionType::Hotspot => Body::Hotspot(de(value)?),
            QuestionType::DragDrop => Body::DragDrop(de(value)?),
            QuestionType::SelectLists => Body::SelectLists(de(value)?),
            QuestionType::Likert => Body::Likert(de(value)?),
        })
    }

    /// Ids that explanations may be attached to.
    pub fn part_ids(&self) -> Vec<&str> {
        fn ids(choices: &[Choice]) -> impl Iterator<Item = &str> {
            choices.iter().map(|c| c.id.as_str())
        }
        match self {
            Body::MultipleChoice(b) | Body::MultipleResponse(b) => ids(&b.options).collect(),
            Body::TrueFalse(_) => vec!["true", "false"],
            Body::FillBlanks(b) => b.blanks.iter().map(String::as_str).collect(),
            Body::Matching(b) => ids(&b.left).chain(ids(&b.right)).collect(),
            Body::Sequence(b) => ids(&b.items).collect(),
            Body::Hotspot(_) => vec![HOTSPOT_PART],
            Body::DragDrop(b) => ids(&b.items).chain(ids(&b.zones)).collect(),
            Body::SelectLists(b) => b.lists.iter().map(|l| l.id.as_str()).collect(),
            Body::Likert(_) => Vec::new(),
        }
    }
}

/// Part id used for explanations attached to a hotspot's keyed region.
pub const HOTSPOT_PART: &str = "region";

/// Keyed area of a hotspot image. Boundaries count as inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Rect { x: f64, y: f64, width: f64, height: f64 },
    Polygon(Vec<[f64; 2]>),
}

impl Region {
    pub fn contains(&self, px: f64, py: f64) -> bool {
        if !(px.is_finite() && py.is_finite()) {
            return false;
        }
        match self {
            Region::Rect { x, y, width, height } => {
                px >= *x && px <= x + width && py >= *y && py <= y + height
            }
            Region::Polygon(vertices) => polygon_contains(vertices, px, py),
        }
    }

    fn check(&self) -> Result<(), String> {
        match self {
            Region::Rect { x, y, width, height } => {
                if ![x, y, width, height].iter().all(|v| v.is_finite()) {
                    return Err("rectangle coordinates must be finite".into());
                }
                if *width <= 0.0 || *height <= 0.0 {
                    return Err("rectangle must have positive width and height".into());
                }
            }
            Region::Polygon(vertices) => {
                if vertices.len() < 3 {
                    return Err("polygon needs at least 3 vertices".into());
                }
                if !vertices.iter().flatten().all(|v| v.is_finite()) {
                    return Err("polygon coordinates must be finite".into());
                }
            }
        }
        Ok(())
    }
}

fn polygon_contains(vertices: &[[f64; 2]], px: f64, py: f64) -> bool {
    let n = vertices.len();
    // boundary first, so edge and vertex clicks are inside
    for i in 0..n {
        let [ax, ay] = vertices[i];
        let [bx, by] = vertices[(i + 1) % n];
        let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        if cross == 0.0
            && px >= ax.min(bx)
            && px <= ax.max(bx)
            && py >= ay.min(by)
            && py <= ay.max(by)
        {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let [xi, yi] = vertices[i];
        let [xj, yj] = vertices[j];
        if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Answer key. The accepted shape depends on the question type; see `docs/bank-format.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Key {
    /// true_false
    Boolean(bool),
    /// multiple_choice: the correct option id
    Choice(String),
    /// multiple_response (set of correct options) and sequence (correct order)
    Ids(Vec<String>),
    /// matching (left to right), drag_drop (item to zone), select_lists (list to option)
    Map(BTreeMap<String, String>),
    /// fill_blanks: acceptable strings per blank
    Blanks(BTreeMap<String, Vec<String>>),
    /// hotspot
    Region(Region),
}

/// A typed assessment item. Construct freely; the bank validates on insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QuestionRecord", try_from = "QuestionRecord")]
pub struct Question {
    pub id: QuestionId,
    pub stem: Stem,
    pub body: Body,
    pub key: Option<Key>,
    pub difficulty: Difficulty,
    pub education_level: EducationLevel,
    pub weight: f64,
    pub topics: Vec<TopicId>,
    pub explanations: BTreeMap<String, String>,
}

impl Question {
    pub fn kind(&self) -> QuestionType {
        self.body.kind()
    }

    pub fn is_graded(&self) -> bool {
        self.kind().is_keyed()
    }

    /// Checks every invariant that does not depend on the topic hierarchy.
    pub fn check(&self) -> Vec<BankError> {
        let mut errors = Vec::new();
        let qid = &self.id;
        if self.id.as_str().trim().is_empty() {
            errors.push(BankError::InvalidId { kind: "question", id: self.id.to_string() });
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            errors.push(BankError::NonPositiveWeight { question: qid.clone(), weight: self.weight });
        }
        if self.topics.is_empty() {
            errors.push(BankError::NoTopics(qid.clone()));
        }
        let mut seen = BTreeSet::new();
        for t in &self.topics {
            if !seen.insert(t) {
                errors.push(BankError::DuplicateId { kind: "topic tag", id: t.to_string() });
            }
        }
        if self.stem.text.trim().is_empty() && self.stem.media.is_none() {
            errors.push(BankError::MalformedBody {
                question: qid.clone(),
                reason: "stem needs text or media".into(),
            });
        }
        if let Err(reason) = check_body(&self.body) {
            errors.push(BankError::MalformedBody { question: qid.clone(), reason });
        } else if let Err(reason) = check_key(&self.body, self.key.as_ref()) {
            errors.push(BankError::MalformedKey { question: qid.clone(), reason });
        }
        let parts: BTreeSet<&str> = self.body.part_ids().into_iter().collect();
        for part in self.explanations.keys() {
            if !parts.contains(part.as_str()) {
                errors.push(BankError::UnknownPart { question: qid.clone(), part: part.clone() });
            }
        }
        errors
    }
}

fn unique_ids<'a>(what: &str, ids: impl IntoIterator<Item = &'a str>) -> Result<BTreeSet<&'a str>, String> {
    let mut set = BTreeSet::new();
    for id in ids {
        if id.trim().is_empty() {
            return Err(format!("{what} has an empty id"));
        }
        if !set.insert(id) {
            return Err(format!("{what} id `{id}` is not unique"));
        }
    }
    Ok(set)
}

fn choice_ids(choices: &[Choice]) -> impl Iterator<Item = &str> {
    choices.iter().map(|c| c.id.as_str())
}

fn at_least(what: &str, len: usize, min: usize) -> Result<(), String> {
    if len < min {
        Err(format!("{what} needs at least {min} entries, got {len}"))
    } else {
        Ok(())
    }
}

fn check_body(body: &Body) -> Result<(), String> {
    match body {
        Body::MultipleChoice(b) | Body::MultipleResponse(b) => {
            at_least("options", b.options.len(), 2)?;
            unique_ids("option", choice_ids(&b.options))?;
        }
        Body::TrueFalse(_) => {}
        Body::FillBlanks(b) => {
            at_least("blanks", b.blanks.len(), 1)?;
            unique_ids("blank", b.blanks.iter().map(String::as_str))?;
        }
        Body::Matching(b) => {
            at_least("left", b.left.len(), 1)?;
            unique_ids("matching part", choice_ids(&b.left).chain(choice_ids(&b.right)))?;
        }
        Body::Sequence(b) => {
            at_least("items", b.items.len(), 2)?;
            unique_ids("item", choice_ids(&b.items))?;
        }
        Body::Hotspot(b) => {
            if b.image.trim().is_empty() {
                return Err("hotspot needs an image reference".into());
            }
            if !(b.width.is_finite() && b.height.is_finite() && b.width > 0.0 && b.height > 0.0) {
                return Err("hotspot image dimensions must be positive".into());
            }
        }
        Body::DragDrop(b) => {
            at_least("items", b.items.len(), 1)?;
            at_least("zones", b.zones.len(), 1)?;
            unique_ids("drag-and-drop part", choice_ids(&b.items).chain(choice_ids(&b.zones)))?;
        }
        Body::SelectLists(b) => {
            at_least("lists", b.lists.len(), 1)?;
            unique_ids("list", b.lists.iter().map(|l| l.id.as_str()))?;
            for list in &b.lists {
                at_least(&format!("list `{}` options", list.id), list.options.len(), 2)?;
                unique_ids("list option", choice_ids(&list.options))?;
            }
        }
        Body::Likert(b) => {
            if !(2..=11).contains(&b.points) {
                return Err(format!("likert scale needs 2..=11 points, got {}", b.points));
            }
            if !b.labels.is_empty() && b.labels.len() != b.points as usize {
                return Err(format!("likert scale has {} points but {} labels", b.points, b.labels.len()));
            }
        }
    }
    Ok(())
}

fn same_keys<V>(what: &str, map: &BTreeMap<String, V>, expected: &BTreeSet<&str>) -> Result<(), String> {
    if let Some(extra) = map.keys().find(|k| !expected.contains(k.as_str())) {
        return Err(format!("key names undeclared {what} `{extra}`"));
    }
    if let Some(missing) = expected.iter().find(|k| !map.contains_key(**k)) {
        return Err(format!("key does not cover {what} `{missing}`"));
    }
    Ok(())
}

fn expect_shape(kind: QuestionType, key: &Key) -> String {
    let shape = match key {
        Key::Boolean(_) => "boolean",
        Key::Choice(_) => "string",
        Key::Ids(_) => "list",
        Key::Map(_) => "map of strings",
        Key::Blanks(_) => "map of lists",
        Key::Region(_) => "region",
    };
    format!("a {shape} key does not fit a {kind} question")
}

fn check_key(body: &Body, key: Option<&Key>) -> Result<(), String> {
    let kind = body.kind();
    let key = match (kind.is_keyed(), key) {
        (false, None) => return Ok(()),
        (false, Some(_)) => return Err("likert questions carry no key".into()),
        (true, None) => return Err(format!("{kind} question has no key")),
        (true, Some(k)) => k,
    };
    match (body, key) {
        (Body::MultipleChoice(b), Key::Choice(id)) => {
            if !choice_ids(&b.options).any(|o| o == id) {
                return Err(format!("key names undeclared option `{id}`"));
            }
        }
        (Body::MultipleResponse(b), Key::Ids(ids)) => {
            if ids.is_empty() {
                return Err("key must name at least one option".into());
            }
            let options: BTreeSet<&str> = choice_ids(&b.options).collect();
            let mut seen = BTreeSet::new();
            for id in ids {
                if !options.contains(id.as_str()) {
                    return Err(format!("key names undeclared option `{id}`"));
                }
                if !seen.insert(id) {
                    return Err(format!("key repeats option `{id}`"));
                }
            }
        }
        (Body::TrueFalse(_), Key::Boolean(_)) => {}
        (Body::FillBlanks(b), Key::Blanks(map)) => {
            let blanks: BTreeSet<&str> = b.blanks.iter().map(String::as_str).collect();
            same_keys("blank", map, &blanks)?;
            for (blank, accepted) in map {
                if accepted.is_empty() || accepted.iter().any(|s| s.trim().is_empty()) {
                    return Err(format!("blank `{blank}` needs non-empty acceptable answers"));
                }
            }
        }
        (Body::Matching(b), Key::Map(map)) => {
            let left: BTreeSet<&str> = choice_ids(&b.left).collect();
            let right: BTreeSet<&str> = choice_ids(&b.right).collect();
            same_keys("left item", map, &left)?;
            let targets: BTreeSet<&str> = map.values().map(String::as_str).collect();
            if targets != right || left.len() != right.len() {
                return Err("matching key must pair left and right items one to one".into());
            }
        }
        (Body::Sequence(b), Key::Ids(order)) => {
            let items: BTreeSet<&str> = choice_ids(&b.items).collect();
            let keyed: BTreeSet<&str> = order.iter().map(String::as_str).collect();
            if order.len() != items.len() || keyed != items {
                return Err("sequence key must be a permutation of the items".into());
            }
        }
        (Body::Hotspot(_), Key::Region(region)) => region.check()?,
        (Body::DragDrop(b), Key::Map(map)) => {
            let items: BTreeSet<&str> = choice_ids(&b.items).collect();
            same_keys("item", map, &items)?;
            if let Some(zone) = map.values().find(|z| !choice_ids(&b.zones).any(|id| id == z.as_str())) {
                return Err(format!("key names undeclared zone `{zone}`"));
            }
        }
        (Body::SelectLists(b), Key::Map(map)) => {
            let lists: BTreeSet<&str> = b.lists.iter().map(|l| l.id.as_str()).collect();
            same_keys("list", map, &lists)?;
            for list in &b.lists {
                let chosen = &map[&list.id];
                if !choice_ids(&list.options).any(|o| o == chosen) {
                    return Err(format!("list `{}` key names undeclared option `{chosen}`", list.id));
                }
            }
        }
        (_, key) => return Err(expect_shape(kind, key)),
    }
    Ok(())
}

/// Wire form of a question inside a bank document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct QuestionRecord {
    pub id: QuestionId,
    #[serde(rename = "type")]
    pub kind: QuestionType,
    pub stem: Stem,
    pub body: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<Value>,
    pub difficulty: Difficulty,
    pub education_level: EducationLevel,
    pub weight: f64,
    pub topics: Vec<TopicId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub explanations: BTreeMap<String, String>,
}

impl From<Question> for QuestionRecord {
    fn from(q: Question) -> Self {
        QuestionRecord {
            kind: q.kind(),
            body: serde_json::to_value(&q.body).expect("bodies serialize"),
            key: q.key.map(|k| serde_json::to_value(k).expect("keys serialize")),
            id: q.id,
            stem: q.stem,
            difficulty: q.difficulty,
            education_level: q.education_level,
            weight: q.weight,
            topics: q.topics,
            explanations: q.explanations,
        }
    }
}

impl QuestionRecord {
    /// Decodes body and key. Shape errors are reported as bank violations.
    pub(crate) fn into_question(self) -> Result<Question, BankError> {
        let body = Body::decode(self.kind, self.body).map_err(|e| BankError::MalformedBody {
            question: self.id.clone(),
            reason: e.to_string(),
        })?;
        let key = match self.key {
            None => None,
            Some(value) => Some(serde_json::from_value::<Key>(value).map_err(|_| BankError::MalformedKey {
                question: self.id.clone(),
                reason: format!("key has no recognised shape for a {} question", self.kind),
            })?),
        };
        Ok(Question {
            id: self.id,
            stem: self.stem,
            body,
            key,
            difficulty: self.difficulty,
            education_level: self.education_level,
            weight: self.weight,
            topics: self.topics,
            explanations: self.explanations,
        })
    }
}

impl TryFrom<QuestionRecord> for Question {
    type Error = BankError;

    fn try_from(record: QuestionRecord) -> Result<Self, Self::Error> {
        record.into_question()
    }
}
