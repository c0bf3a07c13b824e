//! Synthetic banks and scripted responses for simulation and testing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bank::{
    Body, Choice, ChoiceBody, DragDropBody, FillBlanksBody, HotspotBody, Key, LikertBody, MatchingBody,
    OptionList, Question, QuestionBank, QuestionType, Region, SelectListsBody, SequenceBody, Stem, TopicNode,
    TrueFalseBody,
};
use crate::grading::Response;
use crate::ids::TopicId;
use crate::levels::{Difficulty, EducationLevel};

/// Shape of a generated bank.
#[derive(Debug, Clone)]
pub struct BankShape {
    pub roots: usize,
    pub branching: usize,
    /// Levels per tree, counting the root.
    pub depth: usize,
    pub questions: usize,
    pub types: Vec<QuestionType>,
    /// Chance that a question carries a second topic tag.
    pub multi_tag: f64,
}

impl Default for BankShape {
    fn default() -> Self {
        Self {
            roots: 1,
            branching: 3,
            depth: 3,
            questions: 200,
            types: QuestionType::ALL.iter().copied().filter(|t| t.is_keyed()).collect(),
            multi_tag: 0.1,
        }
    }
}

fn tree(bank: &mut QuestionBank, id: String, parent: Option<TopicId>, levels_left: usize, branching: usize) {
    let node = TopicNode { id: id.as_str().into(), name: format!("Topic {id}"), parent };
    bank.add_topic(node).expect("generated ids are unique");
    if levels_left > 1 {
        for c in 0..branching {
            tree(bank, format!("{id}.{c}"), Some(id.as_str().into()), levels_left - 1, branching);
        }
    }
}

/// Generates a valid bank. Difficulty cycles fastest, then education level,
/// so every combination is covered once `questions >= 15`.
pub fn generate_bank(shape: &BankShape, rng: &mut impl Rng) -> QuestionBank {
    let mut bank = QuestionBank::new();
    for r in 0..shape.roots {
        tree(&mut bank, format!("t{r}"), None, shape.depth.max(1), shape.branching);
    }
    let topic_ids: Vec<TopicId> = bank.topics().iter().map(|n| n.id.clone()).collect();
    for i in 0..shape.questions {
        let kind = shape.types[i % shape.types.len()];
        let mut q = sample_question(kind, &format!("q{i:04}"), rng);
        q.difficulty = Difficulty::ALL[i % 3];
        q.education_level = EducationLevel::new((i / 3 % 5) as i64 + 1).expect("rank in range");
        q.weight = *[0.5, 1.0, 1.0, 2.0, 3.0].choose(rng).expect("non-empty");
        let first = topic_ids.choose(rng).expect("at least one topic").clone();
        q.topics = vec![first.clone()];
        if rng.gen_bool(shape.multi_tag) {
            let second = topic_ids.choose(rng).expect("at least one topic");
            if *second != first {
                q.topics.push(second.clone());
            }
        }
        bank.add_question(q).expect("generated questions are valid");
    }
    bank
}

fn choices(prefix: &str, n: usize) -> Vec<Choice> {
    (0..n).map(|i| Choice::new(format!("{prefix}{i}"), format!("{prefix} text {i}"))).collect()
}

/// A valid question of the given type with randomized sizes and key.
/// Topic, difficulty, level and weight are placeholders for the caller to set.
pub fn sample_question(kind: QuestionType, id: &str, rng: &mut impl Rng) -> Question {
    let (body, key) = match kind {
        QuestionType::MultipleChoice => {
            let options = choices("o", rng.gen_range(2..=5));
            let key = options.choose(rng).unwrap().id.clone();
            (Body::MultipleChoice(ChoiceBody { options }), Some(Key::Choice(key)))
        }
        QuestionType::MultipleResponse => {
            let options = choices("o", rng.gen_range(2..=6));
            let k = rng.gen_range(1..=options.len());
            let key = options.choose_multiple(rng, k).map(|c| c.id.clone()).collect();
            (Body::MultipleResponse(ChoiceBody { options }), Some(Key::Ids(key)))
        }
        QuestionType::TrueFalse => (Body::TrueFalse(TrueFalseBody {}), Some(Key::Boolean(rng.gen()))),
        QuestionType::FillBlanks => {
            let blanks: Vec<String> = (0..rng.gen_range(1..=3)).map(|i| format!("b{i}")).collect();
            let text = blanks.iter().map(|b| format!("{{{{{b}}}}}")).collect::<Vec<_>>().join(" and ");
            let key = blanks
                .iter()
                .map(|b| (b.clone(), vec![format!("Answer {b}"), format!("alt {b}")]))
                .collect();
            (Body::FillBlanks(FillBlanksBody { text, blanks }), Some(Key::Blanks(key)))
        }
        QuestionType::Matching => {
            let n = rng.gen_range(2..=5);
            let (left, right) = (choices("l", n), choices("r", n));
            let mut targets: Vec<String> = right.iter().map(|c| c.id.clone()).collect();
            targets.shuffle(rng);
            let key = left.iter().map(|c| c.id.clone()).zip(targets).collect();
            (Body::Matching(MatchingBody { left, right }), Some(Key::Map(key)))
        }
        QuestionType::Sequence => {
            let items = choices("s", rng.gen_range(2..=6));
            let mut order: Vec<String> = items.iter().map(|c| c.id.clone()).collect();
            order.shuffle(rng);
            (Body::Sequence(SequenceBody { items }), Some(Key::Ids(order)))
        }
        QuestionType::Hotspot => {
            let (width, height) = (640.0, 480.0);
            let region = if rng.gen_bool(0.5) {
                let x = rng.gen_range(0..400) as f64;
                let y = rng.gen_range(0..300) as f64;
                Region::Rect { x, y, width: rng.gen_range(20..200) as f64, height: rng.gen_range(20..150) as f64 }
            } else {
                let (cx, cy) = (rng.gen_range(100..540) as f64, rng.gen_range(100..380) as f64);
                Region::Polygon(vec![[cx - 50.0, cy + 40.0], [cx, cy - 60.0], [cx + 50.0, cy + 40.0]])
            };
            let body = HotspotBody { image: format!("media/{id}.png"), width, height };
            (Body::Hotspot(body), Some(Key::Region(region)))
        }
        QuestionType::DragDrop => {
            let items = choices("d", rng.gen_range(1..=4));
            let zones = choices("z", rng.gen_range(2..=3));
            let key = items.iter().map(|c| (c.id.clone(), zones.choose(rng).unwrap().id.clone())).collect();
            (Body::DragDrop(DragDropBody { items, zones }), Some(Key::Map(key)))
        }
        QuestionType::SelectLists => {
            let lists: Vec<OptionList> = (0..rng.gen_range(1..=3))
                .map(|i| OptionList { id: format!("list{i}"), options: choices("o", rng.gen_range(2..=4)) })
                .collect();
            let key = lists.iter().map(|l| (l.id.clone(), l.options.choose(rng).unwrap().id.clone())).collect();
            (Body::SelectLists(SelectListsBody { text: None, lists }), Some(Key::Map(key)))
        }
        QuestionType::Likert => (Body::Likert(LikertBody { points: 5, labels: Vec::new() }), None),
    };
    Question {
        id: id.into(),
        stem: Stem::text(format!("Synthetic {kind} question {id}")),
        body,
        key,
        difficulty: Difficulty::Medium,
        education_level: EducationLevel::new(3).expect("rank in range"),
        weight: 1.0,
        topics: Vec::new(),
        explanations: BTreeMap::new(),
    }
}

/// The fully correct response. Likert items get their middle point.
pub fn correct_response(q: &Question) -> Response {
    match (&q.body, &q.key) {
        (Body::Likert(b), _) => Response::Scale((b.points as u32).div_ceil(2)),
        (_, Some(Key::Boolean(b))) => Response::Boolean(*b),
        (_, Some(Key::Choice(c))) => Response::Choice(c.clone()),
        (_, Some(Key::Ids(ids))) => Response::Ids(ids.clone()),
        (_, Some(Key::Map(m))) => Response::Map(m.clone()),
        (_, Some(Key::Blanks(b))) => Response::Map(b.iter().map(|(k, v)| (k.clone(), v[0].clone())).collect()),
        (_, Some(Key::Region(r))) => {
            let (x, y) = match r {
                Region::Rect { x, y, width, height } => (x + width / 2.0, y + height / 2.0),
                Region::Polygon(v) => {
                    let n = v.len() as f64;
                    (v.iter().map(|p| p[0]).sum::<f64>() / n, v.iter().map(|p| p[1]).sum::<f64>() / n)
                }
            };
            Response::Point { x, y }
        }
        (_, None) => Response::Skip,
    }
}

/// A response scoring exactly 0 that still engages with the item where the
/// shape allows it. `None` for likert items.
pub fn wrong_response(q: &Question) -> Option<Response> {
    let key = q.key.as_ref()?;
    Some(match (&q.body, key) {
        (Body::MultipleChoice(b), Key::Choice(k)) => {
            Response::Choice(b.options.iter().find(|o| &o.id != k).expect("two or more options").id.clone())
        }
        (Body::MultipleResponse(b), Key::Ids(k)) => {
            Response::Ids(b.options.iter().filter(|o| !k.contains(&o.id)).map(|o| o.id.clone()).collect())
        }
        (_, Key::Boolean(b)) => Response::Boolean(!b),
        (_, Key::Blanks(blanks)) => Response::Map(blanks.keys().map(|k| (k.clone(), String::new())).collect()),
        (Body::Sequence(_), Key::Ids(order)) => {
            let mut rotated = order.clone();
            rotated.rotate_left(1);
            Response::Ids(rotated)
        }
        (Body::Matching(_), Key::Map(pairs)) => {
            let lefts: Vec<&String> = pairs.keys().collect();
            let mut rights: Vec<&String> = pairs.values().collect();
            if rights.len() < 2 {
                return Some(Response::Map(BTreeMap::new()));
            }
            rights.rotate_left(1);
            Response::Map(lefts.into_iter().cloned().zip(rights.into_iter().cloned()).collect())
        }
        (Body::DragDrop(b), Key::Map(placements)) => Response::Map(
            placements
                .iter()
                .filter_map(|(item, zone)| {
                    b.zones.iter().find(|z| &z.id != zone).map(|z| (item.clone(), z.id.clone()))
                })
                .collect(),
        ),
        (Body::SelectLists(b), Key::Map(picks)) => Response::Map(
            b.lists
                .iter()
                .filter_map(|l| {
                    l.options.iter().find(|o| o.id != picks[&l.id]).map(|o| (l.id.clone(), o.id.clone()))
                })
                .collect(),
        ),
        (_, Key::Region(r)) => {
            let (x, y) = match r {
                Region::Rect { x, y, width, height } => (x + width + 1.0, y + height + 1.0),
                Region::Polygon(v) => (
                    v.iter().map(|p| p[0]).fold(f64::MIN, f64::max) + 1.0,
                    v.iter().map(|p| p[1]).fold(f64::MIN, f64::max) + 1.0,
                ),
            };
            Response::Point { x, y }
        }
        _ => Response::Skip,
    })
}

/// A random shape-valid response, possibly partial or skipped.
pub fn random_response(q: &Question, rng: &mut impl Rng) -> Response {
    if rng.gen_bool(0.05) {
        return Response::Skip;
    }
    fn pick_map(rng: &mut impl Rng, pairs: Vec<(String, Vec<String>)>) -> Response {
        Response::Map(
            pairs
                .into_iter()
                .filter_map(|(k, options)| {
                    rng.gen_bool(0.85).then(|| (k, options.choose(rng).expect("non-empty option list").clone()))
                })
                .collect(),
        )
    }
    let ids = |c: &[Choice]| c.iter().map(|c| c.id.clone()).collect::<Vec<_>>();
    match &q.body {
        Body::MultipleChoice(b) => Response::Choice(b.options.choose(rng).unwrap().id.clone()),
        Body::MultipleResponse(b) => {
            Response::Ids(b.options.iter().filter(|_| rng.gen_bool(0.5)).map(|o| o.id.clone()).collect())
        }
        Body::TrueFalse(_) => Response::Boolean(rng.gen()),
        Body::FillBlanks(b) => {
            let accepted = match &q.key {
                Some(Key::Blanks(k)) => k.clone(),
                _ => BTreeMap::new(),
            };
            Response::Map(
                b.blanks
                    .iter()
                    .filter_map(|blank| {
                        if !rng.gen_bool(0.9) {
                            return None;
                        }
                        let text = match accepted.get(blank) {
                            Some(options) if rng.gen_bool(0.5) => {
                                format!("  {}  ", options.choose(rng).unwrap().to_uppercase())
                            }
                            _ => "wrong guess".to_owned(),
                        };
                        Some((blank.clone(), text))
                    })
                    .collect(),
            )
        }
        Body::Matching(b) => {
            let right = ids(&b.right);
            pick_map(rng, b.left.iter().map(|l| (l.id.clone(), right.clone())).collect())
        }
        Body::Sequence(b) => {
            let mut order = ids(&b.items);
            order.shuffle(rng);
            Response::Ids(order)
        }
        Body::Hotspot(b) => Response::Point {
            x: rng.gen_range(-10.0..b.width + 10.0),
            y: rng.gen_range(-10.0..b.height + 10.0),
        },
        Body::DragDrop(b) => {
            let zones = ids(&b.zones);
            pick_map(rng, b.items.iter().map(|i| (i.id.clone(), zones.clone())).collect())
        }
        Body::SelectLists(b) => pick_map(rng, b.lists.iter().map(|l| (l.id.clone(), ids(&l.options))).collect()),
        Body::Likert(b) => Response::Scale(rng.gen_range(1..=b.points as u32)),
    }
}
