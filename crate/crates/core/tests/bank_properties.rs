use std::collections::{BTreeMap, BTreeSet};

use assess_core::bank::{Body, Key, QuestionType, Region};
use assess_core::synth::{generate_bank, sample_question, BankShape};
use assess_core::{export_bank, import_bank, BankError, Question, QuestionBank, TopicId, TopicNode};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tid(i: u8) -> TopicId {
    format!("n{i}").into()
}

/// Walks the oracle parent map; `None` when a cycle is found.
fn oracle_root(parents: &BTreeMap<u8, Option<u8>>, start: u8) -> Option<u8> {
    let mut cur = start;
    for _ in 0..=parents.len() {
        match parents[&cur] {
            Some(p) => cur = p,
            None => return Some(cur),
        }
    }
    None
}

fn oracle_within(parents: &BTreeMap<u8, Option<u8>>, node: u8, ancestor: u8) -> bool {
    let mut cur = Some(node);
    while let Some(c) = cur {
        if c == ancestor {
            return true;
        }
        cur = parents[&c];
    }
    false
}

#[derive(Debug, Clone)]
enum Op {
    Add(u8, Option<u8>),
    Reparent(u8, Option<u8>),
}

fn op() -> impl Strategy<Value = Op> {
    let node = 0u8..12;
    let parent = proptest::option::weighted(0.8, 0u8..12);
    prop_oneof![
        (node.clone(), parent.clone()).prop_map(|(n, p)| Op::Add(n, p)),
        (node, parent).prop_map(|(n, p)| Op::Reparent(n, p)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn forest_survives_any_operation_sequence(ops in proptest::collection::vec(op(), 1..60)) {
        let mut bank = QuestionBank::new();
        let mut parents: BTreeMap<u8, Option<u8>> = BTreeMap::new();
        for op in ops {
            let before = bank.clone();
            let (accept, result) = match op {
                Op::Add(n, p) => {
                    let ok = !parents.contains_key(&n) && p.is_none_or(|p| parents.contains_key(&p));
                    let node = TopicNode { id: tid(n), name: format!("N{n}"), parent: p.map(tid) };
                    (ok, bank.add_topic(node))
                }
                Op::Reparent(n, p) => {
                    let ok = parents.contains_key(&n)
                        && p.is_none_or(|p| parents.contains_key(&p) && !oracle_within(&parents, p, n));
                    (ok, bank.reparent_topic(tid(n).as_str(), p.map(tid)))
                }
            };
            prop_assert_eq!(result.is_ok(), accept, "{:?}", op);
            if accept {
                let (Op::Add(n, p) | Op::Reparent(n, p)) = op;
                parents.insert(n, p);
                prop_assert!(bank.version() > before.version());
            } else {
                prop_assert_eq!(&bank, &before);
                prop_assert_eq!(bank.version(), before.version());
            }
            for (&n, &p) in &parents {
                prop_assert_eq!(bank.topics().get(tid(n).as_str()).unwrap().parent.clone(), p.map(tid));
                prop_assert!(oracle_root(&parents, n).is_some());
            }
            prop_assert_eq!(bank.topics().len(), parents.len());
        }
    }

    #[test]
    fn closure_matches_tag_ancestry_scan(
        parent_picks in proptest::collection::vec(proptest::option::weighted(0.75, any::<prop::sample::Index>()), 1..20),
        tags in proptest::collection::vec(proptest::collection::vec(any::<prop::sample::Index>(), 1..3), 0..40),
    ) {
        let mut bank = QuestionBank::new();
        let mut parents: BTreeMap<u8, Option<u8>> = BTreeMap::new();
        for (i, pick) in parent_picks.iter().enumerate() {
            let i = i as u8;
            let p = if i == 0 { None } else { pick.map(|ix| ix.index(i as usize) as u8) };
            bank.add_topic(TopicNode { id: tid(i), name: format!("N{i}"), parent: p.map(tid) }).unwrap();
            parents.insert(i, p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(tags.len() as u64);
        let mut tagged: Vec<(String, BTreeSet<u8>)> = Vec::new();
        for (qi, picks) in tags.iter().enumerate() {
            let set: BTreeSet<u8> = picks.iter().map(|ix| ix.index(parents.len()) as u8).collect();
            let mut q = sample_question(QuestionType::TrueFalse, &format!("q{qi}"), &mut rng);
            q.topics = set.iter().map(|&t| tid(t)).collect();
            bank.add_question(q).unwrap();
            tagged.push((format!("q{qi}"), set));
        }
        for &t in parents.keys() {
            let expected: BTreeSet<String> = tagged
                .iter()
                .filter(|(_, set)| set.iter().any(|&tag| oracle_within(&parents, tag, t)))
                .map(|(id, _)| id.clone())
                .collect();
            let got: BTreeSet<String> =
                bank.topic_closure(tid(t).as_str()).unwrap().into_iter().map(|q| q.to_string()).collect();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn export_import_is_identity(seed in any::<u64>(), questions in 0usize..40, roots in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = BankShape {
            roots,
            branching: 2,
            depth: 3,
            questions,
            types: QuestionType::ALL.to_vec(),
            multi_tag: 0.3,
        };
        let bank = generate_bank(&shape, &mut rng);
        let text = export_bank(&bank);
        let back = import_bank(&text).unwrap();
        prop_assert_eq!(&back, &bank);
        prop_assert_eq!(export_bank(&back), text);
    }

    #[test]
    fn malformed_keys_are_rejected(seed in any::<u64>(), kind_ix in 0usize..10, how in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = QuestionType::ALL[kind_ix];
        let mut q = sample_question(kind, "q", &mut rng);
        q.topics = vec!["t".into()];
        q.key = corrupt(&q, how);
        let mut bank = QuestionBank::new();
        bank.add_topic(TopicNode::root("t", "T")).unwrap();
        let errors = bank.check_question(&q);
        prop_assert!(
            errors.iter().any(|e| matches!(e, BankError::MalformedKey { .. })),
            "{kind} corruption {how} accepted: {:?}", q.key
        );
        prop_assert!(bank.add_question(q).is_err());
        prop_assert!(bank.is_empty());
    }
}

/// Produces a key that violates the rule for `q`'s type.
fn corrupt(q: &Question, how: usize) -> Option<Key> {
    let key = q.key.clone();
    // wrong-shape keys apply to every type
    let foreign = [
        Some(Key::Boolean(true)),
        Some(Key::Choice("zz".into())),
        Some(Key::Ids(vec!["zz".into()])),
        Some(Key::Region(Region::Rect { x: 0.0, y: 0.0, width: 1.0, height: 1.0 })),
    ];
    match (&q.body, key) {
        (Body::Likert(_), _) => foreign[how % foreign.len()].clone(),
        (_, None) => unreachable!("keyed sample without key"),
        (_, Some(_)) if how == 0 => None,
        (Body::MultipleChoice(_), Some(_)) => [Key::Choice("zz".into()), Key::Boolean(false), Key::Ids(vec![])]
            .into_iter()
            .nth(how - 1),
        (Body::MultipleResponse(b), Some(Key::Ids(mut ids))) => Some(match how {
            1 => Key::Ids(Vec::new()),
            2 => {
                ids.push("zz".into());
                Key::Ids(ids)
            }
            _ => {
                ids.push(b.options[0].id.clone());
                ids.push(b.options[0].id.clone());
                Key::Ids(ids)
            }
        }),
        (Body::TrueFalse(_), Some(_)) => foreign[how].clone(),
        (Body::FillBlanks(_), Some(Key::Blanks(mut blanks))) => Some(match how {
            1 => {
                blanks.pop_first();
                Key::Blanks(blanks)
            }
            2 => {
                blanks.insert("zz".into(), vec!["x".into()]);
                Key::Blanks(blanks)
            }
            _ => {
                blanks.values_mut().next().unwrap().clear();
                Key::Blanks(blanks)
            }
        }),
        (Body::Sequence(_), Some(Key::Ids(mut order))) => Some(match how {
            1 => {
                order.pop();
                Key::Ids(order)
            }
            2 => {
                order[0] = "zz".into();
                Key::Ids(order)
            }
            _ => {
                order[1] = order[0].clone();
                Key::Ids(order)
            }
        }),
        (Body::Hotspot(_), Some(_)) => Some(match how {
            1 => Key::Region(Region::Rect { x: 0.0, y: 0.0, width: 0.0, height: 5.0 }),
            2 => Key::Region(Region::Polygon(vec![[0.0, 0.0], [1.0, 1.0]])),
            _ => Key::Choice("region".into()),
        }),
        (Body::Matching(_) | Body::DragDrop(_) | Body::SelectLists(_), Some(Key::Map(mut map))) => {
            Some(match how {
                1 => {
                    map.pop_first();
                    Key::Map(map)
                }
                2 => {
                    *map.values_mut().next().unwrap() = "zz".into();
                    Key::Map(map)
                }
                _ => {
                    map.insert("zz".into(), map.values().next().unwrap().clone());
                    Key::Map(map)
                }
            })
        }
        (body, key) => panic!("unexpected sample {:?} with {key:?}", body.kind()),
    }
}

#[test]
fn removed_topics_must_be_unused_leaves() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bank = generate_bank(&BankShape { questions: 30, ..BankShape::default() }, &mut rng);
    let used: BTreeSet<TopicId> = bank.questions().flat_map(|q| q.topics.clone()).collect();
    let ids: Vec<TopicId> = bank.topics().iter().map(|n| n.id.clone()).collect();
    for id in ids {
        let has_children = bank.topics().children(id.as_str()).next().is_some();
        let result = bank.remove_topic(id.as_str());
        assert_eq!(result.is_ok(), !has_children && !used.contains(&id), "{id}");
    }
}
