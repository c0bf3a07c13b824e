use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::question::QuestionRecord;
use super::{BankError, QuestionBank, TopicHierarchy, TopicNode};

/// Current bank document format.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BankDocument {
    format_version: u32,
    topics: Vec<TopicNode>,
    questions: Vec<QuestionRecord>,
}

/// Parses and validates a bank document.
///
/// Malformed JSON or envelope fields yield [`BankError::Parse`] with a line,
/// column and field path. Content problems are collected into
/// [`BankError::Validation`] (or returned directly when there is exactly one).
pub fn import_bank(text: &str) -> Result<QuestionBank, BankError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: BankDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        BankError::Parse {
            line: inner.line(),
            column: inner.column(),
            path,
            message: inner.to_string(),
        }
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(BankError::Parse {
            line: 1,
            column: 1,
            path: "format_version".into(),
            message: format!("unsupported format version {}, expected {FORMAT_VERSION}", doc.format_version),
        });
    }

    let mut errors = Vec::new();
    let topics = TopicHierarchy::from_nodes(doc.topics).unwrap_or_else(|e| {
        errors.extend(e);
        TopicHierarchy::new()
    });
    let topics_valid = errors.is_empty();
    let shell = QuestionBank::from_parts(topics, IndexMap::new());

    let mut questions = IndexMap::with_capacity(doc.questions.len());
    for record in doc.questions {
        let q = match record.into_question() {
            Ok(q) => q,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        if questions.contains_key(&q.id) {
            errors.push(BankError::DuplicateId { kind: "question", id: q.id.to_string() });
            continue;
        }
        if topics_valid {
            errors.extend(shell.check_question(&q));
        } else {
            errors.extend(q.check());
        }
        questions.insert(q.id.clone(), q);
    }

    if let Some(err) = BankError::from_violations(errors) {
        return Err(err);
    }
    Ok(QuestionBank::from_parts(shell.topics, questions))
}

/// Serializes a bank in canonical form: two-space indented JSON with a trailing newline.
///
/// Topics and questions keep bank order; key maps are sorted by id.
pub fn export_bank(bank: &QuestionBank) -> String {
    let doc = BankDocument {
        format_version: FORMAT_VERSION,
        topics: bank.topics.iter().cloned().collect(),
        questions: bank.questions().cloned().map(QuestionRecord::from).collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("bank documents serialize");
    out.push('\n');
    out
}
