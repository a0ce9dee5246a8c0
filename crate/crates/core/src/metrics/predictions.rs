//! Prediction files: JSON lines, one record per document.
//!
//! ```text
//! {"id": "0001", "tags": ["B-QUESTION", "I-QUESTION", "O"]}
//! {"id": "0002", "class": 11}
//! {"id": "0003", "answers": ["$12.40", "March"]}
//! ```
//!
//! `tags` holds one BIO tag per word in reading order, `answers` one string
//! per question in sidecar order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bio::Tag;
use crate::document::{Document, Task, TaskPayload, NUM_CLASSES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prediction {
    Tags(Vec<Tag>),
    Class(u8),
    Answers(Vec<String>),
}

impl Prediction {
    pub fn task(&self) -> Task {
        match self {
            Prediction::Tags(_) => Task::Ie,
            Prediction::Class(_) => Task::Classification,
            Prediction::Answers(_) => Task::Vqa,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answers: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    pub items: BTreeMap<String, Prediction>,
}

impl PredictionSet {
    pub fn parse(text: &str) -> Result<Self> {
        let mut items = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let at = |p: &str| format!("predictions:{}{p}", n + 1);
            let de = &mut serde_json::Deserializer::from_str(line);
            let raw: RawRecord = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
                path: at(&format!(":{}", e.path())),
                message: e.into_inner().to_string(),
            })?;
            let pred = match (raw.tags, raw.class, raw.answers) {
                (Some(tags), None, None) => Prediction::Tags(
                    tags.iter()
                        .enumerate()
                        .map(|(i, t)| {
                            t.parse().map_err(|_| {
                                Error::validation(at(&format!(":tags[{i}]")), format!("`{t}` is not a BIO tag"))
                            })
                        })
                        .collect::<Result<_>>()?,
                ),
                (None, Some(c), None) if c < NUM_CLASSES => Prediction::Class(c),
                (None, Some(c), None) => {
                    return Err(Error::validation(at(":class"), format!("class {c} outside 0..{NUM_CLASSES}")))
                }
                (None, None, Some(a)) => Prediction::Answers(a),
                _ => {
                    return Err(Error::validation(
                        at(""),
                        "record needs exactly one of `tags`, `class`, `answers`",
                    ))
                }
            };
            if items.insert(raw.id.clone(), pred).is_some() {
                return Err(Error::validation(at(":id"), format!("duplicate id `{}`", raw.id)));
            }
        }
        Ok(PredictionSet { items })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (id, p) in &self.items {
            let mut raw = RawRecord {
                id: id.clone(),
                tags: None,
                class: None,
                answers: None,
            };
            match p {
                Prediction::Tags(t) => raw.tags = Some(t.iter().map(|t| t.to_string()).collect()),
                Prediction::Class(c) => raw.class = Some(*c),
                Prediction::Answers(a) => raw.answers = Some(a.clone()),
            }
            out.push_str(&serde_json::to_string(&raw).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn get(&self, id: &str) -> Option<&Prediction> {
        self.items.get(id)
    }

    /// Checks ids, task kinds and per-document lengths against the gold set.
    pub fn validate(&self, gold: &[Document]) -> Result<()> {
        let known: BTreeMap<&str, &Document> = gold.iter().map(|d| (d.id.as_str(), d)).collect();
        for (id, pred) in &self.items {
            let doc = known.get(id.as_str()).ok_or_else(|| Error::Alignment {
                doc: id.clone(),
                message: "no gold document with this id".into(),
            })?;
            check(doc, Some(pred))?;
        }
        for doc in gold {
            check(doc, self.get(&doc.id))?;
        }
        Ok(())
    }
}

/// Alignment of one document's prediction with its gold payload.
pub(crate) fn check<'a>(doc: &Document, pred: Option<&'a Prediction>) -> Result<&'a Prediction> {
    let fail = |message: String| Error::Alignment {
        doc: doc.id.clone(),
        message,
    };
    let pred = pred.ok_or_else(|| fail("missing prediction".into()))?;
    if pred.task() != doc.task() {
        return Err(fail(format!("{} prediction for a {} document", pred.task(), doc.task())));
    }
    match (pred, &doc.payload) {
        (Prediction::Tags(t), _) if t.len() != doc.word_count() => Err(fail(format!(
            "{} tags for {} words",
            t.len(),
            doc.word_count()
        ))),
        (Prediction::Answers(a), TaskPayload::Vqa(q)) if a.len() != q.len() => Err(fail(format!(
            "{} answers for {} questions",
            a.len(),
            q.len()
        ))),
        _ => Ok(pred),
    }
}
