//! FUNSD-style annotation records: one JSON file per page image.
//!
//! ```json
//! {"form": [{"id": 0, "box": [84,109,136,130], "text": "TO:", "label": "question",
//!            "words": [{"box": [84,109,136,130], "text": "TO:"}], "linking": [[0, 1]]}]}
//! ```
//!
//! Page dimensions are not part of the record; they come from the image.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::document::{Document, Entity, Label, TaskPayload, Word};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawAnnotation {
    form: Vec<RawEntity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawEntity {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    bbox: Option<BoundingBox>,
    #[serde(default)]
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default)]
    words: Vec<RawWord>,
    #[serde(default)]
    linking: Vec<(u32, u32)>,
    id: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawWord {
    #[serde(rename = "box")]
    bbox: BoundingBox,
    text: String,
}

/// Page image location plus its pixel dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

impl ImageRef {
    pub fn new(path: impl Into<PathBuf>, width: u32, height: u32) -> Self {
        ImageRef {
            path: path.into(),
            width,
            height,
        }
    }

    /// Reads the dimensions from the image header without decoding pixels.
    pub fn probe(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (width, height) =
            image::image_dimensions(path).map_err(|e| Error::image(path, e))?;
        Ok(ImageRef::new(path, width, height))
    }

    /// Document id derived from the image file stem.
    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

/// A single schema or invariant problem inside one annotation record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

fn decode(bytes: &[u8]) -> Result<RawAnnotation> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse {
            path,
            message: e.into_inner().to_string(),
        }
    })
}

fn box_issue(path: String, b: &BoundingBox) -> Option<Issue> {
    if b.x2 < b.x1 {
        Some(Issue {
            path,
            message: format!("x2 < x1 in box {b}"),
        })
    } else if b.y2 < b.y1 {
        Some(Issue {
            path,
            message: format!("y2 < y1 in box {b}"),
        })
    } else {
        None
    }
}

fn check(raw: &RawAnnotation) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (i, ent) in raw.form.iter().enumerate() {
        if !seen.insert(ent.id) {
            issues.push(Issue {
                path: format!("form[{i}].id"),
                message: format!("duplicate entity id {}", ent.id),
            });
        }
        if let Some(label) = &ent.label {
            if label.parse::<Label>().is_err() {
                issues.push(Issue {
                    path: format!("form[{i}].label"),
                    message: format!("unknown label `{label}`"),
                });
            }
        }
        if let Some(b) = &ent.bbox {
            issues.extend(box_issue(format!("form[{i}].box"), b));
        }
        for (j, w) in ent.words.iter().enumerate() {
            issues.extend(box_issue(format!("form[{i}].words[{j}].box"), &w.bbox));
        }
        let has_words = ent.words.iter().any(|w| !w.text.trim().is_empty());
        if !has_words && ent.bbox.is_none() {
            issues.push(Issue {
                path: format!("form[{i}]"),
                message: "entity has neither words nor a box".into(),
            });
        }
    }
    issues
}

/// Lists every problem in an annotation record without stopping at the first.
pub fn validate_annotation(bytes: &[u8]) -> Vec<Issue> {
    match decode(bytes) {
        Ok(raw) => check(&raw),
        Err(Error::Parse { path, message }) => vec![Issue { path, message }],
        Err(e) => vec![Issue {
            path: String::new(),
            message: e.to_string(),
        }],
    }
}

/// Parses one annotation record into a [`Document`] with an IE payload.
///
/// Word boxes are clamped to the page, words with blank text are dropped and
/// entity boxes are recomputed as the union of their word boxes.
pub fn parse_ie_document(bytes: &[u8], image: &ImageRef) -> Result<Document> {
    if image.width == 0 || image.height == 0 {
        return Err(Error::validation(
            image.path.display().to_string(),
            "page dimensions must be positive",
        ));
    }
    let raw = decode(bytes)?;
    if let Some(issue) = check(&raw).into_iter().next() {
        return Err(Error::Validation {
            path: issue.path,
            message: issue.message,
        });
    }
    let (w, h) = (image.width, image.height);
    let entities = raw
        .form
        .into_iter()
        .map(|ent| {
            let words: Vec<Word> = ent
                .words
                .into_iter()
                .filter(|word| !word.text.trim().is_empty())
                .map(|word| Word {
                    text: word.text,
                    bbox: word.bbox.clamp_to(w, h),
                })
                .collect();
            // check() guarantees one of the two is present
            let fallback = ent
                .bbox
                .map(|b| b.clamp_to(w, h))
                .unwrap_or(BoundingBox::ZERO);
            let mut entity = Entity {
                id: ent.id,
                words,
                bbox: fallback,
                label: ent.label.map(|l| l.parse()).transpose()?,
                links: ent.linking,
            };
            entity.refresh_box();
            Ok(entity)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Document {
        id: image.stem(),
        image_path: image.path.clone(),
        width: w,
        height: h,
        entities,
        payload: TaskPayload::Ie,
    })
}

/// Serializes the annotation part of a document back to the FUNSD record format.
pub fn serialize_document(doc: &Document) -> Vec<u8> {
    let raw = RawAnnotation {
        form: doc
            .entities
            .iter()
            .map(|e| RawEntity {
                bbox: Some(e.bbox),
                text: e.text(),
                label: e.label.map(|l| l.as_str().to_string()),
                words: e
                    .words
                    .iter()
                    .map(|w| RawWord {
                        bbox: w.bbox,
                        text: w.text.clone(),
                    })
                    .collect(),
                linking: e.links.clone(),
                id: e.id,
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&raw).expect("annotation serialization is infallible");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img() -> ImageRef {
        ImageRef::new("images/0001.png", 762, 1000)
    }

    #[test]
    fn minimal_record_parses() {
        let bytes = br#"{"form":[{"id":0,"box":[84,109,136,130],"text":"TO:","label":"question",
            "words":[{"box":[84,109,136,130],"text":"TO:"}],"linking":[]}]}"#;
        let doc = parse_ie_document(bytes, &img()).unwrap();
        assert_eq!(doc.id, "0001");
        assert_eq!(doc.entities.len(), 1);
        assert_eq!(doc.word_count(), 1);
        assert_eq!(doc.entities[0].label, Some(Label::Question));
        assert_eq!(doc.entities[0].bbox.to_array(), [84, 109, 136, 130]);
    }

    #[test]
    fn inverted_box_is_a_validation_error() {
        let bytes = br#"{"form":[{"id":0,"label":"other","words":[{"box":[10,10,5,20],"text":"x"}]}]}"#;
        let err = parse_ie_document(bytes, &img()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Validation { .. }));
        assert!(msg.contains("x2 < x1"), "{msg}");
        assert!(msg.contains("form[0].words[0].box"), "{msg}");
    }

    #[test]
    fn unknown_label_is_a_validation_error() {
        let bytes = br#"{"form":[{"id":0,"label":"footer","words":[{"box":[1,1,5,5],"text":"x"}]}]}"#;
        let err = parse_ie_document(bytes, &img()).unwrap_err();
        assert!(err.to_string().contains("footer"));
    }

    #[test]
    fn malformed_record_names_the_path() {
        let bytes = br#"{"form":[{"id":0,"words":[{"box":[1,2,3],"text":"x"}]}]}"#;
        match parse_ie_document(bytes, &img()).unwrap_err() {
            Error::Parse { path, .. } => assert_eq!(path, "form[0].words[0].box"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn word_union_wins_over_annotated_entity_box() {
        let bytes = br#"{"form":[{"id":3,"box":[0,0,999,999],"label":"answer","words":[
            {"box":[10,10,20,20],"text":"a"},{"box":[30,5,40,15],"text":"b"}]}]}"#;
        let doc = parse_ie_document(bytes, &img()).unwrap();
        assert_eq!(doc.entities[0].bbox.to_array(), [10, 5, 40, 20]);
    }

    #[test]
    fn boxes_are_clamped_and_blank_words_dropped() {
        let bytes = br#"{"form":[{"id":0,"label":"other","words":[
            {"box":[700,950,800,1100],"text":"edge"},{"box":[1,1,2,2],"text":"  "}]}]}"#;
        let doc = parse_ie_document(bytes, &img()).unwrap();
        assert_eq!(doc.word_count(), 1);
        assert_eq!(doc.entities[0].words[0].bbox.to_array(), [700, 950, 762, 1000]);
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let bytes = br#"{"form":[{"id":1,"box":[0,0,1,1]},{"id":1,"box":[0,0,1,1]}]}"#;
        let issues = validate_annotation(bytes);
        assert_eq!(issues.len(), 1);
        assert!(issues[0].message.contains("duplicate"));
    }

    #[test]
    fn empty_document_serializes_to_empty_form() {
        let doc = parse_ie_document(br#"{"form":[]}"#, &img()).unwrap();
        let bytes = serialize_document(&doc);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v, serde_json::json!({"form": []}));
    }

    #[test]
    fn serialized_entity_carries_text_box_label() {
        let bytes = br#"{"form":[{"id":0,"label":"question","words":[{"box":[84,109,136,130],"text":"TO:"}]}]}"#;
        let doc = parse_ie_document(bytes, &img()).unwrap();
        let out = serialize_document(&doc);
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        let ent = &v["form"][0];
        assert_eq!(ent["text"], "TO:");
        assert_eq!(ent["label"], "question");
        assert_eq!(ent["box"], serde_json::json!([84, 109, 136, 130]));
        assert_eq!(serialize_document(&doc), out);
    }

    #[test]
    fn links_pass_through() {
        let bytes = br#"{"form":[{"id":0,"label":"question","words":[{"box":[1,1,2,2],"text":"a"}],"linking":[[0,1]]},
            {"id":1,"label":"answer","words":[{"box":[3,1,4,2],"text":"b"}],"linking":[[0,1]]}]}"#;
        let doc = parse_ie_document(bytes, &img()).unwrap();
        let again = parse_ie_document(&serialize_document(&doc), &img()).unwrap();
        assert_eq!(again.entities[1].links, vec![(0, 1)]);
        assert_eq!(again, doc);
    }
}
