//! Per-split sidecar records for the classification and VQA tasks.
//!
//! * `labels.txt`: one `<image path> <class id>` pair per line, class in `0..16`.
//! * `qa.jsonl`: one `{"image", "question", "answers"}` object per line.
//!
//! Image paths are relative to the split directory.

use serde::{Deserialize, Serialize};

use crate::document::NUM_CLASSES;
use crate::error::{Error, Result};

pub const CLASSIFICATION_SIDECAR: &str = "labels.txt";
pub const VQA_SIDECAR: &str = "qa.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRecord {
    pub image: String,
    pub class: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VqaRecord {
    pub image: String,
    pub question: String,
    pub answers: Vec<String>,
}

pub fn parse_classification(text: &str) -> Result<Vec<ClassRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let path = format!("{CLASSIFICATION_SIDECAR}:{}", n + 1);
        let (image, class) = line
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| Error::Parse {
                path: path.clone(),
                message: "expected `<image> <class>`".into(),
            })?;
        let class: u8 = class.parse().map_err(|_| Error::Parse {
            path: path.clone(),
            message: format!("class id `{class}` is not an integer"),
        })?;
        if class >= NUM_CLASSES {
            return Err(Error::validation(
                path,
                format!("class id {class} outside 0..{NUM_CLASSES}"),
            ));
        }
        out.push(ClassRecord {
            image: image.trim().to_string(),
            class,
        });
    }
    Ok(out)
}

pub fn serialize_classification(records: &[ClassRecord]) -> Vec<u8> {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{} {}\n", r.image, r.class));
    }
    out.into_bytes()
}

pub fn parse_vqa(text: &str) -> Result<Vec<VqaRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(line);
        let rec: VqaRecord = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: format!("{VQA_SIDECAR}:{}:{}", n + 1, e.path()),
            message: e.into_inner().to_string(),
        })?;
        if rec.answers.is_empty() {
            return Err(Error::validation(
                format!("{VQA_SIDECAR}:{}", n + 1),
                "question has no gold answers",
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn serialize_vqa(records: &[VqaRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("vqa record serialization is infallible");
        out.push(b'\n');
    }
    out
}
