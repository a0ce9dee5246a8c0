use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::document::Document;
use crate::geometry::BoundingBox;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRequest {
    pub version: u32,
    pub words: Vec<String>,
    pub mask_index: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskResponse {
    pub version: u32,
    #[serde(default)]
    pub candidates: Vec<Candidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub version: u32,
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub words: Vec<String>,
    pub boxes: Vec<BoundingBox>,
}

impl PredictRequest {
    pub fn from_document(doc: &Document) -> Self {
        PredictRequest {
            version: PROTOCOL_VERSION,
            id: doc.id.clone(),
            width: doc.width,
            height: doc.height,
            words: doc.word_texts(),
            boxes: doc.word_boxes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub version: u32,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub(crate) fn check_version(version: u32, request: &str) -> Result<(), OracleError> {
    if version != PROTOCOL_VERSION {
        return Err(OracleError::Protocol {
            request: request.to_string(),
            message: format!("version {version}, expected {PROTOCOL_VERSION}"),
        });
    }
    Ok(())
}

pub(crate) fn check_candidates(cands: &[Candidate], request: &str) -> Result<(), OracleError> {
    let protocol = |message: String| OracleError::Protocol {
        request: request.to_string(),
        message,
    };
    if cands.iter().any(|c| !c.score.is_finite()) {
        return Err(protocol("non-finite candidate score".into()));
    }
    if cands.windows(2).any(|w| w[0].score < w[1].score) {
        return Err(protocol("candidates not sorted by descending score".into()));
    }
    Ok(())
}
