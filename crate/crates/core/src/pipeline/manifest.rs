use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{OracleConfig, ShiftParams};
use crate::document::Task;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::layout::StrengthScore;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOLKIT_NAME: &str = "docshift";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files under `root` as sorted `/`-separated relative paths, skipping `exclude`.
pub fn list_files(root: &Path, exclude: &[&str]) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for ent in walkdir::WalkDir::new(root).follow_links(true) {
        let ent = ent.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !ent.file_type().is_file() {
            continue;
        }
        let rel = ent.path().strip_prefix(root).expect("walk stays under root");
        let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let rel = rel.join("/");
        if !exclude.contains(&rel.as_str()) {
            files.push(rel);
        }
    }
    files.sort();
    Ok(files)
}

/// SHA-256 over the sorted file list: for each file its relative path, a NUL,
/// its byte length as little-endian u64, then its bytes.
pub fn digest_dir(root: &Path, exclude: &[&str]) -> Result<String> {
    let mut h = Sha256::new();
    for rel in list_files(root, exclude)? {
        let path = root.join(&rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        h.update(rel.as_bytes());
        h.update([0u8]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn digest_path(path: &Path) -> Result<String> {
    if path.is_dir() {
        digest_dir(path, &[])
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Change {
    Text {
        word_index: usize,
        before: String,
        after: String,
    },
    WordBox {
        word_index: usize,
        before: BoundingBox,
        after: BoundingBox,
    },
    EntityBox {
        entity_id: u32,
        before: BoundingBox,
        after: BoundingBox,
    },
    Move {
        entity_id: u32,
        before: BoundingBox,
        after: BoundingBox,
    },
    Background {
        natural_image: String,
        text_pixels: usize,
    },
    Field {
        source: String,
        max_dx: f32,
        max_dy: f32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Shifted,
    Unchanged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub status: ItemStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strengths: Vec<StrengthScore>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub changes: Vec<Change>,
}

impl ItemRecord {
    pub fn new(id: impl Into<String>) -> Self {
        ItemRecord {
            id: id.into(),
            status: ItemStatus::Unchanged,
            flags: Vec::new(),
            error: None,
            details: BTreeMap::new(),
            strengths: Vec::new(),
            changes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub documents: usize,
    pub shifted: usize,
    pub unchanged: usize,
    pub failed: usize,
    pub flagged: usize,
    pub changes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftManifest {
    pub toolkit: String,
    pub version: String,
    pub task: Task,
    pub seed: u64,
    pub shift: ShiftParams,
    pub input: String,
    pub input_digest: String,
    pub output_digest: String,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub resources: BTreeMap<String, ResourceRecord>,
    pub summary: RunSummary,
    pub items: Vec<ItemRecord>,
}

impl ShiftManifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: format!("{}:{}", path.display(), e.path()),
            message: e.into_inner().to_string(),
        })
    }
}
