//! Core document model shared by every shift and metric.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Semantic entity label of the form-understanding task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Header,
    Question,
    Answer,
    Other,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Header, Label::Question, Label::Answer, Label::Other];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Header => "header",
            Label::Question => "question",
            Label::Answer => "answer",
            Label::Other => "other",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "header" => Ok(Label::Header),
            "question" => Ok(Label::Question),
            "answer" => Ok(Label::Answer),
            "other" => Ok(Label::Other),
            _ => Err(Error::validation("label", format!("unknown label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub text: String,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: u32,
    pub words: Vec<Word>,
    /// Union of the word boxes, or the annotated box for word-less entities.
    pub bbox: BoundingBox,
    pub label: Option<Label>,
    pub links: Vec<(u32, u32)>,
}

impl Entity {
    /// Recomputes `bbox` from the member words; word-less entities keep their box.
    pub fn refresh_box(&mut self) {
        if let Some(hull) = BoundingBox::hull(self.words.iter().map(|w| &w.bbox)) {
            self.bbox = hull;
        }
    }

    /// Entity text as the space-joined word texts.
    pub fn text(&self) -> String {
        self.words
            .iter()
            .map(|w| w.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    pub answers: Vec<String>,
}

/// Number of document classes in the classification task.
pub const NUM_CLASSES: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskPayload {
    Ie,
    Classification(u8),
    Vqa(Vec<QaPair>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Ie,
    Classification,
    Vqa,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Ie => "ie",
            Task::Classification => "classification",
            Task::Vqa => "vqa",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ie" => Ok(Task::Ie),
            "classification" | "cls" => Ok(Task::Classification),
            "vqa" => Ok(Task::Vqa),
            _ => Err(Error::Config(format!("unknown task `{s}`"))),
        }
    }
}

/// One annotated page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub image_path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub entities: Vec<Entity>,
    pub payload: TaskPayload,
}

impl Document {
    pub fn word_count(&self) -> usize {
        self.entities.iter().map(|e| e.words.len()).sum()
    }

    /// All words in reading order (entity order, then word order).
    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.entities.iter().flat_map(|e| e.words.iter())
    }

    pub fn words_mut(&mut self) -> impl Iterator<Item = &mut Word> {
        self.entities.iter_mut().flat_map(|e| e.words.iter_mut())
    }

    pub fn word_texts(&self) -> Vec<String> {
        self.words().map(|w| w.text.clone()).collect()
    }

    pub fn word_boxes(&self) -> Vec<BoundingBox> {
        self.words().map(|w| w.bbox).collect()
    }

    /// Word-index ranges `start..end` for each entity, in entity order.
    pub fn entity_spans(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.entities
            .iter()
            .map(|e| {
                let span = start..start + e.words.len();
                start = span.end;
                span
            })
            .collect()
    }

    /// Replaces every word box in reading order. `boxes` must have one entry per word.
    pub fn with_word_boxes(&self, boxes: &[BoundingBox]) -> Document {
        debug_assert_eq!(boxes.len(), self.word_count());
        let mut out = self.clone();
        for (word, b) in out.words_mut().zip(boxes) {
            word.bbox = *b;
        }
        for e in &mut out.entities {
            e.refresh_box();
        }
        out
    }

    pub fn task(&self) -> Task {
        match self.payload {
            TaskPayload::Ie => Task::Ie,
            TaskPayload::Classification(_) => Task::Classification,
            TaskPayload::Vqa(_) => Task::Vqa,
        }
    }
}

/// Attribute value a generated dataset item carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Original,
    ImageNatural,
    ImageDistorted,
    TextBert,
    TextSwap,
    LayoutMerge,
    LayoutMove,
}

impl ShiftKind {
    pub const ALL: [ShiftKind; 7] = [
        ShiftKind::Original,
        ShiftKind::ImageNatural,
        ShiftKind::ImageDistorted,
        ShiftKind::TextBert,
        ShiftKind::TextSwap,
        ShiftKind::LayoutMerge,
        ShiftKind::LayoutMove,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ShiftKind::Original => "original",
            ShiftKind::ImageNatural => "image_natural",
            ShiftKind::ImageDistorted => "image_distorted",
            ShiftKind::TextBert => "text_bert",
            ShiftKind::TextSwap => "text_swap",
            ShiftKind::LayoutMerge => "layout_merge",
            ShiftKind::LayoutMove => "layout_move",
        }
    }
}

impl fmt::Display for ShiftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShiftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShiftKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown shift kind `{s}`")))
    }
}
