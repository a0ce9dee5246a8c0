use std::collections::HashMap;
use std::path::Path;

use super::{perturb, SwapConfig, SwapMode, TextOutcome};
use crate::document::Document;
use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/homoglyphs.tsv");

/// Single-character confusable substitutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomoglyphTable {
    map: HashMap<char, char>,
}

impl HomoglyphTable {
    /// The table shipped in `data/homoglyphs.tsv`.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("shipped homoglyph table is well-formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Lines of `<source> TAB <replacement>`; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let mut one_char = |what: &str| -> Result<char> {
                let col = cols.next().unwrap_or("");
                let mut chars = col.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(c),
                    _ => Err(Error::Parse {
                        path: format!("homoglyph table line {}", n + 1),
                        message: format!("{what} must be exactly one character, got `{col}`"),
                    }),
                }
            };
            let from = one_char("source")?;
            let to = one_char("replacement")?;
            map.insert(from, to);
        }
        if map.is_empty() {
            return Err(Error::Config("homoglyph table is empty".into()));
        }
        Ok(HomoglyphTable { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, c: char) -> Option<char> {
        self.map.get(&c).copied()
    }

    pub fn can_map(&self, word: &str) -> bool {
        word.chars().any(|c| self.map.contains_key(&c))
    }

    /// Replaces every mappable character.
    pub fn apply(&self, word: &str) -> String {
        word.chars().map(|c| self.get(c).unwrap_or(c)).collect()
    }
}

/// Rewrites selected words with visually confusable characters.
pub fn swap_homoglyph(doc: &Document, table: &HomoglyphTable, cfg: &SwapConfig) -> Result<TextOutcome> {
    cfg.expect(SwapMode::Homoglyph)?;
    perturb(
        doc,
        cfg,
        |t| table.can_map(t),
        |texts, i, _| Ok(Some(table.apply(&texts[i]))),
    )
}
