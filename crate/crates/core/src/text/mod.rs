//! Text shifts that imitate OCR errors. Every mode rewrites word strings
//! only; boxes, labels and the page image are never touched, and no word is
//! inserted or removed.

mod bert;
mod embedding;
mod homoglyph;
mod swaps;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

pub use bert::bert_attack;
pub use embedding::{swap_by_embedding, EmbeddingTable};
pub use homoglyph::{swap_homoglyph, HomoglyphTable};
pub use swaps::{delete_char_at, delete_characters, swap_numbers};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::rng::{doc_rng, DocRng};

pub const DEFAULT_RATE: f64 = 0.15;
pub const DEFAULT_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapMode {
    Embedding,
    Homoglyph,
    Number,
    CharDelete,
    BertAttack,
}

impl SwapMode {
    pub const ALL: [SwapMode; 5] = [
        SwapMode::Embedding,
        SwapMode::Homoglyph,
        SwapMode::Number,
        SwapMode::CharDelete,
        SwapMode::BertAttack,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SwapMode::Embedding => "embedding",
            SwapMode::Homoglyph => "homoglyph",
            SwapMode::Number => "number",
            SwapMode::CharDelete => "char_delete",
            SwapMode::BertAttack => "bert_attack",
        }
    }
}

impl fmt::Display for SwapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SwapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SwapMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown swap mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapConfig {
    pub mode: SwapMode,
    /// Fraction of eligible words to perturb.
    pub rate: f64,
    /// Neighbour / candidate count for the embedding and masked-LM modes.
    pub k: usize,
    pub seed: u64,
}

impl SwapConfig {
    pub fn new(mode: SwapMode, rate: f64, seed: u64) -> Self {
        SwapConfig {
            mode,
            rate,
            k: DEFAULT_K,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::Parameter(format!("rate {} outside [0, 1]", self.rate)));
        }
        if matches!(self.mode, SwapMode::Embedding | SwapMode::BertAttack) && self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        Ok(())
    }

    fn expect(&self, mode: SwapMode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::Parameter(format!(
                "configuration is for `{}`, not `{mode}`",
                self.mode
            )));
        }
        self.validate()
    }

    fn rng_for(&self, doc: &Document) -> DocRng {
        doc_rng(self.seed, self.mode.as_str(), &doc.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordChange {
    pub word_index: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone)]
pub struct TextOutcome {
    pub doc: Document,
    pub changes: Vec<WordChange>,
    /// Selected words that could not be changed (all masked-LM candidates equal the original).
    pub unchanged: Vec<usize>,
    /// Number of words eligible for the mode.
    pub eligible: usize,
}

/// A token carries meaning when it has at least one letter or digit.
pub fn is_wordlike(text: &str) -> bool {
    text.chars().any(char::is_alphanumeric)
}

/// Splits leading and trailing non-alphanumeric characters off a word.
pub fn split_affixes(word: &str) -> (&str, &str, &str) {
    let start = word
        .char_indices()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, _)| i)
        .unwrap_or(word.len());
    let end = word
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(start);
    (&word[..start], &word[start..end], &word[end..])
}

/// Picks exactly `floor(rate * n)` of the `n` eligible positions, ascending.
fn select(eligible: &[usize], rate: f64, rng: &mut DocRng) -> Vec<usize> {
    let n = eligible.len();
    let amount = ((rate * n as f64).floor() as usize).min(n);
    let mut picked: Vec<usize> = index::sample(rng, n, amount)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Shared driver: chooses eligible words, asks `rewrite` for a replacement and
/// rebuilds the document with the new strings.
fn perturb<E, F>(doc: &Document, cfg: &SwapConfig, eligible: E, mut rewrite: F) -> Result<TextOutcome>
where
    E: Fn(&str) -> bool,
    F: FnMut(&[String], usize, &mut DocRng) -> Result<Option<String>>,
{
    let mut rng = cfg.rng_for(doc);
    let mut texts = doc.word_texts();
    let eligible_idx: Vec<usize> = texts
        .iter()
        .enumerate()
        .filter(|(_, t)| is_wordlike(t) && eligible(t))
        .map(|(i, _)| i)
        .collect();
    let picked = select(&eligible_idx, cfg.rate, &mut rng);

    let mut changes = Vec::new();
    let mut unchanged = Vec::new();
    for i in picked {
        match rewrite(&texts, i, &mut rng)? {
            Some(after) if after != texts[i] => {
                let before = std::mem::replace(&mut texts[i], after.clone());
                changes.push(WordChange {
                    word_index: i,
                    before,
                    after,
                });
            }
            _ => unchanged.push(i),
        }
    }

    let mut out = doc.clone();
    for (w, t) in out.words_mut().zip(texts) {
        w.text = t;
    }
    Ok(TextOutcome {
        doc: out,
        changes,
        unchanged,
        eligible: eligible_idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affixes_split_around_the_core() {
        assert_eq!(split_affixes("(TO:)"), ("(", "TO", ":)"));
        assert_eq!(split_affixes("abc"), ("", "abc", ""));
        assert_eq!(split_affixes("###"), ("###", "", ""));
    }

    #[test]
    fn selection_is_floor_of_rate() {
        let elig: Vec<usize> = (0..10).map(|i| i * 2).collect();
        let mut rng = crate::rng::seeded(3);
        let s = select(&elig, 0.35, &mut rng);
        assert_eq!(s.len(), 3);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|i| elig.contains(i)));
        assert!(select(&elig, 0.0, &mut rng).is_empty());
        assert_eq!(select(&elig, 1.0, &mut rng), elig);
    }

    #[test]
    fn config_validation() {
        assert!(SwapConfig::new(SwapMode::Number, 1.5, 0).validate().is_err());
        let mut c = SwapConfig::new(SwapMode::Embedding, 0.5, 0);
        c.k = 0;
        assert!(c.validate().is_err());
    }
}
