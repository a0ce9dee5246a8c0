use std::collections::HashMap;
use std::path::Path;

use rand::Rng;

use super::{perturb, split_affixes, SwapConfig, SwapMode, TextOutcome};
use crate::document::Document;
use crate::error::{Error, Result};

/// Word vectors loaded from the `word v1 v2 ... vd` text format.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    // unit-normalised rows, vocab.len() x dim
    unit: Vec<f64>,
}

impl EmbeddingTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses one `word v1 ... vd` record per line. A leading `<count> <dim>`
    /// header line, as written by word2vec tooling, is skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let mut cols = line.split_whitespace();
            let Some(word) = cols.next() else { continue };
            let rest: Vec<&str> = cols.collect();
            if n == 0 && rest.len() == 1 && word.parse::<u64>().is_ok() && rest[0].parse::<u64>().is_ok() {
                continue;
            }
            let vec = rest
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    path: format!("embedding line {}", n + 1),
                    message: e.to_string(),
                })?;
            entries.push((n + 1, word.to_string(), vec));
        }
        Self::from_vectors(entries.into_iter().map(|(_, w, v)| (w, v)))
    }

    pub fn from_vectors(entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        let mut vocab = Vec::new();
        let mut index = HashMap::new();
        let mut unit = Vec::new();
        let mut dim = None;
        for (word, v) in entries {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d || d == 0 {
                return Err(Error::Config(format!(
                    "embedding for `{word}` has dimension {}, expected {d}",
                    v.len()
                )));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::Config(format!("embedding for `{word}` has zero or invalid norm")));
            }
            if index.insert(word.clone(), vocab.len()).is_some() {
                return Err(Error::Config(format!("duplicate embedding for `{word}`")));
            }
            vocab.push(word);
            unit.extend(v.iter().map(|x| x / norm));
        }
        if vocab.is_empty() {
            return Err(Error::Config("embedding table is empty".into()));
        }
        Ok(EmbeddingTable {
            vocab,
            index,
            dim: dim.unwrap(),
            unit,
        })
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exact match first, then the lowercase form.
    pub fn lookup(&self, word: &str) -> Option<usize> {
        self.index
            .get(word)
            .or_else(|| self.index.get(&word.to_lowercase()))
            .copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.vocab[idx]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.unit[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        self.row(a).iter().zip(self.row(b)).map(|(x, y)| x * y).sum()
    }

    /// The `k` most cosine-similar words to `idx`, excluding itself; ties go
    /// to the earlier vocabulary entry.
    pub fn nearest(&self, idx: usize, k: usize) -> Vec<usize> {
        let sims = crate::par::map_range(crate::par::Exec::default(), self.len(), |j| {
            self.cosine(idx, j)
        });
        let mut order: Vec<usize> = (0..self.len()).filter(|&j| j != idx).collect();
        order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
        order.truncate(k);
        order
    }
}

fn match_case(template: &str, word: &str) -> String {
    let letters: Vec<char> = template.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return word.to_uppercase();
    }
    if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut chars = word.chars();
        if let Some(first) = chars.next() {
            return first.to_uppercase().chain(chars).collect();
        }
    }
    word.to_string()
}

/// Swaps selected in-vocabulary words for one of their `k` nearest neighbours.
pub fn swap_by_embedding(doc: &Document, table: &EmbeddingTable, cfg: &SwapConfig) -> Result<TextOutcome> {
    cfg.expect(SwapMode::Embedding)?;
    if table.is_empty() {
        return Err(Error::Config("embedding table is empty".into()));
    }
    let mut cache: HashMap<usize, Vec<usize>> = HashMap::new();
    perturb(
        doc,
        cfg,
        |t| table.lookup(split_affixes(t).1).is_some(),
        |texts, i, rng| {
            let (pre, core, post) = split_affixes(&texts[i]);
            let idx = table.lookup(core).expect("eligibility checked");
            let neighbours = cache.entry(idx).or_insert_with(|| table.nearest(idx, cfg.k));
            if neighbours.is_empty() {
                return Ok(None);
            }
            let pick = neighbours[rng.random_range(0..neighbours.len())];
            Ok(Some(format!("{pre}{}{post}", match_case(core, table.word(pick)))))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::doc_from_words;

    fn toy() -> Vec<(String, Vec<f64>)> {
        vec![
            ("invoice".into(), vec![1.0, 0.1, 0.0]),
            ("receipt".into(), vec![0.9, 0.2, 0.1]),
            ("banana".into(), vec![0.0, 0.3, 1.0]),
        ]
    }

    /// Exhaustive cosine search written independently of the table code.
    fn brute_nearest(entries: &[(String, Vec<f64>)], word: &str) -> String {
        let q = &entries.iter().find(|(w, _)| w == word).unwrap().1;
        let cos = |a: &[f64], b: &[f64]| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        entries
            .iter()
            .filter(|(w, _)| w != word)
            .max_by(|a, b| cos(q, &a.1).partial_cmp(&cos(q, &b.1)).unwrap())
            .unwrap()
            .0
            .clone()
    }

    #[test]
    fn nearest_neighbour_matches_exhaustive_search() {
        let entries = toy();
        assert_eq!(brute_nearest(&entries, "invoice"), "receipt");
        let table = EmbeddingTable::from_vectors(entries).unwrap();
        let idx = table.lookup("invoice").unwrap();
        assert_eq!(table.word(table.nearest(idx, 1)[0]), "receipt");
    }

    #[test]
    fn every_invoice_becomes_receipt() {
        let table = EmbeddingTable::from_vectors(toy()).unwrap();
        let doc = doc_from_words(&["invoice", "no.", "invoice:", "Invoice"]);
        let mut cfg = SwapConfig::new(SwapMode::Embedding, 1.0, 4);
        cfg.k = 1;
        let out = swap_by_embedding(&doc, &table, &cfg).unwrap();
        assert_eq!(out.doc.word_texts(), vec!["receipt", "no.", "receipt:", "Receipt"]);
    }

    #[test]
    fn out_of_vocabulary_words_never_change() {
        let table = EmbeddingTable::from_vectors(toy()).unwrap();
        let doc = doc_from_words(&["total", "amount"]);
        let out = swap_by_embedding(&doc, &table, &SwapConfig::new(SwapMode::Embedding, 1.0, 0)).unwrap();
        assert_eq!(out.doc, doc);
    }

    #[test]
    fn zero_rate_is_identity() {
        let table = EmbeddingTable::from_vectors(toy()).unwrap();
        let doc = doc_from_words(&["invoice", "banana"]);
        let out = swap_by_embedding(&doc, &table, &SwapConfig::new(SwapMode::Embedding, 0.0, 0)).unwrap();
        assert_eq!(out.doc, doc);
    }

    #[test]
    fn parse_skips_header_and_rejects_bad_rows() {
        let t = EmbeddingTable::parse("2 2\nfoo 1 0\nbar 0 1\n").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 2));
        assert!(EmbeddingTable::parse("foo 0 0\n").is_err());
        assert!(EmbeddingTable::parse("foo 1 0\nbar 1\n").is_err());
        assert!(EmbeddingTable::parse("").is_err());
    }
}
