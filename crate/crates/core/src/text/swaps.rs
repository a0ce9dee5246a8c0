use rand::Rng;

use super::{perturb, SwapConfig, SwapMode, TextOutcome};
use crate::document::Document;
use crate::error::Result;
use crate::rng::DocRng;

fn replace_digits(word: &str, rng: &mut DocRng) -> String {
    word.chars()
        .map(|c| match c.to_digit(10) {
            Some(d) if c.is_ascii_digit() => {
                let shift = rng.random_range(1..10);
                char::from_digit((d + shift) % 10, 10).unwrap()
            }
            _ => c,
        })
        .collect()
}

/// Replaces every digit of the selected words with a different random digit.
pub fn swap_numbers(doc: &Document, cfg: &SwapConfig) -> Result<TextOutcome> {
    cfg.expect(SwapMode::Number)?;
    perturb(
        doc,
        cfg,
        |t| t.chars().any(|c| c.is_ascii_digit()),
        |texts, i, rng| Ok(Some(replace_digits(&texts[i], rng))),
    )
}

/// Removes the character at `index` (counted in chars).
pub fn delete_char_at(word: &str, index: usize) -> String {
    word.chars()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, c)| c)
        .collect()
}

/// Drops one random character from each selected word of two or more characters.
pub fn delete_characters(doc: &Document, cfg: &SwapConfig) -> Result<TextOutcome> {
    cfg.expect(SwapMode::CharDelete)?;
    perturb(
        doc,
        cfg,
        |t| t.chars().count() >= 2,
        |texts, i, rng| {
            let len = texts[i].chars().count();
            Ok(Some(delete_char_at(&texts[i], rng.random_range(0..len))))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::doc_from_words;

    #[test]
    fn deleting_index_two_of_houses() {
        assert_eq!(delete_char_at("houses", 2), "hoses");
    }

    #[test]
    fn words_without_digits_are_ineligible() {
        let doc = doc_from_words(&["TOTAL", "due"]);
        let out = swap_numbers(&doc, &SwapConfig::new(SwapMode::Number, 1.0, 1)).unwrap();
        assert_eq!(out.doc, doc);
        assert_eq!(out.eligible, 0);
    }

    #[test]
    fn every_digit_changes() {
        let doc = doc_from_words(&["2023", "x7-b9"]);
        for seed in 0..50 {
            let out = swap_numbers(&doc, &SwapConfig::new(SwapMode::Number, 1.0, seed)).unwrap();
            let after = out.doc.word_texts();
            assert_eq!(after[0].chars().count(), 4);
            for (a, b) in "2023".chars().zip(after[0].chars()) {
                assert!(b.is_ascii_digit() && a != b);
            }
            let b: Vec<char> = after[1].chars().collect();
            assert_eq!((b[0], b[2], b[3]), ('x', '-', 'b'));
            assert!(b[1] != '7' && b[4] != '9');
        }
    }

    #[test]
    fn number_swap_is_deterministic() {
        let doc = doc_from_words(&["12", "345", "6789"]);
        let cfg = SwapConfig::new(SwapMode::Number, 0.7, 99);
        let a = swap_numbers(&doc, &cfg).unwrap();
        let b = swap_numbers(&doc, &cfg).unwrap();
        assert_eq!(a.doc, b.doc);
        assert_eq!(a.changes, b.changes);
    }

    #[test]
    fn deletion_shortens_by_one_and_skips_single_chars() {
        let doc = doc_from_words(&["a", "houses", "I", "form"]);
        let out = delete_characters(&doc, &SwapConfig::new(SwapMode::CharDelete, 1.0, 5)).unwrap();
        let after = out.doc.word_texts();
        assert_eq!(after[0], "a");
        assert_eq!(after[2], "I");
        assert_eq!(after[1].chars().count(), 5);
        assert_eq!(after[3].chars().count(), 3);
    }

    #[test]
    fn wrong_mode_is_rejected() {
        let doc = doc_from_words(&["1"]);
        assert!(swap_numbers(&doc, &SwapConfig::new(SwapMode::Homoglyph, 1.0, 0)).is_err());
    }
}
