use super::{perturb, SwapConfig, SwapMode, TextOutcome};
use crate::document::Document;
use crate::error::Result;
use crate::oracle::{Candidate, MaskedLm};

/// Highest-scored candidate that differs from `original` ignoring case.
fn best_replacement(mut candidates: Vec<Candidate>, original: &str) -> Option<String> {
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    let original = original.to_lowercase();
    candidates
        .into_iter()
        .map(|c| c.token.trim().to_string())
        .find(|t| !t.is_empty() && t.to_lowercase() != original)
}

/// Masks each selected word in turn and substitutes the masked-LM's best
/// candidate. Words whose candidates all equal the original stay as they are
/// and are reported in [`TextOutcome::unchanged`].
pub fn bert_attack(doc: &Document, lm: &mut dyn MaskedLm, cfg: &SwapConfig) -> Result<TextOutcome> {
    cfg.expect(SwapMode::BertAttack)?;
    perturb(
        doc,
        cfg,
        |_| true,
        |texts, i, _| {
            let candidates = lm.fill_mask(texts, i, cfg.k)?;
            Ok(best_replacement(candidates, &texts[i]))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleError;
    use crate::testutil::doc_from_words;

    fn cand(token: &str, score: f64) -> Candidate {
        Candidate {
            token: token.into(),
            score,
        }
    }

    #[test]
    fn echoing_oracle_leaves_document_and_flags_all() {
        let doc = doc_from_words(&["Total", "invoice", "due"]);
        let mut lm = |w: &[String], i: usize, _k: usize| Ok(vec![cand(&w[i].to_uppercase(), 1.0)]);
        let out = bert_attack(&doc, &mut lm, &SwapConfig::new(SwapMode::BertAttack, 1.0, 0)).unwrap();
        assert_eq!(out.doc, doc);
        assert_eq!(out.unchanged, vec![0, 1, 2]);
        assert!(out.changes.is_empty());
    }

    #[test]
    fn best_non_original_candidate_wins() {
        let doc = doc_from_words(&["invoice"]);
        let mut lm = |_: &[String], _: usize, _: usize| {
            Ok(vec![cand("receipt", 0.9), cand("invoice", 0.1)])
        };
        let out = bert_attack(&doc, &mut lm, &SwapConfig::new(SwapMode::BertAttack, 1.0, 0)).unwrap();
        assert_eq!(out.doc.word_texts(), vec!["receipt"]);
        let mut lm = |_: &[String], _: usize, _: usize| {
            Ok(vec![cand("INVOICE", 0.9), cand("bill", 0.5), cand("receipt", 0.1)])
        };
        let out = bert_attack(&doc, &mut lm, &SwapConfig::new(SwapMode::BertAttack, 1.0, 0)).unwrap();
        assert_eq!(out.doc.word_texts(), vec!["bill"]);
    }

    #[test]
    fn masked_sequence_and_k_are_forwarded() {
        let doc = doc_from_words(&["a1", "b2"]);
        let mut seen = Vec::new();
        let mut lm = |w: &[String], i: usize, k: usize| {
            seen.push((w.to_vec(), i, k));
            Ok(vec![cand("z", 1.0)])
        };
        let mut cfg = SwapConfig::new(SwapMode::BertAttack, 1.0, 0);
        cfg.k = 3;
        bert_attack(&doc, &mut lm, &cfg).unwrap();
        assert_eq!(seen[0], (vec!["a1".to_string(), "b2".to_string()], 0, 3));
        // later requests see earlier substitutions
        assert_eq!(seen[1], (vec!["z".to_string(), "b2".to_string()], 1, 3));
    }

    #[test]
    fn oracle_errors_propagate() {
        let doc = doc_from_words(&["x"]);
        let mut lm = |_: &[String], _: usize, _: usize| -> std::result::Result<Vec<Candidate>, OracleError> {
            Err(OracleError::Remote {
                request: "fill_mask #1".into(),
                message: "boom".into(),
            })
        };
        let err = bert_attack(&doc, &mut lm, &SwapConfig::new(SwapMode::BertAttack, 1.0, 0)).unwrap_err();
        assert!(err.to_string().contains("fill_mask #1"));
    }
}
