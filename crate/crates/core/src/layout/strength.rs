//! Semantic strength: how often a model's labels for an entity survive a
//! random reshuffle of the page layout.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::document::{Document, Label};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::oracle::{OracleError, Predictor};
use crate::rng::DocRng;

pub const DEFAULT_TRIALS: u32 = 30;
pub const DEFAULT_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrengthScore {
    pub entity_id: u32,
    pub trials: u32,
    pub unchanged: u32,
}

impl StrengthScore {
    pub fn strength(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.unchanged as f64 / self.trials as f64
        }
    }

    /// `unchanged / trials >= threshold`, compared without dividing.
    pub fn meets(&self, threshold: f64) -> bool {
        self.trials > 0 && self.unchanged as f64 >= threshold * self.trials as f64
    }
}

/// Maps `b` from the frame of `from` into the frame of `to`, scaling proportionally.
fn reframe(b: &BoundingBox, from: &BoundingBox, to: &BoundingBox) -> BoundingBox {
    let map = |v: i32, f0: i32, fw: i32, t0: i32, tw: i32| -> i32 {
        if fw == 0 {
            t0
        } else {
            t0 + ((v - f0) as i64 * tw as i64).div_euclid(fw as i64) as i32
        }
    };
    BoundingBox::from_corners(
        map(b.x1, from.x1, from.width(), to.x1, to.width()),
        map(b.y1, from.y1, from.height(), to.y1, to.height()),
        map(b.x2, from.x1, from.width(), to.x1, to.width()),
        map(b.y2, from.y1, from.height(), to.y1, to.height()),
    )
}

/// Gives every entity the box of another entity drawn by `perm`; member words
/// are carried along proportionally.
pub fn permute_entity_boxes(doc: &Document, perm: &[usize]) -> Document {
    let mut out = doc.clone();
    for (i, ent) in out.entities.iter_mut().enumerate() {
        let from = doc.entities[i].bbox;
        let to = doc.entities[perm[i]].bbox;
        for w in &mut ent.words {
            w.bbox = reframe(&w.bbox, &from, &to);
        }
        ent.bbox = to;
    }
    out
}

fn trial_error(trial: usize, source: OracleError) -> Error {
    Error::OracleTrial { trial, source }
}

/// Queries `predictor` on the unshuffled page (trial 0) and on `trials`
/// shuffled copies; an entity counts as unchanged in a trial when every one of
/// its word labels equals the unshuffled prediction.
pub fn score_semantic_strength(
    doc: &Document,
    predictor: &mut dyn Predictor,
    trials: u32,
    rng: &mut DocRng,
) -> Result<Vec<StrengthScore>> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let n_words = doc.word_count();
    let check = |labels: Vec<String>, trial: usize| -> Result<Vec<String>> {
        if labels.len() != n_words {
            return Err(trial_error(
                trial,
                OracleError::Protocol {
                    request: format!("predict (document {})", doc.id),
                    message: format!("{} labels for {n_words} words", labels.len()),
                },
            ));
        }
        Ok(labels)
    };
    let baseline = check(
        predictor.predict(doc).map_err(|e| trial_error(0, e))?,
        0,
    )?;
    let spans = doc.entity_spans();
    let mut unchanged = vec![0u32; doc.entities.len()];
    let mut perm: Vec<usize> = (0..doc.entities.len()).collect();

    for trial in 1..=trials as usize {
        perm.shuffle(rng);
        let shuffled = permute_entity_boxes(doc, &perm);
        let labels = check(
            predictor.predict(&shuffled).map_err(|e| trial_error(trial, e))?,
            trial,
        )?;
        for (e, span) in spans.iter().enumerate() {
            if labels[span.clone()] == baseline[span.clone()] {
                unchanged[e] += 1;
            }
        }
    }

    Ok(doc
        .entities
        .iter()
        .zip(unchanged)
        .map(|(e, unchanged)| StrengthScore {
            entity_id: e.id,
            trials,
            unchanged,
        })
        .collect())
}

/// Oracle-free approximation: question/answer entities with at least two
/// alphabetic words score 1, everything else 0.
pub fn heuristic_strength(doc: &Document) -> Vec<StrengthScore> {
    doc.entities
        .iter()
        .map(|e| {
            let alphabetic = e
                .words
                .iter()
                .filter(|w| w.text.chars().any(char::is_alphabetic))
                .count();
            let strong =
                matches!(e.label, Some(Label::Question | Label::Answer)) && alphabetic >= 2;
            StrengthScore {
                entity_id: e.id,
                trials: 1,
                unchanged: strong as u32,
            }
        })
        .collect()
}
