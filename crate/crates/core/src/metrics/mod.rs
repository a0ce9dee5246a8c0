//! Scoring of prediction files against gold documents.

pub mod anls;
pub mod bio;
pub mod predictions;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::document::{Document, Label, Task, TaskPayload};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

pub use anls::{anls, levenshtein, similarity, DEFAULT_TAU};
pub use bio::{decode, gold_spans, gold_tags, Span, Tag};
pub use predictions::{Prediction, PredictionSet};

use predictions::check;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub task: Option<Task>,
    pub documents: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anls: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_label_error: BTreeMap<String, f64>,
}

/// Label groups of the error breakdown.
pub const ERROR_GROUPS: [(&str, &[Label]); 3] = [
    ("other", &[Label::Other]),
    ("question_or_answer", &[Label::Question, Label::Answer]),
    ("header", &[Label::Header]),
];

#[derive(Debug, Clone, Default)]
struct SpanCounts {
    true_positive: usize,
    predicted: usize,
    gold: usize,
    gold_by_label: BTreeMap<Label, (usize, usize)>,
}

fn doc_spans(doc: &Document, pred: Option<&Prediction>) -> Result<SpanCounts> {
    let Prediction::Tags(tags) = check(doc, pred)? else {
        unreachable!("checked task kind")
    };
    let gold = gold_spans(doc);
    let predicted: HashSet<Span> = decode(tags).into_iter().collect();
    let mut c = SpanCounts {
        predicted: predicted.len(),
        gold: gold.len(),
        ..Default::default()
    };
    for s in &gold {
        let hit = predicted.contains(s);
        c.true_positive += usize::from(hit);
        let e = c.gold_by_label.entry(s.label).or_default();
        e.0 += 1;
        e.1 += usize::from(hit);
    }
    Ok(c)
}

fn span_totals(exec: Exec, gold: &[Document], pred: &PredictionSet) -> Result<SpanCounts> {
    let per_doc = par::map(exec, gold, |d| doc_spans(d, pred.get(&d.id)));
    let mut total = SpanCounts::default();
    for c in per_doc {
        let c = c?;
        total.true_positive += c.true_positive;
        total.predicted += c.predicted;
        total.gold += c.gold;
        for (l, (n, hit)) in c.gold_by_label {
            let e = total.gold_by_label.entry(l).or_default();
            e.0 += n;
            e.1 += hit;
        }
    }
    Ok(total)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

fn error_rates(c: &SpanCounts) -> BTreeMap<String, f64> {
    ERROR_GROUPS
        .iter()
        .filter_map(|(name, labels)| {
            let (n, hit) = labels
                .iter()
                .filter_map(|l| c.gold_by_label.get(l))
                .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            (n > 0).then(|| (name.to_string(), 1.0 - ratio(hit, n)))
        })
        .collect()
}

/// Exact-match entity F1, micro-averaged over all documents.
pub fn entity_f1(gold: &[Document], pred: &PredictionSet) -> Result<ScoreReport> {
    entity_f1_with(Exec::default(), gold, pred)
}

pub fn entity_f1_with(exec: Exec, gold: &[Document], pred: &PredictionSet) -> Result<ScoreReport> {
    let c = span_totals(exec, gold, pred)?;
    let p = ratio(c.true_positive, c.predicted);
    let r = ratio(c.true_positive, c.gold);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    Ok(ScoreReport {
        task: Some(Task::Ie),
        documents: gold.len(),
        precision: Some(p),
        recall: Some(r),
        f1: Some(f1),
        per_label_error: error_rates(&c),
        ..Default::default()
    })
}

/// Share of gold entities per label group that were not recovered exactly.
/// Groups without gold entities are omitted.
pub fn label_error_rates(gold: &[Document], pred: &PredictionSet) -> Result<BTreeMap<String, f64>> {
    Ok(error_rates(&span_totals(Exec::default(), gold, pred)?))
}

pub fn accuracy(gold: &[Document], pred: &PredictionSet) -> Result<f64> {
    let mut correct = 0;
    for doc in gold {
        let (Prediction::Class(p), TaskPayload::Classification(g)) = (check(doc, pred.get(&doc.id))?, &doc.payload)
        else {
            unreachable!("checked task kind")
        };
        correct += usize::from(p == g);
    }
    Ok(ratio(correct, gold.len()))
}

/// Per-question ANLS scores in document then question order.
pub fn question_scores(exec: Exec, gold: &[Document], pred: &PredictionSet, tau: f64) -> Result<Vec<f64>> {
    let per_doc = par::map(exec, gold, |doc| -> Result<Vec<f64>> {
        let (Prediction::Answers(answers), TaskPayload::Vqa(qa)) = (check(doc, pred.get(&doc.id))?, &doc.payload)
        else {
            unreachable!("checked task kind")
        };
        qa.iter()
            .zip(answers)
            .map(|(q, a)| anls(&q.answers, a, tau))
            .collect()
    });
    let mut out = Vec::new();
    for d in per_doc {
        out.extend(d?);
    }
    Ok(out)
}

/// Mean ANLS over every question of the dataset.
pub fn dataset_anls(gold: &[Document], pred: &PredictionSet, tau: f64) -> Result<f64> {
    let scores = question_scores(Exec::default(), gold, pred, tau)?;
    Ok(if scores.is_empty() { 0.0 } else { scores.iter().sum::<f64>() / scores.len() as f64 })
}

/// Task-appropriate report for a gold set.
pub fn score(task: Task, gold: &[Document], pred: &PredictionSet, tau: f64) -> Result<ScoreReport> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Parameter(format!("tau must lie in [0, 1], got {tau}")));
    }
    pred.validate(gold)?;
    match task {
        Task::Ie => entity_f1(gold, pred),
        Task::Classification => Ok(ScoreReport {
            task: Some(task),
            documents: gold.len(),
            accuracy: Some(accuracy(gold, pred)?),
            ..Default::default()
        }),
        Task::Vqa => Ok(ScoreReport {
            task: Some(task),
            documents: gold.len(),
            anls: Some(dataset_anls(gold, pred, tau)?),
            ..Default::default()
        }),
    }
}

impl ScoreReport {
    /// Human-readable table, scores in percent.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        if let Some(t) = self.task {
            rows.push(("task".into(), t.to_string()));
        }
        rows.push(("documents".into(), self.documents.to_string()));
        for (name, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("F1", self.f1),
            ("accuracy", self.accuracy),
            ("ANLS", self.anls),
        ] {
            if let Some(v) = v {
                rows.push((name.into(), format!("{:.2}", v * 100.0)));
            }
        }
        for (g, v) in &self.per_label_error {
            rows.push((format!("{g} error"), format!("{:.2}", v * 100.0)));
        }
        let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<w$}  {v:>8}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::QaPair;
    use crate::testutil::doc_from_words;

    fn tags(s: &str) -> Prediction {
        Prediction::Tags(s.split_whitespace().map(|t| t.parse().unwrap()).collect())
    }

    fn set(id: &str, p: Prediction) -> PredictionSet {
        PredictionSet {
            items: [(id.to_string(), p)].into(),
        }
    }

    /// Words 0..=2 form a question, 3..=5 an answer.
    fn qa_doc() -> Document {
        let mut doc = doc_from_words(&["a", "b", "c", "d", "e", "f"]);
        let words: Vec<_> = doc.entities.iter().map(|e| e.words[0].clone()).collect();
        doc.entities.truncate(2);
        doc.entities[0].words = words[..3].to_vec();
        doc.entities[0].label = Some(Label::Question);
        doc.entities[1].words = words[3..].to_vec();
        doc.entities[1].label = Some(Label::Answer);
        doc
    }

    #[test]
    fn perfect_empty_and_partial() {
        let gold = vec![qa_doc()];
        let perfect = entity_f1(&gold, &set("doc", tags("B-QUESTION I-QUESTION I-QUESTION B-ANSWER I-ANSWER I-ANSWER"))).unwrap();
        assert_eq!((perfect.precision, perfect.recall, perfect.f1), (Some(1.0), Some(1.0), Some(1.0)));
        let empty = entity_f1(&gold, &set("doc", tags("O O O O O O"))).unwrap();
        assert_eq!((empty.precision, empty.recall, empty.f1), (Some(0.0), Some(0.0), Some(0.0)));
        let half = entity_f1(&gold, &set("doc", tags("B-QUESTION I-QUESTION I-QUESTION B-ANSWER I-ANSWER O"))).unwrap();
        assert_eq!((half.precision, half.recall, half.f1), (Some(0.5), Some(0.5), Some(0.5)));
    }

    #[test]
    fn qa_error_pools_questions_and_answers() {
        // two questions, two answers; one question missed
        let mut doc = doc_from_words(&["q1", "a1", "q2", "a2"]);
        for (e, l) in doc.entities.iter_mut().zip([Label::Question, Label::Answer, Label::Question, Label::Answer]) {
            e.label = Some(l);
        }
        let rates = label_error_rates(&[doc], &set("doc", tags("B-QUESTION B-ANSWER O B-ANSWER"))).unwrap();
        assert_eq!(rates, [("question_or_answer".to_string(), 0.25)].into());
    }

    #[test]
    fn header_fully_missed() {
        let mut doc = doc_from_words(&["h", "x"]);
        doc.entities[0].label = Some(Label::Header);
        let rates = label_error_rates(&[doc], &set("doc", tags("O B-OTHER"))).unwrap();
        assert_eq!(rates["header"], 1.0);
        assert_eq!(rates["other"], 0.0);
    }

    #[test]
    fn accuracy_counts() {
        let gold: Vec<Document> = (0..4)
            .map(|i| {
                let mut d = doc_from_words(&["w"]);
                d.id = format!("d{i}");
                d.payload = TaskPayload::Classification(i as u8);
                d
            })
            .collect();
        let pred = PredictionSet {
            items: (0..4).map(|i| (format!("d{i}"), Prediction::Class(if i == 3 { 9 } else { i }))).collect(),
        };
        assert_eq!(accuracy(&gold, &pred).unwrap(), 0.75);
        assert!(accuracy(&gold, &PredictionSet::default()).is_err());
    }

    #[test]
    fn vqa_report() {
        let mut doc = doc_from_words(&["w"]);
        doc.payload = TaskPayload::Vqa(vec![QaPair {
            question: "what?".into(),
            answers: vec!["Blue".into()],
        }]);
        let r = score(Task::Vqa, &[doc], &set("doc", Prediction::Answers(vec![" blue".into()])), 0.5).unwrap();
        assert_eq!(r.anls, Some(1.0));
        assert!(r.render_table().contains("100.00"));
    }
}
