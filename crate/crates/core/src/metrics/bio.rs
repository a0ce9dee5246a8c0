//! BIO tag handling over the four entity labels.

use std::fmt;
use std::str::FromStr;

use crate::document::{Document, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Begin(Label),
    Inside(Label),
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("o") {
            return Ok(Tag::Outside);
        }
        let bad = || Error::validation("tag", format!("`{s}` is not a BIO tag"));
        let (prefix, label) = s.split_once('-').ok_or_else(bad)?;
        let label: Label = label.parse().map_err(|_| bad())?;
        match prefix {
            "B" | "b" => Ok(Tag::Begin(label)),
            "I" | "i" => Ok(Tag::Inside(label)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(l) => write!(f, "B-{}", l.as_str().to_uppercase()),
            Tag::Inside(l) => write!(f, "I-{}", l.as_str().to_uppercase()),
        }
    }
}

/// Labelled word-index span `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

/// Decodes entity spans; an `I-X` that does not continue an `X` span opens a new one.
pub fn decode(tags: &[Tag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, tag) in tags.iter().enumerate() {
        match *tag {
            Tag::Inside(l) if open.is_some_and(|s| s.label == l) => {
                open.as_mut().unwrap().end = i + 1;
            }
            Tag::Begin(l) | Tag::Inside(l) => {
                spans.extend(open.take());
                open = Some(Span { start: i, end: i + 1, label: l });
            }
            Tag::Outside => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

/// Gold spans straight from the entity structure; unlabelled and word-less
/// entities contribute none.
pub fn gold_spans(doc: &Document) -> Vec<Span> {
    doc.entities
        .iter()
        .zip(doc.entity_spans())
        .filter(|(_, r)| !r.is_empty())
        .filter_map(|(e, r)| {
            e.label.map(|label| Span {
                start: r.start,
                end: r.end,
                label,
            })
        })
        .collect()
}

/// Per-word gold tags of a document.
pub fn gold_tags(doc: &Document) -> Vec<Tag> {
    let mut tags = Vec::with_capacity(doc.word_count());
    for e in &doc.entities {
        for i in 0..e.words.len() {
            tags.push(match (e.label, i) {
                (None, _) => Tag::Outside,
                (Some(l), 0) => Tag::Begin(l),
                (Some(l), _) => Tag::Inside(l),
            });
        }
    }
    tags
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn tags(s: &str) -> Vec<Tag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    fn span(start: usize, end: usize, label: Label) -> Span {
        Span { start, end, label }
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("b-question".parse::<Tag>().unwrap(), Tag::Begin(Question));
        assert_eq!("I-OTHER".parse::<Tag>().unwrap().to_string(), "I-OTHER");
        assert_eq!("o".parse::<Tag>().unwrap(), Tag::Outside);
        assert!("X-HEADER".parse::<Tag>().is_err());
        assert!("B-DATE".parse::<Tag>().is_err());
        assert!("B".parse::<Tag>().is_err());
    }

    #[test]
    fn strict_sequences() {
        assert_eq!(
            decode(&tags("B-QUESTION I-QUESTION O B-ANSWER B-ANSWER I-ANSWER")),
            vec![span(0, 2, Question), span(3, 4, Answer), span(4, 6, Answer)]
        );
    }

    #[test]
    fn lenient_inside_tags() {
        assert_eq!(
            decode(&tags("I-HEADER I-HEADER I-ANSWER O I-OTHER")),
            vec![span(0, 2, Header), span(2, 3, Answer), span(4, 5, Other)]
        );
        assert!(decode(&[]).is_empty());
    }

    #[test]
    fn gold_tags_round_trip_through_decode() {
        let mut doc = crate::testutil::doc_from_words(&["a", "b", "c", "d"]);
        let w = doc.entities[1].words.remove(0);
        doc.entities[0].words.push(w);
        doc.entities[0].label = Some(Question);
        doc.entities[2].label = None;
        assert_eq!(
            gold_tags(&doc).iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            vec!["B-QUESTION", "I-QUESTION", "O", "B-OTHER"]
        );
        assert_eq!(decode(&gold_tags(&doc)), gold_spans(&doc));
    }
}
