use crate::document::{Document, Entity, Label, TaskPayload, Word};
use crate::geometry::BoundingBox;

/// One entity per word, laid out left to right on a single line.
pub(crate) fn doc_from_words(words: &[&str]) -> Document {
    let entities = words
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let x = 10 + 60 * i as i32;
            let bbox = BoundingBox::new(x, 10, x + 50, 30).unwrap();
            Entity {
                id: i as u32,
                words: vec![Word {
                    text: t.to_string(),
                    bbox,
                }],
                bbox,
                label: Some(Label::Other),
                links: vec![],
            }
        })
        .collect();
    Document {
        id: "doc".into(),
        image_path: "images/doc.png".into(),
        width: 60 * words.len().max(1) as u32 + 20,
        height: 40,
        entities,
        payload: TaskPayload::Ie,
    }
}
