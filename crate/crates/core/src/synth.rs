//! Synthetic form pages for tests, benchmarks and smoke runs.

use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::dataset::{ANNOTATIONS_DIR, IMAGES_DIR};
use crate::document::{Document, Entity, Label, QaPair, Task, TaskPayload, Word, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::funsd::serialize_document;
use crate::geometry::BoundingBox;
use crate::rng::doc_rng;
use crate::sidecar::{self, ClassRecord, VqaRecord, CLASSIFICATION_SIDECAR, VQA_SIDECAR};

const VOCAB: &[&str] = &[
    "Date", "Name", "Total", "invoice", "houses", "Amount", "received", "Address", "Phone", "Signature",
    "Company", "Department", "approved", "REPORT", "Subject", "office", "tobacco", "research", "budget",
    "sample", "2023", "1998", "$12.40", "No.", "04/17", "#", "Fax:", "page", "brand", "quantity",
];

const CHAR_W: i32 = 7;
const WORD_H: i32 = 14;
const GAP: i32 = 6;
const LINE_H: i32 = 28;
const MARGIN: i32 = 16;

/// Draws dark vertical strokes for each character inside `b`.
fn ink_word(img: &mut RgbImage, b: &BoundingBox, chars: usize) {
    for c in 0..chars as i32 {
        let x0 = b.x1 + c * CHAR_W + 1;
        for x in x0..(x0 + 3).min(b.x2) {
            for y in b.y1 + 2..b.y2 - 2 {
                img.put_pixel(x as u32, y as u32, Rgb([20, 20, 30]));
            }
        }
    }
}

/// One page of `width` x `height` with up to `entities` labelled entities laid out in lines.
pub fn form_page(id: &str, seed: u64, width: u32, height: u32, entities: usize) -> (Document, RgbImage) {
    let mut rng = doc_rng(seed, "synth", id);
    let mut img = RgbImage::from_fn(width, height, |x, y| {
        let v = 246 + ((x * 7 + y * 13) % 7) as u8;
        Rgb([v, v, v.saturating_sub(2)])
    });
    let labels = [Label::Question, Label::Answer, Label::Question, Label::Answer, Label::Header, Label::Other];
    let mut out = Vec::new();
    let (mut x, mut y) = (MARGIN, MARGIN);
    for n in 0..entities {
        let count = rng.random_range(1..=3);
        let texts: Vec<&str> = (0..count).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
        let span: i32 = texts.iter().map(|t| t.chars().count() as i32 * CHAR_W + GAP).sum::<i32>() - GAP;
        if x + span > width as i32 - MARGIN {
            x = MARGIN;
            y += LINE_H;
        }
        if y + WORD_H > height as i32 - MARGIN || span > width as i32 - 2 * MARGIN {
            break;
        }
        let mut words = Vec::new();
        for t in texts {
            let w = t.chars().count() as i32 * CHAR_W;
            let b = BoundingBox::new(x, y, x + w, y + WORD_H).unwrap();
            ink_word(&mut img, &b, t.chars().count());
            words.push(Word { text: t.to_string(), bbox: b });
            x += w + GAP;
        }
        x += 3 * GAP;
        let mut e = Entity {
            id: n as u32,
            words,
            bbox: BoundingBox::ZERO,
            label: Some(labels[n % labels.len()]),
            links: if n % 2 == 1 { vec![(n as u32 - 1, n as u32)] } else { vec![] },
        };
        e.refresh_box();
        out.push(e);
    }
    let doc = Document {
        id: id.to_string(),
        image_path: Path::new(IMAGES_DIR).join(format!("{id}.png")),
        width,
        height,
        entities: out,
        payload: TaskPayload::Ie,
    };
    (doc, img)
}

/// Smooth colourful image standing in for a natural photograph.
pub fn natural_image(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = crate::rng::seeded(seed);
    let (a, b, c): (f64, f64, f64) = (rng.random_range(0.01..0.05), rng.random_range(0.01..0.05), rng.random());
    RgbImage::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        Rgb([
            (127.0 + 120.0 * (a * xf + c * 6.0).sin()) as u8,
            (127.0 + 120.0 * (b * yf).cos()) as u8,
            (127.0 + 120.0 * (a * yf + b * xf).sin()) as u8,
        ])
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a split of `docs` synthetic pages for `task` under `root`.
pub fn write_dataset(root: &Path, task: Task, docs: usize, seed: u64) -> Result<Vec<Document>> {
    let mut out = Vec::new();
    let mut class_recs = Vec::new();
    let mut qa_recs = Vec::new();
    for i in 0..docs {
        let id = format!("doc{i:04}");
        let (mut doc, img) = form_page(&id, seed, 320, 240, 14);
        let img_path = root.join(&doc.image_path);
        if let Some(p) = img_path.parent() {
            fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
        }
        img.save(&img_path).map_err(|e| Error::image(&img_path, e))?;
        write(
            &root.join(ANNOTATIONS_DIR).join(format!("{id}.json")),
            &serialize_document(&doc),
        )?;
        let image = doc.image_path.to_string_lossy().into_owned();
        match task {
            Task::Ie => {}
            Task::Classification => {
                let class = (i as u8 * 5 + seed as u8) % NUM_CLASSES;
                class_recs.push(ClassRecord { image, class });
                doc.payload = TaskPayload::Classification(class);
            }
            Task::Vqa => {
                let answer = doc.entities.first().map(|e| e.text()).unwrap_or_default();
                let qa = QaPair {
                    question: "What is the first field?".into(),
                    answers: vec![answer.clone(), answer.to_uppercase()],
                };
                qa_recs.push(VqaRecord {
                    image,
                    question: qa.question.clone(),
                    answers: qa.answers.clone(),
                });
                doc.payload = TaskPayload::Vqa(vec![qa]);
            }
        }
        out.push(doc);
    }
    match task {
        Task::Ie => {}
        Task::Classification => write(
            &root.join(CLASSIFICATION_SIDECAR),
            &sidecar::serialize_classification(&class_recs),
        )?,
        Task::Vqa => write(&root.join(VQA_SIDECAR), &sidecar::serialize_vqa(&qa_recs))?,
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    #[test]
    fn pages_are_well_formed() {
        let (doc, img) = form_page("p", 1, 320, 240, 14);
        assert_eq!(img.dimensions(), (320, 240));
        assert!(doc.entities.len() >= 8);
        let boxes = doc.word_boxes();
        for (i, a) in boxes.iter().enumerate() {
            assert!(a.x2 <= 320 && a.y2 <= 240);
            for b in &boxes[i + 1..] {
                assert!(!a.overlaps(b));
            }
        }
    }

    #[test]
    fn written_split_loads_back() {
        for task in [Task::Ie, Task::Classification, Task::Vqa] {
            let dir = tempfile::tempdir().unwrap();
            let docs = write_dataset(dir.path(), task, 3, 5).unwrap();
            let loaded = Dataset::open(dir.path(), task).unwrap().load_all().unwrap();
            assert_eq!(loaded, docs);
        }
    }
}
