use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use docshift::imaging::{self, MaskMethod};
use docshift::layout::{apply_layout_merge, MergeParams};
use docshift::metrics::{self, Prediction, PredictionSet};
use docshift::par::{self, Exec};
use docshift::{synth, Document, QaPair, TaskPayload};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn pages(n: usize) -> Vec<Document> {
    (0..n).map(|i| synth::form_page(&format!("b{i}"), i as u64, 320, 240, 14).0).collect()
}

fn warp(c: &mut Criterion) {
    let (doc, img) = synth::form_page("w", 1, 1024, 768, 40);
    let field = imaging::synthesize_displacement_field(1024, 768, 4.0, 160.0, 6.0, 1).unwrap();
    let boxes = doc.word_boxes();
    let mut g = c.benchmark_group("warp_1024x768");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| imaging::warp_with(exec, black_box(&img), &boxes, &field).unwrap()));
    }
    g.finish();
}

fn compositing(c: &mut Criterion) {
    let (doc, img) = synth::form_page("c", 2, 1024, 768, 40);
    let natural = synth::natural_image(640, 480, 2);
    let mask = imaging::extract_text_mask(&img, &doc.word_boxes(), MaskMethod::Otsu).unwrap();
    let mut g = c.benchmark_group("replace_background_1024x768");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| imaging::replace_background_with(exec, black_box(&img), &mask, &natural).unwrap())
        });
    }
    g.finish();
}

fn merge(c: &mut Criterion) {
    let docs = pages(64);
    let params = MergeParams::new(3, 1).unwrap();
    let mut g = c.benchmark_group("layout_merge_64_docs");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| par::map(exec, black_box(&docs), |d| apply_layout_merge(d, params).unwrap())));
    }
    g.finish();
}

fn scoring(c: &mut Criterion) {
    let docs = pages(256);
    let tags = PredictionSet {
        items: docs.iter().map(|d| (d.id.clone(), Prediction::Tags(metrics::gold_tags(d)))).collect(),
    };
    let vqa: Vec<Document> = docs
        .iter()
        .map(|d| {
            let mut d = d.clone();
            let qa = (0..8)
                .map(|i| QaPair {
                    question: format!("field {i}?"),
                    answers: vec![d.entities[i].text(), d.entities[i + 1].text()],
                })
                .collect();
            d.payload = TaskPayload::Vqa(qa);
            d
        })
        .collect();
    let answers = PredictionSet {
        items: vqa
            .iter()
            .map(|d| (d.id.clone(), Prediction::Answers((0..8).map(|i| d.entities[i + 2].text()).collect())))
            .collect(),
    };
    let mut g = c.benchmark_group("scoring_256_docs");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("entity_f1", name), &exec, |b, &e| {
            b.iter(|| metrics::entity_f1_with(e, black_box(&docs), &tags).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("anls", name), &exec, |b, &e| {
            b.iter(|| metrics::question_scores(e, black_box(&vqa), &answers, 0.5).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, warp, compositing, merge, scoring);
criterion_main!(benches);
