use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use image::{DynamicImage, ImageFormat, RgbImage};
use rand::Rng;
use serde_json::json;

use super::config::{OracleConfig, PipelineConfig, Resources, ShiftParams};
use super::manifest::*;
use crate::dataset::{is_image_file, Dataset, Entry};
use crate::document::{Document, Task};
use crate::error::{Error, Result};
use crate::funsd;
use crate::imaging::{self, DisplacementField};
use crate::layout::{self, MergeParams};
use crate::oracle::{Endpoint, LineOracle, OracleError};
use crate::par::{self, Exec};
use crate::rng::doc_rng;
use crate::sidecar::{self, CLASSIFICATION_SIDECAR, VQA_SIDECAR};
use crate::text::{self, EmbeddingTable, HomoglyphTable, SwapConfig, SwapMode, TextOutcome};

/// Reusable oracle connections, one checked out per worker at a time.
struct Pool {
    endpoint: Endpoint,
    timeout: Duration,
    idle: Mutex<Vec<LineOracle>>,
}

impl Pool {
    fn new(endpoint: Endpoint, timeout: Duration) -> std::result::Result<Pool, OracleError> {
        let first = LineOracle::connect(&endpoint, timeout)?;
        Ok(Pool {
            endpoint,
            timeout,
            idle: Mutex::new(vec![first]),
        })
    }

    fn with<R>(&self, f: impl FnOnce(&mut LineOracle) -> Result<R>) -> Result<R> {
        let taken = self.idle.lock().expect("pool lock").pop();
        let mut oracle = match taken {
            Some(o) => o,
            None => LineOracle::connect(&self.endpoint, self.timeout)?,
        };
        let out = f(&mut oracle);
        // a connection that failed may be out of sync with the server
        if out.is_ok() {
            self.idle.lock().expect("pool lock").push(oracle);
        }
        out
    }
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    ds: &'a Dataset,
    homoglyphs: HomoglyphTable,
    embeddings: Option<EmbeddingTable>,
    naturals: Vec<PathBuf>,
    masked_lm: Option<Pool>,
    predictor: Option<Pool>,
}

fn sorted_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for ent in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = ent.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && is_image_file(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn resource_records(res: &Resources) -> Result<BTreeMap<String, ResourceRecord>> {
    let mut out = BTreeMap::new();
    for (key, path) in [
        ("embedding_table", &res.embedding_table),
        ("homoglyph_table", &res.homoglyph_table),
        ("natural_images", &res.natural_images),
        ("field_dir", &res.field_dir),
    ] {
        if let Some(p) = path {
            out.insert(
                key.to_string(),
                ResourceRecord {
                    path: p.to_string_lossy().into_owned(),
                    sha256: digest_path(p)?,
                },
            );
        }
    }
    Ok(out)
}

fn prepare_output(cfg: &PipelineConfig) -> Result<()> {
    let out = &cfg.output;
    if out.exists() {
        let mut it = fs::read_dir(out).map_err(|e| Error::io(out, e))?;
        if it.next().is_some() {
            return Err(Error::Config(format!("output `{}` exists and is not empty", out.display())));
        }
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (a, b) = (
        fs::canonicalize(&cfg.input).map_err(|e| Error::io(&cfg.input, e))?,
        fs::canonicalize(out).map_err(|e| Error::io(out, e))?,
    );
    if b.starts_with(&a) || a.starts_with(&b) {
        return Err(Error::Config("input and output directories must not nest".into()));
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn copy_file(from: &Path, to: &Path) -> Result<()> {
    let bytes = fs::read(from).map_err(|e| Error::io(from, e))?;
    write_file(to, &bytes)
}

struct Page {
    rgb: RgbImage,
    gray: bool,
}

fn load_page(path: &Path) -> Result<Page> {
    let img = image::open(path).map_err(|e| Error::image(path, e))?;
    let gray = !img.color().has_color();
    Ok(Page { rgb: img.to_rgb8(), gray })
}

fn save_page(rgb: RgbImage, keep_gray: bool, path: &Path) -> Result<()> {
    let format = ImageFormat::from_path(path).map_err(|e| Error::image(path, e))?;
    let img = if keep_gray {
        DynamicImage::ImageLuma8(DynamicImage::ImageRgb8(rgb).to_luma8())
    } else {
        DynamicImage::ImageRgb8(rgb)
    };
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, format).map_err(|e| Error::image(path, e))?;
    write_file(path, &buf.into_inner())
}

fn box_changes(before: &Document, after: &Document, rec: &mut ItemRecord) {
    for (i, (a, b)) in before.words().zip(after.words()).enumerate() {
        if a.bbox != b.bbox {
            rec.changes.push(Change::WordBox {
                word_index: i,
                before: a.bbox,
                after: b.bbox,
            });
        }
    }
    for (a, b) in before.entities.iter().zip(&after.entities) {
        if a.words.is_empty() && a.bbox != b.bbox {
            rec.changes.push(Change::EntityBox {
                entity_id: a.id,
                before: a.bbox,
                after: b.bbox,
            });
        }
    }
}

fn text_record(out: &TextOutcome, rec: &mut ItemRecord) {
    rec.details.insert("eligible_words".into(), json!(out.eligible));
    for c in &out.changes {
        rec.changes.push(Change::Text {
            word_index: c.word_index,
            before: c.before.clone(),
            after: c.after.clone(),
        });
    }
    for i in &out.unchanged {
        rec.flags.push(format!("no_alternative:word[{i}]"));
    }
}

impl Ctx<'_> {
    fn out_path(&self, rel: &Path) -> PathBuf {
        self.cfg.output.join(rel)
    }

    fn process(&self, entry: &Entry) -> ItemRecord {
        let mut rec = ItemRecord::new(&entry.id);
        if let Err(e) = self.shift_one(entry, &mut rec) {
            log::warn!("document `{}` failed: {e}", entry.id);
            rec.status = ItemStatus::Failed;
            rec.error = Some(e.to_string());
            rec.changes.clear();
            rec.details.clear();
            let _ = fs::remove_file(self.out_path(&entry.image));
            if let Some(a) = &entry.annotation {
                let _ = fs::remove_file(self.out_path(a));
            }
        }
        rec
    }

    fn shift_one(&self, entry: &Entry, rec: &mut ItemRecord) -> Result<()> {
        let cfg = self.cfg;
        let root = &self.ds.root;
        let src_image = root.join(&entry.image);
        let doc = self.ds.load(entry)?;
        let seed = cfg.seed;

        // (new annotation, new image); `None` copies the input bytes
        let (new_doc, new_image): (Option<Document>, Option<(RgbImage, bool)>) = match &cfg.shift {
            ShiftParams::Original => (None, None),
            ShiftParams::TextBert { rate, k } => {
                let sc = SwapConfig {
                    mode: SwapMode::BertAttack,
                    rate: *rate,
                    k: *k,
                    seed,
                };
                let pool = self.masked_lm.as_ref().expect("checked at start");
                let out = pool.with(|lm| text::bert_attack(&doc, lm, &sc))?;
                text_record(&out, rec);
                (Some(out.doc), None)
            }
            ShiftParams::TextSwap { mode, rate, k } => {
                let sc = SwapConfig {
                    mode: *mode,
                    rate: *rate,
                    k: *k,
                    seed,
                };
                let out = match mode {
                    SwapMode::Embedding => {
                        text::swap_by_embedding(&doc, self.embeddings.as_ref().expect("loaded at start"), &sc)?
                    }
                    SwapMode::Homoglyph => text::swap_homoglyph(&doc, &self.homoglyphs, &sc)?,
                    SwapMode::Number => text::swap_numbers(&doc, &sc)?,
                    SwapMode::CharDelete => text::delete_characters(&doc, &sc)?,
                    SwapMode::BertAttack => unreachable!("rejected by validation"),
                };
                text_record(&out, rec);
                (Some(out.doc), None)
            }
            ShiftParams::LayoutMerge { lambda1, lambda2 } => {
                let (merged, summary) = layout::apply_layout_merge(&doc, MergeParams::new(*lambda1, *lambda2)?)?;
                rec.details.insert("words".into(), json!(summary.words));
                rec.details.insert("groups".into(), json!(summary.groups));
                box_changes(&doc, &merged, rec);
                (Some(merged), None)
            }
            ShiftParams::LayoutMove {
                trials,
                strength_threshold,
                count,
            } => {
                let page = load_page(&src_image)?;
                let strengths = match &self.predictor {
                    Some(pool) => {
                        let mut rng = doc_rng(seed, "strength", &doc.id);
                        pool.with(|p| layout::score_semantic_strength(&doc, p, *trials, &mut rng))?
                    }
                    None => layout::heuristic_strength(&doc),
                };
                let mut rng = doc_rng(seed, "layout_move", &doc.id);
                let out = layout::apply_layout_move(&doc, &page.rgb, &strengths, *strength_threshold, *count, &mut rng)?;
                rec.strengths = strengths;
                for id in &out.unplaced {
                    rec.flags.push(format!("unplaced:entity[{id}]"));
                }
                if out.moves.is_empty() {
                    rec.flags.push(if out.unplaced.is_empty() {
                        "no_strong_entity".into()
                    } else {
                        "no_placement".into()
                    });
                }
                for m in &out.moves {
                    rec.changes.push(Change::Move {
                        entity_id: m.entity_id,
                        before: m.from,
                        after: m.to,
                    });
                }
                box_changes(&doc, &out.doc, rec);
                let image = (!out.moves.is_empty()).then_some((out.image, page.gray));
                (Some(out.doc), image)
            }
            ShiftParams::ImageNatural { mask_method } => {
                let page = load_page(&src_image)?;
                let mut rng = doc_rng(seed, "image_natural", &doc.id);
                let pick = &self.naturals[rng.random_range(0..self.naturals.len())];
                let natural = imaging::load_rgb(pick)?;
                let mask = imaging::extract_text_mask(&page.rgb, &doc.word_boxes(), *mask_method)?;
                if doc.word_count() == 0 {
                    rec.flags.push("no_words".into());
                }
                rec.changes.push(Change::Background {
                    natural_image: pick.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                    text_pixels: mask.count(),
                });
                let composed = imaging::replace_background(&page.rgb, &mask, &natural)?;
                (None, Some((composed, false)))
            }
            ShiftParams::ImageDistorted {
                amplitude,
                wavelength,
                perspective,
            } => {
                let page = load_page(&src_image)?;
                let (w, h) = page.rgb.dimensions();
                let (field, source) = match &cfg.resources.field_dir {
                    Some(dir) => {
                        let p = dir.join(format!("{}.dfld", doc.id));
                        (DisplacementField::read(&p)?, p.file_name().unwrap().to_string_lossy().into_owned())
                    }
                    None => {
                        let s: u64 = doc_rng(seed, "image_distorted", &doc.id).random();
                        let f = imaging::synthesize_displacement_field(w, h, *amplitude, *wavelength, *perspective, s)?;
                        (f, format!("synthetic:{s:016x}"))
                    }
                };
                let (mx, my) = field.max_abs();
                rec.changes.push(Change::Field {
                    source,
                    max_dx: mx,
                    max_dy: my,
                });
                let mut boxes = doc.word_boxes();
                let wordless: Vec<usize> = (0..doc.entities.len()).filter(|&i| doc.entities[i].words.is_empty()).collect();
                boxes.extend(wordless.iter().map(|&i| doc.entities[i].bbox));
                let (warped, new_boxes) = imaging::warp_with(Exec::Sequential, &page.rgb, &boxes, &field)?;
                let n = doc.word_count();
                let mut moved = doc.with_word_boxes(&new_boxes[..n]);
                for (&i, b) in wordless.iter().zip(&new_boxes[n..]) {
                    moved.entities[i].bbox = *b;
                }
                box_changes(&doc, &moved, rec);
                (Some(moved), Some((warped, page.gray)))
            }
        };

        let mut changed = false;
        match new_image {
            Some((rgb, gray)) => {
                save_page(rgb, gray, &self.out_path(&entry.image))?;
                changed = true;
            }
            None => copy_file(&src_image, &self.out_path(&entry.image))?,
        }
        if let Some(rel) = &entry.annotation {
            let src = root.join(rel);
            match new_doc {
                Some(d) if d != doc => {
                    write_file(&self.out_path(rel), &funsd::serialize_document(&d))?;
                    changed = true;
                }
                _ => copy_file(&src, &self.out_path(rel))?,
            }
        }
        rec.status = if changed { ItemStatus::Shifted } else { ItemStatus::Unchanged };
        Ok(())
    }
}

/// Copies the sidecar, dropping the lines of documents that failed.
fn write_sidecar(cfg: &PipelineConfig, failed: &HashSet<&str>) -> Result<()> {
    let name = match cfg.task {
        Task::Ie => return Ok(()),
        Task::Classification => CLASSIFICATION_SIDECAR,
        Task::Vqa => VQA_SIDECAR,
    };
    let src = cfg.input.join(name);
    let text = fs::read_to_string(&src).map_err(|e| Error::io(&src, e))?;
    if failed.is_empty() {
        return write_file(&cfg.output.join(name), text.as_bytes());
    }
    let stem = |image: &str| {
        Path::new(image)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let mut out = String::new();
    for line in text.lines() {
        let image = match cfg.task {
            Task::Classification => sidecar::parse_classification(line)?.pop().map(|r| r.image),
            _ => sidecar::parse_vqa(line)?.pop().map(|r| r.image),
        };
        if image.is_some_and(|i| failed.contains(stem(&i).as_str())) {
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    write_file(&cfg.output.join(name), out.as_bytes())
}

/// Shifts every document of the input split into `cfg.output` and writes the
/// manifest next to it. Per-document failures are recorded, not raised.
pub fn run_shift(cfg: &PipelineConfig) -> Result<ShiftManifest> {
    cfg.validate()?;
    let ds = Dataset::open(&cfg.input, cfg.task)?;
    prepare_output(cfg)?;
    let input_digest = digest_dir(&cfg.input, &[])?;
    let resources = resource_records(&cfg.resources)?;

    let timeout = Duration::from_secs_f64(cfg.oracle.timeout_secs);
    let needs_lm = matches!(cfg.shift, ShiftParams::TextBert { .. });
    let needs_predictor = matches!(cfg.shift, ShiftParams::LayoutMove { .. });
    let pool = |raw: &Option<String>, key: &str, wanted: bool| -> Result<Option<Pool>> {
        match OracleConfig::endpoint(raw, key)? {
            Some(ep) if wanted => Ok(Some(Pool::new(ep, timeout)?)),
            _ => Ok(None),
        }
    };
    let masked_lm = pool(&cfg.oracle.masked_lm, "masked_lm", needs_lm)?;
    let predictor = pool(&cfg.oracle.predictor, "predictor", needs_predictor)?;
    if needs_predictor && predictor.is_none() {
        log::info!("no prediction oracle configured; using the heuristic strength proxy");
    }

    let homoglyphs = match &cfg.resources.homoglyph_table {
        Some(p) => HomoglyphTable::load(p)?,
        None => HomoglyphTable::builtin(),
    };
    let embeddings = match (&cfg.shift, &cfg.resources.embedding_table) {
        (
            ShiftParams::TextSwap {
                mode: SwapMode::Embedding,
                ..
            },
            Some(p),
        ) => Some(EmbeddingTable::load(p)?),
        _ => None,
    };
    let naturals = match (&cfg.shift, &cfg.resources.natural_images) {
        (ShiftParams::ImageNatural { .. }, Some(dir)) => {
            let list = sorted_images(dir)?;
            if list.is_empty() {
                return Err(Error::Config(format!("no images in `{}`", dir.display())));
            }
            list
        }
        _ => Vec::new(),
    };

    let ctx = Ctx {
        cfg,
        ds: &ds,
        homoglyphs,
        embeddings,
        naturals,
        masked_lm,
        predictor,
    };
    let items = par::with_workers(cfg.workers, || par::map(Exec::Parallel, &ds.entries, |e| ctx.process(e)));

    let failed: HashSet<&str> = items
        .iter()
        .filter(|r| r.status == ItemStatus::Failed)
        .map(|r| r.id.as_str())
        .collect();
    write_sidecar(cfg, &failed)?;
    let output_digest = digest_dir(&cfg.output, &[MANIFEST_FILE])?;

    let summary = RunSummary {
        documents: items.len(),
        shifted: items.iter().filter(|r| r.status == ItemStatus::Shifted).count(),
        unchanged: items.iter().filter(|r| r.status == ItemStatus::Unchanged).count(),
        failed: failed.len(),
        flagged: items.iter().filter(|r| !r.flags.is_empty()).count(),
        changes: items.iter().map(|r| r.changes.len()).sum(),
    };
    let manifest = ShiftManifest {
        toolkit: TOOLKIT_NAME.into(),
        version: TOOLKIT_VERSION.into(),
        task: cfg.task,
        seed: cfg.seed,
        shift: cfg.shift.clone(),
        input: cfg.input.to_string_lossy().into_owned(),
        input_digest,
        output_digest,
        oracle: cfg.oracle.clone(),
        resources,
        summary,
        items,
    };
    write_file(&cfg.output.join(MANIFEST_FILE), &manifest.to_bytes())?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub expected: String,
    pub actual: String,
}

impl ReplayReport {
    pub fn matches(&self) -> bool {
        self.expected == self.actual
    }
}

/// Reruns a recorded shift into `output` and compares output digests.
pub fn replay(manifest: &ShiftManifest, input: Option<&Path>, output: &Path, workers: usize) -> Result<ReplayReport> {
    let input = input.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&manifest.input));
    let digest = digest_dir(&input, &[])?;
    if digest != manifest.input_digest {
        return Err(Error::Config(format!(
            "input `{}` has digest {digest}, manifest expects {}",
            input.display(),
            manifest.input_digest
        )));
    }
    let res = |key: &str| manifest.resources.get(key).map(|r| PathBuf::from(&r.path));
    for (key, rec) in &manifest.resources {
        let actual = digest_path(Path::new(&rec.path))?;
        if actual != rec.sha256 {
            return Err(Error::Config(format!("resource {key} `{}` changed since the run", rec.path)));
        }
    }
    let cfg = PipelineConfig {
        task: manifest.task,
        input,
        output: output.to_path_buf(),
        seed: manifest.seed,
        workers,
        shift: manifest.shift.clone(),
        oracle: manifest.oracle.clone(),
        resources: Resources {
            embedding_table: res("embedding_table"),
            homoglyph_table: res("homoglyph_table"),
            natural_images: res("natural_images"),
            field_dir: res("field_dir"),
        },
    };
    let rerun = run_shift(&cfg)?;
    Ok(ReplayReport {
        expected: manifest.output_digest.clone(),
        actual: rerun.output_digest,
    })
}
