//! On-disk dataset splits.
//!
//! A split directory holds `annotations/<id>.json`, `images/<id>.<ext>` and,
//! depending on the task, a `labels.txt` or `qa.jsonl` sidecar.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::document::{Document, QaPair, Task, TaskPayload};
use crate::error::{Error, Result};
use crate::funsd::{self, ImageRef};
use crate::sidecar::{self, CLASSIFICATION_SIDECAR, VQA_SIDECAR};

pub const ANNOTATIONS_DIR: &str = "annotations";
pub const IMAGES_DIR: &str = "images";

const IMAGE_EXTENSIONS: [&str; 7] = ["png", "jpg", "jpeg", "tif", "tiff", "bmp", "webp"];

pub fn is_image_file(path: &Path) -> bool {
    path.extension()
        .map(|e| {
            let e = e.to_string_lossy().to_ascii_lowercase();
            IMAGE_EXTENSIONS.contains(&e.as_str())
        })
        .unwrap_or(false)
}

/// One document of a split before it is parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub id: String,
    /// Image path relative to the split root.
    pub image: PathBuf,
    /// Annotation path relative to the split root, if the page has OCR annotations.
    pub annotation: Option<PathBuf>,
    pub payload: TaskPayload,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub task: Task,
    /// Sorted by id.
    pub entries: Vec<Entry>,
    /// Original sidecar line order, kept so outputs mirror inputs.
    pub sidecar_order: Vec<String>,
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for ent in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let ent = ent.map_err(|e| Error::io(dir, e))?;
        if ent.file_type().map_err(|e| Error::io(ent.path(), e))?.is_file() {
            out.push(ent.path());
        }
    }
    out.sort();
    Ok(out)
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn images_by_stem(root: &Path) -> Result<HashMap<String, PathBuf>> {
    let dir = root.join(IMAGES_DIR);
    let mut map = HashMap::new();
    if dir.is_dir() {
        for p in read_dir_sorted(&dir)? {
            if is_image_file(&p) {
                let rel = Path::new(IMAGES_DIR).join(p.file_name().unwrap());
                map.entry(stem_of(&p)).or_insert(rel);
            }
        }
    }
    Ok(map)
}

fn annotation_for(root: &Path, id: &str) -> Option<PathBuf> {
    let rel = Path::new(ANNOTATIONS_DIR).join(format!("{id}.json"));
    root.join(&rel).is_file().then_some(rel)
}

impl Dataset {
    pub fn open(root: impl AsRef<Path>, task: Task) -> Result<Dataset> {
        let root = root.as_ref().to_path_buf();
        if !root.is_dir() {
            return Err(Error::io(
                &root,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
            ));
        }
        let mut entries = Vec::new();
        let mut sidecar_order = Vec::new();
        match task {
            Task::Ie => {
                let images = images_by_stem(&root)?;
                let ann_dir = root.join(ANNOTATIONS_DIR);
                for p in read_dir_sorted(&ann_dir)? {
                    if p.extension().and_then(|e| e.to_str()) != Some("json") {
                        continue;
                    }
                    let id = stem_of(&p);
                    let image = images.get(&id).cloned().ok_or_else(|| {
                        Error::validation(p.display().to_string(), "no image with matching stem")
                    })?;
                    entries.push(Entry {
                        annotation: Some(Path::new(ANNOTATIONS_DIR).join(p.file_name().unwrap())),
                        id,
                        image,
                        payload: TaskPayload::Ie,
                    });
                }
            }
            Task::Classification => {
                let path = root.join(CLASSIFICATION_SIDECAR);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                for rec in sidecar::parse_classification(&text)? {
                    let image = PathBuf::from(&rec.image);
                    let id = stem_of(&image);
                    sidecar_order.push(id.clone());
                    entries.push(Entry {
                        annotation: annotation_for(&root, &id),
                        id,
                        image,
                        payload: TaskPayload::Classification(rec.class),
                    });
                }
            }
            Task::Vqa => {
                let path = root.join(VQA_SIDECAR);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let mut grouped: BTreeMap<String, (PathBuf, Vec<QaPair>)> = BTreeMap::new();
                for rec in sidecar::parse_vqa(&text)? {
                    let image = PathBuf::from(&rec.image);
                    let id = stem_of(&image);
                    if !grouped.contains_key(&id) {
                        sidecar_order.push(id.clone());
                    }
                    grouped
                        .entry(id)
                        .or_insert_with(|| (image, Vec::new()))
                        .1
                        .push(QaPair {
                            question: rec.question,
                            answers: rec.answers,
                        });
                }
                for (id, (image, qas)) in grouped {
                    entries.push(Entry {
                        annotation: annotation_for(&root, &id),
                        id,
                        image,
                        payload: TaskPayload::Vqa(qas),
                    });
                }
            }
        }
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in entries.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::validation(
                    root.display().to_string(),
                    format!("duplicate document id `{}`", pair[0].id),
                ));
            }
        }
        Ok(Dataset {
            root,
            task,
            entries,
            sidecar_order,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses one entry into a document.
    pub fn load(&self, entry: &Entry) -> Result<Document> {
        let image_path = self.root.join(&entry.image);
        let probe = ImageRef::probe(&image_path)?;
        let image = ImageRef::new(&entry.image, probe.width, probe.height);
        let mut doc = match &entry.annotation {
            Some(rel) => {
                let path = self.root.join(rel);
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                funsd::parse_ie_document(&bytes, &image).map_err(|e| annotate(e, &path))?
            }
            None => Document {
                id: entry.id.clone(),
                image_path: entry.image.clone(),
                width: image.width,
                height: image.height,
                entities: Vec::new(),
                payload: TaskPayload::Ie,
            },
        };
        doc.id = entry.id.clone();
        doc.payload = entry.payload.clone();
        Ok(doc)
    }

    pub fn load_all(&self) -> Result<Vec<Document>> {
        self.entries.iter().map(|e| self.load(e)).collect()
    }
}

fn annotate(err: Error, file: &Path) -> Error {
    match err {
        Error::Parse { path, message } => Error::Parse {
            path: format!("{}:{path}", file.display()),
            message,
        },
        Error::Validation { path, message } => Error::Validation {
            path: format!("{}:{path}", file.display()),
            message,
        },
        other => other,
    }
}

/// Writes the sidecar for `docs`, keeping the input line order.
pub fn write_sidecar(out_root: &Path, task: Task, order: &[String], docs: &[&Document]) -> Result<()> {
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), *d)).collect();
    let ordered = order.iter().filter_map(|id| by_id.get(id.as_str()));
    let (name, bytes) = match task {
        Task::Ie => return Ok(()),
        Task::Classification => {
            let recs: Vec<_> = ordered
                .filter_map(|d| match d.payload {
                    TaskPayload::Classification(class) => Some(sidecar::ClassRecord {
                        image: d.image_path.to_string_lossy().into_owned(),
                        class,
                    }),
                    _ => None,
                })
                .collect();
            (CLASSIFICATION_SIDECAR, sidecar::serialize_classification(&recs))
        }
        Task::Vqa => {
            let mut recs = Vec::new();
            for d in ordered {
                if let TaskPayload::Vqa(qas) = &d.payload {
                    for qa in qas {
                        recs.push(sidecar::VqaRecord {
                            image: d.image_path.to_string_lossy().into_owned(),
                            question: qa.question.clone(),
                            answers: qa.answers.clone(),
                        });
                    }
                }
            }
            (VQA_SIDECAR, sidecar::serialize_vqa(&recs))
        }
    };
    let path = out_root.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub documents: usize,
    pub entities: usize,
    pub words: usize,
    pub labels: BTreeMap<String, usize>,
    pub classes: BTreeMap<u8, usize>,
    pub questions: usize,
}

pub fn dataset_stats<'a>(docs: impl IntoIterator<Item = &'a Document>) -> DatasetStats {
    let mut s = DatasetStats::default();
    for d in docs {
        s.documents += 1;
        s.entities += d.entities.len();
        s.words += d.word_count();
        for e in &d.entities {
            if let Some(l) = e.label {
                *s.labels.entry(l.as_str().to_string()).or_default() += 1;
            }
        }
        match &d.payload {
            TaskPayload::Ie => {}
            TaskPayload::Classification(c) => *s.classes.entry(*c).or_default() += 1,
            TaskPayload::Vqa(q) => s.questions += q.len(),
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub file: String,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub files_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every file of a split and collects all problems found.
pub fn validate_dataset(root: impl AsRef<Path>, task: Task) -> Result<ValidationReport> {
    let root = root.as_ref();
    let mut report = ValidationReport::default();
    let ann_dir = root.join(ANNOTATIONS_DIR);
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let images = images_by_stem(root)?;
    if ann_dir.is_dir() {
        for p in read_dir_sorted(&ann_dir)? {
            if p.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            report.files_checked += 1;
            let file = p
                .strip_prefix(root)
                .unwrap_or(&p)
                .to_string_lossy()
                .into_owned();
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            for issue in funsd::validate_annotation(&bytes) {
                report.violations.push(Violation {
                    file: file.clone(),
                    path: issue.path,
                    message: issue.message,
                });
            }
            if task == Task::Ie && !images.contains_key(&stem_of(&p)) {
                report.violations.push(Violation {
                    file,
                    path: String::new(),
                    message: "no image with matching stem".into(),
                });
            }
        }
    } else if task == Task::Ie {
        report.violations.push(Violation {
            file: ANNOTATIONS_DIR.into(),
            path: String::new(),
            message: "missing annotations directory".into(),
        });
    }

    let sidecar_name = match task {
        Task::Ie => None,
        Task::Classification => Some(CLASSIFICATION_SIDECAR),
        Task::Vqa => Some(VQA_SIDECAR),
    };
    if let Some(name) = sidecar_name {
        report.files_checked += 1;
        let path = root.join(name);
        let images: Result<Vec<String>> = match fs::read_to_string(&path) {
            Err(e) => Err(Error::io(&path, e)),
            Ok(text) if task == Task::Classification => sidecar::parse_classification(&text)
                .map(|r| r.into_iter().map(|r| r.image).collect()),
            Ok(text) => sidecar::parse_vqa(&text).map(|r| r.into_iter().map(|r| r.image).collect()),
        };
        match images {
            Ok(images) => {
                for img in images {
                    if !root.join(&img).is_file() {
                        report.violations.push(Violation {
                            file: name.into(),
                            path: img,
                            message: "referenced image does not exist".into(),
                        });
                    }
                }
            }
            Err(e) => report.violations.push(Violation {
                file: name.into(),
                path: String::new(),
                message: e.to_string(),
            }),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_collection_has_zero_stats() {
        assert_eq!(dataset_stats(&[]), DatasetStats::default());
    }

    #[test]
    fn missing_directory_is_an_error() {
        assert!(validate_dataset("/definitely/not/here", Task::Ie).is_err());
        assert!(Dataset::open("/definitely/not/here", Task::Ie).is_err());
    }
}
