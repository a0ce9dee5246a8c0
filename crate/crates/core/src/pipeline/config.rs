//! Run configuration: a TOML file plus dotted `key=value` overrides.
//!
//! ```toml
//! task = "ie"
//! input = "data/funsd/test"
//! output = "out/funsd-merge"
//! seed = 7
//!
//! [shift]
//! kind = "layout_merge"
//! lambda1 = 3
//! lambda2 = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::document::{ShiftKind, Task};
use crate::error::{Error, Result};
use crate::imaging::MaskMethod;
use crate::layout::strength::{DEFAULT_THRESHOLD, DEFAULT_TRIALS};
use crate::layout::MergeParams;
use crate::oracle::{Endpoint, DEFAULT_TIMEOUT};
use crate::text::{SwapConfig, SwapMode, DEFAULT_K, DEFAULT_RATE};

fn default_rate() -> f64 {
    DEFAULT_RATE
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_amplitude() -> f64 {
    4.0
}
fn default_wavelength() -> f64 {
    160.0
}
fn default_perspective() -> f64 {
    6.0
}
fn default_trials() -> u32 {
    DEFAULT_TRIALS
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_count() -> usize {
    1
}
fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT.as_secs_f64()
}

/// Shift kind with its full parameter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftParams {
    Original,
    ImageNatural {
        #[serde(default)]
        mask_method: MaskMethod,
    },
    ImageDistorted {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavelength")]
        wavelength: f64,
        #[serde(default = "default_perspective")]
        perspective: f64,
    },
    TextBert {
        #[serde(default = "default_rate")]
        rate: f64,
        #[serde(default = "default_k")]
        k: usize,
    },
    TextSwap {
        mode: SwapMode,
        #[serde(default = "default_rate")]
        rate: f64,
        #[serde(default = "default_k")]
        k: usize,
    },
    LayoutMerge {
        lambda1: i32,
        lambda2: i32,
    },
    LayoutMove {
        #[serde(default = "default_trials")]
        trials: u32,
        #[serde(default = "default_threshold")]
        strength_threshold: f64,
        #[serde(default = "default_count")]
        count: usize,
    },
}

impl ShiftParams {
    pub fn kind(&self) -> ShiftKind {
        match self {
            ShiftParams::Original => ShiftKind::Original,
            ShiftParams::ImageNatural { .. } => ShiftKind::ImageNatural,
            ShiftParams::ImageDistorted { .. } => ShiftKind::ImageDistorted,
            ShiftParams::TextBert { .. } => ShiftKind::TextBert,
            ShiftParams::TextSwap { .. } => ShiftKind::TextSwap,
            ShiftParams::LayoutMerge { .. } => ShiftKind::LayoutMerge,
            ShiftParams::LayoutMove { .. } => ShiftKind::LayoutMove,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match *self {
            ShiftParams::ImageDistorted {
                amplitude,
                wavelength,
                perspective,
            } => {
                if !(wavelength.is_finite() && wavelength > 0.0) {
                    return bad(format!("shift.wavelength must be positive, got {wavelength}"));
                }
                if !(amplitude.is_finite() && amplitude >= 0.0) || !(perspective.is_finite() && perspective >= 0.0) {
                    return bad("shift.amplitude and shift.perspective must be non-negative".into());
                }
            }
            ShiftParams::TextBert { rate, k } => SwapConfig {
                mode: SwapMode::BertAttack,
                rate,
                k,
                seed: 0,
            }
            .validate()?,
            ShiftParams::TextSwap { mode, rate, k } => {
                if mode == SwapMode::BertAttack {
                    return bad("use shift kind `text_bert` for the masked-LM attack".into());
                }
                SwapConfig { mode, rate, k, seed: 0 }.validate()?
            }
            ShiftParams::LayoutMerge { lambda1, lambda2 } => {
                MergeParams::new(lambda1, lambda2)?;
            }
            ShiftParams::LayoutMove {
                trials,
                strength_threshold,
                ..
            } => {
                if trials == 0 {
                    return bad("shift.trials must be at least 1".into());
                }
                if !(0.0..=1.0).contains(&strength_threshold) {
                    return bad(format!("shift.strength_threshold {strength_threshold} outside [0, 1]"));
                }
            }
            ShiftParams::Original | ShiftParams::ImageNatural { .. } => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Masked-LM oracle endpoint for `text_bert`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_lm: Option<String>,
    /// Prediction oracle for `layout_move`; without one the heuristic strength is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            masked_lm: None,
            predictor: None,
            timeout_secs: default_timeout(),
        }
    }
}

impl OracleConfig {
    pub fn endpoint(raw: &Option<String>, key: &str) -> Result<Option<Endpoint>> {
        raw.as_deref()
            .map(|s| s.parse().map_err(|e| Error::Config(format!("oracle.{key}: {e}"))))
            .transpose()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resources {
    /// `word v1 .. vd` text file for the embedding swap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_table: Option<PathBuf>,
    /// Replaces the built-in homoglyph table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homoglyph_table: Option<PathBuf>,
    /// Directory of natural images for background replacement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub natural_images: Option<PathBuf>,
    /// Directory of `<id>.dfld` fields used instead of synthesized ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub task: Task,
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads, 0 for one per core. Never affects outputs.
    #[serde(default)]
    pub workers: usize,
    pub shift: ShiftParams,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub resources: Resources,
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c = value` inside `table`, creating intermediate tables.
pub fn set_dotted(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key `{key}`")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let slot = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = slot
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a table")))?;
    }
    let last = parts[parts.len() - 1];
    // changing the shift kind discards parameters of the previous kind
    if parts == ["shift", "kind"] {
        let value = override_value(raw);
        if cur.get("kind") != Some(&value) {
            cur.clear();
        }
        cur.insert(last.to_string(), value);
    } else {
        cur.insert(last.to_string(), override_value(raw));
    }
    Ok(())
}

impl PipelineConfig {
    /// Builds a configuration from optional TOML text and ordered overrides.
    pub fn from_parts(toml_text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match toml_text {
            Some(t) => t
                .parse::<toml::Table>()
                .map_err(|e| Error::Config(e.to_string()))?,
            None => toml::Table::new(),
        };
        for (k, v) in overrides {
            set_dotted(&mut table, k, v)?;
        }
        let cfg: PipelineConfig = serde_path_to_error::deserialize(toml::Value::Table(table))
            .map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
        cfg.shift.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_parts(Some(&text), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Paths and parameters that must hold before any document is touched.
    pub fn validate(&self) -> Result<()> {
        self.shift.validate()?;
        if !self.input.is_dir() {
            return Err(Error::Config(format!("input `{}` is not a directory", self.input.display())));
        }
        let need = |p: &Option<PathBuf>, key: &str| -> Result<()> {
            match p {
                Some(p) if p.exists() => Ok(()),
                Some(p) => Err(Error::Config(format!("resources.{key} `{}` does not exist", p.display()))),
                None => Err(Error::Config(format!(
                    "shift `{}` needs resources.{key}",
                    self.shift.kind()
                ))),
            }
        };
        match &self.shift {
            ShiftParams::ImageNatural { .. } => need(&self.resources.natural_images, "natural_images")?,
            ShiftParams::TextSwap {
                mode: SwapMode::Embedding,
                ..
            } => need(&self.resources.embedding_table, "embedding_table")?,
            ShiftParams::TextBert { .. } if self.oracle.masked_lm.is_none() => {
                return Err(Error::Config("shift `text_bert` needs oracle.masked_lm".into()))
            }
            _ => {}
        }
        for (p, key) in [
            (&self.resources.homoglyph_table, "homoglyph_table"),
            (&self.resources.field_dir, "field_dir"),
        ] {
            if p.is_some() {
                need(p, key)?;
            }
        }
        OracleConfig::endpoint(&self.oracle.masked_lm, "masked_lm")?;
        OracleConfig::endpoint(&self.oracle.predictor, "predictor")?;
        let t = self.oracle.timeout_secs;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config("oracle.timeout_secs must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    const BASE: &str = "task = \"ie\"\ninput = \"in\"\noutput = \"out\"\nseed = 3\n[shift]\nkind = \"layout_merge\"\nlambda1 = 3\nlambda2 = 1\n";

    #[test]
    fn parses_and_overrides() {
        let cfg = PipelineConfig::from_parts(Some(BASE), &ov(&[("shift.lambda2", "5"), ("seed", "9")])).unwrap();
        assert_eq!(cfg.shift, ShiftParams::LayoutMerge { lambda1: 3, lambda2: 5 });
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.oracle.timeout_secs, 30.0);
    }

    #[test]
    fn kind_override_resets_parameters() {
        let cfg = PipelineConfig::from_parts(
            Some(BASE),
            &ov(&[("shift.kind", "text_swap"), ("shift.mode", "homoglyph")]),
        )
        .unwrap();
        assert_eq!(
            cfg.shift,
            ShiftParams::TextSwap {
                mode: SwapMode::Homoglyph,
                rate: 0.15,
                k: 8
            }
        );
    }

    #[test]
    fn config_from_overrides_only() {
        let cfg = PipelineConfig::from_parts(
            None,
            &ov(&[
                ("task", "vqa"),
                ("input", "a"),
                ("output", "b"),
                ("shift.kind", "original"),
                ("resources.natural_images", "coco"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.task, Task::Vqa);
        assert_eq!(cfg.resources.natural_images, Some(PathBuf::from("coco")));
        let back = PipelineConfig::from_parts(Some(&cfg.to_toml()), &[]).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let e = PipelineConfig::from_parts(Some(BASE), &ov(&[("shift.lambda1", "-1")])).unwrap_err();
        assert!(e.to_string().contains("negative") || e.to_string().contains("lambda"), "{e}");
        let e = PipelineConfig::from_parts(Some(BASE), &ov(&[("shift.lambda9", "1")])).unwrap_err();
        assert!(e.to_string().contains("lambda9"), "{e}");
        let e = PipelineConfig::from_parts(Some(BASE), &ov(&[("task", "ocr")])).unwrap_err();
        assert!(e.to_string().contains("task"), "{e}");
        assert!(PipelineConfig::from_parts(Some(BASE), &ov(&[("shift..x", "1")])).is_err());
    }

    #[test]
    fn shift_parameter_checks() {
        let e = PipelineConfig::from_parts(
            Some(BASE),
            &ov(&[("shift.kind", "image_distorted"), ("shift.wavelength", "0")]),
        )
        .unwrap_err();
        assert!(e.to_string().contains("wavelength"));
        let e = PipelineConfig::from_parts(
            Some(BASE),
            &ov(&[("shift.kind", "text_swap"), ("shift.mode", "number"), ("shift.rate", "1.5")]),
        )
        .unwrap_err();
        assert!(e.to_string().contains("rate"));
    }
}
