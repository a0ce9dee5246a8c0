use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Per-pixel text/background split of a page image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl TextMask {
    pub fn empty(width: u32, height: u32) -> Self {
        TextMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        TextMask {
            width,
            height,
            bits: vec![true; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut m = TextMask::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                m.set(x, y, f(x, y));
            }
        }
        m
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMethod {
    /// Otsu threshold per word box; the darker side is text unless it covers
    /// more than half of the box.
    #[default]
    Otsu,
    /// Every pixel inside a word box is text.
    FullBox,
}

/// Grayscale intensity with the 0.299 / 0.587 / 0.114 weights, rounded.
pub fn luma(p: &Rgb<u8>) -> u8 {
    let [r, g, b] = p.0;
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8
}

/// Level `t` maximising between-class variance of `{<= t}` vs `{> t}`;
/// `None` when every sample has the same level.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 || hist.iter().filter(|c| **c > 0).count() < 2 {
        return None;
    }
    let sum_all: f64 = hist.iter().enumerate().map(|(i, c)| i as f64 * *c as f64).sum();
    let (mut w0, mut sum0) = (0u64, 0.0f64);
    let mut best = (f64::NEG_INFINITY, 0u8);
    for (t, &count) in hist.iter().enumerate().take(255) {
        w0 += count;
        sum0 += t as f64 * count as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let mu0 = sum0 / w0 as f64;
        let mu1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (mu0 - mu1) * (mu0 - mu1);
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    Some(best.1)
}

/// Locates text pixels inside the given word boxes.
pub fn extract_text_mask(image: &RgbImage, boxes: &[BoundingBox], method: MaskMethod) -> Result<TextMask> {
    let (w, h) = image.dimensions();
    let mut mask = TextMask::empty(w, h);
    for (i, b) in boxes.iter().enumerate() {
        if b.area() == 0 {
            log::warn!("skipping zero-area box {i} {b}");
            continue;
        }
        let c = b.clamp_to(w, h);
        if c.area() == 0 {
            return Err(Error::validation(
                format!("box[{i}]"),
                format!("box {b} lies outside the {w}x{h} image"),
            ));
        }
        let pixels = || {
            (c.y1 as u32..c.y2 as u32)
                .flat_map(move |y| (c.x1 as u32..c.x2 as u32).map(move |x| (x, y)))
        };
        match method {
            MaskMethod::FullBox => pixels().for_each(|(x, y)| mask.set(x, y, true)),
            MaskMethod::Otsu => {
                let mut hist = [0u64; 256];
                for (x, y) in pixels() {
                    hist[luma(image.get_pixel(x, y)) as usize] += 1;
                }
                let Some(t) = otsu_threshold(&hist) else { continue };
                let dark: u64 = hist[..=t as usize].iter().sum();
                let light_text = dark * 2 > c.area() as u64;
                for (x, y) in pixels() {
                    let is_dark = luma(image.get_pixel(x, y)) <= t;
                    if is_dark != light_text {
                        mask.set(x, y, true);
                    }
                }
            }
        }
    }
    Ok(mask)
}
