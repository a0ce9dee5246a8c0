//! Relocating strong entities to empty parts of the page.

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::document::{Document, Entity};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::layout::strength::StrengthScore;
use crate::rng::DocRng;

/// Candidate placements are aligned to this grid.
pub const GRID_STRIDE: usize = 8;

/// Pixel occupancy of a page with O(1) rectangle queries.
pub struct Occupancy {
    width: usize,
    height: usize,
    // (width + 1) x (height + 1) summed-area table of occupied pixels
    sums: Vec<u32>,
}

impl Occupancy {
    /// Marks the pixels covered by `boxes` (half-open ranges, clamped to the page).
    pub fn from_boxes<'a>(
        width: u32,
        height: u32,
        boxes: impl IntoIterator<Item = &'a BoundingBox>,
    ) -> Self {
        let (w, h) = (width as usize, height as usize);
        let stride = w + 1;
        let mut diff = vec![0i32; stride * (h + 1)];
        for b in boxes {
            let c = b.clamp_to(width, height);
            if c.width() == 0 || c.height() == 0 {
                continue;
            }
            let (x1, y1, x2, y2) = (c.x1 as usize, c.y1 as usize, c.x2 as usize, c.y2 as usize);
            diff[y1 * stride + x1] += 1;
            diff[y1 * stride + x2] -= 1;
            diff[y2 * stride + x1] -= 1;
            diff[y2 * stride + x2] += 1;
        }
        // 2-D prefix of diff gives coverage counts; clip to 0/1 then integrate.
        let mut cover = vec![0i32; stride * (h + 1)];
        for y in 0..=h {
            let mut row = 0;
            for x in 0..=w {
                row += diff[y * stride + x];
                let above = if y > 0 { cover[(y - 1) * stride + x] } else { 0 };
                cover[y * stride + x] = row + above;
            }
        }
        let mut sums = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += (cover[y * stride + x] > 0) as u32;
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Occupancy {
            width: w,
            height: h,
            sums,
        }
    }

    /// Number of occupied pixels under the half-open region of `b`.
    pub fn occupied(&self, b: &BoundingBox) -> u32 {
        let c = b.clamp_to(self.width as u32, self.height as u32);
        let stride = self.width + 1;
        let at = |x: i32, y: i32| self.sums[y as usize * stride + x as usize];
        at(c.x2, c.y2) + at(c.x1, c.y1) - at(c.x1, c.y2) - at(c.x2, c.y1)
    }

    /// All grid-aligned `w` x `h` boxes that lie on the page and cover no occupied pixel.
    pub fn free_slots(&self, w: i32, h: i32) -> Vec<BoundingBox> {
        let mut out = Vec::new();
        if w <= 0 || h <= 0 || w as usize > self.width || h as usize > self.height {
            return out;
        }
        for y in (0..=self.height - h as usize).step_by(GRID_STRIDE) {
            for x in (0..=self.width - w as usize).step_by(GRID_STRIDE) {
                let b = BoundingBox {
                    x1: x as i32,
                    y1: y as i32,
                    x2: x as i32 + w,
                    y2: y as i32 + h,
                };
                if self.occupied(&b) == 0 {
                    out.push(b);
                }
            }
        }
        out
    }
}

/// Picks an empty, grid-aligned spot for `entity` with the same dimensions.
pub fn select_move_target(doc: &Document, entity: &Entity, rng: &mut DocRng) -> Result<BoundingBox> {
    let occupancy = Occupancy::from_boxes(
        doc.width,
        doc.height,
        doc.words().map(|w| &w.bbox).chain(std::iter::once(&entity.bbox)),
    );
    let slots = occupancy.free_slots(entity.bbox.width(), entity.bbox.height());
    if slots.is_empty() {
        return Err(Error::Placement {
            entity_id: entity.id,
        });
    }
    Ok(slots[rng.random_range(0..slots.len())])
}

/// Median colour of the one-pixel page border, channel by channel.
pub fn border_median(image: &RgbImage) -> Rgb<u8> {
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 {
        return Rgb([255, 255, 255]);
    }
    let mut px = Vec::with_capacity(2 * (w + h) as usize);
    for x in 0..w {
        px.push(*image.get_pixel(x, 0));
        if h > 1 {
            px.push(*image.get_pixel(x, h - 1));
        }
    }
    for y in 1..h.saturating_sub(1) {
        px.push(*image.get_pixel(0, y));
        if w > 1 {
            px.push(*image.get_pixel(w - 1, y));
        }
    }
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut vals: Vec<u8> = px.iter().map(|p| p.0[c]).collect();
        vals.sort_unstable();
        *slot = vals[vals.len() / 2];
    }
    Rgb(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub entity_id: u32,
    pub from: BoundingBox,
    pub to: BoundingBox,
}

#[derive(Debug, Clone)]
pub struct MoveOutcome {
    pub doc: Document,
    pub image: RgbImage,
    pub moves: Vec<MoveRecord>,
    /// Eligible entities for which no placement existed.
    pub unplaced: Vec<u32>,
}

fn move_pixels(image: &mut RgbImage, from: &BoundingBox, to: &BoundingBox, fill: Rgb<u8>) {
    let (w, h) = (from.width() as u32, from.height() as u32);
    let patch = image::imageops::crop_imm(image, from.x1 as u32, from.y1 as u32, w, h).to_image();
    for y in from.y1..from.y2 {
        for x in from.x1..from.x2 {
            image.put_pixel(x as u32, y as u32, fill);
        }
    }
    image::imageops::replace(image, &patch, to.x1 as i64, to.y1 as i64);
}

/// Moves up to `count` entities whose strength meets `threshold`.
///
/// Pixels under each moved entity box are copied to the target, the vacated
/// area is filled with the page background estimate and word boxes are
/// translated by the same offset.
pub fn apply_layout_move(
    doc: &Document,
    image: &RgbImage,
    strengths: &[StrengthScore],
    threshold: f64,
    count: usize,
    rng: &mut DocRng,
) -> Result<MoveOutcome> {
    if image.dimensions() != (doc.width, doc.height) {
        return Err(Error::Parameter(format!(
            "image is {:?} but document `{}` is {}x{}",
            image.dimensions(),
            doc.id,
            doc.width,
            doc.height
        )));
    }
    let mut out = MoveOutcome {
        doc: doc.clone(),
        image: image.clone(),
        moves: Vec::new(),
        unplaced: Vec::new(),
    };
    if count == 0 {
        return Ok(out);
    }
    let fill = border_median(image);
    let mut candidates: Vec<usize> = doc
        .entities
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            e.bbox.area() > 0
                && strengths
                    .iter()
                    .any(|s| s.entity_id == e.id && s.meets(threshold))
        })
        .map(|(i, _)| i)
        .collect();
    candidates.shuffle(rng);

    for idx in candidates {
        if out.moves.len() == count {
            break;
        }
        let entity = out.doc.entities[idx].clone();
        let target = match select_move_target(&out.doc, &entity, rng) {
            Ok(t) => t,
            Err(Error::Placement { entity_id }) => {
                out.unplaced.push(entity_id);
                continue;
            }
            Err(e) => return Err(e),
        };
        let (dx, dy) = (target.x1 - entity.bbox.x1, target.y1 - entity.bbox.y1);
        move_pixels(&mut out.image, &entity.bbox, &target, fill);
        let moved = &mut out.doc.entities[idx];
        for w in &mut moved.words {
            w.bbox = w.bbox.translate(dx, dy);
        }
        moved.bbox = moved.bbox.translate(dx, dy);
        out.moves.push(MoveRecord {
            entity_id: entity.id,
            from: entity.bbox,
            to: target,
        });
    }
    Ok(out)
}
