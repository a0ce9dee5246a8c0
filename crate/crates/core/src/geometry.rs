//! Integer rectangles in page pixel space and the normalized 0..=1000 space.
//!
//! A box `[x1, y1, x2, y2]` covers the half-open pixel ranges `x1..x2` and
//! `y1..y2` when it is rasterized; [`BoundingBox::intersects`] is the closed
//! test used for proximity, [`BoundingBox::overlaps`] the positive-area one.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound of the normalized coordinate space.
pub const NORMALIZED_MAX: i32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundingBox {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
}

impl BoundingBox {
    pub const ZERO: BoundingBox = BoundingBox { x1: 0, y1: 0, x2: 0, y2: 0 };

    /// Builds a box, rejecting inverted coordinates.
    pub fn new(x1: i32, y1: i32, x2: i32, y2: i32) -> Result<Self> {
        if x2 < x1 {
            return Err(Error::validation("box", "x2 < x1"));
        }
        if y2 < y1 {
            return Err(Error::validation("box", "y2 < y1"));
        }
        Ok(BoundingBox { x1, y1, x2, y2 })
    }

    /// Builds a box from two arbitrary corners.
    pub fn from_corners(ax: i32, ay: i32, bx: i32, by: i32) -> Self {
        BoundingBox {
            x1: ax.min(bx),
            y1: ay.min(by),
            x2: ax.max(bx),
            y2: ay.max(by),
        }
    }

    pub fn to_array(self) -> [i32; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> i32 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> i32 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> i64 {
        self.width() as i64 * self.height() as i64
    }

    pub fn is_valid(&self) -> bool {
        self.x1 <= self.x2 && self.y1 <= self.y2
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }

    /// Expands every side: `dx` horizontally and `dy` vertically.
    pub fn dilate(&self, dx: i32, dy: i32) -> BoundingBox {
        BoundingBox {
            x1: self.x1 - dx,
            y1: self.y1 - dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }

    /// Closed-interval intersection; boxes sharing only an edge or a corner intersect.
    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.x1 <= other.x2 && other.x1 <= self.x2 && self.y1 <= other.y2 && other.y1 <= self.y2
    }

    /// True when the boxes share a region of positive area.
    pub fn overlaps(&self, other: &BoundingBox) -> bool {
        self.x1 < other.x2 && other.x1 < self.x2 && self.y1 < other.y2 && other.y1 < self.y2
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }

    pub fn translate(&self, dx: i32, dy: i32) -> BoundingBox {
        BoundingBox {
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }

    /// Clamps every coordinate into `[0, width] x [0, height]`.
    pub fn clamp_to(&self, width: u32, height: u32) -> BoundingBox {
        let w = width.min(i32::MAX as u32) as i32;
        let h = height.min(i32::MAX as u32) as i32;
        BoundingBox {
            x1: self.x1.clamp(0, w),
            y1: self.y1.clamp(0, h),
            x2: self.x2.clamp(0, w),
            y2: self.y2.clamp(0, h),
        }
    }

    /// Union of an iterator of boxes, `None` when empty.
    pub fn hull<'a>(boxes: impl IntoIterator<Item = &'a BoundingBox>) -> Option<BoundingBox> {
        boxes.into_iter().copied().reduce(|a, b| a.union(&b))
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{}]", self.x1, self.y1, self.x2, self.y2)
    }
}

// Serialized as the `[x1, y1, x2, y2]` array used by annotation files.
impl Serialize for BoundingBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x1, y1, x2, y2] = <[i32; 4]>::deserialize(deserializer)?;
        Ok(BoundingBox { x1, y1, x2, y2 })
    }
}

/// Scales one coordinate by `1000 / extent`, rounding half up.
fn scale_half_up(value: i32, extent: u32) -> i32 {
    let num = 2 * value as i64 * NORMALIZED_MAX as i64 + extent as i64;
    let den = 2 * extent as i64;
    num.div_euclid(den).clamp(0, NORMALIZED_MAX as i64) as i32
}

/// Maps a pixel-space box into the normalized 0..=1000 space of the page.
pub fn normalize_box(b: &BoundingBox, width: u32, height: u32) -> Result<BoundingBox> {
    if width == 0 || height == 0 {
        return Err(Error::Parameter(format!(
            "page dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(BoundingBox {
        x1: scale_half_up(b.x1, width),
        y1: scale_half_up(b.y1, height),
        x2: scale_half_up(b.x2, width),
        y2: scale_half_up(b.y2, height),
    })
}
