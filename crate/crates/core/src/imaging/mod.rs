//! Background replacement and geometric distortion of page images.

pub mod compose;
pub mod field;
pub mod mask;
pub mod warp;

pub use compose::{load_rgb, replace_background, replace_background_with, resize_natural};
pub use field::{synthesize_displacement_field, DisplacementField};
pub use mask::{extract_text_mask, luma, otsu_threshold, MaskMethod, TextMask};
pub use warp::{remap_box, sample_bilinear, warp, warp_with};
