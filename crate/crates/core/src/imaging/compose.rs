use std::path::Path;

use image::imageops::{self, FilterType};
use image::RgbImage;

use super::mask::TextMask;
use crate::error::{Error, Result};
use crate::par::{self, Exec};

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    Ok(image::open(path)
        .map_err(|e| Error::image(path, e))?
        .to_rgb8())
}

/// Bilinear resize of `natural` to `width` x `height`.
pub fn resize_natural(natural: &RgbImage, width: u32, height: u32) -> RgbImage {
    imageops::resize(natural, width, height, FilterType::Triangle)
}

/// Keeps masked document pixels and takes every other pixel from the resized
/// natural image.
pub fn replace_background(image: &RgbImage, mask: &TextMask, natural: &RgbImage) -> Result<RgbImage> {
    replace_background_with(Exec::default(), image, mask, natural)
}

pub fn replace_background_with(
    exec: Exec,
    image: &RgbImage,
    mask: &TextMask,
    natural: &RgbImage,
) -> Result<RgbImage> {
    let (w, h) = image.dimensions();
    if mask.dimensions() != (w, h) {
        return Err(Error::Parameter(format!(
            "mask is {:?} but image is {w}x{h}",
            mask.dimensions()
        )));
    }
    let mut out = resize_natural(natural, w, h);
    let src = image.as_raw();
    let bits = mask.bits();
    let row_len = w as usize * 3;
    par::for_each_chunk_mut(exec, &mut out, row_len, |y, row| {
        let base = y * w as usize;
        for x in 0..w as usize {
            if bits[base + x] {
                let at = (base + x) * 3;
                row[x * 3..x * 3 + 3].copy_from_slice(&src[at..at + 3]);
            }
        }
    });
    Ok(out)
}
