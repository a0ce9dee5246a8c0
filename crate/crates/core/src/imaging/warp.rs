use image::RgbImage;

use super::field::DisplacementField;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::par::{self, Exec};

const INVERSE_ITERATIONS: usize = 20;
const EDGE_STEP: i32 = 4;

/// Bilinear colour at a continuous position with border replication.
pub fn sample_bilinear(image: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = image.dimensions();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as u32, y.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let px = |x, y| image.get_pixel(x, y).0;
    let (a, b, c, d) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
    let mut out = [0.0; 3];
    for ch in 0..3 {
        let top = a[ch] as f64 * (1.0 - fx) + b[ch] as f64 * fx;
        let bot = c[ch] as f64 * (1.0 - fx) + d[ch] as f64 * fx;
        out[ch] = top * (1.0 - fy) + bot * fy;
    }
    out
}

/// Output position whose source lookup lands on `(qx, qy)`.
fn invert(field: &DisplacementField, qx: f64, qy: f64) -> (f64, f64) {
    let (mut px, mut py) = (qx, qy);
    for _ in 0..INVERSE_ITERATIONS {
        let (dx, dy) = field.sample(px, py);
        let (nx, ny) = (qx - dx, qy - dy);
        let done = (nx - px).abs() < 1e-6 && (ny - py).abs() < 1e-6;
        (px, py) = (nx, ny);
        if done {
            break;
        }
    }
    (px, py)
}

fn snap(v: f64) -> f64 {
    if (v - v.round()).abs() < 1e-3 { v.round() } else { v }
}

/// Where the content of `b` ends up after warping, clamped to the page.
pub fn remap_box(field: &DisplacementField, b: &BoundingBox) -> BoundingBox {
    let (w, h) = field.dimensions();
    let mut points = Vec::new();
    let mut push_edge = |ax: i32, ay: i32, bx: i32, by: i32| {
        let len = (bx - ax).abs().max((by - ay).abs());
        let steps = (len / EDGE_STEP).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            points.push((ax as f64 + (bx - ax) as f64 * t, ay as f64 + (by - ay) as f64 * t));
        }
    };
    push_edge(b.x1, b.y1, b.x2, b.y1);
    push_edge(b.x2, b.y1, b.x2, b.y2);
    push_edge(b.x2, b.y2, b.x1, b.y2);
    push_edge(b.x1, b.y2, b.x1, b.y1);
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) =
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (qx, qy) in points {
        let (px, py) = invert(field, qx, qy);
        let (px, py) = (snap(px), snap(py));
        lo_x = lo_x.min(px);
        lo_y = lo_y.min(py);
        hi_x = hi_x.max(px);
        hi_y = hi_y.max(py);
    }
    BoundingBox::from_corners(
        lo_x.floor() as i32,
        lo_y.floor() as i32,
        hi_x.ceil() as i32,
        hi_y.ceil() as i32,
    )
    .clamp_to(w, h)
}

pub fn warp(image: &RgbImage, boxes: &[BoundingBox], field: &DisplacementField) -> Result<(RgbImage, Vec<BoundingBox>)> {
    warp_with(Exec::default(), image, boxes, field)
}

/// Resamples `image` through `field` and carries `boxes` along with the content.
pub fn warp_with(
    exec: Exec,
    image: &RgbImage,
    boxes: &[BoundingBox],
    field: &DisplacementField,
) -> Result<(RgbImage, Vec<BoundingBox>)> {
    let (w, h) = image.dimensions();
    if field.dimensions() != (w, h) {
        return Err(Error::Parameter(format!(
            "displacement field is {:?} but image is {w}x{h}",
            field.dimensions()
        )));
    }
    let mut out = RgbImage::new(w, h);
    if w > 0 && h > 0 {
        par::for_each_chunk_mut(exec, &mut out, w as usize * 3, |y, row| {
            for x in 0..w {
                let (dx, dy) = field.at(x, y as u32);
                let c = sample_bilinear(image, x as f64 + dx as f64, y as f64 + dy as f64);
                for ch in 0..3 {
                    row[x as usize * 3 + ch] = c[ch].round().clamp(0.0, 255.0) as u8;
                }
            }
        });
    }
    let boxes = par::map(exec, boxes, |b| remap_box(field, b));
    Ok((out, boxes))
}
