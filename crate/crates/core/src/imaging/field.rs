//! Dense displacement fields and their binary file format.
//!
//! File layout, little-endian: magic `DFLD`, `u32` width, `u32` height, then
//! `width * height` `f32` dx values row-major, then as many dy values.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

pub const MAGIC: &[u8; 4] = b"DFLD";

/// Source-lookup offsets: output pixel `p` is read from input `p + (dx, dy)(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    width: u32,
    height: u32,
    dx: Vec<f32>,
    dy: Vec<f32>,
}

impl DisplacementField {
    pub fn new(width: u32, height: u32, dx: Vec<f32>, dy: Vec<f32>) -> Result<Self> {
        let n = width as usize * height as usize;
        if dx.len() != n || dy.len() != n {
            return Err(Error::Parameter(format!(
                "field of {width}x{height} needs {n} offsets per axis, got {} and {}",
                dx.len(),
                dy.len()
            )));
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("displacement offsets must be finite".into()));
        }
        Ok(DisplacementField { width, height, dx, dy })
    }

    pub fn zero(width: u32, height: u32) -> Self {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: u32, height: u32, dx: f32, dy: f32) -> Self {
        let n = width as usize * height as usize;
        DisplacementField {
            width,
            height,
            dx: vec![dx; n],
            dy: vec![dy; n],
        }
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn at(&self, x: u32, y: u32) -> (f32, f32) {
        let i = y as usize * self.width as usize + x as usize;
        (self.dx[i], self.dy[i])
    }

    pub fn max_abs(&self) -> (f32, f32) {
        let m = |v: &[f32]| v.iter().fold(0.0f32, |a, b| a.max(b.abs()));
        (m(&self.dx), m(&self.dy))
    }

    /// Bilinear sample at a continuous position, clamped to the grid.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        if self.width == 0 || self.height == 0 {
            return (0.0, 0.0);
        }
        let (w, h) = (self.width as usize, self.height as usize);
        let x = x.clamp(0.0, (w - 1) as f64);
        let y = y.clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let lerp = |v: &[f32]| {
            let a = v[y0 * w + x0] as f64 * (1.0 - fx) + v[y0 * w + x1] as f64 * fx;
            let b = v[y1 * w + x0] as f64 * (1.0 - fx) + v[y1 * w + x1] as f64 * fx;
            a * (1.0 - fy) + b * fy
        };
        (lerp(&self.dx), lerp(&self.dy))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.dx.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for v in self.dx.iter().chain(&self.dy) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Parse {
            path: "displacement field".into(),
            message: m.to_string(),
        };
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing DFLD header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (width, height) = (word(4), word(8));
        let n = width as usize * height as usize;
        if bytes.len() != 12 + 8 * n {
            return Err(bad(&format!(
                "expected {} bytes for {width}x{height}, found {}",
                12 + 8 * n,
                bytes.len()
            )));
        }
        let floats: Vec<f32> = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (dx, dy) = floats.split_at(n);
        Self::new(width, height, dx.to_vec(), dy.to_vec())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Solves the 8x8 system for the homography sending `src[i]` to `dst[i]`.
fn homography(src: &[(f64, f64); 4], dst: &[(f64, f64); 4]) -> Option<[f64; 9]> {
    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let (x, y) = src[i];
        let (u, v) = dst[i];
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
    }
    for col in 0..8 {
        let pivot = (col..8).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..8 {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col];
                for (v, p) in a[r].iter_mut().zip(pivot_row).skip(col) {
                    *v -= f * p;
                }
            }
        }
    }
    let mut h = [0.0; 9];
    for i in 0..8 {
        h[i] = a[i][8] / a[i][i];
    }
    h[8] = 1.0;
    Some(h)
}

/// Sinusoidal warp plus a mild random projective component.
///
/// `dx = amplitude * sin(2πy / wavelength)`, `dy = amplitude * sin(2πx / wavelength)`;
/// the projective part moves each page corner by at most `perspective_strength`
/// pixels per axis, with corner offsets drawn from `seed`.
pub fn synthesize_displacement_field(
    width: u32,
    height: u32,
    amplitude: f64,
    wavelength: f64,
    perspective_strength: f64,
    seed: u64,
) -> Result<DisplacementField> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::Parameter(format!("wavelength must be positive, got {wavelength}")));
    }
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::Parameter(format!("amplitude must be non-negative, got {amplitude}")));
    }
    if !(perspective_strength.is_finite() && perspective_strength >= 0.0) {
        return Err(Error::Parameter(format!(
            "perspective strength must be non-negative, got {perspective_strength}"
        )));
    }
    let (w, h) = (width as f64, height as f64);
    let projective = if perspective_strength > 0.0 && width > 1 && height > 1 {
        let mut rng = seeded(seed);
        let src = [(0.0, 0.0), (w - 1.0, 0.0), (w - 1.0, h - 1.0), (0.0, h - 1.0)];
        let mut dst = src;
        for p in &mut dst {
            p.0 += rng.random_range(-perspective_strength..=perspective_strength);
            p.1 += rng.random_range(-perspective_strength..=perspective_strength);
        }
        homography(&src, &dst)
    } else {
        None
    };

    let n = width as usize * height as usize;
    let (mut dx, mut dy) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64, y as f64);
            let mut ox = amplitude * (2.0 * PI * yf / wavelength).sin();
            let mut oy = amplitude * (2.0 * PI * xf / wavelength).sin();
            if let Some(m) = &projective {
                let d = m[6] * xf + m[7] * yf + m[8];
                ox += (m[0] * xf + m[1] * yf + m[2]) / d - xf;
                oy += (m[3] * xf + m[4] * yf + m[5]) / d - yf;
            }
            dx.push(ox as f32);
            dy.push(oy as f32);
        }
    }
    DisplacementField::new(width, height, dx, dy)
}
