//! Input-image preparation: grayscale conversion, module-based Gaussian
//! binarization, and the priority map that steers which modules the
//! adjustment stages spend their budget on.

mod canny;
mod saliency;

pub use canny::canny_edges;
pub use saliency::saliency_map;

use image::{GrayImage, RgbImage};
use std::fmt;

pub const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrepError {
    /// image side is not an exact multiple of the module count
    DimensionMismatch { image: u32, modules: usize },
}

impl fmt::Display for PrepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrepError::DimensionMismatch { image, modules } => write!(
                f,
                "image side {} is not a multiple of {} modules",
                image, modules
            ),
        }
    }
}

impl std::error::Error for PrepError {}

/// Y = 0.299 R + 0.587 G + 0.114 B, rounded to the nearest integer.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let mut out = GrayImage::new(img.width(), img.height());
    for (src, dst) in img.pixels().zip(out.pixels_mut()) {
        dst.0[0] = luma_of(src);
    }
    out
}

#[inline]
pub fn luma_of(p: &image::Rgb<u8>) -> u8 {
    let y = LUMA_WEIGHTS[0] * p.0[0] as f32
        + LUMA_WEIGHTS[1] * p.0[1] as f32
        + LUMA_WEIGHTS[2] * p.0[2] as f32;
    y.round().clamp(0.0, 255.0) as u8
}

/// Resample to the code grid: a = pixels per module chosen so the output is
/// near 512 wide, side = a * l exactly. Returns the image and a.
pub fn resample_square(img: &RgbImage, l: usize) -> (RgbImage, usize) {
    resample_to(img, l, 512)
}

/// As [`resample_square`], but aiming at an arbitrary working resolution.
pub fn resample_to(img: &RgbImage, l: usize, target: usize) -> (RgbImage, usize) {
    let a = ((target as f64 / l as f64).round() as usize).max(1);
    let n = (a * l) as u32;
    let resized = image::imageops::resize(img, n, n, image::imageops::FilterType::CatmullRom);
    (resized, a)
}

/// Gaussian pixel weights of one a-by-a module: centered at (a/2, a/2) with
/// sigma (a-1)/5, normalized to sum 1.
pub fn module_weights(a: usize) -> Vec<f64> {
    if a == 1 {
        return vec![1.0];
    }
    crate::probmodel::gaussian_grid(a, (a as f64 - 1.0) / 5.0)
}

/// Per-module binarization: true = light (the weighted mean reaches the
/// midpoint 255/2), Gaussian-weighted toward the module center.
pub fn module_binarize(gray: &GrayImage, l: usize) -> Result<Vec<bool>, PrepError> {
    let n = gray.width();
    if gray.height() != n || n as usize % l != 0 {
        return Err(PrepError::DimensionMismatch {
            image: n,
            modules: l,
        });
    }
    let a = n as usize / l;
    let w = module_weights(a);
    let mut out = Vec::with_capacity(l * l);
    for mr in 0..l {
        for mc in 0..l {
            let mut acc = 0f64;
            for j in 0..a {
                for i in 0..a {
                    let px = gray.get_pixel((mc * a + i) as u32, (mr * a + j) as u32).0[0];
                    acc += w[j * a + i] * px as f64;
                }
            }
            out.push(acc >= 255.0 / 2.0);
        }
    }
    Ok(out)
}

/// Center-distance heuristic, 1 at the image center falling to 0 at the
/// corners, clamped to [0,1].
pub fn heu(x: f32, y: f32, l: usize) -> f32 {
    let half = l as f32 / 2.0;
    let d2 = (x - half).powi(2) + (y - half).powi(2);
    (1.0 - d2 / ((l * l) as f32 / 2.0)).max(0.0)
}

/// Module priority map and its three ingredients, each l-by-l in [0,1].
#[derive(Debug, Clone)]
pub struct PriorityMap {
    pub side: usize,
    pub w: Vec<f32>,
    pub edge: Vec<f32>,
    pub sal: Vec<f32>,
    pub heu: Vec<f32>,
}

const LAMBDA: [f32; 3] = [0.67, 0.23, 0.10];

/// Mean-pool a per-pixel map to l-by-l modules.
fn pool_to_modules(values: &[f32], n: usize, l: usize) -> Vec<f32> {
    let a = n / l;
    let mut out = Vec::with_capacity(l * l);
    for mr in 0..l {
        for mc in 0..l {
            let mut acc = 0f32;
            for j in 0..a {
                for i in 0..a {
                    acc += values[(mr * a + j) * n + mc * a + i];
                }
            }
            out.push(acc / (a * a) as f32);
        }
    }
    out
}

fn max_normalize(v: &mut [f32]) {
    let peak = v.iter().fold(0f32, |m, &x| m.max(x));
    if peak > 0.0 {
        for x in v {
            *x /= peak;
        }
    }
}

/// W = 0.67 Edge + 0.23 Sal + 0.10 Heu over the module grid.
pub fn priority_map(img: &RgbImage, l: usize) -> Result<PriorityMap, PrepError> {
    let n = img.width();
    if img.height() != n || n as usize % l != 0 {
        return Err(PrepError::DimensionMismatch {
            image: n,
            modules: l,
        });
    }
    let n = n as usize;

    let gray = to_grayscale(img);
    let edge_px: Vec<f32> = canny_edges(&gray)
        .into_iter()
        .map(|e| if e { 1.0 } else { 0.0 })
        .collect();
    let mut edge = pool_to_modules(&edge_px, n, l);
    max_normalize(&mut edge);

    let sal_px = saliency_map(img);
    let mut sal = pool_to_modules(&sal_px, n, l);
    max_normalize(&mut sal);

    let mut heu_grid = Vec::with_capacity(l * l);
    for r in 0..l {
        for c in 0..l {
            heu_grid.push(heu(c as f32, r as f32, l));
        }
    }

    let w: Vec<f32> = (0..l * l)
        .map(|i| LAMBDA[0] * edge[i] + LAMBDA[1] * sal[i] + LAMBDA[2] * heu_grid[i])
        .collect();
    Ok(PriorityMap {
        side: l,
        w,
        edge,
        sal,
        heu: heu_grid,
    })
}
