//! Hybrid local-block binarization.
//!
//! The image is tiled into non-overlapping 8x8 blocks. Each block's
//! threshold is the mean of the block means over the 5x5 block neighborhood
//! around it, clipped at the borders. A pixel binarizes light when its gray
//! is at or above its block's threshold.

use super::ScanError;
use image::GrayImage;

/// Block edge in pixels.
pub const BLOCK: usize = 8;

/// Binarized image; `true` means light (gray at or above the threshold).
#[derive(Debug, Clone)]
pub struct BinaryImage {
    w: usize,
    h: usize,
    light: Vec<bool>,
}

impl BinaryImage {
    pub fn width(&self) -> usize {
        self.w
    }

    pub fn height(&self) -> usize {
        self.h
    }

    #[inline]
    pub fn light(&self, x: usize, y: usize) -> bool {
        self.light[y * self.w + x]
    }

    #[inline]
    pub fn dark(&self, x: usize, y: usize) -> bool {
        !self.light(x, y)
    }

    /// Dark test tolerating out-of-range coordinates (treated as light).
    #[inline]
    pub fn dark_at(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.w as i64 || y >= self.h as i64 {
            return false;
        }
        self.dark(x as usize, y as usize)
    }

    pub fn from_bits(w: usize, h: usize, light: Vec<bool>) -> BinaryImage {
        assert_eq!(light.len(), w * h);
        BinaryImage { w, h, light }
    }

    pub fn bits(&self) -> &[bool] {
        &self.light
    }
}

/// Binarize with per-block local thresholds. Block sums come from a summed
/// area table; the 5x5 neighborhood of block means is accumulated row-major
/// so the result is reproducible bit-for-bit by a plain double loop.
pub fn hybrid_binarize(gray: &GrayImage) -> Result<BinaryImage, ScanError> {
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    if w < 5 * BLOCK || h < 5 * BLOCK {
        return Err(ScanError::ImageTooSmall {
            width: gray.width(),
            height: gray.height(),
        });
    }
    let nbx = w.div_ceil(BLOCK);
    let nby = h.div_ceil(BLOCK);

    let mut integral = vec![0u64; (w + 1) * (h + 1)];
    let raw = gray.as_raw();
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += raw[y * w + x] as u64;
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }

    let mut means = vec![0f64; nbx * nby];
    for by in 0..nby {
        for bx in 0..nbx {
            let x0 = bx * BLOCK;
            let y0 = by * BLOCK;
            let x1 = (x0 + BLOCK).min(w);
            let y1 = (y0 + BLOCK).min(h);
            let sum = integral[y1 * (w + 1) + x1] + integral[y0 * (w + 1) + x0]
                - integral[y0 * (w + 1) + x1]
                - integral[y1 * (w + 1) + x0];
            means[by * nbx + bx] = sum as f64 / ((x1 - x0) * (y1 - y0)) as f64;
        }
    }

    let mut thresholds = vec![0f64; nbx * nby];
    for by in 0..nby {
        for bx in 0..nbx {
            let mut acc = 0f64;
            let mut count = 0usize;
            for ny in by.saturating_sub(2)..=(by + 2).min(nby - 1) {
                for nx in bx.saturating_sub(2)..=(bx + 2).min(nbx - 1) {
                    acc += means[ny * nbx + nx];
                    count += 1;
                }
            }
            thresholds[by * nbx + bx] = acc / count as f64;
        }
    }

    let mut light = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let t = thresholds[(y / BLOCK) * nbx + x / BLOCK];
            light[y * w + x] = raw[y * w + x] as f64 >= t;
        }
    }
    Ok(BinaryImage { w, h, light })
}
