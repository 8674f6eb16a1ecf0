//! Color aesthetic stage: pull each pixel of the original image along the
//! straight line toward its module's extreme (white for light modules,
//! black for dark) exactly far enough that the weighted luminance of the
//! output matches the grayscale code. One scalar per pixel, no color-space
//! detours, hue preserved by construction.

use crate::qr_symbol::ModuleMatrix;
use image::{GrayImage, RgbImage};

/// Luminance weights as used for the grayscale conversion.
const W: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug)]
pub struct ColorOutcome {
    pub image: RgbImage,
    /// pixels whose target luminance lay outside the reachable segment
    /// (interpolation factor clamped)
    pub clamped: usize,
    /// pixels already at the extreme luminance (degenerate segment)
    pub singular: usize,
    pub total: usize,
}

/// Per-pixel linear interpolation `Q^c = I + theta (C_m - I)` with
/// `theta = (Q^g - w·I) / (w·C_m - w·I)` clamped to [0,1]. All arithmetic
/// in floating point; each channel is rounded once at the end.
pub fn colorize(original: &RgbImage, gray_code: &GrayImage, matrix: &ModuleMatrix, a: usize) -> ColorOutcome {
    let l = matrix.side();
    let s = l * a;
    assert_eq!(original.width() as usize, s);
    assert_eq!(original.height() as usize, s);
    assert_eq!(gray_code.width() as usize, s);
    assert_eq!(gray_code.height() as usize, s);

    let mut out = RgbImage::new(s as u32, s as u32);
    let mut clamped = 0usize;
    let mut singular = 0usize;
    for y in 0..s {
        for x in 0..s {
            let p = original.get_pixel(x as u32, y as u32).0;
            let light = !matrix.is_dark(y / a, x / a);
            let extreme = if light { 255.0 } else { 0.0 };
            let target = gray_code.get_pixel(x as u32, y as u32).0[0];
            let wi = W[0] * p[0] as f64 + W[1] * p[1] as f64 + W[2] * p[2] as f64;
            let denom = extreme - wi;
            let rgb = if denom.abs() < 1e-9 {
                // the pixel already sits at the extreme luminance; the
                // segment is a point, so only the two endpoints exist
                singular += 1;
                let demands_extreme = target as f64 == extreme;
                if demands_extreme {
                    [extreme as u8; 3]
                } else {
                    p
                }
            } else {
                let raw = (target as f64 - wi) / denom;
                if !(0.0..=1.0).contains(&raw) {
                    clamped += 1;
                }
                let theta = raw.clamp(0.0, 1.0);
                let mut q = [0u8; 3];
                for c in 0..3 {
                    let v = p[c] as f64 + theta * (extreme - p[c] as f64);
                    q[c] = v.round().clamp(0.0, 255.0) as u8;
                }
                q
            };
            out.put_pixel(x as u32, y as u32, image::Rgb(rgb));
        }
    }
    ColorOutcome {
        image: out,
        clamped,
        singular,
        total: s * s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageprep::luma_of;
    use crate::qr_symbol::ModuleMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn checker_matrix(side: usize) -> ModuleMatrix {
        let mut m = ModuleMatrix::new_light(side);
        for r in 0..side {
            for c in 0..side {
                if (r + c) % 2 == 0 {
                    m.set_dark(r, c, true);
                }
            }
        }
        m
    }

    #[test]
    fn zero_deficit_keeps_the_pixel() {
        let m = checker_matrix(21);
        let a = 2;
        let s = 42;
        let img = RgbImage::from_pixel(s, s, image::Rgb([100, 100, 100]));
        // gray target equals the weighted luminance of every pixel
        let qg = GrayImage::from_pixel(s, s, image::Luma([100]));
        let out = colorize(&img, &qg, &m, a);
        for p in out.image.pixels() {
            assert_eq!(p.0, [100, 100, 100]);
        }
    }

    #[test]
    fn full_pull_reaches_the_extreme() {
        let m = checker_matrix(21);
        let a = 2;
        let s = 42;
        let img = RgbImage::from_pixel(s, s, image::Rgb([37, 180, 91]));
        let mut qg = GrayImage::new(s, s);
        for y in 0..s {
            for x in 0..s {
                let dark = m.is_dark(y as usize / a, x as usize / a);
                qg.put_pixel(x, y, image::Luma([if dark { 0 } else { 255 }]));
            }
        }
        let out = colorize(&img, &qg, &m, a);
        for y in 0..s {
            for x in 0..s {
                let dark = m.is_dark(y as usize / a, x as usize / a);
                let want = if dark { [0, 0, 0] } else { [255, 255, 255] };
                assert_eq!(out.image.get_pixel(x, y).0, want);
            }
        }
        assert_eq!(out.clamped, 0);
    }

    #[test]
    fn reachable_targets_round_trip_within_one_gray() {
        let m = checker_matrix(21);
        let a = 4;
        let s = 84u32;
        let mut rng = StdRng::seed_from_u64(31);
        let mut img = RgbImage::new(s, s);
        for p in img.pixels_mut() {
            p.0 = [rng.gen(), rng.gen(), rng.gen()];
        }
        // pick gray targets on the reachable segment of every pixel
        let mut qg = GrayImage::new(s, s);
        for y in 0..s {
            for x in 0..s {
                let p = img.get_pixel(x, y).0;
                let wi = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                let light = !m.is_dark(y as usize / a, x as usize / a);
                let extreme = if light { 255.0 } else { 0.0 };
                let t: f64 = rng.gen();
                let v = wi + t * (extreme - wi);
                // round toward the extreme so the target stays reachable
                let v = if light { v.ceil().min(255.0) } else { v.floor().max(0.0) };
                qg.put_pixel(x, y, image::Luma([v as u8]));
            }
        }
        let out = colorize(&img, &qg, &m, a);
        assert_eq!(out.clamped, 0, "targets were chosen reachable");
        let mut off = 0;
        for y in 0..s {
            for x in 0..s {
                let got = luma_of(out.image.get_pixel(x, y)) as i32;
                let want = qg.get_pixel(x, y).0[0] as i32;
                if (got - want).abs() > 1 {
                    off += 1;
                }
            }
        }
        assert_eq!(off, 0, "{} pixels drifted more than one gray level", off);
    }

    #[test]
    fn output_stays_between_pixel_and_extreme() {
        let m = checker_matrix(21);
        let a = 3;
        let s = 63u32;
        let mut rng = StdRng::seed_from_u64(32);
        let mut img = RgbImage::new(s, s);
        for p in img.pixels_mut() {
            p.0 = [rng.gen(), rng.gen(), rng.gen()];
        }
        let mut qg = GrayImage::new(s, s);
        for p in qg.pixels_mut() {
            p.0 = [rng.gen()];
        }
        let out = colorize(&img, &qg, &m, a);
        for y in 0..s {
            for x in 0..s {
                let src = img.get_pixel(x, y).0;
                let got = out.image.get_pixel(x, y).0;
                let dark = m.is_dark(y as usize / a, x as usize / a);
                for c in 0..3 {
                    let (lo, hi) = if dark { (0, src[c]) } else { (src[c], 255) };
                    assert!(got[c] >= lo && got[c] <= hi, "channel left the segment");
                }
            }
        }
    }

    #[test]
    fn unreachable_targets_are_counted_and_clamped() {
        // dark modules asked for white: theta < 0 for every pixel
        let mut m = ModuleMatrix::new_light(21);
        for r in 0..21 {
            for c in 0..21 {
                m.set_dark(r, c, true);
            }
        }
        let a = 2;
        let s = 42;
        let img = RgbImage::from_pixel(s, s, image::Rgb([120, 90, 200]));
        let qg = GrayImage::from_pixel(s, s, image::Luma([255]));
        let out = colorize(&img, &qg, &m, a);
        assert_eq!(out.clamped, out.total);
        for p in out.image.pixels() {
            assert_eq!(p.0, [120, 90, 200], "clamp at zero keeps the original");
        }
    }

    #[test]
    fn extreme_pixels_take_the_singular_path() {
        let m = ModuleMatrix::new_light(21);
        let a = 2;
        let s = 42;
        let img = RgbImage::from_pixel(s, s, image::Rgb([255, 255, 255]));
        let qg = GrayImage::from_pixel(s, s, image::Luma([70]));
        let out = colorize(&img, &qg, &m, a);
        assert_eq!(out.singular, out.total);
        for p in out.image.pixels() {
            assert_eq!(p.0, [255, 255, 255], "a point segment cannot move");
        }
    }
}
