//! Scanning-probability model.
//!
//! A module is read correctly when the sampled pixel's binarization matches
//! the module's bit. Two error sources are modeled: the realized threshold
//! deviating from the expected local mean (Gaussian with sigma2), and the
//! sampling point deviating from the module center (Gaussian with sigma3).
//! The probability that pixel x survives thresholding is a truncated-Gaussian
//! mass ratio, precomputed for every (gray, threshold) pair; the module
//! success probability is the sampling-weighted sum over its pixels.

use crate::plane::Plane;
use image::GrayImage;
use statrs::function::erf::erf;

/// Standard normal CDF.
#[inline]
fn phi(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

pub const DEFAULT_SIGMA2: f64 = 255.0 / 3.0;

pub fn default_sigma3(a: usize) -> f64 {
    a as f64 / 6.0
}

/// Normalized Gaussian over an a-by-a pixel grid, centered at (a/2, a/2).
pub fn gaussian_grid(a: usize, sigma: f64) -> Vec<f64> {
    if a == 1 {
        return vec![1.0];
    }
    assert!(sigma > 0.0, "gaussian grid needs a positive sigma");
    let center = a as f64 / 2.0;
    let mut g = Vec::with_capacity(a * a);
    for j in 0..a {
        for i in 0..a {
            let dx = (i as f64 + 0.5) - center;
            let dy = (j as f64 + 0.5) - center;
            g.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = g.iter().sum();
    for v in &mut g {
        *v /= sum;
    }
    g
}

/// Per-pixel sampling probabilities of one module (sum exactly normalized
/// to 1), defaulting to sigma3 = a/6.
pub fn sampling_prob_grid(a: usize, sigma3: f64) -> Vec<f64> {
    gaussian_grid(a, sigma3)
}

/// P of reading the intended bit for the module: sum of sampling probability
/// times per-pixel thresholding probability.
pub fn module_success_prob(p_s: &[f64], p_t: &[f64]) -> f64 {
    assert_eq!(p_s.len(), p_t.len());
    p_s.iter().zip(p_t.iter()).map(|(s, t)| s * t).sum()
}

/// Thresholding-probability model over integer grays and thresholds.
///
/// `prob(y, t, light)` is the probability that a pixel of gray y turns into
/// the wanted bit when the realized threshold is Gaussian around t: the mass
/// of the truncated Gaussian on [0, y] (light) or [y, 255] (dark), divided
/// by the total mass on [0, 255]. The two bit variants sum to 1.
pub struct ThresholdModel {
    sigma2: f64,
    /// table[t * 256 + y] = probability for a light module; dark is 1 minus
    table: Vec<f64>,
}

impl ThresholdModel {
    pub fn new(sigma2: f64) -> ThresholdModel {
        assert!(sigma2 > 0.0, "sigma2 must be positive");
        let mut table = vec![0f64; 256 * 256];
        for t in 0..256usize {
            let tf = t as f64;
            let lo = phi((0.0 - tf) / sigma2);
            let hi = phi((255.0 - tf) / sigma2);
            let denom = hi - lo;
            for y in 0..256usize {
                table[t * 256 + y] = (phi((y as f64 - tf) / sigma2) - lo) / denom;
            }
        }
        ThresholdModel { sigma2, table }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Table lookup on integer gray and threshold.
    #[inline]
    pub fn prob(&self, y: u8, t_o: u8, light: bool) -> f64 {
        let p = self.table[t_o as usize * 256 + y as usize];
        if light {
            p
        } else {
            1.0 - p
        }
    }

    /// Same model on real-valued inputs, bypassing the table.
    pub fn prob_exact(&self, y: f64, t_o: f64, light: bool) -> f64 {
        let lo = phi((0.0 - t_o) / self.sigma2);
        let hi = phi((255.0 - t_o) / self.sigma2);
        let p = (phi((y - t_o) / self.sigma2) - lo) / (hi - lo);
        if light {
            p
        } else {
            1.0 - p
        }
    }

    /// Gray minimizing |prob(Y) - target|; ties resolve toward `original`.
    pub fn invert_argmin(&self, target: f64, t_o: u8, light: bool, original: u8) -> u8 {
        let row = &self.table[t_o as usize * 256..(t_o as usize + 1) * 256];
        let value = |y: usize| if light { row[y] } else { 1.0 - row[y] };
        // the light row ascends and the dark row descends in y; find the
        // crossing, then compare its two neighbors
        let split = if light {
            row.partition_point(|&p| p < target)
        } else {
            row.partition_point(|&p| 1.0 - p >= target)
        };
        let mut best: Option<(f64, u8)> = None;
        for cand in [split.saturating_sub(1), split.min(255)] {
            let d = (value(cand) - target).abs();
            let better = match best {
                None => true,
                Some((bd, by)) => {
                    d < bd
                        || (d == bd
                            && (cand as i32 - original as i32).abs()
                                < (by as i32 - original as i32).abs())
                }
            };
            if better {
                best = Some((d, cand as u8));
            }
        }
        best.unwrap().1
    }

    /// Smallest luminance move from `original` whose probability reaches
    /// `target`. Feasible for any target <= 1 because the extreme gray of
    /// either bit carries the full mass; never moves when `original`
    /// already qualifies.
    pub fn invert_at_least(&self, target: f64, t_o: u8, light: bool, original: u8) -> u8 {
        let target = target.min(1.0);
        if self.prob(original, t_o, light) >= target {
            return original;
        }
        let row = &self.table[t_o as usize * 256..(t_o as usize + 1) * 256];
        if light {
            // first y with row[y] >= target
            row.partition_point(|&p| p < target).min(255) as u8
        } else {
            // last y with 1 - row[y] >= target
            (row.partition_point(|&p| 1.0 - p >= target).max(1) - 1) as u8
        }
    }
}

/// Inclusive window bounds [lo, hi] of a `window`-wide span centered at
/// `center`, clipped to [0, n).
#[inline]
pub(crate) fn window_bounds(center: usize, window: usize, n: usize) -> (usize, usize) {
    let lo = center.saturating_sub((window - 1) / 2);
    let hi = (center + window / 2).min(n - 1);
    (lo, hi)
}

/// Mean gray over the window-by-window square centered at one pixel,
/// clipped at the borders. This is the expected scanner threshold.
pub fn expected_threshold(y: &GrayImage, px: usize, py: usize, window: usize) -> f64 {
    let (w, h) = (y.width() as usize, y.height() as usize);
    let (x0, x1) = window_bounds(px, window, w);
    let (y0, y1) = window_bounds(py, window, h);
    let mut sum = 0u64;
    for yy in y0..=y1 {
        for xx in x0..=x1 {
            sum += y.get_pixel(xx as u32, yy as u32).0[0] as u64;
        }
    }
    sum as f64 / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64
}

/// Expected-threshold map for every pixel, via a summed-area table.
pub fn expected_threshold_map(y: &GrayImage, window: usize) -> Plane {
    let (w, h) = (y.width() as usize, y.height() as usize);
    // integral[r][c] = sum over rows < r, cols < c
    let mut integral = vec![0u64; (w + 1) * (h + 1)];
    for r in 0..h {
        let mut row_sum = 0u64;
        for c in 0..w {
            row_sum += y.get_pixel(c as u32, r as u32).0[0] as u64;
            integral[(r + 1) * (w + 1) + c + 1] = integral[r * (w + 1) + c + 1] + row_sum;
        }
    }
    let sum_rect = |x0: usize, y0: usize, x1: usize, y1: usize| {
        integral[(y1 + 1) * (w + 1) + x1 + 1] + integral[y0 * (w + 1) + x0]
            - integral[y0 * (w + 1) + x1 + 1]
            - integral[(y1 + 1) * (w + 1) + x0]
    };
    let mut out = Plane::filled(w, h, 0.0);
    for py in 0..h {
        let (y0, y1) = window_bounds(py, window, h);
        for px in 0..w {
            let (x0, x1) = window_bounds(px, window, w);
            let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
            out.set(px, py, sum_rect(x0, y0, x1, y1) as f64 / n);
        }
    }
    out
}
