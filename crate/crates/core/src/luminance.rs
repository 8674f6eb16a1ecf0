//! Grayscale aesthetic stage.
//!
//! Two cooperating loops produce the grayscale code Q^g from the source
//! grays I^g and the adjusted module matrix Q^b:
//!
//! * `modify_module` raises per-pixel thresholding probabilities inside one
//!   module until the module's read-success probability reaches its floor
//!   eta_k, spending a per-pixel weight budget (varpi), then converts the
//!   probabilities back to gray values.
//! * `estimate_thresholds` alternates that modification with re-estimating
//!   the local scanner thresholds the modified image itself induces, until
//!   the threshold map stabilizes.
//!
//! A final `enforce_success_floor` pass re-checks every module against the
//! thresholds of the finished image and patches stragglers, so the success
//! probabilities hold for the image as emitted, not just for the bookkeeping
//! of the last iteration.

use crate::imageprep::canny_edges;
use crate::probmodel::{
    expected_threshold_map, gaussian_grid, sampling_prob_grid, ThresholdModel,
};
use crate::qr_symbol::{ModuleMatrix, ModuleRole};
use image::GrayImage;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

/// Quiet border width in modules around the working image.
pub const QUIET_MODULES: usize = 4;
/// Hard cap on threshold-estimation iterations.
pub const DEFAULT_ITERATION_CAP: usize = 50;
/// Hard cap on floor-enforcement passes.
pub const DEFAULT_FLOOR_CAP: usize = 40;

/// Initial distribution of the per-pixel adjustment weight varpi.
#[derive(Debug, Clone)]
pub enum VarpiPreset {
    /// Per-module Gaussian equal to the sampling distribution (default).
    Gaussian,
    /// Uniform weight everywhere.
    Constant,
    /// Uniform random in [0,1) per pixel, from the job seed.
    Random,
    /// Weights from another image, resized to the working size (0..255
    /// mapped to 0..1).
    ImageMask(GrayImage),
    /// Sharper per-module Gaussian: corrections concentrate into a center
    /// dot and leave module rims to the image.
    CenterHeavy,
    /// Per-module Gaussian plus 1.0 on detected edges of the source image:
    /// corrections also trace image contours.
    GaussianEdge,
}

/// Per-module success floor from the priority map: high-priority modules
/// (strong edges/saliency) get the low end so they stay closer to the
/// image, low-priority modules get the high end.
pub fn eta_from_priority(w: &[f32]) -> Vec<f64> {
    w.iter().map(|&v| 0.75 + 0.15 * (1.0 - v as f64)).collect()
}

pub fn eta_scalar(l: usize, value: f64) -> Vec<f64> {
    vec![value.clamp(0.0, 1.0); l * l]
}

/// Raise the thresholding probabilities of one module until the weighted
/// success probability reaches `eta`, then write back gray values.
///
/// `y`, `t_o`, `p_s`, and `varpi` are row-major a-by-a module tiles; `varpi`
/// is consumed (entries are zeroed as pixels saturate). Returns whether the
/// floor was met; `false` means the weight budget ran out first, which can
/// only happen when `varpi` starts with zeros.
pub fn modify_module(
    y: &mut [u8],
    t_o: &[u8],
    p_s: &[f64],
    varpi: &mut [f64],
    eta: f64,
    light: bool,
    model: &ThresholdModel,
) -> bool {
    let n = y.len();
    assert!(t_o.len() == n && p_s.len() == n && varpi.len() == n);
    let mut pt: Vec<f64> = (0..n).map(|i| model.prob(y[i], t_o[i], light)).collect();
    let mut met = false;
    // each round either meets the floor or zeroes at least one weight, so
    // n rounds suffice up to float residue; the slack covers that residue
    for _ in 0..(4 * n + 16) {
        let p: f64 = pt.iter().zip(p_s).map(|(t, s)| t * s).sum();
        if p >= eta {
            met = true;
            break;
        }
        let budget: f64 = p_s.iter().zip(varpi.iter()).map(|(s, w)| s * w).sum();
        if budget == 0.0 {
            break;
        }
        let step = (eta.max(p) - p) / budget;
        for i in 0..n {
            pt[i] += step * varpi[i];
            if pt[i] >= 1.0 {
                pt[i] = 1.0;
                varpi[i] = 0.0;
            }
        }
    }
    for i in 0..n {
        y[i] = model.invert_at_least(pt[i], t_o[i], light, y[i]);
    }
    met
}

/// One threshold-estimation pass log entry.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// fraction of data-region pixels that moved in this pass
    pub changed_fraction: f64,
    /// mean module success probability after this pass, data modules only
    pub mean_success: f64,
}

#[derive(Debug)]
pub struct GrayOutcome {
    /// final grayscale code, symbol region only (a*l square)
    pub gray: GrayImage,
    /// number of modification passes run
    pub iterations: usize,
    /// whether the threshold map stabilized before the cap
    pub converged: bool,
    pub stats: Vec<IterationStats>,
    /// per module: success floor met by the last pass (function modules true)
    pub met: Vec<bool>,
}

pub struct GrayscaleJob<'a> {
    /// source grays, an a*l square
    pub image: &'a GrayImage,
    /// adjusted module matrix with roles
    pub matrix: &'a ModuleMatrix,
    /// pixels per module
    pub module_size: usize,
    /// per-module success floors, length l*l
    pub eta: Vec<f64>,
    pub varpi: VarpiPreset,
    pub sigma2: f64,
    pub sigma3: f64,
    pub seed: u64,
    pub iteration_cap: usize,
}

fn copy_tile(src: &[u8], s: usize, a: usize, mr: usize, mc: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(a * a);
    for r in 0..a {
        let base = (mr * a + r) * s + mc * a;
        out.extend_from_slice(&src[base..base + a]);
    }
    out
}

fn copy_tile_f64(src: &[f64], s: usize, a: usize, mr: usize, mc: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(a * a);
    for r in 0..a {
        let base = (mr * a + r) * s + mc * a;
        out.extend_from_slice(&src[base..base + a]);
    }
    out
}

fn write_tile(dst: &mut [u8], s: usize, a: usize, mr: usize, mc: usize, tile: &[u8]) {
    for r in 0..a {
        let base = (mr * a + r) * s + mc * a;
        dst[base..base + a].copy_from_slice(&tile[r * a..(r + 1) * a]);
    }
}

/// Global varpi field over the symbol region.
fn build_varpi_field(
    preset: &VarpiPreset,
    l: usize,
    a: usize,
    igray: &GrayImage,
    sigma3: f64,
    seed: u64,
) -> Vec<f64> {
    let s = l * a;
    let tile_field = |tile: &[f64]| {
        let mut field = vec![0.0; s * s];
        for y in 0..s {
            for x in 0..s {
                field[y * s + x] = tile[(y % a) * a + (x % a)];
            }
        }
        field
    };
    match preset {
        VarpiPreset::Gaussian => tile_field(&sampling_prob_grid(a, sigma3)),
        VarpiPreset::Constant => vec![1.0; s * s],
        VarpiPreset::Random => {
            let mut rng = StdRng::seed_from_u64(seed);
            (0..s * s).map(|_| rng.gen::<f64>()).collect()
        }
        VarpiPreset::ImageMask(mask) => {
            let resized = image::imageops::resize(
                mask,
                s as u32,
                s as u32,
                image::imageops::FilterType::CatmullRom,
            );
            resized.pixels().map(|p| p.0[0] as f64 / 255.0).collect()
        }
        VarpiPreset::CenterHeavy => tile_field(&gaussian_grid(a, (sigma3 * 0.5).max(1e-6))),
        VarpiPreset::GaussianEdge => {
            let mut field = tile_field(&sampling_prob_grid(a, sigma3));
            for (w, &edge) in field.iter_mut().zip(canny_edges(igray).iter()) {
                if edge {
                    *w += 1.0;
                }
            }
            field
        }
    }
}

/// Expected scanner thresholds for every symbol pixel: window means of the
/// symbol embedded in a white quiet border 4 modules wide, window 3a.
pub fn working_threshold_map(symbol: &[u8], l: usize, a: usize) -> Vec<f64> {
    let s = l * a;
    assert_eq!(symbol.len(), s * s);
    let cs = (l + 2 * QUIET_MODULES) * a;
    let off = QUIET_MODULES * a;
    let mut canvas = GrayImage::from_pixel(cs as u32, cs as u32, image::Luma([255]));
    for y in 0..s {
        for x in 0..s {
            canvas.put_pixel((off + x) as u32, (off + y) as u32, image::Luma([symbol[y * s + x]]));
        }
    }
    let map = expected_threshold_map(&canvas, 3 * a);
    let mut out = vec![0.0f64; s * s];
    for y in 0..s {
        for x in 0..s {
            out[y * s + x] = map.get(off + x, off + y);
        }
    }
    out
}

/// `working_threshold_map` rounded to bytes, the lookup form.
pub fn working_thresholds(symbol: &[u8], l: usize, a: usize) -> Vec<u8> {
    working_threshold_map(symbol, l, a).iter().map(|v| v.round() as u8).collect()
}

/// Success probability of every module of `symbol` under its own induced
/// thresholds. Function modules report 1.0.
pub fn module_success_map(
    symbol: &[u8],
    matrix: &ModuleMatrix,
    a: usize,
    p_s: &[f64],
    model: &ThresholdModel,
) -> Vec<f64> {
    let l = matrix.side();
    let s = l * a;
    let t_o = working_thresholds(symbol, l, a);
    let mut out = vec![1.0; l * l];
    for mr in 0..l {
        for mc in 0..l {
            if matrix.role(mr, mc) == ModuleRole::Function {
                continue;
            }
            let light = !matrix.is_dark(mr, mc);
            let yt = copy_tile(symbol, s, a, mr, mc);
            let tt = copy_tile(&t_o, s, a, mr, mc);
            let mut p = 0.0;
            for i in 0..a * a {
                p += p_s[i] * model.prob(yt[i], tt[i], light);
            }
            out[mr * l + mc] = p;
        }
    }
    out
}

/// Alternate per-module luminance modification with re-estimation of the
/// thresholds the modified image induces, until the threshold map moves by
/// at most one gray level anywhere (or the cap is hit).
pub fn estimate_thresholds(job: &GrayscaleJob) -> GrayOutcome {
    let l = job.matrix.side();
    let a = job.module_size;
    let s = l * a;
    assert_eq!(job.image.width() as usize, s, "image must be a*l wide");
    assert_eq!(job.image.height() as usize, s, "image must be a*l tall");
    assert_eq!(job.eta.len(), l * l);

    let model = ThresholdModel::new(job.sigma2);
    let p_s = sampling_prob_grid(a, job.sigma3);
    let varpi_field = build_varpi_field(&job.varpi, l, a, job.image, job.sigma3, job.seed);

    let ig: Vec<u8> = job.image.as_raw().clone();
    // module matrix rendered to pixels: light = 255, dark = 0
    let mut qb_px = vec![0u8; s * s];
    for y in 0..s {
        for x in 0..s {
            qb_px[y * s + x] = if job.matrix.is_dark(y / a, x / a) { 0 } else { 255 };
        }
    }
    // Q^g <- 0.5 I^g + 0.5 Q^b, rounded half-up
    let mut qg: Vec<u8> =
        ig.iter().zip(qb_px.iter()).map(|(&i, &q)| ((i as u16 + q as u16 + 1) / 2) as u8).collect();

    let data_pixels: usize = (0..l * l)
        .filter(|k| job.matrix.role(k / l, k % l) != ModuleRole::Function)
        .count()
        * a
        * a;
    let data_modules = data_pixels / (a * a);

    let mut l_old: Vec<f64> = Vec::new();
    let mut stats = Vec::new();
    let mut met = vec![true; l * l];
    let mut n = 0usize;
    let mut converged = false;

    loop {
        let l_now = working_threshold_map(&qg, l, a);
        let t_o: Vec<u8> = l_now.iter().map(|v| v.round() as u8).collect();

        if n != 0 {
            let max_diff = l_now
                .iter()
                .zip(l_old.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if max_diff <= 1.0 {
                converged = true;
                break;
            }
            if n >= job.iteration_cap {
                break;
            }
        }
        n += 1;

        let results: Vec<(Vec<u8>, bool, f64)> = (0..l * l)
            .into_par_iter()
            .map(|k| {
                let (mr, mc) = (k / l, k % l);
                if job.matrix.role(mr, mc) == ModuleRole::Function {
                    let v = if job.matrix.is_dark(mr, mc) { 0u8 } else { 255u8 };
                    return (vec![v; a * a], true, 1.0);
                }
                let light = !job.matrix.is_dark(mr, mc);
                let mut yt = copy_tile(&ig, s, a, mr, mc);
                let tt = copy_tile(&t_o, s, a, mr, mc);
                let mut wt = copy_tile_f64(&varpi_field, s, a, mr, mc);
                let ok = modify_module(&mut yt, &tt, &p_s, &mut wt, job.eta[k], light, &model);
                let mut p = 0.0;
                for i in 0..a * a {
                    p += p_s[i] * model.prob(yt[i], tt[i], light);
                }
                (yt, ok, p)
            })
            .collect();

        let mut y_new = vec![0u8; s * s];
        let mut success_sum = 0.0;
        for (k, (tile, ok, p)) in results.iter().enumerate() {
            write_tile(&mut y_new, s, a, k / l, k % l, tile);
            met[k] = *ok;
            if job.matrix.role(k / l, k % l) != ModuleRole::Function {
                success_sum += p;
            }
        }
        let changed = (0..l * l)
            .filter(|k| job.matrix.role(k / l, k % l) != ModuleRole::Function)
            .map(|k| {
                let (mr, mc) = (k / l, k % l);
                (0..a * a)
                    .filter(|&i| {
                        let (r, c) = (i / a, i % a);
                        let p = (mr * a + r) * s + mc * a + c;
                        y_new[p] != qg[p]
                    })
                    .count()
            })
            .sum::<usize>();
        stats.push(IterationStats {
            iteration: n,
            changed_fraction: changed as f64 / data_pixels.max(1) as f64,
            mean_success: success_sum / data_modules.max(1) as f64,
        });

        qg = y_new;
        l_old = l_now;
    }

    GrayOutcome {
        gray: GrayImage::from_raw(s as u32, s as u32, qg).unwrap(),
        iterations: n,
        converged,
        stats,
        met,
    }
}

#[derive(Debug)]
pub struct FloorOutcome {
    pub passes: usize,
    /// modules whose weight budget ran out below the floor
    pub exhausted: Vec<usize>,
    /// modules still below the floor after the pass cap, budget unspent
    pub unresolved: Vec<usize>,
}

/// Re-check every module against the thresholds induced by the finished
/// image and patch the ones that slipped below their floor; repeat until a
/// full pass changes nothing. Pixel moves only go toward the module's
/// extreme, so the loop terminates.
pub fn enforce_success_floor(
    gray: &mut GrayImage,
    job: &GrayscaleJob,
    max_passes: usize,
) -> FloorOutcome {
    let l = job.matrix.side();
    let a = job.module_size;
    let s = l * a;
    let model = ThresholdModel::new(job.sigma2);
    let p_s = sampling_prob_grid(a, job.sigma3);
    let varpi_field = build_varpi_field(&job.varpi, l, a, job.image, job.sigma3, job.seed);

    let mut qg: Vec<u8> = gray.as_raw().clone();
    let mut exhausted = vec![false; l * l];
    let mut passes = 0;
    for _ in 0..max_passes {
        passes += 1;
        let t_o = working_thresholds(&qg, l, a);
        let mut changed_any = false;
        for k in 0..l * l {
            let (mr, mc) = (k / l, k % l);
            if job.matrix.role(mr, mc) == ModuleRole::Function {
                continue;
            }
            let light = !job.matrix.is_dark(mr, mc);
            let mut yt = copy_tile(&qg, s, a, mr, mc);
            let tt = copy_tile(&t_o, s, a, mr, mc);
            let p: f64 = (0..a * a).map(|i| p_s[i] * model.prob(yt[i], tt[i], light)).sum();
            if p >= job.eta[k] {
                continue;
            }
            let mut wt = copy_tile_f64(&varpi_field, s, a, mr, mc);
            let ok = modify_module(&mut yt, &tt, &p_s, &mut wt, job.eta[k], light, &model);
            exhausted[k] = !ok;
            let before = copy_tile(&qg, s, a, mr, mc);
            if yt != before {
                changed_any = true;
                write_tile(&mut qg, s, a, mr, mc, &yt);
            }
        }
        if !changed_any {
            break;
        }
    }

    // final audit under the final thresholds
    let final_success = module_success_map(&qg, job.matrix, a, &p_s, &model);
    let mut unresolved = Vec::new();
    let mut exhausted_list = Vec::new();
    for k in 0..l * l {
        if job.matrix.role(k / l, k % l) == ModuleRole::Function {
            continue;
        }
        if final_success[k] < job.eta[k] {
            if exhausted[k] {
                exhausted_list.push(k);
            } else {
                unresolved.push(k);
            }
        }
    }

    *gray = GrayImage::from_raw(s as u32, s as u32, qg).unwrap();
    FloorOutcome {
        passes,
        exhausted: exhausted_list,
        unresolved,
    }
}
