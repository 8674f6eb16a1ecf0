//! Perturbation benchmark: applies controlled distortions — out-of-plane
//! and in-plane rotation, brightness shifts, rescaling, block occlusion —
//! to rendered codes and measures decode success rates, plus the success
//! floor sweep that drives robustness against visual fidelity.
//!
//! Every sweep point is an independent pure job; results are reduced in a
//! fixed order, so a seeded run emits byte-identical CSV every time.

use crate::pipeline::{beautify, BeautifyConfig, EtaMode, PipelineError};
use crate::qr_symbol::{encode_symbol, EcLevel, ModuleMatrix, Payload, QrSpec};
use crate::scanner::{scan_rgb, Homography, Outcome};
use crate::testimg;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Camera distance for out-of-plane rotation, in code widths.
pub const CAMERA_DISTANCE_WIDTHS: f64 = 4.0;
/// Occlusion block edge, in modules.
pub const COVERAGE_BLOCK_MODULES: usize = 2;
/// Seeded repetitions averaged per occlusion count.
pub const COVERAGE_REPS: usize = 30;
/// Maximum occlusion block count in the default grid.
pub const COVERAGE_MAX_BLOCKS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    RotateX,
    RotateY,
    RotateZ,
    Brightness,
    Scale,
    Coverage,
}

impl PerturbationKind {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationKind::RotateX => "rotate_x",
            PerturbationKind::RotateY => "rotate_y",
            PerturbationKind::RotateZ => "rotate_z",
            PerturbationKind::Brightness => "brightness",
            PerturbationKind::Scale => "scale",
            PerturbationKind::Coverage => "coverage",
        }
    }

    /// The standard parameter grid of this sweep.
    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            PerturbationKind::RotateX | PerturbationKind::RotateY => {
                (-4..=4).map(|k| (k * 15) as f64).collect()
            }
            PerturbationKind::RotateZ => (0..=12).map(|k| (k * 30) as f64).collect(),
            PerturbationKind::Brightness => (-17..=17).map(|k| (k * 15) as f64).collect(),
            PerturbationKind::Scale => (1..=60).map(|k| k as f64 * 0.05).collect(),
            PerturbationKind::Coverage => (0..=COVERAGE_MAX_BLOCKS).map(|n| n as f64).collect(),
        }
    }

    /// Stable textual form of a parameter value for CSV rows.
    pub fn format_param(&self, v: f64) -> String {
        match self {
            PerturbationKind::Scale => format!("{:.2}", v),
            _ => format!("{}", v.round() as i64),
        }
    }

    fn reps(&self) -> usize {
        match self {
            PerturbationKind::Coverage => COVERAGE_REPS,
            _ => 1,
        }
    }
}

/// One sweep definition: which distortion, which parameter values, how the
/// occlusion randomness is seeded, and the module size in presented pixels
/// (occlusion blocks are sized in modules).
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub module_px: usize,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind) -> PerturbationSpec {
        PerturbationSpec {
            kind,
            grid: kind.default_grid(),
            seed: 0,
            module_px: crate::pipeline::PRESENTATION_MODULE_PX,
        }
    }
}

/// Apply one distortion. `stream` seeds the occlusion randomness and is
/// ignored by the deterministic kinds; the input is never modified.
pub fn perturb(img: &RgbImage, spec: &PerturbationSpec, point: f64, stream: u64) -> RgbImage {
    match spec.kind {
        PerturbationKind::Brightness => brightness(img, point.round() as i32),
        PerturbationKind::Scale => scale(img, point),
        PerturbationKind::RotateX => rotate(img, Axis::X, point),
        PerturbationKind::RotateY => rotate(img, Axis::Y, point),
        PerturbationKind::RotateZ => rotate(img, Axis::Z, point),
        PerturbationKind::Coverage => {
            let blocks = coverage_blocks(
                img.width(),
                img.height(),
                (COVERAGE_BLOCK_MODULES * spec.module_px) as u32,
                COVERAGE_MAX_BLOCKS,
                spec.seed,
                stream,
            );
            coverage(img, &blocks[..(point.round() as usize).min(blocks.len())])
        }
    }
}

/// Per-pixel add-and-clamp.
fn brightness(img: &RgbImage, delta: i32) -> RgbImage {
    let mut out = img.clone();
    for p in out.pixels_mut() {
        for c in p.0.iter_mut() {
            *c = (*c as i32 + delta).clamp(0, 255) as u8;
        }
    }
    out
}

/// Bicubic rescale by `ratio`.
fn scale(img: &RgbImage, ratio: f64) -> RgbImage {
    let w = ((img.width() as f64 * ratio).round() as u32).max(1);
    let h = ((img.height() as f64 * ratio).round() as u32).max(1);
    image::imageops::resize(img, w, h, image::imageops::FilterType::CatmullRom)
}

enum Axis {
    X,
    Y,
    Z,
}

/// Perspective view of the image plane rotated about the given axis, seen
/// by a camera at a fixed distance aimed at the center; bilinear sampling
/// onto a white canvas sized to the projected footprint.
fn rotate(img: &RgbImage, axis: Axis, degrees: f64) -> RgbImage {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (sin, cos) = degrees.to_radians().sin_cos();
    let d = CAMERA_DISTANCE_WIDTHS * w;
    let project = |x: f64, y: f64| -> (f64, f64) {
        let (cx, cy) = (x - w / 2.0, y - h / 2.0);
        let (px, py, pz) = match axis {
            Axis::X => (cx, cy * cos, -cy * sin),
            Axis::Y => (cx * cos, cy, -cx * sin),
            Axis::Z => (cx * cos - cy * sin, cx * sin + cy * cos, 0.0),
        };
        let s = d / (d - pz);
        (px * s, py * s)
    };
    let src = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
    let proj: Vec<(f64, f64)> = src.iter().map(|&(x, y)| project(x, y)).collect();
    let margin = 8.0;
    let min_x = proj.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - margin;
    let min_y = proj.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) - margin;
    let max_x = proj.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + margin;
    let max_y = proj.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + margin;
    if !(min_x.is_finite() && min_y.is_finite() && max_x > min_x && max_y > min_y) {
        return RgbImage::from_pixel(img.width(), img.height(), Rgb([255, 255, 255]));
    }
    let (cw, ch) = ((max_x - min_x).ceil() as u32, (max_y - min_y).ceil() as u32);
    let dst = [
        (proj[0].0 - min_x, proj[0].1 - min_y),
        (proj[1].0 - min_x, proj[1].1 - min_y),
        (proj[2].0 - min_x, proj[2].1 - min_y),
        (proj[3].0 - min_x, proj[3].1 - min_y),
    ];
    let back = Homography::quad_to_quad(dst, src);
    RgbImage::from_fn(cw, ch, |u, v| {
        let (x, y) = back.map(u as f64 + 0.5, v as f64 + 0.5);
        Rgb(bilinear_white(img, x - 0.5, y - 0.5))
    })
}

/// Bilinear sample with white beyond the edges.
fn bilinear_white(img: &RgbImage, x: f64, y: f64) -> [u8; 3] {
    if !(x.is_finite() && y.is_finite()) {
        return [255, 255, 255];
    }
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = (x - x0, y - y0);
    let mut acc = [0.0f64; 3];
    for (dy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
        for (dx, wx) in [(0i64, 1.0 - fx), (1, fx)] {
            let (ix, iy) = (x0 as i64 + dx, y0 as i64 + dy);
            let p = if ix >= 0 && iy >= 0 && (ix as u32) < img.width() && (iy as u32) < img.height()
            {
                img.get_pixel(ix as u32, iy as u32).0
            } else {
                [255, 255, 255]
            };
            let w = wx * wy;
            for k in 0..3 {
                acc[k] += w * p[k] as f64;
            }
        }
    }
    [
        acc[0].round().clamp(0.0, 255.0) as u8,
        acc[1].round().clamp(0.0, 255.0) as u8,
        acc[2].round().clamp(0.0, 255.0) as u8,
    ]
}

/// The full set of occlusion blocks for one (seed, stream) pair. A sweep
/// over N uses the first N entries, so growing N only adds damage.
fn coverage_blocks(
    w: u32,
    h: u32,
    block_px: u32,
    count: usize,
    seed: u64,
    stream: u64,
) -> Vec<(u32, u32, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let b = block_px.min(w).min(h);
    (0..count)
        .map(|_| {
            (
                rng.gen_range(0..=w - b),
                rng.gen_range(0..=h - b),
                rng.gen::<bool>(),
            )
        })
        .collect()
}

/// Paint solid black-or-white square blocks over a copy of the image.
fn coverage(img: &RgbImage, blocks: &[(u32, u32, bool)]) -> RgbImage {
    let mut out = img.clone();
    let b = (COVERAGE_BLOCK_MODULES * crate::pipeline::PRESENTATION_MODULE_PX) as u32;
    for &(bx, by, dark) in blocks {
        let v = if dark { 0 } else { 255 };
        let b = b.min(out.width()).min(out.height());
        for y in by..(by + b).min(out.height()) {
            for x in bx..(bx + b).min(out.width()) {
                out.put_pixel(x, y, Rgb([v; 3]));
            }
        }
    }
    out
}

/// One image to sweep: a presentation-scale render plus its ground truth.
#[derive(Debug, Clone)]
pub struct BenchTarget {
    pub id: String,
    pub image: RgbImage,
    pub truth: ModuleMatrix,
}

/// A plain rendered code as a sweep target.
pub fn pristine_target(
    payload: &[u8],
    version: u8,
    ec: EcLevel,
    mask: u8,
    module_px: usize,
) -> Result<BenchTarget, crate::qr_symbol::QrError> {
    let spec = QrSpec::new(version, ec, mask)?;
    let matrix = encode_symbol(&Payload::new(payload), &spec)?;
    let gray = matrix.render_gray(module_px);
    let image = RgbImage::from_fn(gray.width(), gray.height(), |x, y| {
        let v = gray.get_pixel(x, y)[0];
        Rgb([v; 3])
    });
    Ok(BenchTarget {
        id: format!("v{}{}m{}", version, ec, mask),
        image,
        truth: matrix,
    })
}

/// Generate sweep targets from the whole bundled corpus at one success
/// floor; runs the image jobs in parallel.
pub fn corpus_targets(
    payload: &[u8],
    eta: f64,
    seed: u64,
) -> Result<Vec<BenchTarget>, PipelineError> {
    let corpus = testimg::corpus();
    corpus
        .par_iter()
        .map(|(id, img)| {
            let mut c = BeautifyConfig::new(payload);
            c.eta = EtaMode::Scalar(eta);
            c.seed = seed;
            let r = beautify(img, &c)?;
            Ok(BenchTarget {
                id: (*id).to_string(),
                image: r.presentation(),
                truth: r.matrix,
            })
        })
        .collect()
}

/// One measurement row, exactly as it appears in the CSV.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub kind: &'static str,
    pub parameter: String,
    pub image_id: String,
    pub outcome: Outcome,
    pub corrections: Option<usize>,
}

/// Aggregated success rate at one parameter value.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub parameter: f64,
    pub success_rate: f64,
    pub measurements: usize,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
}

/// Scan every (target, parameter, repetition) combination and aggregate
/// success per parameter. Jobs run on the thread pool; the reduce order is
/// fixed, so output is deterministic for a fixed seed.
pub fn run_sweep(targets: &[BenchTarget], spec: &PerturbationSpec) -> BenchResult {
    let reps = spec.kind.reps();
    let mut jobs = Vec::new();
    for pi in 0..spec.grid.len() {
        for ti in 0..targets.len() {
            for rep in 0..reps {
                jobs.push((pi, ti, rep));
            }
        }
    }
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(pi, ti, rep)| {
            let target = &targets[ti];
            let point = spec.grid[pi];
            let stream = (ti as u64) << 32 | rep as u64;
            let distorted = perturb(&target.image, spec, point, stream);
            let report = scan_rgb(&distorted, Some(&target.truth));
            SweepRow {
                kind: spec.kind.name(),
                parameter: spec.kind.format_param(point),
                image_id: target.id.clone(),
                outcome: report.outcome,
                corrections: report.corrections,
            }
        })
        .collect();

    let per_point = targets.len() * reps;
    let points = spec
        .grid
        .iter()
        .enumerate()
        .map(|(pi, &point)| {
            let slice = &rows[pi * per_point..(pi + 1) * per_point];
            let ok = slice.iter().filter(|r| r.outcome == Outcome::Decoded).count();
            SweepPoint {
                parameter: point,
                success_rate: ok as f64 / per_point.max(1) as f64,
                measurements: per_point,
            }
        })
        .collect();
    BenchResult { rows, points }
}

/// Serialize rows in the fixed `kind,parameter,image_id,outcome,corrections`
/// schema; corrections is empty when the scan never reached decoding.
pub fn csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kind,parameter,image_id,outcome,corrections\n");
    for r in rows {
        out.push_str(r.kind);
        out.push(',');
        out.push_str(&r.parameter);
        out.push(',');
        out.push_str(&r.image_id);
        out.push(',');
        out.push_str(r.outcome.as_str());
        out.push(',');
        if let Some(c) = r.corrections {
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

/// The widest contiguous grid interval around the identity value where
/// every measurement succeeded; None when the identity point itself fails.
pub fn survivable_interval(points: &[SweepPoint], identity: f64) -> Option<(f64, f64)> {
    let id_idx = points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (a.parameter - identity)
                .abs()
                .partial_cmp(&(b.parameter - identity).abs())
                .unwrap()
        })?
        .0;
    if points[id_idx].success_rate < 1.0 {
        return None;
    }
    let mut lo = id_idx;
    while lo > 0 && points[lo - 1].success_rate >= 1.0 {
        lo -= 1;
    }
    let mut hi = id_idx;
    while hi + 1 < points.len() && points[hi + 1].success_rate >= 1.0 {
        hi += 1;
    }
    Some((points[lo].parameter, points[hi].parameter))
}

/// The fixed mild distortions the floor sweep is measured under.
pub fn eta_fixture() -> Vec<(PerturbationKind, f64)> {
    vec![
        (PerturbationKind::Brightness, -40.0),
        (PerturbationKind::Brightness, 40.0),
        (PerturbationKind::Scale, 0.75),
        (PerturbationKind::Scale, 1.25),
        (PerturbationKind::RotateX, -30.0),
        (PerturbationKind::RotateX, 30.0),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct EtaPoint {
    pub eta: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone)]
pub struct EtaSweepResult {
    pub rows: Vec<SweepRow>,
    pub curve: Vec<EtaPoint>,
}

/// Success rate versus the uniform floor value: the full generation
/// pipeline runs per (image, floor), and each output is scanned under the
/// mild fixture. Higher floors should buy monotonically more robustness.
pub fn eta_sweep(
    images: &[(String, RgbImage)],
    payload: &[u8],
    etas: &[f64],
    seed: u64,
) -> Result<EtaSweepResult, PipelineError> {
    let fixture = eta_fixture();
    let mut jobs = Vec::new();
    for (ei, &eta) in etas.iter().enumerate() {
        for (ii, _) in images.iter().enumerate() {
            jobs.push((ei, ii, eta));
        }
    }
    let per_job: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(_, ii, eta)| {
            let (id, img) = &images[ii];
            let mut c = BeautifyConfig::new(payload);
            c.eta = EtaMode::Scalar(eta);
            c.seed = seed;
            let r = beautify(img, &c)?;
            let presented = r.presentation();
            let rows = fixture
                .iter()
                .map(|&(kind, point)| {
                    let pspec = PerturbationSpec {
                        kind,
                        grid: vec![point],
                        seed,
                        module_px: crate::pipeline::PRESENTATION_MODULE_PX,
                    };
                    let distorted = perturb(&presented, &pspec, point, ii as u64);
                    let report = scan_rgb(&distorted, Some(&r.matrix));
                    SweepRow {
                        kind: "eta",
                        parameter: format!("{:.2}", eta),
                        image_id: format!("{}:{}{}", id, kind.name(), kind.format_param(point)),
                        outcome: report.outcome,
                        corrections: report.corrections,
                    }
                })
                .collect();
            Ok(rows)
        })
        .collect::<Result<_, PipelineError>>()?;

    let rows: Vec<SweepRow> = per_job.into_iter().flatten().collect();
    let per_eta = images.len() * fixture.len();
    let curve = etas
        .iter()
        .enumerate()
        .map(|(ei, &eta)| {
            let slice = &rows[ei * per_eta..(ei + 1) * per_eta];
            let ok = slice.iter().filter(|r| r.outcome == Outcome::Decoded).count();
            EtaPoint {
                eta,
                success_rate: ok as f64 / per_eta.max(1) as f64,
            }
        })
        .collect();
    Ok(EtaSweepResult { rows, curve })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
