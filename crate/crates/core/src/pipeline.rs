//! End-to-end generation: prepare the image, steer the codeword freedom
//! toward it, optimize per-pixel luminance under the module success floors,
//! and recolor along each pixel's original-to-extreme segment.
//!
//! `beautify` runs the three stages in order and returns all intermediate
//! products plus diagnostics; nothing here mutates its inputs.

use crate::basis_adjust::{self, AdjustError};
use crate::colorize::colorize;
use crate::imageprep::{self, PrepError};
use crate::luminance::{
    self, enforce_success_floor, estimate_thresholds, GrayscaleJob, IterationStats, VarpiPreset,
};
use crate::probmodel::{self, ThresholdModel};
use crate::qr_symbol::{encode_symbol, EcLevel, ModuleMatrix, ModuleRole, Payload, QrError, QrSpec};
use crate::scanner::{scan_rgb, ScanReport};
use image::{GrayImage, Rgb, RgbImage};
use std::fmt;

/// How the per-module success floors are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaMode {
    /// one uniform floor for every data module
    Scalar(f64),
    /// floors derived from the module priority map: busy regions get laxer
    /// floors, flat regions stricter ones
    PriorityMap,
}

/// Full configuration of one generation run.
#[derive(Debug, Clone)]
pub struct BeautifyConfig {
    pub payload: Vec<u8>,
    /// None picks the smallest version that fits the payload
    pub version: Option<u8>,
    pub ec: EcLevel,
    pub mask: u8,
    pub eta: EtaMode,
    pub varpi: VarpiPreset,
    pub sigma2: f64,
    /// None derives the sampling spread from the module size
    pub sigma3: Option<f64>,
    /// working resolution the input is resampled toward
    pub size: usize,
    pub seed: u64,
    pub iteration_cap: usize,
    /// scan the result with the built-in reader and fail if it cannot decode
    pub verify: bool,
}

impl BeautifyConfig {
    pub fn new(payload: impl Into<Vec<u8>>) -> BeautifyConfig {
        BeautifyConfig {
            payload: payload.into(),
            version: None,
            ec: EcLevel::M,
            mask: 0,
            eta: EtaMode::Scalar(0.9),
            varpi: VarpiPreset::Gaussian,
            sigma2: probmodel::DEFAULT_SIGMA2,
            sigma3: None,
            size: 512,
            seed: 0,
            iteration_cap: luminance::DEFAULT_ITERATION_CAP,
            verify: false,
        }
    }
}

#[derive(Debug)]
pub enum PipelineError {
    /// payload does not fit the requested (or any supported) version
    Capacity {
        needed: usize,
        limit: usize,
        version: u8,
        ec: EcLevel,
    },
    EtaOutOfRange(f64),
    Symbol(QrError),
    Prep(PrepError),
    Adjust(AdjustError),
    /// the verify flag was set and the built-in scanner could not recover
    /// the payload; the failing report is attached
    Verification(Box<ScanReport>),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Capacity {
                needed,
                limit,
                version,
                ec,
            } => write!(
                f,
                "payload of {} bytes exceeds the {} byte capacity of version {} at level {}",
                needed, limit, version, ec
            ),
            PipelineError::EtaOutOfRange(v) => {
                write!(f, "success floor {} outside [0, 1]", v)
            }
            PipelineError::Symbol(e) => write!(f, "symbol construction: {}", e),
            PipelineError::Prep(e) => write!(f, "image preparation: {}", e),
            PipelineError::Adjust(e) => write!(f, "codeword adjustment: {}", e),
            PipelineError::Verification(r) => write!(
                f,
                "verification scan failed: {}",
                r.reason.as_deref().unwrap_or("no reason recorded")
            ),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<QrError> for PipelineError {
    fn from(e: QrError) -> Self {
        PipelineError::Symbol(e)
    }
}

impl From<PrepError> for PipelineError {
    fn from(e: PrepError) -> Self {
        PipelineError::Prep(e)
    }
}

impl From<AdjustError> for PipelineError {
    fn from(e: AdjustError) -> Self {
        PipelineError::Adjust(e)
    }
}

/// Everything measured along the way, serializable as the JSON sidecar.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Diagnostics {
    pub version: u8,
    pub ec: String,
    pub mask: u8,
    pub side: usize,
    pub module_size: usize,
    pub payload_bytes: usize,
    /// freely assignable modules after elimination
    pub controllable: usize,
    pub operators_applied: usize,
    pub modules_matching_target_before: usize,
    pub modules_matching_target_after: usize,
    pub iterations: usize,
    pub converged: bool,
    pub iteration_log: Vec<IterationStats>,
    pub floor_passes: usize,
    pub exhausted_modules: usize,
    pub unresolved_modules: usize,
    pub clamped_color_pixels: usize,
    pub singular_color_modules: usize,
    /// per-module success probability of the final grays, row-major;
    /// function modules carry 1.0
    pub success_map: Vec<f64>,
    pub eta_map: Vec<f64>,
    pub mean_success: f64,
    pub min_success: f64,
}

/// All three stage outputs at the working resolution (no quiet zone).
#[derive(Debug)]
pub struct BeautifyResult {
    pub spec: QrSpec,
    /// stage 1: the adjusted module matrix
    pub matrix: ModuleMatrix,
    /// stage 2: optimized grays, side*module_size square
    pub gray: GrayImage,
    /// stage 3: recolored output, same dimensions
    pub color: RgbImage,
    pub module_size: usize,
    pub diagnostics: Diagnostics,
}

/// Module size of the standardized scan presentation.
///
/// The block binarizer thresholds 8x8 tiles against their 5x5-block
/// neighborhood, so any solid dark feature wider than that 40-pixel window
/// in both axes reads as light — a uniform field binarizes to all-ones by
/// the tie convention. Generation-resolution renders (20+ pixels per
/// module) put finder centers well past that limit, exactly as an
/// 8x8-block thresholder would misread a poster filling the whole frame.
/// Scans therefore run on a camera-like reduction: six pixels per module
/// keeps every symbol feature inside the binarizer's working range even
/// when the benchmark rescales by 2x.
pub const PRESENTATION_MODULE_PX: usize = 6;

impl BeautifyResult {
    /// The color output surrounded by the light border scanners expect.
    pub fn framed(&self) -> RgbImage {
        with_quiet_zone(&self.color, self.module_size)
    }

    /// The framed output reduced to the standardized scan presentation.
    pub fn presentation(&self) -> RgbImage {
        let modules = self.spec.side() + 2 * luminance::QUIET_MODULES;
        let n = (modules * PRESENTATION_MODULE_PX) as u32;
        image::imageops::resize(
            &self.framed(),
            n,
            n,
            image::imageops::FilterType::CatmullRom,
        )
    }
}

/// Surround a rendered code with the standard four-module light border.
pub fn with_quiet_zone(code: &RgbImage, module_size: usize) -> RgbImage {
    let q = (luminance::QUIET_MODULES * module_size) as u32;
    let n = code.width() + 2 * q;
    let mut out = RgbImage::from_pixel(n, n, Rgb([255, 255, 255]));
    for (x, y, p) in code.enumerate_pixels() {
        out.put_pixel(x + q, y + q, *p);
    }
    out
}

/// Per-module success probabilities as a grayscale heat map
/// (bright = certain), `scale` pixels per module.
pub fn success_heatmap(success: &[f64], side: usize, scale: usize) -> GrayImage {
    let s = scale.max(1) as u32;
    GrayImage::from_fn(side as u32 * s, side as u32 * s, |x, y| {
        let m = success[(y / s) as usize * side + (x / s) as usize];
        image::Luma([(m.clamp(0.0, 1.0) * 255.0).round() as u8])
    })
}

fn resolve_spec(config: &BeautifyConfig) -> Result<QrSpec, PipelineError> {
    let needed = config.payload.len();
    let version = match config.version {
        Some(v) => v,
        None => QrSpec::min_version(needed, config.ec).ok_or(PipelineError::Capacity {
            needed,
            limit: QrSpec::new(10, config.ec, 0)?.capacity_bytes(),
            version: 10,
            ec: config.ec,
        })?,
    };
    let spec = QrSpec::new(version, config.ec, config.mask)?;
    let limit = spec.capacity_bytes();
    if needed > limit {
        return Err(PipelineError::Capacity {
            needed,
            limit,
            version,
            ec: config.ec,
        });
    }
    Ok(spec)
}

/// Run the binary, grayscale and color stages on `image`.
pub fn beautify(image: &RgbImage, config: &BeautifyConfig) -> Result<BeautifyResult, PipelineError> {
    if let EtaMode::Scalar(v) = config.eta {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(PipelineError::EtaOutOfRange(v));
        }
    }
    let spec = resolve_spec(config)?;
    let payload = Payload::new(config.payload.clone());
    let base = encode_symbol(&payload, &spec)?;
    let l = base.side();

    // image preparation at the working resolution
    let (resized, a) = imageprep::resample_to(image, l, config.size);
    let gray_src = imageprep::to_grayscale(&resized);
    let light_target = imageprep::module_binarize(&gray_src, l)?;
    let prio = imageprep::priority_map(&resized, l)?;

    // stage 1: spend the codeword freedom on matching the module targets
    let set_a = basis_adjust::build_operator_set_a(&spec, &payload)?;
    let set_b = basis_adjust::eliminate_to_set_b(set_a, &prio.w);
    let target_dark: Vec<bool> = light_target.iter().map(|&light| !light).collect();
    let controllable = set_b.len();
    let adjust = basis_adjust::match_target(&base, &set_b, &target_dark, &prio.w);
    let matrix = adjust.matrix;

    // stage 2: luminance optimization under the success floors
    let eta = match config.eta {
        EtaMode::Scalar(v) => luminance::eta_scalar(l, v),
        EtaMode::PriorityMap => luminance::eta_from_priority(&prio.w),
    };
    let sigma3 = config.sigma3.unwrap_or_else(|| probmodel::default_sigma3(a));
    let job = GrayscaleJob {
        image: &gray_src,
        matrix: &matrix,
        module_size: a,
        eta: eta.clone(),
        varpi: config.varpi.clone(),
        sigma2: config.sigma2,
        sigma3,
        seed: config.seed,
        iteration_cap: config.iteration_cap,
    };
    let outcome = estimate_thresholds(&job);
    let mut gray = outcome.gray;
    let floor = enforce_success_floor(&mut gray, &job, luminance::DEFAULT_FLOOR_CAP);

    // stage 3: pull colors along the original-to-extreme segments
    let colored = colorize(&resized, &gray, &matrix, a);

    // audit the final grays independently of the optimizer's bookkeeping
    let model = ThresholdModel::new(config.sigma2);
    let p_s = probmodel::sampling_prob_grid(a, sigma3);
    let success_map = luminance::module_success_map(gray.as_raw(), &matrix, a, &p_s, &model);
    let data_success: Vec<f64> = (0..l * l)
        .filter(|&k| matrix.role(k / l, k % l) != ModuleRole::Function)
        .map(|k| success_map[k])
        .collect();
    let mean_success = data_success.iter().sum::<f64>() / data_success.len().max(1) as f64;
    let min_success = data_success.iter().cloned().fold(1.0f64, f64::min);

    let diagnostics = Diagnostics {
        version: spec.version,
        ec: spec.ec.to_string(),
        mask: spec.mask,
        side: l,
        module_size: a,
        payload_bytes: config.payload.len(),
        controllable,
        operators_applied: adjust.operators_applied,
        modules_matching_target_before: adjust.matched_before,
        modules_matching_target_after: adjust.matched_after,
        iterations: outcome.iterations,
        converged: outcome.converged,
        iteration_log: outcome.stats,
        floor_passes: floor.passes,
        exhausted_modules: floor.exhausted.len(),
        unresolved_modules: floor.unresolved.len(),
        clamped_color_pixels: colored.clamped,
        singular_color_modules: colored.singular,
        success_map,
        eta_map: eta,
        mean_success,
        min_success,
    };

    let result = BeautifyResult {
        spec,
        matrix,
        gray,
        color: colored.image,
        module_size: a,
        diagnostics,
    };

    if config.verify {
        let report = scan_rgb(&result.presentation(), Some(&result.matrix));
        let recovered = report.payload_bytes.as_deref() == Some(config.payload.as_slice());
        if !report.is_decoded() || !recovered {
            return Err(PipelineError::Verification(Box::new(report)));
        }
    }
    Ok(result)
}
