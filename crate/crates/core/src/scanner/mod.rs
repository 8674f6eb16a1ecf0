//! Scanner simulator: the reference scanning pipeline the robustness model
//! targets. Grayscale conversion, hybrid local-block binarization, finder
//! detection by 1:1:3:1:1 run scanning, perspective grid sampling at module
//! centers, and symbol decoding, with an optional per-module error mask
//! against a known ground-truth matrix.

mod binarize;
mod finder;
mod sample;
pub(crate) use sample::Homography;

pub use binarize::{hybrid_binarize, BinaryImage, BLOCK};
pub use finder::{detect_finders, FinderTriple};
pub use sample::{sample_grid, SampledGrid};

use crate::imageprep::to_grayscale;
use crate::qr_symbol::{decode_matrix, ModuleMatrix};
use image::{GrayImage, RgbImage};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanError {
    /// fewer than 5 blocks per axis: the local thresholds are undefined
    ImageTooSmall { width: u32, height: u32 },
    /// fewer than three consistent finder patterns
    DetectFailed,
    /// grid spacing does not correspond to a symbol dimension
    VersionEstimateFailed,
}

impl fmt::Display for ScanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanError::ImageTooSmall { width, height } => {
                write!(f, "image {}x{} is below the 40x40 binarizer minimum", width, height)
            }
            ScanError::DetectFailed => write!(f, "no consistent finder pattern triple"),
            ScanError::VersionEstimateFailed => {
                write!(f, "finder spacing fits no supported symbol dimension")
            }
        }
    }
}

impl std::error::Error for ScanError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Decoded,
    DetectFailed,
    DecodeFailed,
}

impl Outcome {
    /// Stable lowercase name, matching the serialized form.
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Decoded => "decoded",
            Outcome::DetectFailed => "detect_failed",
            Outcome::DecodeFailed => "decode_failed",
        }
    }
}

/// Result of one scan. Optional fields are present when the pipeline got
/// far enough to fill them; `error_rows` needs a ground-truth matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload_hex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrections: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<usize>,
    /// sampled bits as rows of '1' (dark) and '0' (light)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled_rows: Option<Vec<String>>,
    /// 'x' where the sample disagrees with ground truth, '.' where it agrees
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rows: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub module_errors: Option<usize>,
    #[serde(skip)]
    pub payload_bytes: Option<Vec<u8>>,
    #[serde(skip)]
    pub error_mask: Option<Vec<bool>>,
}

impl ScanReport {
    pub fn is_decoded(&self) -> bool {
        self.outcome == Outcome::Decoded
    }

    fn failed(outcome: Outcome, reason: String) -> ScanReport {
        ScanReport {
            outcome,
            reason: Some(reason),
            payload: None,
            payload_hex: None,
            version: None,
            ec: None,
            mask: None,
            corrections: None,
            side: None,
            sampled_rows: None,
            error_rows: None,
            module_errors: None,
            payload_bytes: None,
            error_mask: None,
        }
    }
}

/// Full scan of an RGB image.
pub fn scan_rgb(img: &RgbImage, truth: Option<&ModuleMatrix>) -> ScanReport {
    scan_gray(&to_grayscale(img), truth)
}

/// Full scan of a grayscale image: binarize, find finders, sample, decode.
/// Never panics; every failure becomes a report.
pub fn scan_gray(gray: &GrayImage, truth: Option<&ModuleMatrix>) -> ScanReport {
    let bin = match hybrid_binarize(gray) {
        Ok(b) => b,
        Err(e) => return ScanReport::failed(Outcome::DetectFailed, e.to_string()),
    };
    let triple = match detect_finders(&bin) {
        Ok(t) => t,
        Err(e) => return ScanReport::failed(Outcome::DetectFailed, e.to_string()),
    };
    let grid = match sample_grid(&bin, &triple) {
        Ok(g) => g,
        Err(e) => return ScanReport::failed(Outcome::DecodeFailed, e.to_string()),
    };
    let side = grid.side;
    let matrix = ModuleMatrix::from_bits(side, grid.dark.clone());
    let sampled_rows: Vec<String> = (0..side)
        .map(|r| (0..side).map(|c| if grid.dark[r * side + c] { '1' } else { '0' }).collect())
        .collect();
    let (error_mask, error_rows, module_errors) = match truth {
        Some(t) if t.side() == side => {
            let mask: Vec<bool> =
                (0..side * side).map(|i| grid.dark[i] != t.is_dark(i / side, i % side)).collect();
            let rows = (0..side)
                .map(|r| (0..side).map(|c| if mask[r * side + c] { 'x' } else { '.' }).collect())
                .collect();
            let n = mask.iter().filter(|&&e| e).count();
            (Some(mask), Some(rows), Some(n))
        }
        _ => (None, None, None),
    };
    match decode_matrix(&matrix) {
        Ok(rep) => ScanReport {
            outcome: Outcome::Decoded,
            reason: None,
            payload: Some(String::from_utf8_lossy(&rep.payload.bytes).into_owned()),
            payload_hex: Some(hex(&rep.payload.bytes)),
            version: Some(rep.version),
            ec: Some(rep.ec.to_string()),
            mask: Some(rep.mask),
            corrections: Some(rep.corrections),
            side: Some(side),
            sampled_rows: Some(sampled_rows),
            error_rows,
            module_errors,
            payload_bytes: Some(rep.payload.bytes),
            error_mask,
        },
        Err(e) => ScanReport {
            side: Some(side),
            sampled_rows: Some(sampled_rows),
            error_rows,
            module_errors,
            error_mask,
            ..ScanReport::failed(Outcome::DecodeFailed, e.to_string())
        },
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Render an error mask as an image: green modules agreed with the truth,
/// red ones did not.
pub fn error_overlay(mask: &[bool], side: usize, scale: usize) -> RgbImage {
    assert_eq!(mask.len(), side * side);
    let s = (side * scale) as u32;
    let mut img = RgbImage::new(s, s);
    for y in 0..s {
        for x in 0..s {
            let wrong = mask[(y as usize / scale) * side + x as usize / scale];
            let c = if wrong { [200, 32, 32] } else { [40, 168, 72] };
            img.put_pixel(x, y, image::Rgb(c));
        }
    }
    img
}
