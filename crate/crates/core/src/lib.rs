//! Scanning-robust aesthetic QR codes.
//!
//! The crate encodes standard QR symbols, blends them into a host image in
//! three stages (codeword adjustment, grayscale luminance optimization,
//! linear colorization), and ships the scanner simulator plus perturbation
//! benchmarks used to validate robustness.

pub mod colorize;
pub mod galois;
pub mod basis_adjust;
pub mod bench;
pub mod imageprep;
pub mod luminance;
pub mod plane;
pub mod pipeline;
pub mod probmodel;
pub mod qr_symbol;
pub mod scanner;
pub mod testimg;
