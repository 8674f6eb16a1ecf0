//! QR symbol construction and parsing, versions 1-10, byte mode.
//!
//! Encoding follows the standard path: bitstream with mode/count header,
//! terminator and alternating pad codewords, per-block Reed-Solomon parity,
//! codeword interleaving, zigzag placement, data mask, format and version
//! info. Decoding inverts each step and reports how many bytes the RS stage
//! repaired.

mod decode;
mod placement;
pub(crate) mod tables;

pub use decode::{decode_matrix, DecodeReport};

use crate::galois::{rs_encode, RsBlock};
use placement::Layout;
use std::fmt;

/// Error-correction level, ordered by increasing redundancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EcLevel {
    L = 0,
    M = 1,
    Q = 2,
    H = 3,
}

impl EcLevel {
    pub const ALL: [EcLevel; 4] = [EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H];

    pub fn from_str_loose(s: &str) -> Option<EcLevel> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L" => Some(EcLevel::L),
            "M" => Some(EcLevel::M),
            "Q" => Some(EcLevel::Q),
            "H" => Some(EcLevel::H),
            _ => None,
        }
    }
}

impl fmt::Display for EcLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            EcLevel::L => 'L',
            EcLevel::M => 'M',
            EcLevel::Q => 'Q',
            EcLevel::H => 'H',
        };
        write!(f, "{}", c)
    }
}

/// Version, EC level and mask index of one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrSpec {
    pub version: u8,
    pub ec: EcLevel,
    pub mask: u8,
}

impl QrSpec {
    pub fn new(version: u8, ec: EcLevel, mask: u8) -> Result<QrSpec, QrError> {
        if !(1..=10).contains(&version) {
            return Err(QrError::VersionUnsupported { version });
        }
        if mask > 7 {
            return Err(QrError::MaskOutOfRange { mask });
        }
        Ok(QrSpec { version, ec, mask })
    }

    pub fn side(&self) -> usize {
        tables::side_len(self.version)
    }

    /// Byte-mode payload capacity.
    pub fn capacity_bytes(&self) -> usize {
        let total_bits = 8 * tables::total_data_codewords(self.version, self.ec);
        (total_bits - 4 - tables::char_count_bits(self.version)) / 8
    }

    /// Error-correction geometry: parity codewords per block and the data
    /// codeword count of every block, in transmission order.
    pub fn block_structure(&self) -> (usize, Vec<usize>) {
        tables::block_structure(self.version, self.ec)
    }

    /// Smallest version that fits `len` payload bytes at `ec`.
    pub fn min_version(len: usize, ec: EcLevel) -> Option<u8> {
        (1..=10u8).find(|&v| {
            QrSpec {
                version: v,
                ec,
                mask: 0,
            }
            .capacity_bytes()
                >= len
        })
    }
}

/// Byte-mode message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub bytes: Vec<u8>,
}

impl Payload {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Payload {
        Payload {
            bytes: bytes.into(),
        }
    }
}

/// What one module stands for in the symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModuleRole {
    /// finder, separator, timing, alignment, format, version, dark module
    Function,
    /// message codeword bit (header, payload, terminator, fill-to-byte)
    Data,
    /// padding codeword bit, free to change under basis adjustment
    Controllable,
    /// Reed-Solomon parity bit
    Ecc,
    /// leftover placement bit after the final codeword
    Remainder,
    /// sampled grid with no provenance
    Unknown,
}

/// Square module grid; `dark = true` is the printed (black) state.
#[derive(Debug, Clone)]
pub struct ModuleMatrix {
    side: usize,
    dark: Vec<bool>,
    roles: Vec<ModuleRole>,
}

impl ModuleMatrix {
    pub fn new_light(side: usize) -> ModuleMatrix {
        ModuleMatrix {
            side,
            dark: vec![false; side * side],
            roles: vec![ModuleRole::Unknown; side * side],
        }
    }

    /// Wrap a sampled bit grid; roles are unknown.
    pub fn from_bits(side: usize, dark: Vec<bool>) -> ModuleMatrix {
        assert_eq!(dark.len(), side * side, "bit grid must be side*side");
        ModuleMatrix {
            side,
            dark,
            roles: vec![ModuleRole::Unknown; side * side],
        }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn is_dark(&self, r: usize, c: usize) -> bool {
        self.dark[r * self.side + c]
    }

    #[inline]
    pub fn set_dark(&mut self, r: usize, c: usize, dark: bool) {
        self.dark[r * self.side + c] = dark;
    }

    #[inline]
    pub fn role(&self, r: usize, c: usize) -> ModuleRole {
        self.roles[r * self.side + c]
    }

    #[inline]
    pub fn set_role(&mut self, r: usize, c: usize, role: ModuleRole) {
        self.roles[r * self.side + c] = role;
    }

    pub fn flip(&mut self, r: usize, c: usize) {
        self.dark[r * self.side + c] = !self.dark[r * self.side + c];
    }

    /// Bit-level equality, ignoring roles.
    pub fn same_bits(&self, other: &ModuleMatrix) -> bool {
        self.side == other.side && self.dark == other.dark
    }

    pub fn count_dark(&self) -> usize {
        self.dark.iter().filter(|&&d| d).count()
    }

    /// PBM text form, `1` = dark.
    pub fn to_pbm(&self) -> String {
        let mut s = format!("P1\n{} {}\n", self.side, self.side);
        for r in 0..self.side {
            for c in 0..self.side {
                s.push(if self.is_dark(r, c) { '1' } else { '0' });
                s.push(if c + 1 == self.side { '\n' } else { ' ' });
            }
        }
        s
    }

    pub fn from_pbm(text: &str) -> Result<ModuleMatrix, QrError> {
        let mut tokens = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(|l| l.split_whitespace());
        if tokens.next() != Some("P1") {
            return Err(QrError::BadSerialization("missing P1 header"));
        }
        let dims: Vec<usize> = tokens
            .by_ref()
            .take(2)
            .filter_map(|t| t.parse().ok())
            .collect();
        let (w, h) = match dims.as_slice() {
            [w, h] => (*w, *h),
            _ => return Err(QrError::BadSerialization("bad dimensions")),
        };
        if w != h {
            return Err(QrError::BadSerialization("matrix must be square"));
        }
        let mut dark = Vec::with_capacity(w * h);
        for t in tokens {
            match t {
                "0" => dark.push(false),
                "1" => dark.push(true),
                _ => return Err(QrError::BadSerialization("cell must be 0 or 1")),
            }
        }
        if dark.len() != w * h {
            return Err(QrError::BadSerialization("cell count mismatch"));
        }
        Ok(ModuleMatrix::from_bits(w, dark))
    }

    /// Pixel rendering with a 4-module quiet zone, `module_px` pixels per
    /// module, dark = 0 and light = 255.
    pub fn render_gray(&self, module_px: usize) -> image::GrayImage {
        let quiet = 4;
        let out = (self.side + 2 * quiet) * module_px;
        let mut img = image::GrayImage::from_pixel(out as u32, out as u32, image::Luma([255u8]));
        for r in 0..self.side {
            for c in 0..self.side {
                if !self.is_dark(r, c) {
                    continue;
                }
                for dy in 0..module_px {
                    for dx in 0..module_px {
                        let x = ((quiet + c) * module_px + dx) as u32;
                        let y = ((quiet + r) * module_px + dy) as u32;
                        img.put_pixel(x, y, image::Luma([0u8]));
                    }
                }
            }
        }
        img
    }

    /// Scale that brings side + quiet zone closest to 512 output pixels.
    pub fn default_scale(&self) -> usize {
        ((512.0 / (self.side + 8) as f64).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QrError {
    VersionUnsupported { version: u8 },
    MaskOutOfRange { mask: u8 },
    CapacityExceeded { needed: usize, available: usize },
    SideNotAVersion { side: usize },
    FormatInfoUnreadable,
    UncorrectableBlock,
    MalformedBitstream(&'static str),
    BadSerialization(&'static str),
}

impl fmt::Display for QrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QrError::VersionUnsupported { version } => {
                write!(f, "version {} outside supported range 1-10", version)
            }
            QrError::MaskOutOfRange { mask } => write!(f, "mask {} outside 0-7", mask),
            QrError::CapacityExceeded { needed, available } => {
                write!(f, "payload needs {} bytes, capacity is {}", needed, available)
            }
            QrError::SideNotAVersion { side } => {
                write!(f, "side {} does not match any supported version", side)
            }
            QrError::FormatInfoUnreadable => write!(f, "format info unreadable in both copies"),
            QrError::UncorrectableBlock => write!(f, "error correction capacity exceeded"),
            QrError::MalformedBitstream(why) => write!(f, "malformed data bitstream: {}", why),
            QrError::BadSerialization(why) => write!(f, "bad matrix serialization: {}", why),
        }
    }
}

impl std::error::Error for QrError {}

impl From<crate::galois::RsError> for QrError {
    fn from(e: crate::galois::RsError) -> QrError {
        match e {
            crate::galois::RsError::UncorrectableBlock => QrError::UncorrectableBlock,
            crate::galois::RsError::LengthViolation { .. } => {
                QrError::MalformedBitstream("block geometry exceeds field size")
            }
        }
    }
}

/// How message, padding and parity codewords map onto transmitted positions
/// and modules. Shared by the encoder and the basis-adjustment stage.
pub(crate) struct SymbolMap {
    pub layout: Layout,
    /// data codeword count before padding starts
    pub message_codewords: usize,
    /// data codeword count including padding
    pub data_codewords: usize,
    pub ecc_per_block: usize,
    pub block_data_lens: Vec<usize>,
    /// transmit_of[b][j] = transmitted codeword index of block b's j-th
    /// codeword, data first (j < len_b) then parity
    pub transmit_of: Vec<Vec<usize>>,
}

impl SymbolMap {
    pub fn build(spec: &QrSpec, payload_len: usize) -> Result<SymbolMap, QrError> {
        let capacity = spec.capacity_bytes();
        if payload_len > capacity {
            return Err(QrError::CapacityExceeded {
                needed: payload_len,
                available: capacity,
            });
        }
        let (ecc_per_block, block_data_lens) = tables::block_structure(spec.version, spec.ec);
        let data_codewords: usize = block_data_lens.iter().sum();
        let header_bits = 4 + tables::char_count_bits(spec.version) + 8 * payload_len;
        let terminator = (8 * data_codewords - header_bits).min(4);
        let message_codewords = (header_bits + terminator + 7) / 8;

        // interleave order: data column-major over blocks, then parity
        let max_len = *block_data_lens.iter().max().unwrap();
        let mut transmit_of: Vec<Vec<usize>> = block_data_lens
            .iter()
            .map(|&l| vec![0; l + ecc_per_block])
            .collect();
        let mut t = 0;
        for j in 0..max_len {
            for (b, &len) in block_data_lens.iter().enumerate() {
                if j < len {
                    transmit_of[b][j] = t;
                    t += 1;
                }
            }
        }
        for j in 0..ecc_per_block {
            for (b, &len) in block_data_lens.iter().enumerate() {
                transmit_of[b][len + j] = t;
                t += 1;
            }
        }

        Ok(SymbolMap {
            layout: placement::layout(spec.version),
            message_codewords,
            data_codewords,
            ecc_per_block,
            block_data_lens,
            transmit_of,
        })
    }

    /// Global data-codeword index range [start, end) held by block b.
    pub fn block_span(&self, b: usize) -> (usize, usize) {
        let start: usize = self.block_data_lens[..b].iter().sum();
        (start, start + self.block_data_lens[b])
    }

    /// Module position of bit `bit` (0 = MSB) of block b's j-th codeword.
    pub fn module_of(&self, b: usize, j: usize, bit: usize) -> (usize, usize) {
        let g = self.transmit_of[b][j] * 8 + bit;
        self.layout.bit_positions[g]
    }

    pub fn padding_codewords(&self) -> usize {
        self.data_codewords - self.message_codewords
    }
}

/// Standard byte-mode data codewords: header, payload, terminator, zero
/// fill, then alternating 0xEC/0x11 padding.
fn build_data_codewords(payload: &Payload, spec: &QrSpec, map: &SymbolMap) -> Vec<u8> {
    let mut bits = BitSink::new();
    bits.push(0b0100, 4);
    bits.push(payload.bytes.len() as u32, tables::char_count_bits(spec.version));
    for &b in &payload.bytes {
        bits.push(b as u32, 8);
    }
    let total_bits = 8 * map.data_codewords;
    let terminator = (total_bits - bits.len()).min(4);
    bits.push(0, terminator);
    while bits.len() % 8 != 0 {
        bits.push(0, 1);
    }
    let mut out = bits.into_bytes();
    let mut alt = [0xec, 0x11].iter().cycle();
    while out.len() < map.data_codewords {
        out.push(*alt.next().unwrap());
    }
    out
}

struct BitSink {
    bits: Vec<bool>,
}

impl BitSink {
    fn new() -> BitSink {
        BitSink { bits: Vec::new() }
    }
    fn push(&mut self, value: u32, n: usize) {
        for i in (0..n).rev() {
            self.bits.push(value >> i & 1 == 1);
        }
    }
    fn len(&self) -> usize {
        self.bits.len()
    }
    fn into_bytes(self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|ch| ch.iter().fold(0u8, |acc, &b| acc << 1 | b as u8))
            .collect()
    }
}

/// Build the full symbol for `payload` under `spec`.
pub fn encode_symbol(payload: &Payload, spec: &QrSpec) -> Result<ModuleMatrix, QrError> {
    let spec = QrSpec::new(spec.version, spec.ec, spec.mask)?;
    let map = SymbolMap::build(&spec, payload.bytes.len())?;
    let data = build_data_codewords(payload, &spec, &map);

    // per-block parity
    let mut blocks: Vec<RsBlock> = Vec::with_capacity(map.block_data_lens.len());
    for b in 0..map.block_data_lens.len() {
        let (start, end) = map.block_span(b);
        blocks.push(rs_encode(&data[start..end], map.ecc_per_block)?);
    }

    // transmitted codeword sequence with per-codeword roles
    let total = map.data_codewords + map.ecc_per_block * blocks.len();
    let mut transmitted = vec![0u8; total];
    let mut cw_role = vec![ModuleRole::Data; total];
    for (b, block) in blocks.iter().enumerate() {
        let (start, _) = map.block_span(b);
        let cw = block.codewords();
        for (j, &byte) in cw.iter().enumerate() {
            let t = map.transmit_of[b][j];
            transmitted[t] = byte;
            cw_role[t] = if j >= map.block_data_lens[b] {
                ModuleRole::Ecc
            } else if start + j >= map.message_codewords {
                ModuleRole::Controllable
            } else {
                ModuleRole::Data
            };
        }
    }

    // stamp patterns, place bits under the mask, write info fields
    let mut m = ModuleMatrix::new_light(spec.side());
    placement::stamp_function_patterns(&mut m, spec.version, &map.layout);
    for (g, &(r, c)) in map.layout.bit_positions.iter().enumerate() {
        let (bit, role) = if g < total * 8 {
            let byte = transmitted[g / 8];
            (byte >> (7 - g % 8) & 1 == 1, cw_role[g / 8])
        } else {
            (false, ModuleRole::Remainder)
        };
        m.set_dark(r, c, bit ^ placement::mask_bit(spec.mask, r, c));
        m.set_role(r, c, role);
    }
    placement::write_format_info(&mut m, spec.ec, spec.mask);
    placement::write_version_info(&mut m, spec.version);
    Ok(m)
}

/// Grid marking the modules whose bits padding alone can change, before
/// basis elimination widens the reach into parity positions.
pub fn controllable_map(spec: &QrSpec, payload: &Payload) -> Result<Vec<bool>, QrError> {
    let map = SymbolMap::build(spec, payload.bytes.len())?;
    let side = map.layout.side;
    let mut grid = vec![false; side * side];
    for b in 0..map.block_data_lens.len() {
        let (start, end) = map.block_span(b);
        for j in 0..map.block_data_lens[b] {
            if start + j >= map.message_codewords && start + j < end {
                for bit in 0..8 {
                    let (r, c) = map.module_of(b, j, bit);
                    grid[r * side + c] = true;
                }
            }
        }
    }
    Ok(grid)
}
