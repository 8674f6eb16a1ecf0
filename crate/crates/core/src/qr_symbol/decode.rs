//! Matrix-to-payload decoding: format recovery, unmasking, deinterleaving,
//! per-block error correction, bitstream parsing.

use super::placement::{layout, mask_bit};
use super::tables::{char_count_bits, format_info_bits};
use super::{EcLevel, ModuleMatrix, Payload, QrError, QrSpec, SymbolMap};
use crate::galois::{rs_decode, RsBlock};

/// Successful decode: payload plus everything recovered along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeReport {
    pub payload: Payload,
    pub version: u8,
    pub ec: EcLevel,
    pub mask: u8,
    /// total bytes repaired by error correction across all blocks
    pub corrections: usize,
}

/// Read both format-info copies and pick the (ec, mask) whose sequence is
/// nearest; accepted up to 3 bit errors per copy.
fn read_format(m: &ModuleMatrix) -> Result<(EcLevel, u8), QrError> {
    let side = m.side();
    let mut copy1: u16 = 0;
    let mut copy2: u16 = 0;
    for i in 0..15 {
        let (r, c) = match i {
            0..=5 => (8, i),
            6 => (8, 7),
            7 => (8, 8),
            8 => (7, 8),
            _ => (14 - i, 8),
        };
        if m.is_dark(r, c) {
            copy1 |= 1 << i;
        }
        let (r2, c2) = if i < 8 {
            (side - 1 - i, 8)
        } else {
            (8, side - 15 + i)
        };
        if m.is_dark(r2, c2) {
            copy2 |= 1 << i;
        }
    }

    let mut best: Option<(u32, EcLevel, u8)> = None;
    for ec in EcLevel::ALL {
        for mask in 0..8u8 {
            let reference = format_info_bits(ec, mask);
            for read in [copy1, copy2] {
                let d = (read ^ reference).count_ones();
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, ec, mask));
                }
            }
        }
    }
    match best {
        Some((d, ec, mask)) if d <= 3 => Ok((ec, mask)),
        _ => Err(QrError::FormatInfoUnreadable),
    }
}

/// Decode a full module grid back to its payload.
pub fn decode_matrix(m: &ModuleMatrix) -> Result<DecodeReport, QrError> {
    let side = m.side();
    if side < 21 || side > 57 || (side - 17) % 4 != 0 {
        return Err(QrError::SideNotAVersion { side });
    }
    let version = ((side - 17) / 4) as u8;
    let (ec, mask) = read_format(m)?;
    let spec = QrSpec { version, ec, mask };

    // unmask and collect codeword bits in placement order
    let lay = layout(version);
    let map = SymbolMap::build(&spec, 0).expect("geometry for empty payload always builds");
    let total = map.data_codewords + map.ecc_per_block * map.block_data_lens.len();
    let mut bytes = vec![0u8; total];
    for (g, &(r, c)) in lay.bit_positions.iter().enumerate().take(total * 8) {
        let bit = m.is_dark(r, c) ^ mask_bit(mask, r, c);
        if bit {
            bytes[g / 8] |= 1 << (7 - g % 8);
        }
    }

    // deinterleave and correct each block
    let mut corrections = 0usize;
    let mut data = vec![0u8; map.data_codewords];
    for b in 0..map.block_data_lens.len() {
        let len = map.block_data_lens[b];
        let mut cw = Vec::with_capacity(len + map.ecc_per_block);
        for j in 0..len + map.ecc_per_block {
            cw.push(bytes[map.transmit_of[b][j]]);
        }
        let block = RsBlock {
            data: cw[..len].to_vec(),
            ecc: cw[len..].to_vec(),
        };
        let (fixed, n) = rs_decode(&block)?;
        corrections += n;
        let (start, _) = map.block_span(b);
        data[start..start + len].copy_from_slice(&fixed);
    }

    // parse the byte-mode bitstream
    let mut reader = BitReader::new(&data);
    let mode = reader
        .take(4)
        .ok_or(QrError::MalformedBitstream("truncated mode field"))?;
    if mode != 0b0100 {
        return Err(QrError::MalformedBitstream("unsupported mode indicator"));
    }
    let cc_bits = char_count_bits(version);
    let count = reader
        .take(cc_bits)
        .ok_or(QrError::MalformedBitstream("truncated length field"))? as usize;
    let mut payload = Vec::with_capacity(count);
    for _ in 0..count {
        payload.push(
            reader
                .take(8)
                .ok_or(QrError::MalformedBitstream("payload overruns capacity"))? as u8,
        );
    }

    Ok(DecodeReport {
        payload: Payload { bytes: payload },
        version,
        ec,
        mask,
        corrections,
    })
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> BitReader<'a> {
        BitReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Option<u32> {
        if self.pos + n > self.bytes.len() * 8 {
            return None;
        }
        let mut v = 0u32;
        for _ in 0..n {
            let bit = self.bytes[self.pos / 8] >> (7 - self.pos % 8) & 1;
            v = v << 1 | bit as u32;
            self.pos += 1;
        }
        Some(v)
    }
}
