//! Geometry tables for versions 1 through 10, byte mode.

use super::EcLevel;

/// (ecc codewords per block, group-1 block count, group-1 data length,
/// group-2 block count, group-2 data length), indexed [version-1][L,M,Q,H].
const BLOCKS: [[(usize, usize, usize, usize, usize); 4]; 10] = [
    [
        (7, 1, 19, 0, 0),
        (10, 1, 16, 0, 0),
        (13, 1, 13, 0, 0),
        (17, 1, 9, 0, 0),
    ],
    [
        (10, 1, 34, 0, 0),
        (16, 1, 28, 0, 0),
        (22, 1, 22, 0, 0),
        (28, 1, 16, 0, 0),
    ],
    [
        (15, 1, 55, 0, 0),
        (26, 1, 44, 0, 0),
        (18, 2, 17, 0, 0),
        (22, 2, 13, 0, 0),
    ],
    [
        (20, 1, 80, 0, 0),
        (18, 2, 32, 0, 0),
        (26, 2, 24, 0, 0),
        (16, 4, 9, 0, 0),
    ],
    [
        (26, 1, 108, 0, 0),
        (24, 2, 43, 0, 0),
        (18, 2, 15, 2, 16),
        (22, 2, 11, 2, 12),
    ],
    [
        (18, 2, 68, 0, 0),
        (16, 4, 27, 0, 0),
        (24, 4, 19, 0, 0),
        (28, 4, 15, 0, 0),
    ],
    [
        (20, 2, 78, 0, 0),
        (18, 4, 31, 0, 0),
        (18, 2, 14, 4, 15),
        (26, 4, 13, 1, 14),
    ],
    [
        (24, 2, 97, 0, 0),
        (22, 2, 38, 2, 39),
        (22, 4, 18, 2, 19),
        (26, 4, 14, 2, 15),
    ],
    [
        (30, 2, 116, 0, 0),
        (22, 3, 36, 2, 37),
        (20, 4, 16, 4, 17),
        (24, 4, 12, 4, 13),
    ],
    [
        (18, 2, 68, 2, 69),
        (26, 4, 43, 1, 44),
        (24, 6, 19, 2, 20),
        (28, 6, 15, 2, 16),
    ],
];

const ALIGNMENT: [&[usize]; 10] = [
    &[],
    &[6, 18],
    &[6, 22],
    &[6, 26],
    &[6, 30],
    &[6, 34],
    &[6, 22, 38],
    &[6, 24, 42],
    &[6, 26, 46],
    &[6, 28, 50],
];

pub(crate) fn side_len(version: u8) -> usize {
    4 * version as usize + 17
}

/// Per-block ecc codeword count and the ordered list of data lengths.
pub(crate) fn block_structure(version: u8, ec: EcLevel) -> (usize, Vec<usize>) {
    let (ecc, g1n, g1l, g2n, g2l) = BLOCKS[version as usize - 1][ec as usize];
    let mut lens = Vec::with_capacity(g1n + g2n);
    lens.extend(std::iter::repeat(g1l).take(g1n));
    lens.extend(std::iter::repeat(g2l).take(g2n));
    (ecc, lens)
}

pub(crate) fn total_data_codewords(version: u8, ec: EcLevel) -> usize {
    let (_, lens) = block_structure(version, ec);
    lens.iter().sum()
}

pub(crate) fn alignment_centers(version: u8) -> &'static [usize] {
    ALIGNMENT[version as usize - 1]
}

/// Leftover bits after the last codeword in the placement order.
#[cfg(test)]
pub(crate) fn remainder_bits(version: u8) -> usize {
    match version {
        2..=6 => 7,
        _ => 0,
    }
}

/// Character-count field width for byte mode.
pub(crate) fn char_count_bits(version: u8) -> usize {
    if version <= 9 {
        8
    } else {
        16
    }
}

/// 15-bit format sequence: BCH(15,5)-extended (ec, mask), XOR-masked with
/// 0x5412. Bit 0 is the least significant transmitted bit.
pub(crate) fn format_info_bits(ec: EcLevel, mask: u8) -> u16 {
    let ec_bits: u16 = match ec {
        EcLevel::L => 0b01,
        EcLevel::M => 0b00,
        EcLevel::Q => 0b11,
        EcLevel::H => 0b10,
    };
    let value = (ec_bits << 3) | mask as u16;
    let mut rem = value << 10;
    for shift in (0..=4).rev() {
        if rem & (1 << (10 + shift)) != 0 {
            rem ^= 0x537 << shift;
        }
    }
    (((value << 10) | rem) ^ 0x5412) & 0x7fff
}

/// 18-bit version sequence for versions 7+, BCH(18,6) over 0x1F25.
pub(crate) fn version_info_bits(version: u8) -> u32 {
    let value = version as u32;
    let mut rem = value << 12;
    for shift in (0..=5).rev() {
        if rem & (1 << (12 + shift)) != 0 {
            rem ^= 0x1f25 << shift;
        }
    }
    (value << 12) | rem
}
