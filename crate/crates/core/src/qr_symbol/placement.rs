//! Function patterns, data masks, and the zigzag placement order.

use super::tables::{alignment_centers, format_info_bits, side_len, version_info_bits};
use super::{EcLevel, ModuleMatrix, ModuleRole};

/// Static geometry of one version: which modules are function patterns and
/// the order data bits are written in.
pub(crate) struct Layout {
    pub side: usize,
    /// function-pattern mask, row-major, includes format/version areas
    pub func: Vec<bool>,
    /// zigzag placement order over non-function modules
    pub bit_positions: Vec<(usize, usize)>,
}

pub(crate) fn layout(version: u8) -> Layout {
    let side = side_len(version);
    let mut func = vec![false; side * side];
    let mut mark = |r: usize, c: usize| func[r * side + c] = true;

    // finder patterns + separators occupy the three 8x8 corners
    for r in 0..8 {
        for c in 0..8 {
            mark(r, c);
            mark(r, side - 1 - c);
            mark(side - 1 - r, c);
        }
    }
    // format info areas around them, plus the always-dark module
    for i in 0..9 {
        mark(8, i.min(side - 1));
        mark(i.min(side - 1), 8);
    }
    for i in 0..8 {
        mark(8, side - 1 - i);
        mark(side - 1 - i, 8);
    }
    // timing row and column
    for i in 8..side - 8 {
        mark(6, i);
        mark(i, 6);
    }
    // alignment patterns, skipping the three finder corners
    let centers = alignment_centers(version);
    for &cr in centers {
        for &cc in centers {
            if in_finder_corner(cr, cc, side) {
                continue;
            }
            for r in cr - 2..=cr + 2 {
                for c in cc - 2..=cc + 2 {
                    mark(r, c);
                }
            }
        }
    }
    // version info blocks
    if version >= 7 {
        for j in 0..18 {
            mark(side - 11 + j % 3, j / 3);
            mark(j / 3, side - 11 + j % 3);
        }
    }

    let bit_positions = zigzag(side, &func);
    Layout {
        side,
        func,
        bit_positions,
    }
}

fn in_finder_corner(r: usize, c: usize, side: usize) -> bool {
    (r <= 8 && c <= 8) || (r <= 8 && c >= side - 9) || (r >= side - 9 && c <= 8)
}

/// Column pairs right to left skipping the timing column, rows alternating
/// up and down, right cell before left.
fn zigzag(side: usize, func: &[bool]) -> Vec<(usize, usize)> {
    let mut order = Vec::new();
    let mut col = side as i32 - 1;
    let mut upward = true;
    while col > 0 {
        if col == 6 {
            col -= 1;
        }
        let rows: Vec<usize> = if upward {
            (0..side).rev().collect()
        } else {
            (0..side).collect()
        };
        for r in rows {
            for c in [col as usize, col as usize - 1] {
                if !func[r * side + c] {
                    order.push((r, c));
                }
            }
        }
        upward = !upward;
        col -= 2;
    }
    order
}

/// Mask condition at (r, c); a true value flips the data bit.
pub(crate) fn mask_bit(mask: u8, r: usize, c: usize) -> bool {
    match mask {
        0 => (r + c) % 2 == 0,
        1 => r % 2 == 0,
        2 => c % 3 == 0,
        3 => (r + c) % 3 == 0,
        4 => (r / 2 + c / 3) % 2 == 0,
        5 => (r * c) % 2 + (r * c) % 3 == 0,
        6 => ((r * c) % 2 + (r * c) % 3) % 2 == 0,
        7 => ((r + c) % 2 + (r * c) % 3) % 2 == 0,
        _ => unreachable!("mask index out of range"),
    }
}

/// Stamp finders, separators, timing, alignment and the dark module.
pub(crate) fn stamp_function_patterns(m: &mut ModuleMatrix, version: u8, lay: &Layout) {
    let side = m.side();

    let mut finder = |top: usize, left: usize| {
        for r in 0..7 {
            for c in 0..7 {
                let ring = r == 0 || r == 6 || c == 0 || c == 6;
                let core = (2..=4).contains(&r) && (2..=4).contains(&c);
                m.set_dark(top + r, left + c, ring || core);
            }
        }
    };
    finder(0, 0);
    finder(0, side - 7);
    finder(side - 7, 0);
    // separators stay light (matrix starts light), timing alternates dark
    for i in 8..side - 8 {
        m.set_dark(6, i, i % 2 == 0);
        m.set_dark(i, 6, i % 2 == 0);
    }
    let centers = alignment_centers(version);
    for &cr in centers {
        for &cc in centers {
            if in_finder_corner(cr, cc, side) {
                continue;
            }
            for dr in -2i32..=2 {
                for dc in -2i32..=2 {
                    let ring = dr.abs() == 2 || dc.abs() == 2;
                    let center = dr == 0 && dc == 0;
                    m.set_dark(
                        (cr as i32 + dr) as usize,
                        (cc as i32 + dc) as usize,
                        ring || center,
                    );
                }
            }
        }
    }
    m.set_dark(side - 8, 8, true);
    for r in 0..side {
        for c in 0..side {
            // roles of the data region are refined during bit placement
            if lay.func[r * side + c] {
                m.set_role(r, c, ModuleRole::Function);
            }
        }
    }
}

/// Write both format-info copies for (ec, mask).
pub(crate) fn write_format_info(m: &mut ModuleMatrix, ec: EcLevel, mask: u8) {
    let side = m.side();
    let bits = format_info_bits(ec, mask);
    let bit = |i: usize| bits >> i & 1 == 1;
    for i in 0..15 {
        let (r, c) = match i {
            0..=5 => (8, i),
            6 => (8, 7),
            7 => (8, 8),
            8 => (7, 8),
            _ => (14 - i, 8),
        };
        m.set_dark(r, c, bit(i));
        let (r2, c2) = if i < 8 {
            (side - 1 - i, 8)
        } else {
            (8, side - 15 + i)
        };
        m.set_dark(r2, c2, bit(i));
    }
}

/// Write both version-info blocks (versions 7+).
pub(crate) fn write_version_info(m: &mut ModuleMatrix, version: u8) {
    if version < 7 {
        return;
    }
    let side = m.side();
    let bits = version_info_bits(version);
    for j in 0..18 {
        let dark = bits >> j & 1 == 1;
        m.set_dark(side - 11 + j % 3, j / 3, dark);
        m.set_dark(j / 3, side - 11 + j % 3, dark);
    }
}
