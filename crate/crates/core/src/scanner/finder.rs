//! Finder pattern detection: scan rows for dark-light-dark-light-dark runs
//! in 1:1:3:1:1 proportion, cross-check candidates vertically and
//! diagonally, cluster the confirmations, and pick the three centers that
//! agree best on module size.

use super::{BinaryImage, ScanError};

/// Ratio tolerance: each run may deviate from its nominal width by half of
/// that width.
const TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    x: f64,
    y: f64,
    module_px: f64,
    hits: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FinderTriple {
    pub top_left: (f64, f64),
    pub top_right: (f64, f64),
    pub bottom_left: (f64, f64),
    pub module_px: f64,
}

/// Run lengths match 1:1:3:1:1 within tolerance? Returns the module size.
fn ratio_check(runs: &[usize; 5]) -> Option<f64> {
    let total: usize = runs.iter().sum();
    if total < 7 {
        return None;
    }
    let m = total as f64 / 7.0;
    let nominal = [1.0, 1.0, 3.0, 1.0, 1.0];
    for (&run, &k) in runs.iter().zip(nominal.iter()) {
        if (run as f64 - k * m).abs() > TOLERANCE * k * m {
            return None;
        }
    }
    Some(m)
}

/// Walk the 1:1:3:1:1 pattern through (cx, cy) along (dx, dy). The start
/// must be dark. Returns the refined center along the axis (as a step count
/// offset from the start point) and the pattern's total length in steps.
fn cross_runs(bin: &BinaryImage, cx: i64, cy: i64, dx: i64, dy: i64) -> Option<(f64, f64)> {
    if !bin.dark_at(cx, cy) {
        return None;
    }
    // expand outward: center dark run, then light, then dark, each side
    let walk = |sx: i64, sy: i64| -> (usize, usize, usize) {
        let mut steps = [0usize; 3];
        let (mut x, mut y) = (cx + sx, cy + sy);
        for (phase, step) in steps.iter_mut().enumerate() {
            let want_dark = phase != 1;
            while bin.dark_at(x, y) == want_dark && *step < 10_000 {
                *step += 1;
                x += sx;
                y += sy;
            }
        }
        (steps[0], steps[1], steps[2])
    };
    let (c_neg, l_neg, d_neg) = walk(-dx, -dy);
    let (c_pos, l_pos, d_pos) = walk(dx, dy);
    let runs = [d_neg, l_neg, c_neg + 1 + c_pos, l_pos, d_pos];
    let m = ratio_check(&runs)?;
    // pattern spans step offsets [-neg, +pos]; its midpoint is the center
    let neg = (d_neg + l_neg + c_neg) as f64;
    let pos = (d_pos + l_pos + c_pos) as f64;
    Some(((pos - neg) / 2.0, m))
}

/// Scan every row for finder-shaped run windows and confirm each hit in
/// the perpendicular and diagonal directions before clustering.
pub fn detect_finders(bin: &BinaryImage) -> Result<FinderTriple, ScanError> {
    let mut confirmed: Vec<Candidate> =
        collect_candidates(bin).into_iter().filter(|c| c.hits >= 2).collect();
    if confirmed.len() < 3 {
        return Err(ScanError::DetectFailed);
    }
    confirmed.sort_by(|a, b| b.hits.cmp(&a.hits));
    confirmed.truncate(12);

    // pick the triple that agrees best on module size and is geometrically
    // sound (distinct corners, roughly equal legs)
    let mut best: Option<([Candidate; 3], f64)> = None;
    for i in 0..confirmed.len() {
        for j in i + 1..confirmed.len() {
            for k in j + 1..confirmed.len() {
                let t = [confirmed[i], confirmed[j], confirmed[k]];
                let mean = (t[0].module_px + t[1].module_px + t[2].module_px) / 3.0;
                let var = t.iter().map(|c| (c.module_px - mean).powi(2)).sum::<f64>() / 3.0;
                if !triple_plausible(&t, mean) {
                    continue;
                }
                if best.map_or(true, |(_, bv)| var < bv) {
                    best = Some((t, var));
                }
            }
        }
    }
    let (triple, _) = best.ok_or(ScanError::DetectFailed)?;
    Ok(order_triple(&triple))
}

/// Scan every row for 1:1:3:1:1 sequences, confirm each hit in the
/// perpendicular and diagonal directions, and merge nearby confirmations.
fn collect_candidates(bin: &BinaryImage) -> Vec<Candidate> {
    let (w, h) = (bin.width(), bin.height());
    let mut candidates: Vec<Candidate> = Vec::new();

    for y in 0..h {
        // run-length encode the row
        let mut runs: Vec<(usize, usize, bool)> = Vec::new(); // start, len, dark
        let mut x = 0;
        while x < w {
            let dark = bin.dark(x, y);
            let start = x;
            while x < w && bin.dark(x, y) == dark {
                x += 1;
            }
            runs.push((start, x - start, dark));
        }
        for win in runs.windows(5) {
            if !win[0].2 {
                continue;
            }
            let lens = [win[0].1, win[1].1, win[2].1, win[3].1, win[4].1];
            let Some(m) = ratio_check(&lens) else { continue };
            let cx = (win[2].0 + win[2].1 / 2) as i64;
            let cy = y as i64;
            // vertical cross-check re-centers the row, then the refined row
            // is checked horizontally, then one diagonal
            let Some((dy_off, mv)) = cross_runs(bin, cx, cy, 0, 1) else { continue };
            let ry = cy as f64 + dy_off;
            let Some((dx_off, mh)) = cross_runs(bin, cx, ry.round() as i64, 1, 0) else {
                continue;
            };
            let rx = cx as f64 + dx_off;
            if cross_runs(bin, rx.round() as i64, ry.round() as i64, 1, 1).is_none() {
                continue;
            }
            let size = (mv + mh + m) / 3.0;
            let mut merged = false;
            for c in candidates.iter_mut() {
                if (c.x - rx).abs() <= c.module_px * 2.0 && (c.y - ry).abs() <= c.module_px * 2.0 {
                    let n = c.hits as f64;
                    c.x = (c.x * n + rx) / (n + 1.0);
                    c.y = (c.y * n + ry) / (n + 1.0);
                    c.module_px = (c.module_px * n + size) / (n + 1.0);
                    c.hits += 1;
                    merged = true;
                    break;
                }
            }
            if !merged {
                candidates.push(Candidate {
                    x: rx,
                    y: ry,
                    module_px: size,
                    hits: 1,
                });
            }
        }
    }
    candidates
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn triple_plausible(t: &[Candidate; 3], mean_size: f64) -> bool {
    let p = [(t[0].x, t[0].y), (t[1].x, t[1].y), (t[2].x, t[2].y)];
    let d = [dist(p[0], p[1]), dist(p[1], p[2]), dist(p[0], p[2])];
    // centers at least a finder width apart, inside a supported symbol
    if d.iter().any(|&v| v < 7.0 * mean_size || v > 80.0 * mean_size) {
        return false;
    }
    // the two legs (everything but the hypotenuse) within 2x of each other
    let mut s = d;
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s[1] < 2.0 * s[0]
}

/// Order the centers: the corner between the two legs is top-left; the
/// cross product then separates top-right from bottom-left, which makes the
/// result orientation-correct for rotated symbols as well.
fn order_triple(t: &[Candidate; 3]) -> FinderTriple {
    let p = [(t[0].x, t[0].y), (t[1].x, t[1].y), (t[2].x, t[2].y)];
    // the hypotenuse joins top-right and bottom-left
    let d01 = dist(p[0], p[1]);
    let d12 = dist(p[1], p[2]);
    let d02 = dist(p[0], p[2]);
    let (tl, mut a, mut b) = if d01 >= d12 && d01 >= d02 {
        (p[2], p[0], p[1])
    } else if d12 >= d01 && d12 >= d02 {
        (p[0], p[1], p[2])
    } else {
        (p[1], p[0], p[2])
    };
    // with y growing downward, (a - tl) x (b - tl) > 0 puts a on top
    let cross = (a.0 - tl.0) * (b.1 - tl.1) - (a.1 - tl.1) * (b.0 - tl.0);
    if cross < 0.0 {
        std::mem::swap(&mut a, &mut b);
    }
    let module_px = (t[0].module_px + t[1].module_px + t[2].module_px) / 3.0;
    // pixel-index coordinates to continuous image coordinates
    let c = |p: (f64, f64)| (p.0 + 0.5, p.1 + 0.5);
    FinderTriple {
        top_left: c(tl),
        top_right: c(a),
        bottom_left: c(b),
        module_px,
    }
}
