//! Grid sampling: estimate the symbol dimension from the finder spacing,
//! fit a perspective transform through the three finder centers plus the
//! bottom-right alignment pattern (or an extrapolated fourth corner), and
//! read one bit per module at its transformed center.

use super::{BinaryImage, FinderTriple, ScanError};

/// 3x3 projective transform on row vectors (u, v, 1).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Homography {
    m: [f64; 9],
}

impl Homography {
    /// Maps the unit square corners (0,0), (1,0), (1,1), (0,1) to `q`.
    pub(crate) fn unit_to_quad(q: [(f64, f64); 4]) -> Homography {
        let (x0, y0) = q[0];
        let (x1, y1) = q[1];
        let (x2, y2) = q[2];
        let (x3, y3) = q[3];
        let dx3 = x0 - x1 + x2 - x3;
        let dy3 = y0 - y1 + y2 - y3;
        let m = if dx3 == 0.0 && dy3 == 0.0 {
            [x1 - x0, x2 - x1, x0, y1 - y0, y2 - y1, y0, 0.0, 0.0, 1.0]
        } else {
            let dx1 = x1 - x2;
            let dx2 = x3 - x2;
            let dy1 = y1 - y2;
            let dy2 = y3 - y2;
            let den = dx1 * dy2 - dx2 * dy1;
            let a13 = (dx3 * dy2 - dx2 * dy3) / den;
            let a23 = (dx1 * dy3 - dx3 * dy1) / den;
            [
                x1 - x0 + a13 * x1,
                x3 - x0 + a23 * x3,
                x0,
                y1 - y0 + a13 * y1,
                y3 - y0 + a23 * y3,
                y0,
                a13,
                a23,
            1.0,
            ]
        };
        Homography { m }
    }

    /// Adjugate: the projective inverse up to scale.
    fn adjugate(&self) -> Homography {
        let m = &self.m;
        Homography {
            m: [
                m[4] * m[8] - m[5] * m[7],
                m[2] * m[7] - m[1] * m[8],
                m[1] * m[5] - m[2] * m[4],
                m[5] * m[6] - m[3] * m[8],
                m[0] * m[8] - m[2] * m[6],
                m[2] * m[3] - m[0] * m[5],
                m[3] * m[7] - m[4] * m[6],
                m[1] * m[6] - m[0] * m[7],
                m[0] * m[4] - m[1] * m[3],
            ],
        }
    }

    fn compose(&self, rhs: &Homography) -> Homography {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                m[r * 3 + c] =
                    a[r * 3] * b[c] + a[r * 3 + 1] * b[3 + c] + a[r * 3 + 2] * b[6 + c];
            }
        }
        Homography { m }
    }

    /// Maps quadrilateral `src` onto quadrilateral `dst` (same corner order).
    pub(crate) fn quad_to_quad(src: [(f64, f64); 4], dst: [(f64, f64); 4]) -> Homography {
        Homography::unit_to_quad(dst).compose(&Homography::unit_to_quad(src).adjugate())
    }

    pub(crate) fn map(&self, u: f64, v: f64) -> (f64, f64) {
        let m = &self.m;
        let w = m[6] * u + m[7] * v + m[8];
        ((m[0] * u + m[1] * v + m[2]) / w, (m[3] * u + m[4] * v + m[5]) / w)
    }
}

#[derive(Debug, Clone)]
pub struct SampledGrid {
    pub side: usize,
    /// row-major module bits, true = dark
    pub dark: Vec<bool>,
    /// whether the bottom-right alignment pattern was located
    pub alignment_found: bool,
}

/// Symbol dimension from finder spacing, snapped to the 4k+17 lattice.
fn estimate_dimension(t: &FinderTriple) -> Result<usize, ScanError> {
    let d_top = dist(t.top_left, t.top_right);
    let d_left = dist(t.top_left, t.bottom_left);
    if t.module_px <= 0.0 {
        return Err(ScanError::VersionEstimateFailed);
    }
    let mut dim = ((d_top + d_left) / (2.0 * t.module_px)).round() as i64 + 7;
    match dim % 4 {
        1 => {}
        0 => dim += 1,
        2 => dim -= 1,
        _ => return Err(ScanError::VersionEstimateFailed),
    }
    if !(21..=57).contains(&dim) {
        return Err(ScanError::VersionEstimateFailed);
    }
    Ok(dim as usize)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Template score of a 5x5 alignment pattern centered at `c`: dark center,
/// light ring, dark ring.
fn alignment_score(bin: &BinaryImage, c: (f64, f64), ex: (f64, f64), ey: (f64, f64)) -> usize {
    let mut score = 0;
    for j in -2i32..=2 {
        for i in -2i32..=2 {
            let ring = i.abs().max(j.abs());
            let want_dark = ring != 1;
            let x = c.0 + ex.0 * i as f64 + ey.0 * j as f64;
            let y = c.1 + ex.1 * i as f64 + ey.1 * j as f64;
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            if bin.dark_at(x.floor() as i64, y.floor() as i64) == want_dark {
                score += 1;
            }
        }
    }
    score
}

/// Search near the affine estimate for the bottom-right alignment center.
fn find_alignment(
    bin: &BinaryImage,
    guess: (f64, f64),
    ex: (f64, f64),
    ey: (f64, f64),
    module_px: f64,
) -> Option<(f64, f64)> {
    let radius = (4.0 * module_px).ceil() as i32;
    let mut best: Option<((f64, f64), usize)> = None;
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let c = (guess.0 + dx as f64, guess.1 + dy as f64);
            let score = alignment_score(bin, c, ex, ey);
            let better = match best {
                None => true,
                Some((bc, bs)) => {
                    score > bs
                        || (score == bs
                            && dist(c, guess) < dist(bc, guess))
                }
            };
            if better {
                best = Some((c, score));
            }
        }
    }
    match best {
        Some((c, score)) if score >= 21 => Some(refine_alignment(bin, c, module_px)),
        _ => None,
    }
}

/// Midpoint of the dark run through (px, py) along (dx, dy), in the scanned
/// axis, as a continuous coordinate. None when the run exceeds `limit` in
/// either direction (the pattern merged with surrounding dark content).
fn dark_run_center(bin: &BinaryImage, px: i64, py: i64, dx: i64, dy: i64, limit: i64) -> Option<f64> {
    let mut neg = 0i64;
    while neg < limit && bin.dark_at(px - dx * (neg + 1), py - dy * (neg + 1)) {
        neg += 1;
    }
    let mut pos = 0i64;
    while pos < limit && bin.dark_at(px + dx * (pos + 1), py + dy * (pos + 1)) {
        pos += 1;
    }
    if neg >= limit || pos >= limit {
        return None;
    }
    Some((px * dx + py * dy) as f64 + (pos - neg) as f64 / 2.0 + 0.5)
}

/// Pull a template hit to the subpixel center of the alignment pattern's
/// dark middle module. The template search quantizes to whole pixels and
/// its ties resolve toward the (perspective-biased) affine guess; the run
/// midpoints re-center the point on the pattern actually in the image.
fn refine_alignment(bin: &BinaryImage, c: (f64, f64), module_px: f64) -> (f64, f64) {
    let limit = (2.0 * module_px).ceil() as i64;
    let px = c.0.floor() as i64;
    let py = c.1.floor() as i64;
    if !bin.dark_at(px, py) {
        return c;
    }
    let x = dark_run_center(bin, px, py, 1, 0, limit).unwrap_or(c.0);
    let y = dark_run_center(bin, x.floor() as i64, py, 0, 1, limit).unwrap_or(c.1);
    (x, y)
}

/// Sample every module center through the fitted perspective transform.
pub fn sample_grid(bin: &BinaryImage, t: &FinderTriple) -> Result<SampledGrid, ScanError> {
    let l = estimate_dimension(t)?;
    let lf = l as f64;
    let span = lf - 7.0;

    // per-module axes from the finder geometry
    let ex = (
        (t.top_right.0 - t.top_left.0) / span,
        (t.top_right.1 - t.top_left.1) / span,
    );
    let ey = (
        (t.bottom_left.0 - t.top_left.0) / span,
        (t.bottom_left.1 - t.top_left.1) / span,
    );

    // bottom-right control point: the alignment pattern center for symbols
    // that have one, else the extrapolated outer corner
    let (br_module, br_image, alignment_found) = if l >= 25 {
        let steps = lf - 10.0;
        let guess = (
            t.top_left.0 + (ex.0 + ey.0) * steps,
            t.top_left.1 + (ex.1 + ey.1) * steps,
        );
        match find_alignment(bin, guess, ex, ey, t.module_px) {
            Some(c) => ((lf - 6.5, lf - 6.5), c, true),
            None => (
                (lf - 3.5, lf - 3.5),
                (
                    t.top_right.0 + t.bottom_left.0 - t.top_left.0,
                    t.top_right.1 + t.bottom_left.1 - t.top_left.1,
                ),
                false,
            ),
        }
    } else {
        (
            (lf - 3.5, lf - 3.5),
            (
                t.top_right.0 + t.bottom_left.0 - t.top_left.0,
                t.top_right.1 + t.bottom_left.1 - t.top_left.1,
            ),
            false,
        )
    };

    let src = [(3.5, 3.5), (lf - 3.5, 3.5), br_module, (3.5, lf - 3.5)];
    let dst = [t.top_left, t.top_right, br_image, t.bottom_left];
    let h = Homography::quad_to_quad(src, dst);

    let mut dark = vec![false; l * l];
    for r in 0..l {
        for c in 0..l {
            let (x, y) = h.map(c as f64 + 0.5, r as f64 + 0.5);
            if x.is_finite() && y.is_finite() {
                dark[r * l + c] = bin.dark_at(x.floor() as i64, y.floor() as i64);
            }
        }
    }
    Ok(SampledGrid {
        side: l,
        dark,
        alignment_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr_symbol::{encode_symbol, EcLevel, ModuleMatrix, Payload, QrSpec};
    use crate::scanner::{detect_finders, hybrid_binarize};

    fn rendered_binary(version: u8, px: usize) -> (BinaryImage, ModuleMatrix) {
        let spec = QrSpec::new(version, EcLevel::M, 4).unwrap();
        let m = encode_symbol(&Payload::new(b"sampling".as_slice()), &spec).unwrap();
        let img = m.render_gray(px);
        (hybrid_binarize(&img).unwrap(), m)
    }

    #[test]
    fn identity_placement_samples_the_exact_matrix() {
        for (version, px) in [(1u8, 8usize), (2, 8), (6, 5), (10, 4)] {
            let (bin, m) = rendered_binary(version, px);
            let t = detect_finders(&bin).unwrap();
            let g = sample_grid(&bin, &t).unwrap();
            assert_eq!(g.side, m.side(), "v{}", version);
            assert_eq!(g.alignment_found, version >= 2, "v{}", version);
            for r in 0..m.side() {
                for c in 0..m.side() {
                    assert_eq!(g.dark[r * m.side() + c], m.is_dark(r, c), "v{} ({},{})", version, r, c);
                }
            }
        }
    }

    #[test]
    fn doubled_scale_still_samples_exactly() {
        let (bin0, m) = rendered_binary(3, 4);
        drop(bin0);
        let img = m.render_gray(8);
        let up = image::imageops::resize(
            &img,
            img.width() * 2,
            img.height() * 2,
            image::imageops::FilterType::CatmullRom,
        );
        let bin = hybrid_binarize(&up).unwrap();
        let t = detect_finders(&bin).unwrap();
        let g = sample_grid(&bin, &t).unwrap();
        assert_eq!(g.side, m.side());
        for r in 0..m.side() {
            for c in 0..m.side() {
                assert_eq!(g.dark[r * m.side() + c], m.is_dark(r, c), "({},{})", r, c);
            }
        }
    }

    #[test]
    fn affine_homography_is_exact_on_corners_and_center() {
        let src = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
        let dst = [(5.0, 5.0), (25.0, 7.0), (27.0, 29.0), (7.0, 27.0)];
        let h = Homography::quad_to_quad(src, dst);
        for (s, d) in src.iter().zip(dst.iter()) {
            let (x, y) = h.map(s.0, s.1);
            assert!((x - d.0).abs() < 1e-9 && (y - d.1).abs() < 1e-9);
        }
        // a genuinely projective quad maps corners exactly too
        let dst = [(0.0, 0.0), (20.0, 2.0), (18.0, 14.0), (1.0, 12.0)];
        let h = Homography::quad_to_quad(src, dst);
        for (s, d) in src.iter().zip(dst.iter()) {
            let (x, y) = h.map(s.0, s.1);
            assert!((x - d.0).abs() < 1e-9 && (y - d.1).abs() < 1e-9, "{:?}", d);
        }
    }

    #[test]
    fn implausible_spacing_is_rejected() {
        let t = FinderTriple {
            top_left: (50.0, 50.0),
            top_right: (80.0, 50.0),
            bottom_left: (50.0, 80.0),
            module_px: 8.0,
        };
        // spacing of 30px at 8px modules: under 21 modules
        assert!(matches!(
            estimate_dimension(&t),
            Err(ScanError::VersionEstimateFailed)
        ));
    }
}
