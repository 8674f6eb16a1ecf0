//! Procedurally generated 512x512 test images.
//!
//! The benchmark and the end-to-end suites need a small, stable corpus.
//! Shipping binary assets in the repository is avoided by synthesizing the
//! images instead: every generator below is a pure function of pixel
//! coordinates plus a fixed seed, so the corpus is byte-identical across
//! runs and platforms. The set mixes smooth content (gradients, soft
//! blobs) with texture that is hostile to thresholding (fine checkers,
//! noise, halftone dots, stroke patterns) to exercise both ends of the
//! robustness trade-off.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIDE: u32 = 512;

/// Stable identifiers, in corpus order.
pub const IDS: [&str; 10] = [
    "slate", "plasma", "rings", "checker", "noise", "blobs", "strokes", "waves", "vignette",
    "halftone",
];

/// The full corpus as (id, image) pairs.
pub fn corpus() -> Vec<(&'static str, RgbImage)> {
    IDS.iter().map(|&id| (id, generate(id).unwrap())).collect()
}

/// Generate a single corpus image by id.
pub fn generate(id: &str) -> Option<RgbImage> {
    let f = match id {
        "slate" => slate,
        "plasma" => plasma,
        "rings" => rings,
        "checker" => checker,
        "noise" => noise,
        "blobs" => blobs,
        "strokes" => strokes,
        "waves" => waves,
        "vignette" => vignette,
        "halftone" => halftone,
        _ => return None,
    };
    Some(f())
}

fn from_fn(f: impl Fn(f64, f64) -> [f64; 3]) -> RgbImage {
    RgbImage::from_fn(SIDE, SIDE, |x, y| {
        let v = f(x as f64, y as f64);
        Rgb([clamp8(v[0]), clamp8(v[1]), clamp8(v[2])])
    })
}

fn clamp8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Smooth diagonal gradient with a faint color cast.
fn slate() -> RgbImage {
    from_fn(|x, y| {
        let t = (x + y) / (2.0 * (SIDE - 1) as f64);
        let base = 45.0 + 165.0 * t;
        [base + 12.0, base, base - 10.0]
    })
}

/// Three-way sinusoid interference, full-range color.
fn plasma() -> RgbImage {
    from_fn(|x, y| {
        let a = (x / 23.0).sin() + (y / 17.0).sin();
        let b = ((x + y) / 31.0).sin() + ((x - y) / 13.0).cos();
        let c = ((x * x + y * y).sqrt() / 19.0).sin();
        [
            127.5 + 127.5 * (a * 0.5).sin(),
            127.5 + 127.5 * (b * 0.6).cos(),
            127.5 + 127.5 * ((a + b + c) * 0.4).sin(),
        ]
    })
}

/// Concentric rings, high local contrast at a few-pixel scale.
fn rings() -> RgbImage {
    let cx = (SIDE / 2) as f64;
    from_fn(|x, y| {
        let r = ((x - cx).powi(2) + (y - cx).powi(2)).sqrt();
        let v = 127.5 + 110.0 * (r / 6.5).cos();
        [v, v * 0.96 + 8.0, v * 0.9 + 18.0]
    })
}

/// 13-pixel checkerboard; phase drifts so module grids never align with it.
fn checker() -> RgbImage {
    from_fn(|x, y| {
        let warp = 3.0 * (y / 41.0).sin();
        let cell = ((x + warp) / 13.0).floor() + (y / 13.0).floor();
        let on = (cell as i64).rem_euclid(2) == 0;
        if on {
            [235.0, 228.0, 214.0]
        } else {
            [32.0, 38.0, 52.0]
        }
    })
}

/// Seeded uniform per-pixel RGB noise.
fn noise() -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_6973);
    let mut img = RgbImage::new(SIDE, SIDE);
    for y in 0..SIDE {
        for x in 0..SIDE {
            let p: [u8; 3] = [rng.gen(), rng.gen(), rng.gen()];
            img.put_pixel(x, y, Rgb(p));
        }
    }
    img
}

/// Soft elliptical blobs over a gradient ground.
fn blobs() -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(0x626c_6f62);
    let mut spots = Vec::new();
    for _ in 0..40 {
        let cx: f64 = rng.gen_range(0.0..SIDE as f64);
        let cy: f64 = rng.gen_range(0.0..SIDE as f64);
        let rx: f64 = rng.gen_range(14.0..70.0);
        let ry: f64 = rng.gen_range(14.0..70.0);
        let col = [
            rng.gen_range(0.0..255.0),
            rng.gen_range(0.0..255.0),
            rng.gen_range(0.0..255.0),
        ];
        spots.push((cx, cy, rx, ry, col));
    }
    from_fn(move |x, y| {
        let mut v = [
            60.0 + 150.0 * x / SIDE as f64,
            80.0 + 120.0 * y / SIDE as f64,
            120.0,
        ];
        for &(cx, cy, rx, ry, col) in &spots {
            let d = ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2);
            if d < 1.0 {
                let w = (1.0 - d).powi(2);
                for k in 0..3 {
                    v[k] = v[k] * (1.0 - w) + col[k] * w;
                }
            }
        }
        v
    })
}

/// Text-like dark dashes on a paper-white ground.
fn strokes() -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7374_726b);
    let mut dark = vec![false; (SIDE * SIDE) as usize];
    let mut y = 10u32;
    while y + 9 < SIDE {
        let mut x = 8 + rng.gen_range(0..20u32);
        while x + 6 < SIDE - 8 {
            let run = rng.gen_range(8..42u32).min(SIDE - 8 - x);
            for yy in y..y + 9 {
                for xx in x..x + run {
                    dark[(yy * SIDE + xx) as usize] = true;
                }
            }
            x += run + rng.gen_range(5..16u32);
        }
        y += 16;
    }
    RgbImage::from_fn(SIDE, SIDE, |x, y| {
        if dark[(y * SIDE + x) as usize] {
            Rgb([38, 34, 46])
        } else {
            Rgb([244, 241, 232])
        }
    })
}

/// Horizontal luminance bands whose contrast grows left to right.
fn waves() -> RgbImage {
    from_fn(|x, y| {
        let amp = 20.0 + 90.0 * x / SIDE as f64;
        let v = 128.0 + amp * (y / 9.0).sin();
        [v, v, 0.8 * v + 30.0]
    })
}

/// Bright field falling off toward the corners, dark off-center disc.
fn vignette() -> RgbImage {
    let cx = (SIDE / 2) as f64;
    from_fn(|x, y| {
        let r = ((x - cx).powi(2) + (y - cx).powi(2)).sqrt() / cx;
        let mut v = 225.0 - 120.0 * r * r;
        let d = ((x - 330.0).powi(2) + (y - 190.0).powi(2)).sqrt();
        if d < 95.0 {
            v -= 130.0 * (1.0 - d / 95.0);
        }
        [v + 6.0, v, v - 8.0]
    })
}

/// Print-style halftone: dot radius follows a diagonal tone ramp.
fn halftone() -> RgbImage {
    const CELL: f64 = 9.0;
    from_fn(|x, y| {
        let tone = (x + y) / (2.0 * (SIDE - 1) as f64);
        let gx = (x / CELL).floor() * CELL + CELL / 2.0;
        let gy = (y / CELL).floor() * CELL + CELL / 2.0;
        let d = ((x - gx).powi(2) + (y - gy).powi(2)).sqrt();
        let radius = (1.0 - tone) * 0.71 * CELL / 2.0 + 0.8;
        if d < radius {
            [25.0, 22.0, 30.0]
        } else {
            [240.0, 238.0, 230.0]
        }
    })
}
