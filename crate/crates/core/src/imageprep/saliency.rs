//! Histogram-contrast saliency: a pixel is salient when its quantized color
//! is rare relative to the whole image, weighted by color distance.

use image::RgbImage;

const LEVELS: usize = 12;

fn bin_of(p: &image::Rgb<u8>) -> usize {
    let q = |v: u8| (v as usize * LEVELS) / 256;
    (q(p.0[0]) * LEVELS + q(p.0[1])) * LEVELS + q(p.0[2])
}

fn bin_color(bin: usize) -> [f32; 3] {
    let b = bin % LEVELS;
    let g = (bin / LEVELS) % LEVELS;
    let r = bin / (LEVELS * LEVELS);
    let c = |v: usize| (v as f32 + 0.5) * 256.0 / LEVELS as f32;
    [c(r), c(g), c(b)]
}

/// Per-pixel saliency in [0,1] (max-normalized; all zeros for a flat image).
pub fn saliency_map(img: &RgbImage) -> Vec<f32> {
    let n = (img.width() * img.height()) as f32;
    let mut hist = vec![0u32; LEVELS * LEVELS * LEVELS];
    for p in img.pixels() {
        hist[bin_of(p)] += 1;
    }
    let occupied: Vec<usize> = (0..hist.len()).filter(|&b| hist[b] > 0).collect();

    // contrast of each occupied bin against the whole histogram
    let mut contrast = vec![0f32; hist.len()];
    for &b in &occupied {
        let cb = bin_color(b);
        let mut acc = 0.0;
        for &o in &occupied {
            if o == b {
                continue;
            }
            let co = bin_color(o);
            let d = ((cb[0] - co[0]).powi(2) + (cb[1] - co[1]).powi(2) + (cb[2] - co[2]).powi(2))
                .sqrt();
            acc += hist[o] as f32 / n * d;
        }
        contrast[b] = acc;
    }
    let peak = contrast.iter().fold(0f32, |m, &v| m.max(v));
    let mut out = Vec::with_capacity(img.pixels().len());
    for p in img.pixels() {
        let v = contrast[bin_of(p)];
        out.push(if peak > 0.0 { v / peak } else { 0.0 });
    }
    out
}
