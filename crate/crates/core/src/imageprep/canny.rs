//! Canny edge detector: separable Gaussian blur, Sobel gradients,
//! non-maximum suppression, two-threshold hysteresis.

use image::GrayImage;

const BLUR_SIGMA: f32 = 1.4;
const LOW: f32 = 50.0;
const HIGH: f32 = 150.0;

fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i32;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|i| (-((i * i) as f32) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn blur(gray: &GrayImage) -> Vec<f32> {
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let k = gaussian_kernel(BLUR_SIGMA);
    let radius = (k.len() / 2) as i32;
    let clamp_x = |x: i32| x.clamp(0, w as i32 - 1) as usize;
    let clamp_y = |y: i32| y.clamp(0, h as i32 - 1) as usize;

    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let sx = clamp_x(x as i32 + i as i32 - radius);
                acc += kv * gray.get_pixel(sx as u32, y as u32).0[0] as f32;
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let sy = clamp_y(y as i32 + i as i32 - radius);
                acc += kv * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Binary edge map, true where a Canny edge survives hysteresis.
pub fn canny_edges(gray: &GrayImage) -> Vec<bool> {
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    if w < 3 || h < 3 {
        return vec![false; w * h];
    }
    let smooth = blur(gray);
    let at = |x: usize, y: usize| smooth[y * w + x];

    let mut mag = vec![0f32; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1);
            mag[y * w + x] = (gx * gx + gy * gy).sqrt();
            // quantize the gradient angle to 0, 45, 90, 135 degrees
            let angle = gy.atan2(gx).to_degrees();
            let a = if angle < 0.0 { angle + 180.0 } else { angle };
            dir[y * w + x] = if !(22.5..157.5).contains(&a) {
                0
            } else if a < 67.5 {
                1
            } else if a < 112.5 {
                2
            } else {
                3
            };
        }
    }

    // non-maximum suppression along the gradient direction
    let mut thin = vec![0f32; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let m = mag[y * w + x];
            let (d1, d2) = match dir[y * w + x] {
                0 => (mag[y * w + x - 1], mag[y * w + x + 1]),
                1 => (mag[(y - 1) * w + x + 1], mag[(y + 1) * w + x - 1]),
                2 => (mag[(y - 1) * w + x], mag[(y + 1) * w + x]),
                _ => (mag[(y - 1) * w + x - 1], mag[(y + 1) * w + x + 1]),
            };
            if m >= d1 && m >= d2 {
                thin[y * w + x] = m;
            }
        }
    }

    // hysteresis: flood from strong pixels through weak ones
    let state: Vec<u8> = thin
        .iter()
        .map(|&m| if m >= HIGH { 2 } else if m >= LOW { 1 } else { 0 })
        .collect();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if state[y * w + x] == 2 {
                stack.push((x, y));
            }
        }
    }
    let mut edges = vec![false; w * h];
    while let Some((x, y)) = stack.pop() {
        if edges[y * w + x] {
            continue;
        }
        edges[y * w + x] = true;
        for dy in -1i32..=1 {
            for dx in -1i32..=1 {
                let nx = x as i32 + dx;
                let ny = y as i32 + dy;
                if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
                    continue;
                }
                let ni = ny as usize * w + nx as usize;
                if state[ni] >= 1 && !edges[ni] {
                    stack.push((nx as usize, ny as usize));
                }
            }
        }
    }
    edges
}
