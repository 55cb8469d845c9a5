//! Procedural test images with smooth shading, sharp edges and texture.
//!
//! Content is defined in normalised coordinates, so the same seed renders the
//! same scene at any resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::image::ImageBuffer;

struct Blob {
    cx: f64,
    cy: f64,
    inv_two_sigma2: f64,
    amp: [f64; 3],
}

struct Disc {
    cx: f64,
    cy: f64,
    r2: f64,
    colour: [f64; 3],
}

struct Stripes {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    freq: f64,
    angle: f64,
}

/// Renders a `width x height` scene with 1 or 3 channels, values in `[0, 1]`.
pub fn natural_image(width: usize, height: usize, channels: usize, seed: u64) -> Result<ImageBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colour = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> [f64; 3] {
        [rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi)]
    };
    let waves: Vec<[f64; 4]> = (0..3)
        .map(|_| {
            [
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.08..0.18),
            ]
        })
        .collect();
    let blobs: Vec<Blob> = (0..6)
        .map(|_| {
            let sigma: f64 = rng.gen_range(0.05..0.2);
            Blob {
                cx: rng.gen_range(0.0..1.0),
                cy: rng.gen_range(0.0..1.0),
                inv_two_sigma2: 1.0 / (2.0 * sigma * sigma),
                amp: colour(&mut rng, -0.25, 0.25),
            }
        })
        .collect();
    let discs: Vec<Disc> = (0..4)
        .map(|_| {
            let r: f64 = rng.gen_range(0.05..0.14);
            Disc {
                cx: rng.gen_range(0.1..0.9),
                cy: rng.gen_range(0.1..0.9),
                r2: r * r,
                colour: colour(&mut rng, 0.05, 0.95),
            }
        })
        .collect();
    let rects: Vec<([f64; 4], [f64; 3])> = (0..2)
        .map(|_| {
            let x0 = rng.gen_range(0.0..0.7);
            let y0 = rng.gen_range(0.0..0.7);
            let bounds = [x0, y0, x0 + rng.gen_range(0.1..0.3), y0 + rng.gen_range(0.1..0.3)];
            (bounds, colour(&mut rng, 0.05, 0.95))
        })
        .collect();
    let stripes = Stripes {
        cx: rng.gen_range(0.3..0.7),
        cy: rng.gen_range(0.3..0.7),
        rx: rng.gen_range(0.12..0.2),
        ry: rng.gen_range(0.12..0.2),
        freq: rng.gen_range(25.0..40.0),
        angle: rng.gen_range(0.0..std::f64::consts::PI),
    };
    let noise_seed: u64 = rng.gen();

    let n = width * height;
    let mut data = vec![0.0; n * channels];
    let (sa, ca) = stripes.angle.sin_cos();
    for y in 0..height {
        let v = (y as f64 + 0.5) / height as f64;
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let mut px = [0.0; 3];
            for (c, val) in px.iter_mut().enumerate() {
                let [a, b, phase, amp] = waves[c];
                *val = 0.5 + amp * (std::f64::consts::TAU * (a * u + b * v) + phase).sin();
            }
            for blob in &blobs {
                let d2 = (u - blob.cx).powi(2) + (v - blob.cy).powi(2);
                let g = (-d2 * blob.inv_two_sigma2).exp();
                for c in 0..3 {
                    px[c] += blob.amp[c] * g;
                }
            }
            for &(r, col) in &rects {
                if u >= r[0] && u < r[2] && v >= r[1] && v < r[3] {
                    for c in 0..3 {
                        px[c] = 0.3 * px[c] + 0.7 * col[c];
                    }
                }
            }
            for d in &discs {
                if (u - d.cx).powi(2) + (v - d.cy).powi(2) < d.r2 {
                    for c in 0..3 {
                        px[c] = 0.25 * px[c] + 0.75 * d.colour[c];
                    }
                }
            }
            let e = ((u - stripes.cx) / stripes.rx).powi(2) + ((v - stripes.cy) / stripes.ry).powi(2);
            if e < 1.0 {
                let t = (std::f64::consts::TAU * stripes.freq * (ca * u + sa * v)).sin();
                for val in px.iter_mut() {
                    *val += 0.15 * t;
                }
            }
            let grain = hash_unit(noise_seed, (y * width + x) as u64) - 0.5;
            let p = y * width + x;
            if channels == 1 {
                let luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
                data[p] = (luma + 0.03 * grain).clamp(0.0, 1.0);
            } else {
                for c in 0..3 {
                    data[c * n + p] = (px[c] + 0.03 * grain).clamp(0.0, 1.0);
                }
            }
        }
    }
    ImageBuffer::new(width, height, channels, data)
}

// splitmix64 finaliser mapped to [0, 1)
fn hash_unit(seed: u64, i: u64) -> f64 {
    let mut z = seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}
