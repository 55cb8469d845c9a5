//! Shared helpers: a dense Gaussian-elimination oracle and small random
//! problems.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use schwarz_inpaint::io::decode_pbm;
use schwarz_inpaint::{ImageBuffer, InpaintingMask};

/// Row-major dense matrix of the inpainting system for one channel: identity
/// rows at known pixels, `deg * u_i - sum of in-image neighbours` elsewhere.
pub fn dense_system(mask: &InpaintingMask) -> Vec<Vec<f64>> {
    let (w, h) = (mask.width(), mask.height());
    let n = w * h;
    let mut a = vec![vec![0.0; n]; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if mask.is_known(i) {
                a[i][i] = 1.0;
                continue;
            }
            let mut nbrs = Vec::new();
            if x > 0 {
                nbrs.push(i - 1);
            }
            if x + 1 < w {
                nbrs.push(i + 1);
            }
            if y > 0 {
                nbrs.push(i - w);
            }
            if y + 1 < h {
                nbrs.push(i + w);
            }
            a[i][i] = nbrs.len() as f64;
            for j in nbrs {
                a[i][j] = -1.0;
            }
        }
    }
    a
}

pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(a, x)| a * x).sum()).collect()
}

/// Gaussian elimination with partial pivoting; zero multipliers are skipped
/// so banded systems stay cheap.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        assert!(a[p][k].abs() > 1e-14, "singular matrix at column {k}");
        a.swap(k, p);
        b.swap(k, p);
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot = &top[k];
        for (off, row) in rest.iter_mut().enumerate() {
            let m = row[k] / pivot[k];
            if m == 0.0 {
                continue;
            }
            for j in k..n {
                row[j] -= m * pivot[j];
            }
            b[k + 1 + off] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Dense reconstruction of every channel of `f` from the known pixels.
pub fn dense_inpaint(f: &ImageBuffer, mask: &InpaintingMask) -> ImageBuffer {
    let a = dense_system(mask);
    let planes = (0..f.channels())
        .map(|c| {
            let b = f
                .channel(c)
                .iter()
                .zip(mask.known())
                .map(|(&v, &k)| if k { v } else { 0.0 })
                .collect();
            dense_solve(a.clone(), b)
        })
        .collect();
    ImageBuffer::from_channels(f.width(), f.height(), planes).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Image with values from a small deterministic generator.
pub fn noise_image(w: usize, h: usize, channels: usize, seed: u64) -> ImageBuffer {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let data = (0..w * h * channels)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    ImageBuffer::new(w, h, channels, data).unwrap()
}

/// Random mask with at least one known pixel.
pub fn mask(w: usize, h: usize, density: f64, seed: u64) -> InpaintingMask {
    let d = density.max(1.0 / (w * h) as f64).min(1.0);
    schwarz_inpaint::masks::random_mask(w, h, d, seed).unwrap()
}

pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}

/// A conforming Netpbm file: `P5`, `P6` or `P4` with canonical header and
/// zero row padding.
pub fn corpus_file(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let (w, h) = (rng.gen_range(1..70usize), rng.gen_range(1..50usize));
    match rng.gen_range(0..3) {
        0 | 1 => {
            let channels = if rng.gen_bool(0.5) { 1 } else { 3 };
            let magic = if channels == 1 { "P5" } else { "P6" };
            let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
            out.extend((0..w * h * channels).map(|_| rng.gen::<u8>()));
            out
        }
        _ => {
            let stride = w.div_ceil(8);
            let mut out = format!("P4\n{w} {h}\n").into_bytes();
            for _ in 0..h {
                let mut row: Vec<u8> = (0..stride).map(|_| rng.gen()).collect();
                if w % 8 != 0 {
                    row[stride - 1] &= 0xffu8 << (8 - w % 8);
                }
                out.extend(row);
            }
            // an all-unknown mask is not a valid inpainting mask
            if decode_pbm(&out).is_err() {
                let at = out.len() - h * stride;
                out[at] |= 0x80;
            }
            out
        }
    }
}
