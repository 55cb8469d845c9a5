//! Vector kernels with a fixed summation order.
//!
//! Long vectors are reduced in fixed-size chunks whose partial sums are added
//! left to right, so results are bitwise identical for any worker count.

use rayon::prelude::*;

pub(crate) const CHUNK: usize = 1 << 14;

fn dot_seq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= CHUNK {
        return dot_seq(a, b);
    }
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| dot_seq(x, y))
        .collect();
    partial.iter().sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if y.len() <= CHUNK {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
    } else {
        y.par_chunks_mut(CHUNK)
            .zip(x.par_chunks(CHUNK))
            .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(yi, xi)| *yi += alpha * xi));
    }
}

/// `y = x + beta * y`
pub fn xpby(x: &[f64], beta: f64, y: &mut [f64]) {
    if y.len() <= CHUNK {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi = xi + beta * *yi);
    } else {
        y.par_chunks_mut(CHUNK)
            .zip(x.par_chunks(CHUNK))
            .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(yi, xi)| *yi = xi + beta * *yi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..CHUNK * 3 + 17).map(|i| (i % 7) as f64 * 0.5).collect();
        let b: Vec<f64> = (0..a.len()).map(|i| (i % 5) as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() <= 1e-9 * naive.abs());
    }

    #[test]
    fn dot_is_thread_count_independent() {
        let a: Vec<f64> = (0..CHUNK * 5 + 3).map(|i| ((i * 7919) % 1000) as f64 / 997.0).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let d1 = one.install(|| dot(&a, &a));
        let d4 = four.install(|| dot(&a, &a));
        assert_eq!(d1.to_bits(), d4.to_bits());
    }
}
