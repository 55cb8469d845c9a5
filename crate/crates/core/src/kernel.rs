//! Single-precision conjugate gradients for block problems.
//!
//! Blocks are stored with a one-pixel ring of zeros so the 5-point stencil is
//! one branch-free sweep over 8-wide vectors. Lane sums are reduced in a fixed
//! order, so results do not depend on the instruction set.

use wide::f32x8;

use crate::image::InpaintingMask;
use crate::schwarz::Rect;

const LANES: usize = 8;

// `n` consecutive lane groups starting at element `from`
#[inline(always)]
fn lanes(s: &[f32], from: usize, n: usize) -> &[[f32; LANES]] {
    s[from..from + n * LANES].as_chunks().0
}

#[inline(always)]
fn lanes_mut(s: &mut [f32], from: usize, n: usize) -> &mut [[f32; LANES]] {
    s[from..from + n * LANES].as_chunks_mut().0
}

#[inline(always)]
fn hsum(v: f32x8) -> f32 {
    let a = v.to_array();
    ((a[0] + a[4]) + (a[1] + a[5])) + ((a[2] + a[6]) + (a[3] + a[7]))
}

/// A block operator in padded layout.
#[derive(Debug, Clone, Default)]
pub(crate) struct BlockCg {
    width: usize,
    height: usize,
    stride: usize,
    diag: Vec<f32>,
    active: Vec<f32>,
}

/// Padded work vectors; `x` holds the solution after [`BlockCg::solve`].
#[derive(Debug, Default)]
pub(crate) struct BlockScratch {
    pub x: Vec<f32>,
    r: Vec<f32>,
    p: Vec<f32>,
    q: Vec<f32>,
    // residual at known pixels, zero elsewhere
    known_r: Vec<f64>,
    shape: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BlockReport {
    pub iterations: usize,
    pub converged: bool,
}

impl BlockCg {
    /// Assembles the reduced local operator of `block` in place: unknown
    /// pixels get their global degree, plus `shift` per cut edge to an unknown
    /// pixel outside the block.
    pub fn assemble(&mut self, mask: &InpaintingMask, block: Rect, shift: f64) {
        self.resize(block.w, block.h);
        let (w, h) = (mask.width(), mask.height());
        let known = mask.known();
        for ly in 0..block.h {
            let y = block.y0 + ly;
            let g0 = y * w + block.x0;
            let p0 = self.index(0, ly);
            let vertical = f32::from(u8::from(y > 0) + u8::from(y + 1 < h));
            let row = self.diag[p0..p0 + block.w]
                .iter_mut()
                .zip(&mut self.active[p0..p0 + block.w])
                .zip(&known[g0..g0 + block.w])
                .enumerate();
            for (lx, ((d, a), &k)) in row {
                let x = block.x0 + lx;
                let deg = vertical + f32::from(u8::from(x > 0) + u8::from(x + 1 < w));
                *d = if k { 0.0 } else { deg };
                *a = if k { 0.0 } else { 1.0 };
            }
        }
        if shift == 0.0 {
            return;
        }
        // Robin rows along the block perimeter
        let cut_edge = |lx: usize, ly: usize| {
            let (x, y) = (block.x0 + lx, block.y0 + ly);
            let g = y * w + x;
            if known[g] {
                return None;
            }
            let deg = [x > 0, x + 1 < w, y > 0, y + 1 < h].into_iter().filter(|&b| b).count();
            let cut = [
                lx == 0 && x > 0 && !known[g - 1],
                lx + 1 == block.w && x + 1 < w && !known[g + 1],
                ly == 0 && y > 0 && !known[g - w],
                ly + 1 == block.h && y + 1 < h && !known[g + w],
            ]
            .into_iter()
            .filter(|&b| b)
            .count();
            Some(deg as f64 + shift * cut as f64)
        };
        let perimeter = (0..block.w)
            .flat_map(|lx| [(lx, 0), (lx, block.h - 1)])
            .chain((1..block.h.saturating_sub(1)).flat_map(|ly| [(0, ly), (block.w - 1, ly)]));
        for (lx, ly) in perimeter {
            if let Some(d) = cut_edge(lx, ly) {
                let pi = self.index(lx, ly);
                self.diag[pi] = d as f32;
            }
        }
    }

    fn resize(&mut self, w: usize, h: usize) {
        self.width = w;
        self.height = h;
        self.stride = w + 2;
        // slack so the last vector of the sweep stays in bounds
        let len = self.stride * (h + 2) + LANES;
        if self.diag.len() != len {
            self.diag.clear();
            self.diag.resize(len, 0.0);
            self.active.clear();
            self.active.resize(len, 0.0);
        }
    }

    #[cfg(test)]
    fn is_active(&self, pi: usize) -> bool {
        self.active[pi] != 0.0
    }

    /// Padded index of block pixel `(x, y)`.
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y + 1) * self.stride + x + 1
    }

    /// Readies `scratch` for a solve: the iterate is zeroed, the padding
    /// ring stays zero.
    pub fn prepare(&self, scratch: &mut BlockScratch) {
        let shape = (self.width, self.height);
        if scratch.shape != shape {
            let n = self.diag.len();
            for v in [&mut scratch.x, &mut scratch.r, &mut scratch.p, &mut scratch.q] {
                v.clear();
                v.resize(n, 0.0);
            }
            scratch.known_r.clear();
            scratch.known_r.resize(n, 0.0);
            scratch.shape = shape;
        } else {
            scratch.x.fill(0.0);
        }
    }

    /// Right-hand side of the reduced local problem from the global residual
    /// `r` (image width `w`): known pixels inside the block are eliminated
    /// rows whose correction equals their residual.
    pub fn gather(&self, scratch: &mut BlockScratch, r: &[f64], known: &[bool], w: usize, block: Rect) {
        let bw = block.w;
        for ly in 0..block.h {
            let g0 = (block.y0 + ly) * w + block.x0;
            let p0 = self.index(0, ly);
            scratch.known_r[p0..p0 + bw]
                .iter_mut()
                .zip(&r[g0..g0 + bw])
                .zip(&known[g0..g0 + bw])
                .for_each(|((t, &v), &k)| *t = if k { v } else { 0.0 });
        }
        let s = self.stride;
        let t = &scratch.known_r;
        for ly in 0..block.h {
            let g0 = (block.y0 + ly) * w + block.x0;
            let p0 = self.index(0, ly);
            let (west, east) = (&t[p0 - 1..p0 - 1 + bw], &t[p0 + 1..p0 + 1 + bw]);
            let (north, south) = (&t[p0 - s..p0 - s + bw], &t[p0 + s..p0 + s + bw]);
            let row = scratch.r[p0..p0 + bw]
                .iter_mut()
                .zip(&self.active[p0..p0 + bw])
                .zip(&r[g0..g0 + bw])
                .zip(west.iter().zip(east))
                .zip(north.iter().zip(south));
            for ((((dst, &a), &v), (&l, &e)), (&u, &d)) in row {
                *dst = if a != 0.0 { (v + ((l + e) + (u + d))) as f32 } else { 0.0 };
            }
        }
    }

    /// Appends the correction on `owned` to `out`: the solution at unknown
    /// pixels, the residual at known ones.
    #[allow(clippy::too_many_arguments)]
    pub fn scatter(
        &self,
        scratch: &BlockScratch,
        r: &[f64],
        known: &[bool],
        w: usize,
        block: Rect,
        owned: Rect,
        out: &mut Vec<f64>,
    ) {
        for y in owned.y0..owned.y0 + owned.h {
            let g0 = y * w + owned.x0;
            let p0 = self.index(owned.x0 - block.x0, y - block.y0);
            let vals = scratch.x[p0..p0 + owned.w]
                .iter()
                .zip(&r[g0..g0 + owned.w])
                .zip(&known[g0..g0 + owned.w])
                .map(|((&x, &v), &k)| if k { v } else { f64::from(x) });
            out.extend(vals);
        }
    }

    /// CG from a zero guess on the right-hand side held in `scratch.r`, until
    /// the recurrence residual drops by `tolerance` or `max_iterations`.
    pub fn solve(&self, scratch: &mut BlockScratch, tolerance: f64, max_iterations: usize) -> BlockReport {
        let s = self.stride;
        let lo = s;
        let n = (s * self.height).div_ceil(LANES);
        let BlockScratch { x, r, p, q, .. } = scratch;
        let active = lanes(&self.active, lo, n);
        let diag = lanes(&self.diag, lo, n);

        p.copy_from_slice(r);
        let mut rr = hsum(lanes(r, lo, n).iter().fold(f32x8::ZERO, |acc, &v| {
            let v = f32x8::from(v);
            acc + v * v
        }));
        if rr == 0.0 {
            return BlockReport {
                iterations: 0,
                converged: true,
            };
        }
        let target = (tolerance * tolerance) as f32 * rr;
        let mut iterations = 0;
        while iterations < max_iterations {
            let mut acc = f32x8::ZERO;
            {
                let (west, east) = (lanes(p, lo - 1, n), lanes(p, lo + 1, n));
                let (north, south) = (lanes(p, lo - s, n), lanes(p, lo + s, n));
                let centre = lanes(p, lo, n);
                let out = lanes_mut(q, lo, n);
                for k in 0..n {
                    let c = f32x8::from(centre[k]);
                    let around = (f32x8::from(west[k]) + f32x8::from(east[k]))
                        + (f32x8::from(north[k]) + f32x8::from(south[k]));
                    let v = f32x8::from(active[k]) * (f32x8::from(diag[k]) * c - around);
                    out[k] = v.to_array();
                    acc += c * v;
                }
            }
            let pq = hsum(acc);
            if !(pq > 0.0) || !pq.is_finite() {
                break;
            }
            let alpha = f32x8::splat(rr / pq);
            let mut acc = f32x8::ZERO;
            for (((xv, rv), pv), qv) in lanes_mut(x, lo, n)
                .iter_mut()
                .zip(lanes_mut(r, lo, n).iter_mut())
                .zip(lanes(p, lo, n))
                .zip(lanes(q, lo, n))
            {
                *xv = (f32x8::from(*xv) + alpha * f32x8::from(*pv)).to_array();
                let rn = f32x8::from(*rv) - alpha * f32x8::from(*qv);
                *rv = rn.to_array();
                acc += rn * rn;
            }
            let rr_new = hsum(acc);
            iterations += 1;
            if rr_new <= target {
                rr = rr_new;
                break;
            }
            let beta = f32x8::splat(rr_new / rr);
            for (pv, rv) in lanes_mut(p, lo, n).iter_mut().zip(lanes(r, lo, n)) {
                *pv = (f32x8::from(*rv) + beta * f32x8::from(*pv)).to_array();
            }
            rr = rr_new;
        }
        BlockReport {
            iterations,
            converged: rr <= target,
        }
    }
}
