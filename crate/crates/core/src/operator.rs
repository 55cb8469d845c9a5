//! Matrix-free homogeneous diffusion inpainting operator `A = C - (I - C) L`.
//!
//! `L` is the 5-point Laplacian with grid spacing 1. Reflecting boundaries
//! replace an out-of-image neighbour by the centre value, so an unknown row
//! reads `deg(p) * u_p - sum of in-image neighbours`, where `deg(p)` counts
//! the neighbours inside the image. Known rows are identity rows.

use rayon::prelude::*;

use crate::error::Result;
use crate::image::{ChannelVector, InpaintingMask};

#[derive(Debug, Clone, Copy)]
pub struct InpaintingOperator<'a> {
    mask: &'a InpaintingMask,
}

impl<'a> InpaintingOperator<'a> {
    pub fn new(mask: &'a InpaintingMask) -> Self {
        Self { mask }
    }

    pub fn mask(&self) -> &'a InpaintingMask {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// Returns `A u`.
    pub fn apply(&self, u: &[f64]) -> Result<ChannelVector> {
        self.mask.check_len(u.len())?;
        let mut out = vec![0.0; u.len()];
        let w = self.mask.width();
        out.par_chunks_mut(w)
            .enumerate()
            .for_each(|(y, row)| self.apply_row(y, u, row));
        Ok(out)
    }

    /// Returns `b - A u`.
    pub fn residual(&self, u: &[f64], b: &[f64]) -> Result<ChannelVector> {
        self.mask.check_len(u.len())?;
        self.mask.check_len(b.len())?;
        let mut out = vec![0.0; u.len()];
        self.residual_into(u, b, &mut out);
        Ok(out)
    }

    /// Writes `b - A u` into `out`. Lengths must already agree with the mask.
    pub fn residual_into(&self, u: &[f64], b: &[f64], out: &mut [f64]) {
        let w = self.mask.width();
        out.par_chunks_mut(w)
            .zip(b.par_chunks(w))
            .enumerate()
            .for_each(|(y, (row, brow))| {
                self.apply_row(y, u, row);
                row.iter_mut().zip(brow).for_each(|(o, bi)| *o = bi - *o);
            });
    }

    // Row y of A u. An out-of-image neighbour reflects to the centre value,
    // so every unknown row reads 4 u_p minus four (possibly mirrored)
    // neighbours.
    fn apply_row(&self, y: usize, u: &[f64], out: &mut [f64]) {
        let w = self.mask.width();
        let h = self.mask.height();
        let base = y * w;
        let c = &u[base..base + w];
        let up = if y > 0 { &u[base - w..base] } else { c };
        let down = if y + 1 < h { &u[base + w..base + 2 * w] } else { c };
        let known = &self.mask.known()[base..base + w];
        let point = |x: usize, left: f64, right: f64| {
            if known[x] {
                c[x]
            } else {
                4.0 * c[x] - ((left + right) + (up[x] + down[x]))
            }
        };
        if w == 1 {
            out[0] = point(0, c[0], c[0]);
            return;
        }
        out[0] = point(0, c[0], c[1]);
        out[w - 1] = point(w - 1, c[w - 2], c[w - 1]);
        let inner = out[1..w - 1]
            .iter_mut()
            .zip(&known[1..w - 1])
            .zip(c[1..w - 1].iter().zip(&c[..w - 2]).zip(&c[2..]))
            .zip(up[1..w - 1].iter().zip(&down[1..w - 1]));
        for (((o, &k), ((&cc, &l), &r)), (&uu, &d)) in inner {
            let v = 4.0 * cc - ((l + r) + (uu + d));
            *o = if k { cc } else { v };
        }
    }
}

/// Right-hand side `b = C f`: `f` at known pixels, zero elsewhere.
pub fn build_rhs(f: &[f64], mask: &InpaintingMask) -> Result<ChannelVector> {
    mask.check_len(f.len())?;
    Ok(f.iter()
        .zip(mask.known())
        .map(|(&v, &k)| if k { v } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_maps_to_value_on_known_and_zero_elsewhere() {
        let mask = InpaintingMask::from_points(5, 4, &[(1, 1), (4, 3)]).unwrap();
        let op = InpaintingOperator::new(&mask);
        let au = op.apply(&[0.37; 20]).unwrap();
        for (i, v) in au.iter().enumerate() {
            if mask.is_known(i) {
                assert_eq!(*v, 0.37);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn single_known_pixel_is_identity() {
        let mask = InpaintingMask::full(1, 1).unwrap();
        let op = InpaintingOperator::new(&mask);
        assert_eq!(op.apply(&[0.7]).unwrap(), vec![0.7]);
    }

    #[test]
    fn centre_unknown_on_3x3() {
        let mut known = vec![true; 9];
        known[4] = false;
        let mask = InpaintingMask::new(3, 3, known).unwrap();
        let op = InpaintingOperator::new(&mask);
        let mut u = vec![0.0; 9];
        u[4] = 1.0;
        let au = op.apply(&u).unwrap();
        assert_eq!(au[4], 4.0);
        for n in [1, 3, 5, 7] {
            assert_eq!(au[n], 0.0);
        }
    }

    #[test]
    fn rhs_keeps_known_values_only() {
        let mask = InpaintingMask::from_points(2, 2, &[(0, 0)]).unwrap();
        let b = build_rhs(&[0.5, 0.1, 0.2, 0.9], &mask).unwrap();
        assert_eq!(b, vec![0.5, 0.0, 0.0, 0.0]);
        let full = InpaintingMask::full(2, 2).unwrap();
        assert_eq!(build_rhs(&[0.5, 0.1, 0.2, 0.9], &full).unwrap(), vec![0.5, 0.1, 0.2, 0.9]);
    }

    #[test]
    fn residual_of_zero_is_rhs() {
        let mask = InpaintingMask::from_points(3, 2, &[(2, 1)]).unwrap();
        let op = InpaintingOperator::new(&mask);
        let b = build_rhs(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], &mask).unwrap();
        assert_eq!(op.residual(&[0.0; 6], &b).unwrap(), b);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mask = InpaintingMask::full(2, 2).unwrap();
        let op = InpaintingOperator::new(&mask);
        assert!(op.apply(&[0.0; 3]).is_err());
        assert!(build_rhs(&[0.0; 5], &mask).is_err());
        assert!(op.residual(&[0.0; 4], &[0.0; 2]).is_err());
    }
}
