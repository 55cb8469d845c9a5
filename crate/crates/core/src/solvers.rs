//! Conjugate gradients and the reduced (unknown-pixel) form of the inpainting
//! system it runs on.
//!
//! The full operator `A` is not symmetric: known rows are identity rows while
//! unknown rows couple to known neighbours. Eliminating the known pixels
//! (`u_i = f_i`) and moving their couplings to the right-hand side leaves the
//! Dirichlet Laplacian on the unknown pixels, which is symmetric positive
//! definite whenever every connected group of unknowns touches a known pixel.
//!
//! Reduced vectors are stored embedded in the pixel grid: entries at
//! eliminated pixels are held at zero and [`ReducedSystem::index_map`] lists
//! the unknown pixels in compressed order.


use rayon::prelude::*;

use crate::error::{InpaintError, Result};
use crate::image::InpaintingMask;
use crate::linalg::{axpy, dot, norm2, xpby, CHUNK};
use crate::operator::InpaintingOperator;

/// A square linear operator acting on vectors of length [`dim`](Self::dim).
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Identity operator, mostly useful for tests.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Target for `||b - A x|| / ||b - A x0||`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Replace the recurrence residual by `b - A x` every this many
    /// iterations; 0 never recomputes.
    pub residual_check_interval: usize,
}

impl SolverConfig {
    pub fn new(tolerance: f64, max_iterations: usize) -> Result<Self> {
        let cfg = Self {
            tolerance,
            max_iterations,
            residual_check_interval: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loose local-solve defaults for Schwarz subdomains: relative 1e-2 or
    /// 30 iterations.
    pub fn local_default() -> Self {
        Self {
            tolerance: 1e-2,
            max_iterations: 30,
            residual_check_interval: 0,
        }
    }

    pub fn with_check_interval(mut self, interval: usize) -> Self {
        self.residual_check_interval = interval;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(InpaintError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(InpaintError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 10_000,
            residual_check_interval: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Set when a non-positive curvature `p.Ap <= 0` stopped the iteration.
    pub breakdown: bool,
}

/// Outcome of a single CG step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStep {
    Advanced,
    Breakdown,
}

/// Work vectors of a CG run; reusable across solves of equal dimension.
#[derive(Debug, Default)]
pub struct CgBuffers {
    pub x: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl CgBuffers {
    pub fn zeroed(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            r: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    /// Resizes to `n` and zeroes the iterate.
    pub fn reset(&mut self, n: usize) {
        for v in [&mut self.x, &mut self.r, &mut self.p, &mut self.q] {
            v.clear();
            v.resize(n, 0.0);
        }
    }
}

/// Conjugate-gradient iteration exposed step by step, so drivers can trace
/// or interleave several systems.
pub struct ConjugateGradient<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    b: &'a [f64],
    bufs: CgBuffers,
    rr: f64,
    iterations: usize,
}

impl<'a, A: LinearOperator + ?Sized> ConjugateGradient<'a, A> {
    pub fn new(op: &'a A, b: &'a [f64], x0: &[f64]) -> Result<Self> {
        let n = op.dim();
        if b.len() != n {
            return Err(InpaintError::dims(n, b.len()));
        }
        if x0.len() != n {
            return Err(InpaintError::dims(n, x0.len()));
        }
        let mut bufs = CgBuffers::zeroed(n);
        bufs.x.copy_from_slice(x0);
        Ok(Self::from_buffers(op, b, bufs))
    }

    /// Starts from `bufs.x`; the other buffers are overwritten.
    pub fn from_buffers(op: &'a A, b: &'a [f64], mut bufs: CgBuffers) -> Self {
        if bufs.x.iter().all(|&v| v == 0.0) {
            bufs.r.copy_from_slice(b);
        } else {
            op.apply(&bufs.x, &mut bufs.q);
            residual_from(b, &bufs.q, &mut bufs.r);
        }
        bufs.p.copy_from_slice(&bufs.r);
        let rr = dot(&bufs.r, &bufs.r);
        Self {
            op,
            b,
            bufs,
            rr,
            iterations: 0,
        }
    }

    pub fn into_buffers(self) -> CgBuffers {
        self.bufs
    }

    pub fn solution(&self) -> &[f64] {
        &self.bufs.x
    }

    pub fn into_solution(self) -> Vec<f64> {
        self.bufs.x
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Norm of the current (recurrence or refreshed) residual.
    pub fn residual_norm(&self) -> f64 {
        self.rr.sqrt()
    }

    pub fn step(&mut self) -> CgStep {
        let CgBuffers { x, r, p, q } = &mut self.bufs;
        self.op.apply(p, q);
        let pq = dot(p, q);
        if !(pq > 0.0) || !pq.is_finite() {
            return CgStep::Breakdown;
        }
        let alpha = self.rr / pq;
        axpy(alpha, p, x);
        axpy(-alpha, q, r);
        let rr_new = dot(r, r);
        let beta = rr_new / self.rr;
        xpby(r, beta, p);
        self.rr = rr_new;
        self.iterations += 1;
        CgStep::Advanced
    }

    /// Replaces the recurrence residual by the true residual `b - A x`.
    pub fn refresh_residual(&mut self) {
        let CgBuffers { x, r, q, .. } = &mut self.bufs;
        self.op.apply(x, q);
        residual_from(self.b, q, r);
        self.rr = dot(r, r);
    }
}

fn residual_from(b: &[f64], ax: &[f64], r: &mut [f64]) {
    r.iter_mut()
        .zip(b.iter().zip(ax))
        .for_each(|(ri, (bi, ai))| *ri = bi - ai);
}

/// Runs CG until `||b - A x|| <= tolerance * ||b - A x0||` or the iteration cap.
///
/// Breakdown (`p.Ap <= 0`) ends the run with `converged = false` and
/// `breakdown = true`; it is not an error.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[f64],
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let mut cg = ConjugateGradient::new(op, b, x0)?;
    let report = run_cg(&mut cg, cfg);
    Ok((cg.into_solution(), report))
}

pub(crate) fn run_cg<A: LinearOperator + ?Sized>(
    cg: &mut ConjugateGradient<'_, A>,
    cfg: &SolverConfig,
) -> SolveReport {
    let r0 = cg.residual_norm();
    if r0 == 0.0 {
        return SolveReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
            breakdown: false,
        };
    }
    let target = cfg.tolerance * r0;
    let check = cfg.residual_check_interval;
    let mut breakdown = false;
    while cg.iterations() < cfg.max_iterations {
        if cg.step() == CgStep::Breakdown {
            breakdown = true;
            break;
        }
        let it = cg.iterations();
        if check > 0 && it.is_multiple_of(check) {
            cg.refresh_residual();
        } else if check > 0 && cg.residual_norm() <= target {
            // confirm against the true residual before stopping
            cg.refresh_residual();
        }
        if cg.residual_norm() <= target {
            break;
        }
    }
    let rel = cg.residual_norm() / r0;
    SolveReport {
        iterations: cg.iterations(),
        final_relative_residual: rel,
        converged: rel <= cfg.tolerance,
        breakdown,
    }
}

/// Masked 5-point operator on a `width x height` grid:
/// `y_i = active_i * (diag_i * x_i - sum of grid neighbours x_j)`.
///
/// Inactive entries of `x` must be zero; they then remain zero under CG.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator {
    width: usize,
    height: usize,
    diag: Vec<f64>,
    active: Vec<f64>,
}

impl StencilOperator {
    pub fn new(width: usize, height: usize, diag: Vec<f64>, active: Vec<f64>) -> Self {
        assert_eq!(diag.len(), width * height);
        assert_eq!(active.len(), width * height);
        Self {
            width,
            height,
            diag,
            active,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i] != 0.0
    }

    fn apply_row(&self, y: usize, x: &[f64], out: &mut [f64]) {
        let w = self.width;
        let lo = y * w;
        let row = &x[lo..lo + w];
        let diag = &self.diag[lo..lo + w];
        out.iter_mut()
            .zip(diag.iter().zip(row))
            .for_each(|(o, (d, v))| *o = d * v);
        if y > 0 {
            let up = &x[lo - w..lo];
            out.iter_mut().zip(up).for_each(|(o, v)| *o -= v);
        }
        if y + 1 < self.height {
            let down = &x[lo + w..lo + 2 * w];
            out.iter_mut().zip(down).for_each(|(o, v)| *o -= v);
        }
        if w > 1 {
            out[1..].iter_mut().zip(&row[..w - 1]).for_each(|(o, v)| *o -= v);
            out[..w - 1].iter_mut().zip(&row[1..]).for_each(|(o, v)| *o -= v);
        }
        out.iter_mut()
            .zip(&self.active[lo..lo + w])
            .for_each(|(o, a)| *o *= a);
    }
}

impl LinearOperator for StencilOperator {
    fn dim(&self) -> usize {
        self.width * self.height
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let w = self.width;
        if y.len() <= CHUNK {
            for (row, out) in y.chunks_mut(w).enumerate() {
                self.apply_row(row, x, out);
            }
        } else {
            y.par_chunks_mut(w)
                .enumerate()
                .for_each(|(row, out)| self.apply_row(row, x, out));
        }
    }
}

/// The inpainting system with known pixels eliminated.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    operator: StencilOperator,
    rhs: Vec<f64>,
    index_map: Vec<usize>,
    known_values: Vec<f64>,
}

impl ReducedSystem {
    /// Reduced Dirichlet-Laplacian operator (acts on grid-embedded vectors).
    pub fn operator(&self) -> &StencilOperator {
        &self.operator
    }

    /// Reduced right-hand side, embedded in the grid.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Pixel index of each unknown, in compressed order.
    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    /// Number of unknowns.
    pub fn unknowns(&self) -> usize {
        self.index_map.len()
    }

    pub fn compress(&self, embedded: &[f64]) -> Vec<f64> {
        self.index_map.iter().map(|&i| embedded[i]).collect()
    }

    pub fn embed(&self, compressed: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rhs.len()];
        for (&i, &v) in self.index_map.iter().zip(compressed) {
            out[i] = v;
        }
        out
    }

    /// Full-length iterate: reduced values at unknowns, eliminated values at
    /// known pixels.
    pub fn expand(&self, embedded: &[f64]) -> Vec<f64> {
        embedded
            .iter()
            .zip(&self.known_values)
            .zip(&self.operator.active)
            .map(|((&x, &k), &a)| if a != 0.0 { x } else { k })
            .collect()
    }

    /// Embedded reduced vector of a full iterate (zero at known pixels).
    pub fn restrict_iterate(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.operator.active)
            .map(|(&v, &a)| v * a)
            .collect()
    }
}

/// Eliminates the known rows of `A u = b`.
///
/// The reduced right-hand side at an unknown pixel is `b_i` plus the values
/// `b_j` of its known neighbours.
pub fn reduce_to_unknowns(op: &InpaintingOperator<'_>, b: &[f64]) -> Result<ReducedSystem> {
    let mask = op.mask();
    mask.check_len(b.len())?;
    check_connected(mask)?;
    let (w, h) = (mask.width(), mask.height());
    let known = mask.known();
    let n = w * h;
    let known_values: Vec<f64> = b.iter().zip(known).map(|(&v, &k)| if k { v } else { 0.0 }).collect();
    let mut diag = vec![0.0; n];
    let mut active = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let index_map: Vec<usize> = (0..n).filter(|&i| !known[i]).collect();
    let kv = &known_values;
    for y in 0..h {
        let lo = y * w;
        for x in 0..w {
            let i = lo + x;
            if known[i] {
                continue;
            }
            diag[i] = mask.degree(x, y) as f64;
            active[i] = 1.0;
            let west = if x > 0 { kv[i - 1] } else { 0.0 };
            let east = if x + 1 < w { kv[i + 1] } else { 0.0 };
            let north = if y > 0 { kv[i - w] } else { 0.0 };
            let south = if y + 1 < h { kv[i + w] } else { 0.0 };
            rhs[i] = b[i] + west + east + north + south;
        }
    }
    Ok(ReducedSystem {
        operator: StencilOperator::new(w, h, diag, active),
        rhs,
        index_map,
        known_values,
    })
}

// On a grid every unknown reaches a known pixel through unknowns as soon as
// one pixel is known.
fn check_connected(mask: &InpaintingMask) -> Result<()> {
    if mask.count_known() == 0 {
        return Err(InpaintError::SingularSystem {
            unreached: mask.known().len(),
        });
    }
    Ok(())
}

/// How relative residuals are normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualNormaliser {
    /// Residual of the standard initial iterate on the finest level.
    #[default]
    InitialResidual,
    /// `||b||`.
    Rhs,
}

/// `||b - A u|| / r0_norm`, with `r0_norm = 0` defined as already solved.
pub fn relative_residual(
    op: &InpaintingOperator<'_>,
    u: &[f64],
    b: &[f64],
    r0_norm: f64,
) -> Result<f64> {
    if r0_norm < 0.0 || !r0_norm.is_finite() {
        return Err(InpaintError::InvalidConfig(format!(
            "residual normaliser must be a finite non-negative number, got {r0_norm}"
        )));
    }
    let r = op.residual(u, b)?;
    if r0_norm == 0.0 {
        return Ok(0.0);
    }
    Ok(norm2(&r) / r0_norm)
}

/// The iterate every solver starts from: known pixels at their data, zero
/// elsewhere (that is, `u0 = b`).
pub fn standard_initial_iterate(b: &[f64]) -> Vec<f64> {
    b.to_vec()
}
