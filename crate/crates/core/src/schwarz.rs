//! Overlapping block decomposition and the restricted additive Schwarz
//! iteration, in its classical (RAS) and optimised (ORAS) flavours.
//!
//! One outer iteration computes the global residual `r = b - A u`, solves the
//! local correction problem `R_i A R_i^T v_i = R_i r` on every block, and adds
//! the corrections back through the partition of unity,
//! `u += sum_i R_i^T D_i v_i`. Here `D_i` is the indicator of the pixels block
//! `i` owns: each pixel belongs to the block whose centre is nearest, so the
//! update writes every pixel exactly once.

use rayon::prelude::*;

use crate::error::{InpaintError, Result};
use crate::image::{ChannelVector, ImageBuffer, InpaintingMask};
use crate::linalg::norm2;
use crate::metrics::{ConvergenceTrace, Stopwatch, TraceRecorder};
use crate::operator::{build_rhs, InpaintingOperator};
use crate::kernel::{BlockCg, BlockScratch};
use crate::solvers::{
    run_cg, standard_initial_iterate, CgBuffers, ConjugateGradient, ResidualNormaliser, SolverConfig,
    StencilOperator,
};

/// Block edge length used for the decomposition unless overridden.
pub const DEFAULT_BLOCK_SIZE: usize = 32;
/// Overlap between neighbouring blocks unless overridden.
pub const DEFAULT_OVERLAP: usize = 6;
/// Robin transmission parameter of ORAS local problems, picked by the sweep in
/// `examples/calibrate_alpha.rs`.
pub const DEFAULT_ALPHA: f64 = 0.25;
/// Outer-iteration cap of the Schwarz drivers.
pub const DEFAULT_MAX_OUTER: usize = 1000;

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.w && y >= self.y0 && y < self.y0 + self.h
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0
            && other.y0 >= self.y0
            && other.x0 + other.w <= self.x0 + self.w
            && other.y0 + other.h <= self.y0 + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subdomain {
    /// Pixels of the local problem.
    pub block: Rect,
    /// Pixels whose correction this block contributes.
    pub owned: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubdomainPartition {
    width: usize,
    height: usize,
    block_size: usize,
    overlap: usize,
    blocks_x: usize,
    blocks_y: usize,
    subdomains: Vec<Subdomain>,
}

// (start, length) of every block along one axis plus the owned interval of each.
fn axis_layout(extent: usize, block: usize, overlap: usize) -> Vec<((usize, usize), (usize, usize))> {
    let len = block.min(extent);
    let stride = block - overlap;
    let count = if extent <= block {
        1
    } else {
        (extent - block).div_ceil(stride) + 1
    };
    let starts: Vec<usize> = (0..count)
        .map(|k| if k + 1 == count { extent - len } else { k * stride })
        .collect();

    // nearest block centre, ties to the lower index; compare in doubled
    // coordinates: pixel centre 2x + 1, block centre 2a + len
    let mut owned_lo = vec![usize::MAX; count];
    let mut owned_hi = vec![0; count];
    let mut k = 0;
    for x in 0..extent {
        let dist = |k: usize| (2 * x + 1).abs_diff(2 * starts[k] + len);
        while k + 1 < count && dist(k + 1) < dist(k) {
            k += 1;
        }
        owned_lo[k] = owned_lo[k].min(x);
        owned_hi[k] = x + 1;
    }
    (0..count)
        .map(|k| {
            let owned = if owned_lo[k] == usize::MAX {
                (starts[k], 0)
            } else {
                (owned_lo[k], owned_hi[k] - owned_lo[k])
            };
            ((starts[k], len), owned)
        })
        .collect()
}

/// Tiles a `width x height` image with overlapping blocks.
///
/// Anchors sit at multiples of `block_size - overlap`; the last block along an
/// axis is shifted back so it ends on the image edge. An axis no longer than
/// `block_size` gets a single block spanning it.
pub fn partition_domain(
    width: usize,
    height: usize,
    block_size: usize,
    overlap: usize,
) -> Result<SubdomainPartition> {
    if width == 0 || height == 0 {
        return Err(InpaintError::InvalidConfig(format!(
            "cannot partition an empty {width}x{height} domain"
        )));
    }
    if overlap == 0 || overlap >= block_size {
        return Err(InpaintError::InvalidConfig(format!(
            "need 0 < overlap < block size, got overlap {overlap}, block {block_size}"
        )));
    }
    let xs = axis_layout(width, block_size, overlap);
    let ys = axis_layout(height, block_size, overlap);
    let mut subdomains = Vec::with_capacity(xs.len() * ys.len());
    for &((y0, h), (oy, oh)) in &ys {
        for &((x0, w), (ox, ow)) in &xs {
            let sub = Subdomain {
                block: Rect { x0, y0, w, h },
                owned: Rect { x0: ox, y0: oy, w: ow, h: oh },
            };
            debug_assert!(sub.block.contains_rect(&sub.owned));
            subdomains.push(sub);
        }
    }
    Ok(SubdomainPartition {
        width,
        height,
        block_size,
        overlap,
        blocks_x: xs.len(),
        blocks_y: ys.len(),
        subdomains,
    })
}

impl SubdomainPartition {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// Blocks per row and per column.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.blocks_x, self.blocks_y)
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn subdomain(&self, i: usize) -> &Subdomain {
        &self.subdomains[i]
    }

    fn check(&self, i: usize, len: usize, expected: usize) -> Result<()> {
        if i >= self.subdomains.len() {
            return Err(InpaintError::InvalidConfig(format!(
                "subdomain {i} out of range ({} blocks)",
                self.subdomains.len()
            )));
        }
        if len != expected {
            return Err(InpaintError::dims(expected, len));
        }
        Ok(())
    }

    /// `R_i v`: the block's entries of a global vector in row-major local order.
    pub fn restrict(&self, i: usize, v: &[f64]) -> Result<Vec<f64>> {
        self.check(i, v.len(), self.width * self.height)?;
        let b = self.subdomains[i].block;
        let mut out = Vec::with_capacity(b.area());
        for y in b.y0..b.y0 + b.h {
            let row = y * self.width;
            out.extend_from_slice(&v[row + b.x0..row + b.x0 + b.w]);
        }
        Ok(out)
    }

    /// `R_i^T D_i v`: a global vector that carries the local values on the
    /// owned pixels of block `i` and zero elsewhere.
    pub fn extend_weighted(&self, i: usize, local: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.width * self.height];
        self.add_extended(i, local, &mut out)?;
        Ok(out)
    }

    /// Adds `R_i^T D_i v` into `global`.
    pub fn add_extended(&self, i: usize, local: &[f64], global: &mut [f64]) -> Result<()> {
        let area = self.subdomains.get(i).map_or(0, |s| s.block.area());
        self.check(i, local.len(), area)?;
        if global.len() != self.width * self.height {
            return Err(InpaintError::dims(self.width * self.height, global.len()));
        }
        let Subdomain { block, owned } = self.subdomains[i];
        for y in owned.y0..owned.y0 + owned.h {
            let lrow = (y - block.y0) * block.w + (owned.x0 - block.x0);
            let grow = y * self.width + owned.x0;
            global[grow..grow + owned.w]
                .iter_mut()
                .zip(&local[lrow..lrow + owned.w])
                .for_each(|(g, l)| *g += l);
        }
        Ok(())
    }
}

/// Transmission condition of the local problems at artificial boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flavour {
    /// Couplings across the block edge are dropped (zero Dirichlet data).
    Ras,
    /// Robin condition with parameter `alpha`: each cut edge to an unknown
    /// pixel changes the centre coefficient by `alpha - 1`. `alpha = 0` is a
    /// Neumann cut and `alpha = 1` reproduces RAS.
    Oras { alpha: f64 },
}

impl Flavour {
    pub fn oras() -> Self {
        Flavour::Oras { alpha: DEFAULT_ALPHA }
    }

    // added to the diagonal per cut edge to an unknown pixel
    fn robin_shift(self) -> f64 {
        match self {
            Flavour::Ras => 0.0,
            Flavour::Oras { alpha } => alpha - 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Flavour::Oras { alpha } if !(alpha >= 0.0) || !alpha.is_finite() => Err(
                InpaintError::InvalidConfig(format!("ORAS alpha must be finite and >= 0, got {alpha}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Local operator of block `i` in reduced form (known pixels eliminated),
/// on the block's own `w x h` grid.
///
/// Unknown rows keep the global centre coefficient, so reflecting image
/// boundaries carry over; couplings to pixels outside the block are dropped.
/// With ORAS, a dropped coupling to an unknown pixel turns into a Robin row.
/// Cut edges to known pixels stay Dirichlet: the correction vanishes there.
pub fn build_local_operator(
    op: &InpaintingOperator<'_>,
    partition: &SubdomainPartition,
    i: usize,
    flavour: Flavour,
) -> StencilOperator {
    let mask = op.mask();
    let (w, h) = (mask.width(), mask.height());
    let b = partition.subdomains[i].block;
    let n = b.area();
    let mut diag = vec![0.0; n];
    let mut active = vec![0.0; n];
    let shift = flavour.robin_shift();
    for ly in 0..b.h {
        for lx in 0..b.w {
            let (x, y) = (b.x0 + lx, b.y0 + ly);
            if mask.is_known_at(x, y) {
                continue;
            }
            let li = ly * b.w + lx;
            let outside = [
                (lx == 0 && x > 0).then(|| (x - 1, y)),
                (lx + 1 == b.w && x + 1 < w).then(|| (x + 1, y)),
                (ly == 0 && y > 0).then(|| (x, y - 1)),
                (ly + 1 == b.h && y + 1 < h).then(|| (x, y + 1)),
            ];
            let cut = outside
                .into_iter()
                .flatten()
                .filter(|&(qx, qy)| !mask.is_known_at(qx, qy))
                .count();
            diag[li] = mask.degree(x, y) as f64 + shift * cut as f64;
            active[li] = 1.0;
        }
    }
    StencilOperator::new(b.w, b.h, diag, active)
}

/// Iterate and residual of a Schwarz run, one vector per channel.
#[derive(Debug, Clone)]
pub struct SchwarzState {
    pub u: Vec<ChannelVector>,
    /// `b - A u` for the current iterate, recomputed after every update.
    pub residual: Vec<ChannelVector>,
    pub iteration: usize,
    /// Local solves that stopped on the iteration cap or on breakdown.
    pub local_unconverged: usize,
    /// Local CG iterations summed over all blocks and channels.
    pub local_iterations: usize,
}

impl SchwarzState {
    pub fn residual_norm(&self) -> f64 {
        self.residual
            .iter()
            .map(|r| norm2(r).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Local tolerances at or above this are solved in single precision.
const SINGLE_PRECISION_TOLERANCE: f64 = 1e-4;

#[derive(Default)]
struct Scratch {
    kernel: BlockCg,
    bufs: BlockScratch,
    rhs: Vec<f64>,
}

/// Corrections of one block on its owned pixels, channel after channel.
struct BlockCorrection {
    values: Vec<f64>,
    unconverged: usize,
    local_iterations: usize,
}

/// Schwarz solver for one mask and partition.
///
/// Local problems are solved by conjugate gradients from a zero guess with
/// the recurrence residual as stopping test; the refresh interval of
/// `local_cfg` does not apply to them. Local tolerances of 1e-4 and looser
/// are solved in single precision; residuals and updates stay in `f64`.
pub struct SchwarzSolver<'a> {
    op: InpaintingOperator<'a>,
    partition: SubdomainPartition,
    flavour: Flavour,
    local_cfg: SolverConfig,
}

impl<'a> SchwarzSolver<'a> {
    pub fn new(
        mask: &'a InpaintingMask,
        partition: SubdomainPartition,
        flavour: Flavour,
        local_cfg: SolverConfig,
    ) -> Result<Self> {
        flavour.validate()?;
        local_cfg.validate()?;
        if partition.width() != mask.width() || partition.height() != mask.height() {
            return Err(InpaintError::dims(
                format!("{}x{}", mask.width(), mask.height()),
                format!("{}x{}", partition.width(), partition.height()),
            ));
        }
        Ok(Self {
            op: InpaintingOperator::new(mask),
            partition,
            flavour,
            local_cfg,
        })
    }

    pub fn partition(&self) -> &SubdomainPartition {
        &self.partition
    }

    pub fn operator(&self) -> &InpaintingOperator<'a> {
        &self.op
    }

    /// State for iterate `u`, with its residual computed.
    pub fn init_state(&self, u: Vec<ChannelVector>, b: &[ChannelVector]) -> Result<SchwarzState> {
        if u.len() != b.len() {
            return Err(InpaintError::dims(b.len(), u.len()));
        }
        let residual = u
            .iter()
            .zip(b)
            .map(|(uc, bc)| self.op.residual(uc, bc))
            .collect::<Result<_>>()?;
        Ok(SchwarzState {
            u,
            residual,
            iteration: 0,
            local_unconverged: 0,
            local_iterations: 0,
        })
    }

    /// One outer iteration: local solves on every (block, channel) pair in
    /// parallel, restricted update, fresh residual.
    pub fn iterate(&self, state: &mut SchwarzState, b: &[ChannelVector]) {
        let residual = &state.residual;
        let results: Vec<BlockCorrection> = (0..self.partition.len())
            .into_par_iter()
            .map_init(Scratch::default, |scratch, k| self.solve_block(k, residual, scratch))
            .collect();

        let w = self.partition.width;
        for (k, res) in results.iter().enumerate() {
            let owned = self.partition.subdomains[k].owned;
            let per_channel = owned.area();
            for (c, u) in state.u.iter_mut().enumerate() {
                let vals = &res.values[c * per_channel..(c + 1) * per_channel];
                for (row, vals) in vals.chunks(owned.w.max(1)).enumerate().take(owned.h) {
                    let g = (owned.y0 + row) * w + owned.x0;
                    u[g..g + owned.w].iter_mut().zip(vals).for_each(|(a, v)| *a += v);
                }
            }
            state.local_unconverged += res.unconverged;
            state.local_iterations += res.local_iterations;
        }

        for (c, r) in state.residual.iter_mut().enumerate() {
            self.op.residual_into(&state.u[c], &b[c], r);
        }
        state.iteration += 1;
    }

    // Solves the local problems of block k for every channel and returns the
    // corrections on its owned pixels.
    fn solve_block(&self, k: usize, residual: &[ChannelVector], scratch: &mut Scratch) -> BlockCorrection {
        let Subdomain { block, owned } = self.partition.subdomains[k];
        let mask = self.op.mask();
        let known = mask.known();
        let w = self.partition.width;
        let single = self.local_cfg.tolerance >= SINGLE_PRECISION_TOLERANCE;
        let double = if single {
            scratch.kernel.assemble(mask, block, self.flavour.robin_shift());
            None
        } else {
            Some(build_local_operator(&self.op, &self.partition, k, self.flavour))
        };

        let mut out = BlockCorrection {
            values: Vec::with_capacity(owned.area() * residual.len()),
            unconverged: 0,
            local_iterations: 0,
        };
        for r in residual {
            let (iterations, converged) = match &double {
                None => {
                    let Scratch { kernel, bufs, .. } = &mut *scratch;
                    kernel.prepare(bufs);
                    kernel.gather(bufs, r, known, w, block);
                    let rep = kernel.solve(bufs, self.local_cfg.tolerance, self.local_cfg.max_iterations);
                    kernel.scatter(bufs, r, known, w, block, owned, &mut out.values);
                    (rep.iterations, rep.converged)
                }
                Some(local) => {
                    // reduced local right-hand side: known neighbours inside the block
                    // are eliminated rows with v_q = r_q
                    let rhs_at = |lx: usize, ly: usize| {
                        let g = (block.y0 + ly) * w + block.x0 + lx;
                        let mut acc = r[g];
                        if lx > 0 && known[g - 1] {
                            acc += r[g - 1];
                        }
                        if lx + 1 < block.w && known[g + 1] {
                            acc += r[g + 1];
                        }
                        if ly > 0 && known[g - w] {
                            acc += r[g - w];
                        }
                        if ly + 1 < block.h && known[g + w] {
                            acc += r[g + w];
                        }
                        acc
                    };
                    scratch.rhs.clear();
                    for ly in 0..block.h {
                        for lx in 0..block.w {
                            let active = local.is_active(ly * block.w + lx);
                            scratch.rhs.push(if active { rhs_at(lx, ly) } else { 0.0 });
                        }
                    }
                    let zero = CgBuffers::zeroed(block.area());
                    let mut cg = ConjugateGradient::from_buffers(local, &scratch.rhs, zero);
                    let rep = run_cg(&mut cg, &self.local_cfg);
                    let x = cg.solution();
                    for y in owned.y0..owned.y0 + owned.h {
                        for xg in owned.x0..owned.x0 + owned.w {
                            let g = y * w + xg;
                            let li = (y - block.y0) * block.w + xg - block.x0;
                            out.values.push(if known[g] { r[g] } else { x[li] });
                        }
                    }
                    (rep.iterations, rep.converged)
                }
            };
            out.local_iterations += iterations;
            if !converged {
                out.unconverged += 1;
            }
        }
        out
    }
}

/// Stopping rule and iteration cap of one Schwarz run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl OuterConfig {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            max_iterations: DEFAULT_MAX_OUTER,
        }
    }
}

/// Iterates until `residual / r0_norm <= tolerance` or the cap. When a
/// recorder is given, every iterate (including the initial one) is traced.
/// Returns whether the tolerance was met.
pub(crate) fn run_outer(
    solver: &SchwarzSolver<'_>,
    state: &mut SchwarzState,
    b: &[ChannelVector],
    outer: OuterConfig,
    r0_norm: f64,
    mut recorder: Option<&mut TraceRecorder<'_>>,
) -> bool {
    let (w, h) = (solver.partition.width, solver.partition.height);
    loop {
        let norm = state.residual_norm();
        let rel = match recorder.as_deref_mut() {
            Some(rec) => rec.record(state.iteration, norm, || {
                ImageBuffer::from_channels(w, h, state.u.clone())
                    .expect("iterate planes match the partition")
            }),
            None if r0_norm == 0.0 => 0.0,
            None => norm / r0_norm,
        };
        if rel <= outer.tolerance {
            return true;
        }
        if state.iteration >= outer.max_iterations {
            return false;
        }
        solver.iterate(state, b);
    }
}

/// Right-hand sides `b = C f` for every channel of `f`.
pub(crate) fn channel_rhs(f: &ImageBuffer, mask: &InpaintingMask) -> Result<Vec<ChannelVector>> {
    mask.matches(f)?;
    (0..f.channels())
        .map(|c| build_rhs(f.channel(c), mask))
        .collect()
}

/// Norm used to make residuals relative, over all channels.
pub(crate) fn residual_normaliser(
    op: &InpaintingOperator<'_>,
    b: &[ChannelVector],
    kind: ResidualNormaliser,
) -> Result<f64> {
    let mut sq = 0.0;
    for bc in b {
        sq += match kind {
            ResidualNormaliser::Rhs => norm2(bc).powi(2),
            ResidualNormaliser::InitialResidual => {
                norm2(&op.residual(&standard_initial_iterate(bc), bc)?).powi(2)
            }
        };
    }
    Ok(sq.sqrt())
}

/// Result of a complete inpainting solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub image: ImageBuffer,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    /// Outer (Schwarz) or CG iterations on the finest level.
    pub iterations: usize,
    /// Local Schwarz solves that hit their cap, summed over levels.
    pub local_unconverged: usize,
}

/// Single-level Schwarz inpainting of `f` from the pixels marked in `mask`,
/// starting from the standard initial iterate.
pub fn solve_schwarz(
    f: &ImageBuffer,
    mask: &InpaintingMask,
    partition: SubdomainPartition,
    flavour: Flavour,
    outer: OuterConfig,
    local_cfg: SolverConfig,
) -> Result<SolveOutcome> {
    let clock = Stopwatch::start();
    let mut recorder = TraceRecorder::new(clock, None);
    solve_schwarz_traced(f, mask, partition, flavour, outer, local_cfg, &mut recorder, ResidualNormaliser::default())
        .map(|(image, converged, iterations, local_unconverged)| SolveOutcome {
            image,
            trace: recorder.finish(),
            converged,
            iterations,
            local_unconverged,
        })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_schwarz_traced(
    f: &ImageBuffer,
    mask: &InpaintingMask,
    partition: SubdomainPartition,
    flavour: Flavour,
    outer: OuterConfig,
    local_cfg: SolverConfig,
    recorder: &mut TraceRecorder<'_>,
    normaliser: ResidualNormaliser,
) -> Result<(ImageBuffer, bool, usize, usize)> {
    let b = channel_rhs(f, mask)?;
    let solver = SchwarzSolver::new(mask, partition, flavour, local_cfg)?;
    let r0 = residual_normaliser(solver.operator(), &b, normaliser)?;
    recorder.set_normaliser(r0);
    let u0 = b.iter().map(|bc| standard_initial_iterate(bc)).collect();
    let mut state = solver.init_state(u0, &b)?;
    let converged = run_outer(&solver, &mut state, &b, outer, r0, Some(recorder));
    let image = ImageBuffer::from_channels(f.width(), f.height(), state.u)?;
    Ok((image, converged, state.iteration, state.local_unconverged))
}
