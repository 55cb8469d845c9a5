//! Coarse-to-fine acceleration.
//!
//! The mask and its known values are subsampled dyadically: a coarse pixel is
//! known when any of its (up to) four fine pixels is, and takes the mean of
//! their values. The coarsest level is solved from the standard initial
//! iterate and every finer level starts from the bilinearly prolongated
//! solution of the level below, with its own known values re-imposed.

use crate::error::{InpaintError, Result};
use crate::image::{ChannelVector, ImageBuffer, InpaintingMask};
use crate::metrics::{Stopwatch, TraceRecorder};
use crate::operator::InpaintingOperator;
use crate::schwarz::{
    channel_rhs, partition_domain, residual_normaliser, run_outer, Flavour, OuterConfig,
    SchwarzSolver, SolveOutcome, SubdomainPartition, DEFAULT_BLOCK_SIZE, DEFAULT_MAX_OUTER,
    DEFAULT_OVERLAP,
};
use crate::solvers::{
    reduce_to_unknowns, standard_initial_iterate, CgStep, ConjugateGradient, ReducedSystem,
    ResidualNormaliser, SolverConfig,
};

/// Which fine values enter the average of a coarse known pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Mean of the known fine pixels only.
    #[default]
    KnownOnly,
    /// Mean of all fine pixels of the 2x2 group.
    AllPixels,
}

/// Halves the resolution of a mask and its values. Coarse pixel `(i, j)`
/// covers fine pixels `2i..=2i+1` by `2j..=2j+1`, clipped at odd edges.
/// Unknown coarse pixels get value 0.
pub fn restrict_mask(
    mask: &InpaintingMask,
    values: &ImageBuffer,
    averaging: Averaging,
) -> Result<(InpaintingMask, ImageBuffer)> {
    mask.matches(values)?;
    let (w, h) = (mask.width(), mask.height());
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let mut known = vec![false; cw * ch];
    let mut planes = vec![vec![0.0; cw * ch]; values.channels()];
    for cy in 0..ch {
        for cx in 0..cw {
            let mut group = [0usize; 4];
            let mut len = 0;
            for y in 2 * cy..(2 * cy + 2).min(h) {
                for x in 2 * cx..(2 * cx + 2).min(w) {
                    let i = y * w + x;
                    if averaging == Averaging::AllPixels || mask.is_known(i) {
                        group[len] = i;
                        len += 1;
                    }
                }
            }
            let ci = cy * cw + cx;
            let any_known = group[..len].iter().any(|&i| mask.is_known(i));
            known[ci] = any_known;
            if !any_known {
                continue;
            }
            for (c, plane) in planes.iter_mut().enumerate() {
                let src = values.channel(c);
                plane[ci] = group[..len].iter().map(|&i| src[i]).sum::<f64>() / len as f64;
            }
        }
    }
    Ok((
        InpaintingMask::new(cw, ch, known)?,
        ImageBuffer::from_channels(cw, ch, planes)?,
    ))
}

/// Bilinear interpolation of a coarse grid onto a fine grid of twice the
/// resolution, with pixel centres aligned (`x_coarse = (x_fine - 0.5) / 2`)
/// and coordinates clamped at the edges.
pub fn prolongate(
    coarse: &[f64],
    coarse_dims: (usize, usize),
    fine_dims: (usize, usize),
) -> Result<ChannelVector> {
    let (cw, ch) = coarse_dims;
    let (fw, fh) = fine_dims;
    if cw != fw.div_ceil(2) || ch != fh.div_ceil(2) {
        return Err(InpaintError::dims(
            format!("{}x{}", fw.div_ceil(2), fh.div_ceil(2)),
            format!("{cw}x{ch}"),
        ));
    }
    if coarse.len() != cw * ch {
        return Err(InpaintError::dims(cw * ch, coarse.len()));
    }
    let taps = |fine: usize, coarse_n: usize| -> Vec<(usize, usize, f64)> {
        (0..fine)
            .map(|x| {
                let s = ((x as f64 - 0.5) / 2.0).clamp(0.0, (coarse_n - 1) as f64);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(coarse_n - 1);
                (lo, hi, s - lo as f64)
            })
            .collect()
    };
    let xt = taps(fw, cw);
    let yt = taps(fh, ch);
    let mut out = Vec::with_capacity(fw * fh);
    for &(y0, y1, ty) in &yt {
        let r0 = &coarse[y0 * cw..(y0 + 1) * cw];
        let r1 = &coarse[y1 * cw..(y1 + 1) * cw];
        for &(x0, x1, tx) in &xt {
            let top = r0[x0] + tx * (r0[x1] - r0[x0]);
            let bottom = r1[x0] + tx * (r1[x1] - r1[x0]);
            out.push(top + ty * (bottom - top));
        }
    }
    Ok(out)
}

/// One resolution level: its mask, known values and block layout.
#[derive(Debug, Clone)]
pub struct LevelProblem {
    pub level: usize,
    pub mask: InpaintingMask,
    pub values: ImageBuffer,
    pub partition: SubdomainPartition,
}

/// Resolution levels, finest first.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<LevelProblem>,
}

impl Pyramid {
    pub fn build(
        f: &ImageBuffer,
        mask: &InpaintingMask,
        levels: usize,
        averaging: Averaging,
        block_size: usize,
        overlap: usize,
    ) -> Result<Self> {
        if levels == 0 {
            return Err(InpaintError::InvalidConfig("need at least one level".into()));
        }
        mask.matches(f)?;
        let mut out = Vec::with_capacity(levels);
        let mut cur_mask = mask.clone();
        let mut cur_values = f.clone();
        for level in 0..levels {
            if level > 0 {
                let (m, v) = restrict_mask(&cur_mask, &cur_values, averaging)?;
                cur_mask = m;
                cur_values = v;
            }
            let partition =
                partition_domain(cur_mask.width(), cur_mask.height(), block_size, overlap)?;
            out.push(LevelProblem {
                level,
                mask: cur_mask.clone(),
                values: cur_values.clone(),
                partition,
            });
        }
        Ok(Self { levels: out })
    }

    pub fn levels(&self) -> &[LevelProblem] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Solver run on each level.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelSolver {
    Schwarz {
        flavour: Flavour,
        local: SolverConfig,
    },
    /// Conjugate gradients on the reduced global system; the true residual is
    /// recomputed every `check_interval` iterations (0 = never).
    Cg { check_interval: usize },
}

impl LevelSolver {
    pub fn oras() -> Self {
        LevelSolver::Schwarz {
            flavour: Flavour::oras(),
            local: SolverConfig::local_default(),
        }
    }

    pub fn ras() -> Self {
        LevelSolver::Schwarz {
            flavour: Flavour::Ras,
            local: SolverConfig::local_default(),
        }
    }

    pub fn cg() -> Self {
        LevelSolver::Cg { check_interval: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelConfig {
    pub levels: usize,
    pub solver: LevelSolver,
    /// Relative-residual target on the finest level.
    pub tolerance: f64,
    /// Relative-residual target on the coarser levels.
    pub coarse_tolerance: f64,
    /// Outer (Schwarz) or CG iteration cap per level.
    pub max_iterations: usize,
    pub block_size: usize,
    pub overlap: usize,
    pub averaging: Averaging,
    pub normaliser: ResidualNormaliser,
}

impl Default for MultilevelConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            solver: LevelSolver::oras(),
            tolerance: 1e-3,
            coarse_tolerance: 1e-2,
            max_iterations: DEFAULT_MAX_OUTER,
            block_size: DEFAULT_BLOCK_SIZE,
            overlap: DEFAULT_OVERLAP,
            averaging: Averaging::KnownOnly,
            normaliser: ResidualNormaliser::InitialResidual,
        }
    }
}

impl MultilevelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(InpaintError::InvalidConfig("need at least one level".into()));
        }
        for (name, tol) in [("tolerance", self.tolerance), ("coarse tolerance", self.coarse_tolerance)] {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(InpaintError::InvalidConfig(format!("{name} must be positive, got {tol}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(InpaintError::InvalidConfig("iteration cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Coarse-to-fine inpainting. The trace covers the finest level only, with
/// residuals relative to the finest level's normaliser and wall-clock that
/// includes pyramid construction and all coarse work. PSNR is traced when a
/// reference image is given (its evaluation time is not charged).
pub fn multilevel_solve(
    f: &ImageBuffer,
    mask: &InpaintingMask,
    cfg: &MultilevelConfig,
    reference: Option<&ImageBuffer>,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    if let Some(r) = reference {
        f.check_shape(r)?;
    }
    let mut recorder = TraceRecorder::new(Stopwatch::start(), reference);
    let pyramid = Pyramid::build(f, mask, cfg.levels, cfg.averaging, cfg.block_size, cfg.overlap)?;

    let mut carried: Option<(Vec<ChannelVector>, (usize, usize))> = None;
    let mut finest = None;
    let mut local_unconverged = 0;
    for lp in pyramid.levels().iter().rev() {
        let dims = (lp.mask.width(), lp.mask.height());
        let b = channel_rhs(&lp.values, &lp.mask)?;
        let op = InpaintingOperator::new(&lp.mask);
        let r0 = residual_normaliser(&op, &b, cfg.normaliser)?;
        let u0: Vec<ChannelVector> = match carried.take() {
            None => b.iter().map(|bc| standard_initial_iterate(bc)).collect(),
            Some((coarse, cdims)) => coarse
                .iter()
                .zip(&b)
                .map(|(cu, bc)| {
                    let mut u = prolongate(cu, cdims, dims)?;
                    impose_known(&mut u, bc, &lp.mask);
                    Ok(u)
                })
                .collect::<Result<_>>()?,
        };
        let is_finest = lp.level == 0;
        let tolerance = if is_finest { cfg.tolerance } else { cfg.coarse_tolerance };
        let rec = if is_finest {
            recorder.set_normaliser(r0);
            Some(&mut recorder)
        } else {
            None
        };

        let (u, iterations, converged) = match &cfg.solver {
            LevelSolver::Schwarz { flavour, local } => {
                let solver = SchwarzSolver::new(&lp.mask, lp.partition.clone(), *flavour, local.clone())?;
                let mut state = solver.init_state(u0, &b)?;
                let outer = OuterConfig {
                    tolerance,
                    max_iterations: cfg.max_iterations,
                };
                let converged = run_outer(&solver, &mut state, &b, outer, r0, rec);
                local_unconverged += state.local_unconverged;
                (state.u, state.iteration, converged)
            }
            LevelSolver::Cg { check_interval } => cg_level(
                &op,
                &b,
                u0,
                tolerance,
                r0,
                cfg.max_iterations,
                *check_interval,
                rec,
            )?,
        };
        if is_finest {
            finest = Some((u, iterations, converged));
        } else {
            carried = Some((u, dims));
        }
    }

    let (u, iterations, converged) = finest.expect("pyramid has a finest level");
    Ok(SolveOutcome {
        image: ImageBuffer::from_channels(f.width(), f.height(), u)?,
        trace: recorder.finish(),
        converged,
        iterations,
        local_unconverged,
    })
}

fn impose_known(u: &mut [f64], b: &[f64], mask: &InpaintingMask) {
    for ((ui, bi), &k) in u.iter_mut().zip(b).zip(mask.known()) {
        if k {
            *ui = *bi;
        }
    }
}

// Conjugate gradients on the reduced system of every channel, advanced in
// lockstep so the stopping test and trace use the norm over all channels.
#[allow(clippy::too_many_arguments)]
fn cg_level(
    op: &InpaintingOperator<'_>,
    b: &[ChannelVector],
    u0: Vec<ChannelVector>,
    tolerance: f64,
    r0_norm: f64,
    max_iterations: usize,
    check_interval: usize,
    mut recorder: Option<&mut TraceRecorder<'_>>,
) -> Result<(Vec<ChannelVector>, usize, bool)> {
    let mask = op.mask();
    let systems: Vec<ReducedSystem> = b
        .iter()
        .map(|bc| reduce_to_unknowns(op, bc))
        .collect::<Result<_>>()?;
    let starts: Vec<Vec<f64>> = systems
        .iter()
        .zip(&u0)
        .map(|(s, u)| s.restrict_iterate(u))
        .collect();
    let mut cgs = systems
        .iter()
        .zip(&starts)
        .map(|(s, x0)| ConjugateGradient::new(s.operator(), s.rhs(), x0))
        .collect::<Result<Vec<_>>>()?;

    let norm = |cgs: &[ConjugateGradient<'_, _>]| {
        cgs.iter().map(|c| c.residual_norm().powi(2)).sum::<f64>().sqrt()
    };
    let (w, h) = (mask.width(), mask.height());
    let mut iteration = 0;
    let mut fresh = true;
    let converged = loop {
        let mut rel = match recorder.as_deref_mut() {
            Some(rec) => rec.relative(norm(&cgs)),
            None if r0_norm == 0.0 => 0.0,
            None => norm(&cgs) / r0_norm,
        };
        if rel <= tolerance && !fresh && check_interval > 0 {
            cgs.iter_mut().for_each(|c| c.refresh_residual());
            rel = if r0_norm == 0.0 { 0.0 } else { norm(&cgs) / r0_norm };
        }
        if let Some(rec) = recorder.as_deref_mut() {
            rec.record(iteration, norm(&cgs), || {
                let planes = systems
                    .iter()
                    .zip(&cgs)
                    .map(|(s, c)| s.expand(c.solution()))
                    .collect();
                ImageBuffer::from_channels(w, h, planes).expect("planes match the mask")
            });
        }
        if rel <= tolerance {
            break true;
        }
        if iteration >= max_iterations {
            break false;
        }
        let mut broke = false;
        for c in cgs.iter_mut() {
            if c.residual_norm() > 0.0 && c.step() == CgStep::Breakdown {
                broke = true;
            }
        }
        if broke {
            break false;
        }
        iteration += 1;
        fresh = check_interval > 0 && iteration % check_interval == 0;
        if fresh {
            cgs.iter_mut().for_each(|c| c.refresh_residual());
        }
    };

    let u = systems
        .iter()
        .zip(&cgs)
        .map(|(s, c)| s.expand(c.solution()))
        .collect();
    Ok((u, iteration, converged))
}
