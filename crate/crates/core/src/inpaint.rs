//! One entry point for all solver families.

use std::fmt;
use std::str::FromStr;

use crate::error::{InpaintError, Result};
use crate::image::{ImageBuffer, InpaintingMask};
use crate::multilevel::{multilevel_solve, Averaging, LevelSolver, MultilevelConfig};
use crate::schwarz::{
    Flavour, SolveOutcome, DEFAULT_ALPHA, DEFAULT_BLOCK_SIZE, DEFAULT_MAX_OUTER, DEFAULT_OVERLAP,
};
use crate::solvers::{ResidualNormaliser, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Conjugate gradients on the finest level.
    Cg,
    /// Coarse-to-fine conjugate gradients.
    MlCg,
    Ras,
    MlRas,
    Oras,
    /// Coarse-to-fine ORAS, the default.
    MlOras,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Cg,
        Method::MlCg,
        Method::Ras,
        Method::MlRas,
        Method::Oras,
        Method::MlOras,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cg => "cg",
            Method::MlCg => "mlcg",
            Method::Ras => "ras",
            Method::MlRas => "mlras",
            Method::Oras => "oras",
            Method::MlOras => "mloras",
        }
    }

    pub fn is_multilevel(self) -> bool {
        matches!(self, Method::MlCg | Method::MlRas | Method::MlOras)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = InpaintError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| InpaintError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// Full configuration of an inpainting run. Defaults: block 32, overlap 6,
/// three levels, relative residual 1e-3.
#[derive(Debug, Clone, PartialEq)]
pub struct InpaintConfig {
    pub method: Method,
    pub tolerance: f64,
    /// Pyramid depth of the multilevel methods; single-level methods ignore it.
    pub levels: usize,
    pub block_size: usize,
    pub overlap: usize,
    pub alpha: f64,
    pub local: SolverConfig,
    pub coarse_tolerance: f64,
    pub max_iterations: usize,
    pub cg_check_interval: usize,
    pub averaging: Averaging,
    pub normaliser: ResidualNormaliser,
}

impl InpaintConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            tolerance: 1e-3,
            levels: 3,
            block_size: DEFAULT_BLOCK_SIZE,
            overlap: DEFAULT_OVERLAP,
            alpha: DEFAULT_ALPHA,
            local: SolverConfig::local_default(),
            coarse_tolerance: 1e-2,
            max_iterations: DEFAULT_MAX_OUTER,
            cg_check_interval: 50,
            averaging: Averaging::KnownOnly,
            normaliser: ResidualNormaliser::InitialResidual,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn multilevel(&self) -> MultilevelConfig {
        let solver = match self.method {
            Method::Cg | Method::MlCg => LevelSolver::Cg {
                check_interval: self.cg_check_interval,
            },
            Method::Ras | Method::MlRas => LevelSolver::Schwarz {
                flavour: Flavour::Ras,
                local: self.local.clone(),
            },
            Method::Oras | Method::MlOras => LevelSolver::Schwarz {
                flavour: Flavour::Oras { alpha: self.alpha },
                local: self.local.clone(),
            },
        };
        MultilevelConfig {
            levels: if self.method.is_multilevel() { self.levels } else { 1 },
            solver,
            tolerance: self.tolerance,
            coarse_tolerance: self.coarse_tolerance,
            max_iterations: self.max_iterations,
            block_size: self.block_size,
            overlap: self.overlap,
            averaging: self.averaging,
            normaliser: self.normaliser,
        }
    }
}

/// Reconstructs `f` from its pixels marked in `mask`. Values of `f` at
/// unknown pixels are ignored. With a reference image, the trace carries
/// PSNR per iteration.
pub fn inpaint(
    f: &ImageBuffer,
    mask: &InpaintingMask,
    cfg: &InpaintConfig,
    reference: Option<&ImageBuffer>,
) -> Result<SolveOutcome> {
    multilevel_solve(f, mask, &cfg.multilevel(), reference)
}
