//! Sparse image inpainting by homogeneous diffusion.
//!
//! Missing pixels are reconstructed as the solution of the Laplace equation
//! with the known pixels as Dirichlet data and reflecting image boundaries.
//! The discrete system is solved by restricted additive Schwarz iterations
//! over overlapping blocks (plain RAS or the optimised ORAS variant with
//! Robin transmission rows), optionally accelerated by a coarse-to-fine
//! pyramid, or by conjugate gradients as a baseline.
//!
//! ```no_run
//! use schwarz_inpaint::{inpaint, io, masks, InpaintConfig, Method};
//!
//! let image = io::read_pnm("photo.ppm")?;
//! let mask = masks::random_mask(image.width(), image.height(), 0.05, 7)?;
//! let out = inpaint(&image, &mask, &InpaintConfig::new(Method::MlOras), Some(&image))?;
//! io::write_pnm(&out.image, "restored.ppm")?;
//! # Ok::<(), schwarz_inpaint::InpaintError>(())
//! ```

pub mod cli;
pub mod error;
pub mod image;
pub mod inpaint;
pub mod io;
mod kernel;
mod linalg;
pub mod masks;
pub mod metrics;
pub mod multilevel;
pub mod operator;
pub mod schwarz;
pub mod solvers;
pub mod synth;

pub use error::{InpaintError, Result};
pub use image::{ChannelVector, ImageBuffer, InpaintingMask};
pub use inpaint::{inpaint, InpaintConfig, Method};
pub use linalg::{dot, norm2};
pub use metrics::{psnr, ConvergenceTrace};
pub use operator::{build_rhs, InpaintingOperator};
pub use schwarz::{partition_domain, Flavour, SolveOutcome, SubdomainPartition};
