//! Command-line front end.
//!
//! Exit status is 0 when every requested solve converged, 1 when one hit its
//! iteration cap, and 2 for usage, input and I/O errors.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{InpaintError, Result};
use crate::image::{ImageBuffer, InpaintingMask};
use crate::inpaint::{inpaint, InpaintConfig, Method};
use crate::masks::{random_mask, voronoi_densify, VoronoiConfig};
use crate::metrics::{format_db, loglog_slope, psnr};
use crate::schwarz::SolveOutcome;
use crate::{io, synth};

/// Fallback for `--threads`.
pub const THREADS_ENV: &str = "SCHWARZ_INPAINT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "schwarz-inpaint", version, about = "Sparse image inpainting by homogeneous diffusion")]
pub struct Cli {
    /// Worker threads (default: SCHWARZ_INPAINT_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct an image from the pixels selected by a mask.
    Inpaint(InpaintArgs),
    /// Generate an inpainting mask.
    Mask(MaskArgs),
    /// Run several solvers on one problem and write their traces.
    Compare(CompareArgs),
    /// Time solvers over a range of resolutions.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative-residual target.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Pyramid depth of the multilevel methods.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = crate::schwarz::DEFAULT_BLOCK_SIZE)]
    pub block: usize,
    #[arg(long, default_value_t = crate::schwarz::DEFAULT_OVERLAP)]
    pub overlap: usize,
    /// Robin parameter of the ORAS transmission rows.
    #[arg(long, default_value_t = crate::schwarz::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Outer (Schwarz) or CG iteration cap per level.
    #[arg(long, default_value_t = crate::schwarz::DEFAULT_MAX_OUTER)]
    pub max_iterations: usize,
}

impl SolverArgs {
    fn config(&self, method: Method) -> InpaintConfig {
        InpaintConfig {
            block_size: self.block,
            overlap: self.overlap,
            alpha: self.alpha,
            max_iterations: self.max_iterations,
            ..InpaintConfig::new(method).with_tolerance(self.tol).with_levels(self.levels)
        }
    }
}

#[derive(Debug, Args)]
pub struct InpaintArgs {
    /// Source image (PGM or PPM); only pixels known in the mask are used.
    #[arg(long)]
    pub image: PathBuf,
    /// PBM mask, set bits mark known pixels.
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "mloras", value_parser = parse_method)]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Ground truth for PSNR reporting.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Convergence trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Random,
    Voronoi,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Strategy::Random)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Ground-truth image; known values are taken from it.
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "cg,mlcg,ras,oras,mloras", value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Source image; without one a procedural scene is rendered per resolution.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "960x540,1920x1080,2880x1620,3840x2160",
        value_parser = parse_resolution
    )]
    pub resolutions: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    #[arg(long, value_delimiter = ',', default_value = "mloras,mlcg", value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Runs per point; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: InpaintError| e.to_string())
}

/// Parses `WIDTHxHEIGHT`.
pub fn parse_resolution(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("invalid dimension '{v}' in '{s}'")),
    };
    Ok((dim(w)?, dim(h)?))
}

/// Thread count from the flag, else the environment; `None` keeps rayon's
/// default.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>> {
    let n = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(v)) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            InpaintError::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))
        })?,
        _ => return Ok(None),
    };
    if n == 0 {
        return Err(InpaintError::InvalidConfig("thread count must be at least 1".into()));
    }
    Ok(Some(n))
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Runs a parsed command; `Ok(false)` means some solve did not converge.
pub fn run(cli: Cli) -> Result<bool> {
    let env = std::env::var(THREADS_ENV).ok();
    if let Some(n) = resolve_threads(cli.threads, env.as_deref())? {
        // a second call (tests running several commands) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Inpaint(a) => cmd_inpaint(&a),
        Command::Mask(a) => cmd_mask(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn write_trace(out: &SolveOutcome, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| InpaintError::from(e).in_file(path))?;
    out.trace
        .write_csv(BufWriter::new(file))
        .map_err(|e| e.in_file(path))
}

pub fn cmd_inpaint(a: &InpaintArgs) -> Result<bool> {
    let image = io::read_pnm(&a.image)?;
    let mask = io::read_mask_for(&a.mask, &image)?;
    let reference = a.reference.as_ref().map(io::read_pnm).transpose()?;
    let cfg = a.solver.config(a.method);
    let out = inpaint(&image, &mask, &cfg, reference.as_ref())?;
    io::write_pnm(&out.image, &a.out)?;
    if let Some(path) = &a.trace {
        write_trace(&out, path)?;
    }
    let last = out.trace.last().expect("trace has the initial row");
    println!(
        "{}: {} iterations, {:.2} ms, relative residual {:.3e}{}",
        a.method,
        out.iterations,
        last.time_ms,
        last.rel_residual,
        if out.converged { "" } else { " (not converged)" }
    );
    if let Some(r) = &reference {
        println!("psnr {} dB", format_db(psnr(&out.image, r)?));
    }
    Ok(out.converged)
}

pub fn cmd_mask(a: &MaskArgs) -> Result<bool> {
    let image = io::read_pnm(&a.image)?;
    let (w, h) = (image.width(), image.height());
    let (mask, complete) = match a.strategy {
        Strategy::Random => (random_mask(w, h, a.density, a.seed)?, true),
        Strategy::Voronoi => {
            let out = voronoi_densify(&image, &VoronoiConfig::new(a.density, a.seed))?;
            (out.mask, out.reached_target)
        }
    };
    io::write_mask_pbm(&mask, &a.out)?;
    println!(
        "{} of {} pixels known ({:.4}%)",
        mask.count_known(),
        mask.len(),
        100.0 * mask.density()
    );
    if !complete {
        eprintln!("warning: densification stopped before reaching the target density");
    }
    Ok(complete)
}

/// Summary row of one method in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub method: Method,
    pub iterations: usize,
    pub time_ms: f64,
    pub psnr: f64,
    pub converged: bool,
}

/// Solves the same problem with each method, tracing PSNR against `image`.
pub fn compare_methods(
    image: &ImageBuffer,
    mask: &InpaintingMask,
    methods: &[Method],
    solver: &SolverArgs,
) -> Result<Vec<(CompareRow, SolveOutcome)>> {
    methods
        .iter()
        .map(|&m| {
            let out = inpaint(image, mask, &solver.config(m), Some(image))?;
            let at = out.trace.first_below(solver.tol).or(out.trace.last()).expect("non-empty trace");
            let row = CompareRow {
                method: m,
                iterations: at.iteration,
                time_ms: at.time_ms,
                psnr: at.psnr.expect("traced with a reference"),
                converged: out.converged,
            };
            Ok((row, out))
        })
        .collect()
}

pub fn cmd_compare(a: &CompareArgs) -> Result<bool> {
    let image = io::read_pnm(&a.image)?;
    let mask = io::read_mask_for(&a.mask, &image)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| InpaintError::from(e).in_file(&a.out_dir))?;
    let results = compare_methods(&image, &mask, &a.methods, &a.solver)?;

    let summary_path = a.out_dir.join("summary.csv");
    let mut summary = csv::Writer::from_path(&summary_path).map_err(|e| InpaintError::from(e).in_file(&summary_path))?;
    summary.write_record(["method", "iterations", "time_ms", "psnr", "converged"])?;
    let mut all = true;
    for (row, out) in &results {
        write_trace(out, &a.out_dir.join(format!("{}.csv", row.method)))?;
        summary.write_record([
            row.method.to_string(),
            row.iterations.to_string(),
            format!("{:.6}", row.time_ms),
            format_db(row.psnr),
            row.converged.to_string(),
        ])?;
        println!(
            "{:>7}: {:>5} iterations {:>10.2} ms  {:>9} dB{}",
            row.method,
            row.iterations,
            row.time_ms,
            format_db(row.psnr),
            if row.converged { "" } else { "  (not converged)" }
        );
        all &= row.converged;
    }
    summary.flush()?;
    Ok(all)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<bool> {
    if a.repeats == 0 {
        return Err(InpaintError::InvalidConfig("need at least one repeat".into()));
    }
    let source = a.image.as_ref().map(io::read_pnm).transpose()?;
    let mut writer = csv::Writer::from_path(&a.out).map_err(|e| InpaintError::from(e).in_file(&a.out))?;
    writer.write_record(["pixels", "method", "time_ms"])?;
    let mut points: Vec<Vec<(f64, f64)>> = vec![Vec::new(); a.methods.len()];
    let mut all = true;
    for (k, &(w, h)) in a.resolutions.iter().enumerate() {
        let image = match &source {
            Some(src) => src.downsample_box(w, h)?,
            None => synth::natural_image(w, h, 3, a.seed)?,
        };
        let mask = random_mask(w, h, a.density, a.seed.wrapping_add(k as u64))?;
        for (m, &method) in a.methods.iter().enumerate() {
            let cfg = a.solver.config(method);
            let mut best = f64::INFINITY;
            for _ in 0..a.repeats {
                let out = inpaint(&image, &mask, &cfg, None)?;
                all &= out.converged;
                best = best.min(out.trace.last().expect("non-empty trace").time_ms);
            }
            let pixels = w * h;
            writer.write_record([pixels.to_string(), method.to_string(), format!("{best:.6}")])?;
            println!("{w}x{h} {method}: {best:.2} ms");
            points[m].push((pixels as f64, best));
        }
    }
    writer.flush()?;
    for (method, pts) in a.methods.iter().zip(&points) {
        match loglog_slope(pts) {
            Some(s) => println!("{method}: log-log slope {s:.3}"),
            None => println!("{method}: log-log slope undefined"),
        }
    }
    Ok(all)
}
