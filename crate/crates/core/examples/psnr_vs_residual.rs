//! Convergence trace of one solve against the original image: how PSNR
//! settles as the relative residual falls. Prints the trace as CSV.
//!
//! ```text
//! cargo run --release --example psnr_vs_residual [method] [tolerance]
//! ```

use schwarz_inpaint::{inpaint, io, masks, InpaintConfig, Method};

fn main() -> schwarz_inpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let method: Method = args.next().as_deref().unwrap_or("mloras").parse()?;
    let tolerance: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1e-6);

    let image = io::read_pnm(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample256.ppm"))?;
    let mask = masks::random_mask(image.width(), image.height(), 0.05, 0)?;

    let cfg = InpaintConfig::new(method).with_tolerance(tolerance);
    let out = inpaint(&image, &mask, &cfg, Some(&image))?;
    out.trace.write_csv(std::io::stdout())?;

    let at = |tol: f64| out.trace.first_below(tol).and_then(|r| r.psnr);
    if let (Some(coarse), Some(fine)) = (at(1e-3), out.trace.last().and_then(|r| r.psnr)) {
        eprintln!("PSNR at 1e-3: {coarse:.3} dB, final: {fine:.3} dB");
    }
    Ok(())
}
