//! Keeps 5% of the pixels of an image at random and fills in the rest with
//! multilevel ORAS.
//!
//! ```text
//! cargo run --release --example inpaint_basic [image.ppm] [out.ppm]
//! ```

use schwarz_inpaint::{inpaint, io, masks, psnr, InpaintConfig, Method};

fn main() -> schwarz_inpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample256.ppm").to_string());
    let output = args.next().unwrap_or_else(|| "inpainted.ppm".to_string());

    let image = io::read_pnm(&input)?;
    let mask = masks::random_mask(image.width(), image.height(), 0.05, 1)?;

    let cfg = InpaintConfig::new(Method::MlOras);
    let out = inpaint(&image, &mask, &cfg, None)?;
    io::write_pnm(&out.image, &output)?;

    let last = out.trace.last().expect("trace has the initial row");
    println!(
        "{}x{}: {} of {} pixels known",
        image.width(),
        image.height(),
        mask.count_known(),
        mask.len()
    );
    println!(
        "{} iterations, {:.1} ms, residual {:.2e}, converged {}",
        out.iterations, last.time_ms, last.rel_residual, out.converged
    );
    println!("PSNR {:.2} dB, written to {output}", psnr(&out.image, &image)?);
    Ok(())
}
