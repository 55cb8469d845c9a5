//! Runs every solver on the same synthetic instance and prints iterations,
//! time to a relative residual of 1e-3 and PSNR.
//!
//! ```text
//! cargo run --release --example compare_methods [size] [random|voronoi]
//! ```

use schwarz_inpaint::{inpaint, masks, psnr, synth, InpaintConfig, Method};

fn main() -> schwarz_inpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(512);
    let voronoi = args.next().as_deref() == Some("voronoi");

    let image = synth::natural_image(size, size, 3, 11)?;
    let mask = if voronoi {
        masks::voronoi_densify(&image, &masks::VoronoiConfig::new(0.05, 3))?.mask
    } else {
        masks::random_mask(size, size, 0.05, 3)?
    };
    println!("{size}x{size}, {} known pixels", mask.count_known());

    for method in Method::ALL {
        let out = inpaint(&image, &mask, &InpaintConfig::new(method), None)?;
        let last = out.trace.last().expect("trace has the initial row");
        println!(
            "{method:>7}: {:>4} its {:>9.1} ms  residual {:.2e}  psnr {:.3} dB",
            out.iterations,
            last.time_ms,
            last.rel_residual,
            psnr(&out.image, &image)?,
        );
    }
    Ok(())
}
