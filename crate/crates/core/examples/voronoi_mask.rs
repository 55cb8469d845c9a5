//! Builds a 5% mask by Voronoi densification and compares its
//! reconstruction with a random mask of the same size.
//!
//! ```text
//! cargo run --release --example voronoi_mask [image.ppm] [mask.pbm]
//! ```

use schwarz_inpaint::{inpaint, io, masks, psnr, InpaintConfig, Method};

fn main() -> schwarz_inpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample256.ppm").to_string());
    let image = io::read_pnm(&input)?;

    let dense = masks::voronoi_densify(&image, &masks::VoronoiConfig::new(0.05, 0))?;
    println!(
        "voronoi: {} known pixels after {} sweeps (target reached: {})",
        dense.mask.count_known(),
        dense.sweeps,
        dense.reached_target
    );
    let random = masks::random_mask(image.width(), image.height(), dense.mask.density(), 0)?;

    let cfg = InpaintConfig::new(Method::MlOras);
    for (name, mask) in [("random", &random), ("voronoi", &dense.mask)] {
        let out = inpaint(&image, mask, &cfg, None)?;
        println!("{name:>8}: density {:.4}, PSNR {:.2} dB", mask.density(), psnr(&out.image, &image)?);
    }
    if let Some(path) = args.next() {
        io::write_mask_pbm(&dense.mask, &path)?;
        println!("mask written to {path}");
    }
    Ok(())
}
