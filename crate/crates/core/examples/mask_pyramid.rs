//! Coarse-to-fine pyramid of a sparse mask: size, known pixels and density
//! of each level, then the finest-level iterations with 1 to 4 levels.
//!
//! ```text
//! cargo run --release --example mask_pyramid
//! ```

use schwarz_inpaint::multilevel::{Averaging, Pyramid};
use schwarz_inpaint::schwarz::{DEFAULT_BLOCK_SIZE, DEFAULT_OVERLAP};
use schwarz_inpaint::{inpaint, io, masks, InpaintConfig, Method};

fn main() -> schwarz_inpaint::Result<()> {
    let image = io::read_pnm(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample256.ppm"))?;
    let mask = masks::random_mask(image.width(), image.height(), 0.05, 2)?;

    let pyramid = Pyramid::build(
        &image,
        &mask,
        4,
        Averaging::KnownOnly,
        DEFAULT_BLOCK_SIZE,
        DEFAULT_OVERLAP,
    )?;
    for level in pyramid.levels() {
        println!(
            "level {}: {}x{}, {} known, density {:.3}, {} blocks",
            level.level,
            level.mask.width(),
            level.mask.height(),
            level.mask.count_known(),
            level.mask.density(),
            level.partition.len()
        );
    }

    for levels in 1..=4 {
        let cfg = InpaintConfig::new(Method::MlOras).with_levels(levels);
        let out = inpaint(&image, &mask, &cfg, None)?;
        let ms = out.trace.last().map_or(f64::NAN, |r| r.time_ms);
        println!("{levels} level(s): {} finest iterations, {ms:.1} ms", out.iterations);
    }
    Ok(())
}
