//! Sweeps the ORAS transmission parameter on a fixed 256x256 instance with
//! 5% random known pixels and reports the outer iterations to 1e-6.
//!
//! ```text
//! cargo run --release --example calibrate_alpha [image.ppm]
//! ```

use schwarz_inpaint::{inpaint, io, masks, InpaintConfig, Method};

const ALPHAS: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];

fn main() -> schwarz_inpaint::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample256.ppm").to_string());
    let image = io::read_pnm(&path)?;
    let mask = masks::random_mask(image.width(), image.height(), 0.05, 0)?;

    let ras = inpaint(&image, &mask, &InpaintConfig::new(Method::Ras).with_tolerance(1e-6), None)?;
    println!("ras         {:>4} outer iterations", ras.iterations);

    let mut best: Option<(f64, usize)> = None;
    for alpha in ALPHAS {
        let cfg = InpaintConfig {
            alpha,
            ..InpaintConfig::new(Method::Oras).with_tolerance(1e-6)
        };
        let out = inpaint(&image, &mask, &cfg, None)?;
        println!(
            "oras a={alpha:<4} {:>4} outer iterations{}",
            out.iterations,
            if out.converged { "" } else { " (not converged)" }
        );
        // ties go to the smaller alpha
        if out.converged && best.is_none_or(|(_, its)| out.iterations < its) {
            best = Some((alpha, out.iterations));
        }
    }
    match best {
        Some((alpha, its)) => println!("best alpha {alpha} ({its} iterations)"),
        None => println!("no alpha converged"),
    }
    Ok(())
}
