//! Time to a relative residual of 1e-3 for one method over a ladder of
//! resolutions at 5% density, and the log-log slope of time against pixels.
//!
//! ```text
//! cargo run --release --example scaling_benchmark [method] [repeats]
//! ```

use schwarz_inpaint::metrics::loglog_slope;
use schwarz_inpaint::{inpaint, masks, synth, InpaintConfig, Method};

const SIZES: [(usize, usize); 4] = [(240, 135), (480, 270), (960, 540), (1920, 1080)];

fn main() -> schwarz_inpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let method: Method = args.next().as_deref().unwrap_or("mloras").parse()?;
    let repeats: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3).max(1);

    let (w, h) = SIZES[SIZES.len() - 1];
    let full = synth::natural_image(w, h, 3, 4)?;
    let cfg = InpaintConfig::new(method);

    println!("pixels,time_ms,iterations");
    let mut points = Vec::new();
    for (i, &(w, h)) in SIZES.iter().enumerate() {
        let image = full.downsample_box(w, h)?;
        let mask = masks::random_mask(w, h, 0.05, i as u64)?;
        let mut best = f64::INFINITY;
        let mut iterations = 0;
        for _ in 0..repeats {
            let out = inpaint(&image, &mask, &cfg, None)?;
            best = best.min(out.trace.last().map_or(f64::NAN, |r| r.time_ms));
            iterations = out.iterations;
        }
        println!("{},{best:.2},{iterations}", w * h);
        points.push(((w * h) as f64, best));
    }
    if let Some(slope) = loglog_slope(&points) {
        println!("log-log slope {slope:.3}");
    }
    Ok(())
}
