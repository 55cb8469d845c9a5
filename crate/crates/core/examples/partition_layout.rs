//! Block layout of the Schwarz decomposition: grid shape, block and owned
//! rectangles, and the number of local problems at 4K.
//!
//! ```text
//! cargo run --example partition_layout [width] [height]
//! ```

use schwarz_inpaint::schwarz::{DEFAULT_BLOCK_SIZE, DEFAULT_OVERLAP};
use schwarz_inpaint::partition_domain;

fn main() -> schwarz_inpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let width: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let height: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(70);

    let part = partition_domain(width, height, DEFAULT_BLOCK_SIZE, DEFAULT_OVERLAP)?;
    let (bx, by) = part.grid_shape();
    println!("{width}x{height}: {bx} x {by} blocks");
    println!("{:>4}  {:>20}  {:>20}", "i", "block (x, y, w, h)", "owned (x, y, w, h)");
    for (i, s) in part.subdomains().iter().enumerate().take(32) {
        let b = s.block;
        let o = s.owned;
        println!(
            "{i:>4}  {:>20}  {:>20}",
            format!("{}, {}, {}, {}", b.x0, b.y0, b.w, b.h),
            format!("{}, {}, {}, {}", o.x0, o.y0, o.w, o.h)
        );
    }

    let uhd = partition_domain(3840, 2160, DEFAULT_BLOCK_SIZE, DEFAULT_OVERLAP)?;
    let (bx, by) = uhd.grid_shape();
    println!("3840x2160: {bx} x {by} = {} blocks, {} local problems in RGB", uhd.len(), 3 * uhd.len());
    Ok(())
}
