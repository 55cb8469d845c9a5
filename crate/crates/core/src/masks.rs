//! Inpainting-mask generation: uniform random sampling and Voronoi
//! densification.
//!
//! Densification starts from a sparse random mask and repeatedly inpaints,
//! splits the image into Voronoi cells of the current mask points, and adds a
//! point in each of the cells with the largest reconstruction error.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{InpaintError, Result};
use crate::image::{ImageBuffer, InpaintingMask};
use crate::multilevel::{multilevel_solve, MultilevelConfig};

fn target_count(pixels: usize, density: f64) -> Result<usize> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(InpaintError::InvalidConfig(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let count = (density * pixels as f64).round() as usize;
    if count == 0 {
        return Err(InpaintError::InvalidConfig(format!(
            "density {density} selects no pixel of {pixels}"
        )));
    }
    Ok(count.min(pixels))
}

/// Exactly `round(density * width * height)` known pixels drawn without
/// replacement; the same seed always yields the same mask.
pub fn random_mask(width: usize, height: usize, density: f64, seed: u64) -> Result<InpaintingMask> {
    let n = width * height;
    let count = target_count(n, density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut known = vec![false; n];
    for i in index::sample(&mut rng, n, count) {
        known[i] = true;
    }
    InpaintingMask::new(width, height, known)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiConfig {
    pub target_density: f64,
    pub initial_density: f64,
    /// Sweep cap.
    pub max_sweeps: usize,
    /// Share of Voronoi cells (ranked by error) that receive a point per sweep.
    pub cell_fraction: f64,
    /// Relative-residual target of the inpainting inside each sweep.
    pub inner_tolerance: f64,
    pub seed: u64,
}

impl VoronoiConfig {
    pub fn new(target_density: f64, seed: u64) -> Self {
        Self {
            target_density,
            initial_density: target_density / 4.0,
            max_sweeps: 64,
            cell_fraction: 0.2,
            inner_tolerance: 1e-3,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VoronoiOutcome {
    pub mask: InpaintingMask,
    pub sweeps: usize,
    /// False when the sweep cap stopped densification early; the mask is
    /// then the densest one reached.
    pub reached_target: bool,
}

/// Nearest-generator labels: for every pixel, the index (into `points`) of
/// the closest point in Euclidean distance, ties going to the point with the
/// lower pixel index. `points` must be sorted by pixel index.
pub fn voronoi_cells(width: usize, height: usize, points: &[usize]) -> Vec<u32> {
    assert!(!points.is_empty());
    let n = width * height;
    let side = ((n as f64 / points.len() as f64).sqrt().ceil() as usize).max(1);
    let bw = width.div_ceil(side);
    let bh = height.div_ceil(side);
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); bw * bh];
    for (k, &p) in points.iter().enumerate() {
        let (x, y) = (p % width, p / width);
        buckets[(y / side) * bw + x / side].push(k as u32);
    }

    let max_ring = bw.max(bh);
    (0..n)
        .into_par_iter()
        .map(|p| {
            let (x, y) = ((p % width) as i64, (p / width) as i64);
            let (bx, by) = (x as usize / side, y as usize / side);
            let mut best: Option<(i64, u32)> = None;
            for r in 0..=max_ring {
                if r > 0 {
                    let lb = ((r - 1) * side + 1) as i64;
                    if let Some((d, _)) = best {
                        if lb * lb > d {
                            break;
                        }
                    }
                }
                let (r, bx, by) = (r as i64, bx as i64, by as i64);
                for cy in (by - r)..=(by + r) {
                    if cy < 0 || cy >= bh as i64 {
                        continue;
                    }
                    let on_edge_row = cy == by - r || cy == by + r;
                    let step = if on_edge_row { 1 } else { (2 * r).max(1) };
                    let mut cx = bx - r;
                    while cx <= bx + r {
                        if cx >= 0 && cx < bw as i64 {
                            for &k in &buckets[cy as usize * bw + cx as usize] {
                                let q = points[k as usize];
                                let dx = (q % width) as i64 - x;
                                let dy = (q / width) as i64 - y;
                                let d = dx * dx + dy * dy;
                                // points are sorted, so a lower k is a lower pixel index
                                if best.is_none_or(|(bd, bk)| d < bd || (d == bd && k < bk)) {
                                    best = Some((d, k));
                                }
                            }
                        }
                        cx += step;
                    }
                }
            }
            best.expect("at least one generator").1
        })
        .collect()
}

/// Grows a mask towards `cfg.target_density` by error-driven insertion in
/// Voronoi cells of the current mask points.
pub fn voronoi_densify(image: &ImageBuffer, cfg: &VoronoiConfig) -> Result<VoronoiOutcome> {
    let (w, h) = (image.width(), image.height());
    let n = w * h;
    let target = target_count(n, cfg.target_density)?;
    if !(cfg.initial_density < cfg.target_density) {
        return Err(InpaintError::InvalidConfig(format!(
            "initial density {} must be below the target {}",
            cfg.initial_density, cfg.target_density
        )));
    }
    if !(cfg.cell_fraction > 0.0 && cfg.cell_fraction <= 1.0) {
        return Err(InpaintError::InvalidConfig(format!(
            "cell fraction must lie in (0, 1], got {}",
            cfg.cell_fraction
        )));
    }
    let start = ((cfg.initial_density * n as f64).round() as usize).max(1);
    let mut mask = random_mask(w, h, start as f64 / n as f64, cfg.seed)?;
    let solve_cfg = MultilevelConfig {
        tolerance: cfg.inner_tolerance,
        ..MultilevelConfig::default()
    };

    let mut sweeps = 0;
    while mask.count_known() < target && sweeps < cfg.max_sweeps {
        sweeps += 1;
        let recon = multilevel_solve(image, &mask, &solve_cfg, None)?.image;
        let err: Vec<f64> = (0..n)
            .map(|i| {
                (0..image.channels())
                    .map(|c| {
                        let d = recon.channel(c)[i] - image.channel(c)[i];
                        d * d
                    })
                    .sum()
            })
            .collect();

        let points: Vec<usize> = (0..n).filter(|&i| mask.is_known(i)).collect();
        let labels = voronoi_cells(w, h, &points);

        // per cell: summed error, area, best insertion candidate
        let mut cell_err = vec![0.0; points.len()];
        let mut cell_area = vec![0usize; points.len()];
        let mut candidate: Vec<Option<(f64, i64, usize)>> = vec![None; points.len()];
        for p in 0..n {
            let k = labels[p] as usize;
            cell_err[k] += err[p];
            cell_area[k] += 1;
            if mask.is_known(p) {
                continue;
            }
            let g = points[k];
            let dx = (g % w) as i64 - (p % w) as i64;
            let dy = (g / w) as i64 - (p / w) as i64;
            let key = (err[p], dx * dx + dy * dy, p);
            let better = match candidate[k] {
                None => true,
                Some((e, d, _)) => key.0 > e || (key.0 == e && key.1 > d),
            };
            if better {
                candidate[k] = Some(key);
            }
        }

        let mut order: Vec<usize> = (0..points.len()).filter(|&k| candidate[k].is_some()).collect();
        order.sort_by(|&a, &b| {
            cell_err[b]
                .total_cmp(&cell_err[a])
                .then(cell_area[b].cmp(&cell_area[a]))
                .then(a.cmp(&b))
        });
        let per_sweep = ((cfg.cell_fraction * points.len() as f64).ceil() as usize).max(1);
        let budget = per_sweep.min(target - mask.count_known());
        if order.is_empty() {
            break;
        }
        let mut known = mask.known().to_vec();
        for &k in order.iter().take(budget) {
            let (_, _, p) = candidate[k].expect("filtered above");
            known[p] = true;
        }
        mask = InpaintingMask::new(w, h, known)?;
    }

    Ok(VoronoiOutcome {
        reached_target: mask.count_known() >= target,
        mask,
        sweeps,
    })
}
