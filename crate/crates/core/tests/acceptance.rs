//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails.

mod common;

use std::time::Instant;

use common::{corpus_file, dense_inpaint, mask, max_abs_diff, noise_image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schwarz_inpaint::io::{decode_pbm, decode_pnm, encode_pbm, encode_pnm};
use schwarz_inpaint::masks::{random_mask, voronoi_densify, VoronoiConfig};
use schwarz_inpaint::metrics::loglog_slope;
use schwarz_inpaint::multilevel::{restrict_mask, Averaging, Pyramid};
use schwarz_inpaint::{
    inpaint, io, partition_domain, psnr, synth, ImageBuffer, InpaintConfig, InpaintingMask, Method, SolveOutcome,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn solve(f: &ImageBuffer, m: &InpaintingMask, cfg: &InpaintConfig) -> SolveOutcome {
    inpaint(f, m, cfg, None).expect("solve succeeds")
}

fn sample() -> ImageBuffer {
    io::read_pnm(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample256.ppm")).expect("bundled sample")
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for k in 0..50 {
        let (w, h) = (rng.gen_range(8..=32), rng.gen_range(8..=32));
        let density = rng.gen_range(0.05..=0.5);
        let channels = if k % 2 == 0 { 1 } else { 3 };
        let m = mask(w, h, density, rng.gen());
        let f = noise_image(w, h, channels, rng.gen());
        let out = solve(&f, &m, &InpaintConfig::new(Method::MlOras).with_tolerance(1e-8));
        unconverged += usize::from(!out.converged);
        worst = worst.max(max_abs_diff(out.image.data(), dense_inpaint(&f, &m).data()));
    }
    verdict(
        worst <= 1e-6 && unconverged == 0,
        format!("max |ML-ORAS - dense| = {worst:.2e} over 50 instances, {unconverged} unconverged (limit 1e-6)"),
    )
}

fn partition_of_unity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut exact = 0;
    let mut shifted = 0;
    for _ in 0..20 {
        let block = rng.gen_range(4..40);
        let overlap = rng.gen_range(1..block);
        let (w, h) = (rng.gen_range(block..200), rng.gen_range(1..200));
        let part = partition_domain(w, h, block, overlap).unwrap();
        let stride = block - overlap;
        if w > block && (w - block) % stride != 0 {
            shifted += 1;
        }
        let v = noise_image(w, h, 1, rng.gen()).into_data();
        let mut sum = vec![0.0; w * h];
        for i in 0..part.len() {
            part.add_extended(i, &part.restrict(i, &v).unwrap(), &mut sum).unwrap();
        }
        exact += usize::from(sum == v);
    }
    verdict(
        exact == 20 && shifted > 0,
        format!("{exact}/20 bitwise identities, {shifted} layouts with a shifted last block"),
    )
}

fn block_count() -> Verdict {
    let part = partition_domain(3840, 2160, 32, 6).unwrap();
    let (bx, by) = part.grid_shape();
    let n = part.len();
    verdict(
        n == 12284 && 3 * n == 36852,
        format!("{bx} x {by} = {n} subdomains, {} local problems", 3 * n),
    )
}

fn partition_independence() -> Verdict {
    let f = synth::natural_image(64, 64, 3, 4).unwrap();
    let m = random_mask(64, 64, 0.05, 4).unwrap();
    let run = |block, overlap| {
        let cfg = InpaintConfig {
            block_size: block,
            overlap,
            ..InpaintConfig::new(Method::Oras).with_tolerance(1e-10)
        };
        solve(&f, &m, &cfg)
    };
    let (a, b) = (run(32, 6), run(24, 5));
    let diff = max_abs_diff(a.image.data(), b.image.data());
    verdict(
        a.converged && b.converged && diff <= 1e-6,
        format!("blocks 32/6 vs 24/5: max difference {diff:.2e} (limit 1e-6)"),
    )
}

fn psnr_saturation(voronoi_256: &InpaintingMask, image: &ImageBuffer) -> Verdict {
    let at = |tol| {
        let out = solve(image, voronoi_256, &InpaintConfig::new(Method::MlOras).with_tolerance(tol));
        psnr(&out.image, image).unwrap()
    };
    let (coarse, fine) = (at(1e-3), at(1e-6));
    verdict(
        (coarse - fine).abs() <= 0.1,
        format!("PSNR {coarse:.3} dB at 1e-3 vs {fine:.3} dB at 1e-6 (limit 0.1 dB)"),
    )
}

// fastest of `repeats` runs to the tolerance
fn time_to(f: &ImageBuffer, m: &InpaintingMask, method: Method, tol: f64, repeats: usize) -> f64 {
    (0..repeats)
        .map(|_| {
            let out = solve(f, m, &InpaintConfig::new(method).with_tolerance(tol));
            assert!(out.converged, "{method} did not converge");
            out.trace.first_below(tol).expect("converged").time_ms
        })
        .fold(f64::INFINITY, f64::min)
}

fn method_ordering() -> Verdict {
    let f = synth::natural_image(512, 512, 3, 6).unwrap();
    let m = voronoi_densify(&f, &VoronoiConfig::new(0.05, 6)).unwrap().mask;
    let t = |method| time_to(&f, &m, method, 1e-3, 5);
    let (cg, mlcg, oras, mloras) = (t(Method::Cg), t(Method::MlCg), t(Method::Oras), t(Method::MlOras));
    let its = |method| solve(&f, &m, &InpaintConfig::new(method).with_tolerance(1e-6)).iterations;
    let (ras_its, oras_its) = (its(Method::Ras), its(Method::Oras));
    let ratios = [mlcg / mloras, oras / mloras, cg / mlcg];
    verdict(
        ratios.iter().all(|&r| r >= 1.5) && oras_its <= ras_its,
        format!(
            "ms to 1e-3: cg {cg:.1}, mlcg {mlcg:.1}, oras {oras:.1}, mloras {mloras:.1}; \
             mlcg/mloras {:.2}, oras/mloras {:.2}, cg/mlcg {:.2} (need 1.5); \
             outer its to 1e-6: oras {oras_its}, ras {ras_its}",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn scaling_law() -> Verdict {
    let source = synth::natural_image(1920, 1080, 3, 7).unwrap();
    let mut points = Vec::new();
    for (k, (w, h)) in [(240, 135), (480, 270), (960, 540), (1920, 1080)].into_iter().enumerate() {
        let f = source.downsample_box(w, h).unwrap();
        let m = random_mask(w, h, 0.05, 70 + k as u64).unwrap();
        points.push(((w * h) as f64, time_to(&f, &m, Method::MlOras, 1e-3, 3)));
    }
    let slope = loglog_slope(&points).unwrap();
    let times: Vec<String> = points.iter().map(|(p, t)| format!("{p}px {t:.1}ms")).collect();
    verdict(
        (0.8..=1.3).contains(&slope),
        format!("slope {slope:.3} (range 0.8-1.3); {}", times.join(", ")),
    )
}

fn multilevel_advantage(voronoi_256: &InpaintingMask, image: &ImageBuffer) -> Verdict {
    let ml = solve(image, voronoi_256, &InpaintConfig::new(Method::MlOras));
    let sl = solve(image, voronoi_256, &InpaintConfig::new(Method::Oras));
    verdict(
        ml.converged && sl.converged && ml.iterations < sl.iterations,
        format!("finest-level outer iterations: 3-level {} vs single-level {}", ml.iterations, sl.iterations),
    )
}

fn mask_subsampling() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut monotone = 0;
    let mut exact = 0;
    for _ in 0..100 {
        // even extents on every level; odd grids can lose density, see the
        // multilevel tests
        let (w, h) = (4 * rng.gen_range(1..40), 4 * rng.gen_range(1..40));
        let m = mask(w, h, rng.gen_range(0.005..0.6), rng.gen());
        let f = noise_image(w, h, 1, rng.gen());
        let p = Pyramid::build(&f, &m, 3, Averaging::KnownOnly, 32, 6).unwrap();
        let d: Vec<f64> = p.levels().iter().map(|l| l.mask.density()).collect();
        monotone += usize::from(d[1] >= d[0] && d[2] >= d[1]);

        let (cm, cv) = restrict_mask(&m, &f, Averaging::KnownOnly).unwrap();
        let mut ok = true;
        for cy in 0..h / 2 {
            for cx in 0..w / 2 {
                let group = [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(dx, dy)| (2 * cy + dy) * w + 2 * cx + dx);
                let known: Vec<f64> = group.iter().filter(|&&i| m.is_known(i)).map(|&i| f.data()[i]).collect();
                let ci = cy * (w / 2) + cx;
                let want = if known.is_empty() { 0.0 } else { known.iter().sum::<f64>() / known.len() as f64 };
                ok &= cm.is_known(ci) == !known.is_empty() && cv.data()[ci] == want;
            }
        }
        exact += usize::from(ok);
    }
    verdict(
        monotone == 100 && exact == 100,
        format!("density monotone on {monotone}/100 pyramids, restriction exact on {exact}/100 masks"),
    )
}

fn maximum_principle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for k in 0..24 {
        let (w, h) = (rng.gen_range(8..80), rng.gen_range(8..80));
        let m = mask(w, h, rng.gen_range(0.02..0.3), rng.gen());
        let f = noise_image(w, h, 3, rng.gen());
        let out = solve(&f, &m, &InpaintConfig::new(Method::ALL[k % 6]).with_tolerance(1e-8));
        for c in 0..3 {
            let known = f.channel(c).iter().zip(m.known()).filter(|(_, &k)| k).map(|(&v, _)| v);
            let (lo, hi) = known.fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(v), h.max(v)));
            let over = out.image.channel(c).iter().map(|&u| (lo - u).max(u - hi)).fold(0.0, f64::max);
            worst = worst.max(over);
            violations += usize::from(over > 1e-6);
        }
    }
    let mut constant_err = 0.0f64;
    let mut constant_bytes = true;
    for method in Method::ALL {
        let f = ImageBuffer::filled(61, 47, 3, 0.6).unwrap();
        let out = solve(&f, &mask(61, 47, 0.05, 3), &InpaintConfig::new(method).with_tolerance(1e-10));
        constant_err = constant_err.max(max_abs_diff(out.image.data(), f.data()));
        constant_bytes &= encode_pnm(&out.image) == encode_pnm(&f);
    }
    verdict(
        violations == 0 && constant_err <= 1e-9 && constant_bytes,
        format!(
            "largest excursion {worst:.1e} over 72 channel solves; constant data error {constant_err:.1e}, \
             quantised output {}",
            if constant_bytes { "identical" } else { "differs" }
        ),
    )
}

fn io_bit_exactness() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut identical = 0;
    for k in 0..100 {
        let bytes = corpus_file(&mut rng);
        let path = dir.path().join(format!("f{k}"));
        std::fs::write(&path, &bytes).unwrap();
        let read = std::fs::read(&path).unwrap();
        let again = if &read[..2] == b"P4" {
            encode_pbm(&decode_pbm(&read).unwrap())
        } else {
            encode_pnm(&decode_pnm(&read).unwrap())
        };
        identical += usize::from(again == bytes);
    }
    verdict(identical == 100, format!("{identical}/100 files byte-identical"))
}

fn main() {
    let image = sample();
    let voronoi_256 = voronoi_densify(&image, &VoronoiConfig::new(0.05, 5)).unwrap().mask;

    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("partition of unity", Box::new(partition_of_unity)),
        ("block count", Box::new(block_count)),
        ("partition independence", Box::new(partition_independence)),
        ("PSNR saturation", Box::new(|| psnr_saturation(&voronoi_256, &image))),
        ("method ordering", Box::new(method_ordering)),
        ("scaling law", Box::new(scaling_law)),
        ("multilevel advantage", Box::new(|| multilevel_advantage(&voronoi_256, &image))),
        ("mask subsampling", Box::new(mask_subsampling)),
        ("maximum principle", Box::new(maximum_principle)),
        ("I/O bit-exactness", Box::new(io_bit_exactness)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {:>2} {name}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            k + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
