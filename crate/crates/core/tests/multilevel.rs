mod common;

use common::{mask, max_abs_diff, noise_image, proptest_config};
use proptest::prelude::*;
use schwarz_inpaint::multilevel::{prolongate, restrict_mask, Averaging, Pyramid};
use schwarz_inpaint::schwarz::{solve_schwarz, OuterConfig};
use schwarz_inpaint::solvers::SolverConfig;
use schwarz_inpaint::{inpaint, partition_domain, Flavour, InpaintConfig, InpaintingMask, Method};

// Coarse pixel by coarse pixel from the definition: OR over the clipped 2x2
// group, mean over the chosen members.
fn brute_force_restrict(
    m: &InpaintingMask,
    values: &[f64],
    averaging: Averaging,
) -> (Vec<bool>, Vec<f64>) {
    let (w, h) = (m.width(), m.height());
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let mut known = Vec::new();
    let mut vals = Vec::new();
    for j in 0..ch {
        for i in 0..cw {
            let mut members = Vec::new();
            let mut any = false;
            for y in [2 * j, 2 * j + 1] {
                for x in [2 * i, 2 * i + 1] {
                    if x < w && y < h {
                        any |= m.is_known_at(x, y);
                        if averaging == Averaging::AllPixels || m.is_known_at(x, y) {
                            members.push(values[y * w + x]);
                        }
                    }
                }
            }
            known.push(any);
            vals.push(if any {
                members.iter().sum::<f64>() / members.len() as f64
            } else {
                0.0
            });
        }
    }
    (known, vals)
}

proptest! {
    #![proptest_config(proptest_config(100))]

    #[test]
    fn restriction_matches_brute_force(
        w in 2usize..40, h in 2usize..40, d in 0.01f64..0.9, seed in any::<u64>(), all in any::<bool>()
    ) {
        let m = mask(w, h, d, seed);
        let f = noise_image(w, h, 1, seed ^ 3);
        let averaging = if all { Averaging::AllPixels } else { Averaging::KnownOnly };
        let (cm, cv) = restrict_mask(&m, &f, averaging).unwrap();
        let (known, vals) = brute_force_restrict(&m, f.data(), averaging);
        prop_assert_eq!(cm.known(), &known[..]);
        prop_assert_eq!(cv.data(), &vals[..]);
    }

    #[test]
    fn density_never_drops_on_even_grids(
        qw in 1usize..30, qh in 1usize..30, d in 0.005f64..0.6, seed in any::<u64>()
    ) {
        let (w, h) = (4 * qw, 4 * qh);
        let m = mask(w, h, d, seed);
        let f = noise_image(w, h, 1, seed);
        let p = Pyramid::build(&f, &m, 3, Averaging::KnownOnly, 32, 6).unwrap();
        for pair in p.levels().windows(2) {
            prop_assert!(pair[1].mask.density() >= pair[0].mask.density());
        }
    }

    #[test]
    fn prolongation_stays_in_range(cw in 1usize..20, ch in 1usize..20, seed in any::<u64>(), ow in any::<bool>(), oh in any::<bool>()) {
        let fw = (2 * cw).saturating_sub(usize::from(ow)).max(1);
        let fh = (2 * ch).saturating_sub(usize::from(oh)).max(1);
        let (cw, ch) = (fw.div_ceil(2), fh.div_ceil(2));
        let coarse = noise_image(cw, ch, 1, seed).into_data();
        let fine = prolongate(&coarse, (cw, ch), (fw, fh)).unwrap();
        let lo = coarse.iter().cloned().fold(f64::MAX, f64::min);
        let hi = coarse.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(fine.iter().all(|&v| v >= lo - 1e-15 && v <= hi + 1e-15));
    }
}

#[test]
fn odd_grids_can_lower_density() {
    // three pixels, two known: 2/3 on the fine grid, 1/2 on the coarse one
    let m = InpaintingMask::new(3, 1, vec![true, true, false]).unwrap();
    let f = noise_image(3, 1, 1, 0);
    let (c, _) = restrict_mask(&m, &f, Averaging::KnownOnly).unwrap();
    assert!(c.density() < m.density());
}

#[test]
fn single_level_pyramid_is_plain_schwarz() {
    let f = noise_image(70, 45, 3, 8);
    let m = mask(70, 45, 0.05, 8);
    let ml = inpaint(&f, &m, &InpaintConfig::new(Method::MlOras).with_levels(1), None).unwrap();
    let sl = inpaint(&f, &m, &InpaintConfig::new(Method::Oras), None).unwrap();
    let direct = solve_schwarz(
        &f,
        &m,
        partition_domain(70, 45, 32, 6).unwrap(),
        Flavour::oras(),
        OuterConfig::new(1e-3),
        SolverConfig::local_default(),
    )
    .unwrap();
    assert_eq!(ml.image, sl.image);
    assert_eq!(ml.image, direct.image);
    assert_eq!(ml.iterations, direct.iterations);
}

#[test]
fn multilevel_and_single_level_share_the_fixed_point() {
    let f = schwarz_inpaint::synth::natural_image(96, 80, 3, 1).unwrap();
    let m = mask(96, 80, 0.05, 1);
    let reference = inpaint(&f, &m, &InpaintConfig::new(Method::Cg).with_tolerance(1e-8), None).unwrap();
    for method in [Method::MlCg, Method::MlRas, Method::MlOras, Method::Oras] {
        let out = inpaint(&f, &m, &InpaintConfig::new(method).with_tolerance(1e-8), None).unwrap();
        assert!(out.converged, "{method}");
        assert!(max_abs_diff(out.image.data(), reference.image.data()) <= 1e-6, "{method}");
    }
}

#[test]
fn pyramid_fewer_finest_iterations() {
    let f = schwarz_inpaint::synth::natural_image(256, 256, 3, 4).unwrap();
    let m = mask(256, 256, 0.05, 4);
    let ml = inpaint(&f, &m, &InpaintConfig::new(Method::MlOras), None).unwrap();
    let sl = inpaint(&f, &m, &InpaintConfig::new(Method::Oras), None).unwrap();
    assert!(ml.iterations < sl.iterations, "{} vs {}", ml.iterations, sl.iterations);
}
