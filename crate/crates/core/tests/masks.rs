use schwarz_inpaint::masks::{random_mask, voronoi_densify, VoronoiConfig};
use schwarz_inpaint::{inpaint, io, psnr, InpaintConfig, Method};

#[test]
fn five_percent_of_4k() {
    let m = random_mask(3840, 2160, 0.05, 1).unwrap();
    assert_eq!(m.count_known(), 414_720);
}

#[test]
fn voronoi_masks_are_deterministic_and_beat_random_ones() {
    let image = io::read_pnm(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample256.ppm")).unwrap();
    let cfg = VoronoiConfig::new(0.05, 7);
    let a = voronoi_densify(&image, &cfg).unwrap();
    let b = voronoi_densify(&image, &cfg).unwrap();
    assert!(a.reached_target);
    assert_eq!(a.mask, b.mask);
    let random = random_mask(256, 256, 0.05, 7).unwrap();
    assert_eq!(a.mask.count_known(), random.count_known());

    let solve = |m| {
        let out = inpaint(&image, m, &InpaintConfig::new(Method::MlOras).with_tolerance(1e-6), None).unwrap();
        psnr(&out.image, &image).unwrap()
    };
    let (pv, pr) = (solve(&a.mask), solve(&random));
    assert!(pv > pr + 3.0, "voronoi {pv:.2} dB vs random {pr:.2} dB");
}
