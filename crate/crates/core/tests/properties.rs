use std::f64::consts::PI;

use proptest::prelude::*;
use riesz_core::fft::{fft2, ifft2};
use riesz_core::grid::{relative_l2, ImageGrid};
use riesz_core::representation::{build_hierarchy, extract_features, feature_count, RieszConfig};
use riesz_core::riesz::{riesz_transform, RieszOrder};
use riesz_core::verify::{hilbert_bound_excess, homogeneity_defect, layer_expansion, relative_linf};

fn grid(max_side: usize) -> impl Strategy<Value = ImageGrid> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(h, w)| {
        prop::collection::vec(-1.0f64..1.0, h * w).prop_map(move |v| ImageGrid::new(h, w, v).unwrap())
    })
}

fn grid_pair(max_side: usize) -> impl Strategy<Value = (ImageGrid, ImageGrid)> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(h, w)| {
        let side = prop::collection::vec(-1.0f64..1.0, h * w);
        (side.clone(), side).prop_map(move |(a, b)| (ImageGrid::new(h, w, a).unwrap(), ImageGrid::new(h, w, b).unwrap()))
    })
}

/// Skips inputs too close to constant for a relative bound to mean anything.
fn varied(f: &ImageGrid) -> bool {
    f.dc_free().norm() > 1e-6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dft_round_trip(f in grid(24)) {
        prop_assert!(relative_l2(&ifft2(&fft2(&f)).unwrap(), &f) <= 1e-10);
    }

    #[test]
    fn dft_parseval(f in grid(24)) {
        let spec = fft2(&f);
        let energy = spec.energy() / f.len() as f64;
        prop_assert!((energy - f.norm_sq()).abs() <= 1e-10 * f.norm_sq().max(1e-300));
    }

    #[test]
    fn riesz_commutes_with_circular_shifts(f in grid(20), dr in -20isize..20, dc in -20isize..20, n1 in 0u32..3, n2 in 0u32..3) {
        prop_assume!(n1 + n2 > 0);
        let n = RieszOrder { n1, n2 };
        let a = riesz_transform(&f.shift_circular(dr, dc), n).unwrap();
        let b = riesz_transform(&f, n).unwrap().shift_circular(dr, dc);
        prop_assert!(a.distance(&b) <= 1e-10 * f.norm());
    }

    #[test]
    fn riesz_contracts(f in grid(20), n1 in 0u32..4, n2 in 0u32..4) {
        prop_assume!(n1 + n2 > 0 && n1 + n2 <= 3);
        let out = riesz_transform(&f, RieszOrder { n1, n2 }).unwrap();
        prop_assert!(out.norm() <= f.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn riesz_is_nonexpansive((f, g) in grid_pair(16), n1 in 0u32..3, n2 in 0u32..3) {
        prop_assume!(n1 + n2 > 0);
        let n = RieszOrder { n1, n2 };
        let d = riesz_transform(&f, n).unwrap().distance(&riesz_transform(&g, n).unwrap());
        prop_assert!(d <= f.distance(&g) * (1.0 + 1e-12));
    }

    #[test]
    fn steered_hilbert_bounds(f in grid(20), phi in 0.0f64..2.0 * PI) {
        prop_assume!(varied(&f));
        let (pair, second) = hilbert_bound_excess(&f, phi).unwrap();
        prop_assert!(pair <= 1e-10 && second <= 1e-10, "pair {pair}, second {second}");
    }

    #[test]
    fn layer_nonexpansive_with_inverse_angle_count((f, g) in grid_pair(16), eight in any::<bool>()) {
        prop_assume!(f.distance(&g) > 1e-9);
        let excess = layer_expansion(&f, &g, if eight { 8 } else { 4 }).unwrap();
        prop_assert!(excess <= 1e-10);
    }

    #[test]
    fn scale_constant_homogeneity(f in grid(12), c in 0.05f64..5.0) {
        prop_assume!(varied(&f));
        let base = RieszConfig::new(2, 4, 1.0).unwrap();
        prop_assert!(homogeneity_defect(&f, &base, c).unwrap() <= 1e-10);
    }

    #[test]
    fn energy_decays_with_depth(f in grid(12), eight in any::<bool>()) {
        let m = if eight { 8 } else { 4 };
        let config = RieszConfig::new(3, m, 1.0 / m as f64).unwrap();
        let maps = build_hierarchy(&f, &config).unwrap();
        let mut by_depth = vec![(0.0f64, 0usize); 4];
        for (path, map) in &maps {
            let slot = &mut by_depth[path.depth()];
            slot.0 += map.norm();
            slot.1 += 1;
        }
        let means: Vec<f64> = by_depth.iter().map(|(s, n)| s / *n as f64).collect();
        for k in 1..means.len() {
            prop_assert!(means[k] <= means[k - 1] * (1.0 + 1e-12), "{means:?}");
        }
    }

    #[test]
    fn features_translation_invariant(f in grid(12), dr in -12isize..12, dc in -12isize..12) {
        let config = RieszConfig::new(2, 4, 1.0).unwrap();
        let a = extract_features(&f.shift_circular(dr, dc), &config).unwrap();
        let b = extract_features(&f, &config).unwrap();
        prop_assert!(relative_linf(&a.values, &b.values) <= 1e-10);
    }
}

#[test]
fn feature_count_over_depths_and_angles() {
    let f = ImageGrid::from_fn(8, 8, |p, q| ((p * 3 + q * 5) % 7) as f64);
    for depth in 0..=4 {
        for angles in [4, 8] {
            let config = RieszConfig::new(depth, angles, 1.0).unwrap();
            let expect: usize = (0..=depth as u32).map(|k| angles.pow(k)).sum();
            assert_eq!(extract_features(&f, &config).unwrap().len(), expect);
            assert_eq!(config.feature_count(), expect);
            assert_eq!(feature_count(depth, angles), expect);
        }
    }
}
