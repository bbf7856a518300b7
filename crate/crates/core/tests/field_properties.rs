mod common;

use dmiwall_core::field::{norms, scalar_norms, seminorm_calh1, to_spherical};
use dmiwall_core::vec3::E1;
use dmiwall_core::walls::WallParams;
use dmiwall_core::{Grid, Vec3};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spherical_round_trip(seed in 0u64..10_000) {
        let g = Grid::new(10.0, 201).unwrap();
        let m = common::random_equatorial(&g, seed);
        let back = to_spherical(&m).unwrap().to_field().unwrap();
        let err = back.diff(&m).unwrap().max_abs();
        prop_assert!(err <= 1e-12, "{}", err);
        prop_assert!(back.unit_defect() <= 1e-12);
    }

    #[test]
    fn rotation_is_an_l2_isometry(seed in 0u64..10_000, phi in -10.0f64..10.0) {
        let g = Grid::new(10.0, 201).unwrap();
        let m = common::random_equatorial(&g, seed);
        let a = norms(&g, m.values()).l2;
        let b = norms(&g, m.rotated(phi).values()).l2;
        prop_assert!((a - b).abs() <= 1e-13 * a);
        prop_assert!(m.rotated(phi).unit_defect() <= 1e-12);
    }
}

#[test]
fn sech_quadrature() {
    let g = Grid::new(20.0, 4001).unwrap();
    let f: Vec<f64> = g.points().map(|x| 1.0 / x.cosh()).collect();
    let n = scalar_norms(&g, &f);
    assert!((n.l2 * n.l2 - 2.0).abs() < 1e-6);
}

#[test]
fn wall_derivative_norm_and_calh1() {
    let g = Grid::new(20.0, 4001).unwrap();
    let p = WallParams::centred(0.0).unwrap();
    let s = p.samples(&g);
    let dw: Vec<Vec3> = s.iter().map(|q| q.dw).collect();
    assert!((norms(&g, &dw).l2.powi(2) - 2.0).abs() < 1e-6);
    let w = p.profile(&g);
    assert!((seminorm_calh1(&w) - 2.0 * 2f64.sqrt()).abs() < 1e-3);
}

#[test]
fn h1dot_and_h2dot_converge_at_second_order() {
    // f = (sech x, tanh x sech x, 0): smooth, decaying
    let f = |x: f64| Vec3::new(1.0 / x.cosh(), x.tanh() / x.cosh(), 0.0);
    let mut h1 = Vec::new();
    let mut h2 = Vec::new();
    for n in [401, 801, 1601, 3201] {
        let g = Grid::new(20.0, n).unwrap();
        let v: Vec<Vec3> = g.points().map(f).collect();
        let r = norms(&g, &v);
        h1.push(r.h1dot);
        h2.push(r.h2dot);
    }
    // exact values are fixed by the Richardson limit of the finest pair
    let limit = |a: &[f64]| a[3] + (a[3] - a[2]) / 3.0;
    for a in [&h1, &h2] {
        let l = limit(a);
        let ratio = (a[0] - l) / (a[1] - l);
        assert!((3.6..=4.4).contains(&ratio), "{ratio} {a:?}");
    }
}

#[test]
fn constant_pole_has_zero_calh1() {
    let g = Grid::new(10.0, 101).unwrap();
    let m = dmiwall_core::MagnetizationField::constant(g, E1).unwrap();
    assert_eq!(seminorm_calh1(&m), 0.0);
}
