mod common;

use dmiwall_core::experiments::random_tangent;
use dmiwall_core::field::{exp_map_perturb, from_spherical};
use dmiwall_core::llg::{integrate, llg_rhs, spherical_rhs_crosscheck, step_midpoint, step_rk4_projected, LlgParams, Scheme};
use dmiwall_core::vec3::E1;
use dmiwall_core::walls::{AppliedField, Gauge, Sign, WallParams};
use dmiwall_core::{Grid, MagnetizationField};
use proptest::prelude::*;

fn twisted_transition(g: &Grid) -> MagnetizationField {
    let step = |x: f64| {
        let t = ((x + 6.0) / 12.0).clamp(0.0, 1.0);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    };
    let theta: Vec<f64> = g.points().map(|x| std::f64::consts::PI * (1.0 - step(x))).collect();
    let phi: Vec<f64> = g.points().map(|x| (0.4 * x).sin()).collect();
    from_spherical(g, &theta, &phi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rhs_is_tangent(seed in 0u64..10_000, gamma in -0.9f64..0.9, alpha in 0.01f64..2.0, h in -1.0f64..1.0) {
        let g = Grid::new(10.0, 201).unwrap();
        let m = common::random_equatorial(&g, seed);
        let r = llg_rhs(&m, gamma, alpha, h).unwrap();
        let worst = m.values().iter().zip(r.values()).map(|(a, b)| a.dot(*b).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12, "{}", worst);
    }
}

#[test]
fn spherical_and_cartesian_velocities_agree() {
    let g = Grid::new(10.0, 401).unwrap();
    let tol = 50.0 * g.dx() * g.dx();
    for seed in 0..20 {
        let m = common::random_equatorial(&g, seed);
        let d = spherical_rhs_crosscheck(&m, 0.3, 0.5, 0.1).unwrap();
        assert!(d <= tol, "{seed} {d}");
    }
    let w = WallParams::centred(0.3).unwrap().profile(&Grid::new(30.0, 1201).unwrap());
    for h in [0.0, 0.1] {
        assert!(spherical_rhs_crosscheck(&w, 0.3, 0.5, h).unwrap() <= 5.0 * 0.05 * 0.05);
    }
}

#[test]
fn energy_decreases_without_field() {
    let g = Grid::new(20.0, 401).unwrap();
    let wall = WallParams::centred(0.3).unwrap();
    let v = random_tangent(&wall, &g, 5, 0.2).unwrap();
    let m0 = exp_map_perturb(&wall.profile(&g), &v).unwrap();
    let mut p = LlgParams::new(0.3, 0.5, AppliedField::constant(0.0), 5.0, &g);
    p.record_every = 20;
    let rec = integrate(&m0, &p).unwrap();
    assert!(rec.energy_monotone(1e-8));
    assert!(rec.energies.last().unwrap() < &rec.energies[0]);
    assert!(rec.fields.iter().all(|f| f.unit_defect() <= 1e-12));
}

#[test]
fn flow_commutes_with_grid_aligned_gauges() {
    let g = Grid::new(30.0, 601).unwrap();
    let m0 = twisted_transition(&g);
    let gauge = Gauge::new(3.0 * g.dx(), 0.7).unwrap();
    let mut p = LlgParams::new(0.3, 0.5, AppliedField::constant(0.05), 1.0, &g);
    p.snapshot_every = usize::MAX;
    let a = integrate(&m0, &p).unwrap();
    let b = integrate(&gauge.apply(&m0).unwrap(), &p).unwrap();
    let fa = gauge.apply(a.fields.last().unwrap()).unwrap();
    let fb = b.fields.last().unwrap();
    let d = fa.diff(fb).unwrap().max_abs();
    assert!(d <= 1e-8, "{d}");
}

#[test]
fn poles_and_walls_are_fixed_points() {
    let g = Grid::new(30.0, 1201).unwrap();
    let mut p = LlgParams::new(0.3, 0.5, AppliedField::constant(0.0), 10.0, &g);
    p.record_every = usize::MAX;
    p.snapshot_every = usize::MAX;
    for s in [1.0, -1.0] {
        let m = MagnetizationField::constant(g, E1.scale(s)).unwrap();
        let rec = integrate(&m, &p).unwrap();
        assert!(rec.fields.last().unwrap().diff(&m).unwrap().max_abs() <= 1e-8);
        assert!(rec.energies.iter().all(|e| *e == 0.0));
    }
    for (sign, gauge) in [(Sign::Plus, Gauge::new(0.0, 0.0).unwrap()), (Sign::Minus, Gauge::new(1.5, 2.0).unwrap())] {
        let m = WallParams::new(0.3, sign, gauge).unwrap().profile(&g);
        let rec = integrate(&m, &p).unwrap();
        let d = rec.fields.last().unwrap().diff(&m).unwrap().max_abs();
        assert!(d <= 1e-8, "{sign:?} {d}");
    }
}

#[test]
fn midpoint_and_rk4_agree_to_second_order() {
    let g = Grid::new(15.0, 301).unwrap();
    let m = twisted_transition(&g);
    let mut diffs = Vec::new();
    for dt in [1e-3, 5e-4] {
        let mut p = LlgParams::new(0.3, 0.5, AppliedField::constant(0.05), 1.0, &g);
        p.dt = dt;
        let a = step_rk4_projected(&m, &p, 0.0).unwrap();
        p.scheme = Scheme::Midpoint;
        let b = step_midpoint(&m, &p, 0.0).unwrap();
        diffs.push(a.diff(&b).unwrap().max_abs());
    }
    assert!(diffs[0] / diffs[1] >= 3.6, "{diffs:?}");
}
