#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use dmiwall_core::field::from_spherical;
use dmiwall_core::{Grid, MagnetizationField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// θ = π/2 + a smooth bump of height below 0.6, φ a random trigonometric
/// polynomial; never within 0.9 rad of a pole.
pub fn random_equatorial(grid: &Grid, seed: u64) -> MagnetizationField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = rng.gen_range(-0.6..0.6);
    let centre = rng.gen_range(-0.5..0.5) * grid.half_length();
    let width = rng.gen_range(1.0..4.0);
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(0.05..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0)))
        .collect();
    let theta: Vec<f64> = grid
        .points()
        .map(|x| FRAC_PI_2 + amp * (-((x - centre) / width).powi(2)).exp())
        .collect();
    let phi: Vec<f64> = grid
        .points()
        .map(|x| modes.iter().map(|(k, c, s)| c * (k * x + s).sin()).sum())
        .collect();
    from_spherical(grid, &theta, &phi).unwrap()
}

/// Fitted log-log slope between consecutive pairs.
pub fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| (b[1] / b[0]).ln() / (a[1] / a[0]).ln())
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
