use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DmiError, Result};
use crate::field::{exp_map_perturb, MagnetizationField, TangentField};
use crate::grid::Grid;
use crate::llg::{integrate, LlgParams, Scheme, TrajectoryRecord};
use crate::modulation::{fit_gauge, track, TrackResult};
use crate::vec3::Vec3;
use crate::walls::{
    precessing_gauge, precessing_rates, relax_to_wall, AppliedField, Gauge, Sign, WallParams,
};

/// Largest perturbation amplitude accepted by experiments.
pub const MAX_AMPLITUDE: f64 = 0.3;
/// Highest wavenumber in random perturbations.
pub const MAX_WAVENUMBER: f64 = 1.5;
/// Width of the Gaussian envelope of random perturbations.
pub const ENVELOPE_WIDTH: f64 = 5.0;
const MODES: usize = 4;

/// Seeded smooth tangent field `a n* + b p*` around `wall`, with `a`, `b`
/// trigonometric polynomials under a Gaussian envelope, scaled to H¹ norm
/// `amplitude`.
pub fn random_tangent(wall: &WallParams, grid: &Grid, seed: u64, amplitude: f64) -> Result<TangentField> {
    if !(0.0..=MAX_AMPLITUDE).contains(&amplitude) {
        return Err(DmiError::InvalidParameter(format!(
            "amplitude must lie in [0, {MAX_AMPLITUDE}] (got {amplitude})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = [[0.0; 4]; MODES];
    for c in coeffs.iter_mut() {
        for v in c.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    let y = wall.gauge().y;
    let samples = wall.samples(grid);
    let raw: Vec<Vec3> = grid
        .points()
        .zip(&samples)
        .map(|(x, s)| {
            let u = x - y;
            let env = (-0.5 * (u / ENVELOPE_WIDTH).powi(2)).exp();
            let (mut a, mut b) = (0.0, 0.0);
            for (j, c) in coeffs.iter().enumerate() {
                let kap = MAX_WAVENUMBER * (j as f64 + 1.0) / MODES as f64;
                let (sn, cs) = (kap * u).sin_cos();
                a += c[0] * cs + c[1] * sn;
                b += c[2] * cs + c[3] * sn;
            }
            s.n.scale(env * a) + s.p.scale(env * b)
        })
        .collect();
    let base = wall.profile(grid);
    let v = TangentField::project(&base, &raw)?;
    let norm = v.norms().h1;
    Ok(v.scaled(if norm > 0.0 { amplitude / norm } else { 0.0 }))
}

/// Fixed unit-H¹ tangent direction around the centred wall whose `n*` and
/// `p*` coefficients are off-centre bumps made L²-orthogonal to `sin θ*`.
pub fn expansion_direction(gamma: f64, grid: &Grid) -> Result<TangentField> {
    let wall = WallParams::centred(gamma)?;
    let samples = wall.samples(grid);
    let bump_a: Vec<f64> = grid
        .points()
        .map(|x| (-(x - 0.8).powi(2) / 3.0).exp() * (1.0 + 0.4 * x))
        .collect();
    let bump_b: Vec<f64> = grid
        .points()
        .map(|x| (-(x + 0.6).powi(2) / 2.0).exp() * (0.7 - 0.3 * (1.3 * x).sin()))
        .collect();
    let s: Vec<f64> = samples.iter().map(|q| q.sin_theta).collect();
    let ss = grid.integrate_with(|i| s[i] * s[i]);
    let orth = |f: &[f64]| -> Vec<f64> {
        let c = grid.integrate_with(|i| f[i] * s[i]) / ss;
        f.iter().zip(&s).map(|(a, b)| a - c * b).collect()
    };
    let a = orth(&bump_a);
    let b = orth(&bump_b);
    let raw: Vec<Vec3> = (0..grid.len())
        .map(|i| samples[i].n.scale(a[i]) + samples[i].p.scale(b[i]))
        .collect();
    let base = wall.profile(grid);
    let v = TangentField::project(&base, &raw)?;
    let norm = v.norms().h1;
    Ok(v.scaled(1.0 / norm))
}

/// Least-squares fit `ln ε ≈ intercept - σ t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub sigma: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

/// Minimal number of samples for a decay fit.
pub const MIN_FIT_SAMPLES: usize = 5;

pub fn fit_decay(t: &[f64], eps: &[f64], t_min: f64, t_max: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(eps)
        .filter(|(s, e)| **s >= t_min && **s <= t_max && **e > 0.0)
        .map(|(s, e)| (*s, e.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(DmiError::DecayFitDegenerate(format!(
            "{} samples in window [{t_min}, {t_max}]",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sll: f64 = pts.iter().map(|p| (p.1 - ml).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(DmiError::DecayFitDegenerate("window has no time extent".into()));
    }
    let slope = stl / stt;
    let r2 = if sll > 0.0 { (stl * stl / (stt * sll)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DecayFit {
        sigma: -slope,
        intercept: ml - slope * mt,
        r_squared: r2,
        t_min: pts[0].0,
        t_max: pts[pts.len() - 1].0,
        samples: pts.len(),
    })
}

/// Parameters of one stability experiment around the precessing wall.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityConfig {
    pub grid: Grid,
    pub gamma: f64,
    pub alpha: f64,
    pub h: AppliedField,
    pub sign: Sign,
    pub gauge0: Gauge,
    pub amplitude: f64,
    pub seed: u64,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub record_every: usize,
    pub snapshot_every: usize,
    pub scheme: Scheme,
}

impl StabilityConfig {
    /// Desk-scale defaults: L = 30, dx = 0.05, t_end = 50.
    pub fn desk(gamma: f64, alpha: f64, h: f64, amplitude: f64) -> Result<Self> {
        Ok(StabilityConfig {
            grid: Grid::new(30.0, 1201)?,
            gamma,
            alpha,
            h: AppliedField::constant(h),
            sign: Sign::Plus,
            gauge0: Gauge::default(),
            amplitude,
            seed: 1,
            t_end: 50.0,
            dt: None,
            record_every: 60,
            snapshot_every: 300,
            scheme: Scheme::Rk4,
        })
    }

    pub fn llg_params(&self) -> LlgParams {
        let mut p = LlgParams::new(self.gamma, self.alpha, self.h.clone(), self.t_end, &self.grid);
        if let Some(dt) = self.dt {
            p.dt = dt;
        }
        p.record_every = self.record_every;
        p.snapshot_every = self.snapshot_every;
        p.scheme = self.scheme;
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FitOutcome {
    Fitted(DecayFit),
    /// The initial error is already at the discretisation floor.
    AlreadyOnOrbit,
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub record: TrajectoryRecord,
    pub track: TrackResult,
    pub fit: FitOutcome,
    /// H¹ distance between the relaxed discrete wall and the closed-form orbit.
    pub floor: f64,
    pub eps0: f64,
    pub eps_final: f64,
    /// Limit of `g - g*`, averaged over the last 10% of samples.
    pub g_inf: Gauge,
    /// `max_t |ġ - ġ*| / ((1 + |h|) ε(t))`.
    pub gdot_ratio: f64,
}

impl StabilityReport {
    pub fn g_inf_ratio(&self) -> f64 {
        self.g_inf.norm() / self.eps0
    }
}

/// Distance of the fully relaxed discrete wall from the closed-form family.
pub fn discretisation_floor(grid: &Grid, gamma: f64, sign: Sign) -> Result<f64> {
    let w = WallParams::new(gamma, sign, Gauge::default())?.profile(grid);
    let r = relax_to_wall(&w, gamma, 200_000, 1e-11)?;
    Ok(fit_gauge(&r.field, gamma, sign, Gauge::default())?.eps_h1)
}

/// Perturbs `g0.w*`, integrates, modulates and fits the decay of ε.
pub fn run_stability(cfg: &StabilityConfig) -> Result<StabilityReport> {
    let wall = WallParams::new(cfg.gamma, cfg.sign, cfg.gauge0)?;
    let base = wall.profile(&cfg.grid);
    let v = random_tangent(&wall, &cfg.grid, cfg.seed, cfg.amplitude)?;
    let m0: MagnetizationField = exp_map_perturb(&base, &v)?;
    let params = cfg.llg_params();
    let record = integrate(&m0, &params)?;
    let tr = track(&record, cfg.gamma, cfg.sign)?;
    let floor = discretisation_floor(&cfg.grid, cfg.gamma, cfg.sign)?;
    let eps0 = tr.eps_h1[0];
    let eps_final = *tr.eps_h1.last().expect("track is non-empty");
    let level = 10.0 * floor.max(1e-12);
    let fit = if eps0 <= level.max(1e-6) {
        FitOutcome::AlreadyOnOrbit
    } else {
        let t_stop = tr
            .t
            .iter()
            .zip(&tr.eps_h1)
            .find(|(_, e)| **e < level)
            .map_or(cfg.t_end, |(t, _)| *t);
        FitOutcome::Fitted(fit_decay(&tr.t, &tr.eps_h1, cfg.t_end / 5.0, t_stop)?)
    };
    let n = tr.t.len();
    let tail = (n / 10).max(1);
    let mut gy = 0.0;
    let mut gp = 0.0;
    let mut gdot_ratio: f64 = 0.0;
    for i in 0..n {
        let t = tr.t[i];
        let gs = precessing_gauge(&cfg.h, cfg.alpha, cfg.gamma, t)?;
        let dy = tr.y[i] - cfg.gauge0.y - gs.y;
        let dp = tr.phi[i] - cfg.gauge0.phi - gs.phi;
        if i >= n - tail {
            gy += dy;
            gp += dp;
        }
        let h = cfg.h.value_at(t);
        let rates = precessing_rates(h, cfg.alpha, cfg.gamma);
        let dev = (tr.ydot[i] - rates.y).hypot(tr.phidot[i] - rates.phi);
        gdot_ratio = gdot_ratio.max(dev / ((1.0 + h.abs()) * tr.eps_h1[i]));
    }
    let g_inf = Gauge {
        y: gy / tail as f64,
        phi: gp / tail as f64,
    };
    Ok(StabilityReport {
        record,
        track: tr,
        fit,
        floor,
        eps0,
        eps_final,
        g_inf,
        gdot_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_tangent_is_reproducible_and_scaled() {
        let g = Grid::new(30.0, 601).unwrap();
        let w = WallParams::centred(0.3).unwrap();
        let a = random_tangent(&w, &g, 7, 0.05).unwrap();
        let b = random_tangent(&w, &g, 7, 0.05).unwrap();
        let c = random_tangent(&w, &g, 8, 0.05).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.norms().h1 - 0.05).abs() < 1e-14);
        assert!(random_tangent(&w, &g, 1, 0.4).is_err());
    }

    #[test]
    fn expansion_direction_is_orthogonal_to_kernel() {
        let g = Grid::new(20.0, 801).unwrap();
        let v = expansion_direction(0.3, &g).unwrap();
        let w = WallParams::centred(0.3).unwrap();
        let s = w.samples(&g);
        let a = g.integrate_with(|i| v.values()[i].dot(s[i].n) * s[i].sin_theta);
        let b = g.integrate_with(|i| v.values()[i].dot(s[i].p) * s[i].sin_theta);
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14);
        assert!((v.norms().h1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let e: Vec<f64> = t.iter().map(|s| 0.3 * (-0.25 * s).exp()).collect();
        let f = fit_decay(&t, &e, 10.0, 49.0).unwrap();
        assert!((f.sigma - 0.25).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.intercept - 0.3f64.ln()).abs() < 1e-10);
        assert!(matches!(fit_decay(&t, &e, 10.0, 12.0), Err(DmiError::DecayFitDegenerate(_))));
    }
}
