use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{check_gamma, DmiError, Result};
use crate::field::{norms, MagnetizationField, VectorField};
use crate::llg::{centred_rate, TrajectoryRecord};
use crate::vec3::Vec3;
use crate::walls::{Gauge, Sign, WallParams, WallSample};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITERS: usize = 30;
/// H¹ distance beyond which the supplied starting gauge is replaced by
/// [`initial_gauge_guess`].
pub const BASIN_RADIUS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ModulationResult {
    pub gauge: Gauge,
    /// Lab-frame residual `η = m - g.w*`.
    pub epsilon: VectorField,
    pub eps_h1: f64,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub rho: Vec<f64>,
    pub newton_iters: usize,
    /// Final `|F(g)|`.
    pub residual: f64,
}

impl ModulationResult {
    /// `max_i |μ_i + ½(μ_i² + ν_i² + ρ_i²)|`.
    pub fn constraint_defect(&self) -> f64 {
        (0..self.mu.len())
            .map(|i| {
                let (a, b, c) = (self.mu[i], self.nu[i], self.rho[i]);
                (a + 0.5 * (a * a + b * b + c * c)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Gauge seed from the sign change of `m1`.  Both `atanh(m1)` and the
/// transverse angle are affine in `x` along an exact wall, so they are
/// interpolated linearly between the two nodes bracketing the crossing.
pub fn initial_gauge_guess(m: &MagnetizationField, sign: Sign) -> Result<Gauge> {
    let v = m.values();
    let g = m.grid();
    let i = (0..v.len() - 1)
        .find(|&i| v[i][0] == 0.0 || (v[i][0] < 0.0) != (v[i + 1][0] < 0.0))
        .ok_or(DmiError::NoTransition)?;
    let lim = 1.0 - 1e-15;
    let a0 = v[i][0].clamp(-lim, lim).atanh();
    let a1 = v[i + 1][0].clamp(-lim, lim).atanh();
    let s = if a1 == a0 { 0.0 } else { -a0 / (a1 - a0) };
    let y = g.x(i) + s * g.dx();
    let sv = sign.value();
    let p0 = (sv * v[i][2]).atan2(sv * v[i][1]);
    let mut p1 = (sv * v[i + 1][2]).atan2(sv * v[i + 1][1]);
    p1 += 2.0 * PI * ((p0 - p1) / (2.0 * PI)).round();
    let phi = p0 + s * (p1 - p0);
    Gauge::new(y, wrap(phi))
}

fn wrap(phi: f64) -> f64 {
    let r = phi - 2.0 * PI * (phi / (2.0 * PI)).round();
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// `F(g) = (∫ m·∂x(g.w*), ∫ m·(e1∧g.w*))` and its analytic Jacobian.
pub fn orthogonality(m: &MagnetizationField, gamma: f64, sign: Sign, g: Gauge) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let p = WallParams::new(gamma, sign, g)?;
    let grid = *m.grid();
    let v = m.values();
    let s: Vec<WallSample> = p.samples(&grid);
    let f1 = grid.integrate_with(|i| v[i].dot(s[i].dw));
    let f2 = grid.integrate_with(|i| v[i].dot(s[i].w.e1_cross()));
    let j11 = -grid.integrate_with(|i| v[i].dot(s[i].ddw));
    let j12 = grid.integrate_with(|i| v[i].dot(s[i].dw.e1_cross()));
    let j22 = grid.integrate_with(|i| v[i].dot(s[i].w.e1_cross().e1_cross()));
    Ok(([f1, f2], [[j11, j12], [-j12, j22]]))
}

/// Finite-difference Jacobian of [`orthogonality`] with step `h`.
pub fn jacobian_fd(m: &MagnetizationField, gamma: f64, sign: Sign, g: Gauge, h: f64) -> Result<[[f64; 2]; 2]> {
    let f = |g: Gauge| orthogonality(m, gamma, sign, g).map(|r| r.0);
    let fy = (f(Gauge { y: g.y + h, ..g })?, f(Gauge { y: g.y - h, ..g })?);
    let fp = (f(Gauge { phi: g.phi + h, ..g })?, f(Gauge { phi: g.phi - h, ..g })?);
    let c = 0.5 / h;
    Ok([
        [(fy.0[0] - fy.1[0]) * c, (fp.0[0] - fp.1[0]) * c],
        [(fy.0[1] - fy.1[1]) * c, (fp.0[1] - fp.1[1]) * c],
    ])
}

fn fnorm(f: [f64; 2]) -> f64 {
    f[0].hypot(f[1])
}

/// Newton iteration on `F(g) = 0` starting from `g0`.
pub fn fit_gauge(m: &MagnetizationField, gamma: f64, sign: Sign, g0: Gauge) -> Result<ModulationResult> {
    check_gamma(gamma)?;
    let grid = *m.grid();
    let mut g = g0;
    let dist = |g: Gauge| -> Result<f64> {
        let w = WallParams::new(gamma, sign, g)?.profile(&grid);
        m.h1_distance(&w)
    };
    if dist(g)? > BASIN_RADIUS {
        if let Ok(seed) = initial_gauge_guess(m, sign) {
            if dist(seed)? < dist(g)? {
                g = seed;
            }
        }
    }
    let (mut f, mut jac) = orthogonality(m, gamma, sign, g)?;
    let mut res = fnorm(f);
    let mut iters = 0;
    let mut growth = 0;
    while res >= NEWTON_TOL {
        if iters >= NEWTON_MAX_ITERS {
            return Err(DmiError::MaxIterations { residual: res });
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 0.0) {
            return Err(DmiError::NewtonDiverged { iters, residual: res });
        }
        let dy = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
        let dp = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
        g = Gauge::new(g.y - dy, g.phi - dp)?;
        iters += 1;
        let (nf, nj) = orthogonality(m, gamma, sign, g)?;
        let nres = fnorm(nf);
        growth = if nres > res { growth + 1 } else { 0 };
        if growth >= 5 || !nres.is_finite() {
            return Err(DmiError::NewtonDiverged { iters, residual: nres });
        }
        f = nf;
        jac = nj;
        res = nres;
        // the update has reached rounding level: F cannot be reduced further
        if dy.abs().max(dp.abs()) < 1e-15 * (1.0 + g.norm()) {
            break;
        }
    }
    let frame = frame_decompose(m, g, gamma, sign)?;
    let w = WallParams::new(gamma, sign, g)?.profile(&grid);
    let epsilon = m.diff(&w)?;
    let eps_h1 = epsilon.norms().h1;
    Ok(ModulationResult {
        gauge: g,
        epsilon,
        eps_h1,
        mu: frame.mu,
        nu: frame.nu,
        rho: frame.rho,
        newton_iters: iters,
        residual: res,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameCoefficients {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Coefficients of the pulled-back error `R_{-φ} m - w*(· - y)` in the
/// translated closed-form frame.
pub fn frame_decompose(m: &MagnetizationField, gauge: Gauge, gamma: f64, sign: Sign) -> Result<FrameCoefficients> {
    let base = WallParams::new(gamma, sign, Gauge::new(gauge.y, 0.0)?)?;
    let grid = *m.grid();
    let n = m.len();
    let mut out = FrameCoefficients {
        mu: Vec::with_capacity(n),
        nu: Vec::with_capacity(n),
        rho: Vec::with_capacity(n),
    };
    for (i, mi) in m.values().iter().enumerate() {
        let s = base.sample(grid.x(i));
        let e: Vec3 = mi.rotate_e1(-gauge.phi) - s.w;
        out.mu.push(e.dot(s.w));
        out.nu.push(e.dot(s.n));
        out.rho.push(e.dot(s.p));
    }
    Ok(out)
}

/// Gauge and error time series along a trajectory.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrackResult {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub phi: Vec<f64>,
    pub eps_h1: Vec<f64>,
    pub ydot: Vec<f64>,
    pub phidot: Vec<f64>,
}

impl TrackResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,y,phi,eps_h1,ydot,phidot")?;
        for i in 0..self.t.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[i], self.y[i], self.phi[i], self.eps_h1[i], self.ydot[i], self.phidot[i]
            )?;
        }
        Ok(())
    }
}

/// Sequential [`fit_gauge`] over the stored snapshots, warm-started from
/// the previous gauge, with `φ` kept continuous.
pub fn track(traj: &TrajectoryRecord, gamma: f64, sign: Sign) -> Result<TrackResult> {
    track_fields(&traj.snapshot_times, &traj.fields, gamma, sign)
}

pub fn track_fields(times: &[f64], fields: &[MagnetizationField], gamma: f64, sign: Sign) -> Result<TrackResult> {
    let mut out = TrackResult::default();
    let mut prev: Option<Gauge> = None;
    for (index, m) in fields.iter().enumerate() {
        let wrapped = |e: DmiError| DmiError::Snapshot {
            index,
            source: Box::new(e),
        };
        let g0 = match prev {
            Some(g) => g,
            None => initial_gauge_guess(m, sign).map_err(wrapped)?,
        };
        let r = fit_gauge(m, gamma, sign, g0).map_err(wrapped)?;
        let mut g = r.gauge;
        if let Some(p) = prev {
            g.phi += 2.0 * PI * ((p.phi - g.phi) / (2.0 * PI)).round();
        }
        out.t.push(times[index]);
        out.y.push(g.y);
        out.phi.push(g.phi);
        out.eps_h1.push(r.eps_h1);
        prev = Some(g);
    }
    out.ydot = centred_rate(&out.t, &out.y);
    out.phidot = centred_rate(&out.t, &out.phi);
    Ok(out)
}

/// H¹ norm of a scalar coefficient array.
pub fn coefficient_h1(m: &MagnetizationField, c: &[f64]) -> f64 {
    crate::field::scalar_norms(m.grid(), c).h1
}

/// `‖(ν, ρ)‖_{H¹}` as the H¹ norm of the pair.
pub fn pair_h1(m: &MagnetizationField, a: &[f64], b: &[f64]) -> f64 {
    let v: Vec<Vec3> = a.iter().zip(b).map(|(x, y)| Vec3::new(*x, *y, 0.0)).collect();
    norms(m.grid(), &v).h1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::vec3::E1;

    fn grid() -> Grid {
        Grid::new(30.0, 1201).unwrap()
    }

    #[test]
    fn guess_on_exact_walls() {
        let g = grid();
        let w = WallParams::centred(0.3).unwrap().profile(&g);
        let s = initial_gauge_guess(&w, Sign::Plus).unwrap();
        assert!(s.norm() < 1e-10, "{s:?}");
        let gauge = Gauge::new(1.3, 0.7).unwrap();
        let m = WallParams::new(0.3, Sign::Plus, gauge).unwrap().profile(&g);
        let s = initial_gauge_guess(&m, Sign::Plus).unwrap();
        assert!((s - gauge).norm() < 1e-8, "{s:?}");
        let e1 = MagnetizationField::constant(g, E1).unwrap();
        assert_eq!(initial_gauge_guess(&e1, Sign::Plus), Err(DmiError::NoTransition));
    }

    #[test]
    fn jacobian_at_the_wall() {
        let g = grid();
        for gamma in [0.0, 0.3, 0.6] {
            let w = WallParams::centred(gamma).unwrap().profile(&g);
            let (f, j) = orthogonality(&w, gamma, Sign::Plus, Gauge::default()).unwrap();
            assert!(fnorm(f) < 1e-12);
            let c = 2.0 / (1.0 - gamma * gamma).sqrt();
            let expect = [[c, c * gamma], [-c * gamma, -c]];
            for a in 0..2 {
                for b in 0..2 {
                    assert!((j[a][b] - expect[a][b]).abs() < 1e-6);
                }
            }
            let fd = jacobian_fd(&w, gamma, Sign::Plus, Gauge::new(0.2, 0.1).unwrap(), 1e-6).unwrap();
            let (_, an) = orthogonality(&w, gamma, Sign::Plus, Gauge::new(0.2, 0.1).unwrap()).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert!((fd[a][b] - an[a][b]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn recovers_exact_member() {
        let g = grid();
        let gauge = Gauge::new(-2.35, 2.9).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let m = WallParams::new(0.45, sign, gauge).unwrap().profile(&g);
            let r = fit_gauge(&m, 0.45, sign, Gauge::new(-2.0, 2.5).unwrap()).unwrap();
            assert!((r.gauge - gauge).norm() < 1e-10, "{:?}", r.gauge);
            assert!(r.eps_h1 < 1e-10);
            assert!(r.constraint_defect() < 1e-10);
            assert!(r.mu.iter().chain(&r.nu).chain(&r.rho).all(|c| c.abs() < 1e-10));
        }
    }
}
