use std::io::{self, Write};

use crate::energy::{frame_at, EnergyModel};
use crate::error::{check_gamma, DmiError, Result};
use crate::field::{project_to_sphere, MagnetizationField, VectorField};
use crate::grid::Grid;
use crate::stencil::Stencil;
use crate::vec3::Vec3;
use crate::walls::AppliedField;

/// Safety factor of the explicit step restriction `dt ≤ c dx² / (1 + α)`.
pub const DT_GUARD: f64 = 0.2;
/// Deviation of `|m|` from one that counts as blow-up inside a step.
pub const BLOW_UP: f64 = 0.1;
pub const MIDPOINT_TOL: f64 = 1e-13;
pub const MIDPOINT_MAX_ITERS: usize = 50;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    Rk4,
    Midpoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LlgParams {
    pub gamma: f64,
    pub alpha: f64,
    pub h: AppliedField,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between energy/dissipation records.
    pub record_every: usize,
    /// Steps between stored field snapshots.
    pub snapshot_every: usize,
    pub scheme: Scheme,
    pub stencil: Stencil,
    /// Skip the explicit stability guard on `dt`.
    pub allow_large_dt: bool,
}

impl LlgParams {
    /// Parameters with `dt` at the stability guard of `grid`, recording
    /// every step.
    pub fn new(gamma: f64, alpha: f64, h: AppliedField, t_end: f64, grid: &Grid) -> Self {
        LlgParams {
            gamma,
            alpha,
            h,
            dt: max_stable_dt(grid, alpha),
            t_end,
            record_every: 1,
            snapshot_every: 1,
            scheme: Scheme::Rk4,
            stencil: Stencil::default(),
            allow_large_dt: false,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(DmiError::InvalidParameter(format!("alpha must be > 0 (got {})", self.alpha)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DmiError::InvalidParameter(format!("dt must be > 0 (got {})", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(DmiError::InvalidParameter(format!("t_end must be > 0 (got {})", self.t_end)));
        }
        if self.record_every == 0 || self.snapshot_every == 0 {
            return Err(DmiError::InvalidParameter("record intervals must be >= 1".into()));
        }
        let guard = max_stable_dt(grid, self.alpha);
        if !self.allow_large_dt && self.dt > guard * (1.0 + 1e-12) {
            return Err(DmiError::InvalidParameter(format!(
                "dt = {} exceeds the stability guard {guard:e}",
                self.dt
            )));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<EnergyModel> {
        Ok(EnergyModel::new(self.gamma)?.with_stencil(self.stencil))
    }

    /// Number of steps and the step actually taken so that `t_end` is hit.
    pub fn schedule(&self) -> (usize, f64) {
        let n = ((self.t_end / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// `0.2 dx² / (1 + α)`.
pub fn max_stable_dt(grid: &Grid, alpha: f64) -> f64 {
    DT_GUARD * grid.dx() * grid.dx() / (1.0 + alpha)
}

/// `m∧H - α m∧(m∧H)` on raw values.
pub fn rhs_raw(model: &EnergyModel, grid: &Grid, m: &[Vec3], alpha: f64, h: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(m.len());
    model.for_each_gradient(grid, m, |_, mi, g| {
        let field = Vec3::new(h - g[0], -g[1], -g[2]);
        let a = mi.cross(field);
        out.push(a - mi.cross(a).scale(alpha));
    });
    out
}

pub fn llg_rhs(m: &MagnetizationField, gamma: f64, alpha: f64, h: f64) -> Result<VectorField> {
    let model = EnergyModel::new(gamma)?;
    VectorField::new(*m.grid(), rhs_raw(&model, m.grid(), m.values(), alpha, h))
}

fn check_blow_up(v: &[Vec3], t: f64) -> Result<()> {
    let (lo, hi) = ((1.0 - BLOW_UP).powi(2), (1.0 + BLOW_UP).powi(2));
    if v.iter().all(|x| {
        let q = x.norm_sq();
        q >= lo && q <= hi
    }) {
        return Ok(());
    }
    let deviation = v
        .iter()
        .map(|x| (x.norm() - 1.0).abs())
        .fold(0.0, |a: f64, d| if d.is_nan() { f64::INFINITY } else { a.max(d) });
    Err(DmiError::BlowUp { t, deviation })
}

fn axpy(m: &[Vec3], k: &[Vec3], s: f64) -> Vec<Vec3> {
    m.iter().zip(k).map(|(a, b)| *a + b.scale(s)).collect()
}

struct Stepper<'a> {
    model: EnergyModel,
    grid: Grid,
    params: &'a LlgParams,
}

impl Stepper<'_> {
    fn f(&self, m: &[Vec3], t: f64) -> Vec<Vec3> {
        rhs_raw(&self.model, &self.grid, m, self.params.alpha, self.params.h.value_at(t))
    }

    fn rk4(&self, m: &[Vec3], t: f64, dt: f64) -> Result<Vec<Vec3>> {
        let k1 = self.f(m, t);
        let m2 = axpy(m, &k1, 0.5 * dt);
        check_blow_up(&m2, t)?;
        let k2 = self.f(&m2, t + 0.5 * dt);
        let m3 = axpy(m, &k2, 0.5 * dt);
        check_blow_up(&m3, t)?;
        let k3 = self.f(&m3, t + 0.5 * dt);
        let m4 = axpy(m, &k3, dt);
        check_blow_up(&m4, t)?;
        let k4 = self.f(&m4, t + dt);
        let c = dt / 6.0;
        let next: Vec<Vec3> = (0..m.len())
            .map(|i| m[i] + (k1[i] + k2[i].scale(2.0) + k3[i].scale(2.0) + k4[i]).scale(c))
            .collect();
        check_blow_up(&next, t)?;
        Ok(project_to_sphere(&self.grid, &next)?.into_values())
    }

    fn midpoint(&self, m: &[Vec3], t: f64, dt: f64) -> Result<Vec<Vec3>> {
        let tm = t + 0.5 * dt;
        let mut next = m.to_vec();
        let mut update = f64::INFINITY;
        for _ in 0..MIDPOINT_MAX_ITERS {
            let mid: Vec<Vec3> = m.iter().zip(&next).map(|(a, b)| (*a + *b).scale(0.5)).collect();
            let k = self.f(&mid, tm);
            let cand = axpy(m, &k, dt);
            update = cand
                .iter()
                .zip(&next)
                .map(|(a, b)| (*a - *b).max_abs())
                .fold(0.0, f64::max);
            next = cand;
            if !update.is_finite() {
                break;
            }
            if update < MIDPOINT_TOL {
                check_blow_up(&next, t)?;
                return Ok(next);
            }
        }
        Err(DmiError::MidpointNoConvergence { t, update })
    }

    fn step(&self, m: &[Vec3], t: f64, dt: f64) -> Result<Vec<Vec3>> {
        match self.params.scheme {
            Scheme::Rk4 => self.rk4(m, t, dt),
            Scheme::Midpoint => self.midpoint(m, t, dt),
        }
    }
}

fn stepper<'a>(m: &MagnetizationField, params: &'a LlgParams) -> Result<Stepper<'a>> {
    params.validate(m.grid())?;
    Ok(Stepper {
        model: params.model()?,
        grid: *m.grid(),
        params,
    })
}

/// One classical RK4 step followed by projection onto the sphere.
pub fn step_rk4_projected(m: &MagnetizationField, params: &LlgParams, t: f64) -> Result<MagnetizationField> {
    let s = stepper(m, params)?;
    let v = s.rk4(m.values(), t, params.dt)?;
    Ok(MagnetizationField::from_unit_unchecked(*m.grid(), v))
}

/// One implicit-midpoint step, solved by fixed-point iteration and not projected.
pub fn step_midpoint(m: &MagnetizationField, params: &LlgParams, t: f64) -> Result<MagnetizationField> {
    let s = stepper(m, params)?;
    let v = s.midpoint(m.values(), t, params.dt)?;
    Ok(MagnetizationField::from_unit_unchecked(*m.grid(), v))
}

/// Recorded time series of an LLG run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Time derivative of the recorded energies by centred differences.
    pub dissipation_lhs: Vec<f64>,
    /// `-α∫(|δE|² - (m·δE)²) + α h ∫(m∧e1)·(m∧δE)`.
    pub dissipation_rhs: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub fields: Vec<MagnetizationField>,
    pub gamma: f64,
}

impl TrajectoryRecord {
    /// `|lhs - rhs| / (|rhs| + 1e-12)` at every record.
    pub fn dissipation_residuals(&self) -> Vec<f64> {
        self.dissipation_lhs
            .iter()
            .zip(&self.dissipation_rhs)
            .map(|(l, r)| (l - r).abs() / (r.abs() + 1e-12))
            .collect()
    }

    pub fn max_dissipation_residual(&self) -> f64 {
        self.dissipation_residuals().into_iter().fold(0.0, f64::max)
    }

    /// Whether energies never increase by more than `slack`.
    pub fn energy_monotone(&self, slack: f64) -> bool {
        self.energies.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,energy,diss_lhs,diss_rhs")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.energies[i], self.dissipation_lhs[i], self.dissipation_rhs[i]
            )?;
        }
        Ok(())
    }
}

/// Centred differences of `e(t)`, second-order one-sided at both ends.
pub fn centred_rate(t: &[f64], e: &[f64]) -> Vec<f64> {
    let mut diffs = vec![0.0; e.len()];
    for j in 1..e.len() {
        diffs[j] = e[j] - e[j - 1];
    }
    centred_rate_from_increments(t, &diffs)
}

/// [`centred_rate`] from the increments `d_j = e_j - e_{j-1}` (`d_0` unused),
/// using the three-point formulas for possibly uneven spacing.
pub fn centred_rate_from_increments(t: &[f64], d: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            out.fill(d[1] / (t[1] - t[0]));
        }
        return out;
    }
    for j in 1..n - 1 {
        let (h0, h1) = (t[j] - t[j - 1], t[j + 1] - t[j]);
        out[j] = (h0 * h0 * d[j + 1] + h1 * h1 * d[j]) / (h0 * h1 * (h0 + h1));
    }
    let (a, b) = (t[1] - t[0], t[2] - t[1]);
    out[0] = (a + b) / (a * b) * d[1] - a / (b * (a + b)) * (d[1] + d[2]);
    let (a, b) = (t[n - 1] - t[n - 2], t[n - 2] - t[n - 3]);
    out[n - 1] = (a + b) / (a * b) * d[n - 1] - a / (b * (a + b)) * (d[n - 1] + d[n - 2]);
    out
}

/// Integrates from `m0` to `params.t_end`.
pub fn integrate(m0: &MagnetizationField, params: &LlgParams) -> Result<TrajectoryRecord> {
    let s = stepper(m0, params)?;
    let grid = *m0.grid();
    let (n_steps, dt) = params.schedule();
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        energies: Vec::new(),
        dissipation_lhs: Vec::new(),
        dissipation_rhs: Vec::new(),
        snapshot_times: Vec::new(),
        fields: Vec::new(),
        gamma: params.gamma,
    };
    let mut increments = vec![0.0];
    let mut last = m0.values().to_vec();
    let mut record = |rec: &mut TrajectoryRecord, m: &[Vec3], t: f64| {
        if !rec.times.is_empty() {
            increments.push(s.model.energy_difference(&grid, m, &last));
            last.copy_from_slice(m);
        }
        rec.times.push(t);
        rec.energies.push(s.model.energy_raw(&grid, m).total);
        let (diss, forcing) = s.model.dissipation_terms(&grid, m);
        let h = params.h.value_at(t);
        rec.dissipation_rhs.push(-params.alpha * diss + params.alpha * h * forcing);
    };
    let mut m = m0.values().to_vec();
    record(&mut rec, &m, 0.0);
    rec.snapshot_times.push(0.0);
    rec.fields.push(m0.clone());
    for step in 0..n_steps {
        let t = step as f64 * dt;
        m = s.step(&m, t, dt).map_err(|e| DmiError::AtTime {
            t,
            source: Box::new(e),
        })?;
        let done = step + 1;
        let tn = done as f64 * dt;
        if done % params.record_every == 0 || done == n_steps {
            record(&mut rec, &m, tn);
        }
        if done % params.snapshot_every == 0 || done == n_steps {
            rec.snapshot_times.push(tn);
            rec.fields.push(MagnetizationField::from_unit_unchecked(grid, m.clone()));
        }
    }
    rec.dissipation_lhs = centred_rate_from_increments(&rec.times, &increments);
    Ok(rec)
}

/// L∞ distance between `llg_rhs` and the velocity rebuilt from the
/// spherical equations `∂tθ = αρ1 - ρ2 - αh sinθ`,
/// `sinθ ∂tφ = ρ1 + αρ2 - h sinθ`.
pub fn spherical_rhs_crosscheck(m: &MagnetizationField, gamma: f64, alpha: f64, h: f64) -> Result<f64> {
    let model = EnergyModel::new(gamma)?;
    let rho = model.rho_components(m)?;
    let rhs = rhs_raw(&model, m.grid(), m.values(), alpha, h);
    let mut worst: f64 = 0.0;
    for (i, mi) in m.values().iter().enumerate() {
        let (n, p) = frame_at(*mi).ok_or(DmiError::PoleTouched { index: i, gap: 0.0 })?;
        let st = mi.transverse_sq().sqrt();
        let dtheta = alpha * rho.rho1[i] - rho.rho2[i] - alpha * h * st;
        let dphi = rho.rho1[i] + alpha * rho.rho2[i] - h * st;
        let v = n.scale(dtheta) + p.scale(dphi);
        worst = worst.max((v - rhs[i]).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::E1;
    use crate::walls::WallParams;

    fn grid() -> Grid {
        Grid::new(30.0, 1201).unwrap()
    }

    #[test]
    fn pole_is_a_fixed_point() {
        let g = grid();
        let m = MagnetizationField::constant(g, E1).unwrap();
        let rhs = llg_rhs(&m, 0.3, 0.5, 0.2).unwrap();
        assert_eq!(rhs.max_abs(), 0.0);
        let p = LlgParams::new(0.3, 0.5, AppliedField::constant(0.2), 1.0, &g);
        assert_eq!(step_rk4_projected(&m, &p, 0.0).unwrap(), m);
        assert_eq!(step_midpoint(&m, &p, 0.0).unwrap(), m);
    }

    #[test]
    fn rhs_is_tangent() {
        let g = grid();
        let m = MagnetizationField::from_fn(g, |x| Vec3::new(x.tanh(), (0.3 * x).cos(), 0.2 * x.sin())).unwrap();
        let rhs = llg_rhs(&m, 0.4, 0.7, 0.3).unwrap();
        let worst = m
            .values()
            .iter()
            .zip(rhs.values())
            .map(|(a, b)| a.dot(*b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn guard_is_enforced() {
        let g = grid();
        let mut p = LlgParams::new(0.3, 0.5, AppliedField::constant(0.0), 1.0, &g);
        p.dt *= 1.5;
        assert!(p.validate(&g).is_err());
        p.allow_large_dt = true;
        assert!(p.validate(&g).is_ok());
    }

    #[test]
    fn single_step_from_wall_is_stationary() {
        let g = grid();
        let w = WallParams::centred(0.3).unwrap().profile(&g);
        let p = LlgParams::new(0.3, 0.5, AppliedField::constant(0.0), 1.0, &g);
        let next = step_rk4_projected(&w, &p, 0.0).unwrap();
        assert!(next.diff(&w).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn crosscheck_at_the_wall() {
        let g = grid();
        let w = WallParams::centred(0.0).unwrap().profile(&g);
        let tol = 5.0 * g.dx() * g.dx();
        assert!(spherical_rhs_crosscheck(&w, 0.0, 0.5, 0.0).unwrap() <= tol);
        assert!(spherical_rhs_crosscheck(&w, 0.0, 0.5, 0.1).unwrap() <= tol);
    }

    #[test]
    fn centred_rate_is_exact_for_quadratics() {
        let mut t: Vec<f64> = (0..10).map(|i| 0.3 * i as f64).collect();
        t.push(2.8);
        let e: Vec<f64> = t.iter().map(|s| 2.0 * s * s - s).collect();
        for (s, r) in t.iter().zip(centred_rate(&t, &e)) {
            assert!((r - (4.0 * s - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_hits_t_end() {
        let g = grid();
        let mut p = LlgParams::new(0.0, 0.5, AppliedField::constant(0.0), 1.0, &g);
        p.dt = 0.3;
        p.allow_large_dt = true;
        let (n, dt) = p.schedule();
        assert_eq!(n, 4);
        assert!((dt - 0.25).abs() < 1e-15);
    }
}
