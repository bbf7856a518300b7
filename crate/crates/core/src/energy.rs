use std::io::{self, Write};

use crate::error::{check_gamma, DmiError, Result};
use crate::field::{MagnetizationField, SphericalField, VectorField};
use crate::grid::Grid;
use crate::stencil::{self, Stencil};
use crate::vec3::{Vec3, E1};

/// Total energy together with its pointwise density (`total` is the
/// trapezoid sum of `density`).
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub total: f64,
    pub density: Vec<f64>,
}

impl EnergyReport {
    pub fn write_csv<W: Write>(&self, mut w: W, grid: &Grid) -> io::Result<()> {
        writeln!(w, "x,density")?;
        for (i, d) in self.density.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", grid.x(i), d)?;
        }
        Ok(())
    }
}

/// Components of `-δE` in the frame `(m, n, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoComponents {
    pub rho0: Vec<f64>,
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

/// Discrete reduced energy with DMI strength `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyModel {
    gamma: f64,
    stencil: Stencil,
}

impl EnergyModel {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(EnergyModel {
            gamma,
            stencil: Stencil::default(),
        })
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn energy(&self, m: &MagnetizationField) -> EnergyReport {
        self.energy_raw(m.grid(), m.values())
    }

    /// Energy of arbitrary (not necessarily unit) values.
    pub fn energy_raw(&self, grid: &Grid, m: &[Vec3]) -> EnergyReport {
        let r = self.stencil.radius();
        let padded = stencil::pad(m, r);
        let exch = stencil::exchange_density(&padded, r, self.stencil, grid.dx());
        let (_, d1) = stencil::derivatives(&padded, r, self.stencil, grid.dx());
        let density: Vec<f64> = (0..m.len())
            .map(|i| {
                0.5 * (exch[i] + 2.0 * self.gamma * d1[i].dot(m[i].e1_cross()) + m[i].transverse_sq())
            })
            .collect();
        EnergyReport {
            total: grid.integrate(&density),
            density,
        }
    }

    /// `E(a) - E(b)` evaluated as the symmetric bilinear form of the energy
    /// on `(a - b, a + b)`, so that nearby states are differenced without
    /// cancellation.  Rounding-level norm defects of `a` and `b` are removed
    /// to first order, i.e. the result is the difference between `a/|a|`
    /// and `b/|b|`.
    pub fn energy_difference(&self, grid: &Grid, a: &[Vec3], b: &[Vec3]) -> f64 {
        let correction = |m: &[Vec3]| {
            let mut acc = crate::grid::NeumaierSum::default();
            self.for_each_gradient(grid, m, |i, mi, g| {
                acc.add(0.5 * grid.weight(i) * mi.dot(g) * norm_defect(mi));
            });
            acc.value()
        };
        self.polarised_difference(grid, a, b) - correction(a) + correction(b)
    }

    fn polarised_difference(&self, grid: &Grid, a: &[Vec3], b: &[Vec3]) -> f64 {
        let r = self.stencil.radius();
        let pa = stencil::pad(a, r);
        let pb = stencil::pad(b, r);
        let u: Vec<Vec3> = pa.iter().zip(&pb).map(|(x, y)| *x - *y).collect();
        let v: Vec<Vec3> = pa.iter().zip(&pb).map(|(x, y)| *x + *y).collect();
        let weights = self.stencil.laplacian_weights();
        let idx2 = 1.0 / (grid.dx() * grid.dx());
        let (_, du) = stencil::derivatives(&u, r, self.stencil, grid.dx());
        let (_, dv) = stencil::derivatives(&v, r, self.stencil, grid.dx());
        grid.integrate_with(|i| {
            let c = i + r;
            let mut exch = 0.0;
            for (j, &w) in weights.iter().enumerate() {
                let f = (u[c + j + 1] - u[c]).dot(v[c + j + 1] - v[c]);
                let g = (u[c] - u[c - j - 1]).dot(v[c] - v[c - j - 1]);
                exch += w * 0.5 * (f + g);
            }
            let dmi = 0.5 * (du[i].dot(v[c].e1_cross()) + dv[i].dot(u[c].e1_cross()));
            let aniso = u[c][1] * v[c][1] + u[c][2] * v[c][2];
            0.5 * (exch * idx2 + 2.0 * self.gamma * dmi + aniso)
        })
    }

    /// `δE = -∂xx m - 2γ e1∧∂x m + m2 e2 + m3 e3`.
    pub fn gradient(&self, m: &MagnetizationField) -> VectorField {
        let v = self.gradient_raw(m.grid(), m.values());
        VectorField::new(*m.grid(), v).expect("gradient has grid length")
    }

    pub fn gradient_raw(&self, grid: &Grid, m: &[Vec3]) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(m.len());
        self.for_each_gradient(grid, m, |_, _, g| out.push(g));
        out
    }

    /// Calls `f(i, m_i, δE_i)` for every node, without storing the gradient.
    #[inline]
    pub fn for_each_gradient(&self, grid: &Grid, m: &[Vec3], mut f: impl FnMut(usize, Vec3, Vec3)) {
        let r = self.stencil.radius();
        let padded = stencil::pad(m, r);
        let g2 = 2.0 * self.gamma;
        stencil::for_each_derivative(&padded, r, self.stencil, grid.dx(), |i, l, d| {
            let mi = m[i];
            let e = d.e1_cross();
            let grad = Vec3::new(
                -l[0] - g2 * e[0],
                -l[1] - g2 * e[1] + mi[1],
                -l[2] - g2 * e[2] + mi[2],
            );
            f(i, mi, grad)
        });
    }

    /// `H = -δE + h e1`.
    pub fn effective_field(&self, m: &MagnetizationField, h: f64) -> VectorField {
        let v = self.effective_field_raw(m.grid(), m.values(), h);
        VectorField::new(*m.grid(), v).expect("field has grid length")
    }

    pub fn effective_field_raw(&self, grid: &Grid, m: &[Vec3], h: f64) -> Vec<Vec3> {
        let mut g = self.gradient_raw(grid, m);
        for v in g.iter_mut() {
            *v = Vec3::new(h - v[0], -v[1], -v[2]);
        }
        g
    }

    /// `λ = |∂x m|² + 2γ ∂x m·(e1∧m) - m1²` with second-order central differences.
    pub fn lagrange_multiplier(&self, m: &MagnetizationField) -> Vec<f64> {
        let v = m.values();
        let d = stencil::central_diff_vec(v, m.grid().dx());
        v.iter()
            .zip(&d)
            .map(|(mi, di)| di.norm_sq() + 2.0 * self.gamma * di.dot(mi.e1_cross()) - mi[0] * mi[0])
            .collect()
    }

    pub fn rho_components(&self, m: &MagnetizationField) -> Result<RhoComponents> {
        let de = self.gradient_raw(m.grid(), m.values());
        let n = m.len();
        let mut out = RhoComponents {
            rho0: Vec::with_capacity(n),
            rho1: Vec::with_capacity(n),
            rho2: Vec::with_capacity(n),
        };
        for (i, (mi, gi)) in m.values().iter().zip(&de).enumerate() {
            let (nf, pf) = frame_at(*mi).ok_or(DmiError::PoleTouched {
                index: i,
                gap: 1.0 - mi[0].abs(),
            })?;
            out.rho0.push(mi.dot(*gi));
            out.rho1.push(-nf.dot(*gi));
            out.rho2.push(-pf.dot(*gi));
        }
        Ok(out)
    }

    /// `∫ |∂x m|² + (1 - m1²) - 2γ e1·(∂x m ∧ m)`.
    pub fn gamma_limit_energy_1d(&self, m: &MagnetizationField) -> f64 {
        let v = m.values();
        let grid = m.grid();
        let r = self.stencil.radius();
        let padded = stencil::pad(v, r);
        let exch = stencil::exchange_density(&padded, r, self.stencil, grid.dx());
        let (_, d1) = stencil::derivatives(&padded, r, self.stencil, grid.dx());
        grid.integrate_with(|i| {
            exch[i] + (1.0 - v[i][0] * v[i][0]) - 2.0 * self.gamma * E1.dot(d1[i].cross(v[i]))
        })
    }

    /// `E(m)` against `((1-|γ|)/2)(‖∂x m‖² + ‖m2‖² + ‖m3‖²)`, where the
    /// gradient term uses the exchange discretisation of the energy.
    pub fn coercivity_check(&self, m: &MagnetizationField) -> CoercivityCheck {
        let v = m.values();
        let grid = m.grid();
        let r = self.stencil.radius();
        let exch = stencil::exchange_density(&stencil::pad(v, r), r, self.stencil, grid.dx());
        let sq = grid.integrate_with(|i| exch[i] + v[i].transverse_sq());
        CoercivityCheck {
            lhs: self.energy(m).total,
            rhs: 0.5 * (1.0 - self.gamma.abs()) * sq,
        }
    }

    /// Dissipation integrand `|δE|² - (m·δE)²` and forcing integrand
    /// `(m∧e1)·(m∧δE)`, integrated.
    pub fn dissipation_terms(&self, grid: &Grid, m: &[Vec3]) -> (f64, f64) {
        let de = self.gradient_raw(grid, m);
        let diss = grid.integrate_with(|i| {
            let c = m[i].cross(de[i]);
            c.norm_sq()
        });
        let forcing = grid.integrate_with(|i| {
            let a = m[i].cross(E1);
            a.dot(m[i].cross(de[i]))
        });
        (diss, forcing)
    }
}

/// `|m|² - 1` without rounding loss, via exact products.
pub fn norm_defect(m: Vec3) -> f64 {
    let mut acc = crate::grid::NeumaierSum::default();
    for k in 0..3 {
        let p = m[k] * m[k];
        acc.add(p);
        acc.add(m[k].mul_add(m[k], -p));
    }
    acc.add(-1.0);
    acc.value()
}

/// Frame `(n, p)` at a unit vector, `None` where `e1 ∧ m` vanishes.
pub fn frame_at(m: Vec3) -> Option<(Vec3, Vec3)> {
    let s = m.transverse_sq().sqrt();
    if !(s > 0.0) {
        return None;
    }
    let (c, sn) = (m[1] / s, m[2] / s);
    Some((Vec3::new(-s, m[0] * c, m[0] * sn), Vec3::new(0.0, -sn, c)))
}

/// Spherical form `(∂xθ)² + sin²θ((∂xφ + γ)² + 1 - γ²)` of twice the energy
/// density, by central differences.
pub fn spherical_density(s: &SphericalField, gamma: f64) -> Vec<f64> {
    let dx = s.grid.dx();
    let dt = stencil::central_diff(&s.theta, dx);
    let dp = stencil::central_diff(&s.phi, dx);
    s.theta
        .iter()
        .zip(dt.iter().zip(&dp))
        .map(|(t, (a, b))| {
            let st = t.sin();
            a * a + st * st * ((b + gamma).powi(2) + 1.0 - gamma * gamma)
        })
        .collect()
}

/// Spherical expressions of `ρ1` and `ρ2`:
/// `ρ1 = ∂xxθ - sinθ cosθ((∂xφ+γ)² + 1 - γ²)` and
/// `ρ2 = sinθ ∂xxφ + 2 cosθ ∂xθ (∂xφ + γ)`.
pub fn spherical_rho(s: &SphericalField, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let dx = s.grid.dx();
    let dt = stencil::central_diff(&s.theta, dx);
    let dtt = stencil::central_diff2(&s.theta, dx);
    let dp = stencil::central_diff(&s.phi, dx);
    let dpp = stencil::central_diff2(&s.phi, dx);
    let n = s.theta.len();
    let mut r1 = Vec::with_capacity(n);
    let mut r2 = Vec::with_capacity(n);
    for i in 0..n {
        let (st, ct) = s.theta[i].sin_cos();
        let q = dp[i] + gamma;
        r1.push(dtt[i] - st * ct * (q * q + 1.0 - gamma * gamma));
        r2.push(st * dpp[i] + 2.0 * ct * dt[i] * q);
    }
    (r1, r2)
}

pub fn energy(m: &MagnetizationField, gamma: f64) -> Result<EnergyReport> {
    Ok(EnergyModel::new(gamma)?.energy(m))
}

pub fn energy_gradient(m: &MagnetizationField, gamma: f64) -> Result<VectorField> {
    Ok(EnergyModel::new(gamma)?.gradient(m))
}

pub fn effective_field(m: &MagnetizationField, gamma: f64, h: f64) -> Result<VectorField> {
    Ok(EnergyModel::new(gamma)?.effective_field(m, h))
}

pub fn lagrange_multiplier(m: &MagnetizationField, gamma: f64) -> Result<Vec<f64>> {
    Ok(EnergyModel::new(gamma)?.lagrange_multiplier(m))
}

pub fn rho_components(m: &MagnetizationField, gamma: f64) -> Result<RhoComponents> {
    EnergyModel::new(gamma)?.rho_components(m)
}

pub fn gamma_limit_energy_1d(m: &MagnetizationField, gamma: f64) -> Result<f64> {
    Ok(EnergyModel::new(gamma)?.gamma_limit_energy_1d(m))
}

pub fn coercivity_check(m: &MagnetizationField, gamma: f64) -> Result<CoercivityCheck> {
    Ok(EnergyModel::new(gamma)?.coercivity_check(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::to_spherical;
    use crate::vec3::E2;

    fn wall(gamma: f64, grid: Grid) -> MagnetizationField {
        let k = (1.0 - gamma * gamma).sqrt();
        MagnetizationField::from_fn(grid, |x| {
            let s = 1.0 / (k * x).cosh();
            Vec3::new((k * x).tanh(), s * (gamma * x).cos(), -s * (gamma * x).sin())
        })
        .unwrap()
    }

    #[test]
    fn ground_state_is_free() {
        let g = Grid::new(5.0, 101).unwrap();
        let m = MagnetizationField::constant(g, E1).unwrap();
        assert_eq!(energy(&m, 0.4).unwrap().total, 0.0);
        assert_eq!(energy_gradient(&m, 0.4).unwrap().max_abs(), 0.0);
        let h = effective_field(&m, 0.4, 0.1).unwrap();
        assert!(h.values().iter().all(|v| *v == Vec3::new(0.1, 0.0, 0.0)));
        assert!(lagrange_multiplier(&m, 0.2).unwrap().iter().all(|l| *l == -1.0));
    }

    #[test]
    fn rejects_large_gamma() {
        let g = Grid::new(5.0, 101).unwrap();
        let m = MagnetizationField::constant(g, E1).unwrap();
        assert!(matches!(energy(&m, 1.0), Err(DmiError::GammaOutOfRange(_))));
        assert!(matches!(energy(&m, f64::NAN), Err(DmiError::GammaOutOfRange(_))));
    }

    #[test]
    fn wall_energy_values() {
        let g = Grid::new(20.0, 4001).unwrap();
        assert!((energy(&wall(0.0, g), 0.0).unwrap().total - 2.0).abs() < 1e-5);
        let g6 = Grid::new(40.0 / 0.8, 10001).unwrap();
        assert!((energy(&wall(0.6, g6), 0.6).unwrap().total - 1.6).abs() < 1e-5);
    }

    #[test]
    fn gradient_at_wall_centre() {
        let g = Grid::new(20.0, 4001).unwrap();
        let de = energy_gradient(&wall(0.0, g), 0.0).unwrap();
        assert!((de.values()[2000] - E2.scale(2.0)).max_abs() < 1e-8);
    }

    #[test]
    fn equator_multiplier_vanishes() {
        let g = Grid::new(5.0, 101).unwrap();
        let m = MagnetizationField::constant(g, E2).unwrap();
        assert!(lagrange_multiplier(&m, 0.5).unwrap().iter().all(|l| *l == 0.0));
    }

    #[test]
    fn multiplier_matches_normal_gradient() {
        let g = Grid::new(20.0, 2001).unwrap();
        let m = wall(0.3, g);
        let model = EnergyModel::new(0.3).unwrap();
        let lam = model.lagrange_multiplier(&m);
        let de = model.gradient(&m);
        let err = m
            .values()
            .iter()
            .zip(de.values())
            .zip(&lam)
            .skip(1)
            .take(g.len() - 2)
            .map(|((mi, d), l)| (mi.dot(*d) - 1.0 - l).abs())
            .fold(0.0, f64::max);
        assert!(err < 5.0 * g.dx() * g.dx(), "{err}");
    }

    #[test]
    fn rho_at_wall() {
        let gamma = 0.6;
        let g = Grid::new(30.0, 3001).unwrap();
        let m = wall(gamma, g);
        let r = rho_components(&m, gamma).unwrap();
        let tol = 5.0 * g.dx() * g.dx();
        let k2 = 1.0 - gamma * gamma;
        for (i, x) in g.points().enumerate() {
            assert!(r.rho1[i].abs() < tol && r.rho2[i].abs() < tol);
            let s = 1.0 / (k2.sqrt() * x).cosh();
            assert!((r.rho0[i] - 2.0 * k2 * s * s).abs() < tol);
        }
    }

    #[test]
    fn gamma_limit_ground_and_wall() {
        let g = Grid::new(20.0, 4001).unwrap();
        let e1 = MagnetizationField::constant(g, E1).unwrap();
        assert_eq!(gamma_limit_energy_1d(&e1, 0.2).unwrap(), 0.0);
        assert!((gamma_limit_energy_1d(&wall(0.0, g), 0.0).unwrap() - 4.0).abs() < 2e-5);
    }

    #[test]
    fn coercivity_saturated_by_bloch_wall() {
        let g = Grid::new(20.0, 4001).unwrap();
        let c = coercivity_check(&wall(0.0, g), 0.0).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-4 && (c.rhs - 2.0).abs() < 1e-4);
        let e1 = MagnetizationField::constant(g, E1).unwrap();
        let c0 = coercivity_check(&e1, 0.5).unwrap();
        assert_eq!((c0.lhs, c0.rhs), (0.0, 0.0));
    }

    #[test]
    fn polarised_difference_matches_direct_difference() {
        let g = Grid::new(10.0, 401).unwrap();
        let model = EnergyModel::new(0.4).unwrap();
        let a = wall(0.4, g);
        let b = MagnetizationField::from_fn(g, |x| {
            let k = (1.0f64 - 0.16).sqrt();
            Vec3::new((k * x).tanh(), 1.1 / (k * x).cosh(), 0.2 / (x * x + 1.0))
        })
        .unwrap();
        let direct = model.energy(&a).total - model.energy(&b).total;
        let polar = model.energy_difference(&g, a.values(), b.values());
        assert!((direct - polar).abs() < 1e-13, "{direct} {polar}");
    }

    #[test]
    fn spherical_density_matches_cartesian() {
        let gamma = 0.3;
        let g = Grid::new(10.0, 2001).unwrap();
        let m = MagnetizationField::from_fn(g, |x| {
            let t = 1.2 + 0.3 * (0.7 * x).sin() * (-x * x / 20.0).exp();
            let p = 0.4 * x + 0.5 * (0.3 * x).cos();
            Vec3::new(t.cos(), t.sin() * p.cos(), t.sin() * p.sin())
        })
        .unwrap();
        let rep = energy(&m, gamma).unwrap();
        let sph = spherical_density(&to_spherical(&m).unwrap(), gamma);
        let tol = 5.0 * g.dx() * g.dx();
        for i in 3..g.len() - 3 {
            assert!((2.0 * rep.density[i] - sph[i]).abs() < tol, "{i}");
        }
    }
}
