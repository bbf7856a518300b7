use std::ops::{Add, Neg, Sub};

use crate::energy::EnergyModel;
use crate::error::{check_gamma, DmiError, Result};
use crate::field::{project_to_sphere, MagnetizationField, VectorField};
use crate::grid::Grid;
use crate::stencil::{self, TAIL_TOLERANCE};
use crate::vec3::{Vec3, E1};

/// Translation `y` along the wire followed by rotation `phi` about e1.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Gauge {
    pub y: f64,
    pub phi: f64,
}

impl Gauge {
    pub fn new(y: f64, phi: f64) -> Result<Self> {
        if !y.is_finite() || !phi.is_finite() {
            return Err(DmiError::InvalidParameter(format!(
                "gauge must be finite (got y={y}, phi={phi})"
            )));
        }
        Ok(Gauge { y, phi })
    }

    pub fn norm(&self) -> f64 {
        self.y.hypot(self.phi)
    }

    /// `g.m = τ_y R_φ m` for a translation that is a whole number of cells.
    pub fn apply(&self, m: &MagnetizationField) -> Result<MagnetizationField> {
        let k = m.grid().grid_shift(self.y).ok_or_else(|| {
            DmiError::InvalidParameter(format!(
                "translation {} is not a multiple of the spacing {}",
                self.y,
                m.grid().dx()
            ))
        })?;
        Ok(m.rotated(self.phi).shifted(k))
    }

    /// Same as [`Gauge::apply`] on an unconstrained vector field.
    pub fn apply_vectors(&self, f: &VectorField) -> Result<VectorField> {
        let g = *f.grid();
        let k = g.grid_shift(self.y).ok_or_else(|| {
            DmiError::InvalidParameter(format!("translation {} is not grid aligned", self.y))
        })?;
        let n = g.len() as isize;
        let v = f.values();
        let out = (0..n)
            .map(|i| v[(i - k).clamp(0, n - 1) as usize].rotate_e1(self.phi))
            .collect();
        VectorField::new(g, out)
    }
}

impl Add for Gauge {
    type Output = Gauge;
    fn add(self, o: Gauge) -> Gauge {
        Gauge {
            y: self.y + o.y,
            phi: self.phi + o.phi,
        }
    }
}

impl Sub for Gauge {
    type Output = Gauge;
    fn sub(self, o: Gauge) -> Gauge {
        Gauge {
            y: self.y - o.y,
            phi: self.phi - o.phi,
        }
    }
}

impl Neg for Gauge {
    type Output = Gauge;
    fn neg(self) -> Gauge {
        Gauge {
            y: -self.y,
            phi: -self.phi,
        }
    }
}

/// Chirality of the transverse part: `w+` or `w- = R_π w+`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(DmiError::InvalidParameter(format!("sign must be +1 or -1 (got {v})"))),
        }
    }

    /// Extra rotation turning `w+` into this wall.
    pub fn phase(self) -> f64 {
        match self {
            Sign::Plus => 0.0,
            Sign::Minus => std::f64::consts::PI,
        }
    }
}

/// Closed-form wall quantities at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallSample {
    pub w: Vec3,
    pub dw: Vec3,
    pub ddw: Vec3,
    pub n: Vec3,
    pub p: Vec3,
    /// `sin θ*` at the shifted point.
    pub sin_theta: f64,
}

/// Member `g.w±*` of the wall family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallParams {
    gamma: f64,
    sign: Sign,
    gauge: Gauge,
}

impl WallParams {
    pub fn new(gamma: f64, sign: Sign, gauge: Gauge) -> Result<Self> {
        check_gamma(gamma)?;
        Gauge::new(gauge.y, gauge.phi)?;
        Ok(WallParams { gamma, sign, gauge })
    }

    pub fn centred(gamma: f64) -> Result<Self> {
        Self::new(gamma, Sign::Plus, Gauge::default())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn k(&self) -> f64 {
        (1.0 - self.gamma * self.gamma).sqrt()
    }

    /// Closed-form `(g.w*)(x)` with its first two derivatives and frame.
    pub fn sample(&self, x: f64) -> WallSample {
        let k = self.k();
        let g = self.gamma;
        let u = x - self.gauge.y;
        let a = (k * u).tanh();
        let s = 1.0 / (k * u).cosh();
        let psi = self.gauge.phi + self.sign.phase() - g * u;
        let (sp, cp) = psi.sin_cos();
        let ds = -k * s * a;
        let dds = k * k * s * (a * a - s * s);
        let c = dds - g * g * s;
        WallSample {
            w: Vec3::new(a, s * cp, s * sp),
            dw: Vec3::new(k * s * s, ds * cp + g * s * sp, ds * sp - g * s * cp),
            ddw: Vec3::new(
                -2.0 * k * k * s * s * a,
                c * cp + 2.0 * g * ds * sp,
                c * sp - 2.0 * g * ds * cp,
            ),
            n: Vec3::new(-s, a * cp, a * sp),
            p: Vec3::new(0.0, -sp, cp),
            sin_theta: s,
        }
    }

    pub fn profile(&self, grid: &Grid) -> MagnetizationField {
        let raw: Vec<Vec3> = grid.points().map(|x| self.sample(x).w).collect();
        project_to_sphere(grid, &raw).expect("wall profile is unit")
    }

    pub fn samples(&self, grid: &Grid) -> Vec<WallSample> {
        grid.points().map(|x| self.sample(x)).collect()
    }
}

/// Samples `(g.w±*)(x) = R_φ w±*(x - y)` on the grid.
pub fn wall_profile(p: &WallParams, grid: &Grid) -> MagnetizationField {
    p.profile(grid)
}

/// The frame `(w*, n*, p*)` of the centred `w+` wall.
pub fn wall_frame(gamma: f64, grid: &Grid) -> Result<(VectorField, VectorField, VectorField)> {
    let p = WallParams::centred(gamma)?;
    let s = p.samples(grid);
    Ok((
        VectorField::new(*grid, s.iter().map(|q| q.w).collect())?,
        VectorField::new(*grid, s.iter().map(|q| q.n).collect())?,
        VectorField::new(*grid, s.iter().map(|q| q.p).collect())?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallIdentities {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl WallIdentities {
    /// Closed-form values `2/k`, `-2γ/k`, `-2`.
    pub fn expected(gamma: f64) -> WallIdentities {
        let k = (1.0 - gamma * gamma).sqrt();
        WallIdentities {
            i1: 2.0 / k,
            i2: -2.0 * gamma / k,
            i3: -2.0,
        }
    }
}

/// `∫|e1∧w*|²`, `∫(e1∧w*)·∂x w*` and `∫ w*∧(w*∧e1)·∂x w*` by trapezoid on
/// closed-form samples.
pub fn wall_identities(gamma: f64, grid: &Grid) -> Result<WallIdentities> {
    let s = WallParams::centred(gamma)?.samples(grid);
    Ok(WallIdentities {
        i1: grid.integrate_with(|i| s[i].w.e1_cross().norm_sq()),
        i2: grid.integrate_with(|i| s[i].w.e1_cross().dot(s[i].dw)),
        i3: grid.integrate_with(|i| s[i].w.cross(s[i].w.cross(E1)).dot(s[i].dw)),
    })
}

/// Largest pointwise `|∂x m - (k m∧(e1∧m) - γ e1∧m)|`, central differences.
pub fn first_order_residual(m: &MagnetizationField, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let k = (1.0 - gamma * gamma).sqrt();
    let v = m.values();
    let d = stencil::central_diff_vec(v, m.grid().dx());
    Ok(v.iter()
        .zip(&d)
        .map(|(mi, di)| {
            let e = mi.e1_cross();
            (*di - (mi.cross(e).scale(k) - e.scale(gamma))).norm()
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaResidual {
    /// With the exact derivative `-k sech(kx)`.
    pub analytic: f64,
    /// With a central difference of the sampled `θ*`.
    pub fd: f64,
}

/// Residual of `∂xθ* = -k sin θ*` for `θ* = 2 arctan(e^{-kx})`.
pub fn theta_ode_residual(gamma: f64, grid: &Grid) -> Result<ThetaResidual> {
    check_gamma(gamma)?;
    let k = (1.0 - gamma * gamma).sqrt();
    let theta: Vec<f64> = grid.points().map(|x| 2.0 * (-k * x).exp().atan()).collect();
    let analytic = grid
        .points()
        .zip(&theta)
        .map(|(x, t)| (-k / (k * x).cosh() + k * t.sin()).abs())
        .fold(0.0, f64::max);
    let d = stencil::central_diff(&theta, grid.dx());
    let fd = d
        .iter()
        .zip(&theta)
        .map(|(dt, t)| (dt + k * t.sin()).abs())
        .fold(0.0, f64::max);
    Ok(ThetaResidual { analytic, fd })
}

/// Piecewise-constant applied field `h(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AppliedField {
    segments: Vec<(f64, f64)>,
}

impl AppliedField {
    /// Segments `(t_start, value)`, sorted with first start at 0.
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() || segments[0].0 != 0.0 {
            return Err(DmiError::InvalidParameter(
                "applied field schedule must start at t = 0".into(),
            ));
        }
        for w in segments.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(DmiError::InvalidParameter(
                    "applied field times must be strictly increasing".into(),
                ));
            }
        }
        if segments.iter().any(|(t, h)| !t.is_finite() || !h.is_finite()) {
            return Err(DmiError::InvalidParameter("applied field must be finite".into()));
        }
        Ok(AppliedField { segments })
    }

    pub fn constant(h: f64) -> Self {
        AppliedField {
            segments: vec![(0.0, h)],
        }
    }

    /// Parses CSV with header `t,h`.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(h) if h.replace(' ', "") == "t,h" => {}
            other => {
                return Err(DmiError::InvalidParameter(format!(
                    "applied field CSV must start with header `t,h` (got {other:?})"
                )))
            }
        }
        let mut segs = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut it = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.parse().ok()).ok_or_else(|| {
                    DmiError::InvalidParameter(format!("bad applied field row {}: {line}", n + 2))
                })
            };
            let t = parse(it.next())?;
            let h = parse(it.next())?;
            segs.push((t, h));
        }
        Self::new(segs)
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    /// Left-continuous value: on `(t_j, t_{j+1}]` the field equals `h_j`.
    pub fn value_at(&self, t: f64) -> f64 {
        let mut v = self.segments[0].1;
        for &(s, h) in &self.segments[1..] {
            if t > s {
                v = h;
            } else {
                break;
            }
        }
        v
    }

    /// Exact `∫₀ᵗ h`.
    pub fn integral(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &(s, h)) in self.segments.iter().enumerate() {
            if t <= s {
                break;
            }
            let end = self.segments.get(j + 1).map_or(t, |n| n.0.min(t));
            acc += h * (end - s);
        }
        acc
    }

    pub fn sup(&self) -> f64 {
        self.segments.iter().map(|s| s.1.abs()).fold(0.0, f64::max)
    }
}

/// Rates `(ẏ*, φ̇*)` of the precessing wall under field `h`.
pub fn precessing_rates(h: f64, alpha: f64, gamma: f64) -> Gauge {
    let k = (1.0 - gamma * gamma).sqrt();
    Gauge {
        y: -alpha * h / k,
        phi: (-1.0 + alpha * gamma / k) * h,
    }
}

/// Gauge `g*(t)` of the precessing wall, `g*(0) = 0`.
pub fn precessing_gauge(h: &AppliedField, alpha: f64, gamma: f64, t: f64) -> Result<Gauge> {
    check_gamma(gamma)?;
    if !(t >= 0.0) {
        return Err(DmiError::InvalidParameter(format!("time must be >= 0 (got {t})")));
    }
    Ok(precessing_rates(h.integral(t), alpha, gamma))
}

/// Outcome of [`relax_to_wall`].
#[derive(Clone, Debug)]
pub struct RelaxReport {
    pub field: MagnetizationField,
    pub steps: usize,
    pub rejected: usize,
    /// Final `‖m ∧ δE(m)‖_∞`.
    pub residual: f64,
    pub converged: bool,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Energies after every accepted step (starting with the initial one).
    pub energies: Vec<f64>,
}

/// Consecutive rejected steps after which descent is abandoned.
pub const MAX_BACKTRACKS: usize = 50;

/// Projected gradient descent `m ← P(m - τ δE(m))` with backtracking on
/// energy increase, until `‖m ∧ δE(m)‖_∞ < tol` or `max_steps` accepted steps.
pub fn relax_to_wall(m0: &MagnetizationField, gamma: f64, max_steps: usize, tol: f64) -> Result<RelaxReport> {
    relax_with(m0, &EnergyModel::new(gamma)?, max_steps, tol)
}

pub fn relax_with(m0: &MagnetizationField, model: &EnergyModel, max_steps: usize, tol: f64) -> Result<RelaxReport> {
    let v = m0.values();
    for (idx, b) in [(0, v[0]), (v.len() - 1, v[v.len() - 1])] {
        let s = if b[0] >= 0.0 { 1.0 } else { -1.0 };
        if (b - E1.scale(s)).norm() > TAIL_TOLERANCE {
            return Err(DmiError::InvalidParameter(format!(
                "boundary value at index {idx} is not within {TAIL_TOLERANCE} of ±e1"
            )));
        }
    }
    let grid = *m0.grid();
    let dx = grid.dx();
    let mut m = m0.clone();
    let mut e = model.energy(&m).total;
    let energy_initial = e;
    let mut energies = vec![e];
    let mut tau = 0.4 * dx * dx;
    let mut steps = 0;
    let mut rejected = 0;
    let mut fails = 0;
    let mut grad = model.gradient_raw(&grid, m.values());
    let mut residual = cross_residual(m.values(), &grad);
    while residual >= tol && steps < max_steps {
        let cand: Vec<Vec3> = m
            .values()
            .iter()
            .zip(&grad)
            .map(|(mi, gi)| *mi - gi.scale(tau))
            .collect();
        let cand = project_to_sphere(&grid, &cand)?;
        let e_new = model.energy(&cand).total;
        if e_new <= e + 4.0 * f64::EPSILON * e.abs() {
            m = cand;
            e = e_new;
            energies.push(e);
            steps += 1;
            fails = 0;
            tau *= 1.1;
            grad = model.gradient_raw(&grid, m.values());
            residual = cross_residual(m.values(), &grad);
        } else {
            tau *= 0.5;
            fails += 1;
            rejected += 1;
            if fails >= MAX_BACKTRACKS {
                return Err(DmiError::NoDescent(fails));
            }
        }
    }
    Ok(RelaxReport {
        field: m,
        steps,
        rejected,
        residual,
        converged: residual < tol,
        energy_initial,
        energy_final: e,
        energies,
    })
}

fn cross_residual(m: &[Vec3], g: &[Vec3]) -> f64 {
    m.iter()
        .zip(g)
        .map(|(a, b)| a.cross(*b).norm())
        .fold(0.0, f64::max)
}

/// `‖m ∧ δE(m)‖_∞`.
pub fn euler_lagrange_residual(m: &MagnetizationField, model: &EnergyModel) -> f64 {
    cross_residual(m.values(), &model.gradient_raw(m.grid(), m.values()))
}
