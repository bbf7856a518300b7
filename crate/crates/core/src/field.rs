use std::io::{self, Write};

use crate::error::{DmiError, Result};
use crate::grid::Grid;
use crate::vec3::Vec3;

/// Deviation from unit norm tolerated by [`MagnetizationField`].
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Norm below which [`project_to_sphere`] refuses to normalise.
pub const VANISHING_NORM: f64 = 1e-8;
/// Minimal distance `1 - |m1|` from the poles for spherical coordinates.
pub const POLE_GAP: f64 = 1e-6;

/// Unconstrained vector field on a grid (gradients, effective fields, rates).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<Vec3>,
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DmiError::GridMismatch);
        }
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            values: vec![Vec3::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Vec3) -> Self {
        VectorField {
            grid,
            values: grid.points().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.max_abs()).fold(0.0, f64::max)
    }

    pub fn norms(&self) -> Norms {
        norms(&self.grid, &self.values)
    }
}

/// Unit-vector field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnetizationField {
    grid: Grid,
    values: Vec<Vec3>,
}

impl MagnetizationField {
    /// Wraps values that are already unit within [`UNIT_TOLERANCE`].
    pub fn new(grid: Grid, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DmiError::GridMismatch);
        }
        for (i, v) in values.iter().enumerate() {
            let dev = (v.norm() - 1.0).abs();
            if !(dev <= UNIT_TOLERANCE) {
                return Err(DmiError::InvalidParameter(format!(
                    "value {i} is not unit (| |m| - 1 | = {dev:e})"
                )));
            }
        }
        Ok(MagnetizationField { grid, values })
    }

    pub fn constant(grid: Grid, v: Vec3) -> Result<Self> {
        project_to_sphere(&grid, &vec![v; grid.len()])
    }

    /// Samples `f` and normalises.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Vec3) -> Result<Self> {
        let raw: Vec<Vec3> = grid.points().map(f).collect();
        project_to_sphere(&grid, &raw)
    }

    pub(crate) fn from_unit_unchecked(grid: Grid, values: Vec<Vec3>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        MagnetizationField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `| |m_i| - 1 |`.
    pub fn unit_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise rotation `R_phi` about e1.
    pub fn rotated(&self, phi: f64) -> Self {
        MagnetizationField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.rotate_e1(phi)).collect(),
        }
    }

    /// Translation by `k` grid cells, `(τ m)_i = m_{i-k}`; nodes entering the
    /// domain copy the adjacent boundary value.
    pub fn shifted(&self, k: isize) -> Self {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|i| self.values[(i - k).clamp(0, n - 1) as usize])
            .collect();
        MagnetizationField {
            grid: self.grid,
            values,
        }
    }

    /// Difference `self - other` as a plain vector field.
    pub fn diff(&self, other: &MagnetizationField) -> Result<VectorField> {
        if self.grid != other.grid {
            return Err(DmiError::GridMismatch);
        }
        Ok(VectorField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a - *b)
                .collect(),
        })
    }

    /// H¹ distance `‖self - other‖_{H¹}`.
    pub fn h1_distance(&self, other: &MagnetizationField) -> Result<f64> {
        Ok(self.diff(other)?.norms().h1)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_vectors_csv(w, &self.grid, &self.values)
    }
}

/// Vector field declared tangent to a base magnetisation.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    grid: Grid,
    values: Vec<Vec3>,
}

impl TangentField {
    /// Checks tangency to `base` within `1e-12` relative.
    pub fn new(base: &MagnetizationField, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != base.len() {
            return Err(DmiError::GridMismatch);
        }
        check_tangent(base.values(), &values)?;
        Ok(TangentField {
            grid: base.grid,
            values,
        })
    }

    /// Removes the normal component of `values` relative to `base`.
    pub fn project(base: &MagnetizationField, values: &[Vec3]) -> Result<Self> {
        if values.len() != base.len() {
            return Err(DmiError::GridMismatch);
        }
        let values = values
            .iter()
            .zip(base.values())
            .map(|(v, m)| *v - m.scale(v.dot(*m)))
            .collect();
        Ok(TangentField {
            grid: base.grid,
            values,
        })
    }

    pub fn zeros(base: &MagnetizationField) -> Self {
        TangentField {
            grid: base.grid,
            values: vec![Vec3::default(); base.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.scale(s)).collect(),
        }
    }

    pub fn norms(&self) -> Norms {
        norms(&self.grid, &self.values)
    }
}

fn check_tangent(base: &[Vec3], values: &[Vec3]) -> Result<()> {
    for (i, (v, m)) in values.iter().zip(base).enumerate() {
        let defect = v.dot(*m).abs();
        if !(defect <= 1e-12 * v.norm().max(1.0)) {
            return Err(DmiError::NotTangent { index: i, defect });
        }
    }
    Ok(())
}

/// Spherical coordinates `m = (cos θ, sin θ cos φ, sin θ sin φ)` with a
/// continuous lifting of φ.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalField {
    pub grid: Grid,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SphericalField {
    pub fn to_field(&self) -> Result<MagnetizationField> {
        from_spherical(&self.grid, &self.theta, &self.phi)
    }
}

/// Divides every value by its norm.
pub fn project_to_sphere(grid: &Grid, f: &[Vec3]) -> Result<MagnetizationField> {
    if f.len() != grid.len() {
        return Err(DmiError::GridMismatch);
    }
    let mut values = Vec::with_capacity(f.len());
    for (i, v) in f.iter().enumerate() {
        let norm = v.norm();
        if !(norm > VANISHING_NORM) || !norm.is_finite() {
            return Err(DmiError::VanishingVector { index: i, norm });
        }
        values.push(v.scale(1.0 / norm));
    }
    Ok(MagnetizationField {
        grid: *grid,
        values,
    })
}

/// Pointwise exponential map `cos|v| m + sin|v| v/|v|`.
pub fn exp_map_perturb(m: &MagnetizationField, v: &TangentField) -> Result<MagnetizationField> {
    if v.grid != m.grid || v.values.len() != m.values.len() {
        return Err(DmiError::GridMismatch);
    }
    check_tangent(&m.values, &v.values)?;
    let raw: Vec<Vec3> = m
        .values
        .iter()
        .zip(&v.values)
        .map(|(mi, vi)| {
            let a = vi.norm();
            if a == 0.0 {
                *mi
            } else {
                mi.scale(a.cos()) + vi.scale(a.sin() / a)
            }
        })
        .collect();
    // re-normalise to keep the unit invariant at rounding level
    project_to_sphere(&m.grid, &raw)
}

pub fn to_spherical(m: &MagnetizationField) -> Result<SphericalField> {
    let n = m.len();
    let mut theta = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    let mut prev = 0.0;
    for (i, v) in m.values.iter().enumerate() {
        let gap = 1.0 - v[0].abs();
        if !(gap >= POLE_GAP) {
            return Err(DmiError::PoleTouched { index: i, gap });
        }
        theta.push(v[0].clamp(-1.0, 1.0).acos());
        let raw = v[2].atan2(v[1]);
        let p = if i == 0 {
            // atan2 lies in [-π, π]; the base point is taken in (-π, π]
            if raw <= -std::f64::consts::PI {
                raw + 2.0 * std::f64::consts::PI
            } else {
                raw
            }
        } else {
            let turns = ((prev - raw) / (2.0 * std::f64::consts::PI)).round();
            raw + turns * 2.0 * std::f64::consts::PI
        };
        phi.push(p);
        prev = p;
    }
    Ok(SphericalField {
        grid: m.grid,
        theta,
        phi,
    })
}

pub fn from_spherical(grid: &Grid, theta: &[f64], phi: &[f64]) -> Result<MagnetizationField> {
    if theta.len() != grid.len() || phi.len() != grid.len() {
        return Err(DmiError::GridMismatch);
    }
    let raw: Vec<Vec3> = theta
        .iter()
        .zip(phi)
        .map(|(&t, &p)| {
            let (st, ct) = t.sin_cos();
            let (sp, cp) = p.sin_cos();
            Vec3::new(ct, st * cp, st * sp)
        })
        .collect();
    project_to_sphere(grid, &raw)
}

/// Discrete Sobolev norms of a vector field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1dot: f64,
    pub h2dot: f64,
    pub h1: f64,
    pub linf: f64,
}

/// `l2` by trapezoid, `h1dot` from forward differences, `h2dot` from central
/// second differences on interior nodes.
pub fn norms(grid: &Grid, f: &[Vec3]) -> Norms {
    let dx = grid.dx();
    let l2sq = grid.integrate_with(|i| f[i].norm_sq());
    let n = f.len();
    let mut h1 = crate::grid::NeumaierSum::default();
    for i in 0..n.saturating_sub(1) {
        h1.add((f[i + 1] - f[i]).norm_sq());
    }
    let mut h2 = crate::grid::NeumaierSum::default();
    for i in 1..n.saturating_sub(1) {
        h2.add((f[i + 1] - f[i].scale(2.0) + f[i - 1]).norm_sq());
    }
    let h1dot_sq = h1.value() / dx;
    let h2dot_sq = h2.value() / (dx * dx * dx);
    Norms {
        l2: l2sq.sqrt(),
        h1dot: h1dot_sq.sqrt(),
        h2dot: h2dot_sq.sqrt(),
        h1: (l2sq + h1dot_sq).sqrt(),
        linf: f.iter().map(|v| v.norm()).fold(0.0, f64::max),
    }
}

/// [`norms`] of a scalar field.
pub fn scalar_norms(grid: &Grid, f: &[f64]) -> Norms {
    let v: Vec<Vec3> = f.iter().map(|&c| Vec3::new(c, 0.0, 0.0)).collect();
    norms(grid, &v)
}

/// `‖m2‖ + ‖m3‖ + ‖∂x m‖`.
pub fn seminorm_calh1(m: &MagnetizationField) -> f64 {
    let g = m.grid();
    let v = m.values();
    let m2 = g.integrate_with(|i| v[i][1] * v[i][1]).sqrt();
    let m3 = g.integrate_with(|i| v[i][2] * v[i][2]).sqrt();
    m2 + m3 + norms(g, v).h1dot
}

/// CSV with header `x,m1,m2,m3` and 17 significant digits.
pub fn write_vectors_csv<W: Write>(mut w: W, grid: &Grid, values: &[Vec3]) -> io::Result<()> {
    writeln!(w, "x,m1,m2,m3")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            grid.x(i),
            v[0],
            v[1],
            v[2]
        )?;
    }
    Ok(())
}
