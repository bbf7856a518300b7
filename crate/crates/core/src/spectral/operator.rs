use crate::error::{check_gamma, DmiError, Result};
use crate::grid::Grid;

/// Symmetric tridiagonal `-∂xx + V` on the interior nodes of a grid, with
/// homogeneous Dirichlet conditions at `±L`.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub grid: Grid,
}

impl TridiagonalOperator {
    /// `-∂xx + V(x)` with a three-point stencil.
    pub fn schrodinger(grid: &Grid, potential: impl Fn(f64) -> f64) -> Self {
        let n = grid.len() - 2;
        let idx2 = 1.0 / (grid.dx() * grid.dx());
        TridiagonalOperator {
            diag: (1..=n).map(|i| 2.0 * idx2 + potential(grid.x(i))).collect(),
            offdiag: vec![-idx2; n - 1],
            grid: *grid,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector must live on the interior nodes");
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.offdiag[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.offdiag[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// `l²(dx)` inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.grid.dx() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `(T u, u)` in `l²(dx)`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.inner(&self.apply(u), u)
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

/// Potential `(1-γ²)(1 - 2 sech²(k(x - y)))` of the linearised operator.
pub fn l_gamma_potential(gamma: f64, y: f64) -> impl Fn(f64) -> f64 {
    let k2 = 1.0 - gamma * gamma;
    let k = k2.sqrt();
    move |x| {
        let s = 1.0 / (k * (x - y)).cosh();
        k2 * (1.0 - 2.0 * s * s)
    }
}

/// `L_γ = -∂xx + (1-γ²)(cos²θ* - sin²θ*)` around the centred wall.
pub fn build_l_gamma(gamma: f64, grid: &Grid) -> Result<TridiagonalOperator> {
    build_l_gamma_at(gamma, grid, 0.0)
}

/// `L_γ` around a wall centred at `y`.
pub fn build_l_gamma_at(gamma: f64, grid: &Grid, y: f64) -> Result<TridiagonalOperator> {
    check_gamma(gamma)?;
    if !y.is_finite() {
        return Err(DmiError::InvalidParameter("wall centre must be finite".into()));
    }
    Ok(TridiagonalOperator::schrodinger(grid, l_gamma_potential(gamma, y)))
}

/// Interior part of a full-grid array.
pub fn interior(f: &[f64]) -> &[f64] {
    &f[1..f.len() - 1]
}

/// Full-grid array from interior values, zero at both ends.
pub fn pad_dirichlet(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 2);
    out.push(0.0);
    out.extend_from_slice(v);
    out.push(0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_values() {
        let v = l_gamma_potential(0.0, 0.0);
        assert!((v(0.0) + 1.0).abs() < 1e-15);
        let v = l_gamma_potential(0.6, 0.0);
        assert!((v(0.0) + 0.64).abs() < 1e-15);
        let g = Grid::new(30.0, 1201).unwrap();
        let k = 0.8f64;
        assert!((v(30.0) - 0.64).abs() <= (-2.0 * k * 30.0).exp() * 10.0);
        let op = build_l_gamma(0.6, &g).unwrap();
        assert_eq!(op.dim(), 1199);
        assert!((op.diag[599] - (2.0 / 0.0025 - 0.64)).abs() < 1e-10);
        assert!(op.offdiag.iter().all(|o| (o + 400.0).abs() < 1e-9));
    }

    #[test]
    fn symmetric_action() {
        let g = Grid::new(10.0, 201).unwrap();
        let op = build_l_gamma(0.3, &g).unwrap();
        let u: Vec<f64> = (0..op.dim()).map(|i| (0.1 * i as f64).sin()).collect();
        let v: Vec<f64> = (0..op.dim()).map(|i| (0.05 * i as f64).cos().powi(3)).collect();
        let a = op.inner(&op.apply(&u), &v);
        let b = op.inner(&u, &op.apply(&v));
        let scale = op.inner(&u, &u).sqrt() * op.inner(&v, &v).sqrt();
        assert!((a - b).abs() <= 1e-12 * scale);
    }
}
