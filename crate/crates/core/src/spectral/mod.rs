//! The linearised operator `L_γ`: construction, low-lying spectrum,
//! constrained coercivity constants and checks of the quadratic energy
//! expansion around a wall.

mod banded;
mod expansion;
mod operator;
mod tridiag;

use std::io::{self, Write};

pub use banded::{Ldlt, SymBanded};
pub use expansion::{expansion_check, ExpansionResidual};
pub use operator::{
    build_l_gamma, build_l_gamma_at, interior, l_gamma_potential, pad_dirichlet, TridiagonalOperator,
};
pub use tridiag::{bisect_eigenvalue, residual, solve_shifted, sturm_count};

use crate::error::{check_gamma, DmiError, Result};
use crate::grid::Grid;

/// Lowest eigenpairs of a [`TridiagonalOperator`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Full-grid arrays, zero at both ends, `l²(dx)`-normalised.
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub grid: Grid,
}

impl SpectralResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,eigenvalue,residual")?;
        for (j, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            writeln!(w, "{},{:.16e},{:.16e}", j + 1, l, r)?;
        }
        Ok(())
    }

    /// Eigenvector `j` (zero-based) as `x,v` rows.
    pub fn write_eigenvector_csv<W: Write>(&self, j: usize, mut w: W) -> io::Result<()> {
        writeln!(w, "x,v")?;
        for (i, v) in self.eigenvectors[j].iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.grid.x(i), v)?;
        }
        Ok(())
    }
}

/// `k` lowest eigenpairs by Sturm bisection and inverse iteration.
pub fn eigensolve(op: &TridiagonalOperator, k: usize) -> Result<SpectralResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(DmiError::InvalidParameter(format!(
            "number of eigenpairs must lie in [1, {n}] (got {k})"
        )));
    }
    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for j in 0..k {
        let lambda = bisect_eigenvalue(op, j);
        let (v, r) = tridiag::inverse_iteration(op, lambda, &vectors, j)?;
        values.push(lambda);
        vectors.push(v);
        residuals.push(r);
    }
    Ok(SpectralResult {
        eigenvalues: values,
        eigenvectors: vectors.iter().map(|v| pad_dirichlet(v)).collect(),
        residuals,
        grid: op.grid,
    })
}

/// Sharp constrained and unconstrained Rayleigh-quotient minima of `L_γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivityConstants {
    /// `min (L v, v)/‖v‖²_{H¹}` over `v ⟂ sin θ*`.
    pub lambda_h1: f64,
    /// `min ‖L v‖²/‖v‖²_{H²}` over `v ⟂ sin θ*`.
    pub lambda_h2: f64,
    /// `min (L v, v)/‖v‖²_{H¹}` without constraint.
    pub lambda_h1_free: f64,
    /// `min ‖L v‖²/‖v‖²_{H²}` without constraint.
    pub lambda_h2_free: f64,
}

const BISECTION_TOL: f64 = 1e-12;

fn tridiag_banded(op: &TridiagonalOperator) -> SymBanded {
    let n = op.dim();
    let mut m = SymBanded::zeros(n, 1);
    for i in 0..n {
        m.band[i][0] = op.diag[i];
        if i + 1 < n {
            m.band[i][1] = op.offdiag[i];
        }
    }
    m
}

fn square(op: &TridiagonalOperator) -> SymBanded {
    let n = op.dim();
    let d = &op.diag;
    let e = &op.offdiag;
    let mut m = SymBanded::zeros(n, 2);
    for i in 0..n {
        let mut s = d[i] * d[i];
        if i > 0 {
            s += e[i - 1] * e[i - 1];
        }
        if i + 1 < n {
            s += e[i] * e[i];
            m.band[i][1] = e[i] * (d[i] + d[i + 1]);
        }
        if i + 2 < n {
            m.band[i][2] = e[i] * e[i + 1];
        }
        m.band[i][0] = s;
    }
    m
}

/// Dirichlet `-∂xx + 1` on the interior nodes.
fn h1_gram(grid: &Grid) -> TridiagonalOperator {
    TridiagonalOperator::schrodinger(grid, |_| 1.0)
}

/// Dirichlet `∂xxxx + 1` as the square of the three-point Laplacian plus one.
fn h2_gram(grid: &Grid) -> SymBanded {
    let lap = TridiagonalOperator::schrodinger(grid, |_| 0.0);
    let mut m = square(&lap);
    for row in m.band.iter_mut() {
        row[0] += 1.0;
    }
    m
}

/// Number of negative eigenvalues of the pencil `A - λB`, optionally
/// restricted to the `l²`-orthogonal complement of `s`.
fn pencil_negatives(a: &SymBanded, b: &SymBanded, lambda: f64, s: Option<&[f64]>) -> usize {
    let f = a.shifted(lambda, b).ldlt();
    let neg = f.negative_pivots();
    match s {
        None => neg,
        Some(s) => {
            let z = f.solve(s);
            let q: f64 = s.iter().zip(&z).map(|(x, y)| x * y).sum();
            (neg + usize::from(q > 0.0)).saturating_sub(1)
        }
    }
}

fn lowest_pencil_value(a: &SymBanded, b: &SymBanded, s: Option<&[f64]>, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    if pencil_negatives(a, b, lo, s) != 0 {
        return Err(DmiError::InvalidParameter(format!(
            "lower bracket {lo} does not bound the pencil spectrum"
        )));
    }
    let mut grow = 0;
    while pencil_negatives(a, b, hi, s) == 0 {
        hi = 2.0 * hi + 1.0;
        grow += 1;
        if grow > 60 {
            return Err(DmiError::InvalidParameter("pencil spectrum is unbounded".into()));
        }
    }
    while hi - lo > BISECTION_TOL * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if pencil_negatives(a, b, mid, s) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Kernel profile `sin θ* = sech(k x)` on the interior nodes.
pub fn kernel_profile(gamma: f64, grid: &Grid) -> Vec<f64> {
    let k = (1.0 - gamma * gamma).sqrt();
    (1..grid.len() - 1).map(|i| 1.0 / (k * grid.x(i)).cosh()).collect()
}

/// Sharp coercivity constants of `L_γ` on the truncated domain, found by
/// inertia bisection on the generalised pencils `L - λ(-∂xx + 1)` and
/// `L² - λ(∂xxxx + 1)`.
pub fn coercivity_constants(gamma: f64, grid: &Grid) -> Result<CoercivityConstants> {
    check_gamma(gamma)?;
    let op = build_l_gamma(gamma, grid)?;
    let s = kernel_profile(gamma, grid);
    let a1 = tridiag_banded(&op);
    let b1 = tridiag_banded(&h1_gram(grid));
    let a2 = square(&op);
    let b2 = h2_gram(grid);
    Ok(CoercivityConstants {
        lambda_h1: lowest_pencil_value(&a1, &b1, Some(&s), -1.0, 1.5)?,
        lambda_h2: lowest_pencil_value(&a2, &b2, Some(&s), -0.5, 3.0)?,
        lambda_h1_free: lowest_pencil_value(&a1, &b1, None, -1.0, 1.5)?,
        lambda_h2_free: lowest_pencil_value(&a2, &b2, None, -0.5, 3.0)?,
    })
}

/// `(L v, v)/‖v‖²_{H¹}` for an interior vector with the same discrete
/// norms as [`coercivity_constants`].
pub fn h1_rayleigh(op: &TridiagonalOperator, v: &[f64]) -> f64 {
    let b = h1_gram(&op.grid);
    op.quadratic_form(v) / b.quadratic_form(v)
}

/// `‖L v‖²/‖v‖²_{H²}` for an interior vector.
pub fn h2_rayleigh(op: &TridiagonalOperator, v: &[f64]) -> f64 {
    let lv = op.apply(v);
    let lap = TridiagonalOperator::schrodinger(&op.grid, |_| 0.0);
    let dv = lap.apply(v);
    (op.inner(&lv, &lv)) / (op.inner(&dv, &dv) + op.inner(v, v))
}
