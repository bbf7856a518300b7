use super::operator::TridiagonalOperator;
use crate::error::{DmiError, Result};

/// Number of eigenvalues strictly below `x` (Sturm count from the pivots of
/// `T - x I`).
pub fn sturm_count(op: &TridiagonalOperator, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..op.dim() {
        let b2 = if i > 0 { op.offdiag[i - 1] * op.offdiag[i - 1] } else { 0.0 };
        d = op.diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
        if d == 0.0 {
            d = -f64::EPSILON * (op.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// `j`-th smallest eigenvalue (zero-based) by bisection on the Sturm count.
pub fn bisect_eigenvalue(op: &TridiagonalOperator, j: usize) -> f64 {
    let (mut lo, mut hi) = op.gershgorin();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    while hi - lo > 4.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(op, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - shift I) x = b` by Gaussian elimination with partial pivoting.
pub fn solve_shifted(op: &TridiagonalOperator, shift: f64, b: &[f64]) -> Vec<f64> {
    let n = op.dim();
    // rows of the upper factor: (diag, first, second superdiagonal)
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut rhs = b.to_vec();
    let mut cur = [op.diag[0] - shift, if n > 1 { op.offdiag[0] } else { 0.0 }, 0.0];
    let tiny = f64::EPSILON * op.gershgorin().1.abs().max(1.0);
    for i in 0..n {
        if i + 1 == n {
            u0[i] = if cur[0] == 0.0 { tiny } else { cur[0] };
            u1[i] = 0.0;
            u2[i] = 0.0;
            break;
        }
        let sub = op.offdiag[i];
        let next = [op.diag[i + 1] - shift, if i + 2 < n { op.offdiag[i + 1] } else { 0.0 }];
        if sub.abs() > cur[0].abs() {
            // swap rows i and i+1
            let (r0, r1, r2) = (sub, next[0], next[1]);
            let f = cur[0] / sub;
            u0[i] = r0;
            u1[i] = r1;
            u2[i] = r2;
            let t = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = t - f * rhs[i];
            cur = [cur[1] - f * r1, cur[2] - f * r2, 0.0];
        } else {
            let piv = if cur[0] == 0.0 { tiny } else { cur[0] };
            let f = sub / piv;
            u0[i] = piv;
            u1[i] = cur[1];
            u2[i] = cur[2];
            rhs[i + 1] -= f * rhs[i];
            cur = [next[0] - f * cur[1], next[1] - f * cur[2], 0.0];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / u0[i];
    }
    x
}

/// Eigenvector for an accurate eigenvalue `lambda` by inverse iteration,
/// orthogonalised against `previous`; `l²(dx)`-normalised with a positive
/// component sum (or positive first significant entry).
pub fn inverse_iteration(
    op: &TridiagonalOperator,
    lambda: f64,
    previous: &[Vec<f64>],
    index: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = op.dim();
    let scale = op.gershgorin().1.abs().max(1.0);
    let shift = lambda + 1e3 * f64::EPSILON * scale;
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_7 * (index as f64 + 1.0)).sin())
        .collect();
    normalise(op, &mut v);
    let target = 1e-8 * (1.0 + lambda.abs());
    let mut best = f64::INFINITY;
    for _ in 0..12 {
        let mut w = solve_shifted(op, shift, &v);
        for p in previous {
            let c = op.inner(&w, p);
            for (a, b) in w.iter_mut().zip(p) {
                *a -= c * b;
            }
        }
        if !w.iter().all(|x| x.is_finite()) {
            break;
        }
        normalise(op, &mut w);
        v = w;
        let r = residual(op, &v, lambda);
        best = best.min(r);
        if r <= 1e-3 * target {
            break;
        }
    }
    if !(best <= target) {
        return Err(DmiError::Stagnated { index });
    }
    fix_sign(&mut v);
    let r = residual(op, &v, lambda);
    Ok((v, r))
}

fn normalise(op: &TridiagonalOperator, v: &mut [f64]) {
    let n = op.inner(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

fn fix_sign(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let flip = if sum.abs() > 1e-8 * peak * v.len() as f64 {
        sum < 0.0
    } else {
        v.iter().find(|x| x.abs() > 1e-3 * peak).is_some_and(|x| *x < 0.0)
    };
    if flip {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// `‖T v - λ v‖` in `l²(dx)`.
pub fn residual(op: &TridiagonalOperator, v: &[f64], lambda: f64) -> f64 {
    let tv = op.apply(v);
    let r: Vec<f64> = tv.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
    op.inner(&r, &r).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn laplacian(n: usize) -> TridiagonalOperator {
        let g = Grid::new(1.0, n + 2).unwrap();
        TridiagonalOperator::schrodinger(&g, |_| 0.0)
    }

    #[test]
    fn discrete_dirichlet_laplacian_eigenvalues() {
        let op = laplacian(30);
        let h = op.grid.dx();
        for j in 0..30 {
            let exact = 4.0 / (h * h) * ((j as f64 + 1.0) * std::f64::consts::PI / (2.0 * 31.0)).sin().powi(2);
            let got = bisect_eigenvalue(&op, j);
            assert!((got - exact).abs() < 1e-11 * exact.max(1.0), "{j}: {got} {exact}");
            assert_eq!(sturm_count(&op, got - 1e-6), j);
        }
    }

    #[test]
    fn pivoted_solve_is_accurate() {
        let op = laplacian(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).cos()).collect();
        for shift in [0.0, 123.4, 1e4, 2.5e4] {
            let tx = op.apply(&x);
            let b: Vec<f64> = tx.iter().zip(&x).map(|(a, c)| a - shift * c).collect();
            let y = solve_shifted(&op, shift, &b);
            let err = y.iter().zip(&x).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{shift}: {err}");
        }
    }
}
