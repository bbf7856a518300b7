use crate::vec3::{Vec3, E1};

/// Order of the centred finite-difference stencils used by the energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Stencil {
    Second,
    Fourth,
    #[default]
    Sixth,
}

const SECOND_A: [f64; 1] = [1.0];
const SECOND_B: [f64; 1] = [0.5];
const FOURTH_A: [f64; 2] = [4.0 / 3.0, -1.0 / 12.0];
const FOURTH_B: [f64; 2] = [2.0 / 3.0, -1.0 / 12.0];
const SIXTH_A: [f64; 3] = [1.5, -3.0 / 20.0, 1.0 / 90.0];
const SIXTH_B: [f64; 3] = [0.75, -3.0 / 20.0, 1.0 / 60.0];

impl Stencil {
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            2 => Some(Stencil::Second),
            4 => Some(Stencil::Fourth),
            6 => Some(Stencil::Sixth),
            _ => None,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 4,
            Stencil::Sixth => 6,
        }
    }

    #[inline]
    pub fn radius(self) -> usize {
        self.laplacian_weights().len()
    }

    /// Weights `a_r` of `Σ a_r (f_{i+r} - 2 f_i + f_{i-r}) / dx²`.
    #[inline]
    pub fn laplacian_weights(self) -> &'static [f64] {
        match self {
            Stencil::Second => &SECOND_A,
            Stencil::Fourth => &FOURTH_A,
            Stencil::Sixth => &SIXTH_A,
        }
    }

    /// Weights `b_r` of `Σ b_r (f_{i+r} - f_{i-r}) / dx`.
    #[inline]
    pub fn derivative_weights(self) -> &'static [f64] {
        match self {
            Stencil::Second => &SECOND_B,
            Stencil::Fourth => &FOURTH_B,
            Stencil::Sixth => &SIXTH_B,
        }
    }

    /// Largest eigenvalue of the discrete `-∂xx`, in units of `1/dx²`.
    pub fn laplacian_radius(self) -> f64 {
        // symbol Σ 2 a_r (1 - cos(rξ)) is maximal at ξ = π
        self.laplacian_weights()
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let r = (j + 1) as f64;
                2.0 * a * (1.0 - (r * std::f64::consts::PI).cos())
            })
            .sum()
    }
}

/// Ghost treatment at one end of the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ghost {
    /// Ghost nodes hold this constant (±e1).
    Clamp(Vec3),
    /// Even reflection about the boundary node.
    Mirror,
}

/// Distance from ±e1 under which a boundary value is treated as a wall tail.
pub const TAIL_TOLERANCE: f64 = 0.1;

impl Ghost {
    pub fn detect(boundary: Vec3) -> Ghost {
        let s = if boundary[0] >= 0.0 { 1.0 } else { -1.0 };
        let pole = E1.scale(s);
        if (boundary - pole).norm() <= TAIL_TOLERANCE {
            Ghost::Clamp(pole)
        } else {
            Ghost::Mirror
        }
    }
}

/// Copy of `values` extended by `r` ghost nodes on each side.
pub fn pad(values: &[Vec3], r: usize) -> Vec<Vec3> {
    let n = values.len();
    let left = Ghost::detect(values[0]);
    let right = Ghost::detect(values[n - 1]);
    let mut out = Vec::with_capacity(n + 2 * r);
    for j in (1..=r).rev() {
        out.push(match left {
            Ghost::Clamp(p) => p,
            Ghost::Mirror => values[j.min(n - 1)],
        });
    }
    out.extend_from_slice(values);
    for j in 1..=r {
        out.push(match right {
            Ghost::Clamp(p) => p,
            Ghost::Mirror => values[(n - 1).saturating_sub(j)],
        });
    }
    out
}

/// Calls `f(i, lap_i, d1_i)` with the discrete Laplacian and first
/// derivative at every physical node of a padded array.
#[inline]
pub fn for_each_derivative(padded: &[Vec3], r: usize, stencil: Stencil, dx: f64, f: impl FnMut(usize, Vec3, Vec3)) {
    debug_assert_eq!(r, stencil.radius());
    match stencil {
        Stencil::Second => sweep(padded, &SECOND_A, &SECOND_B, dx, f),
        Stencil::Fourth => sweep(padded, &FOURTH_A, &FOURTH_B, dx, f),
        Stencil::Sixth => sweep(padded, &SIXTH_A, &SIXTH_B, dx, f),
    }
}

#[inline(always)]
fn sweep<const R: usize>(padded: &[Vec3], a: &[f64; R], b: &[f64; R], dx: f64, mut f: impl FnMut(usize, Vec3, Vec3)) {
    let n = padded.len() - 2 * R;
    let idx2 = 1.0 / (dx * dx);
    let idx = 1.0 / dx;
    for i in 0..n {
        let c = i + R;
        let mi = padded[c].0;
        let mut l = [0.0; 3];
        let mut d = [0.0; 3];
        for j in 0..R {
            let p = padded[c + j + 1].0;
            let q = padded[c - j - 1].0;
            for k in 0..3 {
                l[k] += a[j] * (p[k] - 2.0 * mi[k] + q[k]);
                d[k] += b[j] * (p[k] - q[k]);
            }
        }
        f(
            i,
            Vec3([l[0] * idx2, l[1] * idx2, l[2] * idx2]),
            Vec3([d[0] * idx, d[1] * idx, d[2] * idx]),
        );
    }
}

/// Discrete Laplacian and first derivative of a padded array, evaluated at
/// the `n` physical nodes.
pub fn derivatives(padded: &[Vec3], r: usize, stencil: Stencil, dx: f64) -> (Vec<Vec3>, Vec<Vec3>) {
    let n = padded.len() - 2 * r;
    let mut lap = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    for_each_derivative(padded, r, stencil, dx, |_, l, d| {
        lap.push(l);
        d1.push(d);
    });
    (lap, d1)
}

/// Exchange density `Σ a_r ½(|m_{i+r}-m_i|² + |m_i-m_{i-r}|²)/dx²`, whose
/// sum has the discrete Laplacian as its exact variational derivative.
pub fn exchange_density(padded: &[Vec3], r: usize, stencil: Stencil, dx: f64) -> Vec<f64> {
    let n = padded.len() - 2 * r;
    let a = stencil.laplacian_weights();
    let idx2 = 1.0 / (dx * dx);
    (0..n)
        .map(|i| {
            let c = i + r;
            let mi = padded[c];
            let mut s = 0.0;
            for (j, &aj) in a.iter().enumerate() {
                let fwd = (padded[c + j + 1] - mi).norm_sq();
                let bwd = (mi - padded[c - j - 1]).norm_sq();
                s += aj * 0.5 * (fwd + bwd);
            }
            s * idx2
        })
        .collect()
}

/// Second-order central difference of a scalar sequence, with second-order
/// one-sided formulas at the two ends.
pub fn central_diff(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    out
}

/// Second-order second difference, with one-sided second-order formulas at the ends.
pub fn central_diff2(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        return out;
    }
    let h2 = dx * dx;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    }
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    out
}

/// Componentwise [`central_diff`] of a vector sequence.
pub fn central_diff_vec(f: &[Vec3], dx: f64) -> Vec<Vec3> {
    let comps: [Vec<f64>; 3] =
        std::array::from_fn(|k| central_diff(&f.iter().map(|v| v[k]).collect::<Vec<_>>(), dx));
    (0..f.len())
        .map(|i| Vec3::new(comps[0][i], comps[1][i], comps[2][i]))
        .collect()
}
