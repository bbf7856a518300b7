/// Symmetric banded matrix stored by rows: `band[i][j] = M[i][i + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBanded {
    pub band: Vec<Vec<f64>>,
    pub width: usize,
}

/// Result of an unpivoted `L D Lᵀ` factorisation.
#[derive(Clone, Debug)]
pub struct Ldlt {
    /// Unit lower factor stored by rows: `l[i][j] = L[i + j + 1][i]`.
    l: Vec<Vec<f64>>,
    d: Vec<f64>,
    width: usize,
}

impl SymBanded {
    pub fn zeros(n: usize, width: usize) -> Self {
        SymBanded {
            band: vec![vec![0.0; width + 1]; n],
            width,
        }
    }

    pub fn dim(&self) -> usize {
        self.band.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        if b - a > self.width {
            0.0
        } else {
            self.band[a][b - a]
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] += self.band[i][0] * v[i];
            for j in 1..=self.width {
                if i + j < n {
                    let a = self.band[i][j];
                    out[i] += a * v[i + j];
                    out[i + j] += a * v[i];
                }
            }
        }
        out
    }

    /// `self - lambda * other`, both of the larger bandwidth.
    pub fn shifted(&self, lambda: f64, other: &SymBanded) -> SymBanded {
        let w = self.width.max(other.width);
        let n = self.dim();
        let mut out = SymBanded::zeros(n, w);
        for i in 0..n {
            for j in 0..=w {
                if i + j < n {
                    out.band[i][j] = self.get(i, i + j) - lambda * other.get(i, i + j);
                }
            }
        }
        out
    }

    /// Unpivoted `L D Lᵀ`; zero pivots are nudged to a tiny value of the
    /// scale of the matrix so that inertia counts stay defined.
    pub fn ldlt(&self) -> Ldlt {
        let n = self.dim();
        let w = self.width;
        let scale = self.band.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
        let mut l = vec![vec![0.0; w]; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let mut di = self.band[i][0];
            for k in 1..=w.min(i) {
                let lik = l[i - k][k - 1];
                di -= lik * lik * d[i - k];
            }
            if di == 0.0 {
                di = f64::EPSILON * scale;
            }
            d[i] = di;
            for j in 1..=w {
                if i + j >= n {
                    break;
                }
                let mut s = self.band[i][j];
                for k in 1..=w {
                    if k > i || j + k > w {
                        break;
                    }
                    s -= l[i - k][j + k - 1] * l[i - k][k - 1] * d[i - k];
                }
                l[i][j - 1] = s / di;
            }
        }
        Ldlt { l, d, width: w }
    }
}

impl Ldlt {
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|x| **x < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let w = self.width;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 1..=w.min(i) {
                y[i] -= self.l[i - k][k - 1] * y[i - k];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for j in 1..=w {
                if i + j < n {
                    y[i] -= self.l[i][j - 1] * y[i + j];
                }
            }
        }
        y
    }
}
