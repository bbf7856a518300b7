use crate::error::{DmiError, Result};

/// Smallest grid accepted; coarser grids cannot resolve a wall.
pub const MIN_POINTS: usize = 16;

/// Uniform grid `x_i = -L + i * spacing` on `[-L, L]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    half_length: f64,
    n_points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !half_length.is_finite() || half_length <= 0.0 {
            return Err(DmiError::InvalidGrid(format!(
                "half_length must be finite and positive (got {half_length})"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(DmiError::InvalidGrid(format!(
                "n_points must be >= {MIN_POINTS} (got {n_points})"
            )));
        }
        let spacing = 2.0 * half_length / (n_points - 1) as f64;
        Ok(Grid {
            half_length,
            n_points,
            spacing,
        })
    }

    /// Grid on `[-L, L]` whose spacing is as close as possible to `dx`.
    pub fn with_spacing(half_length: f64, dx: f64) -> Result<Self> {
        if !dx.is_finite() || dx <= 0.0 {
            return Err(DmiError::InvalidGrid(format!("dx must be positive (got {dx})")));
        }
        let n = (2.0 * half_length / dx).round();
        if !n.is_finite() || n < 1.0 {
            return Err(DmiError::InvalidGrid(format!(
                "half_length {half_length} and dx {dx} give no points"
            )));
        }
        Self::new(half_length, n as usize + 1)
    }

    #[inline]
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.x(i))
    }

    /// Trapezoid weight of node `i` (spacing included).
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n_points {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    /// Trapezoid rule with compensated summation.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        let mut acc = NeumaierSum::default();
        for (i, v) in values.iter().enumerate() {
            acc.add(self.weight(i) * v);
        }
        acc.value()
    }

    /// Trapezoid rule of `f(i)`, evaluated lazily.
    pub fn integrate_with(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let mut acc = NeumaierSum::default();
        for i in 0..self.n_points {
            acc.add(self.weight(i) * f(i));
        }
        acc.value()
    }

    /// If `y` is an integer multiple of the spacing (to 1e-9 relative),
    /// returns that multiple.
    pub fn grid_shift(&self, y: f64) -> Option<isize> {
        let k = (y / self.spacing).round();
        if (y - k * self.spacing).abs() <= 1e-9 * self.spacing.max(y.abs()) {
            Some(k as isize)
        } else {
            None
        }
    }
}

/// Neumaier's compensated summation; energies are differenced in time, so
/// their rounding noise matters.
#[derive(Default, Clone, Copy, Debug)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
