use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

/// A general 3-vector; unit norm is enforced by the field containers, not here.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3(pub [f64; 3]);

pub const E1: Vec3 = Vec3([1.0, 0.0, 0.0]);
pub const E2: Vec3 = Vec3([0.0, 1.0, 0.0]);
pub const E3: Vec3 = Vec3([0.0, 0.0, 1.0]);
pub const ZERO: Vec3 = Vec3([0.0, 0.0, 0.0]);

impl Vec3 {
    #[inline]
    pub const fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Vec3([c1, c2, c3])
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    /// `e1 ∧ self`, written out to avoid the general cross product in hot loops.
    #[inline]
    pub fn e1_cross(self) -> Vec3 {
        Vec3([0.0, -self.0[2], self.0[1]])
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Squared norm of the transverse part `(c2, c3)`.
    #[inline]
    pub fn transverse_sq(self) -> f64 {
        self.0[1] * self.0[1] + self.0[2] * self.0[2]
    }

    /// Rotation `R_phi` about `e1`.
    #[inline]
    pub fn rotate_e1(self, phi: f64) -> Vec3 {
        let (s, c) = phi.sin_cos();
        Vec3([
            self.0[0],
            c * self.0[1] - s * self.0[2],
            s * self.0[1] + c * self.0[2],
        ])
    }

    #[inline]
    pub fn max_abs(self) -> f64 {
        self.0[0].abs().max(self.0[1].abs()).max(self.0[2].abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v.scale(self)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_of_basis() {
        assert_eq!(E1.cross(E2), E3);
        assert_eq!(E2.cross(E3), E1);
        let v = Vec3::new(0.3, -1.2, 2.5);
        assert_eq!(E1.cross(v), v.e1_cross());
    }

    #[test]
    fn rotation_quarter_turn() {
        let r = E2.rotate_e1(std::f64::consts::FRAC_PI_2);
        assert!((r - E3).max_abs() < 1e-16);
    }
}
