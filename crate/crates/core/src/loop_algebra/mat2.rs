//! Dense 2×2 complex matrices.
//!
//! Everything in the loop algebra is built out of these, so the type is
//! `Copy` and all arithmetic is written out by hand.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

pub type C64 = Complex64;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// 2×2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        m: [[C64::new(0.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]],
    };
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]],
    };

    #[inline]
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    #[inline]
    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, C64::new(0.0, 0.0), C64::new(0.0, 0.0), d)
    }

    #[inline]
    pub fn offdiag(b: C64, c: C64) -> Self {
        Mat2::new(C64::new(0.0, 0.0), b, c, C64::new(0.0, 0.0))
    }

    /// `diag(e^{iθ}, e^{-iθ})`
    pub fn diag_phase(theta: f64) -> Self {
        Mat2::diag(C64::from_polar(1.0, theta), C64::from_polar(1.0, -theta))
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Adjugate; equals the inverse whenever `det == 1`.
    #[inline]
    pub fn adjugate(&self) -> Self {
        Mat2::new(self.m[1][1], -self.m[0][1], -self.m[1][0], self.m[0][0])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        Some(self.adjugate().scale(d.inv()))
    }

    /// Conjugate transpose.
    #[inline]
    pub fn adjoint(&self) -> Self {
        Mat2::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    #[inline]
    pub fn scale(&self, s: C64) -> Self {
        Mat2::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    #[inline]
    pub fn scale_re(&self, s: f64) -> Self {
        Mat2::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    /// Frobenius norm.
    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    #[inline]
    pub fn norm_sqr(&self) -> f64 {
        self.m[0][0].norm_sqr() + self.m[0][1].norm_sqr() + self.m[1][0].norm_sqr() + self.m[1][1].norm_sqr()
    }

    pub fn diagonal_part(&self) -> Self {
        Mat2::diag(self.m[0][0], self.m[1][1])
    }

    pub fn offdiagonal_part(&self) -> Self {
        Mat2::offdiag(self.m[0][1], self.m[1][0])
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.is_finite())
    }

    /// `‖g†g − I‖`
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Mat2::IDENTITY).norm()
    }

    /// Distance from su(2): skew-Hermitian part defect plus trace.
    pub fn su2_defect(&self) -> f64 {
        (*self + self.adjoint()).norm() + self.trace().norm()
    }

    /// Commutator `[a, b] = ab − ba`.
    pub fn bracket(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{:.6e}, {:.6e}], [{:.6e}, {:.6e}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

impl SubAssign for Mat2 {
    #[inline]
    fn sub_assign(&mut self, o: Mat2) {
        *self = *self - o;
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    #[inline]
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl MulAssign for Mat2 {
    #[inline]
    fn mul_assign(&mut self, o: Mat2) {
        *self = *self * o;
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: f64) -> Mat2 {
        self.scale_re(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjugate_is_inverse_for_unit_det() {
        let g = Mat2::diag_phase(0.3) * Mat2::new(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0));
        assert!((g.det() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((g * g.adjugate() - Mat2::IDENTITY).norm() < 1e-15);
        assert!(g.unitarity_defect() < 1e-15);
    }

    #[test]
    fn singular_inverse_is_none() {
        let s = Mat2::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0));
        assert!(s.inverse().is_none());
    }
}
