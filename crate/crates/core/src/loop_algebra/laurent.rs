//! Truncated matrix Laurent polynomials in the loop parameter λ.
//!
//! A [`LaurentLoop`] stores the coefficients `c_k` of `Σ c_k λ^k` for
//! `k ∈ [dmin, dmax]`. Products, inverses and the λ-derivative act on the
//! coefficient sequence directly, so `∂/∂ log λ` is exact.

use std::ops::{Add, Mul, Neg, Sub};

use super::mat2::{Mat2, C64};
use crate::error::{PsError, Result};

/// Relative threshold used by [`LaurentLoop::trim`].
pub const TRIM_REL: f64 = 1e-14;

/// Real sample points at which unitarity and `det = 1` are checked.
pub const REAL_CHECK_POINTS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Clone, PartialEq)]
pub struct LaurentLoop {
    dmin: i32,
    coeffs: Vec<Mat2>,
}

impl std::fmt::Debug for LaurentLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaurentLoop")
            .field("degrees", &self.degree_range())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl LaurentLoop {
    /// Build from the coefficient of `λ^dmin` upward. An empty vector is the zero loop.
    pub fn from_coeffs(dmin: i32, coeffs: Vec<Mat2>) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        LaurentLoop { dmin, coeffs }
    }

    pub fn zero() -> Self {
        LaurentLoop {
            dmin: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn identity() -> Self {
        Self::constant(Mat2::IDENTITY)
    }

    pub fn constant(m: Mat2) -> Self {
        LaurentLoop { dmin: 0, coeffs: vec![m] }
    }

    /// `m λ^k`
    pub fn monomial(k: i32, m: Mat2) -> Self {
        LaurentLoop { dmin: k, coeffs: vec![m] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest stored degree (0 for the zero loop).
    pub fn dmin(&self) -> i32 {
        self.dmin
    }

    /// Highest stored degree (`dmin − 1` for the zero loop).
    pub fn dmax(&self) -> i32 {
        self.dmin + self.coeffs.len() as i32 - 1
    }

    pub fn degree_range(&self) -> (i32, i32) {
        (self.dmin, self.dmax())
    }

    pub fn coeffs(&self) -> &[Mat2] {
        &self.coeffs
    }

    /// Coefficient of `λ^k`, zero outside the stored range.
    #[inline]
    pub fn coeff(&self, k: i32) -> Mat2 {
        let idx = k - self.dmin;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Mat2::ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &Mat2)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, m)| (self.dmin + i as i32, m))
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(Mat2::norm).fold(0.0, f64::max)
    }

    /// Sum of coefficient norms; bounds `‖g(λ)‖` on the unit circle.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(Mat2::norm).sum()
    }

    /// Drop leading and trailing coefficients below `TRIM_REL · max norm`.
    pub fn trim(&self) -> Self {
        self.trim_with(TRIM_REL, 0.0)
    }

    /// Drop leading/trailing coefficients whose norm is below
    /// `max(rel · max norm, abs)`.
    pub fn trim_with(&self, rel: f64, abs: f64) -> Self {
        let cut = (rel * self.max_coeff_norm()).max(abs);
        let keep = |m: &Mat2| m.norm() > cut;
        let first = self.coeffs.iter().position(keep);
        let last = self.coeffs.iter().rposition(keep);
        match (first, last) {
            (Some(a), Some(b)) => LaurentLoop {
                dmin: self.dmin + a as i32,
                coeffs: self.coeffs[a..=b].to_vec(),
            },
            _ => Self::zero(),
        }
    }

    /// Drop leading/trailing coefficients with `‖c_k‖ 2^{|k|} ≤ tol`, i.e.
    /// terms contributing at most `tol` anywhere on `1/2 ≤ |λ| ≤ 2`.
    pub fn trim_annulus(&self, tol: f64) -> Self {
        self.trim_radius(tol, 2.0)
    }

    /// As [`trim_annulus`](Self::trim_annulus) on `1/r ≤ |λ| ≤ r`.
    pub fn trim_radius(&self, tol: f64, r: f64) -> Self {
        let keep = |(k, m): (i32, &Mat2)| m.norm() * r.powi(k.abs()) > tol;
        let first = self.iter().position(keep);
        let last = self.iter().collect::<Vec<_>>().into_iter().rposition(keep);
        match (first, last) {
            (Some(a), Some(b)) => LaurentLoop {
                dmin: self.dmin + a as i32,
                coeffs: self.coeffs[a..=b].to_vec(),
            },
            _ => Self::zero(),
        }
    }

    /// Keep only degrees in `[lo, hi]`.
    pub fn truncate(&self, lo: i32, hi: i32) -> Self {
        if self.is_zero() || hi < lo {
            return Self::zero();
        }
        let a = lo.max(self.dmin);
        let b = hi.min(self.dmax());
        if b < a {
            return Self::zero();
        }
        LaurentLoop {
            dmin: a,
            coeffs: (a..=b).map(|k| self.coeff(k)).collect(),
        }
    }

    /// Norm of the part outside `[lo, hi]` (sum of coefficient norms).
    pub fn norm_outside(&self, lo: i32, hi: i32) -> f64 {
        self.iter()
            .filter(|(k, _)| *k < lo || *k > hi)
            .map(|(_, m)| m.norm())
            .sum()
    }

    /// Apply a map to every coefficient.
    pub fn map(&self, f: impl Fn(&Mat2) -> Mat2) -> Self {
        LaurentLoop {
            dmin: self.dmin,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|m| m.scale(s))
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|m| m.scale_re(s))
    }

    pub fn left_mul(&self, a: &Mat2) -> Self {
        self.map(|m| *a * *m)
    }

    pub fn right_mul(&self, a: &Mat2) -> Self {
        self.map(|m| *m * *a)
    }

    /// `λ^s · g`
    pub fn shift(&self, s: i32) -> Self {
        LaurentLoop {
            dmin: self.dmin + s,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        self.map(Mat2::transpose)
    }

    /// Cauchy product of coefficient sequences.
    pub fn multiply(&self, other: &LaurentLoop) -> LaurentLoop {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![Mat2::ZERO; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += *a * *b;
            }
        }
        LaurentLoop {
            dmin: self.dmin + other.dmin,
            coeffs: out,
        }
    }

    /// Product restricted to degrees `[lo, hi]`; avoids forming unused terms.
    pub fn multiply_window(&self, other: &LaurentLoop, lo: i32, hi: i32) -> LaurentLoop {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let lo = lo.max(self.dmin + other.dmin);
        let hi = hi.min(self.dmax() + other.dmax());
        if hi < lo {
            return Self::zero();
        }
        let coeffs = (lo..=hi)
            .map(|k| {
                let mut acc = Mat2::ZERO;
                let i_lo = self.dmin.max(k - other.dmax());
                let i_hi = self.dmax().min(k - other.dmin);
                for i in i_lo..=i_hi {
                    acc += self.coeff(i) * other.coeff(k - i);
                }
                acc
            })
            .collect();
        LaurentLoop { dmin: lo, coeffs }
    }

    pub fn add_loop(&self, other: &LaurentLoop) -> LaurentLoop {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lo = self.dmin.min(other.dmin);
        let hi = self.dmax().max(other.dmax());
        LaurentLoop {
            dmin: lo,
            coeffs: (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    /// `Σ c_k λ^k`. Fails for `λ = 0` when negative degrees are present.
    pub fn evaluate(&self, lambda: C64) -> Result<Mat2> {
        if lambda.norm() == 0.0 {
            if self.dmin < 0 && self.iter().any(|(k, m)| k < 0 && m.norm() > 0.0) {
                return Err(PsError::domain("evaluation at λ = 0 of a loop with negative powers"));
            }
            return Ok(self.coeff(0));
        }
        Ok(self.eval_nonzero(lambda))
    }

    /// Horner evaluation for `λ ≠ 0`.
    #[inline]
    pub fn eval_nonzero(&self, lambda: C64) -> Mat2 {
        if self.coeffs.is_empty() {
            return Mat2::ZERO;
        }
        let mut acc = Mat2::ZERO;
        for m in self.coeffs.iter().rev() {
            acc = acc.scale(lambda) + *m;
        }
        acc.scale(lambda.powi(self.dmin))
    }

    #[inline]
    pub fn eval_real(&self, lambda: f64) -> Mat2 {
        self.eval_nonzero(C64::new(lambda, 0.0))
    }

    /// `λ ∂/∂λ`: `c_k ↦ k c_k`.
    pub fn log_lambda_derivative(&self) -> LaurentLoop {
        LaurentLoop {
            dmin: self.dmin,
            coeffs: self.iter().map(|(k, m)| m.scale_re(k as f64)).collect(),
        }
    }

    /// `λ ↦ 1/λ`: `c_k ↦ c_{-k}`.
    pub fn reflect(&self) -> LaurentLoop {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        LaurentLoop {
            dmin: -self.dmax(),
            coeffs,
        }
    }

    /// Coefficient-wise adjugate; the pointwise inverse whenever `det g(λ) ≡ 1`.
    pub fn adjugate(&self) -> LaurentLoop {
        self.map(Mat2::adjugate)
    }

    /// Pointwise `det g(λ)` as a scalar Laurent polynomial (stored on the diagonal).
    pub fn det_loop(&self) -> Vec<(i32, C64)> {
        if self.is_zero() {
            return Vec::new();
        }
        let lo = 2 * self.dmin;
        let hi = 2 * self.dmax();
        (lo..=hi)
            .map(|k| {
                let mut acc = C64::new(0.0, 0.0);
                let i_lo = self.dmin.max(k - self.dmax());
                let i_hi = self.dmax().min(k - self.dmin);
                for i in i_lo..=i_hi {
                    let a = self.coeff(i);
                    let b = self.coeff(k - i);
                    acc += a.m[0][0] * b.m[1][1] - a.m[0][1] * b.m[1][0];
                }
                (k, acc)
            })
            .collect()
    }

    /// Inverse of a loop taking values in SU(2) on the real axis.
    ///
    /// Checks `|det g(λ) − 1| ≤ tol` at `λ ∈ {1/2, 1, 2}` and returns the
    /// adjugate loop, whose degree range is the reflected one.
    pub fn inverse_unitary(&self, tol: f64) -> Result<LaurentLoop> {
        for l in [0.5, 1.0, 2.0] {
            let d = self.eval_real(l).det();
            let dev = (d - C64::new(1.0, 0.0)).norm();
            if !(dev <= tol) {
                return Err(PsError::domain(format!(
                    "inverse_unitary: |det g({l}) − 1| = {dev:.3e} exceeds {tol:.1e}"
                )));
            }
        }
        Ok(self.adjugate())
    }

    /// Largest violation of the twist condition: off-diagonal entries of even
    /// coefficients and diagonal entries of odd ones.
    pub fn check_twist(&self) -> f64 {
        self.iter()
            .map(|(k, m)| {
                if k.rem_euclid(2) == 0 {
                    m.offdiagonal_part().norm()
                } else {
                    m.diagonal_part().norm()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Project onto the twisted subspace.
    pub fn twisted_part(&self) -> LaurentLoop {
        LaurentLoop {
            dmin: self.dmin,
            coeffs: self
                .iter()
                .map(|(k, m)| {
                    if k.rem_euclid(2) == 0 {
                        m.diagonal_part()
                    } else {
                        m.offdiagonal_part()
                    }
                })
                .collect(),
        }
    }

    /// Max over `points` of `‖g†g − I‖ + |det g − 1|`.
    pub fn unitarity_defect_at(&self, points: &[f64]) -> f64 {
        points
            .iter()
            .map(|&l| {
                let g = self.eval_real(l);
                g.unitarity_defect() + (g.det() - C64::new(1.0, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Unitarity defect at the default real check points.
    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect_at(&REAL_CHECK_POINTS)
    }

    /// Max over `points` of the distance of `g(λ)` from su(2).
    pub fn su2_defect_at(&self, points: &[f64]) -> f64 {
        points.iter().map(|&l| self.eval_real(l).su2_defect()).fold(0.0, f64::max)
    }

    /// Max coefficient-wise distance.
    pub fn distance(&self, other: &LaurentLoop) -> f64 {
        let lo = self.dmin.min(other.dmin);
        let hi = self.dmax().max(other.dmax());
        (lo..=hi).map(|k| (self.coeff(k) - other.coeff(k)).norm()).fold(0.0, f64::max)
    }

    /// `Σ ‖c_k‖ 2^{|k|}`; bounds `‖g(λ)‖` on the annulus `1/2 ≤ |λ| ≤ 2`.
    pub fn annulus_norm(&self) -> f64 {
        self.radius_norm(2.0)
    }

    /// `Σ ‖c_k‖ r^{|k|}`.
    pub fn radius_norm(&self, r: f64) -> f64 {
        self.iter().map(|(k, m)| m.norm() * r.powi(k.abs())).sum()
    }

    /// Exponential of a loop by its Taylor series, truncated to degrees
    /// `[lo, hi]`. Summation stops once a term is below `1e-17` in
    /// [`annulus_norm`](Self::annulus_norm).
    pub fn exp(&self, lo: i32, hi: i32) -> LaurentLoop {
        let mut sum = LaurentLoop::identity();
        let mut term = LaurentLoop::identity();
        for n in 1..2000 {
            term = term.multiply_window(self, lo, hi).scale_re(1.0 / n as f64);
            sum = sum.add_loop(&term);
            if term.annulus_norm() <= 1e-17 {
                break;
            }
        }
        sum.truncate(lo, hi)
    }
}

impl Add for &LaurentLoop {
    type Output = LaurentLoop;
    fn add(self, o: &LaurentLoop) -> LaurentLoop {
        self.add_loop(o)
    }
}

impl Sub for &LaurentLoop {
    type Output = LaurentLoop;
    fn sub(self, o: &LaurentLoop) -> LaurentLoop {
        self.add_loop(&o.scale_re(-1.0))
    }
}

impl Neg for &LaurentLoop {
    type Output = LaurentLoop;
    fn neg(self) -> LaurentLoop {
        self.scale_re(-1.0)
    }
}

impl Mul for &LaurentLoop {
    type Output = LaurentLoop;
    fn mul(self, o: &LaurentLoop) -> LaurentLoop {
        self.multiply(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_algebra::mat2::c;

    fn e_off() -> Mat2 {
        Mat2::offdiag(c(0.0, 0.5), c(0.0, 0.5))
    }

    #[test]
    fn identity_is_neutral() {
        let g = LaurentLoop::from_coeffs(-1, vec![e_off(), Mat2::diag_phase(0.2), e_off().scale_re(2.0)]);
        assert_eq!(LaurentLoop::identity().multiply(&g), g);
        assert_eq!(g.multiply(&LaurentLoop::identity()), g);
    }

    #[test]
    fn single_term_product() {
        let a = LaurentLoop::monomial(1, e_off());
        let p = a.multiply(&a);
        assert_eq!(p.degree_range(), (2, 2));
        assert!((p.coeff(2) - e_off() * e_off()).norm() < 1e-16);
    }

    #[test]
    fn evaluate_examples() {
        let c0 = Mat2::new(c(1.0, 2.0), c(3.0, 0.0), c(0.0, -1.0), c(4.0, 4.0));
        assert_eq!(LaurentLoop::constant(c0).eval_real(7.0), c0);
        let a = LaurentLoop::monomial(1, c0);
        assert!((a.eval_real(2.0) - c0.scale_re(2.0)).norm() < 1e-15);
        let gauge = LaurentLoop::constant(Mat2::diag_phase(std::f64::consts::FRAC_PI_3));
        for l in [0.3, 1.0, 5.0] {
            assert!((gauge.eval_real(l) - Mat2::diag_phase(std::f64::consts::FRAC_PI_3)).norm() < 1e-16);
        }
    }

    #[test]
    fn evaluate_at_zero() {
        let g = LaurentLoop::from_coeffs(-1, vec![e_off(), Mat2::IDENTITY]);
        assert!(g.evaluate(c(0.0, 0.0)).is_err());
        let h = LaurentLoop::from_coeffs(0, vec![Mat2::IDENTITY, e_off()]);
        assert_eq!(h.evaluate(c(0.0, 0.0)).unwrap(), Mat2::IDENTITY);
    }

    #[test]
    fn twist_examples() {
        assert_eq!(LaurentLoop::monomial(1, e_off()).check_twist(), 0.0);
        let bad = LaurentLoop::constant(Mat2::offdiag(c(1.0, 0.0), c(-1.0, 0.0)));
        assert!(bad.check_twist() > 0.0);
    }

    #[test]
    fn log_derivative_examples() {
        assert!(LaurentLoop::constant(e_off()).log_lambda_derivative().max_coeff_norm() == 0.0);
        let a = Mat2::diag(c(1.0, 0.0), c(2.0, 0.0));
        let b = Mat2::offdiag(c(0.0, 1.0), c(3.0, 0.0));
        let g = LaurentLoop::from_coeffs(-1, vec![b, Mat2::ZERO, a]);
        let d = g.log_lambda_derivative();
        assert_eq!(d.coeff(1), a);
        assert_eq!(d.coeff(-1), -b);
    }

    #[test]
    fn inverse_of_diagonal_constant() {
        let g = LaurentLoop::constant(Mat2::diag_phase(0.7));
        let h = g.inverse_unitary(1e-10).unwrap();
        assert!((h.coeff(0) - Mat2::diag_phase(-0.7)).norm() < 1e-15);
        assert_eq!(LaurentLoop::identity().inverse_unitary(1e-10).unwrap(), LaurentLoop::identity());
    }

    #[test]
    fn inverse_rejects_bad_det() {
        let g = LaurentLoop::constant(Mat2::IDENTITY.scale_re(2.0));
        assert!(g.inverse_unitary(1e-10).is_err());
    }

    #[test]
    fn reflect_negates_indices() {
        let g = LaurentLoop::from_coeffs(-1, vec![e_off(), Mat2::IDENTITY, e_off().scale_re(3.0), Mat2::IDENTITY]);
        let r = g.reflect();
        assert_eq!(r.degree_range(), (-2, 1));
        for k in -3..4 {
            assert_eq!(r.coeff(k), g.coeff(-k));
        }
        assert_eq!(r.reflect(), g);
    }

    #[test]
    fn trim_drops_small_ends() {
        let tiny = Mat2::IDENTITY.scale_re(1e-20);
        let g = LaurentLoop::from_coeffs(-2, vec![tiny, e_off(), Mat2::IDENTITY, tiny]);
        assert_eq!(g.trim().degree_range(), (-1, 0));
    }
}
