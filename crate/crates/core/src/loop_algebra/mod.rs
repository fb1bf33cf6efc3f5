//! Twisted 2×2 matrix loops and the su(2) ↔ R³ identification.

mod laurent;
mod mat2;
mod su2;

pub use laurent::{LaurentLoop, REAL_CHECK_POINTS, TRIM_REL};
pub use mat2::{c, Mat2, C64};
pub use su2::{
    adjoint_rotation, adjoint_rotation_unchecked, basis_i, basis_j, basis_k, expi, r3_to_su2, rotation_angle,
    rotation_axis, su2_coords, su2_lift, su2_rotation, su2_to_r3, Mat3, Vec3, SU2_TOL,
};

/// Default tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-10;

/// Random loops for tests and the acceptance suite.
pub mod random {
    use super::*;
    use rand::Rng;

    /// A twisted su(2)-valued (on real λ) generator with degrees in `[lo, hi]`
    /// and coefficient norms at most `max_norm`.
    pub fn twisted_generator<R: Rng>(rng: &mut R, lo: i32, hi: i32, max_norm: f64) -> LaurentLoop {
        let coeffs = (lo..=hi)
            .map(|k| {
                let r = max_norm * rng.random_range(0.0..1.0);
                if k.rem_euclid(2) == 0 {
                    let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    Mat2::diag(c(0.0, s * r / 2f64.sqrt()), c(0.0, -s * r / 2f64.sqrt()))
                } else {
                    let th = rng.random_range(0.0..std::f64::consts::TAU);
                    let z = C64::from_polar(r / 2f64.sqrt(), th);
                    Mat2::offdiag(z, -z.conj())
                }
            })
            .collect();
        LaurentLoop::from_coeffs(lo, coeffs)
    }

    /// `exp(X)` for a random twisted generator `X`; unitary on real λ up to
    /// series truncation at degree `±cap`.
    pub fn twisted_unitary<R: Rng>(rng: &mut R, lo: i32, hi: i32, max_norm: f64, cap: i32) -> LaurentLoop {
        let x = twisted_generator(rng, lo, hi, max_norm);
        x.exp(-cap, cap).trim_annulus(1e-18)
    }
}
