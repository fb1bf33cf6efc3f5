//! The identification of su(2) with R³ and the double cover SU(2) → SO(3).
//!
//! Basis:
//! `î ↔ ½[[0,i],[i,0]]`, `ĵ ↔ ½[[0,−1],[1,0]]`, `k̂ ↔ ½[[i,0],[0,−i]]`,
//! under which the cross product is the matrix commutator.

use nalgebra::{Matrix3, Vector3};

use super::mat2::{c, Mat2, C64};
use crate::error::{PsError, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Residual allowed when checking su(2) / SU(2) membership.
pub const SU2_TOL: f64 = 1e-8;

pub fn basis_i() -> Mat2 {
    Mat2::offdiag(c(0.0, 0.5), c(0.0, 0.5))
}

pub fn basis_j() -> Mat2 {
    Mat2::offdiag(c(-0.5, 0.0), c(0.5, 0.0))
}

pub fn basis_k() -> Mat2 {
    Mat2::diag(c(0.0, 0.5), c(0.0, -0.5))
}

pub fn r3_to_su2(v: &Vec3) -> Mat2 {
    Mat2::new(
        c(0.0, 0.5 * v.z),
        c(-0.5 * v.y, 0.5 * v.x),
        c(0.5 * v.y, 0.5 * v.x),
        c(0.0, -0.5 * v.z),
    )
}

/// Coordinates of the su(2) part of `m`, without membership checks.
#[inline]
pub fn su2_coords(m: &Mat2) -> Vec3 {
    let x = (m.m[0][1] + m.m[1][0]).im;
    let y = (m.m[1][0] - m.m[0][1]).re;
    let z = (m.m[0][0] - m.m[1][1]).im;
    Vec3::new(x, y, z)
}

/// Inverse of [`r3_to_su2`]; rejects matrices that are not traceless skew-Hermitian.
pub fn su2_to_r3(m: &Mat2) -> Result<Vec3> {
    let defect = m.su2_defect();
    let scale = m.norm().max(1.0);
    if !(defect <= SU2_TOL * scale) {
        return Err(PsError::domain(format!(
            "matrix is not in su(2) (defect {defect:.3e})"
        )));
    }
    Ok(su2_coords(m))
}

fn check_su2_group(g: &Mat2, tol: f64) -> Result<()> {
    let dev = g.unitarity_defect() + (g.det() - c(1.0, 0.0)).norm();
    if !(dev <= tol) {
        return Err(PsError::domain(format!("matrix is not in SU(2) (defect {dev:.3e})")));
    }
    Ok(())
}

/// `R` with `R v = g v g⁻¹` under the identification above.
pub fn adjoint_rotation(g: &Mat2) -> Result<Mat3> {
    check_su2_group(g, SU2_TOL)?;
    Ok(adjoint_rotation_unchecked(g))
}

/// Columns are `g î g†`, `g ĵ g†`, `g k̂ g†`.
pub fn adjoint_rotation_unchecked(g: &Mat2) -> Mat3 {
    let ga = g.adjoint();
    let e1 = su2_coords(&(*g * basis_i() * ga));
    let e2 = su2_coords(&(*g * basis_j() * ga));
    let e3 = su2_coords(&(*g * basis_k() * ga));
    Mat3::from_columns(&[e1, e2, e3])
}

/// One of the two SU(2) lifts of a rotation; `−lift` is the other.
pub fn su2_lift(r: &Mat3) -> Mat2 {
    // unit quaternion (w, v) of r, then g = w I + 2 r3_to_su2(v)
    let tr = r.trace();
    let (w, x, y, z);
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        w = 0.25 * s;
        x = (r[(2, 1)] - r[(1, 2)]) / s;
        y = (r[(0, 2)] - r[(2, 0)]) / s;
        z = (r[(1, 0)] - r[(0, 1)]) / s;
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        w = (r[(2, 1)] - r[(1, 2)]) / s;
        x = 0.25 * s;
        y = (r[(0, 1)] + r[(1, 0)]) / s;
        z = (r[(0, 2)] + r[(2, 0)]) / s;
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        w = (r[(0, 2)] - r[(2, 0)]) / s;
        x = (r[(0, 1)] + r[(1, 0)]) / s;
        y = 0.25 * s;
        z = (r[(1, 2)] + r[(2, 1)]) / s;
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        w = (r[(1, 0)] - r[(0, 1)]) / s;
        x = (r[(0, 2)] + r[(2, 0)]) / s;
        y = (r[(1, 2)] + r[(2, 1)]) / s;
        z = 0.25 * s;
    }
    let n = (w * w + x * x + y * y + z * z).sqrt();
    Mat2::IDENTITY.scale_re(w / n) + r3_to_su2(&Vec3::new(x, y, z)).scale_re(2.0 / n)
}

/// Rotation angle in `[0, π]` of an orthogonal matrix with det +1.
pub fn rotation_angle(r: &Mat3) -> f64 {
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

/// Unit rotation axis (arbitrary sign convention: right-handed with `rotation_angle`).
pub fn rotation_axis(r: &Mat3) -> Vec3 {
    let v = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if v.norm() > 1e-9 {
        return v.normalize();
    }
    // angle 0 or π: axis is the eigenvector of (r + I)
    let s = r + Mat3::identity();
    let cols = [s.column(0).into_owned(), s.column(1).into_owned(), s.column(2).into_owned()];
    let best = cols
        .iter()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap();
    if best.norm() < 1e-12 {
        Vec3::z()
    } else {
        best.normalize()
    }
}

/// `exp(θ · r3_to_su2(axis))` for a unit axis.
pub fn su2_rotation(axis: &Vec3, theta: f64) -> Mat2 {
    let n = axis.normalize();
    Mat2::IDENTITY.scale_re((theta / 2.0).cos()) + r3_to_su2(&n).scale_re(2.0 * (theta / 2.0).sin())
}

/// Complex scalar helper used across modules.
#[inline]
pub fn expi(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}
