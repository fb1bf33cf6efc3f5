//! Birkhoff splitting of twisted loops by finite sections.
//!
//! For a left splitting we look for the star-normalized factor
//! `X = I + Σ_{j=1..N} x_j λ^{σj}` such that `X·g` has no terms of degree
//! `σk`, `k = 1..N`. That is a block-Toeplitz system in the coefficients of
//! `g`, solved densely. Right splittings reduce to left ones by transposing.

use nalgebra::DMatrix;

use crate::error::{PsError, Result};
use crate::loop_algebra::{LaurentLoop, Mat2, C64};

/// Tuning for the finite-section solver.
#[derive(Debug, Clone, Copy)]
pub struct BirkhoffOptions {
    /// Initial truncation degree of the solved factor.
    pub trunc: usize,
    /// Truncation is doubled while the tail is too large, up to this degree.
    pub max_trunc: usize,
    /// Largest accepted norm of the two outermost solved coefficients.
    pub tail_tol: f64,
    /// Largest accepted multiply-back residual, relative to `max(1, max ‖g‖)` on the samples.
    pub residual_tol: f64,
    /// Residuals are sampled on the unit circle and at `1/radius`, `radius`.
    pub radius: f64,
}

impl Default for BirkhoffOptions {
    fn default() -> Self {
        BirkhoffOptions {
            trunc: 24,
            max_trunc: 96,
            tail_tol: 1e-8,
            residual_tol: 1e-8,
            radius: 2.0,
        }
    }
}

impl BirkhoffOptions {
    pub fn with_trunc(trunc: usize) -> Self {
        BirkhoffOptions {
            trunc,
            max_trunc: trunc.max(96),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    /// Factor holomorphic at λ = 0 (degrees ≥ 0).
    pub plus: LaurentLoop,
    /// Factor holomorphic at λ = ∞ (degrees ≤ 0).
    pub minus: LaurentLoop,
    /// Max of `‖g − product‖` over [`residual_points`].
    pub residual: f64,
    /// Norm of the two outermost coefficients of the solved factor.
    pub tail_norm: f64,
    /// Truncation degree that was finally used.
    pub trunc: usize,
}

/// 64 equispaced points on the unit circle plus `1/2` and `2`.
pub fn residual_points() -> Vec<C64> {
    residual_points_at(2.0)
}

/// 64 equispaced points on the unit circle plus `1/r` and `r`.
pub fn residual_points_at(r: f64) -> Vec<C64> {
    let mut pts: Vec<C64> = (0..64)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 64.0))
        .collect();
    pts.push(C64::new(1.0 / r, 0.0));
    pts.push(C64::new(r, 0.0));
    pts
}

/// `max_λ ‖g(λ) − lhs(λ)·rhs(λ)‖` over the residual points, plus `max ‖g(λ)‖`.
fn product_residual(g: &LaurentLoop, lhs: &LaurentLoop, rhs: &LaurentLoop, r: f64) -> (f64, f64) {
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for l in residual_points_at(r) {
        let gl = g.eval_nonzero(l);
        scale = scale.max(gl.norm());
        res = res.max((gl - lhs.eval_nonzero(l) * rhs.eval_nonzero(l)).norm());
    }
    (res, scale)
}

/// Coefficients `x_1..x_n` of the star-normalized left factor `X` with
/// `[X·g]_{σk} = 0` for `k = 1..n`.
fn solve_left(g: &LaurentLoop, sigma: i32, n: usize) -> Result<Vec<Mat2>> {
    // x·M = −b with M_{jk} = g_{σ(k−j)}; solved as Mᵀ xᵀ = −bᵀ
    let dim = 2 * n;
    let mut mt = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..n {
        for k in 0..n {
            let blk = g.coeff(sigma * (k as i32 - j as i32));
            for r in 0..2 {
                for s in 0..2 {
                    // M[2j + r, 2k + s] = blk[r][s]
                    mt[(2 * k + s, 2 * j + r)] = blk.m[r][s];
                }
            }
        }
    }
    let mut rhs = DMatrix::<C64>::zeros(dim, 2);
    for k in 0..n {
        let blk = g.coeff(sigma * (k as i32 + 1));
        for r in 0..2 {
            for s in 0..2 {
                // b[r, 2k + s]; column r of bᵀ
                rhs[(2 * k + s, r)] = -blk.m[r][s];
            }
        }
    }
    let lu = mt.lu();
    let sol = lu.solve(&rhs).ok_or(PsError::FactorizationFailure {
        residual: f64::INFINITY,
        tail: f64::INFINITY,
        node: None,
    })?;
    if sol.iter().any(|z| !z.is_finite()) {
        return Err(PsError::FactorizationFailure {
            residual: f64::INFINITY,
            tail: f64::INFINITY,
            node: None,
        });
    }
    Ok((0..n)
        .map(|j| {
            let mut x = Mat2::ZERO;
            for r in 0..2 {
                for s in 0..2 {
                    x.m[r][s] = sol[(2 * j + s, r)];
                }
            }
            x
        })
        .collect())
}

fn star_factor(xs: &[Mat2], sigma: i32) -> LaurentLoop {
    let mut coeffs = Vec::with_capacity(xs.len() + 1);
    coeffs.push(Mat2::IDENTITY);
    coeffs.extend_from_slice(xs);
    if sigma > 0 {
        LaurentLoop::from_coeffs(0, coeffs)
    } else {
        coeffs.reverse();
        LaurentLoop::from_coeffs(-(xs.len() as i32), coeffs)
    }
}

fn tail_of(xs: &[Mat2]) -> f64 {
    xs.iter().rev().take(2).map(Mat2::norm).sum()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    PlusStarMinus,
    MinusStarPlus,
    PlusMinusFree,
}

fn split_once(g: &LaurentLoop, kind: Kind, n: usize, r: f64) -> Result<SplitResult> {
    let (plus, minus, tail) = match kind {
        Kind::PlusStarMinus => {
            let xs = solve_left(g, 1, n)?;
            let x = star_factor(&xs, 1);
            let minus = x.multiply_window(g, g.dmin().min(0), 0);
            (x.adjugate(), minus, tail_of(&xs))
        }
        Kind::MinusStarPlus => {
            let xs = solve_left(g, -1, n)?;
            let x = star_factor(&xs, -1);
            let plus = x.multiply_window(g, 0, g.dmax().max(0));
            (plus, x.adjugate(), tail_of(&xs))
        }
        Kind::PlusMinusFree => {
            let gt = g.transpose();
            let xs = solve_left(&gt, -1, n)?;
            let t_minus = star_factor(&xs, -1).transpose();
            let plus = g.multiply_window(&t_minus, 0, g.dmax().max(0));
            (plus, t_minus, tail_of(&xs))
        }
    };
    let plus = plus.trim_with(0.0, 1e-300);
    let minus = minus.trim_with(0.0, 1e-300);
    let (residual, scale) = match kind {
        Kind::PlusStarMinus => product_residual(g, &plus, &minus, r),
        Kind::MinusStarPlus => product_residual(g, &minus, &plus, r),
        Kind::PlusMinusFree => {
            // g = plus · minus⁻¹, checked as g · minus = plus
            let mut res: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for l in residual_points_at(r) {
                let gl = g.eval_nonzero(l);
                scale = scale.max(gl.norm());
                res = res.max((gl * minus.eval_nonzero(l) - plus.eval_nonzero(l)).norm());
            }
            (res, scale)
        }
    };
    Ok(SplitResult {
        plus,
        minus,
        residual: residual / scale.max(1.0),
        tail_norm: tail,
        trunc: n,
    })
}

fn split_adaptive(g: &LaurentLoop, kind: Kind, opts: &BirkhoffOptions) -> Result<SplitResult> {
    if opts.trunc == 0 {
        return Err(PsError::domain("Birkhoff truncation must be positive"));
    }
    // the solved factor needs at least the degree extent of g itself
    let extent = g.dmax().max(-g.dmin()).max(0) as usize;
    let mut n = opts.trunc.max(extent);
    let max_n = opts.max_trunc.max(n);
    loop {
        let res = split_once(g, kind, n, opts.radius)?;
        let ok = res.tail_norm <= opts.tail_tol && res.residual <= opts.residual_tol;
        if ok || n >= max_n {
            if !ok {
                return Err(PsError::FactorizationFailure {
                    residual: res.residual,
                    tail: res.tail_norm,
                    node: None,
                });
            }
            return Ok(res);
        }
        n = (2 * n).min(max_n);
    }
}

/// `g = plus · minus` with `plus(0) = I`.
pub fn split_plus_star_minus(g: &LaurentLoop, opts: &BirkhoffOptions) -> Result<SplitResult> {
    split_adaptive(g, Kind::PlusStarMinus, opts)
}

/// `g = minus · plus` with `minus(∞) = I`.
pub fn split_minus_star_plus(g: &LaurentLoop, opts: &BirkhoffOptions) -> Result<SplitResult> {
    split_adaptive(g, Kind::MinusStarPlus, opts)
}

/// `g = plus · minus⁻¹` with `minus(∞) = I` and `plus` unnormalized.
///
/// `minus` is returned as the star-normalized factor itself, not its inverse.
pub fn split_plus_minusfree(g: &LaurentLoop, opts: &BirkhoffOptions) -> Result<SplitResult> {
    split_adaptive(g, Kind::PlusMinusFree, opts)
}
