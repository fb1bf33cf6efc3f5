use serde::Serialize;

use super::{FrameGrid, SurfaceGrid};
use crate::error::{PsError, Result};
use crate::loop_algebra::{basis_i, su2_coords, Vec3};

/// Sine of the angle between difference-quotient tangents below which
/// `[f_x, f_y]` counts as rank deficient, per unit `h²`.
pub const RANK_TOL_PER_H2: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub lambda: f64,
    pub nodes: usize,
    /// `max |K + 1|` over interior non-degenerate nodes.
    pub curvature_max_dev: Option<f64>,
    pub curvature_nodes: usize,
    /// `max |‖f_x‖ − λ a(x)|`.
    pub speed_x_max_dev: f64,
    /// `max |‖f_y‖ − b(y)/λ|`.
    pub speed_y_max_dev: f64,
    /// `max(|f_xx · n|, |f_yy · n|)` over interior nodes.
    pub asymptotic_max: f64,
    /// `max |φ_xy − a b sin φ|` over interior nodes.
    pub sine_gordon_max: f64,
    /// `max ‖f_x − U V′ U⁻¹‖` with `V′ = (i/2) a λ [[0, 1], [1, 0]]`.
    pub tangent_mismatch_max: f64,
    pub degenerate_nodes: usize,
    pub interior_degenerate_nodes: usize,
    pub all_degenerate: bool,
    /// Nodes where rank-deficiency of `[f_x, f_y]` disagrees with the degeneracy flag.
    pub rank_mismatch_nodes: usize,
}

/// First derivative along one lattice direction: central inside, one-sided second order at the ends.
fn d1(p: impl Fn(usize) -> Vec3, k: usize, n: usize, h: f64) -> Vec3 {
    if k == 0 {
        (p(0) * -3.0 + p(1) * 4.0 - p(2)) / (2.0 * h)
    } else if k == n - 1 {
        (p(n - 1) * 3.0 - p(n - 2) * 4.0 + p(n - 3)) / (2.0 * h)
    } else {
        (p(k + 1) - p(k - 1)) / (2.0 * h)
    }
}

/// Difference-quotient tangents `(f_x, f_y)` at every node.
pub fn tangents(s: &SurfaceGrid) -> Vec<(Vec3, Vec3)> {
    let g = &s.grid;
    (0..g.len())
        .map(|k| {
            let (i, j) = g.ij(k);
            let fx = d1(|ii| s.point(ii, j), i, g.nx, g.hx());
            let fy = d1(|jj| s.point(i, jj), j, g.ny, g.hy());
            (fx, fy)
        })
        .collect()
}

pub fn geometry_report(s: &SurfaceGrid, f: &FrameGrid) -> Result<GeometryReport> {
    let g = &s.grid;
    if g.nx < 3 || g.ny < 3 {
        return Err(PsError::domain("geometry needs at least 3 nodes per axis"));
    }
    let (hx, hy) = (g.hx(), g.hy());
    let lam = s.lambda;
    let tan = tangents(s);
    let rank_tol = (RANK_TOL_PER_H2 * hx.max(hy).powi(2)).max(super::EPS_DEG);

    let mut r = GeometryReport {
        lambda: lam,
        nodes: g.len(),
        curvature_max_dev: None,
        curvature_nodes: 0,
        speed_x_max_dev: 0.0,
        speed_y_max_dev: 0.0,
        asymptotic_max: 0.0,
        sine_gordon_max: 0.0,
        tangent_mismatch_max: 0.0,
        degenerate_nodes: s.degenerate_count(),
        interior_degenerate_nodes: 0,
        all_degenerate: s.all_degenerate(),
        rank_mismatch_nodes: 0,
    };
    for k in 0..g.len() {
        let (i, j) = g.ij(k);
        let (fx, fy) = tan[k];
        r.speed_x_max_dev = r.speed_x_max_dev.max((fx.norm() - lam * s.a[i]).abs());
        r.speed_y_max_dev = r.speed_y_max_dev.max((fy.norm() - s.b[j] / lam).abs());

        let m = f.u[k].eval_real(lam);
        let exact_fx = su2_coords(&(m * basis_i().scale_re(lam * f.a[i]) * m.adjugate()));
        r.tangent_mismatch_max = r.tangent_mismatch_max.max((fx - exact_fx).norm());

        let sin_angle = fx.cross(&fy).norm() / (fx.norm() * fy.norm()).max(f64::MIN_POSITIVE);
        if (sin_angle < rank_tol) != s.degenerate[k] {
            r.rank_mismatch_nodes += 1;
        }

        if !g.is_interior(i, j) {
            continue;
        }
        if s.degenerate[k] {
            r.interior_degenerate_nodes += 1;
        }
        let p = |a: usize, b: usize| s.point(a, b);
        let n = s.normals[k];
        let fxx = (p(i + 1, j) - p(i, j) * 2.0 + p(i - 1, j)) / (hx * hx);
        let fyy = (p(i, j + 1) - p(i, j) * 2.0 + p(i, j - 1)) / (hy * hy);
        let fxy = (p(i + 1, j + 1) - p(i + 1, j - 1) - p(i - 1, j + 1) + p(i - 1, j - 1)) / (4.0 * hx * hy);
        let (l2, m2, n2) = (fxx.dot(&n), fxy.dot(&n), fyy.dot(&n));
        r.asymptotic_max = r.asymptotic_max.max(l2.abs()).max(n2.abs());

        let ph = |a: usize, b: usize| s.phi[g.idx(a, b)];
        let phi_xy = (ph(i + 1, j + 1) - ph(i + 1, j - 1) - ph(i - 1, j + 1) + ph(i - 1, j - 1)) / (4.0 * hx * hy);
        r.sine_gordon_max = r.sine_gordon_max.max((phi_xy - s.a[i] * s.b[j] * ph(i, j).sin()).abs());

        if !s.degenerate[k] {
            let (e, ff, gg) = (fx.dot(&fx), fx.dot(&fy), fy.dot(&fy));
            let kk = (l2 * n2 - m2 * m2) / (e * gg - ff * ff);
            let dev = (kk + 1.0).abs();
            r.curvature_max_dev = Some(r.curvature_max_dev.map_or(dev, |d: f64| d.max(dev)));
            r.curvature_nodes += 1;
        }
    }
    Ok(r)
}
