//! Reference computations that avoid loop groups: a characteristic solver for
//! `φ_xy = a(x) b(y) sin φ` and least-squares rigid registration.

use nalgebra::{Matrix3, SVD};

use crate::error::{PsError, Result};
use crate::grid::GridSpec;
use crate::loop_algebra::{Mat3, Vec3};
use crate::potentials::ScalarFunction;

/// Fixed-point iterations allowed per cell.
pub const GOURSAT_MAX_ITER: usize = 20;
const GOURSAT_TOL: f64 = 1e-14;

/// Characteristic data: `φ` along the row and column through `base`.
#[derive(Debug, Clone)]
pub struct GoursatProblem {
    pub grid: GridSpec,
    /// Node through which both data lines pass.
    pub base: (usize, usize),
    /// `φ(x_i, y_base)` for every `i`.
    pub boundary_x: Vec<f64>,
    /// `φ(x_base, y_j)` for every `j`.
    pub boundary_y: Vec<f64>,
    pub a: ScalarFunction,
    pub b: ScalarFunction,
}

impl GoursatProblem {
    /// Data lines through the lower-left corner, unit speeds.
    pub fn corner(grid: GridSpec, boundary_x: Vec<f64>, boundary_y: Vec<f64>) -> Self {
        GoursatProblem {
            grid,
            base: (0, 0),
            boundary_x,
            boundary_y,
            a: ScalarFunction::constant(1.0),
            b: ScalarFunction::constant(1.0),
        }
    }
}

/// Marches `φ(i', j') = φ(i', j) + φ(i, j') − φ(i, j) + Δx Δy · a b ⟨sin φ⟩`
/// cell by cell outward from the data lines. The cell mean `⟨sin φ⟩` weights
/// the midpoint rule (φ the mean of the corners) by 2/3 and the trapezoidal
/// rule by 1/3; their leading quadrature errors cancel and the scheme stays
/// second order with a smaller constant. Each cell solves a scalar fixed-point
/// problem for its new corner.
pub fn goursat_solve(g: &GoursatProblem) -> Result<Vec<f64>> {
    let grid = &g.grid;
    grid.validate()?;
    let (i0, j0) = g.base;
    if g.boundary_x.len() != grid.nx || g.boundary_y.len() != grid.ny || i0 >= grid.nx || j0 >= grid.ny {
        return Err(PsError::domain("Goursat data does not match the lattice"));
    }
    let corner = (g.boundary_x[i0] - g.boundary_y[j0]).abs();
    if !(corner <= 1e-10) {
        return Err(PsError::domain(format!("Goursat data disagree at the corner by {corner:.3e}")));
    }
    let mut phi = vec![f64::NAN; grid.len()];
    for i in 0..grid.nx {
        phi[grid.idx(i, j0)] = g.boundary_x[i];
    }
    for j in 0..grid.ny {
        phi[grid.idx(i0, j)] = g.boundary_y[j];
    }
    let a: Vec<f64> = (0..grid.nx - 1).map(|i| g.a.eval(0.5 * (grid.x(i) + grid.x(i + 1)))).collect();
    let b: Vec<f64> = (0..grid.ny - 1).map(|j| g.b.eval(0.5 * (grid.y(j) + grid.y(j + 1)))).collect();

    let (right, left): (Vec<usize>, Vec<usize>) = ((i0 + 1..grid.nx).collect(), (0..i0).rev().collect());
    let (up, down): (Vec<usize>, Vec<usize>) = ((j0 + 1..grid.ny).collect(), (0..j0).rev().collect());
    for (js, dj) in [(&up, -1isize), (&down, 1)] {
        for &j in js.iter() {
            let jp = (j as isize + dj) as usize;
            for (is, di) in [(&right, -1isize), (&left, 1)] {
                for &i in is.iter() {
                    let ip = (i as isize + di) as usize;
                    let dx = grid.x(i) - grid.x(ip);
                    let dy = grid.y(j) - grid.y(jp);
                    let w = dx * dy * a[i.min(ip)] * b[j.min(jp)];
                    let (p10, p01, p00) = (phi[grid.idx(i, jp)], phi[grid.idx(ip, j)], phi[grid.idx(ip, jp)]);
                    let known = p10 + p01 - p00;
                    let fixed = p10.sin() + p01.sin() + p00.sin();
                    let source = |v: f64| {
                        let mid = (0.25 * (v + p10 + p01 + p00)).sin();
                        (2.0 * mid + 0.25 * (v.sin() + fixed)) / 3.0
                    };
                    let mut v = known + w * (0.5 * (p10 + p01)).sin();
                    let mut done = false;
                    for _ in 0..GOURSAT_MAX_ITER {
                        let next = known + w * source(v);
                        let step = (next - v).abs();
                        v = next;
                        if step <= GOURSAT_TOL * (1.0 + v.abs()) {
                            done = true;
                            break;
                        }
                    }
                    if !done || !v.is_finite() {
                        return Err(PsError::Stiffness { i, j });
                    }
                    phi[grid.idx(i, j)] = v;
                }
            }
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone)]
pub struct Registration {
    pub rotation: Mat3,
    pub translation: Vec3,
    /// Root mean square of `‖R a + t − b‖`.
    pub rms: f64,
}

impl Registration {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

fn centroid(p: &[Vec3]) -> Vec3 {
    p.iter().fold(Vec3::zeros(), |s, q| s + q) / p.len() as f64
}

/// Proper rigid motion minimizing `Σ ‖R aₖ + t − bₖ‖²`.
pub fn register_rigid(a: &[Vec3], b: &[Vec3]) -> Result<Registration> {
    if a.len() != b.len() {
        return Err(PsError::Registration(format!("point sets differ in size ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 3 || a.iter().chain(b).any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(PsError::Registration("need at least 3 finite points".into()));
    }
    let (ca, cb) = (centroid(a), centroid(b));
    let mut h = Matrix3::<f64>::zeros();
    let mut spread = Matrix3::<f64>::zeros();
    for (p, q) in a.iter().zip(b) {
        let (p, q) = (p - ca, q - cb);
        h += p * q.transpose();
        spread += p * p.transpose();
    }
    // collinear input leaves a rotation about the line undetermined
    let sv = spread.symmetric_eigenvalues();
    let mut ev = [sv[0], sv[1], sv[2]];
    ev.sort_by(|x, y| y.total_cmp(x));
    if !(ev[1] > 1e-20 * ev[0].max(1e-300)) {
        return Err(PsError::Registration("points are collinear or coincident".into()));
    }
    let svd = SVD::new(h, true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    let rotation = vt.transpose() * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    let translation = cb - rotation * ca;
    let ss: f64 = a.iter().zip(b).map(|(p, q)| (rotation * p + translation - q).norm_squared()).sum();
    Ok(Registration {
        rotation,
        translation,
        rms: (ss / a.len() as f64).sqrt(),
    })
}
