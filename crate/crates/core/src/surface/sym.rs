use rayon::prelude::*;

use super::FrameGrid;
use crate::error::{PsError, Result};
use crate::grid::GridSpec;
use crate::loop_algebra::{adjoint_rotation_unchecked, basis_k, su2_coords, LaurentLoop, Mat3, Vec3};

/// Nodes with `|sin φ|` below this are flagged as non-immersed.
pub const EPS_DEG: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    pub grid: GridSpec,
    pub lambda: f64,
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub phi: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Speeds of the underlying net per x-node and y-node.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SurfaceGrid {
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Vec3 {
        self.points[self.grid.idx(i, j)]
    }

    pub fn all_degenerate(&self) -> bool {
        self.degenerate.iter().all(|d| *d)
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|d| **d).count()
    }
}

/// `f = (λ ∂U/∂λ) U⁻¹` at real `λ`, as a vector in R³.
pub fn sym_at(u: &LaurentLoop, lambda: f64) -> Vec3 {
    let du = u.log_lambda_derivative().eval_real(lambda);
    let inv = u.eval_real(lambda).adjugate();
    su2_coords(&(du * inv))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PsError::domain(format!("associated-family parameter must be positive, got {lambda}")));
    }
    Ok(())
}

/// Sym formula at every node; normals are `U k̂ U⁻¹`.
pub fn sym_immersion(f: &FrameGrid, lambda: f64) -> Result<SurfaceGrid> {
    check_lambda(lambda)?;
    let pn: Vec<(Vec3, Vec3)> = f
        .u
        .par_iter()
        .map(|u| {
            let m = u.eval_real(lambda);
            let n = su2_coords(&(m * basis_k() * m.adjugate()));
            (sym_at(u, lambda), n)
        })
        .collect();
    let (points, normals) = pn.into_iter().unzip();
    Ok(SurfaceGrid {
        grid: f.grid,
        lambda,
        points,
        normals,
        phi: f.phi.clone(),
        degenerate: f.phi.iter().map(|p| p.sin().abs() < EPS_DEG).collect(),
        a: f.a.clone(),
        b: f.b.clone(),
    })
}

pub fn associated_family(f: &FrameGrid, lambdas: &[f64]) -> Result<Vec<SurfaceGrid>> {
    lambdas.iter().map(|&l| sym_immersion(f, l)).collect()
}

/// `Ad(U) · R_z(φ/2)` per node; `None` at degenerate nodes.
///
/// The first two columns point along `f_x + f_y` and `f_y − f_x` (up to sign).
pub fn darboux_frame(f: &FrameGrid, lambda: f64) -> Result<Vec<Option<Mat3>>> {
    check_lambda(lambda)?;
    Ok(f.u
        .par_iter()
        .zip(&f.phi)
        .map(|(u, &phi)| {
            if phi.sin().abs() < EPS_DEG {
                return None;
            }
            let r = adjoint_rotation_unchecked(&u.eval_real(lambda));
            let (c, s) = ((0.5 * phi).cos(), (0.5 * phi).sin());
            let rz = Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
            Some(r * rz)
        })
        .collect())
}
