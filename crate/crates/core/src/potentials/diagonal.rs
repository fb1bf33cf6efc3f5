//! Generalized potentials read off an extended frame along the diagonal `x = y`.

use super::{LoopTable, PotentialPair};
use crate::error::{PsError, Result};
use crate::loop_algebra::{LaurentLoop, Mat2};
use crate::surface::FrameGrid;

/// How the derivative along the diagonal is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalDerivative {
    /// `ηˣ = U⁻¹ ∂U/∂x` and `ηʸ = U⁻¹ ∂U/∂y` at `(t, t)`; degrees `[0, 1]` and `[−1, 0]`.
    Partial,
    /// `ηˣ = ηʸ = U(t,t)⁻¹ d/dt U(t,t)`, the Maurer–Cartan form of the restriction.
    Total,
}

#[derive(Debug, Clone)]
pub struct DiagonalPotentials {
    pub pair: PotentialPair,
    /// Largest coefficient norm dropped outside the kept degree window.
    pub discarded_norm: f64,
}

/// Fourth-order first-derivative weights on five consecutive samples,
/// evaluated at sample `m` of the stencil.
const FIVE_POINT: [[f64; 5]; 5] = [
    [-25.0, 48.0, -36.0, 16.0, -3.0],
    [-3.0, -10.0, 18.0, -6.0, 1.0],
    [1.0, -8.0, 0.0, 8.0, -1.0],
    [-1.0, 6.0, -18.0, 10.0, 3.0],
    [3.0, -16.0, 36.0, -48.0, 25.0],
];

/// `d/dt` of a uniformly sampled loop path at sample `k`.
fn derivative(samples: &[LaurentLoop], k: usize, h: f64) -> LaurentLoop {
    let n = samples.len();
    let start = k.saturating_sub(2).min(n - 5);
    let w = FIVE_POINT[k - start];
    let mut d = LaurentLoop::zero();
    for (s, wt) in w.iter().enumerate() {
        d = d.add_loop(&samples[start + s].scale_re(*wt / (12.0 * h)));
    }
    d
}

/// Nearest twisted loop whose coefficients are traceless skew-Hermitian,
/// i.e. su(2)-valued on real λ.
fn project(m: &LaurentLoop) -> LaurentLoop {
    m.twisted_part()
        .map(|c| {
            let s = (*c - c.adjoint()).scale_re(0.5);
            let half = s.trace().scale(0.5.into());
            s - Mat2::diag(half, half)
        })
        .trim_with(0.0, 0.0)
}

/// Maurer–Cartan forms of `U` along the diagonal of a square frame grid.
///
/// Derivatives use five-point stencils on the lattice; the resulting tables
/// are interpolated with four-point Lagrange stencils between nodes.
pub fn extract_diagonal_potentials(f: &FrameGrid, mode: DiagonalDerivative) -> Result<DiagonalPotentials> {
    let g = &f.grid;
    if !g.is_square() {
        return Err(PsError::domain("diagonal potentials need a square lattice on a square domain"));
    }
    let n = g.nx;
    if n < 5 {
        return Err(PsError::domain("diagonal potentials need at least 5 nodes per axis"));
    }
    let h = g.hx();
    let row = |j: usize| (0..n).map(|i| f.at(i, j).clone()).collect::<Vec<_>>();
    let col = |i: usize| (0..n).map(|j| f.at(i, j).clone()).collect::<Vec<_>>();
    let diag: Vec<LaurentLoop> = (0..n).map(|k| f.at(k, k).clone()).collect();

    let mut discarded: f64 = 0.0;
    let mut form = |u: &LaurentLoop, du: LaurentLoop, lo: i32, hi: i32| {
        let m = u.adjugate().multiply(&du);
        discarded = discarded.max(m.norm_outside(lo, hi));
        project(&m.truncate(lo, hi))
    };
    let (ex, ey): (Vec<LaurentLoop>, Vec<LaurentLoop>) = match mode {
        DiagonalDerivative::Total => {
            let e: Vec<LaurentLoop> = (0..n).map(|k| form(&diag[k], derivative(&diag, k, h), -1, 1)).collect();
            (e.clone(), e)
        }
        DiagonalDerivative::Partial => (0..n)
            .map(|k| {
                let ux = form(&diag[k], derivative(&row(k), k, h), 0, 1);
                let uy = form(&diag[k], derivative(&col(k), k, h), -1, 0);
                (ux, uy)
            })
            .unzip(),
    };
    let t0 = g.x(0);
    let pair = PotentialPair::generalized(
        LoopTable::new(t0, h, ex)?.into_axis(),
        LoopTable::new(t0, h, ey)?.into_axis(),
    );
    Ok(DiagonalPotentials {
        pair,
        discarded_norm: discarded,
    })
}
