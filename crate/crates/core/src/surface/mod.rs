//! Extended frames on a lattice, the Sym formula and discrete geometry.

mod export;
mod geometry;
mod sym;

use rayon::prelude::*;

use crate::birkhoff::{split_plus_minusfree, BirkhoffOptions};
use crate::error::{PsError, Result};
use crate::frames::{drift_at, frames_at};
use crate::grid::GridSpec;
use crate::loop_algebra::{LaurentLoop, Mat2};
use crate::potentials::{PotentialKind, PotentialPair};

pub use export::{write_csv, write_obj, ObjOptions};
pub use geometry::{geometry_report, tangents, GeometryReport, RANK_TOL_PER_H2};
pub use sym::{associated_family, darboux_frame, sym_at, sym_immersion, SurfaceGrid, EPS_DEG};

/// Trimming applied to per-node products before splitting.
const PRODUCT_TRIM: f64 = 1e-18;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub birkhoff: BirkhoffOptions,
    /// Largest RK4 step along an axis; `None` uses 1/256 of the axis interval.
    pub max_step: Option<f64>,
    /// Where the axis frames take their initial values; `None` uses
    /// [`GridSpec::default_basepoint`] (the origin when it lies on the lattice).
    pub basepoint: Option<(f64, f64)>,
    pub init_x: LaurentLoop,
    pub init_y: LaurentLoop,
    /// Loops are monitored, trimmed and checked on `1/radius ≤ |λ| ≤ radius`.
    pub radius: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            birkhoff: BirkhoffOptions::default(),
            max_step: None,
            basepoint: None,
            init_x: LaurentLoop::identity(),
            init_y: LaurentLoop::identity(),
            radius: 2.0,
        }
    }
}

impl PipelineOptions {
    pub fn with_trunc(trunc: usize) -> Self {
        PipelineOptions {
            birkhoff: BirkhoffOptions::with_trunc(trunc),
            ..Default::default()
        }
    }

    /// Working annulus `1/radius ≤ |λ| ≤ radius`, also used by the splitting.
    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self.birkhoff.radius = radius;
        self
    }

    pub fn with_inits(mut self, init_x: LaurentLoop, init_y: LaurentLoop) -> Self {
        self.init_x = init_x;
        self.init_y = init_y;
        self
    }
}

/// Shift `v[k]` by multiples of `2π` so that neighbours in `order` differ by less than π.
fn unwrap_along(v: &mut [f64], order: &[usize]) {
    use std::f64::consts::{PI, TAU};
    for w in order.windows(2) {
        let (p, q) = (w[0], w[1]);
        let d = v[q] - v[p];
        v[q] -= TAU * ((d + PI) / TAU).floor();
    }
}

/// Indices of `t` ordered outward from the entry nearest to `base`: ascending
/// then descending, each starting at that entry.
fn outward_orders(t: &[f64], base: f64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let start = idx
        .iter()
        .enumerate()
        .min_by(|(_, &a), (_, &b)| (t[a] - base).abs().total_cmp(&(t[b] - base).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let up = idx[start..].to_vec();
    let down: Vec<usize> = idx[..=start].iter().rev().copied().collect();
    (up, down)
}

fn unwrap_1d(v: &mut [f64], t: &[f64], base: f64) {
    let (up, down) = outward_orders(t, base);
    unwrap_along(v, &up);
    unwrap_along(v, &down);
}

/// Extended frames on the tensor lattice `xs × ys` (arbitrary node lists).
#[derive(Debug, Clone)]
pub struct LatticeFrames {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `U` at `(xs[i], ys[j])`, flat index `j * xs.len() + i`.
    pub u: Vec<LaurentLoop>,
    /// Principal `ψ` from the λ⁰ part of the plus factor.
    pub psi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub a: Vec<f64>,
    pub beta: Vec<f64>,
    pub b: Vec<f64>,
    pub max_split_residual: f64,
    pub max_trunc: usize,
}

/// Runs the axis integrations and one Birkhoff splitting per node.
///
/// With `T(x) = diag(e^{−iα/2}, e^{iα/2})` read from the λ¹ coefficient of
/// `ηˣ`, each node splits `G_y⁻¹ G_x T = L₊ L₋⁻¹` with `L₋(∞) = I` and sets
/// `U = G_x T L₋`.
pub fn frames_on_lattice(
    p: &PotentialPair,
    xs: &[f64],
    ys: &[f64],
    opts: &PipelineOptions,
) -> Result<LatticeFrames> {
    if !(opts.radius >= 1.0 && opts.radius.is_finite()) || opts.birkhoff.radius != opts.radius {
        return Err(PsError::domain("working radius must be ≥ 1 and shared with the splitting options"));
    }
    let (dx, dy) = (p.domain_x(), p.domain_y());
    for (name, list, d) in [("x", xs, dx), ("y", ys, dy)] {
        if let Some(t) = list.iter().find(|t| !(**t >= d.0 - 1e-12 && **t <= d.1 + 1e-12)) {
            return Err(PsError::domain(format!("{name} = {t} lies outside the potential domain [{}, {}]", d.0, d.1)));
        }
    }
    let base = opts.basepoint.unwrap_or_else(|| {
        let pick = |(lo, hi): (f64, f64)| if lo <= 0.0 && 0.0 <= hi { 0.0 } else { lo };
        (pick(dx), pick(dy))
    });
    if p.kind == PotentialKind::Normalized && base != (0.0, 0.0) {
        return Err(PsError::domain("normalized potentials are based at the origin"));
    }
    let step_x = opts.max_step.unwrap_or((dx.1 - dx.0) / 256.0);
    let step_y = opts.max_step.unwrap_or((dy.1 - dy.0) / 256.0);

    let (gx, gy) = rayon::join(
        || frames_at(&p.eta_x, xs, base.0, &opts.init_x, step_x, opts.radius),
        || frames_at(&p.eta_y, ys, base.1, &opts.init_y, step_y, opts.radius),
    );
    let (gx, gy) = (gx?, gy?);

    let lead_x: Vec<(f64, f64)> = xs.iter().map(|&x| p.x_leading(x)).collect::<Result<_>>()?;
    let lead_y: Vec<(f64, f64)> = ys.iter().map(|&y| p.y_leading(y)).collect::<Result<_>>()?;
    let mut alpha: Vec<f64> = lead_x.iter().map(|l| l.0).collect();
    let mut beta: Vec<f64> = lead_y.iter().map(|l| l.0).collect();
    if p.boundary.is_none() {
        unwrap_1d(&mut alpha, xs, base.0);
        unwrap_1d(&mut beta, ys, base.1);
    }
    let a: Vec<f64> = lead_x.iter().map(|l| l.1).collect();
    let b: Vec<f64> = lead_y.iter().map(|l| l.1).collect();

    let left: Vec<LaurentLoop> = gx
        .iter()
        .zip(&alpha)
        .map(|(g, al)| g.right_mul(&Mat2::diag_phase(-0.5 * al)))
        .collect();
    let right_inv: Vec<LaurentLoop> = gy.iter().map(LaurentLoop::adjugate).collect();

    let nx = xs.len();
    let results: Vec<(LaurentLoop, f64, f64, usize)> = (0..nx * ys.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let g = right_inv[j].multiply(&left[i]).trim_radius(PRODUCT_TRIM, opts.radius);
            let s = split_plus_minusfree(&g, &opts.birkhoff).map_err(|e| e.at_node(xs[i], ys[j]))?;
            let u = left[i].multiply(&s.minus).trim_radius(PRODUCT_TRIM, opts.radius);
            let psi = s.plus.coeff(0).m[0][0].arg();
            Ok((u, psi, s.residual, s.trunc))
        })
        .collect::<Result<_>>()?;

    let mut out = LatticeFrames {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        u: Vec::with_capacity(results.len()),
        psi: Vec::with_capacity(results.len()),
        alpha,
        a,
        beta,
        b,
        max_split_residual: 0.0,
        max_trunc: 0,
    };
    for (u, psi, r, t) in results {
        out.u.push(u);
        out.psi.push(psi);
        out.max_split_residual = out.max_split_residual.max(r);
        out.max_trunc = out.max_trunc.max(t);
    }
    Ok(out)
}

/// Extended frame, angle and speeds on a uniform lattice.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub grid: GridSpec,
    pub kind: PotentialKind,
    pub u: Vec<LaurentLoop>,
    /// Continuous angle `φ = β − 2ψ`, unwrapped outward from the basepoint.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Boundary angle and speed per x-node.
    pub alpha: Vec<f64>,
    pub a: Vec<f64>,
    /// Boundary angle and speed per y-node.
    pub beta: Vec<f64>,
    pub b: Vec<f64>,
    /// Node nearest to the basepoint.
    pub basepoint: (usize, usize),
    pub max_split_residual: f64,
    pub max_trunc: usize,
    pub radius: f64,
}

impl FrameGrid {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &LaurentLoop {
        &self.u[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn phi_at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.idx(i, j)]
    }

    /// Largest twist or unitarity/determinant defect over all nodes.
    pub fn frame_defect(&self) -> f64 {
        self.u
            .par_iter()
            .map(|u| drift_at(u, self.radius).max(u.check_twist()))
            .reduce(|| 0.0, f64::max)
    }
}

/// Builds the extended frame on `grid` from a potential pair.
pub fn reconstruct_frames(p: &PotentialPair, grid: &GridSpec, opts: &PipelineOptions) -> Result<FrameGrid> {
    grid.validate()?;
    let (xs, ys) = (grid.xs(), grid.ys());
    let lf = frames_on_lattice(p, &xs, &ys, opts)?;
    let base = opts.basepoint.unwrap_or_else(|| grid.default_basepoint());
    let (i0, j0) = grid.nearest(base.0, base.1);

    let mut phi: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (_, j) = grid.ij(k);
            lf.beta[j] - 2.0 * lf.psi[k]
        })
        .collect();
    // basepoint column first, then each row from that column
    let (up, down) = outward_orders(&ys, ys[j0]);
    let col = |list: &[usize]| list.iter().map(|&j| grid.idx(i0, j)).collect::<Vec<_>>();
    unwrap_along(&mut phi, &col(&up));
    unwrap_along(&mut phi, &col(&down));
    let (right, left) = outward_orders(&xs, xs[i0]);
    for j in 0..grid.ny {
        let row = |list: &[usize]| list.iter().map(|&i| grid.idx(i, j)).collect::<Vec<_>>();
        unwrap_along(&mut phi, &row(&right));
        unwrap_along(&mut phi, &row(&left));
    }

    Ok(FrameGrid {
        grid: *grid,
        kind: p.kind,
        u: lf.u,
        phi,
        psi: lf.psi,
        alpha: lf.alpha,
        a: lf.a,
        beta: lf.beta,
        b: lf.b,
        basepoint: (i0, j0),
        max_split_residual: lf.max_split_residual,
        max_trunc: lf.max_trunc,
        radius: opts.radius,
    })
}
