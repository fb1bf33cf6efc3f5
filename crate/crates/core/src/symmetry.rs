//! Surface symmetries `f∘γ = R f`: the frame relation `F∘γ = R′ F K`, the
//! monodromy `χ(λ)` in `U∘γ = χ U K`, and end-to-end certification from
//! equivariant potentials.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PsError, Result};
use crate::grid::GridSpec;
use crate::loop_algebra::{
    adjoint_rotation_unchecked, expi, rotation_angle, su2_lift, LaurentLoop, Mat2, Mat3, Vec3, C64,
};
use crate::oracle::{register_rigid, Registration};
use crate::potentials::{check_equivariance, lagrange4, AxisSymmetry, EquivarianceResidual, GaugeLoop, PotentialPair, ScalarFunction};
use crate::surface::{
    frames_on_lattice, reconstruct_frames, sym_at, sym_immersion, FrameGrid, PipelineOptions, SurfaceGrid, EPS_DEG,
};

/// Orthogonality tolerance for the linear part of a rigid motion.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Stage thresholds and the surface interpolation used by [`certify_from_potentials`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertifyThresholds {
    pub equivariance: f64,
    pub monodromy_spread: f64,
    pub surface_residual: f64,
    pub interpolation: Interpolation,
}

impl Default for CertifyThresholds {
    fn default() -> Self {
        CertifyThresholds {
            equivariance: 1e-6,
            monodromy_spread: 1e-4,
            surface_residual: 1e-3,
            interpolation: Interpolation::Bilinear,
        }
    }
}

/// A candidate symmetry: domain map, rigid motion and potential gauges.
///
/// Without axis switching `γ(x, y) = (γ₁(x), γ₂(y))`; with it `γ(x, y) = (γ₁(y), γ₂(x))`.
#[derive(Debug, Clone)]
pub struct SymmetryDescriptor {
    pub gamma1: ScalarFunction,
    pub gamma2: ScalarFunction,
    pub switches_axes: bool,
    /// Linear part `R′` of the motion.
    pub rotation: Mat3,
    pub translation: Vec3,
    /// Monodromy, once measured.
    pub chi: Option<LaurentLoop>,
    pub wx: GaugeLoop,
    pub wy: GaugeLoop,
}

impl SymmetryDescriptor {
    pub fn identity() -> Self {
        SymmetryDescriptor {
            gamma1: ScalarFunction::identity(),
            gamma2: ScalarFunction::identity(),
            switches_axes: false,
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
            chi: None,
            wx: GaugeLoop::identity(),
            wy: GaugeLoop::identity(),
        }
    }

    /// Axis maps and gauges from a potential-level symmetry; the motion starts as the identity.
    pub fn from_axis_symmetry(s: &AxisSymmetry) -> Self {
        SymmetryDescriptor {
            gamma1: s.gamma1.clone(),
            gamma2: s.gamma2.clone(),
            wx: s.wx.clone(),
            wy: s.wy.clone(),
            ..Self::identity()
        }
    }

    /// Coordinate swap `(x, y) ↦ (y, x)`.
    pub fn axis_swap() -> Self {
        SymmetryDescriptor {
            switches_axes: true,
            ..Self::identity()
        }
    }

    pub fn with_motion(mut self, rotation: Mat3, translation: Vec3) -> Self {
        self.rotation = rotation;
        self.translation = translation;
        self
    }

    pub fn with_registration(self, r: &Registration) -> Self {
        self.with_motion(r.rotation, r.translation)
    }

    pub fn image(&self, x: f64, y: f64) -> (f64, f64) {
        if self.switches_axes {
            (self.gamma1.eval(y), self.gamma2.eval(x))
        } else {
            (self.gamma1.eval(x), self.gamma2.eval(y))
        }
    }

    /// Jacobian of `γ` at `(x, y)`.
    pub fn jacobian(&self, x: f64, y: f64) -> Matrix2<f64> {
        if self.switches_axes {
            Matrix2::new(0.0, self.gamma1.derivative(y), self.gamma2.derivative(x), 0.0)
        } else {
            Matrix2::new(self.gamma1.derivative(x), 0.0, 0.0, self.gamma2.derivative(y))
        }
    }

    /// Orthogonality of `R′` to [`ORTHOGONALITY_TOL`]; returns `det R′`.
    pub fn check_motion(&self) -> Result<f64> {
        let r = &self.rotation;
        let dev = (r.transpose() * r - Mat3::identity()).amax();
        if !(dev <= ORTHOGONALITY_TOL) {
            return Err(PsError::domain(format!("linear part of the motion is not orthogonal (defect {dev:.2e})")));
        }
        Ok(r.determinant().signum())
    }

    /// Strict monotonicity of `γ₁` on `dx` and `γ₂` on `dy`, sampled at 65 points.
    pub fn check_monotone(&self, dx: (f64, f64), dy: (f64, f64)) -> Result<()> {
        for (name, g, (lo, hi)) in [("γ₁", &self.gamma1, dx), ("γ₂", &self.gamma2, dy)] {
            let v: Vec<f64> = (0..65).map(|k| g.eval(lo + (hi - lo) * k as f64 / 64.0)).collect();
            let up = v.windows(2).all(|w| w[1] > w[0]);
            let down = v.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                return Err(PsError::domain(format!("{name} is not monotone on [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Extended frames at the images under `γ` of the covered lattice nodes,
/// computed by re-running the pipeline at those parameters.
#[derive(Debug, Clone)]
pub struct ImageFrames {
    /// Lattice nodes `(i, j)` whose image lies in the potential domain.
    pub nodes: Vec<(usize, usize)>,
    /// `U∘γ` per covered node.
    pub u: Vec<LaurentLoop>,
    /// `φ∘γ` modulo 2π.
    pub phi: Vec<f64>,
    /// Speeds at the image.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Covered fraction of the lattice.
    pub coverage: f64,
}

fn inside(t: f64, d: (f64, f64)) -> bool {
    t.is_finite() && t >= d.0 - 1e-12 && t <= d.1 + 1e-12
}

pub fn frames_at_images(
    p: &PotentialPair,
    f: &FrameGrid,
    d: &SymmetryDescriptor,
    opts: &PipelineOptions,
) -> Result<ImageFrames> {
    let g = &f.grid;
    let (dx, dy) = (p.domain_x(), p.domain_y());
    // image x-parameters come from x-nodes, or from y-nodes when switching
    let (src_x, src_y) = if d.switches_axes { (g.ys(), g.xs()) } else { (g.xs(), g.ys()) };
    let keep = |src: &[f64], gm: &ScalarFunction, dom| -> Vec<(usize, f64)> {
        src.iter()
            .enumerate()
            .map(|(k, &t)| (k, gm.eval(t)))
            .filter(|(_, s)| inside(*s, dom))
            .collect()
    };
    let ix = keep(&src_x, &d.gamma1, dx);
    let iy = keep(&src_y, &d.gamma2, dy);
    if ix.is_empty() || iy.is_empty() {
        return Err(PsError::domain("γ maps no lattice node into the potential domain"));
    }
    let xs: Vec<f64> = ix.iter().map(|v| v.1.clamp(dx.0, dx.1)).collect();
    let ys: Vec<f64> = iy.iter().map(|v| v.1.clamp(dy.0, dy.1)).collect();
    let lf = frames_on_lattice(p, &xs, &ys, opts)?;

    let mut rows: Vec<((usize, usize), usize, usize, usize)> = Vec::with_capacity(xs.len() * ys.len());
    for (jj, &(sj, _)) in iy.iter().enumerate() {
        for (ii, &(si, _)) in ix.iter().enumerate() {
            let node = if d.switches_axes { (sj, si) } else { (si, sj) };
            rows.push((node, jj * xs.len() + ii, ii, jj));
        }
    }
    // row-major lattice order, which the lift continuity relies on
    rows.sort_by_key(|r| (r.0 .1, r.0 .0));
    let mut out = ImageFrames {
        nodes: rows.iter().map(|r| r.0).collect(),
        u: rows.iter().map(|r| lf.u[r.1].clone()).collect(),
        phi: rows.iter().map(|r| lf.beta[r.3] - 2.0 * lf.psi[r.1]).collect(),
        a: rows.iter().map(|r| lf.a[r.2]).collect(),
        b: rows.iter().map(|r| lf.b[r.3]).collect(),
        coverage: 0.0,
    };
    out.coverage = out.nodes.len() as f64 / g.len() as f64;
    Ok(out)
}

/// Frame `F` with first column along `f_x` and third along `f_x × f_y`,
/// as `Ad U(1) · diag(1, s, s)` with `s = sign sin φ`.
fn geometric_frame(u: &LaurentLoop, phi: f64) -> (Mat3, f64) {
    let s = phi.sin().signum();
    (adjoint_rotation_unchecked(&u.eval_real(1.0)) * Mat3::from_diagonal(&Vec3::new(1.0, s, s)), s)
}

/// Tangent coordinates `[f_x, f_y] = F [Z; 0]` at `λ = 1`.
fn tangent_coords(a: f64, b: f64, phi: f64) -> Matrix2<f64> {
    Matrix2::new(a, b * phi.cos(), 0.0, b * phi.sin().abs())
}

#[derive(Debug, Clone)]
pub struct KField {
    pub nodes: Vec<(usize, usize)>,
    /// `K` per covered node; `None` where the node or its image is degenerate.
    pub k: Vec<Option<Mat3>>,
    /// `(s, s∘γ)` normal-orientation signs relating `F` to `Ad U`.
    pub signs: Vec<(f64, f64)>,
    /// `max ‖F∘γ − R′ F K‖`.
    pub frame_residual: f64,
    /// `max ‖KᵀK − I‖`.
    pub orthogonality_defect: f64,
    /// Largest off-block entry of `K⁻¹ ΔK / h` between neighbouring nodes.
    pub subalgebra_residual: f64,
    /// Largest change of `K` between neighbours along y (x-only dependence).
    pub y_variation: f64,
    pub skipped: usize,
}

/// `K = blockdiag(Z J⁻¹ (Z∘γ)⁻¹, ε)` with `R′ n = ε (n∘γ)`, from exact
/// speeds, angles and the Jacobian of `γ`.
pub fn compute_k(f: &FrameGrid, img: &ImageFrames, d: &SymmetryDescriptor) -> KField {
    let g = &f.grid;
    let rows: Vec<(Option<Mat3>, (f64, f64), f64)> = img
        .nodes
        .par_iter()
        .enumerate()
        .map(|(n, &(i, j))| {
            let k = g.idx(i, j);
            let (phi, phi_g) = (f.phi[k], img.phi[n]);
            if phi.sin().abs() < EPS_DEG || phi_g.sin().abs() < EPS_DEG {
                return (None, (0.0, 0.0), 0.0);
            }
            let (fr, s) = geometric_frame(&f.u[k], phi);
            let (fr_g, s_g) = geometric_frame(&img.u[n], phi_g);
            let z = tangent_coords(f.a[i], f.b[j], phi);
            let z_g = tangent_coords(img.a[n], img.b[n], phi_g);
            let jac = d.jacobian(g.x(i), g.y(j));
            let block = match (jac.try_inverse(), z_g.try_inverse()) {
                (Some(ji), Some(zi)) => z * ji * zi,
                _ => return (None, (s, s_g), 0.0),
            };
            let n_img: Vec3 = fr_g.column(2).into();
            let eps = (d.rotation * fr.column(2)).dot(&n_img).signum();
            let mut kk = Mat3::zeros();
            kk.fixed_view_mut::<2, 2>(0, 0).copy_from(&block);
            kk[(2, 2)] = eps;
            let res = (fr_g - d.rotation * fr * kk).amax();
            (Some(kk), (s, s_g), res)
        })
        .collect();

    let mut out = KField {
        nodes: img.nodes.clone(),
        k: Vec::with_capacity(rows.len()),
        signs: Vec::with_capacity(rows.len()),
        frame_residual: 0.0,
        orthogonality_defect: 0.0,
        subalgebra_residual: 0.0,
        y_variation: 0.0,
        skipped: 0,
    };
    for (k, s, r) in rows {
        match &k {
            Some(m) => {
                out.orthogonality_defect = out.orthogonality_defect.max((m.transpose() * m - Mat3::identity()).amax());
                out.frame_residual = out.frame_residual.max(r);
            }
            None => out.skipped += 1,
        }
        out.k.push(k);
        out.signs.push(s);
    }
    let pos: std::collections::HashMap<(usize, usize), usize> =
        out.nodes.iter().enumerate().map(|(n, &ij)| (ij, n)).collect();
    for (n, &(i, j)) in out.nodes.iter().enumerate() {
        let Some(k0) = out.k[n] else { continue };
        for (nb, h, along_y) in [((i + 1, j), g.hx(), false), ((i, j + 1), g.hy(), true)] {
            let Some(k1) = pos.get(&nb).and_then(|&m| out.k[m]) else { continue };
            let mc = k0.transpose() * (k1 - k0) / h;
            let off = [mc[(0, 2)], mc[(1, 2)], mc[(2, 0)], mc[(2, 1)]];
            out.subalgebra_residual = off.iter().fold(out.subalgebra_residual, |m, v| m.max(v.abs()));
            if along_y {
                out.y_variation = out.y_variation.max((k1 - k0).amax());
            }
        }
    }
    out
}

/// Spectral points used for the monodromy spread: 16 per circle at radii `1/r, 1, r`.
fn spread_points(r: f64) -> Vec<C64> {
    let mut v = Vec::new();
    for rad in [1.0 / r, 1.0, r] {
        v.extend((0..16).map(|k| expi(std::f64::consts::TAU * k as f64 / 16.0).scale(rad)));
    }
    v
}

#[derive(Debug, Clone)]
pub struct Monodromy {
    /// Node average of `(U∘γ) K⁻¹ U⁻¹`.
    pub chi: LaurentLoop,
    /// Largest deviation of a node value from the average on the working annulus.
    pub spread: f64,
    pub nodes: usize,
    /// `Ad χ(1)`.
    pub rotation_at_one: Mat3,
    /// `λ ∂χ/∂λ χ⁻¹` at `λ = 1`: the translation of the motion at `λ = 1`.
    pub translation_at_one: Vec3,
}

impl Monodromy {
    pub fn angle_at_one(&self) -> f64 {
        rotation_angle(&self.rotation_at_one)
    }
}

/// SU(2) lifts of `Ad`-frame factors `diag(1,s,s) K diag(1,s',s')`, with the
/// double-cover sign fixed by continuity: along each row from its first
/// node, and between first nodes of consecutive rows.
fn lifts(kf: &KField) -> Vec<Option<Mat2>> {
    let mut out: Vec<Option<Mat2>> = vec![None; kf.nodes.len()];
    let mut prev_row_start: Option<Mat2> = None;
    let mut prev: Option<Mat2> = None;
    let mut row = usize::MAX;
    for (n, &(_, j)) in kf.nodes.iter().enumerate() {
        if j != row {
            row = j;
            prev = prev_row_start;
            prev_row_start = None;
        }
        let Some(k) = kf.k[n] else { continue };
        let (s, sg) = kf.signs[n];
        let ku = Mat3::from_diagonal(&Vec3::new(1.0, s, s)) * k * Mat3::from_diagonal(&Vec3::new(1.0, sg, sg));
        let mut l = su2_lift(&ku);
        if let Some(p) = prev {
            if (p.adjoint() * l).trace().re < 0.0 {
                l = -l;
            }
        }
        if prev_row_start.is_none() {
            prev_row_start = Some(l);
        }
        prev = Some(l);
        out[n] = Some(l);
    }
    out
}

/// Per-node `χ = (U∘γ) K⁻¹ U⁻¹`, averaged; the spread certifies that `χ` is constant.
pub fn measure_monodromy(f: &FrameGrid, img: &ImageFrames, kf: &KField) -> Result<Monodromy> {
    let g = &f.grid;
    let lifted = lifts(kf);
    let chis: Vec<LaurentLoop> = kf
        .nodes
        .par_iter()
        .zip(&lifted)
        .enumerate()
        .filter_map(|(n, (&(i, j), l))| {
            let l = (*l)?;
            let u = &f.u[g.idx(i, j)];
            Some(img.u[n].right_mul(&l.adjoint()).multiply(&u.adjugate()).trim_radius(1e-18, f.radius))
        })
        .collect();
    if chis.is_empty() {
        return Err(PsError::domain("no non-degenerate node with a covered image"));
    }
    let mut chi = LaurentLoop::zero();
    for c in &chis {
        chi = chi.add_loop(c);
    }
    let chi = chi.scale_re(1.0 / chis.len() as f64).trim_radius(1e-18, f.radius);
    let pts = spread_points(f.radius);
    let spread = chis
        .par_iter()
        .map(|c| pts.iter().map(|&l| (c.eval_nonzero(l) - chi.eval_nonzero(l)).norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    let at_one = chi.eval_real(1.0);
    let translation_at_one = crate::loop_algebra::su2_coords(&(chi.log_lambda_derivative().eval_real(1.0) * at_one.adjugate()));
    Ok(Monodromy {
        chi,
        spread,
        nodes: chis.len(),
        rotation_at_one: adjoint_rotation_unchecked(&at_one),
        translation_at_one,
    })
}

/// Least-squares motion taking `f` to `f∘γ` at `λ`, using exact image points.
/// With `improper` the linear part is a rotation composed with a reflection.
pub fn fit_motion(f: &FrameGrid, img: &ImageFrames, lambda: f64, improper: bool) -> Result<Registration> {
    let g = &f.grid;
    let (src, dst): (Vec<Vec3>, Vec<Vec3>) = img
        .nodes
        .par_iter()
        .zip(&img.u)
        .map(|(&(i, j), ug)| (sym_at(&f.u[g.idx(i, j)], lambda), sym_at(ug, lambda)))
        .unzip();
    if !improper {
        return register_rigid(&src, &dst);
    }
    let mirror = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
    let flipped: Vec<Vec3> = src.iter().map(|p| mirror * p).collect();
    let mut r = register_rigid(&flipped, &dst)?;
    r.rotation *= mirror;
    Ok(r)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfaceSymmetryResidual {
    /// `max ‖f(γ(p)) − (R′ f(p) + t)‖` over covered nodes.
    pub residual: f64,
    pub covered: usize,
    pub coverage: f64,
}

/// How `f∘γ` is read off the lattice between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Tensor product of four-point Lagrange stencils.
    Cubic,
}

/// Lattice positions interpolated at `(x, y)`; `None` outside the lattice.
fn interpolate(s: &SurfaceGrid, x: f64, y: f64, how: Interpolation) -> Option<Vec3> {
    let g = &s.grid;
    let tol = 1e-12;
    if !(x >= g.x_range.0 - tol && x <= g.x_range.1 + tol && y >= g.y_range.0 - tol && y <= g.y_range.1 + tol) {
        return None;
    }
    if how == Interpolation::Cubic && g.nx >= 4 && g.ny >= 4 {
        let (i0, wx) = lagrange4(g.x_range.0, g.hx(), g.nx, x);
        let (j0, wy) = lagrange4(g.y_range.0, g.hy(), g.ny, y);
        let mut v = Vec3::zeros();
        for (b, wj) in wy.iter().enumerate() {
            for (a, wi) in wx.iter().enumerate() {
                v += s.point(i0 + a, j0 + b) * (wi * wj);
            }
        }
        return Some(v);
    }
    let cell = |t: f64, lo: f64, h: f64, n: usize| {
        let u = ((t - lo) / h).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        (i, u - i as f64)
    };
    let (i, u) = cell(x, g.x_range.0, g.hx(), g.nx);
    let (j, v) = cell(y, g.y_range.0, g.hy(), g.ny);
    Some(
        s.point(i, j) * ((1.0 - u) * (1.0 - v))
            + s.point(i + 1, j) * (u * (1.0 - v))
            + s.point(i, j + 1) * ((1.0 - u) * v)
            + s.point(i + 1, j + 1) * (u * v),
    )
}

/// Residual of `f∘γ = R f` with `f∘γ` interpolated on the lattice.
pub fn check_surface_symmetry(
    s: &SurfaceGrid,
    d: &SymmetryDescriptor,
    how: Interpolation,
) -> Result<SurfaceSymmetryResidual> {
    let g = &s.grid;
    let (residual, covered) = (0..g.len())
        .into_par_iter()
        .filter_map(|k| {
            let (i, j) = g.ij(k);
            let (gx, gy) = d.image(g.x(i), g.y(j));
            let q = interpolate(s, gx, gy, how)?;
            Some((q - (d.rotation * s.points[k] + d.translation)).norm())
        })
        .fold(|| (0.0f64, 0usize), |(m, c), r| (m.max(r), c + 1))
        .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    if covered == 0 {
        return Err(PsError::domain("γ maps no lattice node into the lattice"));
    }
    Ok(SurfaceSymmetryResidual {
        residual,
        covered,
        coverage: covered as f64 / g.len() as f64,
    })
}

/// Frame-level residual of `F^λ∘γ = χ F^{1/λ} K` at `λ ∈ {1/2, 1, 2}` for an
/// axis-switching symmetry: the largest node deviation of
/// `(F^λ∘γ) K⁻¹ (F^{1/λ})⁻¹` from its node average, in O(3).
///
/// Swapping the coordinates exchanges the two asymptotic families, whose
/// torsions have opposite signs, so `R′` and `K` are improper here and no
/// SU(2) lift is taken.
pub fn check_axis_switch(f: &FrameGrid, img: &ImageFrames, kf: &KField, d: &SymmetryDescriptor) -> Result<f64> {
    if !d.switches_axes {
        return Err(PsError::domain("descriptor does not switch axes"));
    }
    if !f.grid.is_square() {
        return Err(PsError::domain("axis switching needs a square lattice"));
    }
    let g = &f.grid;
    let mut worst: f64 = 0.0;
    for lam in [0.5, 1.0, 2.0] {
        let chis: Vec<Mat3> = kf
            .nodes
            .par_iter()
            .enumerate()
            .filter_map(|(n, &(i, j))| {
                let k = kf.k[n]?;
                let (s, sg) = kf.signs[n];
                let u = &f.u[g.idx(i, j)];
                let fr = adjoint_rotation_unchecked(&u.eval_real(1.0 / lam)) * Mat3::from_diagonal(&Vec3::new(1.0, s, s));
                let fg = adjoint_rotation_unchecked(&img.u[n].eval_real(lam)) * Mat3::from_diagonal(&Vec3::new(1.0, sg, sg));
                Some(fg * k.transpose() * fr.transpose())
            })
            .collect();
        if chis.is_empty() {
            return Err(PsError::domain("no non-degenerate node with a covered image"));
        }
        let mean = chis.iter().fold(Mat3::zeros(), |a, c| a + c) / chis.len() as f64;
        worst = chis.iter().fold(worst, |w, c| w.max((c - mean).amax()));
    }
    Ok(worst)
}

/// The cone point of a surface: mean image of the degenerate nodes, with
/// the largest distance from it to each coordinate line.
#[derive(Debug, Clone, Serialize)]
pub struct ConePoint {
    pub point: [f64; 3],
    /// Largest distance of a degenerate node's image from `point`.
    pub spread: f64,
    /// Largest over coordinate lines of the line's nearest distance to `point`.
    pub max_line_distance: f64,
    /// `10 h`.
    pub threshold: f64,
    pub passed: bool,
}

pub fn cone_point_check(s: &SurfaceGrid) -> Option<ConePoint> {
    let g = &s.grid;
    let deg: Vec<Vec3> = (0..g.len()).filter(|&k| s.degenerate[k]).map(|k| s.points[k]).collect();
    if deg.is_empty() {
        return None;
    }
    let c = deg.iter().fold(Vec3::zeros(), |a, p| a + p) / deg.len() as f64;
    let spread = deg.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
    let near = |pts: &mut dyn Iterator<Item = Vec3>| pts.map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min);
    let mut worst: f64 = 0.0;
    for j in 0..g.ny {
        worst = worst.max(near(&mut (0..g.nx).map(|i| s.point(i, j))));
    }
    for i in 0..g.nx {
        worst = worst.max(near(&mut (0..g.ny).map(|j| s.point(i, j))));
    }
    let threshold = 10.0 * g.hx().max(g.hy());
    Some(ConePoint {
        point: [c.x, c.y, c.z],
        spread,
        max_line_distance: worst,
        threshold,
        passed: worst <= threshold,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stage {
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Stage {
    fn new(value: f64, threshold: f64) -> Self {
        Stage {
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

/// Outcome of [`certify_from_potentials`]; later stages are `None` once an earlier one fails.
#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub equivariance_x: Stage,
    pub equivariance_y: Stage,
    pub monodromy_spread: Option<Stage>,
    pub surface_residual: Option<Stage>,
    /// Angle of the fitted `R′`.
    pub rotation_angle_measured_rad: Option<f64>,
    /// Angle of `Ad χ(1)`.
    pub monodromy_angle_rad: Option<f64>,
    /// `max |Ad χ(1) − R′|` entrywise.
    pub rotation_agreement: Option<f64>,
    pub registration_rms: Option<f64>,
    pub coverage: Option<f64>,
    pub frame_residual: Option<f64>,
    pub cone: Option<ConePoint>,
    pub certified: bool,
}

impl Certification {
    /// Flat `key: value` pairs, in a fixed order.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        let mut push = |k: &str, v: String| kv.push((k.to_string(), v));
        let stage = |s: &Option<Stage>| s.map_or("skipped".to_string(), |s| format!("{:.6e}", s.value));
        let pass = |s: &Option<Stage>| s.map_or("skipped".to_string(), |s| s.passed.to_string());
        push("equivariance_x", format!("{:.6e}", self.equivariance_x.value));
        push("equivariance_x_pass", self.equivariance_x.passed.to_string());
        push("equivariance_y", format!("{:.6e}", self.equivariance_y.value));
        push("equivariance_y_pass", self.equivariance_y.passed.to_string());
        push("monodromy_spread", stage(&self.monodromy_spread));
        push("monodromy_spread_pass", pass(&self.monodromy_spread));
        push("surface_residual", stage(&self.surface_residual));
        push("surface_residual_pass", pass(&self.surface_residual));
        let opt = |v: Option<f64>| v.map_or("skipped".to_string(), |v| format!("{v:.6e}"));
        push("rotation_angle_measured_rad", opt(self.rotation_angle_measured_rad));
        push("monodromy_angle_rad", opt(self.monodromy_angle_rad));
        push("rotation_agreement", opt(self.rotation_agreement));
        push("registration_rms", opt(self.registration_rms));
        push("coverage", opt(self.coverage));
        push("frame_residual", opt(self.frame_residual));
        if let Some(c) = &self.cone {
            push("cone_point_line_distance", format!("{:.6e}", c.max_line_distance));
            push("cone_point_threshold", format!("{:.6e}", c.threshold));
            push("cone_point_pass", c.passed.to_string());
        }
        push("certified", self.certified.to_string());
        kv
    }
}

/// Equivariance of the potentials, then the surface on `grid`, the fitted
/// motion, `K`, the monodromy and the interpolated surface residual.
pub fn certify_from_potentials(
    p: &PotentialPair,
    d: &SymmetryDescriptor,
    grid: &GridSpec,
    opts: &PipelineOptions,
    th: &CertifyThresholds,
) -> Result<Certification> {
    certify(p, d, th, || reconstruct_frames(p, grid, opts), opts)
}

/// As [`certify_from_potentials`] with frames already reconstructed from `p` with `opts`.
pub fn certify_with_frames(
    p: &PotentialPair,
    f: &FrameGrid,
    d: &SymmetryDescriptor,
    opts: &PipelineOptions,
    th: &CertifyThresholds,
) -> Result<Certification> {
    certify(p, d, th, || Ok(f.clone()), opts)
}

fn certify(
    p: &PotentialPair,
    d: &SymmetryDescriptor,
    th: &CertifyThresholds,
    frames: impl FnOnce() -> Result<FrameGrid>,
    opts: &PipelineOptions,
) -> Result<Certification> {
    let eq: EquivarianceResidual = if d.switches_axes {
        // no potential-level condition is available for switched axes
        EquivarianceResidual { x: 0.0, y: 0.0, samples_x: 0, samples_y: 0 }
    } else {
        check_equivariance(p, &d.gamma1, &d.gamma2, &d.wx, &d.wy)?
    };
    let mut c = Certification {
        equivariance_x: Stage::new(eq.x, th.equivariance),
        equivariance_y: Stage::new(eq.y, th.equivariance),
        monodromy_spread: None,
        surface_residual: None,
        rotation_angle_measured_rad: None,
        monodromy_angle_rad: None,
        rotation_agreement: None,
        registration_rms: None,
        coverage: None,
        frame_residual: None,
        cone: None,
        certified: false,
    };
    if !(c.equivariance_x.passed && c.equivariance_y.passed) {
        return Ok(c);
    }
    let f = frames()?;
    let img = frames_at_images(p, &f, d, opts)?;
    let reg = fit_motion(&f, &img, 1.0, d.switches_axes)?;
    let fitted = d.clone().with_registration(&reg);
    let det = fitted.check_motion()?;
    c.registration_rms = Some(reg.rms);
    c.coverage = Some(img.coverage);
    // angle of the rotation part; an improper R′ is a rotation times −I
    c.rotation_angle_measured_rad = Some(rotation_angle(&(reg.rotation * det)));

    let kf = compute_k(&f, &img, &fitted);
    c.frame_residual = Some(kf.frame_residual);
    let spread_value = if d.switches_axes {
        check_axis_switch(&f, &img, &kf, &fitted)?
    } else {
        let m = measure_monodromy(&f, &img, &kf)?;
        c.monodromy_angle_rad = Some(m.angle_at_one());
        c.rotation_agreement = Some((m.rotation_at_one - reg.rotation).amax());
        m.spread
    };
    let spread = Stage::new(spread_value, th.monodromy_spread);
    c.monodromy_spread = Some(spread);

    let s = sym_immersion(&f, 1.0)?;
    c.cone = cone_point_check(&s);
    if spread.passed {
        let r = check_surface_symmetry(&s, &fitted, th.interpolation)?;
        c.surface_residual = Some(Stage::new(r.residual, th.surface_residual));
    }
    c.certified = c.surface_residual.is_some_and(|s| s.passed);
    Ok(c)
}
