//! Axis frames `dG/dt = G η(t)` integrated on Laurent coefficients, and a
//! fixed-λ frame solver driven by a given angle function.

use crate::error::{PsError, Result};
use crate::grid::GridSpec;
use crate::loop_algebra::{c, LaurentLoop, Mat2, C64};
use crate::potentials::{lagrange4, AxisPotential, ScalarFunction};

/// Unitarity/determinant drift that aborts an integration.
pub const DRIFT_LIMIT: f64 = 1e-6;

/// Real λ at which drift is monitored.
pub const DRIFT_POINTS: [f64; 3] = [0.5, 1.0, 2.0];

/// Coefficients contributing less than this on `1/2 ≤ |λ| ≤ 2` are dropped after each step.
pub const STEP_TRIM: f64 = 1e-18;

const DRIFT_CHECK_EVERY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone)]
pub struct AxisFramePath {
    pub axis: Axis,
    pub step: f64,
    pub init: LaurentLoop,
    pub samples: Vec<(f64, LaurentLoop)>,
    /// Largest drift seen at [`DRIFT_POINTS`].
    pub drift: f64,
}

impl AxisFramePath {
    pub fn end(&self) -> &LaurentLoop {
        &self.samples.last().expect("path has samples").1
    }
}

/// `max ‖G G† − I‖ + |det G − 1|` over [`DRIFT_POINTS`].
pub fn drift(g: &LaurentLoop) -> f64 {
    drift_at(g, 2.0)
}

/// Drift at `λ ∈ {1/r, 1, r}`.
pub fn drift_at(g: &LaurentLoop, r: f64) -> f64 {
    [1.0 / r, 1.0, r]
        .iter()
        .map(|&l| {
            let m = g.eval_real(l);
            m.unitarity_defect() + (m.det() - c(1.0, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

fn rk4_step(g: &LaurentLoop, eta: &AxisPotential, t: f64, h: f64, r: f64) -> LaurentLoop {
    let e0 = eta.at(t);
    let em = eta.at(t + 0.5 * h);
    let e1 = eta.at(t + h);
    let k1 = g.multiply(&e0);
    let k2 = g.add_loop(&k1.scale_re(0.5 * h)).multiply(&em);
    let k3 = g.add_loop(&k2.scale_re(0.5 * h)).multiply(&em);
    let k4 = g.add_loop(&k3.scale_re(h)).multiply(&e1);
    let incr = k1.add_loop(&k2.scale_re(2.0)).add_loop(&k3.scale_re(2.0)).add_loop(&k4);
    g.add_loop(&incr.scale_re(h / 6.0)).trim_radius(STEP_TRIM, r)
}

fn check_init(init: &LaurentLoop) -> Result<()> {
    let d = drift(init);
    if d > 1e-9 || init.check_twist() > 1e-9 {
        return Err(PsError::domain(format!("initial loop is not a twisted unitary loop (defect {d:.1e})")));
    }
    Ok(())
}

/// Steps of at most `max_step` from `t0` to `t1`, carrying the drift monitor.
fn advance(
    eta: &AxisPotential,
    g: &mut LaurentLoop,
    t0: f64,
    t1: f64,
    max_step: f64,
    r: f64,
    counter: &mut usize,
    worst: &mut f64,
    mut record: impl FnMut(f64, &LaurentLoop),
) -> Result<()> {
    let n = ((t1 - t0).abs() / max_step).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    for s in 0..n {
        let t = t0 + h * s as f64;
        *g = rk4_step(g, eta, t, h, r);
        *counter += 1;
        let tn = if s + 1 == n { t1 } else { t + h };
        if *counter % DRIFT_CHECK_EVERY == 0 || s + 1 == n {
            let d = drift_at(g, r);
            *worst = worst.max(d);
            if !(d <= DRIFT_LIMIT) {
                return Err(PsError::IntegrationDrift { drift: d, t: tn });
            }
        }
        record(tn, g);
    }
    Ok(())
}

/// Classical RK4 for `dG/dt = G η(t)` from `interval.0` to `interval.1`
/// (either direction), recording every step.
pub fn integrate_axis(
    eta: &AxisPotential,
    axis: Axis,
    interval: (f64, f64),
    init: &LaurentLoop,
    step: f64,
) -> Result<AxisFramePath> {
    if !(step > 0.0) {
        return Err(PsError::domain(format!("step must be positive, got {step}")));
    }
    check_init(init)?;
    let mut g = init.clone();
    let mut samples = vec![(interval.0, init.clone())];
    let (mut counter, mut worst) = (0, drift(init));
    advance(eta, &mut g, interval.0, interval.1, step, 2.0, &mut counter, &mut worst, |t, g| {
        samples.push((t, g.clone()))
    })?;
    Ok(AxisFramePath {
        axis,
        step,
        init: init.clone(),
        samples,
        drift: worst,
    })
}

/// Frames at arbitrary parameters, integrated outward from `base` where the
/// frame is `init`. Every returned frame lies on the integration path exactly.
///
/// Drift is monitored and coefficients are trimmed on `1/radius ≤ |λ| ≤ radius`.
pub fn frames_at(
    eta: &AxisPotential,
    nodes: &[f64],
    base: f64,
    init: &LaurentLoop,
    max_step: f64,
    radius: f64,
) -> Result<Vec<LaurentLoop>> {
    if !(max_step > 0.0) {
        return Err(PsError::domain(format!("step must be positive, got {max_step}")));
    }
    check_init(init)?;
    let mut out = vec![LaurentLoop::zero(); nodes.len()];
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    let (below, above): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&k| nodes[k] < base);
    let (mut counter, mut worst) = (0, 0.0);
    for (list, forward) in [(above, true), (below, false)] {
        let mut g = init.clone();
        let mut t = base;
        let iter: Box<dyn Iterator<Item = &usize>> = if forward { Box::new(list.iter()) } else { Box::new(list.iter().rev()) };
        for &k in iter {
            if nodes[k] != t {
                advance(eta, &mut g, t, nodes[k], max_step, radius, &mut counter, &mut worst, |_, _| {})?;
                t = nodes[k];
            }
            out[k] = g.clone();
        }
    }
    Ok(out)
}

/// Frames on a fixed-λ grid.
#[derive(Debug, Clone)]
pub struct DirectFrames {
    pub grid: GridSpec,
    pub lambda: f64,
    /// x-then-y frames, flat-indexed as [`GridSpec::idx`].
    pub u: Vec<Mat2>,
    /// Largest difference between x-then-y and y-then-x frames over all nodes.
    pub path_residual: f64,
}

fn interp(vals: &[f64], t0: f64, h: f64, x: f64) -> f64 {
    let (base, w) = lagrange4(t0, h, vals.len(), x);
    (0..4).map(|k| w[k] * vals[base + k]).sum()
}

fn rk4_mat(u: Mat2, f: &impl Fn(f64) -> Mat2, t: f64, h: f64) -> Mat2 {
    let k1 = u * f(t);
    let k2 = (u + k1 * (0.5 * h)) * f(t + 0.5 * h);
    let k3 = (u + k2 * (0.5 * h)) * f(t + 0.5 * h);
    let k4 = (u + k3 * h) * f(t + h);
    u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

struct Stretched<'a> {
    grid: &'a GridSpec,
    phi: &'a [f64],
    a: &'a ScalarFunction,
    b: &'a ScalarFunction,
    lambda: f64,
    substeps: usize,
}

impl Stretched<'_> {
    /// `diag(e^{−iφ/2}, e^{iφ/2})`, which absorbs the `φ_x` terms of the x-equation.
    fn d(phi: f64) -> Mat2 {
        Mat2::diag_phase(-0.5 * phi)
    }

    /// Row `j` from node `i0`, where the frame is `u0`. Uses `U = W D(φ)` with
    /// `W_x = W (i/2) a λ [[0, e^{−iφ}], [e^{iφ}, 0]]`, so no derivative of φ is needed.
    fn row(&self, j: usize, i0: usize, u0: Mat2, out: &mut [Mat2]) {
        let g = self.grid;
        let row: Vec<f64> = (0..g.nx).map(|i| self.phi[g.idx(i, j)]).collect();
        let (x0, hx) = (g.x_range.0, g.hx());
        let rhs = |x: f64| {
            let p = interp(&row, x0, hx, x);
            let z = C64::from_polar(1.0, p);
            Mat2::offdiag(z.conj(), z).scale(c(0.0, 0.5 * self.a.eval(x) * self.lambda))
        };
        out[g.idx(i0, j)] = u0;
        for dir in [1isize, -1] {
            let mut w = u0 * Self::d(row[i0]).adjoint();
            let mut i = i0 as isize;
            while (i + dir) >= 0 && (i + dir) < g.nx as isize {
                let (ta, tb) = (g.x(i as usize), g.x((i + dir) as usize));
                let h = (tb - ta) / self.substeps as f64;
                for s in 0..self.substeps {
                    w = rk4_mat(w, &rhs, ta + h * s as f64, h);
                }
                i += dir;
                out[g.idx(i as usize, j)] = w * Self::d(row[i as usize]);
            }
        }
    }

    /// Column `i` from node `j0`: `U_y = U · (−i b / 2λ) [[0, e^{iφ}], [e^{−iφ}, 0]]`.
    fn column(&self, i: usize, j0: usize, u0: Mat2, out: &mut [Mat2]) {
        let g = self.grid;
        let col: Vec<f64> = (0..g.ny).map(|j| self.phi[g.idx(i, j)]).collect();
        let (y0, hy) = (g.y_range.0, g.hy());
        let rhs = |y: f64| {
            let p = interp(&col, y0, hy, y);
            let z = C64::from_polar(1.0, p);
            Mat2::offdiag(z, z.conj()).scale(c(0.0, -0.5 * self.b.eval(y) / self.lambda))
        };
        out[g.idx(i, j0)] = u0;
        for dir in [1isize, -1] {
            let mut u = u0;
            let mut j = j0 as isize;
            while (j + dir) >= 0 && (j + dir) < g.ny as isize {
                let (ta, tb) = (g.y(j as usize), g.y((j + dir) as usize));
                let h = (tb - ta) / self.substeps as f64;
                for s in 0..self.substeps {
                    u = rk4_mat(u, &rhs, ta + h * s as f64, h);
                }
                j += dir;
                out[g.idx(i, j as usize)] = u;
            }
        }
    }
}

/// Integrates `U_x = U (i/2)[[−φ_x, aλ], [aλ, φ_x]]`,
/// `U_y = U (−i b/2λ)[[0, e^{iφ}], [e^{−iφ}, 0]]` at a fixed real `λ`, with
/// `U = I` at node `base`. Between nodes φ is interpolated with cubic
/// Lagrange polynomials; each cell takes `substeps` RK4 steps.
///
/// Fails with [`PsError::Incompatible`] when the x-then-y and y-then-x frames
/// differ by more than `tol` somewhere on the grid.
#[allow(clippy::too_many_arguments)]
pub fn direct_frame_solve(
    grid: &GridSpec,
    phi: &[f64],
    a: &ScalarFunction,
    b: &ScalarFunction,
    lambda: f64,
    base: (usize, usize),
    substeps: usize,
    tol: f64,
) -> Result<DirectFrames> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(PsError::domain("λ must be a nonzero real"));
    }
    if grid.nx < 4 || grid.ny < 4 || phi.len() != grid.len() {
        return Err(PsError::domain("angle grid must have at least 4×4 nodes and match the lattice"));
    }
    let s = Stretched {
        grid,
        phi,
        a,
        b,
        lambda,
        substeps: substeps.max(1),
    };
    let (i0, j0) = base;
    let mut xy = vec![Mat2::ZERO; grid.len()];
    s.row(j0, i0, Mat2::IDENTITY, &mut xy);
    for i in 0..grid.nx {
        let u0 = xy[grid.idx(i, j0)];
        s.column(i, j0, u0, &mut xy);
    }
    let mut yx = vec![Mat2::ZERO; grid.len()];
    s.column(i0, j0, Mat2::IDENTITY, &mut yx);
    for j in 0..grid.ny {
        let u0 = yx[grid.idx(i0, j)];
        s.row(j, i0, u0, &mut yx);
    }
    let path_residual = xy.iter().zip(&yx).map(|(p, q)| (*p - *q).norm()).fold(0.0, f64::max);
    if !(path_residual <= tol) {
        return Err(PsError::Incompatible { residual: path_residual });
    }
    Ok(DirectFrames {
        grid: *grid,
        lambda,
        u: xy,
        path_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{normalized_from_boundary, BoundaryAngles};

    fn flat_x() -> AxisPotential {
        let e = Mat2::offdiag(c(0.0, 0.5), c(0.0, 0.5));
        AxisPotential::new((0.0, 1.0), move |_| LaurentLoop::monomial(1, e))
    }

    #[test]
    fn zero_potential_keeps_init() {
        let zero = AxisPotential::new((0.0, 1.0), |_| LaurentLoop::zero());
        let init = LaurentLoop::constant(Mat2::diag_phase(0.4));
        let p = integrate_axis(&zero, Axis::X, (0.0, 1.0), &init, 0.1).unwrap();
        assert!(p.samples.iter().all(|(_, g)| g.distance(&init) == 0.0));
    }

    #[test]
    fn constant_potential_is_rotation() {
        let p = integrate_axis(&flat_x(), Axis::X, (0.0, 1.0), &LaurentLoop::identity(), 1.0 / 256.0).unwrap();
        assert_eq!(p.samples[0].1.distance(&LaurentLoop::identity()), 0.0);
        for (x, g) in p.samples.iter().step_by(37) {
            for lam in [0.5, 1.0, 2.0] {
                let (cs, sn) = ((lam * x / 2.0).cos(), (lam * x / 2.0).sin());
                let want = Mat2::new(c(cs, 0.0), c(0.0, sn), c(0.0, sn), c(cs, 0.0));
                let err = (g.eval_real(lam) - want).norm();
                assert!(err < 1e-10, "{err}");
            }
        }
        assert!(p.drift < 1e-12);
    }

    #[test]
    fn rejects_bad_step_and_init() {
        let one = LaurentLoop::identity();
        assert!(integrate_axis(&flat_x(), Axis::X, (0.0, 1.0), &one, 0.0).is_err());
        let bad = LaurentLoop::constant(Mat2::IDENTITY.scale_re(2.0));
        assert!(integrate_axis(&flat_x(), Axis::X, (0.0, 1.0), &bad, 0.1).is_err());
    }

    #[test]
    fn coarse_step_reports_drift() {
        let e = Mat2::offdiag(c(0.0, 20.0), c(0.0, 20.0));
        let fast = AxisPotential::new((0.0, 1.0), move |_| LaurentLoop::monomial(1, e));
        let r = integrate_axis(&fast, Axis::X, (0.0, 1.0), &LaurentLoop::identity(), 0.5);
        assert!(matches!(r, Err(PsError::IntegrationDrift { .. })));
    }

    /// Logarithm of an SU(2) matrix near the identity.
    fn su2_log(m: Mat2) -> Mat2 {
        let th = (0.5 * m.trace().re).clamp(-1.0, 1.0).acos();
        let skew = (m - m.adjoint()).scale_re(0.5);
        if th < 1e-12 {
            skew
        } else {
            skew.scale_re(th / th.sin())
        }
    }

    /// `log(G(t)⁻¹ G(t + h))/h` is second-order close to `η(t + h/2)`.
    #[test]
    fn local_residual_is_second_order() {
        let p = normalized_from_boundary(&BoundaryAngles::soliton((0.0, 1.0), (0.0, 1.0))).unwrap();
        let worst = |h: f64| {
            let path = integrate_axis(&p.eta_y, Axis::Y, (0.0, 1.0), &LaurentLoop::identity(), h).unwrap();
            let mut worst: f64 = 0.0;
            for w in path.samples.windows(2) {
                let ((t0, g0), (t1, g1)) = (&w[0], &w[1]);
                let mid = p.eta_y.at(0.5 * (t0 + t1));
                for lam in [0.5, 1.0, 2.0] {
                    let q = su2_log(g0.eval_real(lam).adjoint() * g1.eval_real(lam)).scale_re(1.0 / (t1 - t0));
                    worst = worst.max((q - mid.eval_real(lam)).norm());
                }
            }
            worst
        };
        let (e1, e2) = (worst(1.0 / 32.0), worst(1.0 / 64.0));
        assert!(e2 < 1e-3, "{e2}");
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn frames_at_matches_path() {
        let p = normalized_from_boundary(&BoundaryAngles::soliton((-1.0, 1.0), (-1.0, 1.0))).unwrap();
        let step = 1.0 / 128.0;
        let path = integrate_axis(&p.eta_x, Axis::X, (0.0, -1.0), &LaurentLoop::identity(), step).unwrap();
        let nodes = [0.5, -1.0, 0.0, -0.25];
        let fr = frames_at(&p.eta_x, &nodes, 0.0, &LaurentLoop::identity(), step, 2.0).unwrap();
        assert!(fr[1].distance(path.end()) < 1e-14);
        assert!(fr[2].distance(&LaurentLoop::identity()) == 0.0);
        assert!(fr[3].distance(&path.samples[32].1) < 1e-14);
    }

    fn kink(g: &GridSpec) -> Vec<f64> {
        (0..g.len())
            .map(|k| {
                let (i, j) = g.ij(k);
                4.0 * (g.x(i) + g.y(j)).exp().atan()
            })
            .collect()
    }

    #[test]
    fn kink_frames_are_path_independent() {
        let g = GridSpec::square((0.0, 1.0), 65).unwrap();
        let one = ScalarFunction::constant(1.0);
        let d = direct_frame_solve(&g, &kink(&g), &one, &one, 1.0, (0, 0), 2, 1e-6).unwrap();
        assert!(d.path_residual < 1e-6, "{}", d.path_residual);
        assert!(d.u.iter().all(|m| m.su2_defect() < 1e-8 || m.unitarity_defect() < 1e-9));
    }

    #[test]
    fn constant_right_angle_is_incompatible() {
        let g = GridSpec::square((0.0, 1.0), 17).unwrap();
        let one = ScalarFunction::constant(1.0);
        let phi = vec![std::f64::consts::FRAC_PI_2; g.len()];
        let r = direct_frame_solve(&g, &phi, &one, &one, 1.0, (0, 0), 2, 1e-6);
        assert!(matches!(r, Err(PsError::Incompatible { residual }) if residual > 1e-3));
    }
}
