//! Potential pairs: construction, gauging, equivariance and the built-ins.

mod amsler;
mod diagonal;
mod functions;
mod table;

use std::sync::Arc;

use crate::error::{PsError, Result};
use crate::loop_algebra::{c, LaurentLoop, Mat2, C64};

pub use amsler::{
    amsler_gamma, amsler_p, cayley, generalized_amsler_example, generalized_amsler_with, AxisSymmetry, AMSLER_DOMAIN,
};
pub use diagonal::{extract_diagonal_potentials, DiagonalDerivative, DiagonalPotentials};
pub use functions::{five_point, lagrange4, CubicSpline, ScalarFunction};
pub use table::LoopTable;

/// Step used for central differences of gauge loops without an analytic derivative.
pub const GAUGE_FD_STEP: f64 = 1e-5;

/// Threshold below which a leading coefficient counts as vanishing.
const LEADING_MIN: f64 = 1e-12;

type LoopFn = Arc<dyn Fn(f64) -> LaurentLoop + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Normalized,
    Generalized,
}

/// One axis of a potential pair: `t ↦ η(t)` on a closed interval.
#[derive(Clone)]
pub struct AxisPotential {
    f: LoopFn,
    pub domain: (f64, f64),
}

impl std::fmt::Debug for AxisPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AxisPotential").field("domain", &self.domain).finish()
    }
}

impl AxisPotential {
    pub fn new(domain: (f64, f64), f: impl Fn(f64) -> LaurentLoop + Send + Sync + 'static) -> Self {
        AxisPotential { f: Arc::new(f), domain }
    }

    #[inline]
    pub fn at(&self, t: f64) -> LaurentLoop {
        (self.f)(t)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 - 1e-12 && t <= self.domain.1 + 1e-12
    }
}

/// Boundary angles and speeds of a normalized pair.
#[derive(Clone, Debug)]
pub struct BoundaryAngles {
    pub alpha: ScalarFunction,
    pub beta: ScalarFunction,
    pub a: ScalarFunction,
    pub b: ScalarFunction,
    pub domain_x: (f64, f64),
    pub domain_y: (f64, f64),
}

impl BoundaryAngles {
    /// Unit speeds.
    pub fn new(alpha: ScalarFunction, beta: ScalarFunction, domain_x: (f64, f64), domain_y: (f64, f64)) -> Self {
        BoundaryAngles {
            alpha,
            beta,
            a: ScalarFunction::constant(1.0),
            b: ScalarFunction::constant(1.0),
            domain_x,
            domain_y,
        }
    }

    pub fn with_speeds(mut self, a: ScalarFunction, b: ScalarFunction) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    /// `α(x) = 4 arctan(eˣ) − π`, `β(y) = 4 arctan(eʸ)`: the kink `φ = 4 arctan(e^{x+y})`.
    pub fn soliton(domain_x: (f64, f64), domain_y: (f64, f64)) -> Self {
        Self::new(
            builtin_angle("soliton_x").unwrap(),
            builtin_angle("soliton_y").unwrap(),
            domain_x,
            domain_y,
        )
    }

    pub fn zero(domain_x: (f64, f64), domain_y: (f64, f64)) -> Self {
        Self::new(ScalarFunction::constant(0.0), ScalarFunction::constant(0.0), domain_x, domain_y)
    }
}

/// Closed-form boundary angles available to configs as `builtin:<name>`.
pub fn builtin_angle(name: &str) -> Option<ScalarFunction> {
    use std::f64::consts::PI;
    let f = match name {
        "zero" => ScalarFunction::constant(0.0),
        // α of the kink, vanishing at 0
        "soliton_x" => ScalarFunction::with_derivative(|x| 4.0 * x.exp().atan() - PI, |x| 2.0 / x.cosh()),
        // β of the kink
        "soliton_y" => ScalarFunction::with_derivative(|y| 4.0 * y.exp().atan(), |y| 2.0 / y.cosh()),
        "sine" => ScalarFunction::with_derivative(|t| 0.5 * (2.0 * t).sin(), |t| (2.0 * t).cos()),
        "cubic" => ScalarFunction::with_derivative(|t| t - 0.4 * t * t * t, |t| 1.0 - 1.2 * t * t),
        "offset" => ScalarFunction::with_derivative(|t| 1.0 + 0.3 * t, |_| 0.3),
        _ => return None,
    };
    Some(f)
}

/// `(i/2) s [[0, e^{iθ}], [e^{−iθ}, 0]]`
fn offdiag_phase(s: f64, theta: f64) -> Mat2 {
    let z = C64::from_polar(1.0, theta);
    Mat2::offdiag(c(0.0, 0.5 * s) * z, c(0.0, 0.5 * s) * z.conj())
}

#[derive(Clone, Debug)]
pub struct PotentialPair {
    pub eta_x: AxisPotential,
    pub eta_y: AxisPotential,
    pub kind: PotentialKind,
    /// Present for pairs built from boundary angles; then α, β, a, b are read from here.
    pub boundary: Option<BoundaryAngles>,
}

impl PotentialPair {
    pub fn generalized(eta_x: AxisPotential, eta_y: AxisPotential) -> Self {
        PotentialPair {
            eta_x,
            eta_y,
            kind: PotentialKind::Generalized,
            boundary: None,
        }
    }

    pub fn domain_x(&self) -> (f64, f64) {
        self.eta_x.domain
    }

    pub fn domain_y(&self) -> (f64, f64) {
        self.eta_y.domain
    }

    /// `(α(x), a(x))` with `ξ₁ˣ = (i/2) a [[0, e^{−iα}], [e^{iα}, 0]]`; α only mod 2π
    /// unless boundary angles are attached.
    pub fn x_leading(&self, x: f64) -> Result<(f64, f64)> {
        if let Some(b) = &self.boundary {
            return Ok((b.alpha.eval(x), b.a.eval(x)));
        }
        let cx = self.eta_x.at(x).coeff(1).m[0][1];
        let a = 2.0 * cx.norm();
        if !(a > LEADING_MIN) {
            return Err(PsError::domain(format!("λ¹ coefficient of η_x vanishes at x = {x}")));
        }
        // e^{−iα} = −2i c / a
        let alpha = -(c(0.0, -2.0) * cx).arg();
        Ok((alpha, a))
    }

    /// `(β(y), b(y))` with `ξ₁ʸ = (i/2) [[0, ρ], [ρ̄, 0]]`, `ρ = −b e^{iβ}`.
    pub fn y_leading(&self, y: f64) -> Result<(f64, f64)> {
        if let Some(b) = &self.boundary {
            return Ok((b.beta.eval(y), b.b.eval(y)));
        }
        let cy = self.eta_y.at(y).coeff(-1).m[0][1];
        let rho = c(0.0, -2.0) * cy;
        let b = rho.norm();
        if !(b > LEADING_MIN) {
            return Err(PsError::domain(format!("λ⁻¹ coefficient of η_y vanishes at y = {y}")));
        }
        Ok(((-rho).arg(), b))
    }

    /// Largest twist or su(2) defect over `n` samples per axis at λ ∈ {1/2, 1, 2}.
    pub fn invariant_defect(&self, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for axis in [&self.eta_x, &self.eta_y] {
            let (lo, hi) = axis.domain;
            for k in 0..n {
                let t = lo + (hi - lo) * k as f64 / (n.max(2) - 1) as f64;
                let e = axis.at(t);
                worst = worst.max(e.check_twist()).max(e.su2_defect_at(&[0.5, 1.0, 2.0]));
            }
        }
        worst
    }
}

/// Normalized pair `η_x = λ (i/2) a [[0, e^{−iα}], [e^{iα}, 0]]`,
/// `η_y = −λ⁻¹ (i/2) b [[0, e^{iβ}], [e^{−iβ}, 0]]`.
pub fn normalized_from_boundary(b: &BoundaryAngles) -> Result<PotentialPair> {
    let a0 = b.alpha.eval(0.0);
    if !(a0.abs() <= 1e-12) {
        return Err(PsError::domain(format!("α(0) must vanish, got {a0:.3e}")));
    }
    for (name, (lo, hi)) in [("x", b.domain_x), ("y", b.domain_y)] {
        if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
            return Err(PsError::domain(format!("{name}-domain [{lo}, {hi}] must contain 0")));
        }
    }
    let alpha = b.alpha.clone();
    let speed_a = b.a.clone();
    let eta_x = AxisPotential::new(b.domain_x, move |x| {
        LaurentLoop::monomial(1, offdiag_phase(speed_a.eval(x), -alpha.eval(x)))
    });
    let beta = b.beta.clone();
    let speed_b = b.b.clone();
    let eta_y = AxisPotential::new(b.domain_y, move |y| {
        LaurentLoop::monomial(-1, offdiag_phase(-speed_b.eval(y), beta.eval(y)))
    });
    Ok(PotentialPair {
        eta_x,
        eta_y,
        kind: PotentialKind::Normalized,
        boundary: Some(b.clone()),
    })
}

/// A parametrized loop `t ↦ q(t)`, optionally with its t-derivative.
#[derive(Clone)]
pub struct GaugeLoop {
    f: LoopFn,
    df: Option<LoopFn>,
}

impl std::fmt::Debug for GaugeLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaugeLoop").field("analytic_derivative", &self.df.is_some()).finish()
    }
}

impl GaugeLoop {
    pub fn new(f: impl Fn(f64) -> LaurentLoop + Send + Sync + 'static) -> Self {
        GaugeLoop { f: Arc::new(f), df: None }
    }

    pub fn with_derivative(
        f: impl Fn(f64) -> LaurentLoop + Send + Sync + 'static,
        df: impl Fn(f64) -> LaurentLoop + Send + Sync + 'static,
    ) -> Self {
        GaugeLoop {
            f: Arc::new(f),
            df: Some(Arc::new(df)),
        }
    }

    pub fn identity() -> Self {
        Self::constant(LaurentLoop::identity())
    }

    pub fn constant(g: LaurentLoop) -> Self {
        let g2 = g.clone();
        Self::with_derivative(move |_| g.clone(), move |_| g2.scale_re(0.0).trim_with(0.0, 0.0))
    }

    /// `exp(s(t) X)` for a twisted su(2)-valued generator `X`, expanded on degrees `[lo, hi]`.
    pub fn exponential(x: LaurentLoop, s: ScalarFunction, lo: i32, hi: i32) -> Self {
        let x2 = x.clone();
        let s2 = s.clone();
        Self::with_derivative(
            move |t| x.scale_re(s.eval(t)).exp(lo, hi).trim_annulus(1e-18),
            move |t| {
                let e = x2.scale_re(s2.eval(t)).exp(lo, hi);
                x2.multiply(&e).truncate(lo, hi).scale_re(s2.derivative(t)).trim_annulus(1e-18)
            },
        )
    }

    #[inline]
    pub fn at(&self, t: f64) -> LaurentLoop {
        (self.f)(t)
    }

    pub fn derivative(&self, t: f64) -> LaurentLoop {
        match &self.df {
            Some(df) => df(t),
            None => {
                let h = GAUGE_FD_STEP;
                (&self.at(t + h) - &self.at(t - h)).scale_re(0.5 / h)
            }
        }
    }

    /// `q⁻¹ η q + q⁻¹ q′` at `t`.
    pub fn act(&self, eta: &LaurentLoop, t: f64) -> LaurentLoop {
        let q = self.at(t);
        let qi = q.adjugate();
        let conj = qi.multiply(eta).multiply(&q);
        conj.add_loop(&qi.multiply(&self.derivative(t))).trim_annulus(1e-18)
    }
}

fn check_gauge(q: &GaugeLoop, domain: (f64, f64), minus: bool, name: &str) -> Result<()> {
    for k in 0..5 {
        let t = domain.0 + (domain.1 - domain.0) * k as f64 / 4.0;
        let g = q.at(t);
        let wrong = g.iter().filter(|(k, _)| if minus { *k > 0 } else { *k < 0 });
        let side_ok = wrong.map(|(_, m)| m.norm()).fold(0.0, f64::max) <= 1e-12;
        if !side_ok {
            let want = if minus { "Λ⁻ (no positive powers)" } else { "Λ⁺ (no negative powers)" };
            return Err(PsError::domain(format!("gauge {name} at t = {t} is not in {want}")));
        }
        let twist = g.check_twist();
        let unit = g.unitarity_defect_at(&[0.5, 1.0, 2.0]);
        if twist > 1e-9 || unit > 1e-8 {
            return Err(PsError::domain(format!(
                "gauge {name} at t = {t} is not a twisted unitary loop (twist {twist:.1e}, unitarity {unit:.1e})"
            )));
        }
    }
    Ok(())
}

/// `η̃ˣ = qx⁻¹ ηˣ qx + qx⁻¹ qx′`, `η̃ʸ = qy⁻¹ ηʸ qy + qy⁻¹ qy′`.
///
/// The gauged pair describes the same surface when its axis frames start
/// from `qx(x₀)` and `qy(y₀)` instead of the identity.
pub fn gauge_transform(p: &PotentialPair, qx: &GaugeLoop, qy: &GaugeLoop) -> Result<PotentialPair> {
    check_gauge(qx, p.domain_x(), true, "qx")?;
    check_gauge(qy, p.domain_y(), false, "qy")?;
    let (ex, ey) = (p.eta_x.clone(), p.eta_y.clone());
    let (gx, gy) = (qx.clone(), qy.clone());
    Ok(PotentialPair::generalized(
        AxisPotential::new(p.domain_x(), move |t| gx.act(&ex.at(t), t)),
        AxisPotential::new(p.domain_y(), move |t| gy.act(&ey.at(t), t)),
    ))
}

/// Spectral sample points for equivariance residuals.
pub fn equivariance_lambdas() -> Vec<C64> {
    let mut v: Vec<C64> = (0..16)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 16.0))
        .collect();
    v.push(c(0.5, 0.0));
    v.push(c(2.0, 0.0));
    v
}

#[derive(Debug, Clone, Copy)]
pub struct EquivarianceResidual {
    pub x: f64,
    pub y: f64,
    /// Samples per axis whose image under γ stayed in the domain.
    pub samples_x: usize,
    pub samples_y: usize,
}

fn axis_equivariance(eta: &AxisPotential, gamma: &ScalarFunction, w: &GaugeLoop) -> Result<(f64, usize)> {
    let (lo, hi) = eta.domain;
    let lams = equivariance_lambdas();
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for k in 0..33 {
        let t = lo + (hi - lo) * k as f64 / 32.0;
        let gt = gamma.eval(t);
        if !gt.is_finite() || !eta.contains(gt) {
            continue;
        }
        let dg = gamma.derivative(t);
        if !(dg.abs() > 1e-12) || !dg.is_finite() {
            return Err(PsError::domain(format!("derivative of γ vanishes at t = {t}")));
        }
        let lhs = eta.at(gt).scale_re(dg);
        let rhs = w.act(&eta.at(t), t);
        for &l in &lams {
            worst = worst.max((lhs.eval_nonzero(l) - rhs.eval_nonzero(l)).norm());
        }
        used += 1;
    }
    if used == 0 {
        return Err(PsError::domain("γ maps no sample of the axis domain back into the domain"));
    }
    Ok((worst, used))
}

/// Residuals of `(η∘γ)·γ′ = w⁻¹ η w + w⁻¹ w′` on both axes.
///
/// 33 samples per axis; samples whose image leaves the domain are skipped.
pub fn check_equivariance(
    p: &PotentialPair,
    gamma1: &ScalarFunction,
    gamma2: &ScalarFunction,
    wx: &GaugeLoop,
    wy: &GaugeLoop,
) -> Result<EquivarianceResidual> {
    let (x, samples_x) = axis_equivariance(&p.eta_x, gamma1, wx)?;
    let (y, samples_y) = axis_equivariance(&p.eta_y, gamma2, wy)?;
    Ok(EquivarianceResidual { x, y, samples_x, samples_y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_algebra::random::twisted_generator;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> (f64, f64) {
        (0.0, 1.0)
    }

    #[test]
    fn zero_angles_give_constant_potentials() {
        let p = normalized_from_boundary(&BoundaryAngles::zero(unit(), unit())).unwrap();
        let e = Mat2::offdiag(c(0.0, 0.5), c(0.0, 0.5));
        for t in [0.0, 0.4, 1.0] {
            assert!(p.eta_x.at(t).distance(&LaurentLoop::monomial(1, e)) < 1e-16);
            assert!(p.eta_y.at(t).distance(&LaurentLoop::monomial(-1, -e)) < 1e-16);
            assert_eq!(p.eta_x.at(t).check_twist(), 0.0);
        }
    }

    #[test]
    fn alpha_must_vanish_at_origin() {
        let b = BoundaryAngles::new(builtin_angle("offset").unwrap(), ScalarFunction::constant(0.0), unit(), unit());
        assert!(normalized_from_boundary(&b).is_err());
    }

    #[test]
    fn soliton_pair_is_twisted_and_skew() {
        let p = normalized_from_boundary(&BoundaryAngles::soliton(unit(), unit())).unwrap();
        assert!(p.invariant_defect(33) < 1e-12);
    }

    #[test]
    fn leading_coefficients_recover_angles() {
        let b = BoundaryAngles::new(builtin_angle("sine").unwrap(), builtin_angle("cubic").unwrap(), (-1.0, 1.0), (-1.0, 1.0))
            .with_speeds(ScalarFunction::constant(1.5), ScalarFunction::constant(0.7));
        let p = normalized_from_boundary(&b).unwrap();
        let q = PotentialPair::generalized(p.eta_x.clone(), p.eta_y.clone());
        for t in [-0.9, 0.0, 0.35] {
            let (al, a) = q.x_leading(t).unwrap();
            let (be, bb) = q.y_leading(t).unwrap();
            assert!((al - b.alpha.eval(t)).abs() < 1e-14 && (a - 1.5).abs() < 1e-14);
            assert!((be - b.beta.eval(t)).abs() < 1e-14 && (bb - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_and_constant_gauges() {
        let p = normalized_from_boundary(&BoundaryAngles::soliton(unit(), unit())).unwrap();
        let same = gauge_transform(&p, &GaugeLoop::identity(), &GaugeLoop::identity()).unwrap();
        let d = LaurentLoop::constant(Mat2::diag_phase(0.3));
        let rot = gauge_transform(&p, &GaugeLoop::constant(d.clone()), &GaugeLoop::identity()).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert!(same.eta_x.at(t).distance(&p.eta_x.at(t)) < 1e-15);
            let expect = d.adjugate().multiply(&p.eta_x.at(t)).multiply(&d);
            assert!(rot.eta_x.at(t).distance(&expect) < 1e-15);
        }
    }

    #[test]
    fn gauge_side_is_checked() {
        let p = normalized_from_boundary(&BoundaryAngles::soliton(unit(), unit())).unwrap();
        let plus = LaurentLoop::monomial(1, Mat2::offdiag(c(0.0, 0.3), c(0.0, 0.3))).exp(-30, 30);
        assert!(gauge_transform(&p, &GaugeLoop::constant(plus), &GaugeLoop::identity()).is_err());
    }

    #[test]
    fn numerical_and_analytic_gauge_derivatives_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = twisted_generator(&mut rng, -2, 0, 0.6);
        let s = ScalarFunction::with_derivative(|t| t * t, |t| 2.0 * t);
        let analytic = GaugeLoop::exponential(x.clone(), s, -40, 0);
        let x2 = x.clone();
        let numeric = GaugeLoop::new(move |t| x2.scale_re(t * t).exp(-40, 0));
        for t in [0.2, 0.7] {
            assert!(analytic.derivative(t).distance(&numeric.derivative(t)) < 1e-9);
        }
    }

    #[test]
    fn identity_symmetry_has_zero_residual() {
        let p = normalized_from_boundary(&BoundaryAngles::soliton(unit(), unit())).unwrap();
        let id = ScalarFunction::identity();
        let r = check_equivariance(&p, &id, &id, &GaugeLoop::identity(), &GaugeLoop::identity()).unwrap();
        assert_eq!((r.x, r.y), (0.0, 0.0));
        assert_eq!(r.samples_x, 33);
    }

    #[test]
    fn shift_breaks_equivariance() {
        let p = normalized_from_boundary(&BoundaryAngles::soliton(unit(), unit())).unwrap();
        let shift = ScalarFunction::with_derivative(|t| t + 0.1, |_| 1.0);
        let id = ScalarFunction::identity();
        let r = check_equivariance(&p, &shift, &id, &GaugeLoop::identity(), &GaugeLoop::identity()).unwrap();
        assert!(r.x > 1e-3);
        assert!(r.samples_x < 33);
    }

    fn exp_gauge(seed: u64, lo: i32, hi: i32, s: ScalarFunction) -> GaugeLoop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = twisted_generator(&mut rng, lo, hi, 0.4);
        GaugeLoop::exponential(x, s, -40, 40)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        /// Gauging by `q₁` then `q₂` equals gauging once by `q₁ q₂`.
        #[test]
        fn gauge_cocycle(seed in any::<u64>()) {
            let p = normalized_from_boundary(&BoundaryAngles::soliton(unit(), unit())).unwrap();
            let q1 = exp_gauge(seed, -2, 0, ScalarFunction::with_derivative(|t| t, |_| 1.0));
            let q2 = exp_gauge(seed.wrapping_add(1), -1, 0, ScalarFunction::with_derivative(|t| t.sin(), |t| t.cos()));
            let (a, b) = (q1.clone(), q2.clone());
            let prod = GaugeLoop::new(move |t| a.at(t).multiply(&b.at(t)).trim_annulus(1e-18));
            let id = GaugeLoop::identity();
            let twice = gauge_transform(&gauge_transform(&p, &q1, &id).unwrap(), &q2, &id).unwrap();
            let once = gauge_transform(&p, &prod, &id).unwrap();
            for t in [0.1, 0.5, 0.9] {
                let (u, v) = (twice.eta_x.at(t), once.eta_x.at(t));
                for l in [0.5, 1.0, 2.0] {
                    prop_assert!((u.eval_real(l) - v.eval_real(l)).norm() < 1e-8);
                }
            }
        }
    }
}
