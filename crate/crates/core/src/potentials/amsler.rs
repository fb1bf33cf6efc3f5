//! Generalized Amsler-type example with a threefold symmetry.
//!
//! `ηˣ(x) = (λ + λ⁻¹) [[0, p(x)], [−p̄(x), 0]]`, `ηʸ(y)` the same function of `y`,
//! where `p(t) = d/dt (Q(w)/w)`, `Q(w) = w³ + w⁻³` and `w = C(t) = (t − i)/(t + i)`.

use std::f64::consts::PI;

use super::{AxisPotential, GaugeLoop, PotentialPair, ScalarFunction};
use crate::loop_algebra::{c, LaurentLoop, Mat2, C64};

/// Default axis interval for both coordinates.
pub const AMSLER_DOMAIN: (f64, f64) = (-0.8, 0.8);

/// Cayley transform `C(t) = (t − i)/(t + i)`.
pub fn cayley(t: f64) -> C64 {
    c(t, -1.0) / c(t, 1.0)
}

/// `p(t) = (2w − 4w⁻⁵) · 2i/(t + i)²`.
pub fn amsler_p(t: f64) -> C64 {
    let w = cayley(t);
    let dw = c(0.0, 2.0) / (c(t, 1.0) * c(t, 1.0));
    (w.scale(2.0) - w.powi(-5).scale(4.0)) * dw
}

/// `γ = C⁻¹ ∘ (e^{2πi/3} ·) ∘ C`, i.e. `tan(arctan t + π/3)`, with its derivative.
pub fn amsler_gamma() -> ScalarFunction {
    let s = 3f64.sqrt();
    ScalarFunction::with_derivative(
        move |t| (t + s) / (1.0 - s * t),
        move |t| 4.0 / ((1.0 - s * t) * (1.0 - s * t)),
    )
}

/// Axis maps and gauges of a candidate symmetry of a potential pair.
#[derive(Clone, Debug)]
pub struct AxisSymmetry {
    pub gamma1: ScalarFunction,
    pub gamma2: ScalarFunction,
    pub wx: GaugeLoop,
    pub wy: GaugeLoop,
    /// Constant value of the gauges when they are constant.
    pub w_const: Option<Mat2>,
}

fn axis(domain: (f64, f64), shift: f64) -> AxisPotential {
    AxisPotential::new(domain, move |t| {
        let p = amsler_p(t) + c(shift, 0.0);
        let m = Mat2::offdiag(p, -p.conj());
        LaurentLoop::from_coeffs(-1, vec![m, Mat2::ZERO, m])
    })
}

/// The example on [`AMSLER_DOMAIN`] with `W = diag(e^{iπ/3}, e^{−iπ/3})`.
pub fn generalized_amsler_example() -> (PotentialPair, AxisSymmetry) {
    generalized_amsler_with(AMSLER_DOMAIN, 0.0)
}

/// As [`generalized_amsler_example`] on `domain` with `p` replaced by `p + shift`.
pub fn generalized_amsler_with(domain: (f64, f64), shift: f64) -> (PotentialPair, AxisSymmetry) {
    let pair = PotentialPair::generalized(axis(domain, shift), axis(domain, shift));
    let w = Mat2::diag_phase(PI / 3.0);
    let wl = GaugeLoop::constant(LaurentLoop::constant(w));
    let sym = AxisSymmetry {
        gamma1: amsler_gamma(),
        gamma2: amsler_gamma(),
        wx: wl.clone(),
        wy: wl,
        w_const: Some(w),
    };
    (pair, sym)
}
