//! Real functions of one variable: closed forms, splines, derivatives.

use std::sync::Arc;

use crate::error::{PsError, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function with an optional analytic derivative.
#[derive(Clone)]
pub struct ScalarFunction {
    f: RealFn,
    df: Option<RealFn>,
    /// Step for the 5-point derivative when no analytic one is supplied.
    pub fd_step: f64,
}

impl std::fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("analytic_derivative", &self.df.is_some())
            .finish()
    }
}

impl ScalarFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFunction {
            f: Arc::new(f),
            df: None,
            fd_step: 1e-4,
        }
    }

    pub fn with_derivative(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction {
            f: Arc::new(f),
            df: Some(Arc::new(df)),
            fd_step: 1e-4,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_derivative(move |_| c, |_| 0.0)
    }

    pub fn identity() -> Self {
        Self::with_derivative(|t| t, |_| 1.0)
    }

    pub fn from_spline(s: CubicSpline) -> Self {
        let s = Arc::new(s);
        let s2 = s.clone();
        let len = s.domain().1 - s.domain().0;
        let mut out = Self::with_derivative(move |t| s.eval(t), move |t| s2.derivative(t));
        out.fd_step = 1e-4 * len;
        out
    }

    /// Scale the default finite-difference step to `1e-4 · len`.
    pub fn with_domain_length(mut self, len: f64) -> Self {
        self.fd_step = 1e-4 * len;
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn has_derivative(&self) -> bool {
        self.df.is_some()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match &self.df {
            Some(df) => df(t),
            None => five_point(|s| self.eval(s), t, self.fd_step),
        }
    }

    /// Pointwise `self + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.f.clone();
        ScalarFunction {
            f: Arc::new(move |t| f(t) + c),
            df: self.df.clone(),
            fd_step: self.fd_step,
        }
    }
}

/// Fourth-order central difference.
pub fn five_point(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

/// Natural cubic spline through `(t_i, v_i)`, linear extrapolation outside.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    t: Vec<f64>,
    v: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 || v.len() != n {
            return Err(PsError::domain("spline needs at least two (t, value) pairs of equal length"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PsError::domain("spline knots must be strictly increasing"));
        }
        if t.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(PsError::domain("spline data must be finite"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for interior second derivatives (Thomas algorithm)
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = t[i] - t[i - 1];
                let h1 = t[i + 1] - t[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = t[i + 1] - t[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        Ok(CubicSpline { t, v, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.t.len();
        match self.t.partition_point(|&ti| ti <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.domain();
        if x < a {
            return self.v[0] + self.derivative(a) * (x - a);
        }
        if x > b {
            return *self.v.last().unwrap() + self.derivative(b) * (x - b);
        }
        let i = self.segment(x);
        let h = self.t[i + 1] - self.t[i];
        let s = (self.t[i + 1] - x) / h;
        let u = (x - self.t[i]) / h;
        s * self.v[i]
            + u * self.v[i + 1]
            + ((s * s * s - s) * self.m[i] + (u * u * u - u) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (a, b) = self.domain();
        let x = x.clamp(a, b);
        let i = self.segment(x);
        let h = self.t[i + 1] - self.t[i];
        let s = (self.t[i + 1] - x) / h;
        let u = (x - self.t[i]) / h;
        (self.v[i + 1] - self.v[i]) / h + ((1.0 - 3.0 * s * s) * self.m[i] + (3.0 * u * u - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

/// 4-point Lagrange interpolation weights on a uniform grid.
///
/// Returns the first index of the stencil and the weights for `x` given
/// nodes `t0 + i h`, `i = 0..n`.
pub fn lagrange4(t0: f64, h: f64, n: usize, x: f64) -> (usize, [f64; 4]) {
    debug_assert!(n >= 4);
    let s = (x - t0) / h;
    let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = s - base as f64;
    // nodes at 0, 1, 2, 3 relative to base
    let w = [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ];
    (base, w)
}
