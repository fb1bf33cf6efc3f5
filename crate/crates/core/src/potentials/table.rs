//! Loops sampled on a uniform parameter grid.

use super::functions::lagrange4;
use super::AxisPotential;
use crate::error::{PsError, Result};
use crate::loop_algebra::LaurentLoop;

/// Uniformly sampled loops with four-point Lagrange interpolation in between.
#[derive(Clone, Debug)]
pub struct LoopTable {
    t0: f64,
    h: f64,
    values: Vec<LaurentLoop>,
}

impl LoopTable {
    pub fn new(t0: f64, h: f64, values: Vec<LaurentLoop>) -> Result<Self> {
        if values.len() < 4 || !(h > 0.0) {
            return Err(PsError::domain("loop table needs at least 4 samples and a positive step"));
        }
        Ok(LoopTable { t0, h, values })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.h * (self.values.len() - 1) as f64)
    }

    pub fn samples(&self) -> &[LaurentLoop] {
        &self.values
    }

    pub fn at(&self, t: f64) -> LaurentLoop {
        let s = (t - self.t0) / self.h;
        let k = s.round();
        if (s - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < self.values.len() {
            return self.values[k as usize].clone();
        }
        let (base, w) = lagrange4(self.t0, self.h, self.values.len(), t);
        let mut acc = self.values[base].scale_re(w[0]);
        for (j, wj) in w.iter().enumerate().skip(1) {
            acc = acc.add_loop(&self.values[base + j].scale_re(*wj));
        }
        acc
    }

    pub fn into_axis(self) -> AxisPotential {
        let d = self.domain();
        AxisPotential::new(d, move |t| self.at(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_algebra::{c, Mat2};

    #[test]
    fn exact_on_cubic_coefficients() {
        let f = |t: f64| LaurentLoop::monomial(1, Mat2::offdiag(c(t * t * t - t, 0.0), c(0.0, 2.0 * t)));
        let values = (0..9).map(|k| f(k as f64 * 0.125)).collect();
        let tab = LoopTable::new(0.0, 0.125, values).unwrap();
        for t in [0.0, 0.06, 0.5, 0.93, 1.0] {
            assert!(tab.at(t).distance(&f(t)) < 1e-14);
        }
    }
}
