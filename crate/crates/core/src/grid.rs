//! Rectangular parameter lattices.

use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let g = GridSpec { x_range, y_range, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// `n × n` nodes on the square `[lo, hi]²`.
    pub fn square(range: (f64, f64), n: usize) -> Result<Self> {
        Self::new(range, range, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(PsError::domain(format!("grid needs at least 2 nodes per axis, got {}×{}", self.nx, self.ny)));
        }
        for (name, (lo, hi)) in [("x", self.x_range), ("y", self.y_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(PsError::domain(format!("{name}-range [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.x_range.1
        } else {
            self.x_range.0 + self.hx() * i as f64
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.y_range.1
        } else {
            self.y_range.0 + self.hy() * j as f64
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn is_square(&self) -> bool {
        self.nx == self.ny && self.x_range == self.y_range
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + 1 < self.nx && j + 1 < self.ny
    }

    /// The origin when the lattice contains it, else the lower-left corner.
    pub fn default_basepoint(&self) -> (f64, f64) {
        let pick = |(lo, hi): (f64, f64)| if lo <= 0.0 && 0.0 <= hi { 0.0 } else { lo };
        (pick(self.x_range), pick(self.y_range))
    }

    /// Node index nearest to `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> (usize, usize) {
        let f = |t: f64, lo: f64, h: f64, n: usize| (((t - lo) / h).round().max(0.0) as usize).min(n - 1);
        (f(x, self.x_range.0, self.hx(), self.nx), f(y, self.y_range.0, self.hy(), self.ny))
    }

    /// Same lattice with spacing halved.
    pub fn refined(&self) -> Self {
        GridSpec {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_hit_endpoints() {
        let g = GridSpec::square((0.0, 1.0), 65).unwrap();
        assert_eq!(g.x(64), 1.0);
        assert_eq!(g.x(32), 0.5);
        assert_eq!(g.ij(g.idx(3, 7)), (3, 7));
        assert_eq!(g.default_basepoint(), (0.0, 0.0));
        assert_eq!(g.refined().nx, 129);
        assert!(GridSpec::square((1.0, 1.0), 3).is_err());
        assert!(GridSpec::square((0.0, 1.0), 1).is_err());
    }
}
