//! Uniform grids on the line and in phase space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `min, min + h, ..., max` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::InvalidGrid(format!("empty interval [{min}, {max}]")));
        }
        Ok(Self { min, max, n })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    /// Grid with a prescribed spacing; `max` is rounded to land on a node.
    pub fn with_spacing(min: f64, spacing: f64, n: usize) -> Result<Self> {
        Self::new(min, min + spacing * (n as f64 - 1.0), n)
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n as f64 - 1.0)
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let h = self.spacing();
        let inner: f64 = values[1..self.n - 1].iter().sum();
        h * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }
}

/// Product grid in phase space, `x` along rows and `omega` along columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: Grid1D,
    pub omega: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, omega: Grid1D) -> Self {
        Self { x, omega }
    }

    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        let g = Grid1D::symmetric(half_width, n)?;
        Ok(Self { x: g, omega: g })
    }

    pub fn len(&self) -> usize {
        self.x.n * self.omega.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.x.spacing() * self.omega.spacing()
    }

    /// Tensor trapezoid rule for row-major values (`x` major).
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let wx = self.x.trapezoid_weights();
        let wo = self.omega.trapezoid_weights();
        let mut acc = 0.0;
        for (i, row) in values.chunks_exact(self.omega.n).enumerate() {
            let s: f64 = row.iter().zip(&wo).map(|(v, w)| v * w).sum();
            acc += wx[i] * s;
        }
        acc
    }
}

impl Default for Grid2D {
    /// `[-8, 8]^2` with 1024 points per axis.
    fn default() -> Self {
        Self::square(8.0, 1024).expect("static grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(Grid1D::new(1.0, 1.0, 4).is_err());
        assert!(Grid1D::new(2.0, 1.0, 4).is_err());
    }

    #[test]
    fn spacing_and_points() {
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = Grid1D::new(0.0, 2.0, 11).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((g.trapezoid(&v) - 8.0).abs() < 1e-12);
        let g2 = Grid2D::new(g, g);
        let v2 = vec![1.0; g2.len()];
        assert!((g2.trapezoid(&v2) - 4.0).abs() < 1e-12);
    }
}
