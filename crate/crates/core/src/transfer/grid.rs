use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of a function at the nodes `x_j = j / cells`, `j = 0..=cells`,
/// extended to `[0, 1]` by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    /// Default number of cells (`2^12`, so `2^12 + 1` nodes).
    pub const DEFAULT_CELLS: usize = 1 << 12;

    pub fn from_fn<F: Fn(f64) -> f64>(cells: usize, f: F) -> Self {
        let c = cells.max(1);
        Self { values: (0..=c).map(|j| f(j as f64 / c as f64)).collect() }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::param("values", "a grid needs at least two nodes"));
        }
        Ok(Self { values })
    }

    pub fn constant(cells: usize, c: f64) -> Self {
        Self { values: vec![c; cells.max(1) + 1] }
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.cells() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-linear interpolant at `x`, clamped to `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let c = self.cells();
        let t = x.clamp(0.0, 1.0) * c as f64;
        let j = (t.floor() as usize).min(c - 1);
        let s = t - j as f64;
        if s == 0.0 {
            self.values[j]
        } else {
            self.values[j] + s * (self.values[j + 1] - self.values[j])
        }
    }

    /// Interpolant of the 1-periodic extension (node `cells` duplicates node 0).
    pub fn eval_periodic(&self, x: f64) -> f64 {
        self.eval(x - x.floor())
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }

    /// Trapezoid weights of Lebesgue measure on the grid.
    pub fn trapezoid_weights(cells: usize) -> Vec<f64> {
        let h = 1.0 / cells as f64;
        let mut w = vec![h; cells + 1];
        w[0] = h / 2.0;
        w[cells] = h / 2.0;
        w
    }
}

/// Total variation of the piecewise-linear interpolant, `sum |f_{j+1} - f_j|`.
pub fn total_variation_norm(f: &GridFunction) -> f64 {
    f.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_on_lines() {
        let g = GridFunction::from_fn(8, |x| 3.0 * x - 1.0);
        for x in [0.0, 0.01, 0.37, 0.5, 0.999, 1.0] {
            assert!((g.eval(x) - (3.0 * x - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn total_variation_of_cosine() {
        let g = GridFunction::from_fn(4096, |x| (2.0 * std::f64::consts::PI * x).cos());
        assert!((total_variation_norm(&g) - 4.0).abs() < 1e-12);
    }
}
