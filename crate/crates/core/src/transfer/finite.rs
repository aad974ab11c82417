use nalgebra::{DMatrix, DVector};

use super::Kernel;
use crate::error::{Error, Result};

/// Kernel on a finite state space `{0, ..., d-1}` stored as sparse rows.
/// States are passed around as `f64` indices.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    rows: Vec<Vec<(usize, f64)>>,
    pi: Vec<f64>,
}

const ROW_TOL: f64 = 1e-12;

impl FiniteKernel {
    /// Build from sparse rows; `pi` is solved for when not supplied.
    pub fn new(rows: Vec<Vec<(usize, f64)>>, pi: Option<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::param("transition", "empty state space"));
        }
        for (i, row) in rows.iter().enumerate() {
            let s: f64 = row.iter().map(|e| e.1).sum();
            if (s - 1.0).abs() > ROW_TOL || row.iter().any(|&(j, p)| j >= d || p < 0.0) {
                return Err(Error::param("transition", format!("row {i} is not a probability vector")));
            }
        }
        let pi = match pi {
            Some(p) => p,
            None => stationary_distribution(&to_dense(&rows))?,
        };
        let k = Self { rows, pi };
        let residual = k.stationarity_residual();
        if residual > 1e-10 {
            return Err(Error::Model(format!("supplied law is not invariant (residual {residual:.2e})")));
        }
        Ok(k)
    }

    pub fn from_dense(p: &[Vec<f64>]) -> Result<Self> {
        let d = p.len();
        if p.iter().any(|r| r.len() != d) {
            return Err(Error::param("transition", "matrix must be square"));
        }
        let rows = p
            .iter()
            .map(|r| r.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(j, &v)| (j, v)).collect())
            .collect();
        Self::new(rows, None)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// `max_j |(pi P)_j - pi_j|`.
    pub fn stationarity_residual(&self) -> f64 {
        let mut next = vec![0.0; self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                next[j] += self.pi[i] * p;
            }
        }
        next.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Distribution after one step from the distribution `nu`.
    pub fn push_forward(&self, nu: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            if nu[i] != 0.0 {
                for &(j, p) in row {
                    next[j] += nu[i] * p;
                }
            }
        }
        next
    }
}

fn to_dense(rows: &[Vec<(usize, f64)>]) -> Vec<Vec<f64>> {
    let d = rows.len();
    rows.iter()
        .map(|r| {
            let mut v = vec![0.0; d];
            for &(j, p) in r {
                v[j] += p;
            }
            v
        })
        .collect()
}

/// Solve `pi P = pi`, `sum pi = 1` by LU decomposition.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = p.len();
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(j, i)] = p[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(d);
    b[d - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Model("invariant law is not unique (reducible chain)".into()))?;
    Ok(sol.iter().copied().collect())
}

impl Kernel for FiniteKernel {
    type Func = Vec<f64>;

    fn apply(&self, f: &Vec<f64>) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, p)| p * f[j]).sum()).collect()
    }

    fn mean(&self, f: &Vec<f64>) -> f64 {
        self.pi.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    fn sup_abs(&self, f: &Vec<f64>) -> f64 {
        f.iter().zip(&self.pi).filter(|(_, &p)| p > 0.0).fold(0.0, |m, (v, _)| m.max(v.abs()))
    }

    fn constant(&self, c: f64) -> Vec<f64> {
        vec![c; self.len()]
    }

    fn combine(&self, a: f64, f: &Vec<f64>, b: f64, g: &Vec<f64>) -> Vec<f64> {
        f.iter().zip(g).map(|(x, y)| a * x + b * y).collect()
    }

    fn product(&self, f: &Vec<f64>, g: &Vec<f64>) -> Vec<f64> {
        f.iter().zip(g).map(|(x, y)| x * y).collect()
    }

    fn eval(&self, f: &Vec<f64>, state: f64) -> f64 {
        f[state as usize]
    }

    fn branches(&self, state: f64) -> Option<Vec<(f64, f64)>> {
        Some(self.rows[state as usize].iter().map(|&(j, p)| (p, j as f64)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_stationary_law() {
        let k = FiniteKernel::from_dense(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        assert!((k.stationary()[0] - 0.75).abs() < 1e-14);
        assert!(k.stationarity_residual() < 1e-15);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(FiniteKernel::from_dense(&[vec![0.9, 0.2], vec![0.3, 0.7]]).is_err());
    }
}
