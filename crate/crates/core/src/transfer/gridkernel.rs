use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use super::{GridFunction, Kernel};
use crate::error::{Error, Result};

/// Law of the innovation `e` in the iterated map `Y' = rho Y + (1 - rho) e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IfsLaw {
    /// `e` uniform on `[0, 1]`.
    Uniform,
    /// `e` in `{0, 1}` with `P(e = 1) = p`.
    TwoPoint { p: f64 },
}

impl IfsLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            IfsLaw::Uniform => 0.5,
            IfsLaw::TwoPoint { p } => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridMap {
    /// Perron-Frobenius operator of a full-branch piecewise-linear map with
    /// branch intervals of the given lengths (Lebesgue-invariant).
    FullBranch { offsets: Vec<f64>, lengths: Vec<f64> },
    /// Perron-Frobenius operator of the Gauss map w.r.t. its invariant law,
    /// with `terms` explicit inverse branches and the remaining mass lumped.
    Gauss { terms: usize },
    /// Transition kernel of `Y' = rho Y + (1 - rho) e`.
    Ifs { rho: f64, law: IfsLaw },
}

#[derive(Debug, Clone)]
struct Row {
    lo: usize,
    hi: usize,
    full: f64,
    partial: Vec<(usize, f64)>,
}

/// A Markov operator on piecewise-linear functions of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GridKernel {
    map: GridMap,
    cells: usize,
    weights: Vec<f64>,
    rows: Vec<Row>,
}

/// CDF of the unit hat function centred at 0, scaled to total mass 1.
fn hat_cdf(s: f64) -> f64 {
    if s <= -1.0 {
        0.0
    } else if s <= 0.0 {
        0.5 * (1.0 + s) * (1.0 + s)
    } else if s <= 1.0 {
        1.0 - 0.5 * (1.0 - s) * (1.0 - s)
    } else {
        1.0
    }
}

/// Interpolation weights of the node neighbours of `x`.
fn interp(cells: usize, x: f64) -> [(usize, f64); 2] {
    let t = x.clamp(0.0, 1.0) * cells as f64;
    let j = (t.floor() as usize).min(cells - 1);
    let s = t - j as f64;
    [(j, 1.0 - s), (j + 1, s)]
}

impl GridKernel {
    pub fn full_branch(lengths: &[f64], cells: usize) -> Result<Self> {
        if lengths.len() < 2 || lengths.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::param("lengths", "need at least two branches of length in (0, 1)"));
        }
        if (lengths.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::param("lengths", "branch lengths must sum to 1"));
        }
        let mut offsets = Vec::with_capacity(lengths.len());
        let mut acc = 0.0;
        for &l in lengths {
            offsets.push(acc);
            acc += l;
        }
        Ok(Self {
            map: GridMap::FullBranch { offsets, lengths: lengths.to_vec() },
            cells,
            weights: normalised(GridFunction::trapezoid_weights(cells)),
            rows: vec![],
        })
    }

    pub fn integer_beta(beta: u32, cells: usize) -> Result<Self> {
        if beta < 2 {
            return Err(Error::param("beta", "integer beta must be at least 2"));
        }
        Self::full_branch(&vec![1.0 / beta as f64; beta as usize], cells)
    }

    pub fn gauss(cells: usize, terms: usize) -> Self {
        let tw = GridFunction::trapezoid_weights(cells);
        let w = (0..=cells).map(|j| tw[j] * gauss_density(j as f64 / cells as f64)).collect();
        Self { map: GridMap::Gauss { terms }, cells, weights: normalised(w), rows: vec![] }
    }

    pub fn ifs(rho: f64, law: IfsLaw, cells: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::param("rho", format!("{rho} must lie in (0, 1) for a contraction")));
        }
        if let IfsLaw::TwoPoint { p } = law {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::param("p", "must lie in (0, 1)"));
            }
        }
        let h = 1.0 / cells as f64;
        let rows: Vec<Row> = (0..=cells)
            .map(|i| {
                let y = i as f64 * h;
                match law {
                    IfsLaw::TwoPoint { p } => {
                        let mut partial = Vec::with_capacity(4);
                        for (x, q) in [(rho * y, 1.0 - p), (rho * y + 1.0 - rho, p)] {
                            for (j, w) in interp(cells, x) {
                                if w != 0.0 {
                                    partial.push((j, q * w));
                                }
                            }
                        }
                        Row { lo: 1, hi: 0, full: 0.0, partial }
                    }
                    IfsLaw::Uniform => uniform_row(cells, rho * y, rho * y + 1.0 - rho, 1.0 / (1.0 - rho)),
                }
            })
            .collect();
        let mut k = Self { map: GridMap::Ifs { rho, law }, cells, weights: vec![], rows };
        k.weights = k.solve_invariant();
        Ok(k)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Quadrature weights of the invariant law at the nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Invariant density, where known in closed form.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self.map {
            GridMap::FullBranch { .. } => Some(1.0),
            GridMap::Gauss { .. } => Some(gauss_density(x)),
            GridMap::Ifs { .. } => None,
        }
    }

    pub fn grid_fn(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(self.cells, f)
    }

    /// The map `T` itself, for the expanding maps.
    pub fn forward_map(&self, x: f64) -> Option<f64> {
        match &self.map {
            GridMap::FullBranch { offsets, lengths } => {
                let i = offsets.iter().rposition(|&b| b <= x).unwrap_or(0);
                Some(((x - offsets[i]) / lengths[i]).min(1.0))
            }
            GridMap::Gauss { .. } => Some(if x == 0.0 { 0.0 } else { (1.0 / x).fract() }),
            GridMap::Ifs { .. } => None,
        }
    }

    fn apply_rows(&self, f: &[f64]) -> Vec<f64> {
        let mut prefix = Vec::with_capacity(f.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in f {
            acc += v;
            prefix.push(acc);
        }
        self.rows
            .iter()
            .map(|r| {
                let mut s: f64 = r.partial.iter().map(|&(j, c)| c * f[j]).sum();
                if r.lo <= r.hi {
                    s += r.full * (prefix[r.hi + 1] - prefix[r.lo]);
                }
                s
            })
            .collect()
    }

    fn solve_invariant(&self) -> Vec<f64> {
        let n = self.cells + 1;
        let mut nu = vec![1.0 / n as f64; n];
        for _ in 0..100_000 {
            let mut next = vec![0.0; n];
            let mut diff = vec![0.0; n + 1];
            for (i, r) in self.rows.iter().enumerate() {
                for &(j, c) in &r.partial {
                    next[j] += nu[i] * c;
                }
                if r.lo <= r.hi {
                    diff[r.lo] += nu[i] * r.full;
                    diff[r.hi + 1] -= nu[i] * r.full;
                }
            }
            let mut run = 0.0;
            for j in 0..n {
                run += diff[j];
                next[j] += run;
            }
            let change: f64 = next.iter().zip(&nu).map(|(a, b)| (a - b).abs()).sum();
            nu = next;
            if change < 1e-15 {
                break;
            }
        }
        normalised(nu)
    }
}

fn normalised(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

fn gauss_density(x: f64) -> f64 {
    1.0 / ((1.0 + x) * LN_2)
}

/// Row of `g -> (1/len) int_lo^hi g` for the piecewise-linear interpolant.
fn uniform_row(cells: usize, lo: f64, hi: f64, scale: f64) -> Row {
    let h = 1.0 / cells as f64;
    let jl = ((lo / h).floor() as usize).min(cells);
    let ju = ((hi / h).floor() as usize).min(cells);
    let coef = |j: usize| {
        let xj = j as f64 * h;
        scale * h * (hat_cdf((hi - xj) / h) - hat_cdf((lo - xj) / h))
    };
    let mut partial = Vec::new();
    let push_range = |a: usize, b: usize, partial: &mut Vec<(usize, f64)>| {
        for j in a..=b.min(cells) {
            if !partial.iter().any(|e: &(usize, f64)| e.0 == j) {
                let c = coef(j);
                if c != 0.0 {
                    partial.push((j, c));
                }
            }
        }
    };
    if ju < jl + 6 {
        push_range(jl.saturating_sub(1), ju + 1, &mut partial);
        return Row { lo: 1, hi: 0, full: 0.0, partial };
    }
    push_range(jl.saturating_sub(1), jl + 2, &mut partial);
    push_range(ju - 1, ju + 1, &mut partial);
    Row { lo: jl + 3, hi: ju - 2, full: scale * h, partial }
}

impl Kernel for GridKernel {
    type Func = GridFunction;

    fn apply(&self, f: &GridFunction) -> GridFunction {
        let c = self.cells;
        let values = match &self.map {
            GridMap::FullBranch { offsets, lengths } => (0..=c)
                .map(|j| {
                    let x = j as f64 / c as f64;
                    offsets.iter().zip(lengths).map(|(&b, &l)| l * f.eval(b + l * x)).sum()
                })
                .collect(),
            GridMap::Gauss { terms } => (0..=c)
                .map(|j| {
                    let x = j as f64 / c as f64;
                    gauss_branches(x, *terms).iter().map(|&(p, y)| p * f.eval(y)).sum()
                })
                .collect(),
            GridMap::Ifs { .. } => self.apply_rows(f.values()),
        };
        GridFunction::from_values(values).expect("grid has at least two nodes")
    }

    fn mean(&self, f: &GridFunction) -> f64 {
        self.weights.iter().zip(f.values()).map(|(w, v)| w * v).sum()
    }

    fn sup_abs(&self, f: &GridFunction) -> f64 {
        f.sup_abs()
    }

    fn constant(&self, c: f64) -> GridFunction {
        GridFunction::constant(self.cells, c)
    }

    fn combine(&self, a: f64, f: &GridFunction, b: f64, g: &GridFunction) -> GridFunction {
        f.zip_with(g, |x, y| a * x + b * y)
    }

    fn product(&self, f: &GridFunction, g: &GridFunction) -> GridFunction {
        f.zip_with(g, |x, y| x * y)
    }

    fn eval(&self, f: &GridFunction, state: f64) -> f64 {
        f.eval(state)
    }

    fn branches(&self, state: f64) -> Option<Vec<(f64, f64)>> {
        match &self.map {
            GridMap::FullBranch { offsets, lengths } => {
                Some(offsets.iter().zip(lengths).map(|(&b, &l)| (l, b + l * state)).collect())
            }
            GridMap::Gauss { terms } => Some(gauss_branches(state, *terms)),
            GridMap::Ifs { rho, law: IfsLaw::TwoPoint { p } } => {
                Some(vec![(1.0 - p, rho * state), (*p, rho * state + 1.0 - rho)])
            }
            GridMap::Ifs { law: IfsLaw::Uniform, .. } => None,
        }
    }
}

/// Inverse branches `1/(k + x)` of the Gauss map with weights
/// `(1 + x) / ((k + x)(k + x + 1))`. The mass `(1 + x)/z`, `z = terms + 1 + x`,
/// of the remaining branches is placed at their weighted mean
/// `z (psi'(z) - 1/z) = 1/(2z) + 1/(6z^2) - 1/(30z^4) + ...`.
fn gauss_branches(x: f64, terms: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(terms + 1);
    for k in 1..=terms {
        let kx = k as f64 + x;
        out.push(((1.0 + x) / (kx * (kx + 1.0)), 1.0 / kx));
    }
    let z = terms as f64 + 1.0 + x;
    let mean = 0.5 / z + 1.0 / (6.0 * z * z) - 1.0 / (30.0 * z.powi(4));
    out.push(((1.0 + x) / z, mean));
    out
}

/// `K f(x) = beta^{-1} sum_{i < beta} f((x + i) / beta)` on the grid.
pub fn apply_pf_integer_beta(f: &GridFunction, beta: u32) -> Result<GridFunction> {
    let k = GridKernel::integer_beta(beta, f.cells())?;
    Ok(k.apply(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn doubling_kills_cosine() {
        let f = GridFunction::from_fn(GridFunction::DEFAULT_CELLS, |x| (2.0 * PI * x).cos());
        let g = apply_pf_integer_beta(&f, 2).unwrap();
        assert!(g.sup_abs() < 1e-12, "{}", g.sup_abs());
    }

    #[test]
    fn constants_are_preserved() {
        let one = GridFunction::constant(512, 1.0);
        for k in [
            GridKernel::integer_beta(3, 512).unwrap(),
            GridKernel::gauss(512, 50),
            GridKernel::ifs(0.5, IfsLaw::Uniform, 512).unwrap(),
            GridKernel::ifs(0.3, IfsLaw::TwoPoint { p: 0.4 }, 512).unwrap(),
        ] {
            let g = k.apply(&one);
            assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-13));
        }
    }

    #[test]
    fn ifs_mean_of_identity() {
        let k = GridKernel::ifs(0.5, IfsLaw::Uniform, 1024).unwrap();
        let id = k.grid_fn(|x| x);
        assert!((k.mean(&id) - 0.5).abs() < 1e-9, "{}", k.mean(&id));
        // Linear functions are mapped exactly: K id = rho x + (1 - rho)/2.
        let g = k.apply(&id);
        for j in [0, 100, 700, 1024] {
            let x = j as f64 / 1024.0;
            assert!((g.values()[j] - (0.5 * x + 0.25)).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_branch_weights_sum_to_one() {
        for x in [0.0, 0.3, 1.0] {
            let s: f64 = gauss_branches(x, 50).iter().map(|b| b.0).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
