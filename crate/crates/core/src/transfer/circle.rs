use num_complex::Complex64;
use std::f64::consts::PI;

use super::{GridFunction, Kernel};

/// Real trigonometric polynomial `sum_{|k| <= K} c_k e^{2 pi i k x}` with
/// `c_{-k} = conj(c_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    max_freq: usize,
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self { max_freq: 0, coeffs: vec![Complex64::new(0.0, 0.0)] }
    }

    pub fn constant(c: f64) -> Self {
        Self { max_freq: 0, coeffs: vec![Complex64::new(c, 0.0)] }
    }

    /// From `c_0` (real) and `c_k` for `k >= 1`.
    pub fn from_positive(c0: f64, positive: &[(usize, Complex64)]) -> Self {
        let max_freq = positive.iter().map(|e| e.0).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * max_freq + 1];
        coeffs[max_freq] = Complex64::new(c0, 0.0);
        for &(k, c) in positive {
            coeffs[max_freq + k] += c;
            coeffs[max_freq - k] += c.conj();
        }
        Self { max_freq, coeffs }
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.max_freq {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(k + self.max_freq as i64) as usize]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut s = self.coeff(0).re;
        for k in 1..=self.max_freq {
            let c = self.coeff(k as i64);
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x);
            s += 2.0 * (c * e).re;
        }
        s
    }

    fn widen(&self, m: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i + m - self.max_freq] = *c;
        }
        v
    }

    pub fn combine(a: f64, f: &Self, b: f64, g: &Self) -> Self {
        let m = f.max_freq.max(g.max_freq);
        let (fv, gv) = (f.widen(m), g.widen(m));
        Self { max_freq: m, coeffs: fv.iter().zip(&gv).map(|(x, y)| x * a + y * b).collect() }
    }

    pub fn product(f: &Self, g: &Self) -> Self {
        let m = f.max_freq + g.max_freq;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        for (i, a) in f.coeffs.iter().enumerate() {
            for (j, b) in g.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { max_freq: m, coeffs }
    }

    /// Multiply the `k`-th coefficient by `mult(k)`.
    pub fn scale_modes(&self, mult: impl Fn(i64) -> f64) -> Self {
        let m = self.max_freq as i64;
        Self {
            max_freq: self.max_freq,
            coeffs: self.coeffs.iter().enumerate().map(|(i, c)| c * mult(i as i64 - m)).collect(),
        }
    }
}

/// Walk kernel `K f(x) = (f(x + a) + f(x - a)) / 2` acting on trigonometric
/// polynomials by `c_k -> cos(2 pi k a) c_k`.
#[derive(Debug, Clone)]
pub struct CircleKernel {
    a: f64,
    sup_points: usize,
}

impl CircleKernel {
    pub fn new(a: f64) -> Self {
        Self { a, sup_points: 4096 }
    }

    pub fn step(&self) -> f64 {
        self.a
    }

    pub fn multiplier(&self, k: i64) -> f64 {
        (2.0 * PI * k as f64 * self.a).cos()
    }
}

impl Kernel for CircleKernel {
    type Func = TrigPoly;

    fn apply(&self, f: &TrigPoly) -> TrigPoly {
        f.scale_modes(|k| self.multiplier(k))
    }

    fn mean(&self, f: &TrigPoly) -> f64 {
        f.coeff(0).re
    }

    /// Sup over a uniform grid of the circle that contains `x = 0`.
    fn sup_abs(&self, f: &TrigPoly) -> f64 {
        if f.max_freq == 0 {
            return f.coeff(0).re.abs();
        }
        let m = self.sup_points.max(16 * (2 * f.max_freq + 1));
        (0..m).map(|j| f.eval(j as f64 / m as f64).abs()).fold(0.0, f64::max)
    }

    fn constant(&self, c: f64) -> TrigPoly {
        TrigPoly::constant(c)
    }

    fn combine(&self, a: f64, f: &TrigPoly, b: f64, g: &TrigPoly) -> TrigPoly {
        TrigPoly::combine(a, f, b, g)
    }

    fn product(&self, f: &TrigPoly, g: &TrigPoly) -> TrigPoly {
        TrigPoly::product(f, g)
    }

    fn eval(&self, f: &TrigPoly, state: f64) -> f64 {
        f.eval(state)
    }

    fn branches(&self, state: f64) -> Option<Vec<(f64, f64)>> {
        let up = (state + self.a).rem_euclid(1.0);
        let down = (state - self.a).rem_euclid(1.0);
        Some(vec![(0.5, up), (0.5, down)])
    }
}

/// Grid version of the walk kernel, using the periodic interpolant.
pub fn apply_kernel_circle(f: &GridFunction, a: f64) -> GridFunction {
    let c = f.cells();
    let mut out: Vec<f64> = (0..=c)
        .map(|j| {
            let x = j as f64 / c as f64;
            0.5 * (f.eval_periodic(x + a) + f.eval_periodic(x - a))
        })
        .collect();
    out[c] = out[0];
    GridFunction::from_values(out).expect("grid has at least two nodes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_is_an_eigenfunction() {
        let a = (5f64.sqrt() - 1.0) / 2.0;
        let k = CircleKernel::new(a);
        let f = TrigPoly::from_positive(0.0, &[(1, Complex64::new(0.5, 0.0))]);
        let g = k.apply(&k.apply(&f));
        let c = (2.0 * PI * a).cos();
        for x in [0.0, 0.1, 0.77] {
            assert!((g.eval(x) - c * c * (2.0 * PI * x).cos()).abs() < 1e-14);
        }
        let direct: f64 = k.branches(0.3).unwrap().iter().map(|&(p, y)| p * f.eval(y)).sum();
        assert!((direct - k.apply(&f).eval(0.3)).abs() < 1e-14);
    }

    #[test]
    fn product_of_cosines() {
        let f = TrigPoly::from_positive(0.0, &[(1, Complex64::new(0.5, 0.0))]);
        let sq = TrigPoly::product(&f, &f);
        assert!((sq.coeff(0).re - 0.5).abs() < 1e-15);
        assert!((sq.eval(0.2) - (2.0 * PI * 0.2).cos().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn grid_walk_matches_multiplier() {
        let a = (5f64.sqrt() - 1.0) / 2.0;
        let mut g = GridFunction::from_fn(4096, |x| (2.0 * PI * x).cos());
        for _ in 0..5 {
            g = apply_kernel_circle(&g, a);
        }
        let c = (2.0 * PI * a).cos().powi(5);
        for j in [0usize, 100, 2048, 3000] {
            let x = j as f64 / 4096.0;
            assert!((g.values()[j] - c * (2.0 * PI * x).cos()).abs() < 5.0 * 3e-7);
        }
    }
}
