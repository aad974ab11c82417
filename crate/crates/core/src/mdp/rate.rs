use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::gauss_legendre;

/// Continuous path on `[0, 1]`, linear between breakpoints, with `h(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::param("breakpoints", "need at least two breakpoints, one value each"));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::param("breakpoints", "must start at 0 and end at 1"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("breakpoints", "must be strictly increasing"));
        }
        if values[0] != 0.0 {
            return Err(Error::param("values", "h(0) must be 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "must be finite"));
        }
        Ok(Self { breakpoints, values })
    }

    /// `h(t) = x t`.
    pub fn linear(x: f64) -> Self {
        Self { breakpoints: vec![0.0, 1.0], values: vec![0.0, x] }
    }

    pub fn zero() -> Self {
        Self::linear(0.0)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        let i = b.partition_point(|&s| s <= t).clamp(1, b.len() - 1);
        let (t0, t1) = (b[i - 1], b[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(|v| alpha * v).collect() }
    }

    /// The same path with extra (collinear) breakpoints at `points`.
    pub fn refined(&self, points: &[f64]) -> Self {
        let mut b: Vec<f64> = self.breakpoints.clone();
        b.extend(points.iter().copied().filter(|t| *t > 0.0 && *t < 1.0));
        b.sort_by(f64::total_cmp);
        b.dedup();
        let values = b.iter().map(|&t| self.eval(t)).collect();
        Self { breakpoints: b, values }
    }

    /// `(t_{i-1}, t_i, slope_i)` for each piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (t[0], t[1], (v[1] - v[0]) / (t[1] - t[0])))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// What the rate function does at `sigma^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroSigma {
    /// `+inf` for every path.
    #[default]
    Literal,
    /// `0` on the zero path, `+inf` elsewhere (the `degenerate_zero_sigma` flag).
    DegenerateZero,
}

fn check_sigma(sigma2: f64) -> Result<()> {
    if !(sigma2 >= 0.0) || sigma2.is_infinite() {
        return Err(Error::param("sigma2", "must be finite and nonnegative"));
    }
    Ok(())
}

/// `(1 / 2 sigma^2) int_0^1 h'(u)^2 du`.
pub fn rate_i(h: &PiecewiseLinearPath, sigma2: f64) -> Result<f64> {
    rate_i_with(h, sigma2, ZeroSigma::Literal)
}

pub fn rate_i_with(h: &PiecewiseLinearPath, sigma2: f64, zero: ZeroSigma) -> Result<f64> {
    check_sigma(sigma2)?;
    if sigma2 == 0.0 {
        return Ok(match zero {
            ZeroSigma::DegenerateZero if h.is_zero() => 0.0,
            _ => f64::INFINITY,
        });
    }
    let energy: f64 = h.pieces().map(|(t0, t1, s)| s * s * (t1 - t0)).sum();
    Ok(energy / (2.0 * sigma2))
}

/// `(1 / 2 sigma^2) int_0^1 (h'(u) / g(u))^2 du` for a positive weight `g`,
/// on the path's mesh refined by `grid` equal cells.
pub fn rate_j_weighted<G: Fn(f64) -> f64>(h: &PiecewiseLinearPath, g: G, sigma2: f64, grid: usize) -> Result<f64> {
    check_sigma(sigma2)?;
    if grid == 0 {
        return Err(Error::param("grid", "must be positive"));
    }
    let cuts: Vec<f64> = (1..grid).map(|i| i as f64 / grid as f64).collect();
    let fine = h.refined(&cuts);
    let min_g = fine.breakpoints().iter().map(|&t| g(t)).fold(f64::INFINITY, f64::min);
    if !(min_g > 0.0) {
        return Err(Error::param("g", "weight must stay bounded away from zero"));
    }
    if sigma2 == 0.0 {
        return rate_i(h, 0.0);
    }
    let (x, w) = gauss_legendre(16);
    let mut total = 0.0;
    for (t0, t1, s) in fine.pieces() {
        if s == 0.0 {
            continue;
        }
        let (c, r) = ((t0 + t1) / 2.0, (t1 - t0) / 2.0);
        let inv: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi / g(c + r * xi).powi(2)).sum();
        total += s * s * r * inv;
    }
    Ok(total / (2.0 * sigma2))
}

/// `x^2 / (2 sigma^2)`: the rate of the linear path to `x`, and the
/// infimum of `I` over paths ending at or above `x > 0`.
pub fn endpoint_rate(x: f64, sigma2: f64) -> Result<f64> {
    check_sigma(sigma2)?;
    if sigma2 == 0.0 {
        return Ok(if x == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(x * x / (2.0 * sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!((rate_i(&PiecewiseLinearPath::linear(3.0), 2.0).unwrap() - 9.0 / 4.0).abs() < 1e-15);
        assert_eq!(rate_i(&PiecewiseLinearPath::zero(), 1.0).unwrap(), 0.0);
        let h = PiecewiseLinearPath::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert!((rate_i(&h, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(endpoint_rate(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(endpoint_rate(2.0, 0.5).unwrap(), 4.0);
        assert!(PiecewiseLinearPath::new(vec![0.0, 1.0], vec![0.1, 1.0]).is_err());
        assert!(PiecewiseLinearPath::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4]).is_err());
    }

    #[test]
    fn zero_sigma_conventions() {
        let z = PiecewiseLinearPath::zero();
        assert_eq!(rate_i(&z, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(rate_i_with(&z, 0.0, ZeroSigma::DegenerateZero).unwrap(), 0.0);
        assert_eq!(rate_i_with(&PiecewiseLinearPath::linear(1.0), 0.0, ZeroSigma::DegenerateZero).unwrap(), f64::INFINITY);
        assert_eq!(endpoint_rate(1.0, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn weighted_rate() {
        let h = PiecewiseLinearPath::linear(1.0);
        assert!((rate_j_weighted(&h, |_| 2.0, 1.0, 64).unwrap() - 0.125).abs() < 1e-14);
        let k = PiecewiseLinearPath::new(vec![0.0, 0.3, 1.0], vec![0.0, -1.0, 2.0]).unwrap();
        assert!((rate_j_weighted(&k, |_| 1.0, 0.7, 10).unwrap() - rate_i(&k, 0.7).unwrap()).abs() < 1e-13);
        assert!(rate_j_weighted(&h, |t| t - 0.5, 1.0, 64).is_err());
    }

    #[test]
    fn change_of_time() {
        // With v(t) = sigma^2 int_0^t g^2 and h = w o v, J(h) = (1/2) int_0^{v(1)} w'^2.
        // Take g(t) = 1 + t, sigma^2 = 1, w(s) = s: J(h) = v(1) / 2 = 7/6.
        let m = 4000;
        let b: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let v: Vec<f64> = b.iter().map(|t| ((1.0 + t).powi(3) - 1.0) / 3.0).collect();
        let h = PiecewiseLinearPath::new(b, v).unwrap();
        let j = rate_j_weighted(&h, |t| 1.0 + t, 1.0, 16).unwrap();
        assert!((j - 7.0 / 6.0).abs() < 1e-6, "{j}");
    }

    fn path_strategy() -> impl Strategy<Value = PiecewiseLinearPath> {
        (prop::collection::vec(0.01f64..1.0, 1..8), prop::collection::vec(-3.0f64..3.0, 8)).prop_map(|(gaps, vals)| {
            let total: f64 = gaps.iter().sum();
            let mut b = vec![0.0];
            let mut acc = 0.0;
            for g in &gaps[..gaps.len() - 1] {
                acc += g / total;
                b.push(acc);
            }
            b.push(1.0);
            let mut v = vec![0.0];
            v.extend(vals.iter().take(b.len() - 1));
            PiecewiseLinearPath::new(b, v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn quadratic_homogeneity(h in path_strategy(), a in -4.0f64..4.0, s2 in 0.1f64..5.0) {
            let lhs = rate_i(&h.scaled(a), s2).unwrap();
            let rhs = a * a * rate_i(&h, s2).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn refinement_invariance(h in path_strategy(), pts in prop::collection::vec(0.0f64..1.0, 0..10), s2 in 0.1f64..5.0) {
            let a = rate_i(&h, s2).unwrap();
            let b = rate_i(&h.refined(&pts), s2).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn weighted_is_nonnegative(h in path_strategy(), c in 0.5f64..3.0) {
            prop_assert!(rate_j_weighted(&h, |t| c + t, 1.0, 8).unwrap() >= 0.0);
        }
    }
}
