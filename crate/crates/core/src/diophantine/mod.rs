//! Continued fractions, distances `d(k a, Z)` and the Fourier criteria for
//! the walk on the circle.
//!
//! Quadratic irrationals are handled in exact integer arithmetic; decimal
//! literals carry an explicit uncertainty radius that is propagated.

mod cf;
mod number;

pub use cf::{cf_expand, convergents, verify_convergents, Convergent, ConvergentCheck, Expansion};
pub use number::{IrrationalSpec, RealNumber};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{diagnose, SeriesDiagnostic};
use crate::error::{Error, Result};
use crate::numerics::fit_line;
use crate::transfer::{CircleKernel, KernelModel, TrigPoly};

/// Fourier coefficient `f_hat(k)`, `k >= 1`; `f_hat(-k)` is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub k: u32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl FourierMode {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Modes `f_hat(k) = scale k^{-exponent}` for `1 <= k <= max_freq`.
pub fn power_modes(scale: f64, exponent: f64, max_freq: u32) -> Vec<FourierMode> {
    (1..=max_freq).map(|k| FourierMode { k, re: scale * (k as f64).powf(-exponent), im: 0.0 }).collect()
}

pub fn validate_modes(modes: &[FourierMode]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::param("modes", "need at least one Fourier mode"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for m in modes {
        if m.k == 0 {
            return Err(Error::param("modes", "frequencies start at 1; the mean is removed"));
        }
        if !seen.insert(m.k) {
            return Err(Error::param("modes", format!("frequency {} given twice", m.k)));
        }
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(Error::param("modes", "coefficients must be finite"));
        }
    }
    Ok(())
}

pub fn trig_poly(modes: &[FourierMode]) -> TrigPoly {
    let pos: Vec<(usize, num_complex::Complex64)> =
        modes.iter().map(|m| (m.k as usize, num_complex::Complex64::new(m.re, m.im))).collect();
    TrigPoly::from_positive(0.0, &pos)
}

/// `d(k x, Z)` with a certified error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub error_bound: f64,
    /// `k x` is exactly an integer (rational input only).
    pub exact_zero: bool,
}

/// `d(k x, Z) = min(frac(k x), 1 - frac(k x))`.
pub fn dist_to_integers(k: i64, x: &RealNumber) -> Result<Distance> {
    if k == 0 {
        return Err(Error::param("k", "must be nonzero"));
    }
    let kb = BigInt::from(k);
    let m = x.floor_multiple(&kb)?;
    match x {
        RealNumber::Quadratic { p, d, q } => {
            // k x - m = (u + k sqrt d) / q with u = k p - m q, evaluated as
            // (u^2 - k^2 d) / (q (u - k sqrt d)) to avoid cancellation.
            let u = &kb * p - &m * q;
            let num = (&u * &u - &kb * &kb * d).to_f64().unwrap();
            let den = u.to_f64().unwrap() - k as f64 * d.to_f64().unwrap().sqrt();
            let frac = num / (den * q.to_f64().unwrap());
            let value = frac.min(1.0 - frac);
            let error_bound = if frac <= 0.5 { 8.0 * f64::EPSILON * frac } else { 8.0 * f64::EPSILON };
            Ok(Distance { value, error_bound, exact_zero: false })
        }
        RealNumber::Interval { lo, hi } => {
            let mr = num_rational::BigRational::from_integer(m);
            let (a, b) = if k < 0 { (hi * &kb - &mr, lo * &kb - &mr) } else { (lo * &kb - &mr, hi * &kb - &mr) };
            let (fa, fb) = (a.to_f64().unwrap(), b.to_f64().unwrap());
            let mid = 0.5 * (fa + fb);
            let value = mid.min(1.0 - mid);
            let error_bound = 0.5 * (fb - fa) + 4.0 * f64::EPSILON;
            if error_bound >= value {
                return Err(Error::Precision(format!(
                    "d({k} a, Z) ~ {value:.3e} is not resolved by the literal (error {error_bound:.3e})"
                )));
            }
            Ok(Distance { value, error_bound, exact_zero: false })
        }
        RealNumber::Rational(r) => {
            let f = r * &kb - num_rational::BigRational::from_integer(m);
            let frac = f.to_f64().unwrap();
            let value = frac.min(1.0 - frac);
            Ok(Distance { value, error_bound: 0.0, exact_zero: f.is_zero() })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub epsilon: f64,
    pub checked_up_to: u64,
    /// `(k, d(k a, Z))` with `d < k^{-1-epsilon}`.
    pub violations: Vec<(u64, f64)>,
}

impl AuditReport {
    /// Violations at `k > after`.
    pub fn violations_beyond(&self, after: u64) -> Vec<(u64, f64)> {
        self.violations.iter().copied().filter(|v| v.0 > after).collect()
    }

    pub fn summary(&self) -> String {
        match self.violations.last() {
            None => format!("no violation up to K = {}", self.checked_up_to),
            Some(&(k, _)) => format!(
                "{} violations up to K = {}, the largest at k = {k}; none in ({k}, {}]",
                self.violations.len(),
                self.checked_up_to,
                self.checked_up_to
            ),
        }
    }
}

/// All `1 <= k <= k_max` with `d(k a, Z) < k^{-1-epsilon}`.
pub fn badly_approximable_audit(x: &RealNumber, epsilon: f64, k_max: u64) -> Result<AuditReport> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive; at zero every irrational has infinitely many hits"));
    }
    let found: Result<Vec<Vec<(u64, f64)>>> = (0..k_max.div_ceil(4096))
        .into_par_iter()
        .map(|chunk| {
            let mut out = Vec::new();
            for k in chunk * 4096 + 1..=((chunk + 1) * 4096).min(k_max) {
                let d = dist_to_integers(k as i64, x)?;
                let threshold = (k as f64).powf(-1.0 - epsilon);
                if d.value + d.error_bound < threshold || d.exact_zero {
                    out.push((k, d.value));
                } else if d.value - d.error_bound < threshold {
                    return Err(Error::Precision(format!("cannot decide the audit inequality at k = {k}")));
                }
            }
            Ok(out)
        })
        .collect();
    Ok(AuditReport { epsilon, checked_up_to: k_max, violations: found?.into_iter().flatten().collect() })
}

/// `min_{k <= k_max} k d(k a, Z)` and its argmin.
pub fn min_scaled_distance(x: &RealNumber, k_max: u64) -> Result<(u64, f64)> {
    let vals: Result<Vec<(u64, f64)>> = (1..=k_max)
        .into_par_iter()
        .map(|k| Ok((k, k as f64 * dist_to_integers(k as i64, x)?.value)))
        .collect();
    Ok(vals?.into_iter().fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParouxReport {
    /// `sum_{0 < |k| <= K} |f_hat(k)|^2 / d(k a, Z)^2`, cumulative in `K`.
    pub partial_sums: Vec<f64>,
    /// Subtotals over `2^N <= |k| < 2^{N+1}`.
    pub blocks: Vec<f64>,
    /// Fitted ratio of consecutive block subtotals (log-linear fit).
    pub block_ratio: Option<f64>,
}

/// Partial sums of `sum |f_hat(k)|^2 / d(k a, Z)^2` over `0 < |k| <= k_max`
/// for `|f_hat(k)| = coefficient(k)`.
pub fn paroux_sum(coefficient: impl Fn(u64) -> f64 + Sync, x: &RealNumber, k_max: u64) -> Result<ParouxReport> {
    let terms: Result<Vec<f64>> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let c = coefficient(k);
            if c == 0.0 {
                return Ok(0.0);
            }
            let d = dist_to_integers(k as i64, x)?;
            if d.exact_zero {
                return Err(Error::Model(format!("k = {k} hits an integer: the number is rational")));
            }
            Ok(2.0 * c * c / (d.value * d.value))
        })
        .collect();
    let terms = terms?;
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    let blocks = dyadic_blocks(&terms);
    let block_ratio = fitted_ratio(&blocks);
    Ok(ParouxReport { partial_sums, blocks, block_ratio })
}

/// Subtotals of `terms[k - 1]` over `2^N <= k < 2^{N+1}` (complete blocks only).
fn dyadic_blocks(terms: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut n = 0;
    while (1usize << (n + 1)) - 1 <= terms.len() {
        out.push(terms[(1 << n) - 1..(1 << (n + 1)) - 1].iter().sum());
        n += 1;
    }
    out
}

fn fitted_ratio(blocks: &[f64]) -> Option<f64> {
    let tail: Vec<(f64, f64)> = blocks
        .iter()
        .enumerate()
        .skip(blocks.len() / 2)
        .filter(|b| *b.1 > 0.0)
        .map(|(n, b)| (n as f64, b.ln()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
    fit_line(&x, &y).map(|f| f.slope.exp())
}

/// `sup_{0 < a < 1} sum_{n >= 1} n^{-1/2} a^n sqrt(1 - a) / a`, the constant
/// `K` of the geometric-sum comparison; the supremum is approached as `a -> 1`
/// where the ratio tends to `sqrt(pi)`.
pub fn geometric_sum_constant() -> f64 {
    let mut best = std::f64::consts::PI.sqrt();
    for j in 1..=400 {
        let a = 1.0 - 10f64.powf(-4.0 * j as f64 / 400.0);
        let mut s = 0.0;
        let mut p = 1.0;
        for n in 1.. {
            p *= a;
            let t = p / (n as f64).sqrt();
            s += t;
            if t < 1e-17 * s {
                break;
            }
        }
        best = best.max(s * (1.0 - a).sqrt() / a);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisCircleReport {
    /// Terms `n^{-1/2} ||K^n f - m f||_inf`.
    pub left: SeriesDiagnostic,
    /// `C K sum_k |k|^{-1-epsilon} / d(2 k a, Z)` over the support of `f_hat`.
    pub right: f64,
    pub c_constant: f64,
    pub k_constant: f64,
    pub epsilon: f64,
    /// Left partial sum below the right side at every truncation.
    pub holds: bool,
    /// Fitted `D` in `sum_{2^N <= k < 2^{N+1}} 1/d(2 k a, Z) <= D 2^{(N+2)(1+eta)} max(N, 1)`,
    /// `eta = epsilon / 2`, over `N <= log2(k_fit)`.
    pub block_constant: f64,
}

/// Both sides of the `sum n^{-1/2} ||K^n f - m f||` comparison for the walk
/// on the circle, with `f_hat` given by `modes` and `|k|^{1+epsilon} |f_hat(k)| <= C`.
pub fn bis_series_circle(modes: &[FourierMode], x: &RealNumber, epsilon: f64, n_max: usize, k_fit: u64) -> Result<BisCircleReport> {
    validate_modes(modes)?;
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    if x.is_rational() {
        return Err(Error::Model("the walk needs an irrational step".into()));
    }
    let model = KernelModel {
        kernel: CircleKernel::new(x.to_f64()),
        observable: trig_poly(modes),
        noise_var: TrigPoly::zero(),
    };
    let norms = model.cond_mean_norms(n_max);
    let left = diagnose("bis-circle", 1, norms.iter().enumerate().map(|(i, v)| v / ((i + 1) as f64).sqrt()).collect());
    let c_constant = modes.iter().map(|m| (m.k as f64).powf(1.0 + epsilon) * m.abs()).fold(0.0, f64::max);
    let k_constant = geometric_sum_constant();
    let two_a = x.scaled(2);
    let mut right = 0.0;
    for m in modes {
        let d = dist_to_integers(m.k as i64, &two_a)?;
        right += 2.0 * (m.k as f64).powf(-1.0 - epsilon) / d.value;
    }
    right *= c_constant * k_constant;
    let holds = left.partial_sums.iter().all(|&s| s <= right);
    let eta = epsilon / 2.0;
    let inv: Result<Vec<f64>> = (1..=k_fit)
        .into_par_iter()
        .map(|k| Ok(1.0 / dist_to_integers(k as i64, &two_a)?.value))
        .collect();
    let block_constant = dyadic_blocks(&inv?)
        .iter()
        .enumerate()
        .map(|(n, s)| s / (2f64.powf((n as f64 + 2.0) * (1.0 + eta)) * (n.max(1) as f64)))
        .fold(0.0, f64::max);
    Ok(BisCircleReport { left, right, c_constant, k_constant, epsilon, holds, block_constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> RealNumber {
        RealNumber::new(&IrrationalSpec::golden()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let g = golden();
        assert!((dist_to_integers(1, &g).unwrap().value - 0.381_966_011_250_105_1).abs() < 1e-15);
        let half = RealNumber::new(&IrrationalSpec::Rational { num: 1, den: 2 }).unwrap();
        let d = dist_to_integers(2, &half).unwrap();
        assert!(d.exact_zero && d.value == 0.0);
        assert!(dist_to_integers(0, &g).is_err());
    }

    #[test]
    fn distance_at_fibonacci_denominators() {
        let g = golden();
        let c = convergents(&cf_expand(&g, 40).unwrap().quotients);
        for w in c.windows(2).skip(1) {
            let q: i64 = (&w[0].q).try_into().unwrap();
            let qn: f64 = w[1].q.to_f64().unwrap();
            let d = dist_to_integers(q, &g).unwrap();
            assert!(d.value < 1.0 / qn, "q = {q}");
            assert!(d.value > 0.0 && d.value <= 0.5);
        }
    }

    #[test]
    fn liouville_literal_has_violations() {
        let x = RealNumber::new(&IrrationalSpec::liouville(4)).unwrap();
        let a = badly_approximable_audit(&x, 0.1, 10_000).unwrap();
        // d(100 m x, Z) = m 1e-4 drops below (100 m)^{-1.1} up to m = 7.
        for m in 1..=7 {
            assert!(a.violations.iter().any(|v| v.0 == 100 * m), "m = {m}");
        }
        assert!(!a.violations.iter().any(|v| v.0 == 800));
    }

    #[test]
    fn audit_rejects_zero_epsilon() {
        assert!(badly_approximable_audit(&golden(), 0.0, 10).is_err());
    }

    #[test]
    fn golden_audit_violations_stop_at_the_last_small_convergent() {
        // d(q a, Z) ~ 1/(sqrt 5 q) < q^{-1.1} exactly for Fibonacci q < 5^5.
        let a = badly_approximable_audit(&golden(), 0.1, 100_000).unwrap();
        assert_eq!(a.violations.last().unwrap().0, 2584);
        assert!(a.violations_beyond(2584).is_empty());
    }

    #[test]
    fn scaled_distance_bounded_below() {
        let (_, m) = min_scaled_distance(&golden(), 20_000).unwrap();
        assert!(m > 0.38 && m < 0.45, "{m}");
    }

    #[test]
    fn paroux_blocks() {
        let g = golden();
        let decaying = paroux_sum(|k| (k as f64).powi(-2), &g, 1 << 14).unwrap();
        assert!(decaying.block_ratio.unwrap() < 0.7);
        let flat = paroux_sum(|k| 1.0 / k as f64, &g, 1 << 14).unwrap();
        assert!(flat.block_ratio.unwrap() > 0.8);
        let single = paroux_sum(|k| if k == 1 { 0.5 } else { 0.0 }, &g, 64).unwrap();
        let exact = 2.0 * 0.25 / (0.381_966_011_250_105_1f64).powi(2);
        assert!((single.partial_sums.last().unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn bis_circle_single_mode() {
        let modes = [FourierMode { k: 1, re: 0.5, im: 0.0 }];
        let r = bis_series_circle(&modes, &golden(), 0.5, 2000, 1 << 10).unwrap();
        let alpha = (2.0 * std::f64::consts::PI * golden().to_f64()).cos().abs();
        let closed: f64 = (1..=2000).map(|n| alpha.powi(n) / (n as f64).sqrt()).sum();
        assert!((r.left.total() - closed).abs() < 1e-9);
        assert!(r.holds);
        assert!(r.k_constant >= std::f64::consts::PI.sqrt());
    }

    #[test]
    fn bis_circle_power_modes() {
        let r = bis_series_circle(&power_modes(1.0, 2.0, 32), &golden(), 1.0, 4000, 1 << 12).unwrap();
        assert!(r.holds && r.right.is_finite());
        assert!(r.block_constant > 0.0 && r.block_constant.is_finite());
    }
}
