use rand::Rng;
use serde::{Deserialize, Serialize};

use super::law::Law;
use crate::conditions::Modulus;
use crate::error::{Error, Result};
use crate::transfer::stationary_distribution;

/// Hard cap on the truncation radius of the moving average.
pub const MAX_RADIUS: usize = 1 << 16;

/// Coefficients `c_i` of `Y_k = sum_i c_i e_{k-i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Coefficients {
    /// `c_i = scale * rho^{|i|}`, for `i >= 0` or for all `i` when two-sided.
    Geometric { scale: f64, rho: f64, two_sided: bool },
    /// `c_i = scale * (1 + |i|)^{-exponent}`.
    Power { scale: f64, exponent: f64, two_sided: bool },
    /// `c_0, c_1, ...` (one-sided, finitely many).
    Explicit { values: Vec<f64> },
}

impl Coefficients {
    pub fn validate(&self) -> Result<()> {
        match self {
            Coefficients::Geometric { scale, rho, .. } => {
                if !scale.is_finite() || *scale == 0.0 {
                    return Err(Error::param("scale", "must be finite and nonzero"));
                }
                if !(*rho >= 0.0 && *rho < 1.0) {
                    return Err(Error::param("rho", format!("{rho} gives a non-summable sequence")));
                }
            }
            Coefficients::Power { scale, exponent, .. } => {
                if !scale.is_finite() || *scale == 0.0 {
                    return Err(Error::param("scale", "must be finite and nonzero"));
                }
                if !(*exponent > 1.0) {
                    return Err(Error::param("exponent", format!("{exponent} gives a non-summable sequence")));
                }
            }
            Coefficients::Explicit { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("values", "need finitely many finite coefficients"));
                }
            }
        }
        Ok(())
    }

    pub fn two_sided(&self) -> bool {
        matches!(
            self,
            Coefficients::Geometric { two_sided: true, .. } | Coefficients::Power { two_sided: true, .. }
        )
    }

    pub fn at(&self, i: i64) -> f64 {
        if i < 0 && !self.two_sided() {
            return 0.0;
        }
        let m = i.unsigned_abs();
        match self {
            Coefficients::Geometric { scale, rho, .. } => {
                if m > i32::MAX as u64 {
                    0.0
                } else {
                    scale * rho.powi(m as i32)
                }
            }
            Coefficients::Power { scale, exponent, .. } => scale * (1.0 + m as f64).powf(-exponent),
            Coefficients::Explicit { values } => values.get(m as usize).copied().unwrap_or(0.0),
        }
    }

    /// `log |c_i|`, finite for indices far beyond double underflow.
    pub fn ln_abs(&self, i: i64) -> f64 {
        if i < 0 && !self.two_sided() {
            return f64::NEG_INFINITY;
        }
        let m = i.unsigned_abs() as f64;
        match self {
            Coefficients::Geometric { scale, rho, .. } => scale.abs().ln() + m * rho.ln(),
            Coefficients::Power { scale, exponent, .. } => scale.abs().ln() - exponent * (1.0 + m).ln(),
            Coefficients::Explicit { .. } => self.at(i).abs().ln(),
        }
    }

    /// `log sum_{k >= n} |c_k|` (nonnegative indices).
    pub fn ln_tail(&self, n: usize) -> f64 {
        match self {
            Coefficients::Geometric { scale, rho, .. } => {
                scale.abs().ln() + n as f64 * rho.ln() - (1.0 - rho).ln()
            }
            Coefficients::Power { scale, exponent, .. } => scale.abs().ln() + hurwitz_zeta(*exponent, n as f64 + 1.0).ln(),
            Coefficients::Explicit { values } => values.iter().skip(n).map(|v| v.abs()).sum::<f64>().ln(),
        }
    }

    /// `sum_i |c_i|` over all indices.
    pub fn abs_sum(&self) -> f64 {
        let one = self.ln_tail(0).exp();
        if self.two_sided() {
            2.0 * one - self.at(0).abs()
        } else {
            one
        }
    }

    /// `sum_{|i| > m} |c_i|`.
    pub fn truncation_tail(&self, m: usize) -> f64 {
        let t = self.ln_tail(m + 1).exp();
        if self.two_sided() {
            2.0 * t
        } else {
            t
        }
    }
}

/// `zeta(s, q) = sum_{k >= 0} (q + k)^{-s}` by direct summation of a head and
/// Euler-Maclaurin for the rest.
fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    let head = 64;
    let mut sum: f64 = (0..head).map(|k| (q + k as f64).powf(-s)).sum();
    let x = q + head as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s) + s / 12.0 * x.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * x.powf(-s - 3.0)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * x.powf(-s - 5.0);
    sum
}

/// Law of the innovations `e_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Innovations {
    Iid { law: Law },
    /// `e_k = values[Z_k] - mean` for a stationary finite chain `Z`.
    Chain { transition: Vec<Vec<f64>>, values: Vec<f64> },
}

/// `H` applied to the moving averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinearObservable {
    /// `X_k = Y_k`.
    Identity,
    /// `X_k = sum_l weights[l] sgn(Y_{k-l}) |Y_{k-l}|^alpha`; needs symmetric innovations.
    OddHolder { alpha: f64, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub coefficients: Coefficients,
    pub innovations: Innovations,
    pub observable: LinearObservable,
    /// Target for `(b - a) sum_{|i| > M} |c_i|`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone)]
enum Source {
    Iid(Law),
    Chain { cumulative: Vec<Vec<f64>>, start: Vec<f64>, values: Vec<f64>, pi: Vec<f64> },
}

/// A truncated two-sided moving average passed through `H`.
#[derive(Debug, Clone)]
pub struct LinearProcess {
    spec: LinearSpec,
    source: Source,
    radius: usize,
    taps: Vec<(i64, f64)>,
    range: (f64, f64),
    truncation_error: f64,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = p.iter().map(|v| { acc += v; acc }).collect();
    if let Some(last) = c.last_mut() {
        *last = 1.0;
    }
    c
}

fn draw(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl LinearProcess {
    pub fn new(spec: LinearSpec) -> Result<Self> {
        spec.coefficients.validate()?;
        if !(spec.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        let (source, range, symmetric) = match &spec.innovations {
            Innovations::Iid { law } => {
                law.validate()?;
                (Source::Iid(*law), law.support(), law.is_symmetric())
            }
            Innovations::Chain { transition, values } => {
                if values.len() != transition.len() {
                    return Err(Error::param("values", "one value per chain state"));
                }
                let pi = stationary_distribution(transition)?;
                let mean: f64 = pi.iter().zip(values).map(|(p, v)| p * v).sum();
                let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
                let lo = centred.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = centred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let symmetric = {
                    let mut pairs: Vec<(f64, f64)> = centred.iter().copied().zip(pi.iter().copied()).collect();
                    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    pairs.iter().zip(pairs.iter().rev()).all(|(x, y)| (x.0 + y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12)
                };
                let source = Source::Chain {
                    cumulative: transition.iter().map(|r| cumulative(r)).collect(),
                    start: cumulative(&pi),
                    values: centred,
                    pi,
                };
                (source, (lo, hi), symmetric)
            }
        };
        if let LinearObservable::OddHolder { alpha, weights } = &spec.observable {
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                return Err(Error::param("alpha", format!("{alpha} not in (0, 1]")));
            }
            if weights.is_empty() {
                return Err(Error::param("weights", "need at least one lag weight"));
            }
            if !symmetric {
                return Err(Error::Model("odd observables need a symmetric innovation law to stay centred".into()));
            }
        }
        let width = range.1 - range.0;
        let mut radius = 0;
        while width * spec.coefficients.truncation_tail(radius) >= spec.tolerance {
            radius = if radius == 0 { 1 } else { radius * 2 };
            if radius > MAX_RADIUS {
                return Err(Error::Capacity(format!(
                    "moving-average truncation needs a radius beyond {MAX_RADIUS} to reach tolerance {}",
                    spec.tolerance
                )));
            }
        }
        // Shrink back to the smallest radius meeting the tolerance.
        let (mut lo, mut hi) = (radius / 2, radius);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if width * spec.coefficients.truncation_tail(mid) < spec.tolerance {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let radius = hi;
        let first = if spec.coefficients.two_sided() { -(radius as i64) } else { 0 };
        let taps: Vec<(i64, f64)> = (first..=radius as i64)
            .map(|i| (i, spec.coefficients.at(i)))
            .filter(|t| t.1 != 0.0)
            .collect();
        let truncation_error = width * spec.coefficients.truncation_tail(radius);
        Ok(Self { spec, source, radius, taps, range, truncation_error })
    }

    pub fn spec(&self) -> &LinearSpec {
        &self.spec
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `(b - a) sum_{|i| > M} |c_i|`.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// Innovation range `[a, b]`.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    fn y_bound(&self) -> f64 {
        let m = self.range.0.abs().max(self.range.1.abs());
        m * self.taps.iter().map(|t| t.1.abs()).sum::<f64>()
    }

    pub fn bound(&self) -> f64 {
        let y = self.y_bound();
        match &self.spec.observable {
            LinearObservable::Identity => y,
            LinearObservable::OddHolder { alpha, weights } => {
                weights.iter().map(|w| w.abs()).sum::<f64>() * y.powf(*alpha)
            }
        }
    }

    /// Moduli of continuity `w_l` of `H` in its `l`-th argument.
    pub fn moduli(&self) -> Vec<Modulus> {
        match &self.spec.observable {
            LinearObservable::Identity => vec![Modulus::Linear { scale: 1.0 }],
            LinearObservable::OddHolder { alpha, weights } => weights
                .iter()
                .map(|w| Modulus::Power { alpha: *alpha, scale: 2f64.powf(1.0 - alpha) * w.abs() })
                .collect(),
        }
    }

    /// `Delta_i <= sum_l w_l(2 (b - a) |c_{i - l}|)`.
    pub fn delta(&self, i: i64) -> f64 {
        let width = self.range.1 - self.range.0;
        self.moduli()
            .iter()
            .enumerate()
            .map(|(l, w)| w.eval(2.0 * width * self.spec.coefficients.at(i - l as i64).abs()))
            .sum()
    }

    /// Bounds `p_j` on `||P_{k-j}(X_k)||_inf`, `j = 0..n`: exact `|c_j| ||e||`
    /// for the identity with independent innovations, `Delta_j` otherwise.
    pub fn projection_norms(&self, n: usize) -> Vec<f64> {
        match (&self.spec.observable, &self.source) {
            (LinearObservable::Identity, Source::Iid(law)) => {
                let e = law.bound();
                (0..n).map(|j| self.spec.coefficients.at(j as i64).abs() * e).collect()
            }
            _ => (0..n).map(|j| self.delta(j as i64)).collect(),
        }
    }

    fn iid_law(&self) -> Result<Law> {
        match &self.source {
            Source::Iid(law) => Ok(*law),
            Source::Chain { .. } => Err(Error::Model(
                "conditional means of a moving average of chain innovations have no closed form; use the projective bound".into(),
            )),
        }
    }

    /// `||E(X_n | F_0)||_inf` for `n = 1..=n_max`: exact for the identity,
    /// the modulus bound `sum_l w_l((b - a) sum_{i >= n - l} |c_i|)` otherwise.
    pub fn conditional_mean_norms(&self, n_max: usize) -> Result<Vec<f64>> {
        let law = self.iid_law()?;
        let width = self.range.1 - self.range.0;
        Ok((1..=n_max)
            .map(|n| match &self.spec.observable {
                LinearObservable::Identity => law.bound() * self.tail_from(n as i64),
                LinearObservable::OddHolder { .. } => self
                    .moduli()
                    .iter()
                    .enumerate()
                    .map(|(l, w)| w.eval(width * self.tail_from(n as i64 - l as i64)))
                    .sum(),
            })
            .collect())
    }

    fn tail_from(&self, n: i64) -> f64 {
        self.taps.iter().filter(|t| t.0 >= n).map(|t| t.1.abs()).sum()
    }

    /// `||E(S_n | F_0)||_inf` for `n = 1..=n_max`: exact for the identity,
    /// the triangle-inequality bound otherwise.
    pub fn conditional_sum_norms(&self, n_max: usize) -> Result<Vec<f64>> {
        let law = self.iid_law()?;
        if let LinearObservable::OddHolder { .. } = self.spec.observable {
            let means = self.conditional_mean_norms(n_max)?;
            return Ok(means
                .iter()
                .scan(0.0, |s, v| {
                    *s += v;
                    Some(*s)
                })
                .collect());
        }
        // E(S_n | F_0) = sum_{m >= 1} e_{1-m} sum_{k=m}^{m+n-1} c_k.
        let r = self.radius;
        let c: Vec<f64> = (0..=2 * r + n_max + 1).map(|k| if k <= r { self.spec.coefficients.at(k as i64) } else { 0.0 }).collect();
        let mut prefix = vec![0.0; c.len() + 1];
        for k in 0..c.len() {
            prefix[k + 1] = prefix[k] + c[k];
        }
        Ok((1..=n_max)
            .map(|n| {
                law.bound()
                    * (1..=r.max(1))
                        .map(|m| (prefix[(m + n).min(c.len())] - prefix[m.min(c.len())]).abs())
                        .sum::<f64>()
            })
            .collect())
    }

    fn innovations<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        match &self.source {
            Source::Iid(law) => (0..len).map(|_| law.sample(rng)).collect(),
            Source::Chain { cumulative, start, values, .. } => {
                let mut s = draw(start, rng.gen());
                let mut out = Vec::with_capacity(len);
                for _ in 0..len {
                    out.push(values[s]);
                    s = draw(&cumulative[s], rng.gen());
                }
                out
            }
        }
    }

    /// Stationary law of the innovation chain, if any.
    pub fn chain_law(&self) -> Option<&[f64]> {
        match &self.source {
            Source::Chain { pi, .. } => Some(pi),
            Source::Iid(_) => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let lags = match &self.spec.observable {
            LinearObservable::Identity => 0,
            LinearObservable::OddHolder { weights, .. } => weights.len() - 1,
        };
        let r = self.radius;
        let lead = r + lags;
        let trail = if self.spec.coefficients.two_sided() { r } else { 0 };
        // e[t] holds e_{t - lead + 1}, so Y_k needs e[k + lead - 1 - i].
        let e = self.innovations(lead + n + trail, rng);
        let y_at = |k: i64| -> f64 {
            self.taps.iter().map(|&(i, c)| c * e[(k + lead as i64 - 1 - i) as usize]).sum()
        };
        match &self.spec.observable {
            LinearObservable::Identity => (1..=n as i64).map(y_at).collect(),
            LinearObservable::OddHolder { alpha, weights } => {
                let ys: Vec<f64> = (1 - lags as i64..=n as i64).map(y_at).collect();
                (0..n)
                    .map(|k| {
                        weights
                            .iter()
                            .enumerate()
                            .map(|(l, w)| {
                                let y = ys[k + lags - l];
                                w * y.signum() * y.abs().powf(*alpha)
                            })
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn ar(rho: f64) -> LinearProcess {
        LinearProcess::new(LinearSpec {
            coefficients: Coefficients::Geometric { scale: 1.0, rho, two_sided: false },
            innovations: Innovations::Iid { law: Law::Rademacher },
            observable: LinearObservable::Identity,
            tolerance: 1e-8,
        })
        .unwrap()
    }

    #[test]
    fn single_coefficient_is_the_innovation_sequence() {
        let p = LinearProcess::new(LinearSpec {
            coefficients: Coefficients::Explicit { values: vec![1.0] },
            innovations: Innovations::Iid { law: Law::Rademacher },
            observable: LinearObservable::Identity,
            tolerance: 1e-8,
        })
        .unwrap();
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut b = a.clone();
        let x = p.sample(50, &mut a);
        let e: Vec<f64> = (0..50).map(|_| Law::Rademacher.sample(&mut b)).collect();
        assert_eq!(x, e);
        assert_eq!(p.radius(), 0);
    }

    #[test]
    fn truncation_meets_tolerance() {
        let p = ar(0.5);
        assert!(p.truncation_error() < 1e-8);
        assert!(2.0 * Coefficients::Geometric { scale: 1.0, rho: 0.5, two_sided: false }.truncation_tail(p.radius() - 1) >= 1e-8);
    }

    #[test]
    fn conditional_means_are_geometric_tails() {
        let p = ar(0.5);
        let m = p.conditional_mean_norms(10).unwrap();
        for (k, v) in m.iter().enumerate() {
            let exact = 0.5f64.powi(k as i32 + 1) / 0.5;
            assert!((v - exact).abs() < 1e-8);
        }
        // E(S_n | F_0) = sum_m e_{1-m} rho^m (1 - rho^n)/(1 - rho).
        let s = p.conditional_sum_norms(5).unwrap();
        for (k, v) in s.iter().enumerate() {
            let n = k as i32 + 1;
            let exact = (1.0 - 0.5f64.powi(n)) / 0.5 * (0.5 / 0.5);
            assert!((v - exact).abs() < 1e-7, "{v} vs {exact}");
        }
    }

    #[test]
    fn power_tail_uses_zeta() {
        let c = Coefficients::Power { scale: 1.0, exponent: 2.0, two_sided: false };
        let direct: f64 = (10..2_000_000).map(|k| (1.0 + k as f64).powi(-2)).sum();
        let tail = c.ln_tail(10).exp();
        assert!((tail - direct).abs() < 1e-6, "{tail} vs {direct}");
        assert!((c.ln_tail(0).exp() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_values_respect_bound() {
        let p = LinearProcess::new(LinearSpec {
            coefficients: Coefficients::Geometric { scale: 0.5, rho: 0.6, two_sided: true },
            innovations: Innovations::Iid { law: Law::Uniform { c: 1.0 } },
            observable: LinearObservable::OddHolder { alpha: 0.5, weights: vec![1.0, 0.5] },
            tolerance: 1e-8,
        })
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = p.sample(2000, &mut rng);
        assert!(x.iter().all(|v| v.abs() <= p.bound()));
    }

    #[test]
    fn chain_innovations_are_centred() {
        let p = LinearProcess::new(LinearSpec {
            coefficients: Coefficients::Geometric { scale: 1.0, rho: 0.3, two_sided: false },
            innovations: Innovations::Chain { transition: vec![vec![0.9, 0.1], vec![0.3, 0.7]], values: vec![0.0, 1.0] },
            observable: LinearObservable::Identity,
            tolerance: 1e-8,
        })
        .unwrap();
        let (lo, hi) = p.range();
        assert!((lo + 0.25).abs() < 1e-12 && (hi - 0.75).abs() < 1e-12);
        assert!(p.conditional_mean_norms(3).is_err());
    }

    #[test]
    fn rejects_non_summable() {
        let bad = Coefficients::Power { scale: 1.0, exponent: 1.0, two_sided: false };
        assert!(bad.validate().is_err());
    }
}
