//! Exponential bounds for maxima of partial sums and a Monte Carlo harness
//! that checks them against simulated exceedance frequencies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::clopper_pearson;
use crate::path::max_abs_partial_sum;
use crate::processes::{experiment_id, map_replicas, ModelSpec, ProcessModel};
use crate::transfer::AnyKernelModel;

pub const MIN_REPLICAS: usize = 1000;
pub const CONFIDENCE: f64 = 0.95;

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0) || v.is_infinite() {
        return Err(Error::param(name, "must be finite and nonnegative"));
    }
    Ok(())
}

/// `2 exp(-t^2 / (2 n c^2))` for martingale differences bounded by `c`.
pub fn azuma_bound(n: u64, c: f64, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(c > 0.0) {
        return Err(Error::param("c", "must be positive"));
    }
    check_nonneg("t", t)?;
    Ok(2.0 * (-t * t / (2.0 * n as f64 * c * c)).exp())
}

/// Which indices of the conditional-sum sequence enter the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PuwRange {
    /// `sum_{j=1}^{n}`.
    #[default]
    UpToN,
    /// Every supplied term, standing in for `sum_{j >= 1}`.
    AllSupplied,
}

/// `[||X_1|| + 80 sum_j j^{-3/2} ||E(S_j | F_0)||]`, with `cond_norms[j - 1]`
/// holding `||E(S_j | F_0)||_inf`.
pub fn puw_bracket(n: u64, x_inf: f64, cond_norms: &[f64], range: PuwRange) -> Result<f64> {
    check_nonneg("x_inf", x_inf)?;
    let used = match range {
        PuwRange::UpToN => {
            if (cond_norms.len() as u64) < n {
                return Err(Error::param("cond_norms", format!("need {n} terms, got {}", cond_norms.len())));
            }
            &cond_norms[..n as usize]
        }
        PuwRange::AllSupplied => cond_norms,
    };
    let mut s = 0.0;
    for (j, &v) in used.iter().enumerate() {
        check_nonneg("cond_norms", v)?;
        s += ((j + 1) as f64).powf(-1.5) * v;
    }
    Ok(x_inf + 80.0 * s)
}

/// `4 sqrt(e) exp(-t^2 / (2 n [||X_1|| + 80 sum_j j^{-3/2} ||E(S_j | F_0)||]^2))`.
pub fn puw_bound(n: u64, t: f64, x_inf: f64, cond_norms: &[f64], range: PuwRange) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    check_nonneg("t", t)?;
    let b = puw_bracket(n, x_inf, cond_norms, range)?;
    let pre = 4.0 * 0.5f64.exp();
    if b == 0.0 {
        return Ok(if t > 0.0 { 0.0 } else { pre });
    }
    Ok(pre * (-t * t / (2.0 * n as f64 * b * b)).exp())
}

/// Bounds for `M_n = max_k |sum_{i <= k} g_i X_i|` from projection norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBound {
    /// `D = sum_j p_j`.
    pub d: f64,
    /// `G_n^2 = sum_i g_i^2`.
    pub g2: f64,
}

impl ProjectionBound {
    /// `E exp(t M_n) <= 4 exp(G_n^2 D^2 t^2 / 2)`.
    pub fn moment(&self, t: f64) -> f64 {
        4.0 * (0.5 * self.g2 * self.d * self.d * t * t).exp()
    }

    /// `P(M_n >= x) <= 8 exp(-x^2 / (2 G_n^2 D^2))`.
    pub fn tail(&self, x: f64) -> f64 {
        let v = self.g2 * self.d * self.d;
        if v == 0.0 {
            return if x > 0.0 { 0.0 } else { 8.0 };
        }
        8.0 * (-x * x / (2.0 * v)).exp()
    }
}

pub fn projection_bound(g: &[f64], p: &[f64]) -> Result<ProjectionBound> {
    if g.is_empty() {
        return Err(Error::param("g", "need at least one weight"));
    }
    let mut d = 0.0;
    for &v in p {
        check_nonneg("p", v)?;
        d += v;
    }
    if !d.is_finite() {
        return Err(Error::param("p", "projection norms must be summable"));
    }
    let g2: f64 = g.iter().map(|v| v * v).sum();
    if !g2.is_finite() {
        return Err(Error::param("g", "weights must be finite"));
    }
    Ok(ProjectionBound { d, g2 })
}

/// `2 exp(-delta^2 n / (64 B^2 c))`, valid when `c B / n <= delta / 2`.
pub fn blocking_bound_first_term(n: u64, b: f64, c: u64, delta: f64) -> Result<f64> {
    if n == 0 || c == 0 {
        return Err(Error::param("n", "n and c must be positive"));
    }
    if !(b > 0.0) || !(delta > 0.0) {
        return Err(Error::param("delta", "B and delta must be positive"));
    }
    let lhs = c as f64 * b / n as f64;
    // The boundary case is admissible; allow one rounding step.
    if lhs > delta / 2.0 * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::param("c", format!("block constraint c B / n = {lhs} exceeds delta / 2 = {}", delta / 2.0)));
    }
    Ok(2.0 * (-delta * delta * n as f64 / (64.0 * b * b * c as f64)).exp())
}

/// `max_b |c^{-1} sum_{j in block b} E(X_j | F_{start of b})|` over the
/// consecutive blocks of length `c` of a trajectory; compare with `delta / 4`.
pub fn block_average_statistic(kernel: &AnyKernelModel, states: &[f64], n: usize, c: usize) -> Result<f64> {
    if c == 0 {
        return Err(Error::param("c", "block length must be positive"));
    }
    if states.len() < n + 1 {
        return Err(Error::InsufficientData(format!("need {} states, got {}", n + 1, states.len())));
    }
    let starts: Vec<f64> = (0..n / c).map(|b| states[b * c]).collect();
    Ok(kernel.block_means_at(&starts, c).into_iter().map(|v| (v / c as f64).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominated,
    Violated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Dominated => "dominated",
            Verdict::Violated => "violated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub threshold: f64,
    pub bound: f64,
    pub exceedances: u64,
    pub replicas: u64,
    pub p_hat: f64,
    /// Upper limit of the exact two-sided 95% interval.
    pub ci_upper: f64,
    pub verdict: Verdict,
}

/// The bound a simulation is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundSpec {
    /// Needs a martingale-difference model bounded by `c`.
    Azuma { c: f64 },
    /// Missing inputs are taken from the model.
    Puw {
        #[serde(default)]
        x_inf: Option<f64>,
        #[serde(default)]
        cond_norms: Option<Vec<f64>>,
        #[serde(default)]
        range: PuwRange,
    },
    /// Unit weights; `p` defaults to the model's projection norms.
    Projection {
        #[serde(default)]
        p: Option<Vec<f64>>,
    },
}

impl BoundSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BoundSpec::Azuma { .. } => "azuma",
            BoundSpec::Puw { .. } => "puw",
            BoundSpec::Projection { .. } => "projection",
        }
    }
}

fn is_martingale_difference(model: &ProcessModel) -> bool {
    model.iid_law().is_some() || matches!(model.spec(), ModelSpec::CounterexampleChain { .. })
}

const PROJECTION_TERMS: usize = 20_000;

/// `D = sum_j sup ||P_{k-j}(X_k)||` for the models where it is available:
/// exact for independent sequences and linear processes, and through
/// `||P_{k-j}(X_k)|| <= ||K^j f|| + ||K^{j+1} f||` for kernel models.
pub fn model_projection_sum(model: &ProcessModel) -> Result<f64> {
    if model.iid_law().is_some() {
        return Ok(model.bound());
    }
    if let Some(lp) = model.linear() {
        let r = lp.radius();
        let p = lp.projection_norms(r + 1);
        let one: f64 = p.iter().sum();
        let total = if lp.spec().coefficients.two_sided() { 2.0 * one - p[0] } else { one };
        return Ok(total + lp.truncation_error());
    }
    let kernel = model.kernel().map_err(|_| Error::Model(format!("no projection norms for `{}`", model.name())))?;
    let norms = kernel.cond_mean_norms(PROJECTION_TERMS);
    let last = *norms.last().unwrap();
    if last > 1e-12 {
        return Err(Error::Model(format!(
            "conditional means of `{}` do not decay below 1e-12 within {PROJECTION_TERMS} steps",
            model.name()
        )));
    }
    let mut d = model.bound() + norms[0];
    for w in norms.windows(2) {
        d += w[0] + w[1];
    }
    Ok(d)
}

/// The bound as a function of the threshold, validated against the model.
fn resolve_bound(model: &ProcessModel, spec: &BoundSpec, n: u64) -> Result<Box<dyn Fn(f64) -> Result<f64> + Sync>> {
    const SLACK: f64 = 1e-9;
    match spec {
        BoundSpec::Azuma { c } => {
            if !is_martingale_difference(model) {
                return Err(Error::Model(format!("Azuma needs martingale differences; `{}` is not", model.name())));
            }
            if *c < model.bound() * (1.0 - SLACK) {
                return Err(Error::param("c", format!("below the model bound {}", model.bound())));
            }
            let c = *c;
            Ok(Box::new(move |t| azuma_bound(n, c, t)))
        }
        BoundSpec::Puw { x_inf, cond_norms, range } => {
            let x = x_inf.unwrap_or_else(|| model.bound());
            if x < model.bound() * (1.0 - SLACK) {
                return Err(Error::param("x_inf", format!("below the model bound {}", model.bound())));
            }
            let exact = if is_martingale_difference(model) && model.iid_law().is_some() {
                Some(vec![0.0; n as usize])
            } else {
                model.conditional_sum_norms(n as usize).ok()
            };
            let norms = match (cond_norms, exact) {
                (Some(given), Some(ex)) => {
                    if given.iter().zip(&ex).any(|(g, e)| *g < e * (1.0 - SLACK) - SLACK) {
                        return Err(Error::param("cond_norms", "smaller than the model's conditional sum norms"));
                    }
                    given.clone()
                }
                (Some(given), None) => given.clone(),
                (None, Some(ex)) => ex,
                (None, None) => {
                    return Err(Error::Model(format!("no conditional sum norms for `{}`; supply them", model.name())))
                }
            };
            let range = *range;
            Ok(Box::new(move |t| puw_bound(n, t, x, &norms, range)))
        }
        BoundSpec::Projection { p } => {
            let computed = model_projection_sum(model);
            let d = match (p, computed) {
                (Some(p), Ok(dm)) => {
                    let d: f64 = p.iter().sum();
                    if d < dm * (1.0 - SLACK) {
                        return Err(Error::param("p", format!("sum {d} below the model's projection sum {dm}")));
                    }
                    d
                }
                (Some(p), Err(_)) => p.iter().sum(),
                (None, r) => r?,
            };
            let b = projection_bound(&vec![1.0; n as usize], &[d])?;
            Ok(Box::new(move |x| Ok(b.tail(x))))
        }
    }
}

/// Empirical `P(max_{k <= n} |S_k| >= t)` against the bound at each threshold.
pub fn verify_domination(
    model: &ProcessModel,
    spec: &BoundSpec,
    n: usize,
    thresholds: &[f64],
    replicas: usize,
    master_seed: u64,
) -> Result<Vec<TailBoundReport>> {
    if replicas < MIN_REPLICAS {
        return Err(Error::param("replicas", format!("at least {MIN_REPLICAS}")));
    }
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    for &t in thresholds {
        check_nonneg("thresholds", t)?;
    }
    let bound = resolve_bound(model, spec, n as u64)?;
    let exp = experiment_id(&format!("domination/{}/{}", model.name(), spec.name()));
    let maxima: Result<Vec<f64>> =
        map_replicas(replicas, master_seed, exp, |_, s| Ok(max_abs_partial_sum(&model.sample(n, s)?.values)))
            .into_iter()
            .collect();
    let maxima = maxima?;
    let mut out = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let b = bound(t)?;
        let k = maxima.iter().filter(|&&m| m >= t).count() as u64;
        let r = replicas as u64;
        let (_, hi) = clopper_pearson(k, r, CONFIDENCE);
        out.push(TailBoundReport {
            threshold: t,
            bound: b,
            exceedances: k,
            replicas: r,
            p_hat: k as f64 / r as f64,
            ci_upper: hi,
            verdict: if hi <= b { Verdict::Dominated } else { Verdict::Violated },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{FourierMode, IrrationalSpec};
    use crate::processes::{make_circle_walk, make_iid, Coefficients, Innovations, Law, LinearObservable, LinearSpec};
    use crate::rng::RngStream;

    #[test]
    fn azuma_values() {
        assert_eq!(azuma_bound(10, 1.0, 0.0).unwrap(), 2.0);
        assert!((azuma_bound(100, 1.0, 20.0).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        let (n, c, t) = (50, 1.5, 7.0);
        let r = azuma_bound(n, c, 2.0 * t).unwrap() / azuma_bound(n, c, t).unwrap();
        assert!((r - (-3.0 * t * t / (2.0 * n as f64 * c * c)).exp()).abs() < 1e-14);
        assert!(azuma_bound(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn puw_values() {
        let z = vec![0.0; 100];
        let b = puw_bound(100, 30.0, 1.0, &z, PuwRange::UpToN).unwrap();
        assert!((b - 4.0 * 0.5f64.exp() * (-4.5f64).exp()).abs() < 1e-15);
        assert!((b - 0.0733).abs() < 1e-4);
        assert!((puw_bound(100, 0.0, 1.0, &z, PuwRange::UpToN).unwrap() - 6.5949).abs() < 1e-4);
        assert!(puw_bound(100, 1.0, 1.0, &z[..10], PuwRange::UpToN).is_err());
    }

    #[test]
    fn puw_matches_azuma_exponent() {
        for t in [0.0, 3.0, 11.0] {
            let p = puw_bound(40, t, 2.0, &[0.0; 40], PuwRange::UpToN).unwrap();
            let a = azuma_bound(40, 2.0, t).unwrap();
            assert!((p - 2.0 * 0.5f64.exp() * a).abs() < 1e-13);
        }
    }

    #[test]
    fn projection_values() {
        let b = projection_bound(&[1.0; 100], &[1.0]).unwrap();
        assert_eq!(b.tail(0.0), 8.0);
        assert!((b.tail(20.0) - 8.0 * (-2.0f64).exp()).abs() < 1e-14);
        assert_eq!(b.moment(0.0), 4.0);
    }

    #[test]
    fn blocking_values() {
        let v = blocking_bound_first_term(10_000, 1.0, 10, 0.1).unwrap();
        assert!((v - 2.0 * (-0.15625f64).exp()).abs() < 1e-14);
        assert!((v - 1.711).abs() < 1e-3);
        // c B / n = delta / 2 exactly.
        assert!(blocking_bound_first_term(1000, 1.0, 50, 0.1).is_ok());
        assert!(blocking_bound_first_term(1000, 1.0, 51, 0.1).is_err());
    }

    #[test]
    fn block_statistic_is_zero_for_iid() {
        let m = make_iid(Law::Rademacher).unwrap();
        let tr = m.sample_trajectory(100, RngStream::new(1, 1)).unwrap();
        assert_eq!(block_average_statistic(m.kernel().unwrap(), &tr.states, 100, 10).unwrap(), 0.0);
    }

    #[test]
    fn bounds_nonincreasing() {
        let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let pb = projection_bound(&[1.0; 20], &[0.5, 0.25]).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.1;
            let cur = (
                azuma_bound(20, 1.0, t).unwrap(),
                puw_bound(20, t, 1.0, &[0.1; 20], PuwRange::UpToN).unwrap(),
                pb.tail(t),
            );
            assert!(cur.0 <= prev.0 && cur.1 <= prev.1 && cur.2 <= prev.2);
            prev = cur;
        }
    }

    #[test]
    fn rademacher_dominated() {
        let m = make_iid(Law::Rademacher).unwrap();
        let n = 100;
        let ts = [0.0, 20.0, 30.0];
        let r = verify_domination(&m, &BoundSpec::Puw { x_inf: None, cond_norms: None, range: PuwRange::UpToN }, n, &ts, 2000, 5)
            .unwrap();
        assert!(r.iter().all(|x| x.verdict == Verdict::Dominated));
        assert_eq!(r[0].p_hat, 1.0);
    }

    #[test]
    fn inconsistent_specs_rejected() {
        let m = make_iid(Law::Uniform { c: 2.0 }).unwrap();
        assert!(verify_domination(&m, &BoundSpec::Azuma { c: 1.0 }, 10, &[1.0], 1000, 1).is_err());
        assert!(verify_domination(&m, &BoundSpec::Azuma { c: 2.0 }, 10, &[1.0], 999, 1).is_err());
        let w = make_circle_walk(&IrrationalSpec::golden(), &[FourierMode { k: 1, re: 0.5, im: 0.0 }]).unwrap();
        assert!(verify_domination(&w, &BoundSpec::Azuma { c: 1.0 }, 10, &[1.0], 1000, 1).is_err());
    }

    #[test]
    fn linear_projection_sum() {
        let m = crate::processes::make_linear_process(LinearSpec {
            coefficients: Coefficients::Geometric { scale: 1.0, rho: 0.5, two_sided: true },
            innovations: Innovations::Iid { law: Law::Rademacher },
            observable: LinearObservable::Identity,
            tolerance: 1e-10,
        })
        .unwrap();
        let d = model_projection_sum(&m).unwrap();
        assert!((d - 3.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn circle_projection_sum() {
        let w = make_circle_walk(&IrrationalSpec::golden(), &[FourierMode { k: 1, re: 0.5, im: 0.0 }]).unwrap();
        let d = model_projection_sum(&w).unwrap();
        // sup |f| + |a| + sum_{j >= 1} (|a|^j + |a|^{j+1}) with a = cos(2 pi golden).
        let a = (2.0 * std::f64::consts::PI * 0.618_033_988_749_895f64).cos().abs();
        let want = 1.0 + a + (a + a * a) / (1.0 - a);
        assert!((d - want).abs() < 1e-9, "{d} vs {want}");
    }
}
