use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::processes::{experiment_id, Law};
use crate::rng::RngStream;

const MAX_BINOMIAL_N: u64 = 10_000_000;

/// `log P(N(0, 1) >= z)`, with the Mills-ratio expansion once `erfc` underflows.
pub fn ln_normal_tail(z: f64) -> f64 {
    let q = 0.5 * erfc(z / std::f64::consts::SQRT_2);
    if q > 1e-300 {
        return q.ln();
    }
    let z2 = z * z;
    -0.5 * z2 - (z * (2.0 * std::f64::consts::PI).sqrt()).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `log P(H >= h0)` for `H ~ Bin(n, 1/2)` and `h0 > n/2`, summing terms from
/// `h0` upward until they drop below `1e-15` of the running total.
fn upper_binomial_log(n: u64, h0: u64) -> f64 {
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut term = ln_choose(n, h0) + ln_half_n;
    let mut total = term;
    let mut h = h0;
    while h < n {
        term += ((n - h) as f64 / (h + 1) as f64).ln();
        h += 1;
        let next = crate::numerics::log_add_exp(total, term);
        if term - next < (1e-15f64).ln() {
            total = next;
            break;
        }
        total = next;
    }
    total
}

/// `log P(S_n >= t)` for a sum of `n` independent signs.
pub fn exact_binomial_tail_log(n: u64, t: f64) -> Result<f64> {
    if n == 0 || n > MAX_BINOMIAL_N {
        return Err(Error::param("n", format!("must lie in 1..={MAX_BINOMIAL_N}")));
    }
    if t.is_nan() {
        return Err(Error::param("t", "must be a number"));
    }
    if t > n as f64 {
        return Ok(f64::NEG_INFINITY);
    }
    if t <= -(n as f64) {
        return Ok(0.0);
    }
    // S_n = 2H - n >= t  <=>  H >= ceil((n + t) / 2).
    let h0 = ((n as f64 + t) / 2.0).ceil().max(0.0) as u64;
    if 2 * h0 > n {
        Ok(upper_binomial_log(n, h0))
    } else {
        // P(H >= h0) = 1 - P(H >= n - h0 + 1) by symmetry.
        let q = upper_binomial_log(n, n - h0 + 1);
        Ok((-q.exp_m1()).ln())
    }
}

/// Lattice saddlepoint approximation to `log P(S_n >= t)` for `n` signs,
/// `t` of the parity of `n`:
/// `-n L(e) - log(1 - e^{-2 theta}) + log 2 - log(2 pi n (1 - e^2)) / 2` with
/// `e = t/n`, `theta = atanh e` and `L(e) = ((1+e) log(1+e) + (1-e) log(1-e)) / 2`.
pub fn cramer_binomial_tail_log(n: u64, t: f64) -> Result<f64> {
    let e = t / n as f64;
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::param("t", "need 0 < t < n"));
    }
    let rate = ((1.0 + e) * e.ln_1p() + (1.0 - e) * (-e).ln_1p()) / 2.0;
    let theta = e.atanh();
    Ok(-(n as f64) * rate - (-(-2.0 * theta).exp_m1()).ln() + std::f64::consts::LN_2
        - 0.5 * (2.0 * std::f64::consts::PI * n as f64 * (1.0 - e * e)).ln())
}

/// Tilt with `cgf'(theta) = a`, for `a` strictly inside the support.
pub fn solve_tilt(law: &Law, a: f64) -> Result<f64> {
    let (lo, hi) = law.support();
    if !(a > lo && a < hi) {
        return Err(Error::param("t", format!("mean level {a} outside the open support ({lo}, {hi})")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let sign = a.signum();
    let mut top = 1.0;
    while (law.tilted_mean(sign * top) - a) * sign < 0.0 {
        top *= 2.0;
        if top > 1e12 {
            return Err(Error::Precision(format!("no tilt reaches mean level {a}")));
        }
    }
    let (mut l, mut r) = (0.0, top);
    for _ in 0..200 {
        let mid = 0.5 * (l + r);
        if (law.tilted_mean(sign * mid) - a) * sign < 0.0 {
            l = mid;
        } else {
            r = mid;
        }
    }
    Ok(sign * 0.5 * (l + r))
}

/// Lugannani-Rice approximation to `log P(S_n >= t)` for a continuous law.
pub fn saddlepoint_tail_log(law: &Law, n: u64, t: f64) -> Result<f64> {
    if matches!(law, Law::Rademacher | Law::TwoPoint { .. } | Law::Zero) {
        return Err(Error::Model("the continuous saddlepoint formula needs a law with a density".into()));
    }
    let nf = n as f64;
    let a = t / nf;
    let theta = solve_tilt(law, a)?;
    if theta == 0.0 {
        return Ok(0.5f64.ln());
    }
    let h = 1e-4 * theta.abs().max(1.0);
    let curv = (law.tilted_mean(theta + h) - law.tilted_mean(theta - h)) / (2.0 * h);
    let info = theta * a - law.cgf(theta);
    let r = theta.signum() * (2.0 * nf * info).sqrt();
    let q = theta * (nf * curv).sqrt();
    let phi = (-0.5 * r * r).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let p = (ln_normal_tail(r)).exp() + phi * (1.0 / q - 1.0 / r);
    if p > 0.0 && p.is_normal() {
        Ok(p.ln())
    } else {
        // Leading Bahadur-Rao term when the direct sum underflows.
        Ok(-nf * info - (q * (2.0 * std::f64::consts::PI).sqrt()).ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedEstimate {
    pub log_p: f64,
    /// Delta-method standard error of `log_p`.
    pub se_log: f64,
    pub theta: f64,
    pub hits: u64,
    pub replicas: u64,
}

/// Importance-sampling estimate of `P(S_n >= t)` for an iid sum, sampling
/// from the law tilted to mean `t/n` and reweighting by `exp(-theta S_n + n cgf(theta))`.
pub fn tilted_is_estimator(law: &Law, n: usize, t: f64, replicas: usize, master_seed: u64) -> Result<TiltedEstimate> {
    if n == 0 || replicas < 2 {
        return Err(Error::param("replicas", "need n >= 1 and at least two replicas"));
    }
    let a = t / n as f64;
    let theta = if a <= 0.0 {
        let (lo, _) = law.support();
        if a <= lo {
            return Err(Error::param("t", "threshold below the support of the mean"));
        }
        0.0
    } else {
        solve_tilt(law, a)?
    };
    let shift = n as f64 * law.cgf(theta);
    let exp = experiment_id(&format!("tilted/{n}/{t}/{replicas}"));
    let logs: Vec<Option<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::derive(master_seed, exp, r as u64).rng();
            let s: f64 = (0..n).map(|_| law.sample_tilted(theta, &mut rng)).sum();
            (s >= t).then(|| -theta * s + shift)
        })
        .collect();
    let hits: Vec<f64> = logs.into_iter().flatten().collect();
    if hits.is_empty() {
        return Err(Error::InsufficientData("no exceedance observed under the tilted law".into()));
    }
    let top = hits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s1: f64 = hits.iter().map(|l| (l - top).exp()).sum();
    let s2: f64 = hits.iter().map(|l| (2.0 * (l - top)).exp()).sum();
    let rf = replicas as f64;
    let log_p = top + s1.ln() - rf.ln();
    let ratio = rf * s2 / (s1 * s1);
    let se_log = ((ratio - 1.0).max(0.0) / (rf - 1.0)).sqrt();
    Ok(TiltedEstimate { log_p, se_log, theta, hits: hits.len() as u64, replicas: replicas as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert!((exact_binomial_tail_log(4, 4.0).unwrap() - (1.0f64 / 16.0).ln()).abs() < 1e-14);
        assert!((exact_binomial_tail_log(4, 2.0).unwrap() - (5.0f64 / 16.0).ln()).abs() < 1e-14);
        assert!((exact_binomial_tail_log(4, 0.0).unwrap() - (11.0f64 / 16.0).ln()).abs() < 1e-14);
        assert!((exact_binomial_tail_log(4, 1.0).unwrap() - (5.0f64 / 16.0).ln()).abs() < 1e-14);
        assert_eq!(exact_binomial_tail_log(4, 5.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(exact_binomial_tail_log(4, -4.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_direct_sum() {
        let n = 60u64;
        for t in [-10.0, 0.0, 6.0, 20.0, 58.0] {
            let h0 = ((n as f64 + t) / 2.0f64).ceil() as u64;
            let p: f64 = (h0..=n).map(|h| (ln_choose(n, h) - n as f64 * std::f64::consts::LN_2).exp()).sum();
            assert!((exact_binomial_tail_log(n, t).unwrap() - p.ln()).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn million_steps() {
        let v = exact_binomial_tail_log(1_000_000, 10_000.0).unwrap();
        assert!((v + 53.2).abs() < 0.05, "{v}");
        let c = cramer_binomial_tail_log(1_000_000, 10_000.0).unwrap();
        // The next saddlepoint correction is of order 1 / (n e^2) = 0.01.
        assert!((v - c).abs() < 0.02, "{v} vs {c}");
    }

    #[test]
    fn tilt_solver() {
        let th = solve_tilt(&Law::Rademacher, 0.3).unwrap();
        assert!((th - 0.3f64.atanh()).abs() < 1e-12);
        assert!(solve_tilt(&Law::Rademacher, 1.0).is_err());
        let u = Law::Uniform { c: 1.0 };
        let th = solve_tilt(&u, -0.5).unwrap();
        assert!((u.tilted_mean(th) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn tilted_matches_binomial() {
        let e = tilted_is_estimator(&Law::Rademacher, 10_000, 300.0, 4000, 11).unwrap();
        let exact = exact_binomial_tail_log(10_000, 300.0).unwrap();
        assert!((e.log_p - exact).abs() < 3.0 * e.se_log, "{} vs {exact} (se {})", e.log_p, e.se_log);
    }

    #[test]
    fn untilted_is_plain_monte_carlo() {
        let e = tilted_is_estimator(&Law::Rademacher, 101, 0.0, 20_000, 3).unwrap();
        assert_eq!(e.theta, 0.0);
        assert!((e.log_p - 0.5f64.ln()).abs() < 4.0 * e.se_log);
    }

    #[test]
    fn uniform_saddlepoint() {
        let u = Law::Uniform { c: 1.0 };
        let e = tilted_is_estimator(&u, 10_000, 300.0, 4000, 12).unwrap();
        let s = saddlepoint_tail_log(&u, 10_000, 300.0).unwrap();
        assert!((e.log_p - s).abs() < 3.0 * e.se_log, "{} vs {s} (se {})", e.log_p, e.se_log);
    }

    #[test]
    fn normal_tail_is_continuous_at_switch() {
        let z = 37.5;
        let direct = (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln();
        let z2 = z * z;
        let asym = -0.5 * z2 - (z * (2.0 * std::f64::consts::PI).sqrt()).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln();
        assert!((direct - asym).abs() < 1e-6);
        assert!(ln_normal_tail(60.0).is_finite());
    }
}
