//! Numerical diagnostics for the projective, mixing and regularity conditions
//! that drive the moderate deviation results.
//!
//! Every series check returns a [`SeriesDiagnostic`]: the terms, their
//! partial sums, a fitted tail model and a verdict. A finite computation can
//! only suggest summability, so the verdict is a diagnostic.

mod modulus;
mod phi;
mod series;

pub use modulus::Modulus;
pub use phi::phi_coefficients;
pub use series::{
    diagnose, SeriesDiagnostic, TailFit, TailKind, Verdict, CONVERGING_EXPONENT, DIVERGING_EXPONENT,
    MIN_R_SQUARED, ZERO_FLOOR,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, spearman};
use crate::processes::{Coefficients, ProcessModel};
use crate::transfer::AnyKernelModel;

/// Default series length.
pub const DEFAULT_N_MAX: usize = 10_000;

/// A nonnegative sequence given in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sequence {
    /// `scale * ratio^k`.
    Geometric { scale: f64, ratio: f64 },
    /// `scale * max(k, 1)^{-exponent}`.
    Power { scale: f64, exponent: f64 },
    Zero,
    /// Values at `k = 0, 1, ...`, zero beyond.
    Explicit { values: Vec<f64> },
}

impl Sequence {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Sequence::Geometric { scale, ratio } => scale * ratio.powi(k as i32),
            Sequence::Power { scale, exponent } => scale * (k.max(1) as f64).powf(-exponent),
            Sequence::Zero => 0.0,
            Sequence::Explicit { values } => values.get(k).copied().unwrap_or(0.0),
        }
    }
}

/// `sum n^{-3/2} ||E(S_n | F_0)||_inf`, with the dyadic auxiliary quantities
/// `tilde Delta_{r} = sum_{j >= r} 2^{-j/2} ||E(S_{2^j} | F_0)||` and
/// `Delta = ||E(X_1^2 | F_0)||^{1/2} + sum_{j >= 0} 2^{-j/2} ||E(S_{2^j} | F_0)||`
/// (sums over `2^j <= n_max`) recorded in `auxiliary`.
pub fn check_mw(model: &ProcessModel, n_max: usize) -> Result<SeriesDiagnostic> {
    let norms = model.conditional_sum_norms(n_max)?;
    let terms = norms.iter().enumerate().map(|(i, &v)| v * ((i + 1) as f64).powf(-1.5)).collect();
    let mut d = diagnose(format!("mw:{}", model.name()), 1, terms);
    let dyadic: Vec<f64> = (0..)
        .map(|j| 1usize << j)
        .take_while(|&m| m <= n_max)
        .enumerate()
        .map(|(j, m)| norms[m - 1] * 2f64.powf(-(j as f64) / 2.0))
        .collect();
    for r in 0..dyadic.len() {
        d.auxiliary.insert(format!("delta_tilde_r{r:02}"), dyadic[r..].iter().sum());
    }
    if let Ok(km) = model.kernel() {
        let head = km.cond_square_norm_one().sqrt();
        d.auxiliary.insert("delta_inf".into(), head + dyadic.iter().sum::<f64>());
    }
    Ok(d)
}

/// `sum n^{-1/2} ||E(X_n | F_0)||_inf`.
pub fn check_bis(model: &ProcessModel, n_max: usize) -> Result<SeriesDiagnostic> {
    let norms = model.conditional_mean_norms(n_max)?;
    Ok(bis_from_norms(&format!("bis:{}", model.name()), &norms))
}

/// The same series from a given sequence `||E(X_n | F_0)||`, `n = 1, 2, ...`.
pub fn bis_from_norms(name: &str, norms: &[f64]) -> SeriesDiagnostic {
    let terms = norms.iter().enumerate().map(|(i, &v)| v / ((i + 1) as f64).sqrt()).collect();
    diagnose(name, 1, terms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub ns: Vec<usize>,
    pub deviations: Vec<f64>,
    pub spearman: Option<f64>,
    pub pass: bool,
}

/// Deviations identically below this count as exact.
const EXACT_TOL: f64 = 1e-10;

fn decreasing_to_zero(ns: &[usize], dev: &[f64]) -> (Option<f64>, bool) {
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let rho = spearman(&x, dev);
    if dev.iter().all(|&d| d <= EXACT_TOL) {
        return (rho, true);
    }
    let first = dev[0];
    let last = *dev.last().unwrap();
    (rho, rho.is_some_and(|r| r < 0.0) && (last <= 0.1 * first || last <= EXACT_TOL))
}

/// `||n^{-1} E(S_n^2 | F_0) - sigma2||_inf` over `ns`; passes on a negative
/// Spearman trend (or identically zero deviations).
pub fn check_s2inf(model: &ProcessModel, sigma2: f64, ns: &[usize]) -> Result<TrendReport> {
    if ns.len() < 3 {
        return Err(Error::param("ns", "need at least three values of n"));
    }
    let km = model.kernel()?;
    let deviations = km.second_moment_deviation(ns, sigma2);
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let rho = spearman(&x, &deviations);
    let pass = deviations.iter().all(|&d| d <= EXACT_TOL) || rho.is_some_and(|r| r < 0.0);
    Ok(TrendReport { ns: ns.to_vec(), deviations, spearman: rho, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRow {
    pub i: usize,
    pub j: usize,
    pub report: TrendReport,
}

/// `||E(X_i X_j | F_{-n}) - E(X_i X_j)||_inf` for `1 <= i <= j <= max_index`.
pub fn check_mix(model: &ProcessModel, max_index: usize, ns: &[usize]) -> Result<(Vec<MixRow>, bool)> {
    if ns.len() < 2 {
        return Err(Error::param("ns", "need at least two values of n"));
    }
    let km = model.kernel()?;
    let mut rows = Vec::new();
    for i in 1..=max_index {
        for j in i..=max_index {
            let deviations = km.mix_deviation(i, j, ns);
            let (spearman, pass) = decreasing_to_zero(ns, &deviations);
            rows.push(MixRow { i, j, report: TrendReport { ns: ns.to_vec(), deviations, spearman, pass } });
        }
    }
    let pass = rows.iter().all(|r| r.report.pass);
    Ok((rows, pass))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBoundReport {
    /// `2 sum_i Delta_i + 2 sum_i sum_{k >= 1} Delta_{i-k} phi(k)` (truncated).
    pub bound: f64,
    pub series: SeriesDiagnostic,
}

/// Bound on `sum_i ||P_0(Z_i)||` from `Delta_i` (symmetric in `i`) and `phi(k)`.
/// Terms are grouped by `r = |i|`.
pub fn check_projcond_bound(delta: &Sequence, phi: &Sequence, n_max: usize) -> ProjectionBoundReport {
    let d = |i: i64| delta.at(i.unsigned_abs() as usize);
    let inner = |i: i64| -> f64 { (1..=n_max).map(|k| d(i - k as i64) * phi.at(k)).sum() };
    let terms: Vec<f64> = (0..=n_max as i64)
        .map(|r| {
            if r == 0 {
                2.0 * d(0) + 2.0 * inner(0)
            } else {
                2.0 * (d(r) + d(-r)) + 2.0 * (inner(r) + inner(-r))
            }
        })
        .collect();
    let series = diagnose("projcond", 0, terms);
    ProjectionBoundReport { bound: series.total(), series }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRPhiReport {
    pub series: SeriesDiagnostic,
    /// `sum phi(k) < inf` and `sum k^{-1/2} R_k < inf`.
    pub item1: bool,
    /// `sum R_k < inf` and `sum k^{-1/2} phi(k) < inf`.
    pub item2: bool,
}

/// `sum_l R_l sum_{k >= l} phi(k - l) / sqrt(k)` with `phi` evaluated from `phi(0)`.
pub fn check_mixrphi(r: &Sequence, phi: &Sequence, n_max: usize) -> MixRPhiReport {
    let terms: Vec<f64> = (1..=n_max)
        .map(|l| r.at(l) * (0..=n_max).map(|m| phi.at(m) / ((l + m) as f64).sqrt()).sum::<f64>())
        .collect();
    let series = diagnose("mixrphi", 1, terms);
    let conv = |name: &str, f: &dyn Fn(usize) -> f64| {
        diagnose(name, 1, (1..=n_max).map(f).collect()).verdict == Verdict::Converging
    };
    let item1 = conv("phi", &|k| phi.at(k)) && conv("R/sqrt", &|k| r.at(k) / (k as f64).sqrt());
    let item2 = conv("R", &|k| r.at(k)) && conv("phi/sqrt", &|k| phi.at(k) / (k as f64).sqrt());
    MixRPhiReport { series, item1, item2 }
}

/// `sum_i sum_l w_l(2 (b - a) |c_i|)`, grouped by `|i|`.
pub fn check_modulus_condition(
    moduli: &[Modulus],
    coefficients: &Coefficients,
    range: f64,
    n_max: usize,
) -> Result<SeriesDiagnostic> {
    if moduli.is_empty() {
        return Err(Error::param("moduli", "need at least one lag"));
    }
    for m in moduli {
        m.validate()?;
    }
    let log_scale = (2.0 * range).ln();
    let w = |ln_c: f64| -> f64 { moduli.iter().map(|m| m.eval_neg_log(-(log_scale + ln_c))).sum() };
    let terms = (0..=n_max as i64)
        .map(|i| {
            let mut t = w(coefficients.ln_abs(i));
            if i > 0 {
                t += w(coefficients.ln_abs(-i));
            }
            t
        })
        .collect();
    Ok(diagnose("modulus", 0, terms))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLReport {
    pub concave: bool,
    /// Integral over the dyadic blocks `[2^{-k-1}, 2^{-k}]`, `k >= 1`.
    pub blocks: SeriesDiagnostic,
    pub verdict: Verdict,
}

/// `int_0^{1/2} c(t) / (t sqrt(|log t|)) dt` by dyadic blocks, each computed in
/// the variable `u = -log t` (`int c(e^{-u}) u^{-1/2} du`).
pub fn check_class_l(c: &Modulus, blocks: usize) -> Result<ClassLReport> {
    c.validate()?;
    let concave = c.concavity_spot_check(100);
    let (x, w) = gauss_legendre(16);
    let ln2 = std::f64::consts::LN_2;
    let terms = (1..=blocks)
        .map(|k| {
            let (a, b) = (k as f64 * ln2, (k + 1) as f64 * ln2);
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            half * x.iter().zip(&w).map(|(&xi, &wi)| {
                let u = mid + half * xi;
                wi * c.eval_neg_log(u) / u.sqrt()
            }).sum::<f64>()
        })
        .collect();
    let blocks = diagnose("class-L", 1, terms);
    let verdict = if concave { blocks.verdict } else { Verdict::Inconclusive };
    Ok(ClassLReport { concave, blocks, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KacReport {
    pub series: SeriesDiagnostic,
    pub integral: ClassLReport,
    pub agree: bool,
}

/// `sum n^{-1/2} w(2 |b - a| sum_{k >= n} |c_k|)` together with the integral
/// criterion for `w`.
pub fn check_kac(w: &Modulus, coefficients: &Coefficients, range: f64, n_max: usize) -> Result<KacReport> {
    w.validate()?;
    let log_scale = (2.0 * range).ln();
    let terms = (1..=n_max)
        .map(|n| w.eval_neg_log(-(log_scale + coefficients.ln_tail(n))) / (n as f64).sqrt())
        .collect();
    let series = diagnose("kac", 1, terms);
    let integral = check_class_l(w, 2000)?;
    let agree = series.verdict == integral.verdict;
    Ok(KacReport { series, integral, agree })
}

/// Convenience for kernel models: `||E(X_n | F_0)||` straight from the kernel.
pub fn kernel_mean_norms(km: &AnyKernelModel, n_max: usize) -> Vec<f64> {
    km.cond_mean_norms(n_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projcond_closed_form() {
        let (rho, lam) = (0.5, 0.3);
        let r = check_projcond_bound(
            &Sequence::Geometric { scale: 1.0, ratio: rho },
            &Sequence::Geometric { scale: 1.0, ratio: lam },
            200,
        );
        let exact = 2.0 * (1.0 + rho) / ((1.0 - rho) * (1.0 - lam));
        assert!((r.bound - exact).abs() < 1e-10, "{} vs {exact}", r.bound);
        assert_eq!(r.series.verdict, Verdict::Converging);
    }

    #[test]
    fn projcond_without_mixing() {
        let r = check_projcond_bound(&Sequence::Geometric { scale: 1.0, ratio: 0.5 }, &Sequence::Zero, 100);
        assert!((r.bound - 6.0).abs() < 1e-12);
    }

    #[test]
    fn mixrphi_harmonic_r() {
        let r = check_mixrphi(
            &Sequence::Power { scale: 1.0, exponent: 1.0 },
            &Sequence::Geometric { scale: 1.0, ratio: 0.5 },
            2000,
        );
        assert_eq!(r.series.verdict, Verdict::Converging);
        assert!(r.item1);
        assert!(!r.item2);
    }

    #[test]
    fn class_l_family() {
        for (g, expect) in [
            (0.3, Verdict::Diverging),
            (0.5, Verdict::Diverging),
            (0.6, Verdict::Converging),
            (0.75, Verdict::Converging),
            (1.0, Verdict::Converging),
        ] {
            let r = check_class_l(&Modulus::LogPower { gamma: g, scale: 1.0 }, 2000).unwrap();
            assert!(r.concave);
            assert_eq!(r.verdict, expect, "gamma = {g}: {:?}", r.blocks.tail_fit);
        }
        let r = check_class_l(&Modulus::Power { alpha: 0.5, scale: 1.0 }, 2000).unwrap();
        assert_eq!(r.verdict, Verdict::Converging);
    }

    #[test]
    fn kac_matches_integral_test() {
        let c = Coefficients::Geometric { scale: 1.0, rho: 0.5, two_sided: false };
        for (g, expect) in [(1.0, Verdict::Converging), (0.5, Verdict::Diverging)] {
            let r = check_kac(&Modulus::LogPower { gamma: g, scale: 1.0 }, &c, 1.0, 10_000).unwrap();
            assert_eq!(r.series.verdict, expect, "gamma = {g}: {:?}", r.series.tail_fit);
            assert!(r.agree);
        }
    }

    #[test]
    fn modulus_condition_geometric_coefficients() {
        let c = Coefficients::Geometric { scale: 1.0, rho: 0.5, two_sided: true };
        let lin = check_modulus_condition(&[Modulus::Linear { scale: 1.0 }], &c, 1.0, 2000).unwrap();
        assert_eq!(lin.verdict, Verdict::Converging);
        let weak = check_modulus_condition(&[Modulus::LogPower { gamma: 0.4, scale: 1.0 }], &c, 1.0, 2000).unwrap();
        assert_eq!(weak.verdict, Verdict::Diverging);
    }
}
