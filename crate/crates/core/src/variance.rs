//! Long-run variance `sigma^2 = sum_k E(X_0 X_k)` by four routes: truncated
//! empirical covariances, the dyadic block series, extrapolation of
//! `Var(S_n)/n`, and the exact Fourier formula for circle walks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::{dist_to_integers, validate_modes, FourierMode, RealNumber};
use crate::error::{Error, Result};
use crate::numerics;

/// Slack below zero tolerated before a clamp is reported as suspicious.
pub const CLAMP_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMethod {
    CovarianceSeries,
    Dyadic,
    VarSn,
    FourierClosedForm,
}

impl SigmaMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SigmaMethod::CovarianceSeries => "covariance_series",
            SigmaMethod::Dyadic => "dyadic",
            SigmaMethod::VarSn => "var_sn",
            SigmaMethod::FourierClosedForm => "fourier_closed_form",
        }
    }
}

/// Weights on the empirical lags `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSummation {
    /// `gamma_0 + 2 sum_{k <= K} gamma_k`.
    #[default]
    Truncated,
    /// Lag `k` weighted by `1 - k / (K + 1)`.
    Cesaro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    /// Clamped at zero.
    pub value: f64,
    pub raw_value: f64,
    pub method: SigmaMethod,
    pub standard_error: Option<f64>,
    pub clamped: bool,
    pub warnings: Vec<String>,
    /// Per-lag, per-level or per-`n` contributions, depending on the method.
    pub terms: Vec<f64>,
    pub term_errors: Vec<f64>,
    pub metadata: BTreeMap<String, f64>,
}

impl SigmaEstimate {
    fn finish(
        raw: f64,
        method: SigmaMethod,
        standard_error: Option<f64>,
        terms: Vec<f64>,
        term_errors: Vec<f64>,
        metadata: BTreeMap<String, f64>,
    ) -> Self {
        let mut warnings = Vec::new();
        let clamped = raw < 0.0;
        if clamped {
            warnings.push(format!("negative estimate {raw:.3e} clamped at 0"));
            if raw < -CLAMP_TOLERANCE {
                warnings.push("negative part exceeds the clamp tolerance".into());
            }
        }
        Self { value: raw.max(0.0), raw_value: raw, method, standard_error, clamped, warnings, terms, term_errors, metadata }
    }

    /// `|a - b| / sqrt(se_a^2 + se_b^2)`; exact methods count with zero error.
    pub fn z_distance(&self, other: &SigmaEstimate) -> f64 {
        let se = self.standard_error.unwrap_or(0.0).hypot(other.standard_error.unwrap_or(0.0));
        let d = (self.raw_value - other.raw_value).abs();
        if se == 0.0 {
            if d == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            d / se
        }
    }
}

fn total_len<P: AsRef<[f64]>>(paths: &[P]) -> usize {
    paths.iter().map(|p| p.as_ref().len()).sum()
}

fn pooled_mean<P: AsRef<[f64]>>(paths: &[P]) -> f64 {
    let s: f64 = paths.iter().map(|p| p.as_ref().iter().sum::<f64>()).sum();
    s / total_len(paths) as f64
}

const JACKKNIFE_GROUPS: usize = 20;

/// Lag sums and counts for one jackknife group.
struct LagStats {
    sums: Vec<f64>,
    counts: Vec<f64>,
}

impl LagStats {
    fn zero(k_max: usize) -> Self {
        Self { sums: vec![0.0; k_max + 1], counts: vec![0.0; k_max + 1] }
    }

    fn add(&mut self, other: &LagStats) {
        for k in 0..self.sums.len() {
            self.sums[k] += other.sums[k];
            self.counts[k] += other.counts[k];
        }
    }

    fn minus(&self, other: &LagStats) -> LagStats {
        LagStats {
            sums: self.sums.iter().zip(&other.sums).map(|(a, b)| a - b).collect(),
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a - b).collect(),
        }
    }

    fn gammas(&self) -> Vec<f64> {
        self.sums.iter().zip(&self.counts).map(|(s, c)| if *c > 0.0 { s / c } else { 0.0 }).collect()
    }
}

/// Products `x_i x_{i+k}` for `i` in `range`, pairs kept inside the path.
fn lag_stats(x: &[f64], range: std::ops::Range<usize>, k_max: usize, mean: f64) -> LagStats {
    let mut st = LagStats::zero(k_max);
    let n = x.len();
    for i in range {
        let a = x[i] - mean;
        let top = k_max.min(n - 1 - i);
        for k in 0..=top {
            st.sums[k] += a * (x[i + k] - mean);
        }
        for c in st.counts.iter_mut().take(top + 1) {
            *c += 1.0;
        }
    }
    st
}

fn combine_lags(g: &[f64], summation: CovarianceSummation) -> f64 {
    let k_max = g.len() - 1;
    g[0] + 2.0
        * (1..=k_max)
            .map(|k| match summation {
                CovarianceSummation::Truncated => g[k],
                CovarianceSummation::Cesaro => g[k] * (1.0 - k as f64 / (k_max as f64 + 1.0)),
            })
            .sum::<f64>()
}

/// `gamma_0 + 2 sum_{k=1}^{K} w_k gamma_k` from pooled empirical
/// autocovariances, with a 20-group delete-one jackknife standard error.
pub fn sigma2_covariance_series<P: AsRef<[f64]> + Sync>(
    paths: &[P],
    k_max: usize,
    summation: CovarianceSummation,
) -> Result<SigmaEstimate> {
    if k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let n_total = total_len(paths);
    if n_total < 100 * k_max {
        return Err(Error::InsufficientData(format!(
            "covariance series needs at least {} samples for K = {k_max}, got {n_total}",
            100 * k_max
        )));
    }
    let mean = pooled_mean(paths);
    // Groups are whole paths when there are enough of them, else contiguous
    // segments of the concatenated sample.
    let groups: Vec<LagStats> = if paths.len() >= JACKKNIFE_GROUPS {
        let per: Vec<LagStats> = paths
            .par_iter()
            .map(|p| {
                let x = p.as_ref();
                lag_stats(x, 0..x.len(), k_max, mean)
            })
            .collect();
        let mut g: Vec<LagStats> = (0..JACKKNIFE_GROUPS).map(|_| LagStats::zero(k_max)).collect();
        for (i, s) in per.iter().enumerate() {
            g[i % JACKKNIFE_GROUPS].add(s);
        }
        g
    } else {
        let mut jobs = Vec::new();
        for (pi, p) in paths.iter().enumerate() {
            let len = p.as_ref().len();
            let share = ((len as f64 / n_total as f64) * JACKKNIFE_GROUPS as f64).round().max(1.0) as usize;
            let seg = len.div_ceil(share);
            for s in 0..share {
                let lo = s * seg;
                if lo < len {
                    jobs.push((pi, lo..(lo + seg).min(len)));
                }
            }
        }
        jobs.par_iter().map(|(pi, r)| lag_stats(paths[*pi].as_ref(), r.clone(), k_max, mean)).collect()
    };
    let mut all = LagStats::zero(k_max);
    for g in &groups {
        all.add(g);
    }
    let gam = all.gammas();
    let raw = combine_lags(&gam, summation);
    let leave: Vec<f64> = groups.iter().map(|g| combine_lags(&all.minus(g).gammas(), summation)).collect();
    let gn = leave.len() as f64;
    let lm = numerics::mean(&leave);
    let se = ((gn - 1.0) / gn * leave.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>()).sqrt();
    let mut meta = BTreeMap::new();
    meta.insert("k_max".into(), k_max as f64);
    meta.insert("samples".into(), n_total as f64);
    meta.insert("jackknife_groups".into(), gn);
    meta.insert("cesaro".into(), if summation == CovarianceSummation::Cesaro { 1.0 } else { 0.0 });
    Ok(SigmaEstimate::finish(raw, SigmaMethod::CovarianceSeries, Some(se), gam, Vec::new(), meta))
}

/// `E(X_1^2) + sum_{j=0}^{J} 2^{-j} E(S_{2^j}(S_{2^{j+1}} - S_{2^j}))` with
/// each level estimated from non-overlapping blocks of length `2^{j+1}`.
/// `terms[0]` is the second moment, `terms[j + 1]` level `j`.
pub fn sigma2_dyadic<P: AsRef<[f64]> + Sync>(paths: &[P], j_max: u32) -> Result<SigmaEstimate> {
    if j_max > 40 {
        return Err(Error::param("j_max", "at most 40"));
    }
    let need = 1usize << (j_max + 1);
    if paths.is_empty() {
        return Err(Error::InsufficientData("no paths".into()));
    }
    if let Some(short) = paths.iter().map(|p| p.as_ref().len()).find(|&l| l < need) {
        return Err(Error::InsufficientData(format!("dyadic level {j_max} needs paths of length {need}, got {short}")));
    }
    let mean = pooled_mean(paths);
    let levels = j_max as usize + 1;
    // Per path: sums and sums of squares of the level statistics.
    let per: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = paths
        .par_iter()
        .map(|p| {
            let x = p.as_ref();
            let mut s = vec![0.0; levels + 1];
            let mut s2 = vec![0.0; levels + 1];
            let mut c = vec![0.0; levels + 1];
            let mut prefix = Vec::with_capacity(x.len() + 1);
            prefix.push(0.0);
            for &v in x {
                let c0 = v - mean;
                s[0] += c0 * c0;
                s2[0] += c0.powi(4);
                prefix.push(prefix.last().unwrap() + c0);
            }
            c[0] = x.len() as f64;
            for j in 0..levels {
                let h = 1usize << j;
                for b in 0..x.len() / (2 * h) {
                    let o = 2 * h * b;
                    let a = prefix[o + h] - prefix[o];
                    let d = prefix[o + 2 * h] - prefix[o + h];
                    let t = a * d / h as f64;
                    s[j + 1] += t;
                    s2[j + 1] += t * t;
                    c[j + 1] += 1.0;
                }
            }
            (s, s2, c)
        })
        .collect();
    let mut s = vec![0.0; levels + 1];
    let mut s2 = vec![0.0; levels + 1];
    let mut c = vec![0.0; levels + 1];
    for (a, b, n) in &per {
        for l in 0..=levels {
            s[l] += a[l];
            s2[l] += b[l];
            c[l] += n[l];
        }
    }
    let mut terms = Vec::with_capacity(levels + 1);
    let mut errs = Vec::with_capacity(levels + 1);
    for l in 0..=levels {
        let m = s[l] / c[l];
        let var = if c[l] > 1.0 { (s2[l] / c[l] - m * m).max(0.0) * c[l] / (c[l] - 1.0) } else { f64::NAN };
        terms.push(m);
        errs.push((var / c[l]).sqrt());
    }
    let raw: f64 = terms.iter().sum();
    let se = errs.iter().map(|e| e * e).sum::<f64>().sqrt();
    let mut meta = BTreeMap::new();
    meta.insert("j_max".into(), j_max as f64);
    meta.insert("top_level_blocks".into(), c[levels]);
    Ok(SigmaEstimate::finish(raw, SigmaMethod::Dyadic, Some(se), terms, errs, meta))
}

/// Empirical `Var(S_n)/n` for each `n` in `ns` across replicas, extrapolated
/// by a weighted fit of `sigma^2 + c/n`. `terms` holds the per-`n` values.
pub fn sigma2_var_sn<P: AsRef<[f64]> + Sync>(replicas: &[P], ns: &[usize]) -> Result<SigmaEstimate> {
    const MIN_REPLICAS: usize = 200;
    if replicas.len() < MIN_REPLICAS {
        return Err(Error::InsufficientData(format!(
            "Var(S_n)/n needs at least {MIN_REPLICAS} independent replicas, got {}",
            replicas.len()
        )));
    }
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::param("ns", "need a nonempty grid of positive n"));
    }
    let n_max = *ns.iter().max().unwrap();
    if replicas.iter().any(|p| p.as_ref().len() < n_max) {
        return Err(Error::InsufficientData(format!("replicas shorter than n = {n_max}")));
    }
    let r = replicas.len() as f64;
    let mut vals = Vec::with_capacity(ns.len());
    let mut errs = Vec::with_capacity(ns.len());
    for &n in ns {
        let sums: Vec<f64> = replicas.par_iter().map(|p| p.as_ref()[..n].iter().sum()).collect();
        let v = numerics::variance(&sums) / n as f64;
        vals.push(v);
        errs.push(v * (2.0 / (r - 1.0)).sqrt());
    }
    let mut warnings = Vec::new();
    let distinct: std::collections::BTreeSet<usize> = ns.iter().copied().collect();
    let (raw, se) = if distinct.len() < 2 {
        (vals[0], errs[0])
    } else {
        // Weighted least squares in x = 1/n; weights from the per-n errors.
        let w: Vec<f64> = errs.iter().map(|e| if *e > 0.0 { 1.0 / (e * e) } else { 1.0 }).collect();
        let x: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        let sw: f64 = w.iter().sum();
        let swx: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let swxx: f64 = w.iter().zip(&x).map(|(a, b)| a * b * b).sum();
        let swy: f64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
        let swxy: f64 = w.iter().zip(&x).zip(&vals).map(|((a, b), c)| a * b * c).sum();
        let det = sw * swxx - swx * swx;
        if det <= 0.0 {
            warnings.push("degenerate n grid; using the largest n".to_string());
            let i = ns.iter().position(|&n| n == n_max).unwrap();
            (vals[i], errs[i])
        } else {
            ((swxx * swy - swx * swxy) / det, (swxx / det).sqrt())
        }
    };
    let mut meta = BTreeMap::new();
    meta.insert("replicas".into(), r);
    meta.insert("n_max".into(), n_max as f64);
    let mut est = SigmaEstimate::finish(raw, SigmaMethod::VarSn, Some(se), vals, errs, meta);
    est.warnings.extend(warnings);
    Ok(est)
}

/// `cos(2 pi k a)` through the certified distance `d(k a, Z)`.
fn cos_multiple(k: u32, a: &RealNumber) -> Result<f64> {
    let d = dist_to_integers(k as i64, a)?;
    if d.exact_zero {
        return Err(Error::Model(format!("k a is an integer at k = {k}; the Fourier series has a pole")));
    }
    Ok((2.0 * PI * d.value).cos())
}

/// Exact autocovariances `gamma_j = sum_k |f_hat(k)|^2 2 cos(2 pi k a)^j`,
/// `j = 0..=lags`, of the walk `Y_{k+1} = Y_k +- a`.
pub fn circle_covariances(modes: &[FourierMode], a: &RealNumber, lags: usize) -> Result<Vec<f64>> {
    validate_modes(modes)?;
    let mut g = vec![0.0; lags + 1];
    for m in modes {
        let c = cos_multiple(m.k, a)?;
        let w = 2.0 * m.abs().powi(2);
        let mut p = 1.0;
        for gj in g.iter_mut() {
            *gj += w * p;
            p *= c;
        }
    }
    Ok(g)
}

/// `sum_{0 < |k| <= K} |f_hat(k)|^2 (1 + cos 2 pi k a) / (1 - cos 2 pi k a)`.
///
/// The metadata carries the covariance series `gamma_0 + 2 sum_j gamma_j`
/// summed from the multipliers until the geometric tail drops below `1e-15`.
pub fn sigma2_circle_fourier(modes: &[FourierMode], a: &RealNumber, k_max: u32) -> Result<SigmaEstimate> {
    validate_modes(modes)?;
    let mut terms = Vec::new();
    let mut series = 0.0;
    let mut longest = 0usize;
    for m in modes.iter().filter(|m| m.k <= k_max) {
        let c = cos_multiple(m.k, a)?;
        let w = 2.0 * m.abs().powi(2);
        terms.push(w * (1.0 + c) / (1.0 - c));
        // gamma_0 + 2 sum_{j >= 1} c^j, summed term by term.
        let mut s = 1.0;
        let mut p: f64 = 1.0;
        let mut j = 0usize;
        while p.abs() > 1e-15 * (1.0 - c.abs()) && j < 10_000_000 {
            p *= c;
            s += 2.0 * p;
            j += 1;
        }
        longest = longest.max(j);
        series += w * s;
    }
    if terms.is_empty() {
        return Err(Error::param("k_max", "no Fourier mode at or below K"));
    }
    let raw: f64 = terms.iter().sum();
    let mut meta = BTreeMap::new();
    meta.insert("k_max".into(), k_max as f64);
    meta.insert("covariance_series_symbolic".into(), series);
    meta.insert("symbolic_lags".into(), longest as f64);
    meta.insert("symbolic_gap".into(), (series - raw).abs());
    Ok(SigmaEstimate::finish(raw, SigmaMethod::FourierClosedForm, None, terms, Vec::new(), meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::IrrationalSpec;
    use crate::processes::{make_iid, sample_paths, Law};

    #[test]
    fn covariance_series_on_iid_rademacher() {
        let m = make_iid(Law::Rademacher).unwrap();
        let p = sample_paths(&m, 100_000, 4, 1, 7).unwrap();
        let e = sigma2_covariance_series(&p, 10, CovarianceSummation::Truncated).unwrap();
        assert!((e.value - 1.0).abs() < 4.0 * e.standard_error.unwrap() + 1e-3, "{e:?}");
        assert!(e.standard_error.unwrap() < 0.02);
    }

    #[test]
    fn covariance_series_refuses_short_samples() {
        let p = vec![vec![0.0; 999]];
        assert!(matches!(
            sigma2_covariance_series(&p, 10, CovarianceSummation::Truncated),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn covariance_series_brute_force() {
        let x: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let e = sigma2_covariance_series(std::slice::from_ref(&x), 5, CovarianceSummation::Truncated).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let g = |k: usize| {
            (0..x.len() - k).map(|i| (x[i] - m) * (x[i + k] - m)).sum::<f64>() / (x.len() - k) as f64
        };
        let want = g(0) + 2.0 * (1..=5).map(g).sum::<f64>();
        assert!((e.raw_value - want).abs() < 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn cesaro_weights() {
        let g = [1.0, 1.0, 1.0];
        assert_eq!(combine_lags(&g, CovarianceSummation::Truncated), 5.0);
        assert!((combine_lags(&g, CovarianceSummation::Cesaro) - (1.0 + 2.0 * (2.0 / 3.0 + 1.0 / 3.0))).abs() < 1e-15);
    }

    #[test]
    fn dyadic_on_iid() {
        let m = make_iid(Law::Uniform { c: 1.0 }).unwrap();
        let p = sample_paths(&m, 1 << 14, 16, 2, 7).unwrap();
        let e = sigma2_dyadic(&p, 4).unwrap();
        for (t, s) in e.terms[1..].iter().zip(&e.term_errors[1..]) {
            assert!(t.abs() < 4.0 * s, "{t} vs {s}");
        }
        assert!((e.value - 1.0 / 3.0).abs() < 4.0 * e.standard_error.unwrap());
    }

    #[test]
    fn dyadic_refuses_short_paths() {
        assert!(sigma2_dyadic(&[vec![0.0; 15]], 3).is_err());
        assert!(sigma2_dyadic(&[vec![0.0; 16]], 3).is_ok());
    }

    #[test]
    fn dyadic_exact_on_constant_alternation() {
        // x = (1, -1, 1, -1, ...): E X^2 = 1, level 0 term = -1, higher levels 0.
        let x: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = sigma2_dyadic(&[x], 3).unwrap();
        assert!((e.terms[0] - 1.0).abs() < 1e-12);
        assert!((e.terms[1] + 1.0).abs() < 1e-12);
        assert!(e.terms[2..].iter().all(|t| t.abs() < 1e-12));
        assert!(e.raw_value.abs() < 1e-12);
    }

    #[test]
    fn var_sn_on_iid() {
        let m = make_iid(Law::Rademacher).unwrap();
        let p = sample_paths(&m, 64, 4000, 3, 7).unwrap();
        let e = sigma2_var_sn(&p, &[16, 32, 64]).unwrap();
        for (v, s) in e.terms.iter().zip(&e.term_errors) {
            assert!((v - 1.0).abs() < 4.0 * s);
        }
        assert!(sigma2_var_sn(&p[..199], &[16]).is_err());
    }

    #[test]
    fn fourier_quarter_turn() {
        let a = RealNumber::new(&IrrationalSpec::Rational { num: 1, den: 4 }).unwrap();
        let modes = [FourierMode { k: 1, re: 0.5, im: 0.0 }];
        let e = sigma2_circle_fourier(&modes, &a, 10).unwrap();
        assert!((e.value - 0.5).abs() < 1e-15);
        let whole = RealNumber::new(&IrrationalSpec::Rational { num: 1, den: 1 }).unwrap();
        assert!(sigma2_circle_fourier(&modes, &whole, 10).is_err());
    }

    #[test]
    fn fourier_golden() {
        let a = RealNumber::new(&IrrationalSpec::golden()).unwrap();
        let modes = [FourierMode { k: 1, re: 0.5, im: 0.0 }];
        let e = sigma2_circle_fourier(&modes, &a, 1).unwrap();
        let c = (2.0 * PI * a.to_f64()).cos();
        assert!((c + 0.7374).abs() < 1e-4);
        assert!((e.value - 0.5 * (1.0 + c) / (1.0 - c)).abs() < 1e-14);
        assert!((e.value - 0.0756).abs() < 1e-4);
        assert!(e.metadata["symbolic_gap"] < 1e-13);
        let g = circle_covariances(&modes, &a, 200).unwrap();
        let brute = g[0] + 2.0 * g[1..].iter().sum::<f64>();
        assert!((brute - e.value).abs() < 1e-13);
    }

    #[test]
    fn clamp_reports_warning() {
        let e = SigmaEstimate::finish(-1e-4, SigmaMethod::CovarianceSeries, None, vec![], vec![], BTreeMap::new());
        assert_eq!(e.value, 0.0);
        assert!(e.clamped && e.warnings.len() == 1);
    }
}
