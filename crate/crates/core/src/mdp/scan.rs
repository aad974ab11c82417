use serde::{Deserialize, Serialize};

use super::oracle::{exact_binomial_tail_log, ln_normal_tail, tilted_is_estimator};
use crate::error::{Error, Result};
use crate::processes::{experiment_id, map_replicas, Law, ProcessModel};
use crate::speed::SpeedSequence;

/// Expected exceedances below which naive Monte Carlo is refused.
pub const NAIVE_MIN_EXPECTED: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Naive,
    ExactBinomial,
    Tilted,
}

impl TailMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMethod::Naive => "naive",
            TailMethod::ExactBinomial => "exact_binomial",
            TailMethod::Tilted => "tilted",
        }
    }

    fn is_oracle(&self) -> bool {
        !matches!(self, TailMethod::Naive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRequest {
    pub n: usize,
    pub a_n: f64,
    pub x: f64,
    pub method: TailMethod,
    /// Monte Carlo replicas (ignored by the exact method).
    pub replicas: usize,
    pub master_seed: u64,
    /// Long-run variance used for the naive pre-flight estimate.
    pub sigma2: f64,
}

/// `a_n log P(sqrt(a_n / n) S_n >= x)` at one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpPoint {
    pub n: usize,
    pub a_n: f64,
    pub x: f64,
    /// `t = x sqrt(n / a_n)`.
    pub threshold: f64,
    pub method: TailMethod,
    pub log_p: Option<f64>,
    pub estimate: Option<f64>,
    /// Standard error of `estimate`; zero for the exact method.
    pub se: Option<f64>,
    pub exceedances: Option<u64>,
    pub flag: Option<String>,
}

fn check_request(req: &PointRequest) -> Result<()> {
    if req.n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    if !(req.a_n > 0.0 && req.a_n.is_finite()) {
        return Err(Error::param("a_n", "must be positive"));
    }
    if !req.x.is_finite() {
        return Err(Error::param("x", "must be finite"));
    }
    Ok(())
}

pub fn empirical_mdp_point(model: &ProcessModel, req: &PointRequest) -> Result<MdpPoint> {
    check_request(req)?;
    let t = req.x * (req.n as f64 / req.a_n).sqrt();
    let mut point = MdpPoint {
        n: req.n,
        a_n: req.a_n,
        x: req.x,
        threshold: t,
        method: req.method,
        log_p: None,
        estimate: None,
        se: None,
        exceedances: None,
        flag: None,
    };
    let law = model.iid_law();
    match req.method {
        TailMethod::ExactBinomial => {
            if law != Some(Law::Rademacher) {
                return Err(Error::Model(format!("the exact binomial oracle needs iid signs, not `{}`", model.name())));
            }
            let lp = exact_binomial_tail_log(req.n as u64, t)?;
            point.log_p = Some(lp);
            point.se = Some(0.0);
        }
        TailMethod::Tilted => {
            let law = law.ok_or_else(|| Error::Model(format!("tilting needs an iid model, not `{}`", model.name())))?;
            let e = tilted_is_estimator(&law, req.n, t, req.replicas, req.master_seed)?;
            point.log_p = Some(e.log_p);
            point.se = Some(req.a_n * e.se_log);
            point.exceedances = Some(e.hits);
        }
        TailMethod::Naive => {
            if !(req.sigma2 > 0.0) {
                return Err(Error::param("sigma2", "the naive pre-flight needs a positive variance"));
            }
            let expected = req.replicas as f64 * ln_normal_tail(t / (req.n as f64 * req.sigma2).sqrt()).exp();
            if expected < NAIVE_MIN_EXPECTED {
                return Err(Error::Capacity(format!(
                    "naive Monte Carlo expects {expected:.2} exceedances of t = {t:.3} in {} replicas (need {NAIVE_MIN_EXPECTED}); \
                     raise the replica count, lower x, or use the tilted method for iid models",
                    req.replicas
                )));
            }
            let exp = experiment_id(&format!("naive/{}/{}/{}", model.name(), req.n, req.x));
            let sums: Result<Vec<f64>> =
                map_replicas(req.replicas, req.master_seed, exp, |_, s| Ok(model.sample(req.n, s)?.sum()))
                    .into_iter()
                    .collect();
            let k = sums?.iter().filter(|&&s| s >= t).count() as u64;
            point.exceedances = Some(k);
            if k == 0 {
                point.flag = Some("no exceedance observed".into());
            } else {
                let p = k as f64 / req.replicas as f64;
                point.log_p = Some(p.ln());
                point.se = Some(req.a_n * ((1.0 - p) / k as f64).sqrt());
            }
        }
    }
    point.estimate = point.log_p.map(|l| req.a_n * l);
    Ok(point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub model: String,
    pub n: usize,
    pub a_n: f64,
    pub x: f64,
    pub method: TailMethod,
    pub estimate: Option<f64>,
    /// `-x^2 / (2 sigma^2)`.
    pub target: f64,
    pub gap: Option<f64>,
    pub se: Option<f64>,
    /// `a_n log P(N(0, n sigma^2) >= t)`, a finite-`n` Gaussian reference.
    pub gaussian_reference: f64,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationScanReport {
    pub rows: Vec<ScanRow>,
    /// Per `x`: whether `|gap|` at the largest `n` is below `|gap|` at the
    /// smallest `n` (`None` if either is missing).
    pub gap_shrinks: Vec<(f64, Option<bool>)>,
    /// The trend requirement applies to oracle methods only.
    pub trend_pass: Option<bool>,
}

#[allow(clippy::too_many_arguments)]
pub fn mdp_scan(
    model: &ProcessModel,
    speed: &SpeedSequence,
    ns: &[usize],
    xs: &[f64],
    sigma2: f64,
    method: TailMethod,
    replicas: usize,
    master_seed: u64,
) -> Result<DeviationScanReport> {
    if ns.is_empty() || xs.is_empty() {
        return Err(Error::param("grid", "n and x grids must be nonempty"));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::param("sigma2", "targets need a positive variance"));
    }
    speed.validate()?;
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut rows = Vec::with_capacity(ns.len() * xs.len());
    for &n in &ns {
        let a_n = speed.value(n as u64)?;
        for &x in xs {
            let req = PointRequest { n, a_n, x, method, replicas, master_seed, sigma2 };
            let p = empirical_mdp_point(model, &req)?;
            let target = -x * x / (2.0 * sigma2);
            rows.push(ScanRow {
                model: model.name().to_string(),
                n,
                a_n,
                x,
                method,
                estimate: p.estimate,
                target,
                gap: p.estimate.map(|e| e - target),
                se: p.se,
                gaussian_reference: a_n * ln_normal_tail(x / (sigma2 * a_n).sqrt()),
                flag: p.flag,
            });
        }
    }
    let (lo, hi) = (ns[0], *ns.last().unwrap());
    let gap_at = |n: usize, x: f64| rows.iter().find(|r| r.n == n && r.x == x).and_then(|r| r.gap);
    let gap_shrinks: Vec<(f64, Option<bool>)> = xs
        .iter()
        .map(|&x| {
            let s = match (gap_at(lo, x), gap_at(hi, x)) {
                (Some(a), Some(b)) if lo != hi => Some(b.abs() < a.abs()),
                _ => None,
            };
            (x, s)
        })
        .collect();
    let trend_pass = if method.is_oracle() && lo != hi {
        Some(gap_shrinks.iter().filter(|(x, _)| *x != 0.0).all(|(_, s)| *s == Some(true)))
    } else {
        None
    };
    Ok(DeviationScanReport { rows, gap_shrinks, trend_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::make_iid;

    fn rademacher() -> ProcessModel {
        make_iid(Law::Rademacher).unwrap()
    }

    #[test]
    fn exact_point_at_a_million() {
        let req = PointRequest {
            n: 1_000_000,
            a_n: 1e-2,
            x: 1.0,
            method: TailMethod::ExactBinomial,
            replicas: 0,
            master_seed: 0,
            sigma2: 1.0,
        };
        let p = empirical_mdp_point(&rademacher(), &req).unwrap();
        assert!((p.threshold - 1e4).abs() < 1e-6);
        assert!((p.estimate.unwrap() + 0.532).abs() < 1e-3, "{:?}", p.estimate);
    }

    #[test]
    fn zero_level_is_half() {
        let req = PointRequest {
            n: 1001,
            a_n: 0.1,
            x: 0.0,
            method: TailMethod::ExactBinomial,
            replicas: 0,
            master_seed: 0,
            sigma2: 1.0,
        };
        let p = empirical_mdp_point(&rademacher(), &req).unwrap();
        assert!((p.log_p.unwrap() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn naive_preflight_refuses_rare_events() {
        let req = PointRequest {
            n: 100,
            a_n: 0.05,
            x: 2.0,
            method: TailMethod::Naive,
            replicas: 1000,
            master_seed: 0,
            sigma2: 1.0,
        };
        assert!(matches!(empirical_mdp_point(&rademacher(), &req), Err(Error::Capacity(_))));
    }

    #[test]
    fn naive_agrees_with_exact_at_moderate_levels() {
        let m = rademacher();
        let base = PointRequest {
            n: 400,
            a_n: 0.5,
            x: 1.0,
            method: TailMethod::Naive,
            replicas: 20_000,
            master_seed: 2,
            sigma2: 1.0,
        };
        let naive = empirical_mdp_point(&m, &base).unwrap();
        let exact = empirical_mdp_point(&m, &PointRequest { method: TailMethod::ExactBinomial, ..base }).unwrap();
        let tilted = empirical_mdp_point(&m, &PointRequest { method: TailMethod::Tilted, ..base }).unwrap();
        let d = (naive.estimate.unwrap() - exact.estimate.unwrap()).abs();
        assert!(d < 3.0 * naive.se.unwrap(), "{d}");
        let se = naive.se.unwrap().hypot(tilted.se.unwrap());
        assert!((naive.estimate.unwrap() - tilted.estimate.unwrap()).abs() < 3.0 * se);
    }

    #[test]
    fn exact_scan_gaps_shrink() {
        let s = SpeedSequence::power(1.0 / 3.0).unwrap();
        let r = mdp_scan(&rademacher(), &s, &[10_000, 100_000, 1_000_000], &[0.5, 1.0], 1.0, TailMethod::ExactBinomial, 0, 0)
            .unwrap();
        assert_eq!(r.trend_pass, Some(true));
        for x in [0.5, 1.0] {
            let gaps: Vec<f64> = r.rows.iter().filter(|row| row.x == x).map(|row| row.gap.unwrap().abs()).collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        }
        for row in &r.rows {
            assert_eq!(row.target, -row.x * row.x / 2.0);
        }
    }

    #[test]
    fn exact_method_needs_signs() {
        let m = make_iid(Law::Uniform { c: 1.0 }).unwrap();
        let req = PointRequest {
            n: 10,
            a_n: 0.5,
            x: 1.0,
            method: TailMethod::ExactBinomial,
            replicas: 0,
            master_seed: 0,
            sigma2: 1.0,
        };
        assert!(empirical_mdp_point(&m, &req).is_err());
    }
}
