use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::numerics::fit_line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    /// `t_n ~ C n^p`; `parameter` is `p`.
    Power,
    /// `t_n ~ C r^n`; `parameter` is `r`.
    Geometric,
    /// Terms vanish from some index on.
    FiniteSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub kind: TailKind,
    pub parameter: f64,
    pub r_squared: f64,
    pub window_start: usize,
    pub window_end: usize,
}

/// Partial sums of a nonnegative series with a verdict from its fitted tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostic {
    pub name: String,
    /// Index of the first term.
    pub first_index: usize,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub tail_fit: Option<TailFit>,
    /// Extrapolated remainder beyond the last term, when converging.
    pub tail_estimate: Option<f64>,
    pub verdict: Verdict,
    pub auxiliary: BTreeMap<String, f64>,
}

/// Terms below this are indistinguishable from rounding noise.
pub const ZERO_FLOOR: f64 = 1e-14;
/// Minimum coefficient of determination for a decisive verdict.
pub const MIN_R_SQUARED: f64 = 0.999;
/// Power-law exponents below this count as summable.
pub const CONVERGING_EXPONENT: f64 = -1.02;
/// Power-law exponents above this count as non-summable.
pub const DIVERGING_EXPONENT: f64 = -1.005;

impl SeriesDiagnostic {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    /// Rows `(index, term, partial_sum)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.terms.iter().zip(&self.partial_sums).enumerate().map(|(i, (&t, &s))| (i + self.first_index, t, s))
    }
}

/// Build a diagnostic for terms `t_{first}, t_{first+1}, ...`.
///
/// The verdict rule: fit `log t_n` against `log n` (power law) and against
/// `n` (geometric) on the second half of the indices, keep the better fit,
/// and call the series converging when the fitted exponent is below
/// [`CONVERGING_EXPONENT`] (or the ratio below 1) with `R^2 > 0.999` and the
/// terms still shrinking across the window; diverging when the exponent is
/// above [`DIVERGING_EXPONENT`]; inconclusive otherwise.
pub fn diagnose(name: impl Into<String>, first_index: usize, terms: Vec<f64>) -> SeriesDiagnostic {
    let terms: Vec<f64> = terms.into_iter().map(|t| if t.abs() < ZERO_FLOOR { 0.0 } else { t }).collect();
    let partial_sums = crate::path::partial_sums(&terms);
    let (tail_fit, verdict, tail_estimate) = classify(first_index, &terms);
    SeriesDiagnostic {
        name: name.into(),
        first_index,
        terms,
        partial_sums,
        tail_fit,
        tail_estimate,
        verdict,
        auxiliary: BTreeMap::new(),
    }
}

fn classify(first: usize, terms: &[f64]) -> (Option<TailFit>, Verdict, Option<f64>) {
    let n = terms.len();
    if n < 8 {
        return (None, Verdict::Inconclusive, None);
    }
    let last_nonzero = terms.iter().rposition(|&t| t != 0.0);
    let Some(last) = last_nonzero else {
        let fit = TailFit { kind: TailKind::FiniteSupport, parameter: 0.0, r_squared: 1.0, window_start: first, window_end: first + n - 1 };
        return (Some(fit), Verdict::Converging, Some(0.0));
    };
    if last < n / 2 {
        let fit = TailFit {
            kind: TailKind::FiniteSupport,
            parameter: (first + last) as f64,
            r_squared: 1.0,
            window_start: first + last,
            window_end: first + n - 1,
        };
        return (Some(fit), Verdict::Converging, Some(0.0));
    }
    let lo = n / 2;
    let pts: Vec<(f64, f64)> =
        (lo..n).filter(|&i| terms[i] > 0.0).map(|i| ((first + i) as f64, terms[i].ln())).collect();
    if pts.len() < 4 {
        return (None, Verdict::Inconclusive, None);
    }
    let xs_pow: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let xs_geo: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let pow = fit_line(&xs_pow, &ys);
    let geo = fit_line(&xs_geo, &ys);
    let (Some(pow), Some(geo)) = (pow, geo) else {
        return (None, Verdict::Inconclusive, None);
    };
    let window = (first + lo, first + n - 1);
    let t_last = terms[n - 1];
    let n_last = (first + n - 1) as f64;

    // Terms must still be shrinking across the window for a converging verdict.
    let q = (n - lo) / 4;
    let mean = |a: usize, b: usize| terms[a..b].iter().sum::<f64>() / (b - a) as f64;
    let shrinking = q == 0 || mean(n - q, n) <= mean(lo, lo + q);

    if geo.r_squared > pow.r_squared && geo.slope < -1e-6 {
        let r = geo.slope.exp();
        let fit = TailFit { kind: TailKind::Geometric, parameter: r, r_squared: geo.r_squared, window_start: window.0, window_end: window.1 };
        if geo.r_squared > MIN_R_SQUARED && shrinking {
            return (Some(fit), Verdict::Converging, Some(t_last * r / (1.0 - r)));
        }
        return (Some(fit), Verdict::Inconclusive, None);
    }
    let p = pow.slope;
    let fit = TailFit { kind: TailKind::Power, parameter: p, r_squared: pow.r_squared, window_start: window.0, window_end: window.1 };
    if pow.r_squared <= MIN_R_SQUARED {
        return (Some(fit), Verdict::Inconclusive, None);
    }
    if p < CONVERGING_EXPONENT && shrinking {
        (Some(fit), Verdict::Converging, Some(t_last * n_last / (-p - 1.0)))
    } else if p > DIVERGING_EXPONENT {
        (Some(fit), Verdict::Diverging, None)
    } else {
        (Some(fit), Verdict::Inconclusive, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(f: impl Fn(f64) -> f64) -> Verdict {
        diagnose("t", 1, (1..=10_000).map(|n| f(n as f64)).collect()).verdict
    }

    #[test]
    fn reference_series() {
        assert_eq!(verdict(|n| 1.0 / n), Verdict::Diverging);
        assert_eq!(verdict(|n| n.powf(-0.5)), Verdict::Diverging);
        assert_eq!(verdict(|n| n.powf(-1.1)), Verdict::Converging);
        assert_eq!(verdict(|n| n.powf(-2.0)), Verdict::Converging);
        assert_eq!(verdict(|n| 0.9f64.powf(n)), Verdict::Converging);
        assert_eq!(verdict(|_| 0.0), Verdict::Converging);
        assert_eq!(verdict(|_| 1.0), Verdict::Diverging);
    }

    #[test]
    fn tail_estimate_for_square_series() {
        let d = diagnose("t", 1, (1..=10_000).map(|n| 1.0 / (n as f64 * n as f64)).collect());
        let total = d.total() + d.tail_estimate.unwrap();
        assert!((total - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6);
    }
}
