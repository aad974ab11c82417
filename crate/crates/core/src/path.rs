//! Sample paths, partial sums and the normalised partial-sum process
//! `W_n(t) = n^{-1/2} S_{[nt]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A finite realisation `X_1, ..., X_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub values: Vec<f64>,
    pub origin: Option<RngStream>,
}

impl Path {
    pub fn new(values: Vec<f64>, origin: RngStream) -> Self {
        Self { values, origin: Some(origin) }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values, origin: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        partial_sums(&self.values)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl AsRef<[f64]> for Path {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// A path together with the hidden Markov states `Y_0, ..., Y_n`
/// (`X_k` is a function of `Y_k` plus independent centred noise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub path: Path,
    pub states: Vec<f64>,
}

/// `S_k = X_1 + ... + X_k` for `k = 1..=n`.
pub fn partial_sums(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |s, &v| {
            *s += v;
            Some(*s)
        })
        .collect()
}

/// `W_n(t) = S_{[nt]} / sqrt(n)`, with `S_0 = 0`.
pub fn normalized_process(x: &[f64], t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) || t.is_nan() {
        return Err(Error::Domain { value: t, domain: "[0, 1]" });
    }
    let n = x.len();
    if n == 0 {
        return Err(Error::InsufficientData("empty path".into()));
    }
    let k = ((n as f64) * t).floor() as usize;
    let s: f64 = x[..k.min(n)].iter().sum();
    Ok(s / (n as f64).sqrt())
}

/// `max_{k <= n} |S_k|`.
pub fn max_abs_partial_sum(x: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut m = 0.0f64;
    for &v in x {
        s += v;
        m = m.max(s.abs());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let x = [1.0, -2.0, 0.5];
        assert_eq!(partial_sums(&x), vec![1.0, -1.0, -0.5]);
        let w = normalized_process(&x, 0.7).unwrap();
        assert!((w + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(max_abs_partial_sum(&x), 1.0);
        assert!(normalized_process(&x, 1.2).is_err());
        assert_eq!(normalized_process(&x, 0.0).unwrap(), 0.0);
        assert!((normalized_process(&x, 1.0).unwrap() + 0.5 / 3f64.sqrt()).abs() < 1e-15);
    }
}
