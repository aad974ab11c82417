use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::FiniteKernel;

/// Law of the return time `tau` of the counterexample chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TauLaw {
    /// `P(tau = j) ~ j^{-exponent}` on `1..=j_max`, renormalised.
    PowerTail { exponent: f64, j_max: usize },
    /// `probs[j - 1] = P(tau = j)`.
    Explicit { probs: Vec<f64> },
}

impl Default for TauLaw {
    fn default() -> Self {
        TauLaw::PowerTail { exponent: 4.0, j_max: 10_000 }
    }
}

impl TauLaw {
    /// `P(tau = j)` for `j = 1..=J`.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let p = match self {
            TauLaw::PowerTail { exponent, j_max } => {
                if !(*exponent > 2.0) {
                    return Err(Error::Model(format!(
                        "tail exponent {exponent} gives E(tau) = infinity before truncation"
                    )));
                }
                if *j_max == 0 {
                    return Err(Error::param("j_max", "must be positive"));
                }
                let raw: Vec<f64> = (1..=*j_max).map(|j| (j as f64).powf(-exponent)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            }
            TauLaw::Explicit { probs } => {
                if probs.is_empty() || probs.iter().any(|&v| !(v >= 0.0)) {
                    return Err(Error::param("probs", "need nonnegative probabilities"));
                }
                if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::param("probs", "must sum to 1"));
                }
                probs.clone()
            }
        };
        if !(p[0] > 0.0) {
            return Err(Error::Model("the chain is ergodic only when P(tau = 1) > 0".into()));
        }
        Ok(p)
    }
}

/// The renewal chain on `{0, ..., J}`: from `j >= 1` go to `j - 1`, from `0`
/// jump to `tau`. Observed through `X_k = xi_k 1{Y_k != 0}` with fair signs.
#[derive(Debug, Clone)]
pub struct CounterexampleChain {
    probs: Vec<f64>,
    jump_cdf: Vec<f64>,
    start_cdf: Vec<f64>,
    pi: Vec<f64>,
}

fn cdf(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = p.iter().map(|v| { acc += v; acc }).collect();
    *c.last_mut().unwrap() = 1.0;
    c
}

impl CounterexampleChain {
    pub fn new(tau: &TauLaw) -> Result<Self> {
        let probs = tau.probabilities()?;
        let pi = stationary_age_law(&probs);
        Ok(Self { jump_cdf: cdf(&probs), start_cdf: cdf(&pi), probs, pi })
    }

    pub fn states(&self) -> usize {
        self.probs.len() + 1
    }

    /// `E(tau)`.
    pub fn mean_return(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, p)| (j + 1) as f64 * p).sum()
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn transition_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = Vec::with_capacity(self.states());
        rows.push(self.probs.iter().enumerate().filter(|e| *e.1 > 0.0).map(|(j, &p)| (j + 1, p)).collect());
        for j in 1..self.states() {
            rows.push(vec![(j - 1, 1.0)]);
        }
        rows
    }

    pub fn kernel(&self) -> Result<FiniteKernel> {
        FiniteKernel::new(self.transition_rows(), Some(self.pi.clone()))
    }

    pub fn step<R: Rng + ?Sized>(&self, y: usize, rng: &mut R) -> usize {
        if y > 0 {
            y - 1
        } else {
            self.jump_cdf.partition_point(|&c| c <= rng.gen::<f64>()).min(self.probs.len() - 1) + 1
        }
    }

    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.start_cdf.partition_point(|&c| c <= rng.gen::<f64>()).min(self.pi.len() - 1)
    }
}

/// `pi(j) = P(tau >= j) / (1 + E tau)`, `j = 0..=J`, which solves the balance
/// equations `pi(j) = pi(j + 1) + pi(0) P(tau = j)`.
pub fn stationary_age_law(probs: &[f64]) -> Vec<f64> {
    let jmax = probs.len();
    let mut tail = vec![0.0; jmax + 1];
    tail[0] = 1.0;
    let mut acc = 0.0;
    for j in (1..=jmax).rev() {
        acc += probs[j - 1];
        tail[j] = acc;
    }
    let z: f64 = tail.iter().sum();
    tail.into_iter().map(|t| t / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::stationary_distribution;

    fn dense(chain: &CounterexampleChain) -> Vec<Vec<f64>> {
        let d = chain.states();
        let mut p = vec![vec![0.0; d]; d];
        for (i, row) in chain.transition_rows().into_iter().enumerate() {
            for (j, v) in row {
                p[i][j] = v;
            }
        }
        p
    }

    #[test]
    fn age_law_solves_the_balance_equations() {
        let chain = CounterexampleChain::new(&TauLaw::PowerTail { exponent: 4.0, j_max: 60 }).unwrap();
        let oracle = stationary_distribution(&dense(&chain)).unwrap();
        for (a, b) in oracle.iter().zip(chain.stationary()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn strict_tail_formula_is_not_invariant() {
        // P(tau > j) / E(tau) leaves out the state reached at the jump.
        let chain = CounterexampleChain::new(&TauLaw::PowerTail { exponent: 4.0, j_max: 60 }).unwrap();
        let oracle = stationary_distribution(&dense(&chain)).unwrap();
        let et = chain.mean_return();
        let mut gt = 1.0;
        let mut worst: f64 = 0.0;
        for (j, o) in oracle.iter().enumerate() {
            if j > 0 {
                gt -= chain.probs[j - 1];
            }
            worst = worst.max((gt.max(0.0) / et - o).abs());
        }
        assert!(worst > 1e-3);
    }

    #[test]
    fn unit_return_time_alternates() {
        let chain = CounterexampleChain::new(&TauLaw::Explicit { probs: vec![1.0] }).unwrap();
        assert_eq!(chain.stationary(), &[0.5, 0.5]);
        let mut rng = rand::thread_rng();
        assert_eq!(chain.step(0, &mut rng), 1);
        assert_eq!(chain.step(1, &mut rng), 0);
    }

    #[test]
    fn rejects_infinite_mean() {
        assert!(CounterexampleChain::new(&TauLaw::PowerTail { exponent: 2.0, j_max: 100 }).is_err());
        assert!(CounterexampleChain::new(&TauLaw::Explicit { probs: vec![0.0, 1.0] }).is_err());
    }
}
