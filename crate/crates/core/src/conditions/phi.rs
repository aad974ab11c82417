use crate::error::{Error, Result};

/// Uniform mixing coefficients of a finite stationary chain,
/// `phi(n) = max_{x: pi(x) > 0} sum_y (P^n(x, y) - pi(y))_+` for `n = 1..=n_max`.
pub fn phi_coefficients(p: &[Vec<f64>], pi: &[f64], n_max: usize) -> Result<Vec<f64>> {
    let d = p.len();
    if d == 0 || pi.len() != d || p.iter().any(|r| r.len() != d) {
        return Err(Error::param("transition", "need a square matrix matching the law"));
    }
    for (i, row) in p.iter().enumerate() {
        if row.iter().any(|&v| v < 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::param("transition", format!("row {i} is not stochastic")));
        }
    }
    if (pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 || pi.iter().any(|&v| v < 0.0) {
        return Err(Error::param("pi", "not a probability vector"));
    }
    for j in 0..d {
        let s: f64 = (0..d).map(|i| pi[i] * p[i][j]).sum();
        if (s - pi[j]).abs() > 1e-12 {
            return Err(Error::param("pi", format!("not invariant (column {j} off by {:.2e})", s - pi[j])));
        }
    }
    let mut m = p.to_vec();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            m = m
                .iter()
                .map(|row| (0..d).map(|j| (0..d).map(|k| row[k] * p[k][j]).sum()).collect())
                .collect();
        }
        let phi = (0..d)
            .filter(|&x| pi[x] > 0.0)
            .map(|x| (0..d).map(|y| (m[x][y] - pi[y]).max(0.0)).sum::<f64>())
            .fold(0.0, f64::max);
        out.push(phi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_symmetric_chain() {
        let q = 0.2;
        let p = vec![vec![1.0 - q, q], vec![q, 1.0 - q]];
        let phi = phi_coefficients(&p, &[0.5, 0.5], 10).unwrap();
        for (n, v) in phi.iter().enumerate() {
            let expect = 0.5 * (1.0 - 2.0 * q).abs().powi(n as i32 + 1);
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_chain_never_mixes() {
        let p = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let pi = [0.2, 0.3, 0.5];
        let phi = phi_coefficients(&p, &pi, 5).unwrap();
        assert!(phi.iter().all(|&v| (v - 0.8).abs() < 1e-15));
    }

    #[test]
    fn rejects_non_invariant_law() {
        let p = vec![vec![0.5, 0.5], vec![0.1, 0.9]];
        assert!(phi_coefficients(&p, &[0.5, 0.5], 3).is_err());
    }
}
