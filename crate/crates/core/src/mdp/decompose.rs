use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::Trajectory;
use crate::processes::ProcessModel;

/// Split of `S_k` into the block martingale `M` and a residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub m: usize,
    /// `X_{i,m}`, the sum over block `i`.
    pub blocks: Vec<f64>,
    /// `E(X_{i,m} | F_{(i-1)m})` from the kernel iterates.
    pub conditional_means: Vec<f64>,
    /// `D_{i,m} = X_{i,m} - E(X_{i,m} | F_{(i-1)m})`.
    pub increments: Vec<f64>,
    /// `R_k = sum_{i <= k/m} E(X_{i,m} | F) + (S_k - S_{m [k/m]})`, `k = 1..=n`.
    pub residual: Vec<f64>,
    /// `|E(D_{i,m} | F_{(i-1)m})|` per block, each conditional mean recomputed
    /// by summing over transitions and compared with the kernel route.
    pub increment_conditional_means: Vec<f64>,
    /// `max_k |M_k + R_k - S_k|`.
    pub reconstruction_error: f64,
    /// `m B + max_j |sum_{i <= j} E(X_{i,m} | F)|`.
    pub residual_bound: f64,
    pub residual_sup: f64,
}

impl BlockDecomposition {
    pub fn max_increment_conditional_mean(&self) -> f64 {
        self.increment_conditional_means.iter().copied().fold(0.0, f64::max)
    }
}

/// Block martingale decomposition of a trajectory of a kernel model.
pub fn block_martingale_decompose(model: &ProcessModel, traj: &Trajectory, m: usize) -> Result<BlockDecomposition> {
    let kernel = model.kernel()?;
    if m == 0 {
        return Err(Error::param("m", "block length must be positive"));
    }
    let x = &traj.path.values;
    let n = x.len();
    if traj.states.len() != n + 1 {
        return Err(Error::InsufficientData(format!("need {} states for a path of length {n}", n + 1)));
    }
    let nb = n / m;
    if nb == 0 {
        return Err(Error::InsufficientData(format!("path of length {n} holds no block of length {m}")));
    }
    let starts: Vec<f64> = (0..nb).map(|i| traj.states[i * m]).collect();
    let conditional_means = kernel.block_means_at(&starts, m);
    let blocks: Vec<f64> = (0..nb).map(|i| x[i * m..(i + 1) * m].iter().sum()).collect();
    let increments: Vec<f64> = blocks.iter().zip(&conditional_means).map(|(b, c)| b - c).collect();
    let increment_conditional_means: Vec<f64> = starts
        .iter()
        .zip(&conditional_means)
        .map(|(&s, &c)| (kernel.block_mean_by_transitions(s, m) - c).abs())
        .collect();

    let mut residual = Vec::with_capacity(n);
    let mut err: f64 = 0.0;
    let (mut s, mut mart, mut drift, mut frag) = (0.0, 0.0, 0.0, 0.0);
    let mut drift_sup: f64 = 0.0;
    for k in 1..=n {
        s += x[k - 1];
        frag += x[k - 1];
        if k % m == 0 && k / m <= nb {
            let i = k / m - 1;
            mart += increments[i];
            drift += conditional_means[i];
            drift_sup = drift_sup.max(drift.abs());
            frag = 0.0;
        }
        let r = drift + frag;
        residual.push(r);
        err = err.max((mart + r - s).abs());
    }
    let residual_sup = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(BlockDecomposition {
        m,
        blocks,
        conditional_means,
        increments,
        residual,
        increment_conditional_means,
        reconstruction_error: err,
        residual_bound: m as f64 * model.bound() + drift_sup,
        residual_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{FourierMode, IrrationalSpec};
    use crate::processes::{make_circle_walk, make_iid, Law};
    use crate::rng::RngStream;

    #[test]
    fn iid_increments_are_the_blocks() {
        let m = make_iid(Law::Uniform { c: 1.0 }).unwrap();
        let t = m.sample_trajectory(103, RngStream::new(4, 4)).unwrap();
        let d = block_martingale_decompose(&m, &t, 10).unwrap();
        assert_eq!(d.blocks, d.increments);
        assert!((1..=10).all(|i| d.residual[10 * i - 1] == 0.0));
        let tail: f64 = t.path.values[100..].iter().sum();
        assert!((d.residual[102] - tail).abs() < 1e-15);
    }

    #[test]
    fn circle_walk_conditional_means_vanish() {
        let w = make_circle_walk(&IrrationalSpec::golden(), &[FourierMode { k: 1, re: 0.5, im: 0.0 }]).unwrap();
        let t = w.sample_trajectory(4096, RngStream::new(9, 1)).unwrap();
        let d = block_martingale_decompose(&w, &t, 8).unwrap();
        assert!(d.max_increment_conditional_mean() < 1e-10);
        assert!(d.reconstruction_error < 1e-12);
        assert!(d.residual_sup <= d.residual_bound + 1e-12);
    }

    #[test]
    fn kernel_free_models_refused() {
        let m = crate::processes::ModelSpec::Linear {
            spec: crate::processes::LinearSpec {
                coefficients: crate::processes::Coefficients::Geometric { scale: 1.0, rho: 0.5, two_sided: false },
                innovations: crate::processes::Innovations::Iid { law: Law::Rademacher },
                observable: crate::processes::LinearObservable::Identity,
                tolerance: 1e-8,
            },
        }
        .build()
        .unwrap();
        let t = Trajectory { path: m.sample(16, RngStream::new(1, 1)).unwrap(), states: vec![0.0; 17] };
        assert!(block_martingale_decompose(&m, &t, 4).is_err());
    }
}
