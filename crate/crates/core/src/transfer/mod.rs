//! Markov kernels and transfer operators.
//!
//! A kernel model is a stationary chain `(Y_k)` with kernel `K` and invariant
//! law `mu`, together with a centred observable `f` and a conditional noise
//! variance `v`: `X_k = f(Y_k) + e_k` where the `e_k` are independent, centred,
//! with `E(e_k^2 | Y) = v(Y_k)`. Then `E(X_{k+j} | F_k) = K^j f (Y_k)` and all
//! conditional second moments reduce to kernel arithmetic.
//!
//! Three function spaces are supported: vectors on a finite state space,
//! piecewise-linear functions on a uniform grid of `[0, 1]`, and
//! trigonometric polynomials on the circle (exact for the circle walk).

mod circle;
mod decay;
mod finite;
mod grid;
mod gridkernel;

pub use circle::{apply_kernel_circle, CircleKernel, TrigPoly};
pub use decay::{
    check_bv_contraction, duality_check, lipschitz_witness_decay, modulus_bound_check, sup_norm_decay,
    BvReport, DecayReport, DecayVerdict, ModulusRow,
};
pub use finite::{stationary_distribution, FiniteKernel};
pub use grid::{total_variation_norm, GridFunction};
pub use gridkernel::{apply_pf_integer_beta, GridKernel, GridMap, IfsLaw};

use crate::error::{Error, Result};

/// Iterates whose sup norm falls below this are treated as exhausted.
pub const NEGLIGIBLE: f64 = 1e-18;

/// A Markov operator acting on a space of functions of the state.
pub trait Kernel: Send + Sync {
    type Func: Clone + Send + Sync;

    fn apply(&self, f: &Self::Func) -> Self::Func;
    /// `mu(f)` for the invariant law.
    fn mean(&self, f: &Self::Func) -> f64;
    /// Essential sup of `|f|` over the state space (grid nodes for grid kernels).
    fn sup_abs(&self, f: &Self::Func) -> f64;
    fn constant(&self, c: f64) -> Self::Func;
    /// `a f + b g`.
    fn combine(&self, a: f64, f: &Self::Func, b: f64, g: &Self::Func) -> Self::Func;
    fn product(&self, f: &Self::Func, g: &Self::Func) -> Self::Func;
    fn eval(&self, f: &Self::Func, state: f64) -> f64;
    /// One-step transition from `state` as `(probability, next state)` pairs,
    /// when it has finite support.
    fn branches(&self, state: f64) -> Option<Vec<(f64, f64)>>;
}

/// Kernel, centred observable and conditional noise variance.
#[derive(Debug, Clone)]
pub struct KernelModel<K: Kernel> {
    pub kernel: K,
    pub observable: K::Func,
    pub noise_var: K::Func,
}

impl<K: Kernel> KernelModel<K> {
    /// `sup |K^n f|` for `n = 1..=n_max`.
    pub fn cond_mean_norms(&self, n_max: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n_max);
        let mut g = self.observable.clone();
        while out.len() < n_max {
            g = self.kernel.apply(&g);
            let s = self.kernel.sup_abs(&g);
            out.push(s);
            if s < NEGLIGIBLE {
                // K is a sup-norm contraction, so later iterates are smaller still.
                out.resize(n_max, s);
            }
        }
        out
    }

    /// `sup |sum_{k=1}^n K^k f|` for `n = 1..=n_max`, i.e. `||E(S_n | F_0)||`.
    pub fn cond_sum_norms(&self, n_max: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n_max);
        let mut g = self.observable.clone();
        let mut c = self.kernel.constant(0.0);
        while out.len() < n_max {
            g = self.kernel.apply(&g);
            c = self.kernel.combine(1.0, &c, 1.0, &g);
            out.push(self.kernel.sup_abs(&c));
            if self.kernel.sup_abs(&g) < NEGLIGIBLE {
                let last = *out.last().unwrap();
                out.resize(n_max, last);
            }
        }
        out
    }

    /// `x -> E_x(S_n^2)` for `n = 1..=n_max`, handed to `visit(n, function)`.
    ///
    /// Uses `E_x(S_n^2) = sum_{i=1}^n K^i H_{n-i}` with
    /// `H_r = f^2 + v + 2 sum_{d=1}^r f K^d f`, evaluated by the recursion
    /// `A_k = K(H_{k-1} + A_{k-1})`.
    pub fn for_each_second_moment(&self, n_max: usize, mut visit: impl FnMut(usize, &K::Func)) {
        let k = &self.kernel;
        let f = &self.observable;
        let mut h = k.combine(1.0, &k.product(f, f), 1.0, &self.noise_var);
        let mut g = f.clone();
        let mut a = k.apply(&h);
        visit(1, &a);
        for n in 2..=n_max {
            g = k.apply(&g);
            h = k.combine(1.0, &h, 2.0, &k.product(f, &g));
            a = k.apply(&k.combine(1.0, &h, 1.0, &a));
            visit(n, &a);
        }
    }

    /// `sup_x |n^{-1} E_x(S_n^2) - sigma2|` at each requested `n`.
    pub fn second_moment_deviation(&self, ns: &[usize], sigma2: f64) -> Vec<f64> {
        let n_max = ns.iter().copied().max().unwrap_or(0);
        let mut out = vec![f64::NAN; ns.len()];
        self.for_each_second_moment(n_max, |n, a| {
            for (slot, &m) in out.iter_mut().zip(ns) {
                if m == n {
                    let shifted = self.kernel.combine(1.0 / n as f64, a, -sigma2, &self.kernel.constant(1.0));
                    *slot = self.kernel.sup_abs(&shifted);
                }
            }
        });
        out
    }

    /// `h_{ij}(y) = E(X_i X_j | Y_0 = y)` for `1 <= i <= j`.
    pub fn pair_moment(&self, i: usize, j: usize) -> K::Func {
        let k = &self.kernel;
        let mut g = self.observable.clone();
        for _ in 0..(j - i) {
            g = k.apply(&g);
        }
        let mut h = k.product(&self.observable, &g);
        if i == j {
            h = k.combine(1.0, &h, 1.0, &self.noise_var);
        }
        for _ in 0..i {
            h = k.apply(&h);
        }
        h
    }

    /// `sup |E(X_i X_j | F_{-n}) - E(X_i X_j)|` for each `n` in `ns`.
    pub fn mix_deviation(&self, i: usize, j: usize, ns: &[usize]) -> Vec<f64> {
        let k = &self.kernel;
        let h = self.pair_moment(i, j);
        let mean = k.mean(&h);
        let n_max = ns.iter().copied().max().unwrap_or(0);
        let mut out = vec![f64::NAN; ns.len()];
        let mut g = h;
        for n in 0..=n_max {
            if n > 0 {
                g = k.apply(&g);
            }
            for (slot, &m) in out.iter_mut().zip(ns) {
                if m == n {
                    *slot = k.sup_abs(&k.combine(1.0, &g, -mean, &k.constant(1.0)));
                }
            }
        }
        out
    }

    /// `sum_{j=1}^m K^j f`, the conditional mean of the next block of length `m`.
    pub fn block_mean_function(&self, m: usize) -> K::Func {
        let k = &self.kernel;
        let mut g = self.observable.clone();
        let mut acc = k.constant(0.0);
        for _ in 0..m {
            g = k.apply(&g);
            acc = k.combine(1.0, &acc, 1.0, &g);
        }
        acc
    }

    /// Independent evaluation of `E(X_1 + ... + X_m | Y_0 = state)`, by
    /// enumerating all `m`-step branches when the transition is finitely
    /// supported and small enough, and by nested one-step expectations of
    /// the kernel iterates otherwise.
    pub fn block_mean_by_transitions(&self, state: f64, m: usize) -> f64 {
        let k = &self.kernel;
        if let Some(first) = k.branches(state) {
            if (first.len() as f64).powi(m as i32) <= 1.0e6 {
                let mut total = 0.0;
                let mut frontier = vec![(1.0, state)];
                for _ in 0..m {
                    let mut next = Vec::with_capacity(frontier.len() * first.len());
                    for &(p, s) in &frontier {
                        for (q, t) in k.branches(s).unwrap_or_default() {
                            next.push((p * q, t));
                        }
                    }
                    total += next.iter().map(|&(p, t)| p * k.eval(&self.observable, t)).sum::<f64>();
                    frontier = next;
                }
                return total;
            }
            let mut total = 0.0;
            let mut g = self.observable.clone();
            for _ in 0..m {
                total += first.iter().map(|&(p, t)| p * k.eval(&g, t)).sum::<f64>();
                g = k.apply(&g);
            }
            return total;
        }
        // No finite transition: fall back to the operator route.
        k.eval(&self.block_mean_function(m), state)
    }
}

/// A kernel model over one of the supported function spaces.
#[derive(Debug, Clone)]
pub enum AnyKernelModel {
    Finite(KernelModel<FiniteKernel>),
    Grid(KernelModel<GridKernel>),
    Circle(KernelModel<CircleKernel>),
}

macro_rules! dispatch {
    ($s:expr, $m:ident => $e:expr) => {
        match $s {
            AnyKernelModel::Finite($m) => $e,
            AnyKernelModel::Grid($m) => $e,
            AnyKernelModel::Circle($m) => $e,
        }
    };
}

impl AnyKernelModel {
    pub fn space(&self) -> &'static str {
        match self {
            AnyKernelModel::Finite(_) => "finite",
            AnyKernelModel::Grid(_) => "grid",
            AnyKernelModel::Circle(_) => "circle",
        }
    }

    pub fn cond_mean_norms(&self, n_max: usize) -> Vec<f64> {
        dispatch!(self, m => m.cond_mean_norms(n_max))
    }

    pub fn cond_sum_norms(&self, n_max: usize) -> Vec<f64> {
        dispatch!(self, m => m.cond_sum_norms(n_max))
    }

    pub fn second_moment_deviation(&self, ns: &[usize], sigma2: f64) -> Vec<f64> {
        dispatch!(self, m => m.second_moment_deviation(ns, sigma2))
    }

    pub fn mix_deviation(&self, i: usize, j: usize, ns: &[usize]) -> Vec<f64> {
        dispatch!(self, m => m.mix_deviation(i, j, ns))
    }

    /// `||E(X_1^2 | F_0)||_inf`.
    pub fn cond_square_norm_one(&self) -> f64 {
        dispatch!(self, m => {
            let h = m.pair_moment(1, 1);
            m.kernel.sup_abs(&h)
        })
    }

    /// `sup |f|` of the centred observable.
    pub fn observable_sup(&self) -> f64 {
        dispatch!(self, m => m.kernel.sup_abs(&m.observable))
    }

    /// Conditional block means `sum_{j=1}^m K^j f (state)` at each given state.
    pub fn block_means_at(&self, states: &[f64], m: usize) -> Vec<f64> {
        dispatch!(self, km => {
            let g = km.block_mean_function(m);
            states.iter().map(|&s| km.kernel.eval(&g, s)).collect()
        })
    }

    pub fn block_mean_by_transitions(&self, state: f64, m: usize) -> f64 {
        dispatch!(self, km => km.block_mean_by_transitions(state, m))
    }

    pub fn as_grid(&self) -> Result<&KernelModel<GridKernel>> {
        match self {
            AnyKernelModel::Grid(m) => Ok(m),
            _ => Err(Error::Model("operation needs a kernel on a grid of [0, 1]".into())),
        }
    }
}

/// `max_x |sum_{k=1}^n (K^k f - mu f)(x)| = ||E(S_n | F_0)||_inf`.
pub fn conditional_sum_norm(model: &AnyKernelModel, n: usize) -> f64 {
    model.cond_sum_norms(n).last().copied().unwrap_or(0.0)
}

/// `||n^{-1} E(S_n^2 | F_0) - sigma2||_inf`, refused beyond `cap`.
pub fn conditional_square_norm(model: &AnyKernelModel, n: usize, sigma2: f64, cap: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    if n > cap {
        return Err(Error::Capacity(format!(
            "conditional second moment at n = {n} exceeds the cap {cap} (cost grows linearly in n times the state space size)"
        )));
    }
    Ok(model.second_moment_deviation(&[n], sigma2)[0])
}
