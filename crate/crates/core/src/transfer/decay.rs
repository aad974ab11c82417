use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{total_variation_norm, GridFunction, GridKernel, GridMap, Kernel};
use crate::conditions::Modulus;
use crate::error::{Error, Result};
use crate::numerics::{fit_line, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayVerdict {
    Contracting,
    NonContracting,
    Divergent,
}

/// Decay of `u_k = ||K^k f - mu(f)||` and its geometric fit `u_k ~ kappa rho^k u_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub values: Vec<f64>,
    pub rho_hat: f64,
    pub kappa_hat: f64,
    pub r_squared: f64,
    pub verdict: DecayVerdict,
    /// `c - mu(f)`, where `c` is the constant the discretised iterates
    /// converge to (zero when they do not settle within the step budget).
    pub discretization_offset: f64,
}

const RELATIVE_FLOOR: f64 = 1e-13;
const CONTRACTION_MARGIN: f64 = 1e-3;

/// Geometric fit of a nonnegative sequence `v_0, v_1, ...`.
fn geometric_fit(v: &[f64]) -> DecayReport {
    let v0 = v[0];
    let mut verdict = None;
    // Five consecutive increases past k = 3 signal growth.
    let mut run = 0;
    for k in 4..v.len() {
        if v[k] > v[k - 1] * (1.0 + 1e-12) && v[k] > RELATIVE_FLOOR * v0 {
            run += 1;
            if run >= 5 {
                verdict = Some(DecayVerdict::Divergent);
            }
        } else {
            run = 0;
        }
    }
    if v0 == 0.0 {
        return DecayReport { values: v.to_vec(), rho_hat: 0.0, kappa_hat: 0.0, r_squared: 1.0, verdict: DecayVerdict::Contracting, discretization_offset: 0.0 };
    }
    let pts: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &u)| u > RELATIVE_FLOOR * v0 && u > 0.0)
        .map(|(k, &u)| (k as f64, u.ln()))
        .collect();
    let (rho_hat, r_squared) = if pts.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        let fit = fit_line(&x, &y).expect("distinct abscissae");
        (fit.slope.exp(), fit.r_squared)
    } else {
        // Collapse within a couple of steps.
        let r = pts.iter().map(|&(k, ly)| ((ly - v0.ln()) / k).exp()).fold(0.0, f64::max);
        (r, 1.0)
    };
    let kappa_hat = if rho_hat > 0.0 {
        v.iter().enumerate().map(|(k, &u)| u / (v0 * rho_hat.powi(k as i32))).fold(0.0, f64::max)
    } else {
        1.0
    };
    let verdict = verdict.unwrap_or(if rho_hat < 1.0 - CONTRACTION_MARGIN {
        DecayVerdict::Contracting
    } else {
        DecayVerdict::NonContracting
    });
    DecayReport { values: v.to_vec(), rho_hat, kappa_hat, r_squared, verdict, discretization_offset: 0.0 }
}

const LIMIT_STEPS: usize = 400;

/// The constant `K^k f` settles to, if it does so within [`LIMIT_STEPS`].
fn iterate_limit<K: Kernel>(kernel: &K, f: &K::Func) -> Option<f64> {
    let one = kernel.constant(1.0);
    let scale = kernel.sup_abs(f).max(f64::MIN_POSITIVE);
    let mut g = f.clone();
    for _ in 0..LIMIT_STEPS {
        let c = kernel.mean(&g);
        if kernel.sup_abs(&kernel.combine(1.0, &g, -c, &one)) <= 1e-14 * scale {
            return Some(c);
        }
        g = kernel.apply(&g);
    }
    None
}

/// `u_k = sup |K^k f - c|` for `k = 0..=n_max`, with a geometric fit, where
/// `c` is `mu(f)` unless the iterates settle on a constant more than
/// `1e-12 sup |f|` away from it. On a grid that gap is the discretisation
/// error, which would otherwise show up as a floor under `u_k`.
pub fn sup_norm_decay<K: Kernel>(kernel: &K, f: &K::Func, n_max: usize) -> DecayReport {
    let mean = kernel.mean(f);
    let tol = 1e-12 * kernel.sup_abs(f);
    let centre = iterate_limit(kernel, f).filter(|c| (c - mean).abs() > tol).unwrap_or(mean);
    let one = kernel.constant(1.0);
    let mut g = kernel.combine(1.0, f, -centre, &one);
    let mut v = vec![kernel.sup_abs(&g)];
    for _ in 0..n_max {
        g = kernel.apply(&g);
        v.push(kernel.sup_abs(&g));
    }
    let mut r = geometric_fit(&v);
    r.discretization_offset = centre - mean;
    r
}

/// A named test function on `[0, 1]`.
pub type Witness = (&'static str, fn(f64) -> f64);

/// The 1-Lipschitz witnesses used to bound `u_n` from below.
pub fn lipschitz_witnesses() -> Vec<Witness> {
    vec![
        ("x", |x| x),
        ("|x-1/4|", |x| (x - 0.25).abs()),
        ("|x-1/2|", |x| (x - 0.5).abs()),
        ("|x-3/4|", |x| (x - 0.75).abs()),
        ("sin(2 pi x)/(2 pi)", |x| (2.0 * PI * x).sin() / (2.0 * PI)),
        ("cos(2 pi x)/(2 pi)", |x| (2.0 * PI * x).cos() / (2.0 * PI)),
    ]
}

/// Lower bound for `u_n = sup_{Lip g <= 1} ||K^n g - mu(g)||`, `n = 0..=n_max`,
/// as the maximum over a fixed witness family.
pub fn lipschitz_witness_decay(kernel: &GridKernel, n_max: usize) -> Vec<f64> {
    let mut u = vec![0.0_f64; n_max + 1];
    for (_, w) in lipschitz_witnesses() {
        let r = sup_norm_decay(kernel, &kernel.grid_fn(w), n_max);
        for (a, b) in u.iter_mut().zip(&r.values) {
            *a = a.max(*b);
        }
    }
    u
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub n: usize,
    pub u_n: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Compare observed `||K^n f - mu f||` with `c(u_n)` row by row.
pub fn modulus_bound_check(u: &[f64], modulus: &Modulus, observed: &[f64]) -> Result<Vec<ModulusRow>> {
    modulus.validate()?;
    if u.len() != observed.len() {
        return Err(Error::param("observed", "must align with u_n"));
    }
    Ok(u.iter()
        .zip(observed)
        .enumerate()
        .map(|(n, (&un, &obs))| {
            let bound = modulus.eval(un);
            ModulusRow { n, u_n: un, bound, margin: bound - obs }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvReport {
    pub per_function: Vec<DecayReport>,
    pub rho_hat: f64,
    pub kappa_hat: f64,
    pub contracting: bool,
}

/// Fit `||d K^n f|| <= kappa rho^n ||d f||` over test functions, for any
/// operator on grid functions.
pub fn check_bv_contraction(
    apply: impl Fn(&GridFunction) -> GridFunction,
    tests: &[GridFunction],
    n_max: usize,
) -> Result<BvReport> {
    if tests.is_empty() {
        return Err(Error::param("tests", "need at least one test function"));
    }
    let mut per_function = Vec::with_capacity(tests.len());
    for f in tests {
        let mut g = f.clone();
        let mut v = vec![total_variation_norm(&g)];
        for _ in 0..n_max {
            g = apply(&g);
            v.push(total_variation_norm(&g));
        }
        per_function.push(geometric_fit(&v));
    }
    let rho_hat = per_function.iter().map(|r| r.rho_hat).fold(0.0, f64::max);
    let kappa_hat = per_function.iter().map(|r| r.kappa_hat).fold(0.0, f64::max);
    let contracting = per_function.iter().all(|r| r.verdict == DecayVerdict::Contracting);
    Ok(BvReport { per_function, rho_hat, kappa_hat, contracting })
}

/// `|int (K h) f dmu - int h (f o T) dmu|` for an expanding-map kernel.
///
/// The left side integrates the interpolant of `K h`; the right side is
/// computed branch by branch, so discontinuities of `f o T` never fall
/// inside a quadrature panel.
pub fn duality_check(kernel: &GridKernel, h: &GridFunction, f: &dyn Fn(f64) -> f64) -> Result<f64> {
    let cells = kernel.cells();
    let (gx, gw) = gauss_legendre(8);
    let panel = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| -> f64 {
        let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
        r * gx.iter().zip(&gw).map(|(&x, &w)| w * g(c + r * x)).sum::<f64>()
    };
    let kh = kernel.apply(h);
    let density = |x: f64| kernel.density(x).unwrap_or(1.0);
    let mut lhs = 0.0;
    for j in 0..cells {
        let (a, b) = (j as f64 / cells as f64, (j + 1) as f64 / cells as f64);
        lhs += panel(a, b, &|x| kh.eval(x) * f(x) * density(x));
    }
    let mut rhs = 0.0;
    match kernel.map() {
        GridMap::FullBranch { offsets, lengths } => {
            for (&b0, &l) in offsets.iter().zip(lengths) {
                for j in 0..cells {
                    let (a, b) = (j as f64 / cells as f64, (j + 1) as f64 / cells as f64);
                    rhs += l * panel(a, b, &|u| h.eval(b0 + l * u) * f(u));
                }
            }
        }
        GridMap::Gauss { .. } => {
            let k_max = 4000usize;
            for k in 1..=k_max {
                let kf = k as f64;
                let pieces = if k < 64 { 64 } else { 4 };
                for j in 0..pieces {
                    let (a, b) = (j as f64 / pieces as f64, (j + 1) as f64 / pieces as f64);
                    rhs += panel(a, b, &|u| {
                        let x = 1.0 / (kf + u);
                        h.eval(x) * f(u) * density(x) * x * x
                    });
                }
            }
            let fbar = panel(0.0, 1.0, &|u| f(u));
            rhs += h.eval(0.0) * density(0.0) * fbar / (k_max as f64 + 0.5);
        }
        GridMap::Ifs { .. } => return Err(Error::Model("duality needs a deterministic map".into())),
    }
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::apply_kernel_circle;

    #[test]
    fn doubling_lipschitz_decay() {
        let k = GridKernel::integer_beta(2, GridFunction::DEFAULT_CELLS).unwrap();
        let r = sup_norm_decay(&k, &k.grid_fn(|x| x), 30);
        assert!((r.rho_hat - 0.5).abs() < 1e-9);
        assert!(r.kappa_hat <= 2.0);
        assert_eq!(r.verdict, DecayVerdict::Contracting);
    }

    #[test]
    fn gauss_decay_reaches_wirsing_rate() {
        let k = GridKernel::gauss(GridFunction::DEFAULT_CELLS, 50);
        let r = sup_norm_decay(&k, &k.grid_fn(|x| x), 25);
        assert!((r.rho_hat - 0.30366).abs() < 2e-3, "{}", r.rho_hat);
        assert!(r.discretization_offset.abs() > 1e-9 && r.discretization_offset.abs() < 1e-5);
        assert_eq!(r.verdict, DecayVerdict::Contracting);
    }

    #[test]
    fn bv_contraction_verdicts() {
        let cells = 1024;
        let tests = vec![
            GridFunction::from_fn(cells, |x| x),
            GridFunction::from_fn(cells, |x| if x < 0.5 { 1.0 } else { 0.0 }),
            GridFunction::from_fn(cells, |x| (2.0 * PI * x).cos()),
        ];
        let k = GridKernel::integer_beta(2, cells).unwrap();
        let r = check_bv_contraction(|f| k.apply(f), &tests, 20).unwrap();
        assert!(r.contracting && r.rho_hat <= 0.5 + 1e-9, "{:?}", r.rho_hat);
        let id = check_bv_contraction(|f| f.clone(), &tests, 20).unwrap();
        assert!(!id.contracting);
        let a = (5f64.sqrt() - 1.0) / 2.0;
        let step = vec![GridFunction::from_fn(cells, |x| if x < 0.5 { 1.0 } else { 0.0 })];
        let circ = check_bv_contraction(|f| apply_kernel_circle(f, a), &step, 20).unwrap();
        assert!(!circ.contracting, "{:?}", circ.rho_hat);
    }

    #[test]
    fn duality_for_doubling_and_gauss() {
        let k = GridKernel::integer_beta(2, GridFunction::DEFAULT_CELLS).unwrap();
        let h = k.grid_fn(|x| x * x - 0.2);
        let err = duality_check(&k, &h, &|x| (x - 0.3).abs()).unwrap();
        assert!(err < 1e-6, "{err}");
        let g = GridKernel::gauss(GridFunction::DEFAULT_CELLS, 50);
        let err = duality_check(&g, &h, &|x| x).unwrap();
        assert!(err < 1e-5, "{err}");
    }
}
