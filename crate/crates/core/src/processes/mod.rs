//! The example processes: iid baselines, the alternating sequence, linear
//! processes, iterated random functions, expanding maps, the walk on the
//! circle and the renewal counterexample.
//!
//! Every model is stationary, bounded and centred. Models driven by a Markov
//! chain also carry an exact [`AnyKernelModel`], so conditional expectations
//! given the current state are available in closed or grid form.
//!
//! Expanding maps are generated in the time order `X_k = f(T^{n+1-k} x)`.
//! The states `Y_k = T^{n+1-k} x` then form the Markov chain whose kernel is
//! the Perron-Frobenius operator, and they are drawn exactly by applying
//! random inverse branches to a draw from the invariant law.

mod chain;
mod law;
mod linear;

pub use chain::{stationary_age_law, CounterexampleChain, TauLaw};
pub use law::Law;
pub use linear::{Coefficients, Innovations, LinearObservable, LinearProcess, LinearSpec, MAX_RADIUS};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::diophantine::{trig_poly, validate_modes, FourierMode, IrrationalSpec, RealNumber};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::path::{Path, Trajectory};
use crate::rng::RngStream;
use crate::transfer::{
    AnyKernelModel, CircleKernel, FiniteKernel, GridFunction, GridKernel, IfsLaw, Kernel, KernelModel, TrigPoly,
};

/// Supported expanding maps of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Doubling,
    /// `x -> beta x mod 1`; only integer `beta` is supported.
    Beta { beta: f64 },
    /// Full-branch piecewise-linear map with the given branch lengths.
    PiecewiseLinear { lengths: Vec<f64> },
    Gauss,
}

/// Serializable description of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Iid {
        law: Law,
    },
    /// `X_k = Q_k + Y_k` with `Q_{k+1} = -Q_k`, `Q_0 = +-1`, and iid `Y`.
    Alternating {
        noise: Law,
    },
    /// Parameters nested under `spec`.
    Linear {
        spec: LinearSpec,
    },
    /// `Y_n = rho Y_{n-1} + (1 - rho) e_n`, `X_n = f(Y_n) - mu(f)`.
    IteratedFunction {
        rho: f64,
        law: IfsLaw,
        observable: Observable,
    },
    ExpandingMap {
        map: MapSpec,
        observable: Observable,
    },
    /// `xi_k = xi_{k-1} +- a mod 1`, `X_k = f(xi_k) - f_hat(0)`.
    CircleWalk {
        step: IrrationalSpec,
        modes: Vec<FourierMode>,
    },
    CounterexampleChain {
        #[serde(default)]
        tau: TauLaw,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<ProcessModel> {
        match self {
            ModelSpec::Iid { law } => make_iid(*law),
            ModelSpec::Alternating { noise } => make_alternating_plus_iid(*noise),
            ModelSpec::Linear { spec } => make_linear_process(spec.clone()),
            ModelSpec::IteratedFunction { rho, law, observable } => make_iterated_function(*rho, *law, observable.clone()),
            ModelSpec::ExpandingMap { map, observable } => make_expanding_map(map, observable.clone()),
            ModelSpec::CircleWalk { step, modes } => make_circle_walk(step, modes),
            ModelSpec::CounterexampleChain { tau } => make_counterexample_chain(tau),
        }
    }
}

#[derive(Debug, Clone)]
enum Branches {
    Full { offsets: Vec<f64>, lengths: Vec<f64>, cdf: Vec<f64>, uniform: bool },
    Gauss,
}

#[derive(Debug, Clone)]
enum Kind {
    Iid(Law),
    Alternating(Law),
    Linear(Box<LinearProcess>),
    Ifs { rho: f64, law: IfsLaw, observable: Observable, centre: f64, burn_in: usize },
    Expanding { branches: Branches, observable: Observable, centre: f64 },
    Circle { a: f64, poly: TrigPoly },
    Chain(Box<CounterexampleChain>),
}

/// A stationary, bounded, mean-zero sequence.
#[derive(Debug, Clone)]
pub struct ProcessModel {
    name: String,
    bound: f64,
    spec: ModelSpec,
    kind: Kind,
    kernel: Option<AnyKernelModel>,
    metadata: BTreeMap<String, f64>,
}

/// Burn-in tolerance for the iterated random function.
pub const BURN_IN_TOLERANCE: f64 = 1e-12;

/// `x = 2^u - 1`, the inverse of the Gauss measure's distribution function.
pub fn gauss_inverse_cdf(u: f64) -> f64 {
    u.exp2() - 1.0
}

pub fn make_iid(law: Law) -> Result<ProcessModel> {
    law.validate()?;
    if law == Law::Zero {
        return Err(Error::Model("the zero law gives a degenerate iid model".into()));
    }
    let kernel = FiniteKernel::new(vec![vec![(0, 1.0)]], Some(vec![1.0]))?;
    let km = KernelModel { kernel, observable: vec![0.0], noise_var: vec![law.variance()] };
    Ok(ProcessModel::new("iid", law.bound(), ModelSpec::Iid { law }, Kind::Iid(law), Some(AnyKernelModel::Finite(km))))
}

pub fn make_alternating_plus_iid(noise: Law) -> Result<ProcessModel> {
    noise.validate()?;
    let kernel = FiniteKernel::new(vec![vec![(1, 1.0)], vec![(0, 1.0)]], Some(vec![0.5, 0.5]))?;
    let v = noise.variance();
    let km = KernelModel { kernel, observable: vec![1.0, -1.0], noise_var: vec![v, v] };
    Ok(ProcessModel::new(
        "alternating",
        1.0 + noise.bound(),
        ModelSpec::Alternating { noise },
        Kind::Alternating(noise),
        Some(AnyKernelModel::Finite(km)),
    ))
}

pub fn make_linear_process(spec: LinearSpec) -> Result<ProcessModel> {
    let lp = LinearProcess::new(spec.clone())?;
    let mut m = ProcessModel::new("linear", lp.bound(), ModelSpec::Linear { spec }, Kind::Linear(Box::new(lp.clone())), None);
    m.metadata.insert("truncation_radius".into(), lp.radius() as f64);
    m.metadata.insert("truncation_error".into(), lp.truncation_error());
    Ok(m)
}

pub fn make_iterated_function(rho: f64, law: IfsLaw, observable: Observable) -> Result<ProcessModel> {
    observable.validate()?;
    let kernel = GridKernel::ifs(rho, law, GridFunction::DEFAULT_CELLS)?;
    let raw = kernel.grid_fn(|x| observable.eval(x));
    let centre = match observable {
        Observable::Identity => law.mean(),
        _ => kernel.mean(&raw),
    };
    let (f, offset) = recentre_on_grid(&kernel, raw.map(|v| v - centre));
    let bound = f.sup_abs().max((observable.sup_abs() - centre).abs()).max(centre.abs());
    let burn_in = (BURN_IN_TOLERANCE.ln() / rho.ln()).ceil() as usize;
    let noise = kernel.constant(0.0);
    let km = KernelModel { kernel, observable: f, noise_var: noise };
    let mut m = ProcessModel::new(
        "iterated-function",
        bound,
        ModelSpec::IteratedFunction { rho, law, observable: observable.clone() },
        Kind::Ifs { rho, law, observable, centre, burn_in },
        Some(AnyKernelModel::Grid(km)),
    );
    m.metadata.insert("burn_in".into(), burn_in as f64);
    m.metadata.insert("centre".into(), centre);
    m.metadata.insert("grid_centre_offset".into(), offset);
    Ok(m)
}

pub fn make_expanding_map(map: &MapSpec, observable: Observable) -> Result<ProcessModel> {
    observable.validate()?;
    let cells = GridFunction::DEFAULT_CELLS;
    let (name, kernel, branches) = match map {
        MapSpec::Doubling => ("doubling".to_string(), GridKernel::integer_beta(2, cells)?, full_branches(&[0.5, 0.5], true)),
        MapSpec::Beta { beta } => {
            if beta.fract() != 0.0 || *beta < 2.0 {
                return Err(Error::Model(format!(
                    "beta = {beta}: only integer beta >= 2 is supported (non-integer beta-transformations are not full-branch)"
                )));
            }
            let b = *beta as u32;
            (format!("beta-{b}"), GridKernel::integer_beta(b, cells)?, full_branches(&vec![1.0 / b as f64; b as usize], true))
        }
        MapSpec::PiecewiseLinear { lengths } => {
            ("piecewise-linear".to_string(), GridKernel::full_branch(lengths, cells)?, full_branches(lengths, false))
        }
        MapSpec::Gauss => ("gauss".to_string(), GridKernel::gauss(cells, 50), Branches::Gauss),
    };
    let centre = match (map, &observable) {
        (_, Observable::Constant { value }) => *value,
        (MapSpec::Gauss, _) => observable.integrate_against(|x| 1.0 / ((1.0 + x) * std::f64::consts::LN_2)),
        _ => observable.integrate_against(|_| 1.0),
    };
    let (f, offset) = recentre_on_grid(&kernel, kernel.grid_fn(|x| observable.eval(x) - centre));
    let bound = (observable.sup_abs() + centre.abs()).max(f.sup_abs());
    let noise = kernel.constant(0.0);
    let km = KernelModel { kernel, observable: f, noise_var: noise };
    let mut m = ProcessModel::new(
        &name,
        bound,
        ModelSpec::ExpandingMap { map: map.clone(), observable: observable.clone() },
        Kind::Expanding { branches, observable, centre },
        Some(AnyKernelModel::Grid(km)),
    );
    m.metadata.insert("centre".into(), centre);
    m.metadata.insert("grid_centre_offset".into(), offset);
    Ok(m)
}

/// Shift a grid observable by the constant its iterates converge to, so that
/// `K^n f -> 0` on the grid. The shift is the discretisation error of the
/// exact centring and is returned for the model metadata.
fn recentre_on_grid(kernel: &GridKernel, f: GridFunction) -> (GridFunction, f64) {
    let scale = f.sup_abs().max(f64::MIN_POSITIVE);
    let mut g = f.clone();
    for _ in 0..RECENTRE_STEPS {
        let (lo, hi) = g.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo <= 1e-14 * scale {
            let offset = 0.5 * (lo + hi);
            return (f.map(|v| v - offset), offset);
        }
        g = kernel.apply(&g);
    }
    (f, 0.0)
}

const RECENTRE_STEPS: usize = 400;

fn full_branches(lengths: &[f64], uniform: bool) -> Branches {
    let mut offsets = Vec::with_capacity(lengths.len());
    let mut cdf = Vec::with_capacity(lengths.len());
    let mut acc = 0.0;
    for &l in lengths {
        offsets.push(acc);
        acc += l;
        cdf.push(acc);
    }
    *cdf.last_mut().unwrap() = 1.0;
    Branches::Full { offsets, lengths: lengths.to_vec(), cdf, uniform }
}

pub fn make_circle_walk(step: &IrrationalSpec, modes: &[FourierMode]) -> Result<ProcessModel> {
    let a_num = RealNumber::new(step)?;
    if a_num.is_rational() {
        return Err(Error::Model("the walk step must be irrational".into()));
    }
    let a = a_num.to_f64();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param("step", format!("{a} must lie in (0, 1)")));
    }
    validate_modes(modes)?;
    let poly = trig_poly(modes);
    let bound = modes.iter().map(|m| 2.0 * m.abs()).sum();
    let km = KernelModel { kernel: CircleKernel::new(a), observable: poly.clone(), noise_var: TrigPoly::zero() };
    let mut m = ProcessModel::new(
        "circle-walk",
        bound,
        ModelSpec::CircleWalk { step: step.clone(), modes: modes.to_vec() },
        Kind::Circle { a, poly },
        Some(AnyKernelModel::Circle(km)),
    );
    m.metadata.insert("step".into(), a);
    Ok(m)
}

pub fn make_counterexample_chain(tau: &TauLaw) -> Result<ProcessModel> {
    let chain = CounterexampleChain::new(tau)?;
    let kernel = chain.kernel()?;
    let d = chain.states();
    let noise: Vec<f64> = (0..d).map(|j| if j == 0 { 0.0 } else { 1.0 }).collect();
    let km = KernelModel { kernel, observable: vec![0.0; d], noise_var: noise };
    let mut m = ProcessModel::new(
        "counterexample-chain",
        1.0,
        ModelSpec::CounterexampleChain { tau: tau.clone() },
        Kind::Chain(Box::new(chain.clone())),
        Some(AnyKernelModel::Finite(km)),
    );
    m.metadata.insert("mean_return_time".into(), chain.mean_return());
    m.metadata.insert("states".into(), d as f64);
    Ok(m)
}

fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

impl ProcessModel {
    fn new(name: &str, bound: f64, spec: ModelSpec, kind: Kind, kernel: Option<AnyKernelModel>) -> Self {
        Self { name: name.to_string(), bound, spec, kind, kernel, metadata: BTreeMap::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `||X_0||_inf`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Construction details worth reporting (truncation radius, burn-in, ...).
    pub fn metadata(&self) -> &BTreeMap<String, f64> {
        &self.metadata
    }

    pub fn has_kernel(&self) -> bool {
        self.kernel.is_some()
    }

    pub fn kernel(&self) -> Result<&AnyKernelModel> {
        self.kernel.as_ref().ok_or_else(|| {
            Error::Model(format!("model `{}` has no Markov kernel; conditional expectations are not available", self.name))
        })
    }

    /// The iid law, for models that are iid.
    pub fn iid_law(&self) -> Option<Law> {
        match self.kind {
            Kind::Iid(law) => Some(law),
            _ => None,
        }
    }

    pub fn linear(&self) -> Option<&LinearProcess> {
        match &self.kind {
            Kind::Linear(lp) => Some(lp),
            _ => None,
        }
    }

    /// `||E(X_n | F_0)||_inf` for `n = 1..=n_max`.
    pub fn conditional_mean_norms(&self, n_max: usize) -> Result<Vec<f64>> {
        match (&self.kind, &self.kernel) {
            (Kind::Linear(lp), _) => lp.conditional_mean_norms(n_max),
            (_, Some(k)) => Ok(k.cond_mean_norms(n_max)),
            _ => Err(Error::Model("no conditional expectations for this model".into())),
        }
    }

    /// `||E(S_n | F_0)||_inf` for `n = 1..=n_max`.
    pub fn conditional_sum_norms(&self, n_max: usize) -> Result<Vec<f64>> {
        match (&self.kind, &self.kernel) {
            (Kind::Linear(lp), _) => lp.conditional_sum_norms(n_max),
            (_, Some(k)) => Ok(k.cond_sum_norms(n_max)),
            _ => Err(Error::Model("no conditional expectations for this model".into())),
        }
    }

    pub fn sample(&self, n: usize, stream: RngStream) -> Result<Path> {
        if n == 0 {
            return Err(Error::param("n", "path length must be positive"));
        }
        let mut rng = stream.rng();
        Ok(Path::new(self.generate(n, &mut rng, None), stream))
    }

    /// Path together with the chain states `Y_0..=Y_n`.
    pub fn sample_trajectory(&self, n: usize, stream: RngStream) -> Result<Trajectory> {
        if n == 0 {
            return Err(Error::param("n", "path length must be positive"));
        }
        self.kernel()?;
        let mut rng = stream.rng();
        let mut states = Vec::with_capacity(n + 1);
        let values = self.generate(n, &mut rng, Some(&mut states));
        Ok(Trajectory { path: Path::new(values, stream), states })
    }

    fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, mut states: Option<&mut Vec<f64>>) -> Vec<f64> {
        let mut push = |s: f64| {
            if let Some(v) = states.as_deref_mut() {
                v.push(s);
            }
        };
        match &self.kind {
            Kind::Iid(law) => {
                push(0.0);
                (0..n)
                    .map(|_| {
                        push(0.0);
                        law.sample(rng)
                    })
                    .collect()
            }
            Kind::Alternating(law) => {
                let mut q = sign(rng);
                push(if q > 0.0 { 0.0 } else { 1.0 });
                (0..n)
                    .map(|_| {
                        q = -q;
                        push(if q > 0.0 { 0.0 } else { 1.0 });
                        q + law.sample(rng)
                    })
                    .collect()
            }
            Kind::Linear(lp) => lp.sample(n, rng),
            Kind::Ifs { rho, law, observable, centre, burn_in } => {
                let step = |y: f64, rng: &mut R| -> f64 {
                    let e = match law {
                        IfsLaw::Uniform => rng.gen::<f64>(),
                        IfsLaw::TwoPoint { p } => {
                            if rng.gen::<f64>() < *p {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                    rho * y + (1.0 - rho) * e
                };
                let mut y: f64 = rng.gen();
                for _ in 0..*burn_in {
                    y = step(y, rng);
                }
                push(y);
                (0..n)
                    .map(|_| {
                        y = step(y, rng);
                        push(y);
                        observable.eval(y) - centre
                    })
                    .collect()
            }
            Kind::Expanding { branches, observable, centre } => {
                let mut y = match branches {
                    Branches::Full { .. } => rng.gen::<f64>(),
                    Branches::Gauss => gauss_inverse_cdf(rng.gen()),
                };
                push(y);
                (0..n)
                    .map(|_| {
                        y = inverse_branch(branches, y, rng);
                        push(y);
                        observable.eval(y) - centre
                    })
                    .collect()
            }
            Kind::Circle { a, poly } => {
                let mut y: f64 = rng.gen();
                push(y);
                (0..n)
                    .map(|_| {
                        y = (y + sign(rng) * a).rem_euclid(1.0);
                        push(y);
                        poly.eval(y)
                    })
                    .collect()
            }
            Kind::Chain(chain) => {
                let mut y = chain.start(rng);
                push(y as f64);
                (0..n)
                    .map(|_| {
                        y = chain.step(y, rng);
                        push(y as f64);
                        let xi = sign(rng);
                        if y == 0 {
                            0.0
                        } else {
                            xi
                        }
                    })
                    .collect()
            }
        }
    }
}

/// One backward step: a random inverse branch of `T`, drawn with the
/// Perron-Frobenius weights at `y`.
fn inverse_branch<R: Rng + ?Sized>(branches: &Branches, y: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    match branches {
        Branches::Full { offsets, lengths, cdf, uniform } => {
            let i = if *uniform {
                ((u * lengths.len() as f64) as usize).min(lengths.len() - 1)
            } else {
                cdf.partition_point(|&c| c <= u).min(lengths.len() - 1)
            };
            offsets[i] + lengths[i] * y
        }
        Branches::Gauss => {
            // P(d <= k | y) = 1 - (1 + y) / (k + 1 + y).
            let d = ((1.0 + y) / (1.0 - u) - 1.0 - y).ceil().max(1.0);
            1.0 / (d + y)
        }
    }
}

/// FNV-1a hash of a label, for naming experiments in [`RngStream::derive`].
pub fn experiment_id(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Run `job(r, stream_r)` for `r < replicas` in parallel; results keep replica order.
pub fn map_replicas<T, F>(replicas: usize, master_seed: u64, experiment: u64, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, RngStream) -> T + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|r| job(r, RngStream::derive(master_seed, experiment, r as u64)))
        .collect()
}

/// `replicas` independent paths of length `n`.
pub fn sample_paths(model: &ProcessModel, n: usize, replicas: usize, master_seed: u64, experiment: u64) -> Result<Vec<Path>> {
    map_replicas(replicas, master_seed, experiment, |_, s| model.sample(n, s)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rademacher() -> ProcessModel {
        make_iid(Law::Rademacher).unwrap()
    }

    fn golden_cos() -> ProcessModel {
        make_circle_walk(&IrrationalSpec::golden(), &[FourierMode { k: 1, re: 0.5, im: 0.0 }]).unwrap()
    }

    #[test]
    fn grid_observables_have_vanishing_iterates() {
        let m = make_expanding_map(&MapSpec::Gauss, Observable::Identity).unwrap();
        let norms = m.conditional_mean_norms(60).unwrap();
        assert!(norms[59] < 1e-14, "{}", norms[59]);
        assert!(m.metadata()["grid_centre_offset"].abs() < 1e-5);
    }

    #[test]
    fn iid_examples() {
        let m = rademacher();
        let p = m.sample(4, RngStream::new(1, 0)).unwrap();
        assert!(p.values.iter().all(|v| v.abs() == 1.0));
        assert_eq!(make_iid(Law::Uniform { c: 1.0 }).unwrap().bound(), 1.0);
        let big = m.sample(1_000_000, RngStream::new(2, 0)).unwrap();
        assert!((big.sum() / 1e6).abs() < 0.004);
        assert!(make_iid(Law::TwoPoint { p: 0.5, a: 1.0, b: 0.0 }).is_err());
    }

    #[test]
    fn identical_streams_reproduce_paths() {
        for m in [rademacher(), golden_cos(), make_counterexample_chain(&TauLaw::default()).unwrap()] {
            let a = m.sample(500, RngStream::new(9, 3)).unwrap();
            let b = m.sample(500, RngStream::new(9, 3)).unwrap();
            assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn alternating_partial_sums_bounded() {
        let m = make_alternating_plus_iid(Law::Zero).unwrap();
        let t = m.sample_trajectory(101, RngStream::new(4, 0)).unwrap();
        let q0 = if t.states[0] == 0.0 { 1.0 } else { -1.0 };
        for (k, x) in t.path.values.iter().enumerate() {
            assert_eq!(*x, if k % 2 == 0 { -q0 } else { q0 });
        }
        let s = crate::path::partial_sums(&t.path.values);
        assert!(s.iter().all(|v| v.abs() <= 1.0));
        let norms = m.conditional_sum_norms(50).unwrap();
        assert!(norms.iter().all(|&v| v <= 1.0 + 1e-15));
    }

    #[test]
    fn doubling_states_form_an_orbit() {
        let m = make_expanding_map(&MapSpec::Doubling, Observable::Cosine { freq: 1 }).unwrap();
        let t = m.sample_trajectory(2000, RngStream::new(5, 0)).unwrap();
        for w in t.states.windows(2) {
            assert!(((2.0 * w[1]).fract() - w[0]).abs() < 1e-15);
        }
        for (k, x) in t.path.values.iter().enumerate() {
            assert!((x - (2.0 * PI * t.states[k + 1]).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_states_form_an_orbit() {
        let m = make_expanding_map(&MapSpec::Gauss, Observable::Identity).unwrap();
        let t = m.sample_trajectory(5000, RngStream::new(6, 0)).unwrap();
        for w in t.states.windows(2) {
            let back = (1.0 / w[1]).fract();
            assert!((back - w[0]).abs() < 1e-9 * (1.0 + 1.0 / w[1]), "{} vs {}", back, w[0]);
        }
        assert!((gauss_inverse_cdf(0.5) - (2f64.sqrt() - 1.0)).abs() < 1e-16);
    }

    #[test]
    fn rejects_unsupported_maps() {
        assert!(make_expanding_map(&MapSpec::Beta { beta: 2.5 }, Observable::Identity).is_err());
        assert!(make_expanding_map(&MapSpec::Beta { beta: 3.0 }, Observable::Identity).is_ok());
        assert!(make_circle_walk(&IrrationalSpec::Rational { num: 1, den: 4 }, &[FourierMode { k: 1, re: 0.5, im: 0.0 }]).is_err());
        assert!(make_iterated_function(1.0, IfsLaw::Uniform, Observable::Identity).is_err());
    }

    #[test]
    fn doubling_constant_observable_is_zero() {
        let m = make_expanding_map(&MapSpec::Doubling, Observable::Constant { value: 1.0 }).unwrap();
        let p = m.sample(100, RngStream::new(1, 1)).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ifs_stationary_mean() {
        let m = make_iterated_function(0.5, IfsLaw::Uniform, Observable::Identity).unwrap();
        assert_eq!(m.metadata()["centre"], 0.5);
        assert_eq!(m.metadata()["burn_in"], 40.0);
        let km = m.kernel().unwrap().as_grid().unwrap();
        // Lip(K g) <= rho Lip(g) on the identity.
        let g = km.kernel.apply(&km.kernel.grid_fn(|x| x));
        let lip = g.values().windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) * g.cells() as f64;
        assert!(lip <= 0.5 + 1e-9);
    }

    #[test]
    fn circle_kernel_step() {
        let m = golden_cos();
        let km = match m.kernel().unwrap() {
            AnyKernelModel::Circle(k) => k,
            _ => unreachable!(),
        };
        let g = km.kernel.apply(&km.observable);
        let c = (2.0 * PI * km.kernel.step()).cos();
        for x in [0.0, 0.1, 0.77] {
            assert!((g.eval(x) - c * (2.0 * PI * x).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn chain_is_a_martingale_difference() {
        let m = make_counterexample_chain(&TauLaw::default()).unwrap();
        assert!(m.conditional_mean_norms(20).unwrap().iter().all(|&v| v == 0.0));
        let p = m.sample(1000, RngStream::new(8, 0)).unwrap();
        assert!(p.values.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
    }
}
