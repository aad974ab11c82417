//! Pinned acceptance criteria and the demo suite.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use mdlab::conditions::{check_bis, check_class_l, check_mw, Modulus, Verdict as SeriesVerdict};
use mdlab::diophantine::{badly_approximable_audit, cf_expand, convergents, verify_convergents, FourierMode, IrrationalSpec, RealNumber};
use mdlab::inequalities::{verify_domination, BoundSpec, PuwRange, Verdict};
use mdlab::mdp::{
    block_martingale_decompose, endpoint_rate, mdp_scan, rate_i, PiecewiseLinearPath, ScanRow, TailMethod,
};
use mdlab::observable::Observable;
use mdlab::processes::{
    experiment_id, make_circle_walk, make_counterexample_chain, make_iid, make_linear_process, sample_paths,
    Coefficients, CounterexampleChain, Innovations, Law, LinearObservable, LinearSpec, MapSpec, TauLaw,
};
use mdlab::transfer::{apply_pf_integer_beta, duality_check, sup_norm_decay, DecayVerdict, GridFunction, GridKernel, IfsLaw};
use mdlab::variance::{sigma2_circle_fourier, sigma2_covariance_series, sigma2_dyadic, CovarianceSummation, SigmaEstimate};
use mdlab::{ModelSpec, ProcessModel, RngStream, SpeedSequence};

use crate::error::{CliError, CliResult};
use crate::output::{num, opt, write_timing, Table};
use crate::tasks::scan_table;

/// Master seed of the acceptance and demo suites.
pub const SUITE_SEED: u64 = 20_240_607;

const C1_GAP_TOL: f64 = 0.06;
const C1_RUNTIME: Duration = Duration::from_secs(120);
const C2_DOUBLING_RANGE: (f64, f64) = (0.49, 0.51);
const C2_DOUBLING_PATHS: (usize, usize) = (1000, 1000);
const C2_DOUBLING_LAGS: usize = 5;
const C2_DOUBLING_LEVELS: u32 = 2;
const C2_CIRCLE_PATHS: (usize, usize) = (10_000, 1000);
const C2_CIRCLE_LAGS: usize = 40;
const C2_CIRCLE_REL_TOL: f64 = 0.10;
const C2_ORACLE_LAGS: usize = 200;
const C2_ORACLE_TOL: f64 = 1e-12;
const C2_RUNTIME: Duration = Duration::from_secs(300);
const C3_N: usize = 100;
const C3_REPLICAS: usize = 100_000;
const C3_LEVELS: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];
const C3_RUNTIME: Duration = Duration::from_secs(600);
const C4_KILL_TOL: f64 = 1e-12;
const C4_RHO_MAX: f64 = 0.51;
const C4_DUALITY_TOL: f64 = 1e-6;
const C4_STEPS: usize = 30;
const C5_DEPTH: usize = 30;
const C5_EPSILON: f64 = 0.1;
const C5_K_MAX: u64 = 100_000;
const C6_N_MAX: usize = 1000;
const C6_BLOCKS: usize = 2000;
const C7_PATHS: usize = 50;
const C7_TOL: f64 = 1e-12;
const C8_N: usize = 4096;
const C8_M: usize = 8;
const C8_MEAN_TOL: f64 = 1e-10;
const C8_RECON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    Acceptance,
    Demo,
}

impl SuiteName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "acceptance" => Some(SuiteName::Acceptance),
            "demo" => Some(SuiteName::Demo),
            _ => None,
        }
    }
}

/// Verdict of one criterion with its data tables.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub tables: Vec<(String, Table)>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let v = if self.pass { "PASS" } else { "FAIL" };
        format!("{v} [{}] {}: {} ({:.1}s)", self.id, self.title, self.detail, self.elapsed.as_secs_f64())
    }
}

fn timed(
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    f: impl FnOnce() -> CliResult<(bool, String, Vec<(String, Table)>)>,
) -> CliResult<Outcome> {
    let start = Instant::now();
    let (mut pass, mut detail, tables) = f()?;
    let elapsed = start.elapsed();
    if let Some(l) = limit {
        if elapsed > l {
            pass = false;
            detail.push_str(&format!("; over the {}s budget", l.as_secs()));
        }
    }
    Ok(Outcome { id, title, pass, detail, elapsed, tables })
}

fn tables(list: Vec<(&str, Table)>) -> Vec<(String, Table)> {
    list.into_iter().map(|(n, t)| (n.to_string(), t)).collect()
}

pub fn criterion_1(seed: u64) -> CliResult<Outcome> {
    timed("1", "MDP endpoint rate, exact oracle", Some(C1_RUNTIME), || {
        let model = make_iid(Law::Rademacher)?;
        let speed = SpeedSequence::power(1.0 / 3.0)?;
        let r = mdp_scan(&model, &speed, &[10_000, 100_000, 1_000_000], &[1.0], 1.0, TailMethod::ExactBinomial, 0, seed)?;
        let gap = |n: usize| r.rows.iter().find(|row| row.n == n).and_then(|row| row.gap).unwrap_or(f64::NAN);
        let (g4, g6) = (gap(10_000), gap(1_000_000));
        let pass = g6.abs() <= C1_GAP_TOL && g6.abs() < g4.abs();
        let detail = format!("gap at n=1e6 {g6:.5} (tol {C1_GAP_TOL}), gap at n=1e4 {g4:.5}");
        Ok((pass, detail, tables(vec![("scan.csv", scan_table(&r.rows))])))
    })
}

/// `gamma_j = E f(Y_0) f(Y_j)` by summing over the walk's displacement law.
pub fn brute_force_circle_covariances(modes: &[FourierMode], a: f64, lags: usize) -> Vec<f64> {
    let overlap = |s: f64| -> f64 { modes.iter().map(|m| 2.0 * m.abs().powi(2) * (2.0 * PI * m.k as f64 * s).cos()).sum() };
    let mut weights = vec![1.0f64];
    let mut out = Vec::with_capacity(lags + 1);
    for j in 0..=lags {
        if j > 0 {
            let mut next = vec![0.0; j + 1];
            for (h, w) in weights.iter().enumerate() {
                next[h] += 0.5 * w;
                next[h + 1] += 0.5 * w;
            }
            weights = next;
        }
        out.push(weights.iter().enumerate().map(|(h, w)| w * overlap(a * (2.0 * h as f64 - j as f64))).sum());
    }
    out
}

fn golden_cos_walk() -> CliResult<(ProcessModel, Vec<FourierMode>, RealNumber)> {
    let modes = vec![FourierMode { k: 1, re: 0.5, im: 0.0 }];
    let spec = IrrationalSpec::golden();
    Ok((make_circle_walk(&spec, &modes)?, modes, RealNumber::new(&spec)?))
}

pub fn criterion_2(seed: u64) -> CliResult<Outcome> {
    timed("2", "sigma^2 cross-method", Some(C2_RUNTIME), || {
        let mut t = Table::new(&["model", "method", "value", "standard_error", "reference"]);
        let mut row = |model: &str, e: &SigmaEstimate, reference: f64| {
            t.push(vec![model.into(), e.method.as_str().into(), num(e.value), opt(e.standard_error), num(reference)]);
        };

        let doubling = ModelSpec::ExpandingMap { map: MapSpec::Doubling, observable: Observable::Cosine { freq: 1 } }.build()?;
        let (n, r) = C2_DOUBLING_PATHS;
        let paths = sample_paths(&doubling, n, r, seed, experiment_id("acceptance/sigma2/doubling"))?;
        let cov = sigma2_covariance_series(&paths, C2_DOUBLING_LAGS, CovarianceSummation::Truncated)?;
        let dy = sigma2_dyadic(&paths, C2_DOUBLING_LEVELS)?;
        row("doubling", &cov, 0.5);
        row("doubling", &dy, 0.5);
        let inside = |v: f64| v >= C2_DOUBLING_RANGE.0 && v <= C2_DOUBLING_RANGE.1;

        let (walk, modes, a) = golden_cos_walk()?;
        let exact = sigma2_circle_fourier(&modes, &a, 1)?;
        let c = (2.0 * PI * a.to_f64()).cos();
        let closed = 0.5 * (1.0 + c) / (1.0 - c);
        let brute = brute_force_circle_covariances(&modes, a.to_f64(), C2_ORACLE_LAGS);
        let brute_sum = brute[0] + 2.0 * brute[1..].iter().sum::<f64>();
        let oracle_ok = (exact.value - brute_sum).abs() <= C2_ORACLE_TOL && (exact.value - closed).abs() <= C2_ORACLE_TOL;
        let (n, r) = C2_CIRCLE_PATHS;
        let paths = sample_paths(&walk, n, r, seed, experiment_id("acceptance/sigma2/circle"))?;
        let emp = sigma2_covariance_series(&paths, C2_CIRCLE_LAGS, CovarianceSummation::Truncated)?;
        let rel = emp.value / exact.value - 1.0;
        row("circle-walk", &exact, closed);
        row("circle-walk", &emp, exact.value);

        let mut oracle = Table::new(&["lag", "brute_force", "multiplier_form"]);
        let mult = mdlab::variance::circle_covariances(&modes, &a, C2_ORACLE_LAGS)?;
        for (j, (b, m)) in brute.iter().zip(&mult).enumerate() {
            oracle.push(vec![j.to_string(), num(*b), num(*m)]);
        }
        let pass = inside(cov.value) && inside(dy.value) && oracle_ok && rel.abs() <= C2_CIRCLE_REL_TOL;
        let detail = format!(
            "doubling cov {:.5} dyadic {:.5}; circle exact {:.6} (brute {:.6}), empirical {:.6} ({:+.2}%)",
            cov.value,
            dy.value,
            exact.value,
            brute_sum,
            emp.value,
            100.0 * rel
        );
        Ok((pass, detail, tables(vec![("sigma2.csv", t), ("circle_covariances.csv", oracle)])))
    })
}

fn geometric_linear() -> CliResult<ProcessModel> {
    Ok(make_linear_process(LinearSpec {
        coefficients: Coefficients::Geometric { scale: 1.0, rho: 0.5, two_sided: false },
        innovations: Innovations::Iid { law: Law::Rademacher },
        observable: LinearObservable::Identity,
        tolerance: 1e-8,
    })?)
}

pub fn criterion_3(seed: u64) -> CliResult<Outcome> {
    timed("3", "inequality domination", Some(C3_RUNTIME), || {
        let iid = make_iid(Law::Rademacher)?;
        let (walk, _, _) = golden_cos_walk()?;
        let linear = geometric_linear()?;
        let puw = BoundSpec::Puw { x_inf: None, cond_norms: None, range: PuwRange::default() };
        let projection = BoundSpec::Projection { p: None };
        let cases: Vec<(&ProcessModel, BoundSpec)> = vec![
            (&iid, BoundSpec::Azuma { c: 1.0 }),
            (&iid, puw.clone()),
            (&walk, puw),
            (&iid, projection.clone()),
            (&linear, projection),
        ];
        let mut t = Table::new(&["model", "bound", "threshold", "bound_value", "exceedances", "p_hat", "ci_upper", "verdict"]);
        let mut violations = 0;
        for (model, spec) in &cases {
            let scale = model.bound() * (C3_N as f64).sqrt();
            let thresholds: Vec<f64> = C3_LEVELS.iter().map(|l| l * scale).collect();
            for r in verify_domination(model, spec, C3_N, &thresholds, C3_REPLICAS, seed)? {
                violations += (r.verdict == Verdict::Violated) as usize;
                t.push(vec![
                    model.name().into(),
                    spec.name().into(),
                    num(r.threshold),
                    num(r.bound),
                    r.exceedances.to_string(),
                    num(r.p_hat),
                    num(r.ci_upper),
                    r.verdict.as_str().into(),
                ]);
            }
        }
        let detail = format!("{violations} violations over {} cells of {C3_REPLICAS} replicas", t.rows.len());
        Ok((violations == 0, detail, tables(vec![("domination.csv", t)])))
    })
}

pub fn criterion_4(_seed: u64) -> CliResult<Outcome> {
    timed("4", "transfer exactness", None, || {
        let cells = GridFunction::DEFAULT_CELLS;
        let cos = GridFunction::from_fn(cells, |x| (2.0 * PI * x).cos());
        let killed = apply_pf_integer_beta(&cos, 2)?.sup_abs();
        let k = GridKernel::integer_beta(2, cells)?;
        let decay = sup_norm_decay(&k, &k.grid_fn(|x| x), C4_STEPS);
        let dual = duality_check(&k, &k.grid_fn(|x| x * x - 0.2), &|x| (x - 0.3).abs())?;
        let mut d = Table::new(&["k", "sup_norm"]);
        for (i, v) in decay.values.iter().enumerate() {
            d.push(vec![i.to_string(), num(*v)]);
        }
        let mut s = Table::new(&["check", "value", "tolerance"]);
        s.push(vec!["pf_cosine_sup".into(), num(killed), num(C4_KILL_TOL)]);
        s.push(vec!["rho_hat".into(), num(decay.rho_hat), num(C4_RHO_MAX)]);
        s.push(vec!["duality_error".into(), num(dual), num(C4_DUALITY_TOL)]);
        let pass = killed < C4_KILL_TOL
            && decay.rho_hat <= C4_RHO_MAX
            && decay.verdict == DecayVerdict::Contracting
            && dual < C4_DUALITY_TOL;
        let detail = format!("sup |P cos| = {killed:.2e}, rho_hat = {:.6}, duality error {dual:.2e}", decay.rho_hat);
        Ok((pass, detail, tables(vec![("decay.csv", d), ("transfer.csv", s)])))
    })
}

/// `(p_k, q_k)` for `k <= depth` as integers, read from their decimal form.
fn golden_convergents() -> CliResult<(Vec<(u128, u128)>, RealNumber)> {
    let x = RealNumber::new(&IrrationalSpec::golden())?;
    let exp = cf_expand(&x, C5_DEPTH)?;
    let convs = convergents(&exp.quotients);
    let parse = |b: &dyn ToString| b.to_string().parse::<u128>().map_err(|e| CliError::Task(e.to_string()));
    let pq = convs.iter().map(|c| Ok((parse(&c.p)?, parse(&c.q)?))).collect::<CliResult<Vec<_>>>()?;
    Ok((pq, x))
}

pub fn criterion_5a(_seed: u64) -> CliResult<Outcome> {
    timed("5a", "golden convergents are Fibonacci pairs", None, || {
        let (pq, _) = golden_convergents()?;
        let mut fib = vec![0u128, 1];
        while fib.len() < C5_DEPTH + 3 {
            fib.push(fib[fib.len() - 1] + fib[fib.len() - 2]);
        }
        let mut t = Table::new(&["k", "p", "q", "fib_k", "fib_k_plus_1"]);
        let mut bad = Vec::new();
        for (k, &(p, q)) in pq.iter().enumerate() {
            if (p, q) != (fib[k], fib[k + 1]) {
                bad.push(k);
            }
            t.push(vec![k.to_string(), p.to_string(), q.to_string(), fib[k].to_string(), fib[k + 1].to_string()]);
        }
        let pass = bad.is_empty() && pq.len() == C5_DEPTH + 1;
        let detail = format!("{} convergents checked, mismatches at {bad:?}", pq.len());
        Ok((pass, detail, tables(vec![("convergents.csv", t)])))
    })
}

pub fn criterion_5b(_seed: u64) -> CliResult<Outcome> {
    timed("5b", "convergent determinant identity", None, || {
        let (pq, x) = golden_convergents()?;
        let x_convs = convergents(&cf_expand(&x, C5_DEPTH)?.quotients);
        let check = verify_convergents(&x, &x_convs)?;
        let mut t = Table::new(&["k", "determinant"]);
        let mut ok = check.determinant;
        for k in 1..pq.len() {
            let (p, q) = (pq[k].0 as i128, pq[k].1 as i128);
            let (p0, q0) = (pq[k - 1].0 as i128, pq[k - 1].1 as i128);
            let det = p * q0 - p0 * q;
            ok &= det.abs() == 1;
            t.push(vec![k.to_string(), det.to_string()]);
        }
        let detail = format!("k = 1..={}: all +-1 = {ok}", pq.len() - 1);
        Ok((ok, detail, tables(vec![("determinants.csv", t)])))
    })
}

pub fn criterion_5c(_seed: u64) -> CliResult<Outcome> {
    timed("5c", "badly approximable audit", None, || {
        let x = RealNumber::new(&IrrationalSpec::golden())?;
        let audit = badly_approximable_audit(&x, C5_EPSILON, C5_K_MAX)?;
        let beyond = audit.violations_beyond(1);
        let mut t = Table::new(&["k", "distance", "threshold"]);
        for &(k, d) in &audit.violations {
            t.push(vec![k.to_string(), num(d), num((k as f64).powf(-1.0 - C5_EPSILON))]);
        }
        let ks: Vec<String> = beyond.iter().map(|v| v.0.to_string()).collect();
        let detail = if beyond.is_empty() {
            format!("no violation in (1, {C5_K_MAX}]")
        } else {
            format!("violations beyond k = 1 at k = {}; {}", ks.join(","), audit.summary())
        };
        Ok((beyond.is_empty(), detail, tables(vec![("audit.csv", t)])))
    })
}

fn coherence_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::ExpandingMap { map: MapSpec::Doubling, observable: Observable::Cosine { freq: 1 } },
        ModelSpec::ExpandingMap { map: MapSpec::Doubling, observable: Observable::Identity },
        ModelSpec::ExpandingMap { map: MapSpec::Beta { beta: 3.0 }, observable: Observable::Holder { alpha: 0.5, center: 0.3 } },
        ModelSpec::ExpandingMap { map: MapSpec::Gauss, observable: Observable::Identity },
        ModelSpec::IteratedFunction { rho: 0.5, law: IfsLaw::Uniform, observable: Observable::Identity },
        ModelSpec::CircleWalk { step: IrrationalSpec::golden(), modes: vec![FourierMode { k: 1, re: 0.5, im: 0.0 }] },
        ModelSpec::CounterexampleChain { tau: TauLaw::default() },
    ]
}

fn verdict_name(v: SeriesVerdict) -> &'static str {
    match v {
        SeriesVerdict::Converging => "converging",
        SeriesVerdict::Diverging => "diverging",
        SeriesVerdict::Inconclusive => "inconclusive",
    }
}

pub fn criterion_6(_seed: u64) -> CliResult<Outcome> {
    timed("6", "condition-checker coherence", None, || {
        let mut t = Table::new(&["model", "bis", "bis_total", "mw", "mw_total", "coherent"]);
        let mut incoherent = Vec::new();
        for spec in coherence_models() {
            let m = spec.build()?;
            let bis = check_bis(&m, C6_N_MAX)?;
            let mw = check_mw(&m, C6_N_MAX)?;
            let ok = bis.verdict != SeriesVerdict::Converging || mw.verdict == SeriesVerdict::Converging;
            if !ok {
                incoherent.push(m.name().to_string());
            }
            t.push(vec![
                m.name().into(),
                verdict_name(bis.verdict).into(),
                num(bis.total()),
                verdict_name(mw.verdict).into(),
                num(mw.total()),
                ok.to_string(),
            ]);
        }
        let mut c = Table::new(&["gamma", "verdict", "expected"]);
        let mut split = true;
        for gamma in [0.3, 0.5, 0.6, 0.75, 1.0] {
            let r = check_class_l(&Modulus::LogPower { gamma, scale: 1.0 }, C6_BLOCKS)?;
            let expected = if gamma > 0.5 { SeriesVerdict::Converging } else { SeriesVerdict::Diverging };
            split &= r.verdict == expected;
            c.push(vec![num(gamma), verdict_name(r.verdict).into(), verdict_name(expected).into()]);
        }
        let pass = incoherent.is_empty() && split;
        let detail = format!("{} kernel models, incoherent: {incoherent:?}; class-L split at 1/2: {split}", t.rows.len());
        Ok((pass, detail, tables(vec![("coherence.csv", t), ("class_l.csv", c)])))
    })
}

/// A random path with 1 to 8 pieces and values in [-3, 3].
fn random_path(u01: &mut impl FnMut() -> f64) -> PiecewiseLinearPath {
    let pieces = (1 + (u01() * 8.0) as usize).min(8);
    let gaps: Vec<f64> = (0..pieces).map(|_| 0.01 + u01()).collect();
    let total: f64 = gaps.iter().sum();
    let mut b = vec![0.0];
    let mut acc = 0.0;
    for g in &gaps[..pieces - 1] {
        acc += g / total;
        b.push(acc);
    }
    b.push(1.0);
    let mut v = vec![0.0];
    v.extend((0..pieces).map(|_| 6.0 * u01() - 3.0));
    PiecewiseLinearPath::new(b, v).expect("valid random path")
}

pub fn criterion_7(seed: u64) -> CliResult<Outcome> {
    timed("7", "rate-function algebra", None, || {
        let exp = experiment_id("acceptance/rate-algebra");
        let mut t = Table::new(&["path", "pieces", "homogeneity_error", "refinement_error", "endpoint_error"]);
        let mut worst: f64 = 0.0;
        for i in 0..C7_PATHS {
            let mut rng = RngStream::derive(seed, exp, i as u64).rng();
            let mut u01 = || 0.5 * (Law::Uniform { c: 1.0 }.sample(&mut rng) + 1.0);
            let h = random_path(&mut u01);
            let alpha = 8.0 * u01() - 4.0;
            let s2 = 0.1 + 4.9 * u01();
            let pts: Vec<f64> = (0..10).map(|_| u01()).collect();
            let x = 6.0 * u01() - 3.0;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
            let base = rate_i(&h, s2)?;
            let hom = rel(rate_i(&h.scaled(alpha), s2)?, alpha * alpha * base);
            let refi = rel(rate_i(&h.refined(&pts), s2)?, base);
            let end = rel(endpoint_rate(x, s2)?, rate_i(&PiecewiseLinearPath::linear(x), s2)?);
            worst = worst.max(hom).max(refi).max(end);
            t.push(vec![i.to_string(), (h.breakpoints().len() - 1).to_string(), num(hom), num(refi), num(end)]);
        }
        let detail = format!("{C7_PATHS} random paths, largest relative error {worst:.2e} (tol {C7_TOL:e})");
        Ok((worst <= C7_TOL, detail, tables(vec![("rate_algebra.csv", t)])))
    })
}

pub fn criterion_8(seed: u64) -> CliResult<Outcome> {
    timed("8", "martingale decomposition", None, || {
        let (walk, _, _) = golden_cos_walk()?;
        let stream = RngStream::derive(seed, experiment_id("acceptance/decompose"), 0);
        let traj = walk.sample_trajectory(C8_N, stream)?;
        let d = block_martingale_decompose(&walk, &traj, C8_M)?;
        let worst = d.max_increment_conditional_mean();
        let pass = worst < C8_MEAN_TOL && d.reconstruction_error < C8_RECON_TOL;
        let detail = format!(
            "max |E(D|F)| = {worst:.2e} (tol {C8_MEAN_TOL:e}), reconstruction error {:.2e} (tol {C8_RECON_TOL:e})",
            d.reconstruction_error
        );
        Ok((pass, detail, tables(vec![("decomposition.csv", crate::tasks::decomposition_table(&d))])))
    })
}

type Criterion = fn(u64) -> CliResult<Outcome>;

pub const ACCEPTANCE: [(&str, Criterion); 10] = [
    ("1", criterion_1),
    ("2", criterion_2),
    ("3", criterion_3),
    ("4", criterion_4),
    ("5a", criterion_5a),
    ("5b", criterion_5b),
    ("5c", criterion_5c),
    ("6", criterion_6),
    ("7", criterion_7),
    ("8", criterion_8),
];

fn summary_table(outcomes: &[Outcome]) -> Table {
    let mut t = Table::new(&["criterion", "verdict", "detail"]);
    for o in outcomes {
        t.push(vec![o.id.into(), if o.pass { "pass" } else { "fail" }.into(), o.detail.clone()]);
    }
    t
}

/// Every data file of a suite run, keyed by relative path.
pub fn data_files(outcomes: &[Outcome]) -> CliResult<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    for o in outcomes {
        for (name, t) in &o.tables {
            files.insert(format!("{}/{name}", o.id), t.to_bytes()?);
        }
    }
    files.insert("summary.csv".into(), summary_table(outcomes).to_bytes()?);
    Ok(files)
}

fn run_list(list: &[(&str, Criterion)], seed: u64, report: &mut impl FnMut(&Outcome)) -> CliResult<Vec<Outcome>> {
    let mut out = Vec::with_capacity(list.len());
    for (_, f) in list {
        let o = f(seed)?;
        report(&o);
        out.push(o);
    }
    Ok(out)
}

/// Criteria 1 to 8, then a second pass compared byte for byte (criterion 9).
pub fn run_acceptance(seed: u64, mut report: impl FnMut(&Outcome)) -> CliResult<Vec<Outcome>> {
    let mut first = run_list(&ACCEPTANCE, seed, &mut report)?;
    let start = Instant::now();
    let again = run_list(&ACCEPTANCE, seed, &mut |_| {})?;
    let (a, b) = (data_files(&first)?, data_files(&again)?);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let same_keys = a.keys().eq(b.keys());
    let bytes: usize = a.values().map(Vec::len).sum();
    let nine = Outcome {
        id: "9",
        title: "reproducibility",
        pass: differing.is_empty() && same_keys,
        detail: format!("{} data files ({bytes} bytes) compared across two runs, differing: {differing:?}", a.len()),
        elapsed: start.elapsed(),
        tables: Vec::new(),
    };
    report(&nine);
    first.push(nine);
    Ok(first)
}

pub fn demo(seed: u64) -> CliResult<Vec<Outcome>> {
    let exact = timed("demo-1", "Rademacher exact scan", None, || {
        let model = make_iid(Law::Rademacher)?;
        let speed = SpeedSequence::power(1.0 / 3.0)?;
        let ns = [1_000, 10_000, 100_000, 1_000_000];
        let r = mdp_scan(&model, &speed, &ns, &[0.5, 1.0], 1.0, TailMethod::ExactBinomial, 0, seed)?;
        let detail = format!("gap shrinks with n: {:?}", r.trend_pass);
        Ok((r.trend_pass == Some(true), detail, tables(vec![("scan.csv", labelled(&r.rows, "exact oracle"))])))
    })?;
    let chain = timed("demo-2", "counterexample chain naive scan", None, || {
        let tau = TauLaw::default();
        let model = make_counterexample_chain(&tau)?;
        let sigma2 = 1.0 - CounterexampleChain::new(&tau)?.stationary()[0];
        let speed = SpeedSequence::power(1.0 / 3.0)?;
        let r = mdp_scan(&model, &speed, &[100, 1_000, 4_000], &[0.25, 0.5], sigma2, TailMethod::Naive, 50_000, seed)?;
        let detail = format!("expected non-convergence; sigma^2 = P(Y != 0) = {sigma2:.6}, {} cells", r.rows.len());
        Ok((true, detail, tables(vec![("scan.csv", labelled(&r.rows, "expected non-convergence"))])))
    })?;
    Ok(vec![exact, chain])
}

fn labelled(rows: &[ScanRow], label: &str) -> Table {
    let mut t = scan_table(rows);
    t.header.push("label".into());
    for r in &mut t.rows {
        r.push(label.into());
    }
    t
}

/// Run a suite, reporting each outcome as it finishes, and write its data
/// files, `summary.csv` and `timing.json` under `out` when given.
pub fn run_suite(kind: SuiteName, out: Option<&Path>, mut report: impl FnMut(&Outcome)) -> CliResult<Vec<Outcome>> {
    let start = Instant::now();
    let outcomes = match kind {
        SuiteName::Acceptance => run_acceptance(SUITE_SEED, &mut report)?,
        SuiteName::Demo => {
            let o = demo(SUITE_SEED)?;
            o.iter().for_each(&mut report);
            o
        }
    };
    if let Some(dir) = out {
        for (rel, bytes) in data_files(&outcomes)? {
            let path = dir.join(rel);
            if let Some(p) = path.parent() {
                std::fs::create_dir_all(p)?;
            }
            std::fs::write(path, bytes)?;
        }
        write_timing(dir, start.elapsed())?;
    }
    Ok(outcomes)
}
