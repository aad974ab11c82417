use mdlab::conditions::{check_bis, check_class_l, check_mix, check_mw, check_s2inf, SeriesDiagnostic, TrendReport};
use mdlab::diophantine::{badly_approximable_audit, cf_expand, convergents, min_scaled_distance, verify_convergents, RealNumber};
use mdlab::inequalities::{verify_domination, Verdict};
use mdlab::mdp::{block_martingale_decompose, mdp_scan};
use mdlab::processes::{experiment_id, sample_paths};
use mdlab::transfer::{lipschitz_witness_decay, sup_norm_decay, AnyKernelModel, DecayReport};
use mdlab::variance::{
    sigma2_circle_fourier, sigma2_covariance_series, sigma2_dyadic, sigma2_var_sn, CovarianceSummation, SigmaEstimate,
    SigmaMethod,
};
use mdlab::{ModelSpec, ProcessModel, RngStream};

use crate::config::{CheckKind, ExperimentConfig, Task};
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, Artifacts, Table};

/// Run a validated task; `model` is the one built by [`ExperimentConfig::validate`].
pub fn execute(cfg: &ExperimentConfig, model: Option<&ProcessModel>) -> CliResult<Artifacts> {
    let seed = cfg.seed;
    let need = || model.ok_or_else(|| CliError::Config("this task needs a model".into()));
    match &cfg.task {
        Task::Simulate { n, replicas } => simulate(need()?, *n, *replicas, seed),
        Task::Sigma2 { methods, n, replicas, k_max, summation, j_max, ns, fourier_k_max } => {
            let opts = SigmaOptions { k_max: *k_max, summation: *summation, j_max: *j_max, ns, fourier_k_max: *fourier_k_max };
            sigma2(need()?, methods, *n, *replicas, seed, &opts)
        }
        Task::Conditions { checks, n_max, sigma2, ns, max_index, modulus, blocks } => {
            let mut art = Artifacts::default();
            let mut summary = Table::new(&["check", "verdict", "total", "tail_kind", "tail_parameter", "tail_r_squared", "tail_estimate"]);
            let mut terms = Table::new(&["check", "index", "term", "partial_sum"]);
            let mut trends = Table::new(&["check", "i", "j", "n", "deviation"]);
            for check in checks {
                match check {
                    CheckKind::Mw => series_rows(&mut summary, &mut terms, "mw", &check_mw(need()?, *n_max)?),
                    CheckKind::Bis => series_rows(&mut summary, &mut terms, "bis", &check_bis(need()?, *n_max)?),
                    CheckKind::ClassL => {
                        let r = check_class_l(&modulus.expect("validated"), *blocks)?;
                        if !r.concave {
                            art.note("class-l: modulus failed the concavity spot check; verdict set to inconclusive");
                        }
                        series_rows(&mut summary, &mut terms, "class-l", &r.blocks);
                    }
                    CheckKind::S2inf => {
                        let r = check_s2inf(need()?, sigma2.expect("validated"), ns)?;
                        trend_rows(&mut summary, &mut trends, "s2inf", 0, 0, &r);
                    }
                    CheckKind::Mix => {
                        let (rows, pass) = check_mix(need()?, *max_index, ns)?;
                        for r in &rows {
                            trend_rows(&mut summary, &mut trends, "mix", r.i, r.j, &r.report);
                        }
                        art.put("mix_pass", pass);
                    }
                }
            }
            art.note(format!("series checks use n_max = {n_max} terms"));
            art.table("conditions.csv", summary);
            art.table("condition_terms.csv", terms);
            if !trends.rows.is_empty() {
                art.table("condition_trends.csv", trends);
            }
            Ok(art)
        }
        Task::Inequality { bound, n, thresholds, replicas } => {
            let m = need()?;
            let reports = verify_domination(m, bound, *n, thresholds, *replicas, seed)?;
            let mut t = Table::new(&["threshold", "bound", "exceedances", "replicas", "p_hat", "ci_upper", "verdict"]);
            for r in &reports {
                t.push(vec![
                    num(r.threshold),
                    num(r.bound),
                    r.exceedances.to_string(),
                    r.replicas.to_string(),
                    num(r.p_hat),
                    num(r.ci_upper),
                    r.verdict.as_str().to_string(),
                ]);
            }
            let mut art = Artifacts::default();
            let violated: Vec<String> =
                reports.iter().filter(|r| r.verdict == Verdict::Violated).map(|r| num(r.threshold)).collect();
            if !violated.is_empty() {
                art.failure = Some(format!("{} bound violated at thresholds {}", bound.name(), violated.join(", ")));
            }
            art.put("bound", bound.name());
            art.put("violations", violated.len());
            art.table("domination.csv", t);
            Ok(art)
        }
        Task::MdpScan { speed, ns, xs, sigma2, method, replicas } => {
            let m = need()?;
            let r = mdp_scan(m, speed, ns, xs, *sigma2, *method, *replicas, seed)?;
            let mut art = Artifacts::default();
            art.table("scan.csv", scan_table(&r.rows));
            for row in &r.rows {
                if let Some(f) = &row.flag {
                    art.note(format!("n = {}, x = {}: {f}", row.n, row.x));
                }
            }
            art.put("gap_shrinks", &r.gap_shrinks);
            art.put("trend_pass", r.trend_pass);
            if r.trend_pass == Some(false) {
                art.failure = Some("|gap| did not shrink between the smallest and largest n".into());
            }
            Ok(art)
        }
        Task::Diophantine { number, depth, epsilon, k_max } => {
            let x = RealNumber::new(number)?;
            let mut art = Artifacts::default();
            let exp = cf_expand(&x, *depth)?;
            if exp.terminated {
                art.note(format!("the expansion terminated after {} quotients: the number is rational", exp.quotients.len()));
            }
            let convs = convergents(&exp.quotients);
            let check = verify_convergents(&x, &convs)?;
            let mut t = Table::new(&["k", "a_k", "p", "q", "inequality"]);
            for (c, a) in convs.iter().zip(&exp.quotients) {
                let ineq = check.inequality.get(c.k).map(|b| b.to_string()).unwrap_or_default();
                t.push(vec![c.k.to_string(), a.to_string(), c.p.to_string(), c.q.to_string(), ineq]);
            }
            art.table("convergents.csv", t);
            let audit = badly_approximable_audit(&x, *epsilon, *k_max)?;
            let mut a = Table::new(&["k", "distance", "threshold"]);
            for &(k, d) in &audit.violations {
                a.push(vec![k.to_string(), num(d), num((k as f64).powf(-1.0 - epsilon))]);
            }
            art.table("audit.csv", a);
            let (k_min, v_min) = min_scaled_distance(&x, *k_max)?;
            art.put("determinant", check.determinant);
            art.put("reduced", check.reduced);
            art.put("monotone", check.monotone);
            art.put("audit", audit.summary());
            art.put("min_scaled_distance", (k_min, v_min));
            Ok(art)
        }
        Task::TransferDecay { n_max } => {
            let km = need()?.kernel()?;
            let r: DecayReport = match km {
                AnyKernelModel::Finite(k) => sup_norm_decay(&k.kernel, &k.observable, *n_max),
                AnyKernelModel::Grid(k) => sup_norm_decay(&k.kernel, &k.observable, *n_max),
                AnyKernelModel::Circle(k) => sup_norm_decay(&k.kernel, &k.observable, *n_max),
            };
            let witness = match km {
                AnyKernelModel::Grid(k) => Some(lipschitz_witness_decay(&k.kernel, *n_max)),
                _ => None,
            };
            let mut t = Table::new(&["k", "sup_norm", "lipschitz_witness"]);
            for (k, v) in r.values.iter().enumerate() {
                t.push(vec![k.to_string(), num(*v), opt(witness.as_ref().map(|w| w[k]))]);
            }
            let mut art = Artifacts::default();
            art.table("decay.csv", t);
            art.put("rho_hat", r.rho_hat);
            art.put("kappa_hat", r.kappa_hat);
            art.put("r_squared", r.r_squared);
            art.put("verdict", r.verdict);
            art.put("space", km.space());
            art.put("discretization_offset", r.discretization_offset);
            Ok(art)
        }
        Task::Decompose { n, m } => {
            let model = need()?;
            let stream = RngStream::derive(seed, experiment_id(&format!("decompose/{}", model.name())), 0);
            let traj = model.sample_trajectory(*n, stream)?;
            let d = block_martingale_decompose(model, &traj, *m)?;
            let mut art = Artifacts::default();
            art.table("decomposition.csv", decomposition_table(&d));
            if n % m != 0 {
                art.note(format!("the last {} values form an incomplete block and enter the residual only", n % m));
            }
            art.put("reconstruction_error", d.reconstruction_error);
            art.put("residual_sup", d.residual_sup);
            art.put("residual_bound", d.residual_bound);
            art.put("max_increment_conditional_mean", d.max_increment_conditional_mean());
            Ok(art)
        }
    }
}

fn simulate(model: &ProcessModel, n: usize, replicas: usize, seed: u64) -> CliResult<Artifacts> {
    let paths = sample_paths(model, n, replicas, seed, experiment_id(&format!("simulate/{}", model.name())))?;
    let mut t = Table::new(&["replica", "k", "x", "partial_sum"]);
    for (r, p) in paths.iter().enumerate() {
        for (k, (x, s)) in p.values.iter().zip(p.partial_sums()).enumerate() {
            t.push(vec![r.to_string(), (k + 1).to_string(), num(*x), num(s)]);
        }
    }
    let mut art = Artifacts::default();
    art.table("paths.csv", t);
    art.put("model", model.name());
    art.put("bound", model.bound());
    Ok(art)
}

pub struct SigmaOptions<'a> {
    pub k_max: usize,
    pub summation: CovarianceSummation,
    pub j_max: u32,
    pub ns: &'a [usize],
    pub fourier_k_max: u32,
}

pub fn sigma2(
    model: &ProcessModel,
    methods: &[SigmaMethod],
    n: usize,
    replicas: usize,
    seed: u64,
    o: &SigmaOptions,
) -> CliResult<Artifacts> {
    let needs_paths = methods.iter().any(|m| *m != SigmaMethod::FourierClosedForm);
    let paths = if needs_paths {
        sample_paths(model, n, replicas, seed, experiment_id(&format!("sigma2/{}", model.name())))?
    } else {
        Vec::new()
    };
    let mut art = Artifacts::default();
    let mut estimates = Vec::new();
    for m in methods {
        let e = match m {
            SigmaMethod::CovarianceSeries => {
                art.note(format!("covariance series truncated at lag {}", o.k_max));
                sigma2_covariance_series(&paths, o.k_max, o.summation)?
            }
            SigmaMethod::Dyadic => {
                art.note(format!("dyadic series truncated at level {}", o.j_max));
                sigma2_dyadic(&paths, o.j_max)?
            }
            SigmaMethod::VarSn => sigma2_var_sn(&paths, o.ns)?,
            SigmaMethod::FourierClosedForm => {
                let ModelSpec::CircleWalk { step, modes } = model.spec() else {
                    return Err(CliError::Config("`fourier_closed_form` needs a circle-walk model".into()));
                };
                sigma2_circle_fourier(modes, &RealNumber::new(step)?, o.fourier_k_max)?
            }
        };
        for w in &e.warnings {
            art.note(format!("{}: {w}", m.as_str()));
        }
        estimates.push(e);
    }
    art.table("sigma2.csv", sigma_table(&estimates));
    art.table("sigma2_terms.csv", sigma_terms_table(&estimates));
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            art.put(&format!("z_{}_vs_{}", a.method.as_str(), b.method.as_str()), a.z_distance(b));
        }
    }
    Ok(art)
}

pub fn sigma_table(est: &[SigmaEstimate]) -> Table {
    let mut t = Table::new(&["method", "value", "raw_value", "standard_error", "clamped"]);
    for e in est {
        t.push(vec![
            e.method.as_str().to_string(),
            num(e.value),
            num(e.raw_value),
            opt(e.standard_error),
            e.clamped.to_string(),
        ]);
    }
    t
}

pub fn sigma_terms_table(est: &[SigmaEstimate]) -> Table {
    let mut t = Table::new(&["method", "index", "term", "term_error"]);
    for e in est {
        for (i, v) in e.terms.iter().enumerate() {
            t.push(vec![e.method.as_str().to_string(), i.to_string(), num(*v), opt(e.term_errors.get(i).copied())]);
        }
    }
    t
}

fn verdict_str(v: mdlab::conditions::Verdict) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn series_rows(summary: &mut Table, terms: &mut Table, check: &str, d: &SeriesDiagnostic) {
    let fit = d.tail_fit.as_ref();
    summary.push(vec![
        check.to_string(),
        verdict_str(d.verdict),
        num(d.total()),
        fit.map(|f| serde_json::to_value(f.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
            .unwrap_or_default(),
        opt(fit.map(|f| f.parameter)),
        opt(fit.map(|f| f.r_squared)),
        opt(d.tail_estimate),
    ]);
    for (i, t, s) in d.rows() {
        terms.push(vec![check.to_string(), i.to_string(), num(t), num(s)]);
    }
}

fn trend_rows(summary: &mut Table, trends: &mut Table, check: &str, i: usize, j: usize, r: &TrendReport) {
    let name = if check == "mix" { format!("mix({i},{j})") } else { check.to_string() };
    let verdict = if r.pass { "pass" } else { "fail" };
    summary.push(vec![name, verdict.into(), String::new(), "spearman".into(), opt(r.spearman), String::new(), String::new()]);
    for (n, d) in r.ns.iter().zip(&r.deviations) {
        trends.push(vec![check.to_string(), i.to_string(), j.to_string(), n.to_string(), num(*d)]);
    }
}

pub fn scan_table(rows: &[mdlab::mdp::ScanRow]) -> Table {
    let mut t = Table::new(&[
        "model",
        "n",
        "a_n",
        "x",
        "method",
        "estimate",
        "target",
        "gap",
        "se",
        "gaussian_reference",
        "flag",
    ]);
    for r in rows {
        t.push(vec![
            r.model.clone(),
            r.n.to_string(),
            num(r.a_n),
            num(r.x),
            r.method.as_str().to_string(),
            opt(r.estimate),
            num(r.target),
            opt(r.gap),
            opt(r.se),
            num(r.gaussian_reference),
            r.flag.clone().unwrap_or_default(),
        ]);
    }
    t
}

pub fn decomposition_table(d: &mdlab::mdp::BlockDecomposition) -> Table {
    let mut t = Table::new(&["block", "block_sum", "conditional_mean", "increment", "increment_conditional_mean"]);
    for i in 0..d.blocks.len() {
        t.push(vec![
            (i + 1).to_string(),
            num(d.blocks[i]),
            num(d.conditional_means[i]),
            num(d.increments[i]),
            num(d.increment_conditional_means[i]),
        ]);
    }
    t
}
