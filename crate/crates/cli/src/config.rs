use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use mdlab::conditions::Modulus;
use mdlab::diophantine::IrrationalSpec;
use mdlab::inequalities::{BoundSpec, MIN_REPLICAS};
use mdlab::mdp::TailMethod;
use mdlab::variance::{CovarianceSummation, SigmaMethod};
use mdlab::{ModelSpec, ProcessModel, SpeedSequence};

use crate::error::{CliError, CliResult};

/// Largest number of simulated values a `simulate` task writes out.
pub const MAX_SIMULATE_VALUES: usize = 10_000_000;

/// One experiment: a model, a task and where to put the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: OutputConfig,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Mw,
    Bis,
    S2inf,
    Mix,
    ClassL,
}

impl CheckKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::Mw => "mw",
            CheckKind::Bis => "bis",
            CheckKind::S2inf => "s2inf",
            CheckKind::Mix => "mix",
            CheckKind::ClassL => "class-l",
        }
    }
}

fn default_k_max() -> usize {
    20
}

fn default_j_max() -> u32 {
    4
}

fn default_fourier_k_max() -> u32 {
    200
}

fn default_n_max() -> usize {
    1000
}

fn default_max_index() -> usize {
    3
}

fn default_blocks() -> usize {
    2000
}

fn default_depth() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Sample paths and write every value with its partial sum.
    Simulate { n: usize, replicas: usize },
    Sigma2 {
        methods: Vec<SigmaMethod>,
        n: usize,
        replicas: usize,
        #[serde(default = "default_k_max")]
        k_max: usize,
        #[serde(default)]
        summation: CovarianceSummation,
        #[serde(default = "default_j_max")]
        j_max: u32,
        /// Path lengths for the `var_sn` fit; must not exceed `n`.
        #[serde(default)]
        ns: Vec<usize>,
        #[serde(default = "default_fourier_k_max")]
        fourier_k_max: u32,
    },
    Conditions {
        checks: Vec<CheckKind>,
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default)]
        sigma2: Option<f64>,
        #[serde(default)]
        ns: Vec<usize>,
        #[serde(default = "default_max_index")]
        max_index: usize,
        #[serde(default)]
        modulus: Option<Modulus>,
        #[serde(default = "default_blocks")]
        blocks: usize,
    },
    Inequality { bound: BoundSpec, n: usize, thresholds: Vec<f64>, replicas: usize },
    MdpScan {
        speed: SpeedSequence,
        ns: Vec<usize>,
        xs: Vec<f64>,
        sigma2: f64,
        method: TailMethod,
        #[serde(default)]
        replicas: usize,
    },
    Diophantine {
        number: IrrationalSpec,
        #[serde(default = "default_depth")]
        depth: usize,
        epsilon: f64,
        k_max: u64,
    },
    TransferDecay { n_max: usize },
    Decompose { n: usize, m: usize },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Simulate { .. } => "simulate",
            Task::Sigma2 { .. } => "sigma2",
            Task::Conditions { .. } => "conditions",
            Task::Inequality { .. } => "inequality",
            Task::MdpScan { .. } => "mdp-scan",
            Task::Diophantine { .. } => "diophantine",
            Task::TransferDecay { .. } => "transfer-decay",
            Task::Decompose { .. } => "decompose",
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(bad(format!("`{name}` must be positive")));
    }
    Ok(())
}

fn finite(name: &str, v: &[f64]) -> CliResult<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(format!("`{name}` must be finite")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    /// Check every field and build the model; nothing is simulated.
    pub fn validate(&self) -> CliResult<Option<ProcessModel>> {
        if self.output.dir.as_os_str().is_empty() {
            return Err(bad("`output.dir` must be nonempty"));
        }
        let needs_model = !matches!(self.task, Task::Diophantine { .. });
        let model = match (&self.model, needs_model) {
            (Some(spec), _) => Some(spec.build()?),
            (None, true) => return Err(bad(format!("task `{}` needs a [model] table", self.task.kind()))),
            (None, false) => None,
        };
        match &self.task {
            Task::Simulate { n, replicas } => {
                positive("n", *n)?;
                positive("replicas", *replicas)?;
                if n.saturating_mul(*replicas) > MAX_SIMULATE_VALUES {
                    return Err(CliError::Refusal(format!(
                        "simulate writes n * replicas = {} values; the limit is {MAX_SIMULATE_VALUES}",
                        n.saturating_mul(*replicas)
                    )));
                }
            }
            Task::Sigma2 { methods, n, replicas, k_max, ns, .. } => {
                positive("n", *n)?;
                positive("replicas", *replicas)?;
                positive("k_max", *k_max)?;
                if methods.is_empty() {
                    return Err(bad("`methods` must list at least one method"));
                }
                if methods.contains(&SigmaMethod::VarSn) && (ns.len() < 2 || ns.iter().any(|&m| m == 0 || m > *n)) {
                    return Err(bad("`var_sn` needs at least two lengths `ns` in 1..=n"));
                }
                if methods.contains(&SigmaMethod::FourierClosedForm)
                    && !matches!(self.model, Some(ModelSpec::CircleWalk { .. }))
                {
                    return Err(bad("`fourier_closed_form` needs a circle-walk model"));
                }
            }
            Task::Conditions { checks, n_max, sigma2, ns, max_index, modulus, blocks } => {
                if checks.is_empty() {
                    return Err(bad("`checks` must list at least one check"));
                }
                positive("n_max", *n_max)?;
                positive("blocks", *blocks)?;
                if checks.contains(&CheckKind::S2inf) {
                    match sigma2 {
                        Some(s) if *s >= 0.0 && s.is_finite() => {}
                        _ => return Err(bad("`s2inf` needs a finite nonnegative `sigma2`")),
                    }
                    if ns.len() < 3 {
                        return Err(bad("`s2inf` needs at least three values in `ns`"));
                    }
                }
                if checks.contains(&CheckKind::Mix) {
                    positive("max_index", *max_index)?;
                    if ns.len() < 2 {
                        return Err(bad("`mix` needs at least two values in `ns`"));
                    }
                }
                if checks.contains(&CheckKind::ClassL) {
                    modulus.ok_or_else(|| bad("`class-l` needs a `modulus`"))?.validate()?;
                }
            }
            Task::Inequality { n, thresholds, replicas, .. } => {
                positive("n", *n)?;
                if *replicas < MIN_REPLICAS {
                    return Err(bad(format!("`replicas` must be at least {MIN_REPLICAS}")));
                }
                if thresholds.is_empty() || thresholds.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return Err(bad("`thresholds` must be a nonempty list of finite nonnegative numbers"));
                }
            }
            Task::MdpScan { speed, ns, xs, sigma2, method, replicas } => {
                speed.validate()?;
                if ns.is_empty() || ns.contains(&0) {
                    return Err(bad("`ns` must be a nonempty list of positive lengths"));
                }
                if xs.is_empty() {
                    return Err(bad("`xs` must be nonempty"));
                }
                finite("xs", xs)?;
                if !(*sigma2 > 0.0 && sigma2.is_finite()) {
                    return Err(bad("`sigma2` must be positive"));
                }
                if *method != TailMethod::ExactBinomial && *replicas < 2 {
                    return Err(bad("Monte Carlo methods need `replicas` of at least 2"));
                }
            }
            Task::Diophantine { depth, epsilon, k_max, .. } => {
                positive("depth", *depth)?;
                if !(*epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(bad("`epsilon` must be positive"));
                }
                if *k_max == 0 {
                    return Err(bad("`k_max` must be positive"));
                }
            }
            Task::TransferDecay { n_max } => {
                positive("n_max", *n_max)?;
                model.as_ref().expect("model checked above").kernel()?;
            }
            Task::Decompose { n, m } => {
                positive("m", *m)?;
                if n < m {
                    return Err(bad("`n` must be at least the block length `m`"));
                }
                model.as_ref().expect("model checked above").kernel()?;
            }
        }
        Ok(model)
    }
}
