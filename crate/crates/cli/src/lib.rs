//! Experiment runner for `mdlab`: TOML configs in, CSV tables and a JSON
//! manifest out, plus the pinned acceptance and demo suites.

pub mod config;
pub mod error;
pub mod output;
pub mod suite;
pub mod tasks;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, Task};
pub use error::{CliError, CliResult};
pub use output::{Artifacts, Table};

/// Result of a completed run: the directory written and any task failure.
#[derive(Debug)]
pub struct RunReport {
    pub artifacts: Artifacts,
    pub failure: Option<String>,
}

/// Parse, validate and run a config file, writing outputs only at the end.
///
/// Config errors write nothing. A precision or capacity refusal raised while
/// computing writes a manifest recording the refusal and no tables.
pub fn run_file(path: &Path) -> CliResult<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    run_text(&text)
}

pub fn run_text(text: &str) -> CliResult<RunReport> {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_toml(text)?;
    let model = cfg.validate()?;
    let dir = cfg.output.dir.clone();
    match tasks::execute(&cfg, model.as_ref()) {
        Ok(art) => {
            let status = if art.failure.is_some() { "failed" } else { "ok" };
            output::write_run(&dir, &cfg, cfg.seed, status, &art, start.elapsed())?;
            let failure = art.failure.clone();
            Ok(RunReport { artifacts: art, failure })
        }
        Err(CliError::Refusal(msg)) => {
            let mut art = Artifacts::default();
            art.note(format!("refused: {msg}"));
            output::write_run(&dir, &cfg, cfg.seed, "refused", &art, start.elapsed())?;
            Err(CliError::Refusal(msg))
        }
        Err(e) => Err(e),
    }
}

/// JSON description of the config format.
pub fn schema() -> serde_json::Value {
    serde_json::json!({
        "format": "toml",
        "strict": true,
        "top_level": {
            "seed": "u64 master seed",
            "output": { "dir": "directory for tables, manifest.json and timing.json" },
            "model": "optional table tagged by `type`: iid, alternating, linear, iterated-function, expanding-map, circle-walk, counterexample-chain",
            "task": "table tagged by `kind`"
        },
        "tasks": {
            "simulate": { "n": "usize", "replicas": "usize" },
            "sigma2": {
                "methods": "[covariance_series | dyadic | var_sn | fourier_closed_form]",
                "n": "usize", "replicas": "usize",
                "k_max": "usize = 20", "summation": "truncated | cesaro", "j_max": "u32 = 4",
                "ns": "[usize], for var_sn", "fourier_k_max": "u32 = 200"
            },
            "conditions": {
                "checks": "[mw | bis | s2inf | mix | class-l]", "n_max": "usize = 1000",
                "sigma2": "f64, for s2inf", "ns": "[usize], for s2inf and mix", "max_index": "usize = 3",
                "modulus": "table tagged by `type`: linear, power, log-power; for class-l", "blocks": "usize = 2000"
            },
            "inequality": {
                "bound": "table tagged by `type`: azuma {c}, puw {x_inf?, cond_norms?, range?}, projection {p?}",
                "n": "usize", "thresholds": "[f64]", "replicas": "usize >= 1000"
            },
            "mdp-scan": {
                "speed": "table tagged by `type`: power {gamma}, explicit {values}",
                "ns": "[usize]", "xs": "[f64]", "sigma2": "f64 > 0",
                "method": "naive | exact_binomial | tilted", "replicas": "usize = 0"
            },
            "diophantine": { "number": "table tagged by `type`: quadratic, literal, rational", "depth": "usize = 30", "epsilon": "f64", "k_max": "u64" },
            "transfer-decay": { "n_max": "usize" },
            "decompose": { "n": "usize", "m": "usize" }
        },
        "exit_codes": { "0": "success", "1": "task failure", "2": "config error", "3": "precision or capacity refusal" }
    })
}
