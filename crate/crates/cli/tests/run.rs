use std::fs;
use std::path::Path;
use std::process::Command;

fn mdlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mdlab"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let out = dir.join("out");
    let text = format!("seed = 5\n[output]\ndir = {:?}\n{body}", out.display().to_string());
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

const IID: &str = "[model]\ntype = \"iid\"\nlaw = { type = \"rademacher\" }\n";

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sigma2_of_iid_signs_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{IID}[task]\nkind = \"sigma2\"\nmethods = [\"covariance_series\"]\nn = 1000\nreplicas = 200\nk_max = 5\n"),
    );
    let st = mdlab().arg("run").arg(&cfg).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let rows = read_csv(&tmp.path().join("out/sigma2.csv"));
    assert_eq!(rows[0][..2], ["method", "value"]);
    let v: f64 = rows[1][1].parse().unwrap();
    assert!((v - 1.0).abs() < 0.05, "{v}");
    let manifest = fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("covariance series truncated at lag 5"));
    assert!(tmp.path().join("out/timing.json").exists());
}

#[test]
fn exact_scan_reports_gaps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            "{IID}[task]\nkind = \"mdp-scan\"\nspeed = {{ type = \"power\", gamma = 0.5 }}\nns = [100, 10000]\nxs = [1.0]\nsigma2 = 1.0\nmethod = \"exact_binomial\"\n"
        ),
    );
    assert_eq!(mdlab().arg("run").arg(&cfg).status().unwrap().code(), Some(0));
    let rows = read_csv(&tmp.path().join("out/scan.csv"));
    let gap = rows[0].iter().position(|h| h == "gap").unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r[gap].parse::<f64>().is_ok()));
}

#[test]
fn negative_replicas_is_a_config_error_with_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{IID}[task]\nkind = \"simulate\"\nn = 10\nreplicas = -3\n"));
    assert_eq!(mdlab().arg("run").arg(&cfg).status().unwrap().code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_fields_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{IID}[task]\nkind = \"simulate\"\nn = 10\nreplicas = 2\nspeed = 1\n"));
    assert_eq!(mdlab().arg("run").arg(&cfg).status().unwrap().code(), Some(2));
    let cfg = write_config(tmp.path(), &format!("{IID}extra = 1\n[task]\nkind = \"simulate\"\nn = 10\nreplicas = 2\n"));
    assert_eq!(mdlab().arg("run").arg(&cfg).status().unwrap().code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn rare_naive_scan_is_refused_with_a_manifest_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            "{IID}[task]\nkind = \"mdp-scan\"\nspeed = {{ type = \"power\", gamma = 0.5 }}\nns = [100]\nxs = [3.0]\nsigma2 = 1.0\nmethod = \"naive\"\nreplicas = 100\n"
        ),
    );
    assert_eq!(mdlab().arg("run").arg(&cfg).status().unwrap().code(), Some(3));
    let manifest = fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"refused\""));
    assert!(!tmp.path().join("out/scan.csv").exists());
}

#[test]
fn model_mismatch_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let model = "[model]\ntype = \"linear\"\n[model.spec]\ncoefficients = { type = \"geometric\", scale = 1.0, rho = 0.5, two_sided = false }\n\
                 innovations = { type = \"iid\", law = { type = \"rademacher\" } }\nobservable = { type = \"identity\" }\n";
    let cfg = write_config(tmp.path(), &format!("{model}[task]\nkind = \"decompose\"\nn = 64\nm = 8\n"));
    assert_eq!(mdlab().arg("run").arg(&cfg).status().unwrap().code(), Some(2));
}

#[test]
fn identical_configs_give_identical_tables() {
    let body = "[model]\ntype = \"circle-walk\"\nstep = { type = \"quadratic\", p = -1, d = 5, q = 2 }\nmodes = [{ k = 1, re = 0.5 }]\n\
                [task]\nkind = \"sigma2\"\nmethods = [\"covariance_series\", \"dyadic\", \"fourier_closed_form\"]\nn = 512\nreplicas = 100\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let cfg = write_config(d.path(), body);
        assert_eq!(mdlab().arg("run").arg(&cfg).status().unwrap().code(), Some(0));
    }
    for f in ["sigma2.csv", "sigma2_terms.csv"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap());
    }
}

#[test]
fn every_example_config_validates() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut kinds = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let cfg = mdlab_cli::ExperimentConfig::from_toml(&text).unwrap();
        cfg.validate().unwrap();
        kinds.push(cfg.task.kind());
    }
    kinds.sort();
    kinds.dedup();
    assert_eq!(kinds.len(), 8, "{kinds:?}");
}

#[test]
fn unknown_suite_exits_2_and_schema_prints() {
    assert_eq!(mdlab().args(["suite", "nightly"]).status().unwrap().code(), Some(2));
    let out = mdlab().arg("print-schema").output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tasks"].as_object().unwrap().len(), 8);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let st = mdlab().env("MDLAB_THREADS", "many").arg("print-schema").status().unwrap();
    assert_eq!(st.code(), Some(2));
}
