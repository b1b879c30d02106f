//! End-to-end tests of the command-line front-end through `cli::run`.

mod common;

use std::path::PathBuf;

use bcsreg::cli;
use serde_json::Value;

struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("bcsreg-cli-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.join(name).to_string_lossy().into_owned()
    }

    /// Writes the bundled dataset and returns its path.
    fn bundled(&self) -> String {
        let data = self.path("bundled.csv");
        let (code, _, err) = run(&["gen-data", "--seed", "2024", "--out", &data]);
        assert_eq!(code, 0, "{err}");
        data
    }

    fn read_json(&self, name: &str) -> Value {
        serde_json::from_slice(&std::fs::read(self.path(name)).unwrap()).unwrap()
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["bcsreg"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const FORMULA: &str = "y ~ age | 1 | age";

#[test]
fn fit_on_bundled_data_converges() {
    let ws = Workspace::new("fit");
    let data = ws.bundled();
    let (code, out, err) = run(&["fit", "--data", &data, "--formula", FORMULA, "--family", "BCLOII"]);
    assert_eq!(code, 0, "{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["status"], "converged");
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["data"]["n"], 4232);
    assert_eq!(report["coefficients"]["alpha"].as_array().unwrap().len(), 2);
    assert_eq!(report["coefficients"]["mu"][1]["name"], "age");
    let j = report["observed_information"]["matrix"].as_array().unwrap();
    assert_eq!(j.len(), 6);
}

#[test]
fn zeros_with_two_part_formula_exit_2() {
    let ws = Workspace::new("twopart");
    let data = ws.bundled();
    let (code, _, err) = run(&["fit", "--data", &data, "--formula", "y ~ age | 1", "--family", "BCNO"]);
    assert_eq!(code, 2);
    assert!(err.contains("zeros require a third formula part"), "{err}");
}

#[test]
fn fixed_lambda_reports_no_lambda_row() {
    let ws = Workspace::new("fixlambda");
    let data = ws.bundled();
    let (code, out, err) = run(&[
        "fit", "--data", &data, "--formula", FORMULA, "--family", "BCNO", "--fix-lambda", "-0.5",
    ]);
    assert!(code == 0 || code == 3, "{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    assert!(report["coefficients"]["lambda"].is_null());
    assert_eq!(report["model"]["lambda_fixed"], -0.5);
}

#[test]
fn diagnose_from_report_matches_refit() {
    let ws = Workspace::new("diagnose");
    let data = ws.bundled();
    let fit = ws.path("fit.json");
    let base = ["--formula", FORMULA, "--family", "BCLOII"];
    let mut fit_args = vec!["fit", "--data", &data, "--out", &fit];
    fit_args.extend_from_slice(&base);
    assert_eq!(run(&fit_args).0, 0);

    let from_report = ws.path("a.json");
    let (code, _, err) = run(&[
        "diagnose", "--fit", &fit, "--residuals", "all", "--realizations", "4", "--influence", "--seed", "5",
        "--out", &from_report,
    ]);
    assert_eq!(code, 0, "{err}");
    let refit = ws.path("b.json");
    let mut refit_args = vec!["diagnose", "--data", &data, "--residuals", "all", "--seed", "5", "--out", &refit];
    refit_args.extend_from_slice(&base);
    assert_eq!(run(&refit_args).0, 0);

    let a = ws.read_json("a.json");
    let b = ws.read_json("b.json");
    let sets = a["residuals"].as_array().unwrap();
    let randomized = sets.iter().filter(|s| s["kind"] == "randomized_quantile").count();
    assert_eq!(randomized, 4);
    assert_eq!(sets.len(), 6);
    // bitwise identical values whether the model is rebuilt or refitted
    assert_eq!(a["residuals"], b["residuals"]);
    let norm = a["influence"]["dmax_norm"].as_f64().unwrap();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn diagnose_writes_csv_tables() {
    let ws = Workspace::new("csvdir");
    let data = ws.bundled();
    let dir = ws.path("tables");
    let (code, _, err) = run(&[
        "diagnose", "--data", &data, "--formula", FORMULA, "--family", "BCLOII", "--envelope", "19",
        "--fast-envelope", "--influence", "--csv-dir", &dir, "--out", &ws.path("d.json"),
    ]);
    assert_eq!(code, 0, "{err}");
    for name in ["residuals.csv", "envelope.csv", "influence.csv"] {
        assert!(std::path::Path::new(&dir).join(name).exists(), "{name}");
    }
}

#[test]
fn single_value_grid_is_chosen() {
    let ws = Workspace::new("grid1");
    let data = ws.path("bct.csv");
    let (code, _, err) = run(&[
        "simulate", "--family", "BCT", "--zeta", "4", "--beta", "1,0.5", "--tau", "-1", "--lambda", "0.3", "--n",
        "300", "--seed", "3", "--out", &data,
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = run(&[
        "select-zeta", "--data", &data, "--formula", "y ~ x | 1", "--family", "BCT", "--zeta-grid", "5",
    ]);
    assert_eq!(code, 0, "{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["model"]["zeta"], 5.0);
    let rows = report["zeta_selection"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["chosen"], true);
}

#[test]
fn empty_grid_exits_2() {
    let ws = Workspace::new("grid0");
    let data = ws.bundled();
    let (code, _, _) = run(&[
        "select-zeta", "--data", &data, "--formula", FORMULA, "--family", "BCT", "--zeta-grid", "5:1:1",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn bcpe_grid_rejects_small_zeta() {
    let ws = Workspace::new("bcpe");
    let data = ws.path("bcpe.csv");
    let (code, _, err) = run(&[
        "simulate", "--family", "BCPE", "--zeta", "2", "--beta", "1", "--tau", "-1", "--n", "200", "--seed", "4",
        "--out", &data,
    ]);
    assert_eq!(code, 0, "{err}");
    let (_, out, err) = run(&[
        "select-zeta", "--data", &data, "--formula", "y ~ 1 | 1", "--family", "BCPE", "--zeta-grid", "0.5,2",
    ]);
    let report: Value = serde_json::from_str(&out).unwrap_or_else(|_| panic!("{err}"));
    let rows = report["zeta_selection"].as_array().unwrap();
    assert!(rows[0]["error"].is_string());
    assert_eq!(rows[1]["chosen"], true);
}

#[test]
fn simulate_rejects_zero_size_and_is_deterministic() {
    let (code, _, _) = run(&["simulate", "--family", "BCNO", "--beta", "1", "--tau", "-1", "--n", "0"]);
    assert_eq!(code, 2);
    let args = [
        "simulate", "--family", "BCLOII", "--kappa", "-0.85,0.5", "--beta", "1,0.5", "--tau", "-0.9", "--lambda",
        "0.5", "--n", "100,200", "--replicates", "8", "--seed", "9",
    ];
    let (code, first, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    let (_, second, _) = run(&args);
    assert_eq!(first, second);
    let report: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(report["summary"].as_array().unwrap().len(), 2 * 6);
}

#[test]
fn bad_formula_reports_offset() {
    let ws = Workspace::new("formula");
    let data = ws.bundled();
    let (code, _, err) = run(&["fit", "--data", &data, "--formula", "y ~", "--family", "BCNO"]);
    assert_eq!(code, 2);
    assert!(err.contains('3'), "{err}");
}

#[test]
fn missing_data_file_exits_2() {
    let (code, _, _) = run(&["fit", "--data", "/nonexistent/x.csv", "--formula", FORMULA, "--family", "BCNO"]);
    assert_eq!(code, 2);
}
