//! Implementations of the CLI commands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::dataset::{Column, Dataset, RawTable};
use super::design::build_design;
use super::formula::{parse_formula, FormulaAst};
use super::simulate::{self, Truth, UniformDesign};
use super::{DiagnoseArgs, FitArgs, GenDataArgs, ModelArgs, SimulateArgs};
use crate::dgf::FamilyTag;
use crate::diagnostics::{self, ResidualSet};
use crate::error::{Error, Result};
use crate::regress::{
    self, BinaryLink, Convergence, FitStatus, FittedModel, LambdaMode, Link, ModelSpec, RegressionData, ZetaMode,
    ZetaRow,
};
use crate::zabcs::ZeroThreshold;

/// Version of the JSON report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 2,
    Convergence = 3,
}

fn data_error(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}

/// Parses "lo:hi:step" or a comma-separated list into a non-empty grid.
pub fn parse_zeta_grid(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| data_error(format!("invalid number '{s}' in zeta grid '{text}'")))
    };
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(data_error(format!("zeta grid '{text}' must have the form lo:hi:step")));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || hi < lo {
            Vec::new()
        } else {
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|k| {
                    let v = lo + k as f64 * step;
                    (v * 1e12).round() / 1e12
                })
                .collect()
        }
    } else {
        text.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() {
        return Err(data_error(format!("zeta grid '{text}' is empty")));
    }
    Ok(grid)
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| data_error(format!("delimiter must be a single ASCII character, got '{c}'")))
}

fn parse_link(s: &str) -> Result<Link> {
    s.parse()
}

fn parse_binary_link(s: &str) -> Result<BinaryLink> {
    s.parse()
}

/// A dataset bound to a formula and a model specification.
struct Loaded {
    path: PathBuf,
    args: ModelArgs,
    ast: FormulaAst,
    frame: Dataset,
    dropped: usize,
    data: RegressionData,
    spec: ModelSpec,
}

fn build_spec(args: &ModelArgs) -> Result<ModelSpec> {
    let family: FamilyTag = args
        .family
        .as_deref()
        .ok_or_else(|| data_error("--family is required"))?
        .parse()?;
    let mut spec = ModelSpec::new(family).with_links(
        parse_link(&args.link_mu)?,
        parse_link(&args.link_sigma)?,
        parse_binary_link(&args.link_alpha)?,
    );
    spec.zeta_mode = match (args.zeta, &args.zeta_grid) {
        (Some(_), Some(_)) => return Err(data_error("give either --zeta or --zeta-grid, not both")),
        (Some(z), None) => Some(ZetaMode::Fixed(z)),
        (None, Some(g)) => Some(ZetaMode::Select(parse_zeta_grid(g)?)),
        (None, None) => None,
    };
    if let Some(l) = args.fix_lambda {
        spec.lambda_mode = LambdaMode::Fixed(l);
    }
    spec.formula = args.formula.clone();
    spec.validate()?;
    Ok(spec)
}

fn load(args: &ModelArgs) -> Result<Loaded> {
    let path = args.data.clone().ok_or_else(|| data_error("--data is required"))?;
    let text = args.formula.as_deref().ok_or_else(|| data_error("--formula is required"))?;
    let ast = parse_formula(text)?;
    let mut spec = build_spec(args)?;
    spec.formula = Some(ast.to_string());
    if !(args.zero_threshold >= 0.0 && args.zero_threshold.is_finite()) {
        return Err(data_error("--zero-threshold must be a finite non-negative number"));
    }
    let raw = RawTable::from_path(&path, delimiter_byte(args.delimiter)?)?;
    let vars = ast.variables();
    let names: Vec<&str> = vars.iter().map(String::as_str).collect();
    let (frame, dropped) = raw.complete_cases(&names)?;
    if frame.nrows() == 0 {
        return Err(data_error("no complete rows remain after dropping missing values"));
    }
    let (mut y, design) = build_design(&frame, &ast)?;
    let threshold = ZeroThreshold(args.zero_threshold);
    for v in &mut y {
        if threshold.is_zero(*v) {
            *v = 0.0;
        }
    }
    let data = RegressionData::new(y, design)?;
    Ok(Loaded {
        path,
        args: args.clone(),
        ast,
        frame,
        dropped,
        data,
        spec,
    })
}

/// Fits the loaded model, selecting ζ over the grid when asked.
fn fit_loaded(l: &Loaded) -> Result<(FittedModel, Option<Vec<ZetaRow>>)> {
    match &l.spec.zeta_mode {
        Some(ZetaMode::Select(grid)) => {
            let s = regress::select_zeta(&l.data, &l.spec, grid)?;
            Ok((s.fit, Some(s.table)))
        }
        _ => Ok((regress::fit(&l.data, &l.spec)?, None)),
    }
}

fn emit(report: &Value, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            writeln!(f, "{text}")?;
            f.flush()?;
        }
        None => {
            writeln!(stdout, "{text}")?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn status_str(s: FitStatus) -> &'static str {
    match s {
        FitStatus::Converged => "converged",
        FitStatus::MaxIter => "max_iter",
        FitStatus::Failed => "failed",
    }
}

fn exit_for(s: FitStatus) -> ExitCode {
    if s == FitStatus::Converged {
        ExitCode::Ok
    } else {
        ExitCode::Convergence
    }
}

fn data_json(l: &Loaded) -> Value {
    json!({
        "path": l.path.to_string_lossy(),
        "delimiter": l.args.delimiter.to_string(),
        "zero_threshold": l.args.zero_threshold,
        "n": l.data.n(),
        "n_zero": l.data.n_zero(),
        "dropped_rows": l.dropped,
    })
}

fn model_json(l: &Loaded, fit: &FittedModel, selected: bool) -> Value {
    json!({
        "formula": l.ast.to_string(),
        "family": fit.family.as_str(),
        "zeta": fit.zeta,
        "zeta_selected": selected,
        "zero_adjusted": fit.is_zero_adjusted(),
        "mu_link": fit.mu_link.as_str(),
        "sigma_link": fit.sigma_link.as_str(),
        "alpha_link": fit.alpha_link.map(|a| a.as_str()),
        "lambda_fixed": fit.lambda_fixed.then_some(fit.lambda),
    })
}

fn coefficients_json(fit: &FittedModel) -> Value {
    let rows = regress::wald_inference(fit);
    let block = |prefix: &str| -> Vec<Value> {
        rows.iter()
            .filter_map(|r| {
                r.name.strip_prefix(prefix).map(|name| {
                    json!({
                        "name": name,
                        "estimate": r.estimate,
                        "std_error": r.std_error,
                        "z_value": r.z_value,
                        "p_value": r.p_value,
                    })
                })
            })
            .collect()
    };
    let lambda = rows.iter().find(|r| r.name == "lambda").map(|r| {
        json!({
            "name": "lambda",
            "estimate": r.estimate,
            "std_error": r.std_error,
            "z_value": r.z_value,
            "p_value": r.p_value,
        })
    });
    json!({
        "alpha": fit.is_zero_adjusted().then(|| block("alpha:")),
        "mu": block("mu:"),
        "sigma": block("sigma:"),
        "lambda": lambda,
    })
}

fn convergence_json(c: &Convergence) -> Value {
    json!({
        "status": status_str(c.status),
        "iterations": c.iterations,
        "gradient_norm": c.gradient_norm,
        "restarts": c.restarts,
        "loglik_trace": c.loglik_trace,
    })
}

fn fit_report(command: &str, argv: &[String], l: &Loaded, fit: &FittedModel, table: Option<&[ZetaRow]>) -> Value {
    let upsilon = diagnostics::upsilon(fit, &l.data).ok();
    let r = fit.n_params();
    let aic = diagnostics::aic(fit.loglik, r);
    let info: Vec<Vec<f64>> = fit
        .observed_information
        .row_iter()
        .map(|row| row.iter().copied().collect())
        .collect();
    let selection = table.map(|t| {
        t.iter()
            .map(|row| {
                json!({
                    "zeta": row.zeta,
                    "loglik": row.loglik,
                    "upsilon": row.upsilon,
                    "status": row.status.map(status_str),
                    "error": row.error,
                    "chosen": Some(row.zeta) == fit.zeta && row.error.is_none(),
                })
            })
            .collect::<Vec<_>>()
    });
    json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "invocation": argv,
        "status": status_str(fit.convergence.status),
        "data": data_json(l),
        "model": model_json(l, fit, table.is_some()),
        "coefficients": coefficients_json(fit),
        "fit": {
            "loglik": fit.loglik,
            "loglik_discrete": fit.loglik_discrete,
            "loglik_continuous": fit.loglik_continuous,
            "n_params": r,
            "aic": aic,
            "aic_with_zeta": aic + if fit.zeta.is_some() { 2.0 } else { 0.0 },
            "upsilon": upsilon,
        },
        "convergence": convergence_json(&fit.convergence),
        "observed_information": {
            "names": fit.parameter_names(),
            "matrix": info,
        },
        "zeta_selection": selection,
        "warnings": fit.warnings,
    })
}

pub(super) fn fit(args: &FitArgs, argv: &[String], stdout: &mut dyn Write) -> Result<ExitCode> {
    let l = load(&args.model)?;
    let (f, table) = fit_loaded(&l)?;
    let report = fit_report("fit", argv, &l, &f, table.as_deref());
    emit(&report, args.out.as_deref(), stdout)?;
    Ok(exit_for(f.convergence.status))
}

pub(super) fn select_zeta(args: &FitArgs, argv: &[String], stdout: &mut dyn Write) -> Result<ExitCode> {
    if args.model.zeta_grid.is_none() {
        return Err(data_error("select-zeta needs --zeta-grid"));
    }
    let l = load(&args.model)?;
    let (f, table) = fit_loaded(&l)?;
    let report = fit_report("select-zeta", argv, &l, &f, table.as_deref());
    emit(&report, args.out.as_deref(), stdout)?;
    Ok(exit_for(f.convergence.status))
}

fn read_json(path: &Path) -> Result<Value> {
    let f = File::open(path).map_err(|e| data_error(format!("cannot open report {}: {e}", path.display())))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

fn field<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value> {
    let mut cur = v;
    for k in path {
        cur = cur
            .get(k)
            .ok_or_else(|| data_error(format!("fit report lacks the field '{}'", path.join("."))))?;
    }
    Ok(cur)
}

fn field_str(v: &Value, path: &[&str]) -> Result<String> {
    field(v, path)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| data_error(format!("fit report field '{}' is not a string", path.join("."))))
}

fn estimates(block: &Value) -> Result<Vec<f64>> {
    let Some(rows) = block.as_array() else {
        return Ok(Vec::new());
    };
    rows.iter()
        .map(|r| {
            r.get("estimate")
                .and_then(Value::as_f64)
                .ok_or_else(|| data_error("fit report has a coefficient without a numeric estimate"))
        })
        .collect()
}

/// Model flags, coefficients and convergence record stored in a fit report.
struct SavedFit {
    args: ModelArgs,
    theta: DVector<f64>,
    convergence: Convergence,
}

fn saved_fit(report: &Value, data_override: Option<&PathBuf>) -> Result<SavedFit> {
    if report.get("schema_version").and_then(Value::as_u64) != Some(REPORT_SCHEMA_VERSION as u64) {
        return Err(data_error("unsupported or missing report schema_version"));
    }
    let model = field(report, &["model"])?;
    let data = field(report, &["data"])?;
    let delimiter = field_str(data, &["delimiter"])?.chars().next().unwrap_or(',');
    let args = ModelArgs {
        data: Some(match data_override {
            Some(p) => p.clone(),
            None => PathBuf::from(field_str(data, &["path"])?),
        }),
        delimiter,
        zero_threshold: field(data, &["zero_threshold"])?.as_f64().unwrap_or(0.0),
        formula: Some(field_str(model, &["formula"])?),
        family: Some(field_str(model, &["family"])?),
        zeta: model.get("zeta").and_then(Value::as_f64),
        zeta_grid: None,
        fix_lambda: model.get("lambda_fixed").and_then(Value::as_f64),
        link_mu: field_str(model, &["mu_link"])?,
        link_sigma: field_str(model, &["sigma_link"])?,
        link_alpha: model
            .get("alpha_link")
            .and_then(Value::as_str)
            .unwrap_or("logit")
            .to_string(),
    };
    let coef = field(report, &["coefficients"])?;
    let mut theta = estimates(field(coef, &["alpha"])?)?;
    theta.extend(estimates(field(coef, &["mu"])?)?);
    theta.extend(estimates(field(coef, &["sigma"])?)?);
    if let Some(l) = coef.get("lambda").filter(|v| !v.is_null()) {
        theta.push(
            l.get("estimate")
                .and_then(Value::as_f64)
                .ok_or_else(|| data_error("fit report has a non-numeric lambda"))?,
        );
    }
    let conv = field(report, &["convergence"])?;
    let status = match field_str(conv, &["status"])?.as_str() {
        "converged" => FitStatus::Converged,
        "max_iter" => FitStatus::MaxIter,
        _ => FitStatus::Failed,
    };
    let convergence = Convergence {
        status,
        iterations: conv.get("iterations").and_then(Value::as_u64).unwrap_or(0) as usize,
        gradient_norm: conv.get("gradient_norm").and_then(Value::as_f64).unwrap_or(f64::NAN),
        restarts: conv.get("restarts").and_then(Value::as_u64).unwrap_or(0) as usize,
        loglik_trace: conv
            .get("loglik_trace")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_default(),
    };
    Ok(SavedFit {
        args,
        theta: DVector::from_vec(theta),
        convergence,
    })
}

/// Independent seeds for the random parts of one command.
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.random()
}

fn residual_json(r: &ResidualSet) -> Value {
    json!({
        "kind": r.kind,
        "realization": r.realization,
        "index": r.index,
        "values": r.values,
        "clamped": r.clamped,
        "missing": r.missing,
    })
}

fn write_csv_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub(super) fn diagnose(args: &DiagnoseArgs, argv: &[String], stdout: &mut dyn Write) -> Result<ExitCode> {
    let kinds: &[&str] = match args.residuals.as_str() {
        "quantile" => &["quantile"],
        "randomized" => &["randomized"],
        "pearson" => &["pearson"],
        "all" => &["quantile", "randomized", "pearson"],
        other => {
            return Err(data_error(format!(
                "unknown residual kind '{other}' (quantile, randomized, pearson or all)"
            )))
        }
    };
    let (l, f, source) = match &args.fit {
        Some(path) => {
            let saved = saved_fit(&read_json(path)?, args.model.data.as_ref())?;
            let l = load(&saved.args)?;
            let f = regress::fitted_at(&l.data, &l.spec, &saved.theta, saved.convergence)?;
            (l, f, Some(path.to_string_lossy().into_owned()))
        }
        None => {
            let l = load(&args.model)?;
            let (f, _) = fit_loaded(&l)?;
            (l, f, None)
        }
    };
    let data = &l.data;

    let mut sets: Vec<ResidualSet> = Vec::new();
    for &k in kinds {
        match k {
            "quantile" => sets.push(diagnostics::quantile_residuals(&f, data)?),
            "randomized" if f.is_zero_adjusted() || args.residuals != "all" => sets.extend(
                diagnostics::randomized_quantile_residuals(&f, data, args.realizations, derive_seed(args.seed, 1))?,
            ),
            "pearson" if f.is_zero_adjusted() || args.residuals != "all" => {
                sets.push(diagnostics::pearson_residuals(&f, data)?)
            }
            _ => {}
        }
    }
    let q = diagnostics::quantile_residuals(&f, data)?;
    let n_q = q.values.len() as f64;
    let mean = q.values.iter().sum::<f64>() / n_q;
    let sd = (q.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_q - 1.0)).sqrt();
    let (ks_d, ks_p) = diagnostics::ks_test_normal(&q.values);

    let envelope = if args.envelope > 0 {
        Some(diagnostics::simulated_envelope(
            &f,
            data,
            args.envelope,
            args.level,
            derive_seed(args.seed, 2),
            !args.fast_envelope,
        )?)
    } else {
        None
    };
    let influence = if args.influence {
        Some(diagnostics::local_influence(&f, data)?)
    } else {
        None
    };

    if let Some(dir) = &args.csv_dir {
        std::fs::create_dir_all(dir)?;
        write_csv_table(
            &dir.join("residuals.csv"),
            &["kind", "realization", "index", "residual"],
            sets.iter().flat_map(|s| {
                let kind = serde_json::to_value(s.kind).ok().and_then(|v| v.as_str().map(String::from));
                let kind = kind.unwrap_or_default();
                let real = s.realization.map(|r| r.to_string()).unwrap_or_default();
                s.index
                    .iter()
                    .zip(&s.values)
                    .map(move |(i, v)| vec![kind.clone(), real.clone(), i.to_string(), v.to_string()])
            }),
        )?;
        if let Some(e) = &envelope {
            write_csv_table(
                &dir.join("envelope.csv"),
                &["rank", "observed", "lower", "median", "upper"],
                (0..e.observed.len()).map(|k| {
                    vec![
                        (k + 1).to_string(),
                        e.observed[k].to_string(),
                        e.lower[k].to_string(),
                        e.median[k].to_string(),
                        e.upper[k].to_string(),
                    ]
                }),
            )?;
        }
        if let Some(inf) = &influence {
            write_csv_table(
                &dir.join("influence.csv"),
                &["index", "dmax", "abs_dmax", "ci"],
                (0..inf.ci.len()).map(|i| {
                    vec![
                        i.to_string(),
                        inf.dmax[i].to_string(),
                        inf.dmax[i].abs().to_string(),
                        inf.ci[i].to_string(),
                    ]
                }),
            )?;
        }
    }

    let report = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": "diagnose",
        "invocation": argv,
        "fit_report": source,
        "status": status_str(f.convergence.status),
        "data": data_json(&l),
        "model": model_json(&l, &f, false),
        "residuals": sets.iter().map(residual_json).collect::<Vec<_>>(),
        "quantile_summary": {
            "n": q.values.len(),
            "mean": mean,
            "sd": sd,
            "ks_statistic": ks_d,
            "ks_p_value": ks_p,
            "upsilon": diagnostics::upsilon_from_residuals(&q.values).ok(),
        },
        "envelope": envelope.as_ref().map(|e| json!({
            "observed": e.observed,
            "lower": e.lower,
            "median": e.median,
            "upper": e.upper,
            "level": e.level,
            "replicates": e.replicates,
            "failed_replicates": e.failed_replicates,
            "outside": e.outside,
            "fraction_outside": e.fraction_outside(),
            "refit": e.refit,
        })),
        "influence": influence.as_ref().map(|inf| json!({
            "dmax": inf.dmax,
            "abs_dmax": inf.dmax.iter().map(|v| v.abs()).collect::<Vec<_>>(),
            "dmax_norm": inf.dmax.iter().map(|v| v * v).sum::<f64>().sqrt(),
            "cdmax": inf.cdmax,
            "ci": inf.ci,
            "eigenvalues": inf.eigenvalues,
        })),
        "warnings": f.warnings,
    });
    emit(&report, args.out.as_deref(), stdout)?;
    Ok(exit_for(f.convergence.status))
}

fn parse_coefficients(flag: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| data_error(format!("--{flag}: invalid number '{s}'")))
        })
        .collect()
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let sizes: Vec<usize> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| data_error(format!("--n: invalid sample size '{s}'")))
        })
        .collect::<Result<_>>()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(data_error("--n must be positive"));
    }
    Ok(sizes)
}

fn truth_json(t: &Truth) -> Value {
    serde_json::to_value(t).unwrap_or(Value::Null)
}

pub(super) fn simulate(args: &SimulateArgs, argv: &[String], stdout: &mut dyn Write) -> Result<ExitCode> {
    let sizes = parse_sizes(&args.n)?;
    if args.replicates == 0 && sizes.len() > 1 {
        return Err(data_error("several sample sizes need --replicates > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    if let Some(path) = &args.fit {
        let saved = saved_fit(&read_json(path)?, args.data.as_ref())?;
        let l = load(&saved.args)?;
        let f = regress::fitted_at(&l.data, &l.spec, &saved.theta, saved.convergence)?;
        let truth = Truth {
            family: f.family,
            zeta: f.zeta,
            mu_link: f.mu_link,
            sigma_link: f.sigma_link,
            alpha_link: f.alpha_link.unwrap_or_default(),
            kappa: f.kappa.clone(),
            beta: f.beta.clone(),
            tau: f.tau.clone(),
            lambda: f.lambda,
        };
        let base = &l.data.design;
        if args.replicates == 0 {
            let n = sizes[0];
            let design = simulate::cycle_rows(base, n)?;
            let y = truth.simulate(&design, &mut rng)?;
            let rows: Vec<usize> = (0..n).map(|i| i % l.frame.nrows()).collect();
            let mut frame = l.frame.select_rows(&rows);
            let j = frame.names.iter().position(|c| *c == l.ast.response).expect("response column");
            frame.columns[j] = Column::Numeric(y);
            frame.write_csv(output(args.out.as_deref(), stdout)?)?;
            return Ok(ExitCode::Ok);
        }
        let rows = simulate::monte_carlo_study(
            &truth,
            |n, _| simulate::cycle_rows(base, n),
            &sizes,
            args.replicates,
            args.seed,
            args.level,
        )?;
        return study_report(args, argv, &truth, &rows, stdout);
    }

    let family: FamilyTag = args
        .family
        .as_deref()
        .ok_or_else(|| data_error("--family is required without --fit"))?
        .parse()?;
    let beta = parse_coefficients("beta", args.beta.as_deref().ok_or_else(|| data_error("--beta is required"))?)?;
    let tau = parse_coefficients("tau", args.tau.as_deref().ok_or_else(|| data_error("--tau is required"))?)?;
    let kappa = args.kappa.as_deref().map(|k| parse_coefficients("kappa", k)).transpose()?;
    let truth = Truth {
        family,
        zeta: args.zeta,
        mu_link: parse_link(&args.link_mu)?,
        sigma_link: parse_link(&args.link_sigma)?,
        alpha_link: parse_binary_link(&args.link_alpha)?,
        kappa,
        beta,
        tau,
        lambda: args.lambda,
    };
    truth.validate()?;
    let layout = UniformDesign::of(&truth)?;
    if args.replicates == 0 {
        let (x, design) = layout.draw(sizes[0], &mut rng)?;
        let y = truth.simulate(&design, &mut rng)?;
        let mut frame = Dataset {
            names: Vec::new(),
            columns: Vec::new(),
        };
        if layout.uses_x() {
            frame.names.push("x".into());
            frame.columns.push(Column::Numeric(x));
        }
        frame.names.push("y".into());
        frame.columns.push(Column::Numeric(y));
        frame.write_csv(output(args.out.as_deref(), stdout)?)?;
        return Ok(ExitCode::Ok);
    }
    let rows = simulate::monte_carlo_study(
        &truth,
        |n, rng| Ok(layout.draw(n, rng)?.1),
        &sizes,
        args.replicates,
        args.seed,
        args.level,
    )?;
    study_report(args, argv, &truth, &rows, stdout)
}

fn output<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn study_report(
    args: &SimulateArgs,
    argv: &[String],
    truth: &Truth,
    rows: &[simulate::StudyRow],
    stdout: &mut dyn Write,
) -> Result<ExitCode> {
    let report = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": "simulate",
        "invocation": argv,
        "truth": truth_json(truth),
        "replicates": args.replicates,
        "level": args.level,
        "seed": args.seed,
        "summary": rows,
    });
    emit(&report, args.out.as_deref(), stdout)?;
    Ok(ExitCode::Ok)
}

pub(super) fn gen_data(args: &GenDataArgs, argv: &[String], stdout: &mut dyn Write) -> Result<ExitCode> {
    let d = simulate::generate_bundled_dataset(args.seed);
    if let Some(p) = &args.truth {
        let Some(Column::Numeric(y)) = d.column("y") else {
            unreachable!("bundled data has a numeric response")
        };
        let zeros = y.iter().filter(|&&v| v == 0.0).count();
        let report = json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "command": "gen-data",
            "invocation": argv,
            "seed": args.seed,
            "n": d.nrows(),
            "zero_fraction": zeros as f64 / d.nrows() as f64,
            "formula": simulate::BUNDLED_FORMULA,
            "truth": truth_json(&simulate::bundled_truth()),
        });
        emit(&report, Some(p), stdout)?;
    }
    d.write_csv(output(args.out.as_deref(), stdout)?)?;
    Ok(ExitCode::Ok)
}
