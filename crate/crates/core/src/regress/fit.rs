//! Initialization, fitting, observed information, ζ selection and Wald tables.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::BcsObjective;
use super::optim::{maximize, numeric_hessian, OptimOptions, OptimStatus};
use super::{CoefficientNames, Convergence, FitStatus, FittedModel, LambdaMode, ModelSpec, RegressionData, ZetaMode};
use crate::bcs::open_unit;
use crate::binglm::{self, BinaryGlmFit};
use crate::diagnostics;
use crate::error::{domain, Error, Result};
use crate::specfun;

/// Starting values of the continuous part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialValues {
    pub beta: Vec<f64>,
    pub tau: Vec<f64>,
    pub lambda: f64,
    /// 0.75 (Q₃ − Q₁)/Q₂ of the positive responses.
    pub cv: f64,
    /// asinh(cv/1.5)/Φ⁻¹(0.75), a robust σ guess (exact for the log-normal law).
    pub sigma0: f64,
}

/// Sample quantile with linear interpolation between order statistics.
fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn rows_where(m: &DMatrix<f64>, keep: &[bool]) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..m.nrows()).filter(|&i| keep[i]).collect();
    m.select_rows(&idx)
}

fn least_squares(x: &DMatrix<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = (x.transpose() * x).cholesky()?;
    Some(chol.solve(&(x.transpose() * v)))
}

fn intercept_column(m: &DMatrix<f64>) -> Option<usize> {
    (0..m.ncols()).find(|&j| m.column(j).iter().all(|&v| v == 1.0))
}

/// Least-squares start for β on d₁(y), τ from the quartile-based σ guess, λ = 0.
pub fn init_theta(data: &RegressionData, spec: &ModelSpec) -> Result<InitialValues> {
    let keep: Vec<bool> = data.y.iter().map(|&v| v > 0.0).collect();
    let y: Vec<f64> = data.y.iter().copied().filter(|&v| v > 0.0).collect();
    let x = rows_where(&data.design.x, &keep);
    let s = rows_where(&data.design.s, &keep);
    let (p, q) = (x.ncols(), s.ncols());
    if y.len() <= p + q + 1 {
        return Err(Error::Data(format!(
            "{} positive responses are too few for {} coefficients",
            y.len(),
            p + q + 1
        )));
    }
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let (q1, q2, q3) = (
        sample_quantile(&sorted, 0.25),
        sample_quantile(&sorted, 0.5),
        sample_quantile(&sorted, 0.75),
    );
    let cv = 0.75 * (q3 - q1) / q2;
    let mut sigma0 = (cv / 1.5).asinh() / specfun::phi_inv(0.75);
    if !(sigma0 > 1e-3) {
        // ties in the quartiles; fall back to a small positive spread
        sigma0 = 0.1;
    }

    let ups = DVector::from_iterator(y.len(), y.iter().map(|&v| spec.mu_link.link(v)));
    let rank_err = |names: &[String], part: &str| Error::RankDeficient {
        columns: names.iter().map(|n| format!("{part}:{n}")).collect(),
    };
    let mut beta = least_squares(&x, &ups).ok_or_else(|| rank_err(&data.design.x_names, "mu"))?;
    let valid = (&x * &beta).iter().all(|&e| spec.mu_link.inverse(e).is_some());
    if !valid {
        // OLS predictions leave the μ space (identity/sqrt links); restart from the
        // intercept at the geometric mean
        let j = intercept_column(&x).ok_or_else(|| {
            Error::Data("least-squares start gives invalid mu and the mu part has no intercept".into())
        })?;
        let gm = (y.iter().map(|v| v.ln()).sum::<f64>() / y.len() as f64).exp();
        beta = DVector::zeros(p);
        beta[j] = spec.mu_link.link(gm);
    }
    let target = DVector::from_element(y.len(), spec.sigma_link.link(sigma0));
    let tau = least_squares(&s, &target).ok_or_else(|| rank_err(&data.design.s_names, "sigma"))?;
    let lambda = match spec.lambda_mode {
        LambdaMode::Free => 0.0,
        LambdaMode::Fixed(l) => l,
    };
    Ok(InitialValues {
        beta: beta.iter().copied().collect(),
        tau: tau.iter().copied().collect(),
        lambda,
        cv,
        sigma0,
    })
}

fn theta_from_init(init: &InitialValues, lambda_mode: LambdaMode) -> DVector<f64> {
    let mut v = init.beta.clone();
    v.extend(&init.tau);
    if lambda_mode.is_free() {
        v.push(init.lambda);
    }
    DVector::from_vec(v)
}

struct ContinuousFit {
    theta: DVector<f64>,
    loglik: f64,
    convergence: Convergence,
}

fn status_of(s: OptimStatus) -> FitStatus {
    match s {
        OptimStatus::Converged => FitStatus::Converged,
        OptimStatus::MaxIterations => FitStatus::MaxIter,
        OptimStatus::LineSearchFailed => FitStatus::Failed,
    }
}

fn fit_continuous(obj: &BcsObjective<'_>, start: &DVector<f64>) -> ContinuousFit {
    let opts = OptimOptions::default();
    let f = |t: &DVector<f64>| obj.loglik(t);
    let g = |t: &DVector<f64>| obj.score(t);
    let mut trace = Vec::new();
    if let Some(l0) = f(start) {
        trace.push(l0);
    }
    let first = maximize(f, g, start, &opts);
    if let Some(r) = &first {
        trace.push(r.value);
        if r.status == OptimStatus::Converged {
            return ContinuousFit {
                theta: r.theta.clone(),
                loglik: r.value,
                convergence: Convergence {
                    status: FitStatus::Converged,
                    iterations: r.iterations,
                    gradient_norm: r.gradient_norm(),
                    restarts: 0,
                    loglik_trace: trace,
                },
            };
        }
    }
    // one restart from a jittered start
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let jittered = DVector::from_iterator(
        start.len(),
        start.iter().map(|&v| {
            let e = specfun::phi_inv(open_unit(&mut rng));
            v + 0.1 * e * v.abs().max(1.0)
        }),
    );
    let base = first.as_ref().map(|r| r.theta.clone()).unwrap_or_else(|| start.clone());
    let second = maximize(f, g, &jittered, &opts).or_else(|| maximize(f, g, &base, &opts));
    let used = first.as_ref().map_or(0, |r| r.iterations);
    let best = match (first, second) {
        (Some(a), Some(b)) => {
            trace.push(b.value);
            let b_better = (b.status == OptimStatus::Converged && a.status != OptimStatus::Converged)
                || (b.status == a.status && b.value > a.value);
            if b_better {
                b
            } else {
                a
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => {
            trace.push(b.value);
            b
        }
        (None, None) => {
            return ContinuousFit {
                theta: start.clone(),
                loglik: f64::NEG_INFINITY,
                convergence: Convergence {
                    status: FitStatus::Failed,
                    iterations: 0,
                    gradient_norm: f64::INFINITY,
                    restarts: 1,
                    loglik_trace: trace,
                },
            }
        }
    };
    ContinuousFit {
        loglik: best.value,
        convergence: Convergence {
            status: status_of(best.status),
            iterations: used + best.iterations,
            gradient_norm: best.gradient_norm(),
            restarts: 1,
            loglik_trace: trace,
        },
        theta: best.theta,
    }
}

/// Joint score of (κ, β, τ, λ) for zero-adjusted data; plain BCS score otherwise.
fn joint_score(
    theta: &DVector<f64>,
    obj: &BcsObjective<'_>,
    binary: Option<(&[f64], &DMatrix<f64>, super::BinaryLink)>,
) -> Option<DVector<f64>> {
    match binary {
        None => obj.score(theta),
        Some((ind, z, link)) => {
            let m = z.ncols();
            let kappa = theta.rows(0, m).into_owned();
            let rest = theta.rows(m, theta.len() - m).into_owned();
            let u1 = binglm::score_binary(&kappa, ind, z, link);
            let u2 = obj.score(&rest)?;
            let mut out = DVector::zeros(theta.len());
            out.rows_mut(0, m).copy_from(&u1);
            out.rows_mut(m, u2.len()).copy_from(&u2);
            Some(out)
        }
    }
}

/// J_n = −(numeric Jacobian of the score), symmetrized. θ is ordered κ, β, τ, λ
/// when the design has an α part, and β, τ, λ otherwise.
pub fn observed_information(theta: &DVector<f64>, data: &RegressionData, spec: &ModelSpec) -> Result<DMatrix<f64>> {
    let obj = BcsObjective::new(data, spec)?;
    let ind = data.zero_indicator();
    let binary = data.design.z.as_ref().map(|z| (ind.as_slice(), z, spec.alpha_link));
    let expected = obj.dim() + binary.map_or(0, |b| b.1.ncols());
    if theta.len() != expected {
        return domain(format!("theta has length {} but the model has {expected} coefficients", theta.len()));
    }
    let h = numeric_hessian(|t| joint_score(t, &obj, binary), theta)
        .ok_or_else(|| Error::Domain("score undefined near theta".into()))?;
    Ok(-h)
}

/// sqrt(diag(J⁻¹)) when J is positive definite.
fn standard_errors(j: &DMatrix<f64>) -> Option<Vec<f64>> {
    let inv = j.clone().cholesky()?.inverse();
    let se: Vec<f64> = inv.diagonal().iter().map(|v| v.sqrt()).collect();
    se.iter().all(|v| v.is_finite() && *v > 0.0).then_some(se)
}

fn check_dimensions(n: usize, k: usize, what: &str) -> Result<()> {
    if k + 1 >= n {
        return Err(Error::Data(format!(
            "{n} {what} are too few for {k} regression coefficients plus lambda"
        )));
    }
    Ok(())
}

/// Above this σ|λ| the truncation point is below 0.01 and the fit sits near the
/// degenerate boundary μ → 0, σ → ∞.
pub const DEGENERATE_SIGMA_LAMBDA: f64 = 100.0;

fn assemble(
    data: &RegressionData,
    spec: &ModelSpec,
    obj: &BcsObjective<'_>,
    cont: ContinuousFit,
    stage1: Option<(BinaryGlmFit, Vec<f64>)>,
) -> Result<FittedModel> {
    let (p, q) = (obj.p(), obj.q());
    let (mu, sigma) = obj
        .predictors(&cont.theta)
        .ok_or_else(|| Error::Convergence("fit ended outside the parameter space".into()))?;
    let lambda = obj.lambda_of(&cont.theta);
    let mut warnings = Vec::new();
    let (theta_full, kappa, ll1, alpha, leverage) = match &stage1 {
        Some((b, lev)) => {
            let mut v: Vec<f64> = b.kappa.iter().copied().collect();
            v.extend(cont.theta.iter());
            (
                DVector::from_vec(v),
                Some(b.kappa.iter().copied().collect::<Vec<_>>()),
                Some(b.loglik),
                Some(b.fitted_alpha.clone()),
                Some(lev.clone()),
            )
        }
        None => (cont.theta.clone(), None, None, None, None),
    };
    let info = observed_information(&theta_full, data, spec)?;
    let std_errors = standard_errors(&info);
    if std_errors.is_none() {
        warnings.push("observed information is not positive definite; standard errors unavailable".into());
    }
    let spread = sigma.iter().fold(0.0f64, |m, s| m.max(s * lambda.abs()));
    if spread > DEGENERATE_SIGMA_LAMBDA {
        warnings.push(format!(
            "sigma*|lambda| reaches {spread:.3e}: estimates approach the boundary where the law degenerates to a truncated power law"
        ));
    }
    if cont.convergence.status != FitStatus::Converged {
        warnings.push(format!(
            "optimizer did not converge (status {:?}, gradient norm {:.3e})",
            cont.convergence.status, cont.convergence.gradient_norm
        ));
    }
    Ok(FittedModel {
        family: spec.family,
        zeta: obj.family.zeta(),
        mu_link: spec.mu_link,
        sigma_link: spec.sigma_link,
        alpha_link: stage1.as_ref().map(|(b, _)| b.link),
        beta: cont.theta.rows(0, p).iter().copied().collect(),
        tau: cont.theta.rows(p, q).iter().copied().collect(),
        kappa,
        lambda,
        lambda_fixed: !spec.lambda_mode.is_free(),
        loglik: cont.loglik + ll1.unwrap_or(0.0),
        loglik_discrete: ll1,
        loglik_continuous: cont.loglik,
        observed_information: info,
        std_errors,
        convergence: cont.convergence,
        fitted_mu: mu,
        fitted_sigma: sigma,
        fitted_alpha: alpha,
        leverage,
        names: CoefficientNames {
            kappa: data.design.z_names.clone(),
            beta: data.design.x_names.clone(),
            tau: data.design.s_names.clone(),
        },
        n: data.n(),
        n_zero: data.n_zero(),
        warnings,
    })
}

/// Fits a zero-adjusted model when the design has an α part, a BCS model otherwise.
pub fn fit(data: &RegressionData, spec: &ModelSpec) -> Result<FittedModel> {
    if data.design.z.is_some() {
        fit_zabcs(data, spec)
    } else {
        fit_bcs(data, spec)
    }
}

pub fn fit_bcs(data: &RegressionData, spec: &ModelSpec) -> Result<FittedModel> {
    spec.validate()?;
    if data.n_zero() > 0 {
        return Err(Error::Data(
            "responses contain zeros; zeros require a third formula part (alpha regressors) and a zero-adjusted fit"
                .into(),
        ));
    }
    if data.design.z.is_some() {
        return Err(Error::Data("the design has an alpha part; use the zero-adjusted fit".into()));
    }
    if let Some(ZetaMode::Select(grid)) = &spec.zeta_mode {
        return select_zeta(data, spec, grid).map(|s| s.fit);
    }
    let init = init_theta(data, spec)?;
    fit_bcs_from(data, spec, &theta_from_init(&init, spec.lambda_mode))
}

/// BCS fit at a fixed ζ from a given start (β, τ and λ when free).
pub(crate) fn fit_bcs_from(data: &RegressionData, spec: &ModelSpec, start: &DVector<f64>) -> Result<FittedModel> {
    let obj = BcsObjective::new(data, spec)?;
    check_dimensions(data.n(), obj.p() + obj.q(), "observations")?;
    if start.len() != obj.dim() {
        return domain(format!("start has length {} but the model has {} coefficients", start.len(), obj.dim()));
    }
    let cont = fit_continuous(&obj, start);
    assemble(data, spec, &obj, cont, None)
}

/// Two-stage fit: binary GLM on 𝕀(y = 0), then BCS on the positive responses.
pub fn fit_zabcs(data: &RegressionData, spec: &ModelSpec) -> Result<FittedModel> {
    spec.validate()?;
    let Some(z) = &data.design.z else {
        return Err(Error::Data(
            "zero-adjusted fitting needs a third formula part (alpha regressors)".into(),
        ));
    };
    let n_zero = data.n_zero();
    if n_zero == 0 {
        return Err(Error::Data(
            "no zero responses; drop the third formula part and fit a plain BCS model".into(),
        ));
    }
    if n_zero == data.n() {
        return Err(Error::Data("no positive responses; the continuous part cannot be fitted".into()));
    }
    if let Some(ZetaMode::Select(grid)) = &spec.zeta_mode {
        return select_zeta(data, spec, grid).map(|s| s.fit);
    }
    let obj = BcsObjective::new(data, spec)?;
    check_dimensions(data.n(), z.ncols() + obj.p() + obj.q(), "observations")?;
    check_dimensions(data.n() - n_zero, obj.p() + obj.q(), "positive responses")?;
    let ind = data.zero_indicator();
    let stage1 = binglm::fit_binary_glm(&ind, z, spec.alpha_link)?;
    let leverage = binglm::leverage_hstar(&stage1, z)?;
    let init = init_theta(data, spec)?;
    let cont = fit_continuous(&obj, &theta_from_init(&init, spec.lambda_mode));
    assemble(data, spec, &obj, cont, Some((stage1, leverage)))
}

/// Rebuilds a fitted model at given coefficients (κ, β, τ, λ order) without
/// optimizing, for example from a saved report.
pub fn fitted_at(
    data: &RegressionData,
    spec: &ModelSpec,
    theta: &DVector<f64>,
    convergence: Convergence,
) -> Result<FittedModel> {
    spec.validate()?;
    let obj = BcsObjective::new(data, spec)?;
    let m = data.design.z.as_ref().map_or(0, |z| z.ncols());
    if theta.len() != m + obj.dim() {
        return domain(format!(
            "theta has length {} but the model has {} coefficients",
            theta.len(),
            m + obj.dim()
        ));
    }
    let rest = theta.rows(m, obj.dim()).into_owned();
    let loglik = obj
        .loglik(&rest)
        .ok_or_else(|| Error::Domain("coefficients lie outside the parameter space".into()))?;
    let stage1 = match &data.design.z {
        Some(z) => {
            let kappa = theta.rows(0, m).into_owned();
            let b = binglm::binary_fit_at(kappa, &data.zero_indicator(), z, spec.alpha_link, 0);
            let lev = binglm::leverage_hstar(&b, z)?;
            Some((b, lev))
        }
        None => None,
    };
    let cont = ContinuousFit {
        theta: rest,
        loglik,
        convergence,
    };
    assemble(data, spec, &obj, cont, stage1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaRow {
    pub zeta: f64,
    /// Profile log-likelihood ℓ*(ζ).
    pub loglik: Option<f64>,
    pub upsilon: Option<f64>,
    pub status: Option<FitStatus>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ZetaSelection {
    pub zeta: f64,
    pub table: Vec<ZetaRow>,
    pub fit: FittedModel,
}

/// Fits the model at every ζ of the grid and keeps the one with the smallest Υ_ζ.
pub fn select_zeta(data: &RegressionData, spec: &ModelSpec, grid: &[f64]) -> Result<ZetaSelection> {
    if !spec.family.has_zeta() {
        return domain(format!("{} has no zeta to select", spec.family));
    }
    if grid.is_empty() {
        return domain("zeta grid is empty");
    }
    let results: Vec<(ZetaRow, Option<FittedModel>)> = grid
        .par_iter()
        .map(|&zeta| {
            let fixed = spec.at_zeta(zeta);
            let outcome = fixed.validate().and_then(|_| fit(data, &fixed)).and_then(|f| {
                let u = diagnostics::upsilon(&f, data)?;
                Ok((f, u))
            });
            match outcome {
                Ok((f, u)) => {
                    let row = ZetaRow {
                        zeta,
                        loglik: Some(f.loglik),
                        upsilon: Some(u),
                        status: Some(f.convergence.status),
                        error: None,
                    };
                    (row, Some(f))
                }
                Err(e) => (
                    ZetaRow {
                        zeta,
                        loglik: None,
                        upsilon: None,
                        status: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();
    let mut best: Option<usize> = None;
    for (k, (row, f)) in results.iter().enumerate() {
        let (Some(u), Some(f)) = (row.upsilon, f) else { continue };
        if f.convergence.status != FitStatus::Converged {
            continue;
        }
        best = match best {
            None => Some(k),
            Some(b) => {
                let ub = results[b].0.upsilon.unwrap_or(f64::INFINITY);
                if u < ub || (u == ub && row.zeta < results[b].0.zeta) {
                    Some(k)
                } else {
                    Some(b)
                }
            }
        };
    }
    let Some(b) = best else {
        let reasons: Vec<String> = results
            .iter()
            .map(|(r, _)| format!("zeta={}: {}", r.zeta, r.error.as_deref().unwrap_or("not converged")))
            .collect();
        return Err(Error::Convergence(format!(
            "no zeta in the grid gave a converged fit ({})",
            reasons.join("; ")
        )));
    };
    let zeta = results[b].0.zeta;
    let mut table = Vec::with_capacity(results.len());
    let mut chosen = None;
    for (k, (row, f)) in results.into_iter().enumerate() {
        if k == b {
            chosen = f;
        }
        table.push(row);
    }
    Ok(ZetaSelection {
        zeta,
        table,
        fit: chosen.expect("selected fit exists"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub z_value: Option<f64>,
    pub p_value: Option<f64>,
}

/// Two-sided p-value of a standard normal statistic.
pub(crate) fn two_sided_p(z: f64) -> f64 {
    2.0 * specfun::phi(-z.abs())
}

/// Estimate, SE, Wald z and two-sided p-value per coefficient.
pub fn wald_inference(fit: &FittedModel) -> Vec<CoefficientRow> {
    let theta = fit.theta();
    fit.parameter_names()
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let estimate = theta[k];
            let se = fit.std_errors.as_ref().map(|s| s[k]);
            let z = se.map(|s| estimate / s);
            CoefficientRow {
                name,
                estimate,
                std_error: se,
                z_value: z,
                p_value: z.map(two_sided_p),
            }
        })
        .collect()
}
