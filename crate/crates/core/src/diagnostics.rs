//! Residuals, simulated envelopes, local influence and goodness-of-fit statistics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcs::Bcs;
use crate::binglm;
use crate::error::{domain, Error, Result};
use crate::regress::fit::fit_bcs_from;
use crate::regress::likelihood::BcsObjective;
use crate::regress::{DesignMatrices, FitStatus, FittedModel, RegressionData};
use crate::specfun::{self, OrderStatMode};

/// Residuals are clamped to ±this bound when the fitted CDF rounds to 0 or 1.
pub const RESIDUAL_CLAMP: f64 = 8.2;

/// Default number of randomized-residual realizations.
pub const DEFAULT_REALIZATIONS: usize = 4;

/// Fits with at most this many observations get the full curvature matrix B.
pub const MATERIALIZE_B_MAX_N: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    Quantile,
    RandomizedQuantile,
    Pearson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSet {
    pub kind: ResidualKind,
    /// Observation index of each residual.
    pub index: Vec<usize>,
    pub values: Vec<f64>,
    /// 1-based realization number for randomized residuals.
    pub realization: Option<usize>,
    /// Observations whose residual hit the ±8.2 clamp.
    pub clamped: Vec<usize>,
    /// Observations for which the residual is undefined.
    pub missing: Vec<usize>,
}

/// Φ⁻¹ of a probability given through its lower and upper tails, clamped to ±8.2.
/// Returns the residual and whether it was clamped.
fn normal_score(lower: f64, upper: f64) -> (f64, bool) {
    let r = if lower <= 0.5 {
        if lower <= 0.0 {
            return (-RESIDUAL_CLAMP, true);
        }
        specfun::phi_inv(lower)
    } else {
        if upper <= 0.0 {
            return (RESIDUAL_CLAMP, true);
        }
        -specfun::phi_inv(upper)
    };
    if r.abs() > RESIDUAL_CLAMP {
        (r.signum() * RESIDUAL_CLAMP, true)
    } else {
        (r, false)
    }
}

/// Φ⁻¹(F) with the ±8.2 clamp for F ∈ {0, 1}.
pub fn quantile_residual_from_cdf(f: f64) -> (f64, bool) {
    normal_score(f, 1.0 - f)
}

fn continuous_law(fit: &FittedModel, i: usize) -> Bcs {
    Bcs::new(fit.bcs_params(i), fit.dgf())
}

fn check_data(fit: &FittedModel, data: &RegressionData) -> Result<()> {
    if fit.n != data.n() || fit.n_zero != data.n_zero() {
        return Err(Error::Data(format!(
            "fit was computed on {} rows ({} zeros) but the data has {} rows ({} zeros)",
            fit.n,
            fit.n_zero,
            data.n(),
            data.n_zero()
        )));
    }
    Ok(())
}

/// rᵢ = Φ⁻¹(F(yᵢ; μ̂ᵢ, σ̂ᵢ, λ̂)) over the positive responses.
pub fn quantile_residuals(fit: &FittedModel, data: &RegressionData) -> Result<ResidualSet> {
    check_data(fit, data)?;
    let mut set = ResidualSet {
        kind: ResidualKind::Quantile,
        index: Vec::new(),
        values: Vec::new(),
        realization: None,
        clamped: Vec::new(),
        missing: Vec::new(),
    };
    for (i, &y) in data.y.iter().enumerate() {
        if y <= 0.0 {
            continue;
        }
        let law = continuous_law(fit, i);
        let (r, c) = normal_score(law.cdf(y), law.sf(y));
        set.index.push(i);
        set.values.push(r);
        if c {
            set.clamped.push(i);
        }
    }
    Ok(set)
}

/// Randomized quantile residuals of a zero-adjusted fit, one set per realization.
pub fn randomized_quantile_residuals(
    fit: &FittedModel,
    data: &RegressionData,
    realizations: usize,
    seed: u64,
) -> Result<Vec<ResidualSet>> {
    check_data(fit, data)?;
    if realizations < 1 {
        return domain("at least one realization is required");
    }
    let Some(alpha) = &fit.fitted_alpha else {
        return domain("randomized quantile residuals need a zero-adjusted fit");
    };
    // the positive part does not depend on the realization
    let positive: Vec<Option<(f64, bool)>> = data
        .y
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            (y > 0.0).then(|| {
                let law = continuous_law(fit, i);
                let a = alpha[i];
                normal_score(a + (1.0 - a) * law.cdf(y), (1.0 - a) * law.sf(y))
            })
        })
        .collect();
    let mut out = Vec::with_capacity(realizations);
    for k in 0..realizations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut set = ResidualSet {
            kind: ResidualKind::RandomizedQuantile,
            index: (0..data.n()).collect(),
            values: Vec::with_capacity(data.n()),
            realization: Some(k + 1),
            clamped: Vec::new(),
            missing: Vec::new(),
        };
        for i in 0..data.n() {
            let (r, c) = match positive[i] {
                Some(v) => v,
                None => {
                    // U uniform on (0, α̂ᵢ]
                    let u = alpha[i] * (1.0 - rng.random::<f64>());
                    normal_score(u, 1.0 - u)
                }
            };
            set.values.push(r);
            if c {
                set.clamped.push(i);
            }
        }
        out.push(set);
    }
    Ok(out)
}

/// Standardized Pearson residuals of the zero indicator.
pub fn pearson_residuals(fit: &FittedModel, data: &RegressionData) -> Result<ResidualSet> {
    check_data(fit, data)?;
    let (Some(alpha), Some(lev)) = (&fit.fitted_alpha, &fit.leverage) else {
        return domain("Pearson residuals need a zero-adjusted fit");
    };
    let mut set = ResidualSet {
        kind: ResidualKind::Pearson,
        index: Vec::new(),
        values: Vec::new(),
        realization: None,
        clamped: Vec::new(),
        missing: Vec::new(),
    };
    for (i, &y) in data.y.iter().enumerate() {
        let ind = if y == 0.0 { 1.0 } else { 0.0 };
        match pearson_value(ind, alpha[i], lev[i]) {
            Some(r) => {
                set.index.push(i);
                set.values.push(r);
            }
            None => set.missing.push(i),
        }
    }
    Ok(set)
}

/// (𝕀 − α)/√(α(1 − α)(1 − h)); `None` when h = 1.
pub fn pearson_value(indicator: f64, alpha: f64, h: f64) -> Option<f64> {
    let denom = alpha * (1.0 - alpha) * (1.0 - h);
    (denom > 0.0).then(|| (indicator - alpha) / denom.sqrt())
}

/// Mean absolute gap between sorted residuals and expected normal order statistics.
pub fn upsilon_from_residuals(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return domain("no residuals");
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scores = specfun::normal_scores(sorted.len(), OrderStatMode::Blom)?;
    Ok(sorted.iter().zip(&scores).map(|(r, v)| (r - v).abs()).sum::<f64>() / sorted.len() as f64)
}

/// Υ_ζ on the continuous part (positive responses only).
pub fn upsilon(fit: &FittedModel, data: &RegressionData) -> Result<f64> {
    upsilon_from_residuals(&quantile_residuals(fit, data)?.values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Observed ordered quantile residuals (continuous part).
    pub observed: Vec<f64>,
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub replicates: usize,
    pub failed_replicates: usize,
    pub outside: usize,
    pub refit: bool,
}

impl Envelope {
    pub fn fraction_outside(&self) -> f64 {
        self.outside as f64 / self.observed.len() as f64
    }
}

/// Positive rows of the data as a plain BCS dataset.
fn positive_part(data: &RegressionData) -> Result<(RegressionData, Vec<usize>)> {
    let idx: Vec<usize> = (0..data.n()).filter(|&i| data.y[i] > 0.0).collect();
    let d = &data.design;
    let design = DesignMatrices::new(
        d.x.select_rows(&idx),
        d.x_names.clone(),
        d.s.select_rows(&idx),
        d.s_names.clone(),
        None,
    )?;
    let y = idx.iter().map(|&i| data.y[i]).collect();
    Ok((RegressionData::new(y, design)?, idx))
}

/// Pointwise envelope of ordered quantile residuals from `replicates` datasets
/// simulated at the fitted values. With `refit`, each replicate is refitted
/// (warm-started at the estimate) before its residuals are computed.
pub fn simulated_envelope(
    fit: &FittedModel,
    data: &RegressionData,
    replicates: usize,
    level: f64,
    seed: u64,
    refit: bool,
) -> Result<Envelope> {
    check_data(fit, data)?;
    if replicates < 19 {
        return domain(format!("an envelope needs at least 19 replicates, got {replicates}"));
    }
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("envelope level must lie in (0,1), got {level}"));
    }
    let observed = {
        let mut v = quantile_residuals(fit, data)?.values;
        v.sort_by(f64::total_cmp);
        v
    };
    let (pos, rows) = positive_part(data)?;
    let mut spec = fit.spec();
    spec.alpha_link = Default::default();
    let start = {
        let k = fit.kappa.as_ref().map_or(0, Vec::len);
        let t = fit.theta();
        t.rows(k, t.len() - k).into_owned()
    };
    let laws: Vec<Bcs> = rows.iter().map(|&i| continuous_law(fit, i)).collect();

    let sims: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let y: Vec<f64> = laws.iter().map(|l| l.sample_with(1, &mut rng)[0]).collect();
            let mut resid: Vec<f64> = if refit {
                let sim = RegressionData::new(y.clone(), pos.design.clone()).ok()?;
                let f = fit_bcs_from(&sim, &spec, &start).ok()?;
                if f.convergence.status != FitStatus::Converged {
                    return None;
                }
                quantile_residuals(&f, &sim).ok()?.values
            } else {
                y.iter()
                    .zip(&laws)
                    .map(|(&v, l)| normal_score(l.cdf(v), l.sf(v)).0)
                    .collect()
            };
            resid.sort_by(f64::total_cmp);
            Some(resid)
        })
        .collect();
    let ok: Vec<Vec<f64>> = sims.iter().flatten().cloned().collect();
    let failed = replicates - ok.len();
    if failed * 10 > replicates {
        return Err(Error::Convergence(format!(
            "{failed} of {replicates} envelope replicates failed to refit"
        )));
    }
    let b = ok.len();
    let k = (((1.0 - level) / 2.0 * (b + 1) as f64).round() as usize).clamp(1, b);
    let m = observed.len();
    let mut lower = Vec::with_capacity(m);
    let mut median = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    let mut column = vec![0.0; b];
    for j in 0..m {
        for (c, r) in column.iter_mut().zip(&ok) {
            *c = r[j];
        }
        column.sort_by(f64::total_cmp);
        lower.push(column[k - 1]);
        upper.push(column[b - k]);
        median.push(if b % 2 == 1 {
            column[b / 2]
        } else {
            0.5 * (column[b / 2 - 1] + column[b / 2])
        });
    }
    let outside = observed
        .iter()
        .zip(lower.iter().zip(&upper))
        .filter(|(o, (l, u))| *o < *l || *o > *u)
        .count();
    Ok(Envelope {
        observed,
        lower,
        median,
        upper,
        level,
        replicates,
        failed_replicates: failed,
        outside,
        refit,
    })
}

/// Δ: per-observation score contributions at θ̂ (rows κ, β, τ, λ; one column per observation).
pub fn caseweight_delta(fit: &FittedModel, data: &RegressionData) -> Result<DMatrix<f64>> {
    check_data(fit, data)?;
    let spec = fit.spec();
    let obj = BcsObjective::new(data, &spec)?;
    let theta = fit.theta();
    let m = fit.kappa.as_ref().map_or(0, Vec::len);
    let cont = theta.rows(m, theta.len() - m).into_owned();
    let c = obj
        .contributions(&cont)
        .ok_or_else(|| Error::Domain("score undefined at the estimate".into()))?;
    if m == 0 {
        return Ok(c);
    }
    let (Some(z), Some(link)) = (&data.design.z, fit.alpha_link) else {
        return domain("zero-adjusted fit but the data has no alpha design");
    };
    let kappa = theta.rows(0, m).into_owned();
    let k = binglm::score_contributions(&kappa, &data.zero_indicator(), z, link);
    let mut out = DMatrix::zeros(theta.len(), data.n());
    out.view_mut((0, 0), (m, data.n())).copy_from(&k);
    out.view_mut((m, 0), (c.nrows(), data.n())).copy_from(&c);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceResult {
    /// Unit-norm direction of largest curvature; largest-magnitude entry positive.
    pub dmax: Vec<f64>,
    /// Curvature at dmax, 2·max|eigenvalue(B)|.
    pub cdmax: f64,
    /// Total local influence Cᵢ = 2|Δᵢᵀ J⁻¹ Δᵢ|.
    pub ci: Vec<f64>,
    /// Nonzero eigenvalues of B (at most the parameter count), decreasing in magnitude.
    pub eigenvalues: Vec<f64>,
    /// B = −Δᵀ J⁻¹ Δ, kept only for small n.
    pub b: Option<DMatrix<f64>>,
}

/// Normal curvature 2|dᵀ B d| of a unit direction.
pub fn curvature(delta: &DMatrix<f64>, jinv: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    let v = delta * d;
    2.0 * v.dot(&(jinv * &v)).abs()
}

fn inverse_information(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = j.clone().cholesky() {
        return Ok(ch.inverse());
    }
    j.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("observed information is singular".into()))
}

/// Case-weight local influence.
pub fn local_influence(fit: &FittedModel, data: &RegressionData) -> Result<InfluenceResult> {
    let delta = caseweight_delta(fit, data)?;
    let jinv = inverse_information(&fit.observed_information)?;
    local_influence_from(&delta, &jinv, data.n() <= MATERIALIZE_B_MAX_N)
}

/// Influence measures from Δ and J⁻¹ without forming the n×n matrix B.
pub fn local_influence_from(delta: &DMatrix<f64>, jinv: &DMatrix<f64>, materialize: bool) -> Result<InfluenceResult> {
    let n = delta.ncols();
    // Δᵀ = QR, so B = Q (−R J⁻¹ Rᵀ) Qᵀ shares its nonzero spectrum with the small matrix
    let qr = delta.transpose().qr();
    let (q, r) = (qr.q(), qr.r());
    let small = -(&r * jinv * r.transpose());
    let small = (&small + small.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(small, 1e-14, 10_000)
        .ok_or_else(|| Error::Singular("eigen-decomposition of the curvature matrix failed".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let top = order[0];
    let mut dmax = &q * eig.eigenvectors.column(top);
    let norm = dmax.norm();
    dmax /= norm;
    let imax = dmax.iamax();
    if dmax[imax] < 0.0 {
        dmax = -dmax;
    }
    let jd = jinv * delta;
    let ci: Vec<f64> = (0..n)
        .map(|i| 2.0 * delta.column(i).dot(&jd.column(i)).abs())
        .collect();
    let b = materialize.then(|| {
        let m = -(delta.transpose() * &jd);
        (&m + m.transpose()) * 0.5
    });
    Ok(InfluenceResult {
        dmax: dmax.iter().copied().collect(),
        cdmax: 2.0 * eig.eigenvalues[top].abs(),
        ci,
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub label: String,
    pub loglik: f64,
    /// Coefficient count (κ, β, τ and λ when free), ζ excluded.
    pub n_params: usize,
    pub aic: f64,
    /// AIC counting a grid-selected ζ as one more parameter.
    pub aic_with_zeta: f64,
    pub delta_m: f64,
    pub upsilon: f64,
}

pub fn aic(loglik: f64, n_params: usize) -> f64 {
    -2.0 * loglik + 2.0 * n_params as f64
}

/// AIC, Δ_m (AIC minus the smallest AIC in the set) and Υ for fits on the same data.
pub fn gof_report(fits: &[FittedModel], data: &RegressionData) -> Result<Vec<GofReport>> {
    let mut out = Vec::with_capacity(fits.len());
    for f in fits {
        check_data(f, data)?;
        let r = f.n_params();
        let a = aic(f.loglik, r);
        out.push(GofReport {
            label: f.dgf().to_string(),
            loglik: f.loglik,
            n_params: r,
            aic: a,
            aic_with_zeta: a + if f.zeta.is_some() { 2.0 } else { 0.0 },
            delta_m: 0.0,
            upsilon: upsilon(f, data)?,
        });
    }
    let best = out.iter().map(|g| g.aic).fold(f64::INFINITY, f64::min);
    for g in &mut out {
        g.delta_m = g.aic - best;
    }
    Ok(out)
}

/// One-sample Kolmogorov-Smirnov test against N(0, 1): statistic and asymptotic p-value
/// with the Stephens small-sample correction.
pub fn ks_test_normal(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = specfun::phi(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

/// P(K > x) for the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}
