//! Data generation from known parameters and Monte Carlo recovery studies.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Column, Dataset};
use crate::bcs::{open_unit, Bcs, BcsParams};
use crate::dgf::{DgfFamily, FamilyTag};
use crate::error::{domain, Error, Result};
use crate::regress::{self, BinaryLink, DesignMatrices, FitStatus, LambdaMode, Link, ModelSpec, RegressionData};
use crate::specfun;
use crate::zabcs::{Zabcs, ZabcsParams};

/// Known coefficients of a BCS or ZABCS regression, used as a data generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub family: FamilyTag,
    pub zeta: Option<f64>,
    pub mu_link: Link,
    pub sigma_link: Link,
    pub alpha_link: BinaryLink,
    pub kappa: Option<Vec<f64>>,
    pub beta: Vec<f64>,
    pub tau: Vec<f64>,
    pub lambda: f64,
}

impl Truth {
    pub fn spec(&self) -> ModelSpec {
        let mut s = ModelSpec::new(self.family).with_links(self.mu_link, self.sigma_link, self.alpha_link);
        if let Some(z) = self.zeta {
            s = s.with_zeta(z);
        }
        s
    }

    /// Coefficients in the fitted-model order κ, β, τ, λ.
    pub fn theta(&self) -> Vec<f64> {
        let mut v = self.kappa.clone().unwrap_or_default();
        v.extend(&self.beta);
        v.extend(&self.tau);
        v.push(self.lambda);
        v
    }

    pub fn validate(&self) -> Result<DgfFamily> {
        let dgf = DgfFamily::new(self.family, self.zeta)?;
        let finite = self.theta().iter().all(|v| v.is_finite());
        if !finite || self.beta.is_empty() || self.tau.is_empty() {
            return domain("generator coefficients must be finite and the mu and sigma parts non-empty");
        }
        if self.kappa.as_ref().is_some_and(Vec::is_empty) {
            return domain("the alpha part needs at least one coefficient");
        }
        Ok(dgf)
    }

    /// One response per design row.
    pub fn simulate<R: Rng>(&self, design: &DesignMatrices, rng: &mut R) -> Result<Vec<f64>> {
        let dgf = self.validate()?;
        let check = |m: &DMatrix<f64>, k: usize, part: &str| {
            if m.ncols() != k {
                return domain(format!("{part} part has {} columns but {k} coefficients", m.ncols()));
            }
            Ok(())
        };
        check(&design.x, self.beta.len(), "mu")?;
        check(&design.s, self.tau.len(), "sigma")?;
        let alpha_part = match (&self.kappa, &design.z) {
            (Some(k), Some(z)) => {
                check(z, k.len(), "alpha")?;
                Some((z, k))
            }
            (None, None) => None,
            _ => return domain("alpha coefficients and the alpha design must be given together"),
        };
        let lin = |m: &DMatrix<f64>, c: &[f64], i: usize| (0..c.len()).map(|j| m[(i, j)] * c[j]).sum::<f64>();
        let mut y = Vec::with_capacity(design.nrows());
        for i in 0..design.nrows() {
            let eta1 = lin(&design.x, &self.beta, i);
            let eta2 = lin(&design.s, &self.tau, i);
            let (Some(mu), Some(sigma)) = (self.mu_link.inverse(eta1), self.sigma_link.inverse(eta2)) else {
                return domain(format!("row {i}: the generator gives an invalid mu or sigma"));
            };
            let params = BcsParams::new(mu, sigma, self.lambda)?;
            let v = match alpha_part {
                Some((z, k)) => {
                    let alpha = self.alpha_link.inverse(lin(z, k, i));
                    Zabcs::new(ZabcsParams::new(alpha, params)?, dgf).sample_with(1, rng)[0]
                }
                None => Bcs::new(params, dgf).sample_with(1, rng)[0],
            };
            y.push(v);
        }
        Ok(y)
    }
}

/// Standard normal draw by inversion.
pub(crate) fn normal<R: Rng>(rng: &mut R) -> f64 {
    specfun::phi_inv(open_unit(rng))
}

/// Column counts (1 = intercept only, 2 = intercept and x) for a design on a
/// single covariate x ~ Uniform(−1, 1) shared by all parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformDesign {
    pub mu: usize,
    pub sigma: usize,
    pub alpha: Option<usize>,
}

impl UniformDesign {
    pub fn of(truth: &Truth) -> Result<Self> {
        let d = Self {
            mu: truth.beta.len(),
            sigma: truth.tau.len(),
            alpha: truth.kappa.as_ref().map(Vec::len),
        };
        let ok = |k: usize| (1..=2).contains(&k);
        if !(ok(d.mu) && ok(d.sigma) && d.alpha.is_none_or(ok)) {
            return domain("each coefficient list needs 1 (intercept) or 2 (intercept, x) values");
        }
        Ok(d)
    }

    pub fn uses_x(&self) -> bool {
        self.mu == 2 || self.sigma == 2 || self.alpha == Some(2)
    }

    /// The covariate column followed by the design matrices.
    pub fn draw<R: Rng>(&self, n: usize, rng: &mut R) -> Result<(Vec<f64>, DesignMatrices)> {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let part = |k: usize| {
            let m = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { x[i] });
            let names = ["(Intercept)", "x"][..k].iter().map(|s| s.to_string()).collect::<Vec<_>>();
            (m, names)
        };
        let (xm, xn) = part(self.mu);
        let (sm, sn) = part(self.sigma);
        let design = DesignMatrices::new(xm, xn, sm, sn, self.alpha.map(part))?;
        Ok((x, design))
    }
}

/// The first `n` rows of a design.
pub fn head_rows(d: &DesignMatrices, n: usize) -> Result<DesignMatrices> {
    let take = |m: &DMatrix<f64>| m.rows(0, n).into_owned();
    DesignMatrices::new(
        take(&d.x),
        d.x_names.clone(),
        take(&d.s),
        d.s_names.clone(),
        d.z.as_ref().map(|z| (take(z), d.z_names.clone())),
    )
}

/// Design rows reused cyclically to reach `n` rows.
pub fn cycle_rows(d: &DesignMatrices, n: usize) -> Result<DesignMatrices> {
    let rows: Vec<usize> = (0..n).map(|i| i % d.nrows()).collect();
    DesignMatrices::new(
        d.x.select_rows(&rows),
        d.x_names.clone(),
        d.s.select_rows(&rows),
        d.s_names.clone(),
        d.z.as_ref().map(|z| (z.select_rows(&rows), d.z_names.clone())),
    )
}

/// Monte Carlo summary of one coefficient at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub parameter: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Share of Wald intervals covering the truth, among fits with standard errors.
    pub coverage: Option<f64>,
    pub fits: usize,
    pub failed: usize,
}

struct Draw {
    theta: Vec<f64>,
    se: Option<Vec<f64>>,
}

/// Parameter names of a replicate's design (None if simulation failed) and its
/// converged estimates per sample size.
type Replicate = (Option<Vec<String>>, Vec<Option<Draw>>);

/// Recovery study with nested samples: replicate `r` draws one dataset of the
/// largest size on ChaCha stream `r` and every smaller size uses its leading rows.
pub fn monte_carlo_study<D>(
    truth: &Truth,
    make_design: D,
    sizes: &[usize],
    replicates: usize,
    seed: u64,
    level: f64,
) -> Result<Vec<StudyRow>>
where
    D: Fn(usize, &mut ChaCha8Rng) -> Result<DesignMatrices> + Sync,
{
    truth.validate()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Data("sample sizes must be positive".into()));
    }
    if replicates == 0 {
        return Err(Error::Data("a study needs at least one replicate".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("coverage level must lie in (0,1), got {level}"));
    }
    let n_max = *sizes.iter().max().expect("non-empty");
    let spec = truth.spec().with_lambda(LambdaMode::Free);
    let per_rep: Vec<Replicate> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let full = make_design(n_max, &mut rng).and_then(|d| Ok((truth.simulate(&d, &mut rng)?, d)));
            let Ok((y, design)) = full else {
                return (None, sizes.iter().map(|_| None).collect());
            };
            let draws = sizes
                .iter()
                .map(|&n| {
                    let d = head_rows(&design, n).ok()?;
                    let data = RegressionData::new(y[..n].to_vec(), d).ok()?;
                    let f = regress::fit(&data, &spec).ok()?;
                    (f.convergence.status == FitStatus::Converged).then(|| Draw {
                        theta: f.theta().iter().copied().collect(),
                        se: f.std_errors.clone(),
                    })
                })
                .collect();
            (Some(design_parameter_names(&design)), draws)
        })
        .collect();

    let truth_theta = truth.theta();
    let names = per_rep
        .iter()
        .find_map(|r| r.0.clone())
        .ok_or_else(|| Error::Data("no replicate produced a valid dataset".into()))?;
    let zcrit = specfun::phi_inv(0.5 + level / 2.0);
    let mut rows = Vec::new();
    for (s, &n) in sizes.iter().enumerate() {
        let ok: Vec<&Draw> = per_rep.iter().filter_map(|r| r.1[s].as_ref()).collect();
        for (k, name) in names.iter().enumerate() {
            let t = truth_theta[k];
            let m = ok.len() as f64;
            let mean = ok.iter().map(|d| d.theta[k]).sum::<f64>() / m;
            let mse = ok.iter().map(|d| (d.theta[k] - t).powi(2)).sum::<f64>() / m;
            let with_se: Vec<(f64, f64)> = ok
                .iter()
                .filter_map(|d| d.se.as_ref().map(|se| (d.theta[k], se[k])))
                .collect();
            let coverage = (!with_se.is_empty()).then(|| {
                with_se.iter().filter(|(e, se)| (e - t).abs() <= zcrit * se).count() as f64 / with_se.len() as f64
            });
            rows.push(StudyRow {
                n,
                parameter: name.clone(),
                truth: t,
                mean,
                bias: mean - t,
                rmse: mse.sqrt(),
                coverage,
                fits: ok.len(),
                failed: replicates - ok.len(),
            });
        }
    }
    Ok(rows)
}

/// Coefficient names in the fitted-model order for a design.
pub fn design_parameter_names(d: &DesignMatrices) -> Vec<String> {
    let mut v: Vec<String> = if d.z.is_some() {
        d.z_names.iter().map(|n| format!("alpha:{n}")).collect()
    } else {
        Vec::new()
    };
    v.extend(d.x_names.iter().map(|n| format!("mu:{n}")));
    v.extend(d.s_names.iter().map(|n| format!("sigma:{n}")));
    v.push("lambda".into());
    v
}

/// Number of rows of the bundled dataset.
pub const BUNDLED_ROWS: usize = 4232;

/// Formula whose coefficients generate the bundled responses.
pub const BUNDLED_FORMULA: &str = "y ~ age | 1 | age";

/// Generator of the bundled dataset: a ZABCLOII regression with
/// logit α = 3.2 − 0.012·age, log μ = 4 + 0.01·age, log σ = log 0.8 and λ = 0.3.
pub fn bundled_truth() -> Truth {
    Truth {
        family: FamilyTag::BCLOII,
        zeta: None,
        mu_link: Link::Log,
        sigma_link: Link::Log,
        alpha_link: BinaryLink::Logit,
        kappa: Some(vec![3.2, -0.012]),
        beta: vec![4.0, 0.01],
        tau: vec![0.8f64.ln()],
        lambda: 0.3,
    }
}

/// Synthetic household-expenditure style data: covariates age, sex, years_sc,
/// residence, income and children, and a semicontinuous response y with about
/// 93% zeros drawn from [`bundled_truth`] (only age enters the true model).
pub fn generate_bundled_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = BUNDLED_ROWS;
    let truth = bundled_truth();
    let dgf = truth.validate().expect("bundled truth is valid");
    let children_cdf = [0.35, 0.62, 0.84, 0.94, 0.98, 1.0];
    let mut cols: [Vec<f64>; 5] = Default::default();
    let (mut sex, mut residence) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let age = rng.random_range(18..=85) as f64;
        let s = if rng.random_bool(0.6) { "male" } else { "female" };
        let years = (8.0 + 4.0 * normal(&mut rng)).round().clamp(0.0, 16.0);
        let r = if rng.random_bool(0.8) { "urban" } else { "rural" };
        let income = ((7.5 + 0.8 * normal(&mut rng)).exp() * 100.0).round().max(1.0) / 100.0;
        let u: f64 = rng.random();
        let children = children_cdf.iter().position(|&c| u < c).unwrap_or(5) as f64;
        let alpha = truth.alpha_link.inverse(3.2 - 0.012 * age);
        let mu = (4.0 + 0.01 * age).exp();
        let params = BcsParams::new(mu, 0.8, truth.lambda).expect("valid parameters");
        let law = Zabcs::new(ZabcsParams::new(alpha, params).expect("valid alpha"), dgf);
        let y = law.sample_with(1, &mut rng)[0];
        for (c, v) in cols.iter_mut().zip([age, years, income, children, y]) {
            c.push(v);
        }
        sex.push(s.to_string());
        residence.push(r.to_string());
    }
    let [age, years, income, children, y] = cols;
    Dataset {
        names: ["age", "sex", "years_sc", "residence", "income", "children", "y"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        columns: vec![
            Column::Numeric(age),
            Column::Categorical(sex),
            Column::Numeric(years),
            Column::Categorical(residence),
            Column::Numeric(income),
            Column::Numeric(children),
            Column::Numeric(y),
        ],
    }
}
