//! Maximum-likelihood fitting of BCS and ZABCS regression models.

pub mod fit;
pub mod likelihood;
pub mod link;
pub mod optim;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bcs::BcsParams;
use crate::dgf::{DgfFamily, FamilyTag};
use crate::error::{domain, Error, Result};

pub use fit::{
    fit, fit_bcs, fit_zabcs, fitted_at, init_theta, observed_information, select_zeta, wald_inference, CoefficientRow,
    InitialValues, ZetaRow, ZetaSelection,
};
pub use likelihood::{loglik_bcs, score_bcs, score_workspace, ScoreWorkspace};
pub use link::{BinaryLink, Link};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum LambdaMode {
    Free,
    Fixed(f64),
}

impl LambdaMode {
    pub fn is_free(self) -> bool {
        matches!(self, LambdaMode::Free)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum ZetaMode {
    Fixed(f64),
    Select(Vec<f64>),
}

/// Family, links and the λ/ζ handling of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub formula: Option<String>,
    pub family: FamilyTag,
    /// Required exactly when the family has an extra parameter.
    pub zeta_mode: Option<ZetaMode>,
    pub mu_link: Link,
    pub sigma_link: Link,
    pub alpha_link: BinaryLink,
    pub lambda_mode: LambdaMode,
}

impl ModelSpec {
    pub fn new(family: FamilyTag) -> Self {
        Self {
            formula: None,
            family,
            zeta_mode: None,
            mu_link: Link::Log,
            sigma_link: Link::Log,
            alpha_link: BinaryLink::Logit,
            lambda_mode: LambdaMode::Free,
        }
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta_mode = Some(ZetaMode::Fixed(zeta));
        self
    }

    pub fn with_zeta_grid(mut self, grid: Vec<f64>) -> Self {
        self.zeta_mode = Some(ZetaMode::Select(grid));
        self
    }

    pub fn with_lambda(mut self, mode: LambdaMode) -> Self {
        self.lambda_mode = mode;
        self
    }

    pub fn with_links(mut self, mu: Link, sigma: Link, alpha: BinaryLink) -> Self {
        self.mu_link = mu;
        self.sigma_link = sigma;
        self.alpha_link = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let LambdaMode::Fixed(l) = self.lambda_mode {
            if !l.is_finite() {
                return domain(format!("fixed lambda must be finite, got {l}"));
            }
        }
        match (&self.zeta_mode, self.family.has_zeta()) {
            (None, true) => domain(format!("{} requires zeta (fixed value or grid)", self.family)),
            (Some(_), false) => domain(format!("{} takes no zeta", self.family)),
            (Some(ZetaMode::Fixed(z)), true) => self.family.check_zeta(*z),
            (Some(ZetaMode::Select(g)), true) => {
                if g.is_empty() {
                    return domain("zeta grid is empty");
                }
                Ok(())
            }
            (None, false) => Ok(()),
        }
    }

    /// The generator at a fixed ζ; errors when ζ is still to be selected.
    pub fn dgf(&self) -> Result<DgfFamily> {
        match &self.zeta_mode {
            None => DgfFamily::new(self.family, None),
            Some(ZetaMode::Fixed(z)) => DgfFamily::new(self.family, Some(*z)),
            Some(ZetaMode::Select(_)) => domain("zeta is set to grid selection; fix it first"),
        }
    }

    pub fn at_zeta(&self, zeta: f64) -> Self {
        let mut s = self.clone();
        s.zeta_mode = Some(ZetaMode::Fixed(zeta));
        s
    }
}

/// Regressor matrices for μ (X), σ (S) and, in zero-adjusted models, α (Z).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub x: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub z: Option<DMatrix<f64>>,
    pub x_names: Vec<String>,
    pub s_names: Vec<String>,
    pub z_names: Vec<String>,
}

impl DesignMatrices {
    pub fn new(
        x: DMatrix<f64>,
        x_names: Vec<String>,
        s: DMatrix<f64>,
        s_names: Vec<String>,
        z: Option<(DMatrix<f64>, Vec<String>)>,
    ) -> Result<Self> {
        let n = x.nrows();
        let (z, z_names) = match z {
            Some((m, names)) => (Some(m), names),
            None => (None, Vec::new()),
        };
        if s.nrows() != n || z.as_ref().is_some_and(|m| m.nrows() != n) {
            return Err(Error::Data("design matrices have different row counts".into()));
        }
        if x.ncols() != x_names.len()
            || s.ncols() != s_names.len()
            || z.as_ref().is_some_and(|m| m.ncols() != z_names.len())
        {
            return Err(Error::Data("column names do not match the design matrices".into()));
        }
        if x.ncols() == 0 || s.ncols() == 0 || z.as_ref().is_some_and(|m| m.ncols() == 0) {
            return Err(Error::Data("each model part needs at least one regressor".into()));
        }
        let all_finite = x.iter().chain(s.iter()).all(|v| v.is_finite())
            && z.as_ref().is_none_or(|m| m.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(Error::Data("design matrices contain non-finite values".into()));
        }
        for (m, names, part) in [(&x, &x_names, "mu"), (&s, &s_names, "sigma")] {
            check_rank(m, names, part)?;
        }
        if let Some(m) = &z {
            check_rank(m, &z_names, "alpha")?;
        }
        Ok(Self {
            x,
            s,
            z,
            x_names,
            s_names,
            z_names,
        })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }
}

/// Columns that are (numerically) linear combinations of earlier columns.
pub fn dependent_columns(m: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        let col: DVector<f64> = m.column(j).into_owned();
        let norm0 = col.norm();
        let mut r = col;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        let norm = r.norm();
        if norm0 == 0.0 || norm <= 1e-9 * norm0 {
            out.push(j);
        } else {
            basis.push(r / norm);
        }
    }
    out
}

fn check_rank(m: &DMatrix<f64>, names: &[String], part: &str) -> Result<()> {
    let dep = dependent_columns(m);
    if dep.is_empty() {
        return Ok(());
    }
    Err(Error::RankDeficient {
        columns: dep.into_iter().map(|j| format!("{part}:{}", names[j])).collect(),
    })
}

/// Responses with their design.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub y: Vec<f64>,
    pub design: DesignMatrices,
}

impl RegressionData {
    pub fn new(y: Vec<f64>, design: DesignMatrices) -> Result<Self> {
        if y.len() != design.nrows() {
            return Err(Error::Data(format!(
                "response has {} values but the design has {} rows",
                y.len(),
                design.nrows()
            )));
        }
        if let Some(bad) = y.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Data(format!(
                "responses must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { y, design })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn n_zero(&self) -> usize {
        self.y.iter().filter(|&&v| v == 0.0).count()
    }

    /// Zero indicator 𝕀(yᵢ = 0) as 0/1 values.
    pub fn zero_indicator(&self) -> Vec<f64> {
        self.y.iter().map(|&v| if v == 0.0 { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIter,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub status: FitStatus,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub restarts: usize,
    /// Log-likelihood at the start and at each restart's end, for diagnosing failures.
    pub loglik_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientNames {
    pub kappa: Vec<String>,
    pub beta: Vec<String>,
    pub tau: Vec<String>,
}

/// A fitted BCS or ZABCS regression.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub family: FamilyTag,
    pub zeta: Option<f64>,
    pub mu_link: Link,
    pub sigma_link: Link,
    /// Present exactly for zero-adjusted fits.
    pub alpha_link: Option<BinaryLink>,
    pub beta: Vec<f64>,
    pub tau: Vec<f64>,
    pub kappa: Option<Vec<f64>>,
    pub lambda: f64,
    pub lambda_fixed: bool,
    pub loglik: f64,
    pub loglik_discrete: Option<f64>,
    pub loglik_continuous: f64,
    /// J_n in the parameter order κ, β, τ, λ (λ only when free).
    pub observed_information: DMatrix<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub convergence: Convergence,
    pub fitted_mu: Vec<f64>,
    pub fitted_sigma: Vec<f64>,
    pub fitted_alpha: Option<Vec<f64>>,
    /// Diagonal of the binary-GLM hat matrix (zero-adjusted fits).
    pub leverage: Option<Vec<f64>>,
    pub names: CoefficientNames,
    pub n: usize,
    pub n_zero: usize,
    pub warnings: Vec<String>,
}

impl FittedModel {
    pub fn is_zero_adjusted(&self) -> bool {
        self.kappa.is_some()
    }

    pub fn dgf(&self) -> DgfFamily {
        DgfFamily::new(self.family, self.zeta).expect("fitted family is valid")
    }

    /// θ̂ in the order κ, β, τ, λ (λ only when free).
    pub fn theta(&self) -> DVector<f64> {
        let mut v: Vec<f64> = self.kappa.clone().unwrap_or_default();
        v.extend(&self.beta);
        v.extend(&self.tau);
        if !self.lambda_fixed {
            v.push(self.lambda);
        }
        DVector::from_vec(v)
    }

    /// Number of estimated coefficients, not counting ζ.
    pub fn n_params(&self) -> usize {
        self.theta().len()
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.names.kappa.iter().map(|n| format!("alpha:{n}")).collect();
        v.extend(self.names.beta.iter().map(|n| format!("mu:{n}")));
        v.extend(self.names.tau.iter().map(|n| format!("sigma:{n}")));
        if !self.lambda_fixed {
            v.push("lambda".to_string());
        }
        v
    }

    /// Continuous-part parameters of observation i.
    pub fn bcs_params(&self, i: usize) -> BcsParams {
        BcsParams {
            mu: self.fitted_mu[i],
            sigma: self.fitted_sigma[i],
            lambda: self.lambda,
        }
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            formula: None,
            family: self.family,
            zeta_mode: self.zeta.map(ZetaMode::Fixed),
            mu_link: self.mu_link,
            sigma_link: self.sigma_link,
            alpha_link: self.alpha_link.unwrap_or_default(),
            lambda_mode: if self.lambda_fixed {
                LambdaMode::Fixed(self.lambda)
            } else {
                LambdaMode::Free
            },
        }
    }
}
