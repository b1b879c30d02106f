//! BCS log-likelihood and its analytic score.

use nalgebra::{DMatrix, DVector};

use super::link::Link;
use super::{LambdaMode, ModelSpec, RegressionData};
use crate::bcs::{dz_dlambda_value, log_density_value, z_value};
use crate::dgf::DgfFamily;
use crate::error::{domain, Error, Result};

/// Per-observation quantities entering the score. Rows with a zero response hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreWorkspace {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda: f64,
    pub z: Vec<f64>,
    pub mu_star: Vec<f64>,
    pub sigma_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    /// 1/ḋ₁(μᵢ)
    pub t1: Vec<f64>,
    /// 1/ḋ₂(σᵢ)
    pub t2: Vec<f64>,
    /// r(δᵢ²)/R(δᵢ), zero when λ = 0.
    pub xi: Vec<f64>,
}

/// The continuous-part likelihood over the rows with positive response.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BcsObjective<'a> {
    pub y: &'a [f64],
    pub x: &'a DMatrix<f64>,
    pub s: &'a DMatrix<f64>,
    pub family: DgfFamily,
    pub mu_link: Link,
    pub sigma_link: Link,
    pub lambda_mode: LambdaMode,
}

impl<'a> BcsObjective<'a> {
    pub fn new(data: &'a RegressionData, spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            y: &data.y,
            x: &data.design.x,
            s: &data.design.s,
            family: spec.dgf()?,
            mu_link: spec.mu_link,
            sigma_link: spec.sigma_link,
            lambda_mode: spec.lambda_mode,
        })
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.s.ncols()
    }

    pub fn dim(&self) -> usize {
        self.p() + self.q() + usize::from(self.lambda_mode.is_free())
    }

    pub fn lambda_of(&self, theta: &DVector<f64>) -> f64 {
        match self.lambda_mode {
            LambdaMode::Free => theta[self.p() + self.q()],
            LambdaMode::Fixed(l) => l,
        }
    }

    /// μᵢ and σᵢ for every row; `None` if an active row leaves the parameter space.
    /// Inactive rows with an invalid predictor get NaN.
    pub fn predictors(&self, theta: &DVector<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
        let (p, q) = (self.p(), self.q());
        let beta = theta.rows(0, p);
        let tau = theta.rows(p, q);
        let eta1 = self.x * beta;
        let eta2 = self.s * tau;
        let mut mu = Vec::with_capacity(self.y.len());
        let mut sigma = Vec::with_capacity(self.y.len());
        for i in 0..self.y.len() {
            let m = self.mu_link.inverse(eta1[i]);
            let s = self.sigma_link.inverse(eta2[i]);
            match (m, s) {
                (Some(m), Some(s)) => {
                    mu.push(m);
                    sigma.push(s);
                }
                _ if self.y[i] > 0.0 => return None,
                _ => {
                    mu.push(m.unwrap_or(f64::NAN));
                    sigma.push(s.unwrap_or(f64::NAN));
                }
            }
        }
        Some((mu, sigma))
    }

    pub fn loglik(&self, theta: &DVector<f64>) -> Option<f64> {
        self.loglik_weighted(theta, None)
    }

    /// Σ wᵢ log f(yᵢ) over positive responses.
    pub fn loglik_weighted(&self, theta: &DVector<f64>, w: Option<&[f64]>) -> Option<f64> {
        if !theta.iter().all(|v| v.is_finite()) {
            return None;
        }
        let lambda = self.lambda_of(theta);
        let (mu, sigma) = self.predictors(theta)?;
        let mut total = 0.0;
        for (i, &y) in self.y.iter().enumerate() {
            if y > 0.0 {
                let lf = log_density_value(&self.family, y, mu[i], sigma[i], lambda);
                total += w.map_or(1.0, |w| w[i]) * lf;
            }
        }
        total.is_finite().then_some(total)
    }

    pub fn workspace(&self, theta: &DVector<f64>) -> Option<ScoreWorkspace> {
        if !theta.iter().all(|v| v.is_finite()) {
            return None;
        }
        let lambda = self.lambda_of(theta);
        let (mu, sigma) = self.predictors(theta)?;
        let n = self.y.len();
        let mut ws = ScoreWorkspace {
            mu,
            sigma,
            lambda,
            z: vec![0.0; n],
            mu_star: vec![0.0; n],
            sigma_star: vec![0.0; n],
            lambda_star: vec![0.0; n],
            t1: vec![0.0; n],
            t2: vec![0.0; n],
            xi: vec![0.0; n],
        };
        let fam = &self.family;
        for (i, &y) in self.y.iter().enumerate() {
            if y <= 0.0 {
                continue;
            }
            let (m, s) = (ws.mu[i], ws.sigma[i]);
            let l = (y / m).ln();
            let z = z_value(y, m, s, lambda);
            let zv = fam.zv(z);
            let xi = if lambda == 0.0 {
                0.0
            } else {
                let delta = 1.0 / (s * lambda.abs());
                (fam.ln_r(delta * delta) - fam.ln_big_r_positive(delta)).exp()
            };
            ws.z[i] = z;
            ws.xi[i] = xi;
            ws.mu_star[i] = -lambda / m + (z * s * lambda + 1.0) * zv / (m * s);
            let trunc_sigma = if lambda == 0.0 { 0.0 } else { xi / (lambda.abs() * s * s) };
            ws.sigma_star[i] = -1.0 / s + z * zv / s + trunc_sigma;
            let trunc_lambda = if lambda == 0.0 {
                0.0
            } else {
                lambda.signum() * xi / (s * lambda * lambda)
            };
            ws.lambda_star[i] = l - zv * dz_dlambda_value(y, m, s, lambda) + trunc_lambda;
            ws.t1[i] = 1.0 / self.mu_link.derivative(m);
            ws.t2[i] = 1.0 / self.sigma_link.derivative(s);
        }
        let finite = ws
            .mu_star
            .iter()
            .chain(&ws.sigma_star)
            .chain(&ws.lambda_star)
            .all(|v| v.is_finite());
        finite.then_some(ws)
    }

    /// Per-observation score contributions as columns (dim × n).
    pub fn contributions(&self, theta: &DVector<f64>) -> Option<DMatrix<f64>> {
        let ws = self.workspace(theta)?;
        Some(self.contributions_from(&ws))
    }

    pub fn contributions_from(&self, ws: &ScoreWorkspace) -> DMatrix<f64> {
        let (p, q) = (self.p(), self.q());
        let n = self.y.len();
        let mut out = DMatrix::zeros(self.dim(), n);
        for i in 0..n {
            let a = ws.t1[i] * ws.mu_star[i];
            let b = ws.t2[i] * ws.sigma_star[i];
            for j in 0..p {
                out[(j, i)] = self.x[(i, j)] * a;
            }
            for j in 0..q {
                out[(p + j, i)] = self.s[(i, j)] * b;
            }
            if self.lambda_mode.is_free() {
                out[(p + q, i)] = ws.lambda_star[i];
            }
        }
        out
    }

    /// U_β = XᵀT₁μ*, U_τ = SᵀT₂σ*, U_λ = 1ᵀλ*.
    pub fn score(&self, theta: &DVector<f64>) -> Option<DVector<f64>> {
        let ws = self.workspace(theta)?;
        let (p, q) = (self.p(), self.q());
        let a = DVector::from_iterator(ws.mu_star.len(), ws.t1.iter().zip(&ws.mu_star).map(|(t, m)| t * m));
        let b = DVector::from_iterator(ws.sigma_star.len(), ws.t2.iter().zip(&ws.sigma_star).map(|(t, s)| t * s));
        let mut g = DVector::zeros(self.dim());
        g.rows_mut(0, p).copy_from(&(self.x.transpose() * a));
        g.rows_mut(p, q).copy_from(&(self.s.transpose() * b));
        if self.lambda_mode.is_free() {
            g[p + q] = ws.lambda_star.iter().sum();
        }
        Some(g)
    }
}

fn positive_objective<'a>(data: &'a RegressionData, spec: &ModelSpec, theta: &DVector<f64>) -> Result<BcsObjective<'a>> {
    if data.y.iter().any(|&v| v <= 0.0) {
        return domain("the BCS likelihood needs strictly positive responses");
    }
    let obj = BcsObjective::new(data, spec)?;
    if theta.len() != obj.dim() {
        return domain(format!(
            "theta has length {} but the model has {} coefficients",
            theta.len(),
            obj.dim()
        ));
    }
    Ok(obj)
}

fn rejected() -> Error {
    Error::Domain("linear predictor outside the parameter space (non-finite likelihood)".into())
}

/// ℓ(β, τ, λ) with θ ordered as β, τ and λ (when free).
pub fn loglik_bcs(theta: &DVector<f64>, data: &RegressionData, spec: &ModelSpec) -> Result<f64> {
    positive_objective(data, spec, theta)?.loglik(theta).ok_or_else(rejected)
}

pub fn score_bcs(theta: &DVector<f64>, data: &RegressionData, spec: &ModelSpec) -> Result<DVector<f64>> {
    positive_objective(data, spec, theta)?.score(theta).ok_or_else(rejected)
}

pub fn score_workspace(theta: &DVector<f64>, data: &RegressionData, spec: &ModelSpec) -> Result<ScoreWorkspace> {
    positive_objective(data, spec, theta)?.workspace(theta).ok_or_else(rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcs::{Bcs, BcsParams};
    use crate::dgf::tests::all_families;
    use crate::regress::DesignMatrices;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn design(n: usize, rng: &mut ChaCha8Rng) -> DesignMatrices {
        let mut x = DMatrix::zeros(n, 2);
        let mut s = DMatrix::zeros(n, 2);
        for i in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(0.0..1.0);
            x[(i, 0)] = 1.0;
            x[(i, 1)] = a;
            s[(i, 0)] = 1.0;
            s[(i, 1)] = b;
        }
        DesignMatrices::new(
            x,
            vec!["(Intercept)".into(), "a".into()],
            s,
            vec!["(Intercept)".into(), "b".into()],
            None,
        )
        .unwrap()
    }

    fn spec_for(f: &DgfFamily) -> ModelSpec {
        let spec = ModelSpec::new(f.tag());
        match f.zeta() {
            Some(z) => spec.with_zeta(z),
            None => spec,
        }
    }

    /// Five-point central difference, accurate to O(h⁴).
    fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, theta: &DVector<f64>, h: f64) -> DVector<f64> {
        DVector::from_iterator(
            theta.len(),
            (0..theta.len()).map(|j| {
                let at = |k: f64| {
                    let mut t = theta.clone();
                    t[j] += k * h;
                    f(&t)
                };
                (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
            }),
        )
    }

    #[test]
    fn single_lognormal_observation() {
        let d = DesignMatrices::new(
            DMatrix::from_element(1, 1, 1.0),
            vec!["(Intercept)".into()],
            DMatrix::from_element(1, 1, 1.0),
            vec!["(Intercept)".into()],
            None,
        )
        .unwrap();
        let y = 3.7_f64;
        let data = RegressionData::new(vec![y], d).unwrap();
        let spec = ModelSpec::new(crate::dgf::FamilyTag::BCNO).with_lambda(LambdaMode::Fixed(0.0));
        let theta = DVector::from_vec(vec![y.ln(), 0.0]);
        let ll = loglik_bcs(&theta, &data, &spec).unwrap();
        let expected = -y.ln() - (2.0 * std::f64::consts::PI).sqrt().ln();
        assert!((ll - expected).abs() < 1e-14);
    }

    #[test]
    fn loglik_sums_log_pdf_and_is_continuous_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = design(40, &mut rng);
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(0.5..4.0)).collect();
        let data = RegressionData::new(y.clone(), d).unwrap();
        for fam in all_families() {
            let spec = spec_for(&fam);
            let theta = DVector::from_vec(vec![0.4, 0.2, -0.9, 0.3, 0.35]);
            let ll = loglik_bcs(&theta, &data, &spec).unwrap();
            let obj = BcsObjective::new(&data, &spec).unwrap();
            let (mu, sigma) = obj.predictors(&theta).unwrap();
            let direct: f64 = (0..40)
                .map(|i| {
                    Bcs::new(BcsParams::new(mu[i], sigma[i], 0.35).unwrap(), fam)
                        .log_pdf(y[i])
                        .unwrap()
                })
                .sum();
            assert!((ll - direct).abs() <= 1e-12 * ll.abs().max(1.0), "{fam}");
            let at = |l: f64| {
                let mut t = theta.clone();
                t[4] = l;
                loglik_bcs(&t, &data, &spec).unwrap()
            };
            let (lm, l0, lp) = (at(-1e-7), at(0.0), at(1e-7));
            // the truncation term −Σ log R(δᵢ) is continuous at λ = 0 but, for very heavy
            // tails, not negligible at |λ| = 1e-7; allow for it explicitly
            let trunc: f64 = sigma
                .iter()
                .map(|s| -fam.ln_big_r_positive(1.0 / (s * 1e-7)))
                .sum();
            let tol = 1e-6 + 2.0 * trunc;
            // remove the first-order change so only a jump between the branches remains
            let mut t0 = theta.clone();
            t0[4] = 0.0;
            let slope = score_bcs(&t0, &data, &spec).unwrap()[4];
            let (gm, gp) = (lm - l0 - slope * -1e-7, lp - l0 - slope * 1e-7);
            assert!(gm.abs() <= tol && gp.abs() <= tol, "{fam}: {lm} {l0} {lp}");
        }
    }

    #[test]
    fn score_matches_finite_differences_for_all_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let fams = all_families();
        for trial in 0..100 {
            let fam = fams[trial % fams.len()];
            let n = 25;
            let d = design(n, &mut rng);
            let lambda: f64 = if trial % 2 == 0 {
                rng.random_range(0.05..1.2)
            } else {
                -rng.random_range(0.05..1.2)
            };
            let theta = DVector::from_vec(vec![
                rng.random_range(0.0..1.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(-1.5..-0.3),
                rng.random_range(-0.5..0.5),
                lambda,
            ]);
            let spec = spec_for(&fam);
            let data0 = RegressionData::new(vec![1.0; n], d).unwrap();
            let obj0 = BcsObjective::new(&data0, &spec).unwrap();
            let (mu, sigma) = obj0.predictors(&theta).unwrap();
            let y: Vec<f64> = (0..n)
                .map(|i| {
                    Bcs::new(BcsParams::new(mu[i], sigma[i], lambda).unwrap(), fam)
                        .quantile({
                            // keep clear of z = 0, where the Laplace generator has a kink
                            let u: f64 = rng.random_range(0.02..0.48);
                            if rng.random_bool(0.5) { u } else { 1.0 - u }
                        })
                        .unwrap()
                })
                .collect();
            let data = RegressionData::new(y, data0.design.clone()).unwrap();
            let an = score_bcs(&theta, &data, &spec).unwrap();
            let fd = fd_gradient(|t| loglik_bcs(t, &data, &spec).unwrap(), &theta, 1e-3);
            for j in 0..theta.len() {
                let tol = 1e-5 * an[j].abs().max(1.0);
                assert!((an[j] - fd[j]).abs() <= tol, "{fam} trial {trial} coord {j}: {} vs {}", an[j], fd[j]);
            }
        }
    }

    #[test]
    fn score_near_lambda_zero_and_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = design(30, &mut rng);
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(0.3..5.0)).collect();
        let data = RegressionData::new(y, d).unwrap();
        for fam in all_families() {
            let spec = spec_for(&fam);
            // heavy-tailed generators have a kink in λ at 0; stay on one side
            for &lambda in &[5e-4, -5e-4, 0.0] {
                let theta = DVector::from_vec(vec![0.5, 0.1, -0.7, 0.2, lambda]);
                let an = score_bcs(&theta, &data, &spec).unwrap();
                let h = if lambda == 0.0 { 1e-3 } else { 1e-5 };
                let fd = fd_gradient(|t| loglik_bcs(t, &data, &spec).unwrap(), &theta, h);
                let last = if lambda == 0.0 { 4 } else { 5 };
                for j in 0..last {
                    let tol = 1e-4 * an[j].abs().max(1.0);
                    assert!((an[j] - fd[j]).abs() <= tol, "{fam} λ={lambda} coord {j}: {} vs {}", an[j], fd[j]);
                }
            }
        }
    }

    #[test]
    fn fixed_lambda_drops_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = design(10, &mut rng);
        let data = RegressionData::new((1..=10).map(f64::from).collect(), d).unwrap();
        let spec = ModelSpec::new(crate::dgf::FamilyTag::BCNO).with_lambda(LambdaMode::Fixed(0.3));
        let theta = DVector::from_vec(vec![1.0, 0.0, -0.5, 0.0]);
        let g = score_bcs(&theta, &data, &spec).unwrap();
        assert_eq!(g.len(), 4);
        let free = ModelSpec::new(crate::dgf::FamilyTag::BCNO);
        let gf = score_bcs(&DVector::from_vec(vec![1.0, 0.0, -0.5, 0.0, 0.3]), &data, &free).unwrap();
        assert!((g - gf.rows(0, 4)).amax() < 1e-12);
    }

    #[test]
    fn invalid_predictor_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = design(10, &mut rng);
        let data = RegressionData::new(vec![1.0; 10], d).unwrap();
        let spec = ModelSpec::new(crate::dgf::FamilyTag::BCNO).with_links(
            Link::Identity,
            Link::Log,
            Default::default(),
        );
        let theta = DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(loglik_bcs(&theta, &data, &spec).is_err());
        assert!(score_bcs(&theta, &data, &spec).is_err());
    }
}
