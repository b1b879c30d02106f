//! The Box-Cox symmetric law: transform, density, CDF, quantile and sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dgf::DgfFamily;
use crate::error::{domain, Result};

/// (μ, σ, λ) of a BCS law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcsParams {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl BcsParams {
    pub fn new(mu: f64, sigma: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return domain(format!("mu must be positive and finite, got {mu}"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return domain(format!("sigma must be positive and finite, got {sigma}"));
        }
        if !lambda.is_finite() {
            return domain(format!("lambda must be finite, got {lambda}"));
        }
        Ok(Self { mu, sigma, lambda })
    }

    /// δ = 1/(σ|λ|), the distance from zero to the truncation point (∞ when λ = 0).
    pub fn truncation_point(&self) -> f64 {
        1.0 / (self.sigma * self.lambda.abs())
    }
}

/// Below this |λ log(y/μ)| the transform and its λ-derivative use power series.
const SERIES_SWITCH: f64 = 0.1;

/// expm1(x)/x.
pub(crate) fn expm1_over_x(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        // Σ x^k / (k+1)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..16 {
            term *= x / f64::from(k + 1);
            sum += term;
        }
        sum
    } else {
        x.exp_m1() / x
    }
}

/// (e^x (x − 1) + 1)/x².
pub(crate) fn dz_kernel(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        // Σ_{m>=2} (m−1)/m! x^{m−2}
        let mut fact = 2.0;
        let mut pow = 1.0;
        let mut sum = 0.5;
        for m in 3..20 {
            let mf = f64::from(m);
            fact *= mf;
            pow *= x;
            sum += (mf - 1.0) / fact * pow;
        }
        sum
    } else {
        (x.exp() * (x - 1.0) + 1.0) / (x * x)
    }
}

/// z = T(y; μ, σ, λ) without argument checks.
pub(crate) fn z_value(y: f64, mu: f64, sigma: f64, lambda: f64) -> f64 {
    let l = (y / mu).ln();
    if lambda == 0.0 {
        l / sigma
    } else {
        l * expm1_over_x(lambda * l) / sigma
    }
}

pub(crate) fn dz_dlambda_value(y: f64, mu: f64, sigma: f64, lambda: f64) -> f64 {
    let l = (y / mu).ln();
    l * l * dz_kernel(lambda * l) / sigma
}

fn check_positive(y: f64, what: &str) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        domain(format!("{what}: y must be positive and finite, got {y}"))
    }
}

/// Box-Cox transform z = T(y; μ, σ, λ).
pub fn transform_z(y: f64, params: &BcsParams) -> Result<f64> {
    check_positive(y, "transform_z")?;
    Ok(z_value(y, params.mu, params.sigma, params.lambda))
}

/// ∂z/∂λ.
pub fn dz_dlambda(y: f64, params: &BcsParams) -> Result<f64> {
    check_positive(y, "dz_dlambda")?;
    Ok(dz_dlambda_value(y, params.mu, params.sigma, params.lambda))
}

/// log f(y) for one observation; the building block of the log-likelihood.
pub(crate) fn log_density_value(family: &DgfFamily, y: f64, mu: f64, sigma: f64, lambda: f64) -> f64 {
    let l = (y / mu).ln();
    let z = if lambda == 0.0 {
        l / sigma
    } else {
        l * expm1_over_x(lambda * l) / sigma
    };
    let base = family.ln_r(z * z) - y.ln() - sigma.ln();
    if lambda == 0.0 {
        base
    } else {
        let delta = 1.0 / (sigma * lambda.abs());
        base + lambda * l - family.ln_big_r_positive(delta)
    }
}

/// CDF value at a positive `y` in terms of z and the truncation point.
fn cdf_value(family: &DgfFamily, z: f64, sigma: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return family.big_r(z);
    }
    let delta = 1.0 / (sigma * lambda.abs());
    let norm = 1.0 - family.big_r(-delta);
    let v = if lambda < 0.0 {
        family.big_r(z) / norm
    } else {
        (family.big_r(z) - family.big_r(-delta)) / norm
    };
    v.clamp(0.0, 1.0)
}

fn sf_value(family: &DgfFamily, z: f64, sigma: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return family.big_r(-z);
    }
    let delta = 1.0 / (sigma * lambda.abs());
    let norm = 1.0 - family.big_r(-delta);
    let v = if lambda > 0.0 {
        family.big_r(-z) / norm
    } else {
        (family.big_r(-z) - family.big_r(-delta)) / norm
    };
    v.clamp(0.0, 1.0)
}

/// A BCS law with a fixed generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bcs {
    pub params: BcsParams,
    pub family: DgfFamily,
}

impl Bcs {
    pub fn new(params: BcsParams, family: DgfFamily) -> Self {
        Self { params, family }
    }

    /// log density; non-positive `y` is an error.
    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        check_positive(y, "log_pdf")?;
        Ok(self.log_pdf_permissive(y))
    }

    /// log density returning −∞ outside the support instead of failing.
    pub fn log_pdf_permissive(&self, y: f64) -> f64 {
        if !(y > 0.0) || !y.is_finite() {
            return f64::NEG_INFINITY;
        }
        let p = &self.params;
        log_density_value(&self.family, y, p.mu, p.sigma, p.lambda)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf_permissive(y).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= 0.0 {
            return 0.0;
        }
        if y == f64::INFINITY {
            return 1.0;
        }
        let p = &self.params;
        let z = z_value(y, p.mu, p.sigma, p.lambda);
        cdf_value(&self.family, z, p.sigma, p.lambda)
    }

    /// Survival function 1 − F(y), accurate in the upper tail.
    pub fn sf(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= 0.0 {
            return 1.0;
        }
        if y == f64::INFINITY {
            return 0.0;
        }
        let p = &self.params;
        let z = z_value(y, p.mu, p.sigma, p.lambda);
        sf_value(&self.family, z, p.sigma, p.lambda)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("quantile: p must lie in (0,1), got {p}"));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let BcsParams { mu, sigma, lambda } = self.params;
        let f = &self.family;
        let z = if lambda == 0.0 {
            f.r_inv(p)
        } else {
            let delta = 1.0 / (sigma * lambda.abs());
            let tail = f.big_r(-delta);
            let norm = 1.0 - tail;
            match (lambda > 0.0, p <= 0.5) {
                (true, true) => f.r_inv(p * norm + tail),
                (true, false) => -f.r_inv((1.0 - p) * norm),
                (false, true) => f.r_inv(p * norm),
                (false, false) => -f.r_inv((1.0 - p) * norm + tail),
            }
        };
        if lambda == 0.0 {
            mu * (sigma * z).exp()
        } else {
            let arg = (sigma * lambda * z).max(-1.0 + f64::EPSILON);
            mu * (arg.ln_1p() / lambda).exp()
        }
    }

    /// `n` inverse-CDF draws from a ChaCha stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.quantile_unchecked(open_unit(rng))).collect()
    }
}

/// Uniform draw on the open interval (0, 1).
pub(crate) fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
