//! Zero-adjusted BCS law: a point mass α at zero mixed with a BCS law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bcs::{open_unit, Bcs, BcsParams};
use crate::dgf::DgfFamily;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZabcsParams {
    pub alpha: f64,
    pub continuous: BcsParams,
}

impl ZabcsParams {
    pub fn new(alpha: f64, continuous: BcsParams) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha must lie in (0,1), got {alpha}"));
        }
        Ok(Self { alpha, continuous })
    }
}

/// Values at or below this threshold count as zeros. The default is exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroThreshold(pub f64);

impl Default for ZeroThreshold {
    fn default() -> Self {
        ZeroThreshold(0.0)
    }
}

impl ZeroThreshold {
    pub fn is_zero(&self, y: f64) -> bool {
        y <= self.0 && y >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zabcs {
    pub params: ZabcsParams,
    pub family: DgfFamily,
}

impl Zabcs {
    pub fn new(params: ZabcsParams, family: DgfFamily) -> Self {
        Self { params, family }
    }

    pub fn continuous(&self) -> Bcs {
        Bcs::new(self.params.continuous, self.family)
    }

    /// Mass α at zero, (1 − α) f(y) for y > 0.
    pub fn density_or_mass(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return domain(format!("density_or_mass: y must be nonnegative, got {y}"));
        }
        if y == 0.0 {
            return Ok(self.params.alpha);
        }
        Ok((1.0 - self.params.alpha) * self.continuous().pdf(y))
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y < 0.0 {
            return 0.0;
        }
        let a = self.params.alpha;
        a + (1.0 - a) * self.continuous().cdf(y)
    }

    /// 1 − F⁰(y) for y >= 0.
    pub fn sf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 1.0;
        }
        (1.0 - self.params.alpha) * self.continuous().sf(y)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("quantile: p must lie in (0,1), got {p}"));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        let a = self.params.alpha;
        if p <= a {
            0.0
        } else {
            self.continuous().quantile_unchecked((p - a) / (1.0 - a))
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let cont = self.continuous();
        (0..n)
            .map(|_| {
                let is_zero = open_unit(rng) <= self.params.alpha;
                let u = open_unit(rng);
                if is_zero {
                    0.0
                } else {
                    cont.quantile_unchecked(u)
                }
            })
            .collect()
    }
}
