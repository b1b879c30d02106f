//! Link functions for μ, σ (positive parameters) and α (a probability).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun;

/// Link for a positive parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    #[default]
    Log,
    Identity,
    Sqrt,
}

impl Link {
    pub fn link(self, x: f64) -> f64 {
        match self {
            Link::Log => x.ln(),
            Link::Identity => x,
            Link::Sqrt => x.sqrt(),
        }
    }

    /// Inverse link; `None` when the linear predictor leaves the parameter space.
    pub fn inverse(self, eta: f64) -> Option<f64> {
        let v = match self {
            Link::Log => eta.exp(),
            Link::Identity => eta,
            Link::Sqrt => {
                if eta <= 0.0 {
                    return None;
                }
                eta * eta
            }
        };
        (v > 0.0 && v.is_finite()).then_some(v)
    }

    /// ḋ(x), the derivative of the link at the parameter value.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Link::Log => 1.0 / x,
            Link::Identity => 1.0,
            Link::Sqrt => 0.5 / x.sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Link::Log => "log",
            Link::Identity => "identity",
            Link::Sqrt => "sqrt",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Link {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log" => Ok(Link::Log),
            "identity" => Ok(Link::Identity),
            "sqrt" => Ok(Link::Sqrt),
            other => Err(Error::InvalidParameter(format!(
                "unknown link '{other}' (expected log, identity or sqrt)"
            ))),
        }
    }
}

/// Link for the zero probability α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryLink {
    #[default]
    Logit,
    Probit,
    Cloglog,
}

impl BinaryLink {
    pub fn link(self, a: f64) -> f64 {
        match self {
            BinaryLink::Logit => (a / (1.0 - a)).ln(),
            BinaryLink::Probit => specfun::phi_inv(a),
            BinaryLink::Cloglog => (-(-a).ln_1p()).ln(),
        }
    }

    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            BinaryLink::Logit => 1.0 / (1.0 + (-eta).exp()),
            BinaryLink::Probit => specfun::phi(eta),
            BinaryLink::Cloglog => -(-eta.exp()).exp_m1(),
        }
    }

    /// dα/dη as a function of η.
    pub fn dalpha_deta(self, eta: f64) -> f64 {
        match self {
            BinaryLink::Logit => {
                let a = self.inverse(eta);
                a * (1.0 - a)
            }
            BinaryLink::Probit => specfun::std_normal_pdf(eta),
            BinaryLink::Cloglog => (eta - eta.exp()).exp(),
        }
    }

    /// ḋ₀(α).
    pub fn derivative(self, a: f64) -> f64 {
        1.0 / self.dalpha_deta(self.link(a))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLink::Logit => "logit",
            BinaryLink::Probit => "probit",
            BinaryLink::Cloglog => "cloglog",
        }
    }
}

impl fmt::Display for BinaryLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BinaryLink {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logit" => Ok(BinaryLink::Logit),
            "probit" => Ok(BinaryLink::Probit),
            "cloglog" => Ok(BinaryLink::Cloglog),
            other => Err(Error::InvalidParameter(format!(
                "unknown link '{other}' (expected logit, probit or cloglog)"
            ))),
        }
    }
}
