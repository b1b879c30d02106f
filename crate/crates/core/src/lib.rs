//! Box-Cox symmetric (BCS) and zero-adjusted Box-Cox symmetric (ZABCS)
//! regression: distributions, maximum likelihood fitting and diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod bcs;
pub mod binglm;
pub mod cli;
pub mod dgf;
pub mod diagnostics;
pub mod regress;
pub mod specfun;
pub mod zabcs;

pub use error::{Error, Result};
