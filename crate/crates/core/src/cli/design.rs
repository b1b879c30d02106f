//! Binding a parsed formula to a dataset.

use nalgebra::DMatrix;

use super::dataset::{Column, Dataset};
use super::formula::{FormulaAst, FormulaPart};
use crate::error::{Error, Result};
use crate::regress::DesignMatrices;

pub const INTERCEPT_NAME: &str = "(Intercept)";

/// Distinct levels of a categorical column in sorted order; the first is the reference.
pub fn levels(values: &[String]) -> Vec<String> {
    let mut l: Vec<String> = values.to_vec();
    l.sort();
    l.dedup();
    l
}

fn part_matrix(data: &Dataset, part: &FormulaPart, label: &str) -> Result<(DMatrix<f64>, Vec<String>)> {
    if part.is_empty() {
        return Err(Error::Data(format!(
            "the {label} part has no regressors; it needs at least an intercept"
        )));
    }
    let n = data.nrows();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    if part.intercept {
        cols.push(vec![1.0; n]);
        names.push(INTERCEPT_NAME.to_string());
    }
    for term in &part.terms {
        match data.column(term) {
            None => {
                return Err(Error::Data(format!(
                    "unknown variable '{term}' in the {label} part"
                )))
            }
            Some(Column::Numeric(v)) => {
                cols.push(v.clone());
                names.push(term.clone());
            }
            Some(Column::Categorical(v)) => {
                let lv = levels(v);
                if lv.len() < 2 {
                    return Err(Error::Data(format!(
                        "categorical variable '{term}' has a single level"
                    )));
                }
                for level in &lv[1..] {
                    cols.push(v.iter().map(|x| if x == level { 1.0 } else { 0.0 }).collect());
                    names.push(format!("{term}:{level}"));
                }
            }
        }
    }
    let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    Ok((m, names))
}

/// Response vector and design matrices of a formula over a dataset.
pub fn build_design(data: &Dataset, ast: &FormulaAst) -> Result<(Vec<f64>, DesignMatrices)> {
    let y = match data.column(&ast.response) {
        Some(Column::Numeric(v)) => v.clone(),
        Some(Column::Categorical(_)) => {
            return Err(Error::Data(format!("response '{}' is not numeric", ast.response)))
        }
        None => return Err(Error::Data(format!("unknown response variable '{}'", ast.response))),
    };
    let (x, xn) = part_matrix(data, &ast.mu, "mu")?;
    let (s, sn) = part_matrix(data, &ast.sigma, "sigma")?;
    let z = match &ast.alpha {
        Some(p) => Some(part_matrix(data, p, "alpha")?),
        None => None,
    };
    let design = DesignMatrices::new(x, xn, s, sn, z)?;
    Ok((y, design))
}
