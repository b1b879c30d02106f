//! Binary GLM for the zero indicator, fitted by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::regress::link::BinaryLink;

/// Linear predictors beyond this magnitude indicate (quasi-)separation.
pub const SEPARATION_ETA: f64 = 30.0;

const PROB_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct BinaryGlmFit {
    pub kappa: DVector<f64>,
    pub link: BinaryLink,
    pub fitted_alpha: Vec<f64>,
    pub linear_predictor: Vec<f64>,
    /// Expected information ZᵀWZ at the estimate.
    pub information: DMatrix<f64>,
    pub loglik: f64,
    pub iterations: usize,
}

fn clamp_prob(a: f64) -> f64 {
    a.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Σ [yᵢ ln αᵢ + (1 − yᵢ) ln(1 − αᵢ)].
pub fn loglik_binary(kappa: &DVector<f64>, indicator: &[f64], z: &DMatrix<f64>, link: BinaryLink) -> f64 {
    let eta = z * kappa;
    indicator
        .iter()
        .zip(eta.iter())
        .map(|(&y, &e)| {
            let a = clamp_prob(link.inverse(e));
            y * a.ln() + (1.0 - y) * (-a).ln_1p()
        })
        .sum()
}

/// Per-observation score contributions as columns (m × n).
pub fn score_contributions(
    kappa: &DVector<f64>,
    indicator: &[f64],
    z: &DMatrix<f64>,
    link: BinaryLink,
) -> DMatrix<f64> {
    let eta = z * kappa;
    let mut out = DMatrix::zeros(z.ncols(), z.nrows());
    for i in 0..z.nrows() {
        let a = clamp_prob(link.inverse(eta[i]));
        let w = (indicator[i] - a) / (a * (1.0 - a)) * link.dalpha_deta(eta[i]);
        for j in 0..z.ncols() {
            out[(j, i)] = w * z[(i, j)];
        }
    }
    out
}

/// Zᵀ A T₀ (y − α) with A = diag(1/(α(1 − α))) and T₀ = diag(1/ḋ₀(α)).
pub fn score_binary(kappa: &DVector<f64>, indicator: &[f64], z: &DMatrix<f64>, link: BinaryLink) -> DVector<f64> {
    let c = score_contributions(kappa, indicator, z, link);
    c.column_sum()
}

fn irls_weights(eta: &DVector<f64>, link: BinaryLink) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut alpha = Vec::with_capacity(eta.len());
    let mut w = Vec::with_capacity(eta.len());
    let mut deriv = Vec::with_capacity(eta.len());
    for &e in eta.iter() {
        let a = clamp_prob(link.inverse(e));
        let g = link.dalpha_deta(e).max(1e-300);
        alpha.push(a);
        deriv.push(g);
        w.push(g * g / (a * (1.0 - a)));
    }
    (alpha, w, deriv)
}

fn weighted_crossprod(z: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut zw = z.clone();
    for (i, mut row) in zw.row_iter_mut().enumerate() {
        row *= w[i].sqrt();
    }
    zw.transpose() * zw
}

/// Fits the binary GLM by IRLS with step halving.
pub fn fit_binary_glm(indicator: &[f64], z: &DMatrix<f64>, link: BinaryLink) -> Result<BinaryGlmFit> {
    let n = z.nrows();
    let m = z.ncols();
    if indicator.len() != n {
        return Err(Error::Data(format!(
            "indicator has {} entries but the design has {n} rows",
            indicator.len()
        )));
    }
    if indicator.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::Data("indicator must contain only 0 and 1".into()));
    }
    let ones = indicator.iter().filter(|&&y| y == 1.0).count();
    if ones == 0 || ones == n {
        return Err(Error::Separation { max_eta: f64::INFINITY });
    }

    // start at the usual (y + 1/2)/2 fitted probabilities
    let eta0: Vec<f64> = indicator.iter().map(|&y| link.link((y + 0.5) / 2.0)).collect();
    let mut eta = DVector::from_vec(eta0);
    let mut kappa = DVector::zeros(m);
    let mut ll_old = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..100 {
        iterations = it + 1;
        let (alpha, w, deriv) = irls_weights(&eta, link);
        let work: Vec<f64> = (0..n)
            .map(|i| eta[i] + (indicator[i] - alpha[i]) / deriv[i])
            .collect();
        let info = weighted_crossprod(z, &w);
        let rhs = z.transpose() * DVector::from_iterator(n, (0..n).map(|i| w[i] * work[i]));
        let Some(chol) = info.clone().cholesky() else {
            return Err(Error::Singular("binary GLM information is not positive definite".into()));
        };
        let mut candidate = chol.solve(&rhs);
        let mut ll = loglik_binary(&candidate, indicator, z, link);
        if it > 0 {
            let mut halvings = 0;
            while !(ll >= ll_old - 1e-12 * ll_old.abs()) && halvings < 30 {
                candidate = (&candidate + &kappa) * 0.5;
                ll = loglik_binary(&candidate, indicator, z, link);
                halvings += 1;
            }
        }
        kappa = candidate;
        eta = z * &kappa;
        let stalled = it > 0 && (ll - ll_old).abs() < 1e-12 * (ll.abs() + 0.1);
        if stalled && score_binary(&kappa, indicator, z, link).amax() <= 1e-9 {
            converged = true;
            break;
        }
        ll_old = ll;
    }
    if !converged && eta.amax() > SEPARATION_ETA {
        return Err(Error::Separation { max_eta: eta.amax() });
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "binary GLM did not converge in {iterations} iterations"
        )));
    }
    let max_eta = eta.amax();
    if max_eta > SEPARATION_ETA {
        return Err(Error::Separation { max_eta });
    }
    Ok(binary_fit_at(kappa, indicator, z, link, iterations))
}

/// Fitted quantities of the binary GLM at a given κ.
pub fn binary_fit_at(
    kappa: DVector<f64>,
    indicator: &[f64],
    z: &DMatrix<f64>,
    link: BinaryLink,
    iterations: usize,
) -> BinaryGlmFit {
    let eta = z * &kappa;
    let (alpha, w, _) = irls_weights(&eta, link);
    let information = weighted_crossprod(z, &w);
    let loglik = loglik_binary(&kappa, indicator, z, link);
    BinaryGlmFit {
        kappa,
        link,
        fitted_alpha: alpha,
        linear_predictor: eta.iter().copied().collect(),
        information,
        loglik,
        iterations,
    }
}

/// Diagonal of W^{1/2} Z (ZᵀWZ)⁻¹ Zᵀ W^{1/2} at the fitted values.
pub fn leverage_hstar(fit: &BinaryGlmFit, z: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eta = DVector::from_column_slice(&fit.linear_predictor);
    let (_, w, _) = irls_weights(&eta, fit.link);
    let chol = weighted_crossprod(z, &w)
        .cholesky()
        .ok_or_else(|| Error::Singular("binary GLM information is not positive definite".into()))?;
    let zt = z.transpose();
    let solved = chol.solve(&zt);
    Ok((0..z.nrows())
        .map(|i| w[i] * zt.column(i).dot(&solved.column(i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::optim::{maximize, OptimOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simulated(n: usize, link: BinaryLink, seed: u64) -> (Vec<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = DMatrix::zeros(n, 3);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let x1: f64 = rng.random_range(-1.0..1.0);
            let x2 = if rng.random_bool(0.4) { 1.0 } else { 0.0 };
            z[(i, 0)] = 1.0;
            z[(i, 1)] = x1;
            z[(i, 2)] = x2;
            let a = link.inverse(0.3 + 0.8 * x1 - 0.5 * x2);
            y.push(if rng.random_bool(a) { 1.0 } else { 0.0 });
        }
        (y, z)
    }

    #[test]
    fn irls_matches_direct_maximization() {
        for link in [BinaryLink::Logit, BinaryLink::Probit, BinaryLink::Cloglog] {
            let (y, z) = simulated(800, link, 11);
            let fit = fit_binary_glm(&y, &z, link).unwrap();
            let f = |k: &DVector<f64>| Some(loglik_binary(k, &y, &z, link));
            let g = |k: &DVector<f64>| Some(score_binary(k, &y, &z, link));
            let opt = maximize(f, g, &DVector::zeros(3), &OptimOptions::default()).unwrap();
            assert!((&opt.theta - &fit.kappa).amax() < 1e-8, "{link}: {} vs {}", opt.theta, fit.kappa);
            assert!(score_binary(&fit.kappa, &y, &z, link).amax() < 1e-6);
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        let (y, z) = simulated(200, BinaryLink::Cloglog, 5);
        let k = DVector::from_vec(vec![0.1, -0.4, 0.7]);
        let s = score_binary(&k, &y, &z, BinaryLink::Cloglog);
        for j in 0..3 {
            let h = 1e-6;
            let mut kp = k.clone();
            kp[j] += h;
            let mut km = k.clone();
            km[j] -= h;
            let fd = (loglik_binary(&kp, &y, &z, BinaryLink::Cloglog)
                - loglik_binary(&km, &y, &z, BinaryLink::Cloglog))
                / (2.0 * h);
            assert!((fd - s[j]).abs() < 1e-5 * s[j].abs().max(1.0));
        }
    }

    #[test]
    fn leverage_sums_to_rank() {
        let (y, z) = simulated(300, BinaryLink::Logit, 2);
        let fit = fit_binary_glm(&y, &z, BinaryLink::Logit).unwrap();
        let h = leverage_hstar(&fit, &z).unwrap();
        let total: f64 = h.iter().sum();
        assert!((total - 3.0).abs() < 1e-8);
        assert!(h.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn separation_is_flagged() {
        let n = 40;
        let mut z = DMatrix::zeros(n, 2);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let x = i as f64 - 19.5;
            z[(i, 0)] = 1.0;
            z[(i, 1)] = x;
            y[i] = if x > 0.0 { 1.0 } else { 0.0 };
        }
        match fit_binary_glm(&y, &z, BinaryLink::Logit) {
            Err(Error::Separation { .. }) => {}
            other => panic!("expected separation, got {other:?}"),
        }
        assert!(matches!(
            fit_binary_glm(&vec![1.0; n], &z, BinaryLink::Logit),
            Err(Error::Separation { .. })
        ));
    }

    #[test]
    fn intercept_only_closed_forms() {
        let n = 100;
        let z = DMatrix::from_element(n, 1, 1.0);
        let y: Vec<f64> = (0..n).map(|i| if i < 93 { 1.0 } else { 0.0 }).collect();
        let fit = fit_binary_glm(&y, &z, BinaryLink::Logit).unwrap();
        assert!((fit.kappa[0] - (0.93f64 / 0.07).ln()).abs() < 1e-10);
        let h = leverage_hstar(&fit, &z).unwrap();
        assert!(h.iter().all(|&v| (v - 1.0 / n as f64).abs() < 1e-12));

        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        for link in [BinaryLink::Logit, BinaryLink::Probit] {
            let fit = fit_binary_glm(&y, &z, link).unwrap();
            assert!(fit.kappa[0].abs() < 1e-10);
        }
    }

    #[test]
    fn hat_matrix_is_idempotent() {
        let (y, z) = simulated(40, BinaryLink::Cloglog, 5);
        let fit = fit_binary_glm(&y, &z, BinaryLink::Cloglog).unwrap();
        let eta = DVector::from_column_slice(&fit.linear_predictor);
        let (_, w, _) = irls_weights(&eta, fit.link);
        let mut zw = z.clone();
        for (i, mut row) in zw.row_iter_mut().enumerate() {
            row *= w[i].sqrt();
        }
        let inv = (zw.transpose() * &zw).try_inverse().unwrap();
        let h = &zw * inv * zw.transpose();
        assert!((&h * &h - &h).amax() < 1e-10);
        let lev = leverage_hstar(&fit, &z).unwrap();
        for i in 0..40 {
            assert!((h[(i, i)] - lev[i]).abs() < 1e-12);
        }
    }
}
