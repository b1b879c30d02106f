//! Test-side oracles and data builders shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use bcsreg::bcs::{Bcs, BcsParams};
use bcsreg::dgf::DgfFamily;
use bcsreg::regress::{DesignMatrices, RegressionData};
use bcsreg::zabcs::{Zabcs, ZabcsParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trapezoid sums of a double-exponentially transformed integrand, halving the
/// step until two successive sums agree.
fn de_sum<G: Fn(f64) -> f64>(g: G, tol: f64) -> f64 {
    let tmax = 4.5;
    let mut h = 0.5;
    let mut prev = f64::NAN;
    let mut sum = g(0.0);
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum += g(k as f64 * h) + g(-(k as f64) * h);
        k += 1;
    }
    for _ in 0..12 {
        let est = sum * h;
        if (est - prev).abs() <= tol * est.abs().max(1e-300) {
            return est;
        }
        prev = est;
        // add the midpoints of the current grid
        h *= 0.5;
        let mut t = h;
        while t <= tmax {
            sum += g(t) + g(-t);
            t += 2.0 * h;
        }
    }
    sum * h
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// ∫_a^b f by the tanh-sinh rule.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    de_sum(
        |t| {
            let u = FRAC_PI_2 * t.sinh();
            let x = u.tanh();
            let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
            let y = c + r * x;
            if y <= a || y >= b {
                return 0.0;
            }
            finite_or_zero(f(y) * r * w)
        },
        1e-13,
    )
}

/// ∫_a^∞ f by the exp-sinh rule.
pub fn integrate_upper<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    de_sum(
        |t| {
            let e = (FRAC_PI_2 * t.sinh()).exp();
            let w = e * FRAC_PI_2 * t.cosh();
            if e == 0.0 || !w.is_finite() {
                return 0.0;
            }
            finite_or_zero(f(a + e) * w)
        },
        1e-13,
    )
}

/// ∫_{-∞}^b f.
pub fn integrate_lower<F: Fn(f64) -> f64>(f: F, b: f64) -> f64 {
    integrate_upper(|x| f(2.0 * b - x), b)
}

/// Student-t CDF with `df` degrees of freedom by quadrature of its density.
pub fn student_t_cdf(x: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln();
    let dens = |t: f64| (ln_c - (df + 1.0) / 2.0 * (t * t / df).ln_1p()).exp();
    if x <= 0.0 {
        integrate_lower(dens, x)
    } else {
        1.0 - integrate_upper(dens, x)
    }
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Central differences of a scalar function, step scaled to each coordinate.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for j in 0..x.len() {
        let h = 1e-5 * x[j].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        let mut xp2 = x.clone();
        let mut xm2 = x.clone();
        xp[j] += h;
        xm[j] -= h;
        xp2[j] += 2.0 * h;
        xm2[j] -= 2.0 * h;
        g[j] = (8.0 * (f(&xp) - f(&xm)) - (f(&xp2) - f(&xm2))) / (12.0 * h);
    }
    g
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Intercept plus one covariate x ~ U(−1, 1).
pub fn covariate_matrix<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::from_element(n, 2, 1.0);
    for i in 0..n {
        m[(i, 1)] = rng.random_range(-1.0..1.0);
    }
    m
}

pub fn names(k: usize) -> Vec<String> {
    ["(Intercept)", "x"][..k].iter().map(|s| s.to_string()).collect()
}

/// y ~ BCS(μ = exp(b0 + b1 x), σ = exp(t0), λ).
pub fn simulate_bcs(
    family: DgfFamily,
    n: usize,
    beta: [f64; 2],
    tau0: f64,
    lambda: f64,
    seed: u64,
    stream: u64,
) -> RegressionData {
    let mut r = rng(seed, stream);
    let x = covariate_matrix(n, &mut r);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mu = (beta[0] + beta[1] * x[(i, 1)]).exp();
            let p = BcsParams::new(mu, tau0.exp(), lambda).unwrap();
            Bcs::new(p, family).sample_with(1, &mut r)[0]
        })
        .collect();
    let s = DMatrix::from_element(n, 1, 1.0);
    RegressionData::new(y, DesignMatrices::new(x, names(2), s, names(1), None).unwrap()).unwrap()
}

/// y ~ ZABCS with logit α = k0 + k1 x, μ = exp(b0 + b1 x), σ = exp(t0).
#[allow(clippy::too_many_arguments)]
pub fn simulate_zabcs(
    family: DgfFamily,
    n: usize,
    kappa: [f64; 2],
    beta: [f64; 2],
    tau0: f64,
    lambda: f64,
    seed: u64,
    stream: u64,
) -> RegressionData {
    let mut r = rng(seed, stream);
    let x = covariate_matrix(n, &mut r);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let xi = x[(i, 1)];
            let alpha = 1.0 / (1.0 + (-(kappa[0] + kappa[1] * xi)).exp());
            let mu = (beta[0] + beta[1] * xi).exp();
            let p = BcsParams::new(mu, tau0.exp(), lambda).unwrap();
            Zabcs::new(ZabcsParams::new(alpha, p).unwrap(), family).sample_with(1, &mut r)[0]
        })
        .collect();
    let s = DMatrix::from_element(n, 1, 1.0);
    let design = DesignMatrices::new(x.clone(), names(2), s, names(1), Some((x, names(2)))).unwrap();
    RegressionData::new(y, design).unwrap()
}

/// Rows with positive responses as a plain BCS dataset.
pub fn positive_rows(data: &RegressionData) -> RegressionData {
    let idx: Vec<usize> = (0..data.n()).filter(|&i| data.y[i] > 0.0).collect();
    let d = &data.design;
    let design = DesignMatrices::new(
        d.x.select_rows(&idx),
        d.x_names.clone(),
        d.s.select_rows(&idx),
        d.s_names.clone(),
        None,
    )
    .unwrap();
    RegressionData::new(idx.iter().map(|&i| data.y[i]).collect(), design).unwrap()
}

#[test]
fn oracles_are_sane() {
    let v = integrate_upper(|x| (-x).exp(), 0.0);
    assert!((v - 1.0).abs() < 1e-12);
    let v = integrate_finite(|x| x.sqrt(), 0.0, 1.0);
    assert!((v - 2.0 / 3.0).abs() < 1e-12);
    assert!((student_t_cdf(1.0, 1.0) - 0.75).abs() < 1e-12);
    assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
}
