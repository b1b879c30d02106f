//! Quasi-Newton maximization with a Newton polish on a finite-difference Hessian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Convergence when the sup-norm of the gradient falls below this.
    pub gtol: f64,
    /// Largest sup-norm of a single trial step.
    pub max_step: f64,
    pub newton_polish: bool,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-6,
            max_step: 5.0,
            newton_polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub theta: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub status: OptimStatus,
}

impl OptimResult {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.amax()
    }
}

/// Central-difference Jacobian of `grad`, symmetrized. Step h_j = 1e-5·max(1, |θ_j|).
pub fn numeric_hessian<G>(grad: G, theta: &DVector<f64>) -> Option<DMatrix<f64>>
where
    G: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let p = theta.len();
    let mut h = DMatrix::zeros(p, p);
    for j in 0..p {
        let step = 1e-5 * theta[j].abs().max(1.0);
        let mut tp = theta.clone();
        tp[j] += step;
        let mut tm = theta.clone();
        tm[j] -= step;
        let gp = grad(&tp)?;
        let gm = grad(&tm)?;
        let col = (gp - gm) / (2.0 * step);
        h.set_column(j, &col);
    }
    Some((&h + h.transpose()) * 0.5)
}

/// Maximizes `f` from `x0`. `f` returns `None` outside the parameter space.
pub fn maximize<F, G>(f: F, grad: G, x0: &DVector<f64>, opts: &OptimOptions) -> Option<OptimResult>
where
    F: Fn(&DVector<f64>) -> Option<f64>,
    G: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let p = x0.len();
    let mut x = x0.clone();
    let mut fx = f(&x).filter(|v| v.is_finite())?;
    let mut g = grad(&x)?;
    // inverse Hessian approximation of −f
    let mut hinv = DMatrix::<f64>::identity(p, p);
    let mut first = true;
    let mut iterations = 0;
    let mut status = OptimStatus::MaxIterations;
    let mut stalled = 0;

    while iterations < opts.max_iter {
        if g.amax() <= opts.gtol {
            status = OptimStatus::Converged;
            break;
        }
        iterations += 1;
        // ascent direction for f
        let mut d = &hinv * &g;
        if d.dot(&g) <= 0.0 || !d.iter().all(|v| v.is_finite()) {
            hinv = DMatrix::identity(p, p);
            d = g.clone();
        }
        let dmax = d.amax();
        if dmax > opts.max_step {
            d *= opts.max_step / dmax;
        }
        let slope = d.dot(&g);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xt = &x + &d * t;
            if let Some(ft) = f(&xt).filter(|v| v.is_finite()) {
                if ft >= fx + 1e-4 * t * slope {
                    accepted = Some((xt, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            if first {
                status = OptimStatus::LineSearchFailed;
                break;
            }
            // restart from steepest ascent once before giving up
            hinv = DMatrix::identity(p, p);
            first = true;
            continue;
        };
        let Some(gn) = grad(&xn) else {
            status = OptimStatus::LineSearchFailed;
            break;
        };
        let s = &xn - &x;
        // y for the minimization of −f
        let y = &g - &gn;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first {
                let scale = sy / y.dot(&y);
                hinv = DMatrix::identity(p, p) * scale;
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            // BFGS inverse update
            hinv += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            first = false;
        }
        let gain = fn_ - fx;
        x = xn;
        fx = fn_;
        g = gn;
        if gain.abs() <= 1e-14 * fx.abs().max(1.0) {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        } else {
            stalled = 0;
        }
    }

    let mut result = OptimResult {
        theta: x,
        value: fx,
        gradient: g,
        iterations,
        status,
    };
    if opts.newton_polish && result.gradient.amax() > opts.gtol * 1e-2 {
        newton_polish(&f, &grad, &mut result, opts);
    }
    if result.gradient.amax() <= opts.gtol {
        result.status = OptimStatus::Converged;
    } else if result.status == OptimStatus::Converged {
        result.status = OptimStatus::LineSearchFailed;
    }
    Some(result)
}

fn newton_polish<F, G>(f: &F, grad: &G, res: &mut OptimResult, opts: &OptimOptions)
where
    F: Fn(&DVector<f64>) -> Option<f64>,
    G: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    for _ in 0..20 {
        let gnorm = res.gradient.amax();
        if gnorm <= opts.gtol * 1e-2 {
            return;
        }
        let Some(h) = numeric_hessian(grad, &res.theta) else {
            return;
        };
        // only polish where the surface is locally concave
        let neg = -h;
        let Some(chol) = neg.cholesky() else {
            return;
        };
        let step = chol.solve(&res.gradient);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let xt = &res.theta + &step * t;
            if let (Some(ft), Some(gt)) = (f(&xt), grad(&xt)) {
                if ft.is_finite()
                    && ft >= res.value - 1e-12 * res.value.abs().max(1.0)
                    && gt.amax() < gnorm
                {
                    res.theta = xt;
                    res.value = ft;
                    res.gradient = gt;
                    res.iterations += 1;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            return;
        }
    }
}
