//! Least squares, ridge and Lasso on internally standardized inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const FALLBACK_RIDGE: f64 = 1e-8;
const LASSO_TOL: f64 = 1e-7;
const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    /// Coefficients on the original input scale.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Coefficients on unit-variance inputs.
    pub standardized: Vec<f64>,
    pub ridge_fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoFit {
    /// Coefficients on the original input scale.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Coefficients on unit-variance inputs (the solver's variables).
    pub standardized: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective `(1/2n)||y - X b||^2 + lambda ||b||_1` after each sweep.
    pub objective_history: Vec<f64>,
}

struct Standardized {
    x: DMatrix<f64>,
    means: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    sds: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
}

fn standardize(x: &DMatrix<f64>, y: &[f64]) -> Standardized {
    let (n, m) = x.shape();
    let mut xs = x.clone();
    let mut means = vec![0.0; m];
    let mut sds = vec![0.0; m];
    for j in 0..m {
        let col = x.column(j);
        let mu = col.mean();
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
        let constant = col.iter().all(|v| *v == col[0]);
        let sd = if constant { 0.0 } else { var.sqrt() };
        means[j] = mu;
        sds[j] = sd;
        for r in 0..n {
            xs[(r, j)] = if sd > 0.0 { (x[(r, j)] - mu) / sd } else { 0.0 };
        }
    }
    let y_mean = crate::numstats::mean(y);
    Standardized {
        x: xs,
        means,
        sds,
        y: y.iter().map(|v| v - y_mean).collect(),
        y_mean,
    }
}

fn to_original(s: &Standardized, beta_std: &[f64]) -> (Vec<f64>, f64) {
    let coef: Vec<f64> = beta_std
        .iter()
        .zip(&s.sds)
        .map(|(b, sd)| if *sd > 0.0 { b / sd } else { 0.0 })
        .collect();
    let intercept = s.y_mean - coef.iter().zip(&s.means).map(|(c, mu)| c * mu).sum::<f64>();
    (coef, intercept)
}

/// Ordinary (`lambda = 0`) or ridge least squares. The ridge penalty is
/// applied on standardized inputs when `standardize` is set, otherwise on
/// centered raw inputs.
pub fn least_squares(x: &DMatrix<f64>, y: &[f64], lambda: f64, standardize_inputs: bool) -> LinearFit {
    let s = standardize(x, y);
    let n = x.nrows() as f64;
    let m = x.ncols();
    let active: Vec<usize> = (0..m).filter(|&j| s.sds[j] > 0.0).collect();
    // Design columns: standardized, or centered raw if standardization is off.
    let scale: Vec<f64> = active
        .iter()
        .map(|&j| if standardize_inputs { 1.0 } else { s.sds[j] })
        .collect();
    let xa = DMatrix::from_fn(x.nrows(), active.len(), |r, k| s.x[(r, active[k])] * scale[k]);
    let yv = DVector::from_column_slice(&s.y);
    let gram = xa.transpose() * &xa / n;
    let rhs = xa.transpose() * yv / n;
    let solve = |ridge: f64| {
        let mut g = gram.clone();
        for k in 0..g.nrows() {
            g[(k, k)] += ridge;
        }
        g.cholesky().map(|c| c.solve(&rhs))
    };
    let (sol, ridge_fallback) = match solve(lambda) {
        Some(b) => (b, false),
        None => (
            solve(lambda + FALLBACK_RIDGE).unwrap_or_else(|| DVector::zeros(active.len())),
            true,
        ),
    };
    let mut beta_std = vec![0.0; m];
    for (k, &j) in active.iter().enumerate() {
        // Express on the standardized scale regardless of the fitting scale.
        beta_std[j] = sol[k] * scale[k];
    }
    let (coefficients, intercept) = to_original(&s, &beta_std);
    LinearFit {
        coefficients,
        intercept,
        standardized: beta_std,
        ridge_fallback,
    }
}

/// Smallest penalty that zeroes every Lasso coefficient: `max_j |x_j^T y| / n`
/// on standardized inputs and centered target.
pub fn lambda_max(x: &DMatrix<f64>, y: &[f64]) -> f64 {
    let s = standardize(x, y);
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| s.x.column(j).iter().zip(&s.y).map(|(a, b)| a * b).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for `(1/2n)||y - X b||^2 + lambda ||b||_1` with
/// columns standardized to unit variance and the target centered.
pub fn lasso_coordinate_descent(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<LassoFit> {
    let (n, m) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} rows but {} targets", y.len())));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", "must be non-negative"));
    }
    let s = standardize(x, y);
    let nf = n as f64;
    let mut beta = vec![0.0; m];
    let mut resid = s.y.clone();
    let objective = |resid: &[f64], beta: &[f64]| {
        resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * nf)
            + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..m {
            if s.sds[j] == 0.0 {
                continue;
            }
            let col = s.x.column(j);
            let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + beta[j];
            let updated = soft_threshold(rho, lambda);
            let delta = updated - beta[j];
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(col.iter()) {
                    *r -= delta * a;
                }
                beta[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        history.push(objective(&resid, &beta));
        if max_change < LASSO_TOL {
            converged = true;
            break;
        }
    }
    let (coefficients, intercept) = to_original(&s, &beta);
    Ok(LassoFit {
        coefficients,
        intercept,
        standardized: beta,
        sweeps,
        converged,
        objective_history: history,
    })
}
