//! L1-penalized logistic regression by proximal Newton / coordinate descent.
//!
//! Minimizes
//!
//! ```text
//! (1/N) Σ_i [log(1 + e^{η_i}) − y_i η_i] + λ Σ_j |β_j|,   η_i = β_0 + x_i·β
//! ```
//!
//! with an unpenalized intercept. Each outer iteration builds the weighted
//! least-squares approximation of the log-likelihood at the current iterate,
//! solves its penalized version by cyclic coordinate descent, and accepts the
//! step only if the objective does not increase (halving it otherwise).

use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use super::design::Design;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
}

impl LogisticModel {
    pub fn null(n_features: usize, intercept: f64, lambda: f64) -> Self {
        LogisticModel {
            intercept,
            coefficients: vec![0.0; n_features],
            lambda,
        }
    }

    pub fn n_nonzero(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c != 0.0).count()
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }

    /// Linear predictor for every row of `x`.
    pub fn linear_predictors<D: Design>(&self, x: &D) -> Vec<f64> {
        let mut eta = vec![self.intercept; x.n_rows()];
        for (j, &b) in self.coefficients.iter().enumerate() {
            if b != 0.0 {
                x.axpy(j, b, &mut eta);
            }
        }
        eta
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Outer iterations stop once no coefficient moves by more than this.
    pub tolerance: f64,
    pub max_outer: usize,
    /// Coordinate sweeps per outer iteration stop once no coordinate moves
    /// by more than this, measured as `|Δβ_j| · sqrt(h_j)`.
    pub inner_tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-6,
            max_outer: 1000,
            inner_tolerance: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitInfo {
    pub outer_iterations: usize,
    /// Coordinate-descent sweeps summed over outer iterations.
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after each accepted outer iteration, starting with the
    /// initial point.
    pub objective_trace: Vec<f64>,
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn mean_loss(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &t)| softplus(e) - t * e)
        .sum::<f64>()
        / eta.len() as f64
}

/// Penalized objective of `model` on `(x, y)`.
pub fn objective<D: Design>(x: &D, y: &[u8], model: &LogisticModel) -> f64 {
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let eta = model.linear_predictors(x);
    mean_loss(&eta, &yf) + model.lambda * model.coefficients.iter().map(|b| b.abs()).sum::<f64>()
}

/// Gradient of the smooth part with respect to each coefficient.
pub fn smooth_gradient<D: Design>(x: &D, y: &[u8], model: &LogisticModel) -> Vec<f64> {
    let n = x.n_rows() as f64;
    let eta = model.linear_predictors(x);
    let resid: Vec<f64> = eta
        .iter()
        .zip(y)
        .map(|(&e, &t)| sigmoid(e) - t as f64)
        .collect();
    (0..x.n_cols()).map(|j| x.dot(j, &resid) / n).collect()
}

/// Largest KKT violation of `model`: `|g_j| − λ` over zero coefficients,
/// `|g_j + λ·sign(β_j)|` over nonzero ones, and the intercept gradient.
pub fn kkt_residual<D: Design>(x: &D, y: &[u8], model: &LogisticModel) -> f64 {
    let g = smooth_gradient(x, y, model);
    let eta = model.linear_predictors(x);
    let g0 = eta
        .iter()
        .zip(y)
        .map(|(&e, &t)| sigmoid(e) - t as f64)
        .sum::<f64>()
        / x.n_rows() as f64;
    g.iter()
        .zip(&model.coefficients)
        .map(|(&gj, &b)| {
            if b == 0.0 {
                (gj.abs() - model.lambda).max(0.0)
            } else {
                (gj + model.lambda * b.signum()).abs()
            }
        })
        .fold(g0.abs(), f64::max)
}

fn validate<D: Design>(x: &D, y: &[u8], lambda: f64) -> Result<f64> {
    if y.len() != x.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("design matrix"));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(pos as f64 / y.len() as f64)
}

/// Smallest λ at which every coefficient is zero:
/// `max_j |(1/N) Σ_i x_ij (y_i − ȳ)|`.
pub fn lambda_max<D: Design>(x: &D, y: &[u8]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().map(|&v| v as f64).sum::<f64>() / n;
    let centred: Vec<f64> = y.iter().map(|&v| v as f64 - mean).collect();
    (0..x.n_cols())
        .map(|j| (x.dot(j, &centred) / n).abs())
        .fold(0.0, f64::max)
}

pub fn fit_lasso_logistic<D: Design>(x: &D, y: &[u8], lambda: f64) -> Result<LogisticModel> {
    fit_lasso_logistic_with(x, y, lambda, None, &SolverSettings::default()).map(|(m, _)| m)
}

/// Fits at `lambda`, optionally warm-started from `start`.
pub fn fit_lasso_logistic_with<D: Design>(
    x: &D,
    y: &[u8],
    lambda: f64,
    start: Option<&LogisticModel>,
    settings: &SolverSettings,
) -> Result<(LogisticModel, FitInfo)> {
    let ybar = validate(x, y, lambda)?;
    let p = x.n_cols();
    let null_intercept = (ybar / (1.0 - ybar)).ln();
    if lambda >= lambda_max(x, y) {
        let model = LogisticModel::null(p, null_intercept, lambda);
        let obj = objective(x, y, &model);
        return Ok((
            model,
            FitInfo {
                outer_iterations: 0,
                sweeps: 0,
                converged: true,
                objective_trace: vec![obj],
            },
        ));
    }

    let mut model = match start {
        Some(m) if m.coefficients.len() == p => LogisticModel {
            lambda,
            ..m.clone()
        },
        _ => LogisticModel::null(p, null_intercept, lambda),
    };
    let n = x.n_rows();
    let nf = n as f64;
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let mut eta = model.linear_predictors(x);
    let penalty = |m: &LogisticModel| lambda * m.coefficients.iter().map(|b| b.abs()).sum::<f64>();
    let mut obj = mean_loss(&eta, &yf) + penalty(&model);
    let mut trace = vec![obj];

    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut hess = vec![0.0; p];
    let mut active: Vec<bool> = model.coefficients.iter().map(|&b| b != 0.0).collect();
    let mut converged = false;
    let mut outer = 0;
    let mut total_sweeps = 0;

    while outer < settings.max_outer {
        outer += 1;
        // Quadratic approximation: weights and working residuals.
        for i in 0..n {
            let pi = sigmoid(eta[i]);
            let wi = (pi * (1.0 - pi)).max(1e-5);
            w[i] = wi;
            r[i] = (yf[i] - pi) / wi;
        }
        let wsum: f64 = w.iter().sum();
        for (j, h) in hess.iter_mut().enumerate() {
            *h = x.weighted_sq(j, &w) / nf;
        }

        let mut cand = model.clone();
        let mut sweeps = 0;
        let mut full_sweep = true;
        let mut next_polish = 4;
        loop {
            sweeps += 1;
            let mut max_delta = 0.0f64;
            let mut support_changed = false;

            let d0 = r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / wsum;
            if d0 != 0.0 {
                cand.intercept += d0;
                r.iter_mut().for_each(|ri| *ri -= d0);
                max_delta = max_delta.max(d0.abs());
            }
            for j in 0..p {
                if !full_sweep && !active[j] {
                    continue;
                }
                let h = hess[j];
                let old = cand.coefficients[j];
                if h <= 0.0 {
                    // all-zero column: only the penalty sees this coordinate
                    cand.coefficients[j] = 0.0;
                    continue;
                }
                let z = x.weighted_dot(j, &w, &r) / nf + h * old;
                let new = soft_threshold(z, lambda) / h;
                if new != old {
                    support_changed |= (new == 0.0) != (old == 0.0);
                    let delta = new - old;
                    cand.coefficients[j] = new;
                    x.axpy(j, -delta, &mut r);
                    max_delta = max_delta.max(delta.abs() * h.sqrt());
                    active[j] = true;
                }
            }
            let done = max_delta < settings.inner_tolerance;
            if done && full_sweep {
                break;
            }
            if !done && !support_changed && sweeps >= next_polish {
                next_polish *= 2;
                if newton_polish(x, &w, wsum, &mut r, &mut cand, lambda) {
                    // Confirm with a full sweep, which also checks inactive
                    // coordinates, and try again soon.
                    next_polish = sweeps + 2;
                    full_sweep = true;
                    continue;
                }
            }
            // Alternate cheap sweeps over the active set with full sweeps
            // that let new coordinates enter.
            full_sweep = done;
            if sweeps >= settings.max_sweeps {
                break;
            }
        }
        total_sweeps += sweeps;

        // Step direction in coefficient space and in η.
        let step0 = cand.intercept - model.intercept;
        let step: Vec<f64> = cand
            .coefficients
            .iter()
            .zip(&model.coefficients)
            .map(|(c, m)| c - m)
            .collect();
        let mut d_eta = vec![step0; n];
        for (j, &s) in step.iter().enumerate() {
            if s != 0.0 {
                x.axpy(j, s, &mut d_eta);
            }
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial_eta: Vec<f64> = eta.iter().zip(&d_eta).map(|(e, d)| e + t * d).collect();
            let trial = if t == 1.0 {
                cand.clone()
            } else {
                LogisticModel {
                    intercept: model.intercept + t * step0,
                    coefficients: model
                        .coefficients
                        .iter()
                        .zip(&step)
                        .map(|(m, s)| m + t * s)
                        .collect(),
                    lambda,
                }
            };
            let trial_obj = mean_loss(&trial_eta, &yf) + penalty(&trial);
            if trial_obj <= obj {
                accepted = Some((trial, trial_eta, trial_obj));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_eta, next_obj)) = accepted else {
            converged = true;
            break;
        };
        let max_change = step
            .iter()
            .map(|s| (t * s).abs())
            .fold((t * step0).abs(), f64::max);
        model = next;
        eta = next_eta;
        obj = next_obj;
        trace.push(obj);
        if max_change < settings.tolerance {
            converged = true;
            break;
        }
    }

    if model.coefficients.iter().any(|b| !b.is_finite()) || !model.intercept.is_finite() {
        return Err(Error::NonFinite("fitted coefficients"));
    }
    Ok((
        model,
        FitInfo {
            outer_iterations: outer,
            sweeps: total_sweeps,
            converged,
            objective_trace: trace,
        },
    ))
}

/// Newton step on the inner quadratic restricted to the current nonzero
/// coordinates with their signs held fixed. Coordinates the step would push
/// through zero are dropped (set to zero) and the step recomputed on the
/// rest. The result is kept only if it lowers the inner objective.
fn newton_polish<D: Design>(
    x: &D,
    w: &[f64],
    wsum: f64,
    r: &mut [f64],
    cand: &mut LogisticModel,
    lambda: f64,
) -> bool {
    let nf = x.n_rows() as f64;
    let act: Vec<usize> = (0..cand.coefficients.len())
        .filter(|&j| cand.coefficients[j] != 0.0)
        .collect();
    let na = act.len();
    let gram = x.weighted_gram(&act, w);
    let cross: Vec<f64> = act.iter().map(|&j| x.dot(j, w) / nf).collect();
    let grad: Vec<f64> = act.iter().map(|&j| x.weighted_dot(j, w, r) / nf).collect();
    let grad0 = r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / nf;
    let beta: Vec<f64> = act.iter().map(|&j| cand.coefficients[j]).collect();

    let mut keep = vec![true; na];
    let mut solution: Option<(f64, Vec<f64>)> = None;
    for _ in 0..20 {
        let idx: Vec<usize> = (0..na).filter(|&a| keep[a]).collect();
        let dropped: Vec<usize> = (0..na).filter(|&a| !keep[a]).collect();
        let k = idx.len() + 1;
        let mut h = DMatrix::<f64>::zeros(k, k);
        let mut g = DVector::<f64>::zeros(k);
        // Gradient at the point where dropped coordinates are already zero.
        let shift = |row: usize| -> f64 {
            dropped
                .iter()
                .map(|&d| gram[row * na + d] * beta[d])
                .sum::<f64>()
                / nf
        };
        h[(0, 0)] = wsum / nf;
        g[0] = grad0 + dropped.iter().map(|&d| cross[d] * beta[d]).sum::<f64>();
        for (p, &a) in idx.iter().enumerate() {
            h[(0, p + 1)] = cross[a];
            h[(p + 1, 0)] = cross[a];
            for (q, &b) in idx.iter().enumerate() {
                h[(p + 1, q + 1)] = gram[a * na + b] / nf;
            }
            g[p + 1] = grad[a] + shift(a) - lambda * beta[a].signum();
        }
        // Leaf rules of one tree sum to the intercept column, so the reduced
        // Hessian is often singular; a tiny ridge keeps the factorization alive.
        let ridge = 1e-9 * h.trace() / k as f64;
        for d in 0..k {
            h[(d, d)] += ridge;
        }
        let Some(chol) = h.cholesky() else {
            return false;
        };
        let step = chol.solve(&g);
        if step.iter().any(|s| !s.is_finite()) {
            return false;
        }
        let mut flipped = false;
        let mut new_beta = vec![0.0; na];
        for (p, &a) in idx.iter().enumerate() {
            let nb = beta[a] + step[p + 1];
            if nb == 0.0 || nb.signum() != beta[a].signum() {
                keep[a] = false;
                flipped = true;
            }
            new_beta[a] = nb;
        }
        if !flipped {
            solution = Some((step[0], new_beta));
            break;
        }
    }
    let Some((d0, new_beta)) = solution else {
        return false;
    };

    let inner_objective = |r: &[f64], m: &LogisticModel| {
        r.iter().zip(w).map(|(ri, wi)| wi * ri * ri).sum::<f64>() / (2.0 * nf)
            + lambda * m.coefficients.iter().map(|b| b.abs()).sum::<f64>()
    };
    let before = inner_objective(r, cand);
    let mut trial_r = r.to_vec();
    let mut trial = cand.clone();
    trial.intercept += d0;
    trial_r.iter_mut().for_each(|ri| *ri -= d0);
    for (a, &j) in act.iter().enumerate() {
        trial.coefficients[j] = new_beta[a];
        x.axpy(j, -(new_beta[a] - beta[a]), &mut trial_r);
    }
    if inner_objective(&trial_r, &trial) > before {
        return false;
    }
    r.copy_from_slice(&trial_r);
    *cand = trial;
    true
}

/// Fits a decreasing λ sequence, warm-starting each fit from the previous.
pub fn fit_path<D: Design>(
    x: &D,
    y: &[u8],
    lambdas: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<LogisticModel>> {
    let mut out: Vec<LogisticModel> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let (m, _) = fit_lasso_logistic_with(x, y, lambda, out.last(), settings)?;
        out.push(m);
    }
    Ok(out)
}
