//! Choosing λ by stratified k-fold cross-validation.

use super::design::Design;
use super::solver::{fit_lasso_logistic_with, lambda_max, sigmoid, LogisticModel, SolverSettings};
use crate::data::stratified_folds;
use crate::error::{Error, Result};

pub const DEFAULT_GRID_SIZE: usize = 50;
pub const DEFAULT_GRID_RATIO: f64 = 1e-3;

/// `size` log-spaced values from `max` down to `max * ratio`.
pub fn lambda_grid(max: f64, size: usize, ratio: f64) -> Vec<f64> {
    match size {
        0 => Vec::new(),
        1 => vec![max],
        _ => {
            let step = ratio.ln() / (size - 1) as f64;
            (0..size).map(|k| max * (step * k as f64).exp()).collect()
        }
    }
}

/// The default grid for `(x, y)`: 50 values from λ_max to λ_max / 1000.
pub fn default_grid<D: Design>(x: &D, y: &[u8]) -> Vec<f64> {
    lambda_grid(lambda_max(x, y), DEFAULT_GRID_SIZE, DEFAULT_GRID_RATIO)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub lambda: f64,
    /// Index of `lambda` in the grid.
    pub index: usize,
    /// Pooled out-of-fold binomial deviance per grid value.
    pub deviance: Vec<f64>,
}

fn binomial_deviance(eta: f64, y: u8) -> f64 {
    let p = sigmoid(eta).clamp(1e-15, 1.0 - 1e-15);
    if y == 1 {
        -2.0 * p.ln()
    } else {
        -2.0 * (1.0 - p).ln()
    }
}

/// Picks the grid λ with the lowest mean held-out deviance. Ties go to the
/// larger λ. The grid must be non-empty and non-increasing.
pub fn cv_select_lambda<D: Design>(
    x: &D,
    y: &[u8],
    folds: usize,
    grid: &[f64],
    seed: u64,
    settings: &SolverSettings,
) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(
            "lambda grid must be descending".into(),
        ));
    }
    if grid.len() == 1 {
        return Ok(CvOutcome {
            lambda: grid[0],
            index: 0,
            deviance: vec![f64::NAN],
        });
    }
    let assignment = stratified_folds(y, folds, seed)?;
    let mut total = vec![0.0; grid.len()];
    for fold in 0..folds {
        let (train, test): (Vec<usize>, Vec<usize>) =
            (0..y.len()).partition(|&i| assignment[i] != fold);
        if test.is_empty() {
            continue;
        }
        let x_train = x.subset(&train);
        let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let x_test = x.subset(&test);
        let mut prev: Option<LogisticModel> = None;
        for (k, &lambda) in grid.iter().enumerate() {
            let (model, _) =
                fit_lasso_logistic_with(&x_train, &y_train, lambda, prev.as_ref(), settings)?;
            let eta = model.linear_predictors(&x_test);
            total[k] += eta
                .iter()
                .zip(&test)
                .map(|(&e, &i)| binomial_deviance(e, y[i]))
                .sum::<f64>();
            prev = Some(model);
        }
    }
    let deviance: Vec<f64> = total.iter().map(|t| t / y.len() as f64).collect();
    let mut index = 0;
    for (k, &d) in deviance.iter().enumerate() {
        if d < deviance[index] {
            index = k;
        }
    }
    Ok(CvOutcome {
        lambda: grid[index],
        index,
        deviance,
    })
}

/// Fits the path `grid[..=index]` with warm starts and returns the last model.
pub fn fit_to_index<D: Design>(
    x: &D,
    y: &[u8],
    grid: &[f64],
    index: usize,
    settings: &SolverSettings,
) -> Result<LogisticModel> {
    let mut prev: Option<LogisticModel> = None;
    for &lambda in &grid[..=index] {
        let (m, _) = fit_lasso_logistic_with(x, y, lambda, prev.as_ref(), settings)?;
        prev = Some(m);
    }
    Ok(prev.expect("grid index within bounds"))
}
