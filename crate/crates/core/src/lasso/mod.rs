//! L1-penalized logistic regression and cross-validated λ selection.

mod cv;
mod design;
mod solver;
#[cfg(test)]
mod tests;

pub use cv::{
    cv_select_lambda, default_grid, fit_to_index, lambda_grid, CvOutcome, DEFAULT_GRID_RATIO,
    DEFAULT_GRID_SIZE,
};
pub use design::{BinaryDesign, DenseDesign, Design};
pub use solver::{
    fit_lasso_logistic, fit_lasso_logistic_with, fit_path, kkt_residual, lambda_max, objective,
    sigmoid, smooth_gradient, FitInfo, LogisticModel, SolverSettings,
};
