//! Per-rule classifiers that predict whether a rule's output will be right.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::lasso::{
    cv_select_lambda, fit_to_index, lambda_grid, lambda_max, DenseDesign, LogisticModel,
    SolverSettings, DEFAULT_GRID_RATIO, DEFAULT_GRID_SIZE,
};
use crate::selection::SelectedRuleSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// N×M matrix; entry `(n, m)` is 1 iff rule `m`'s output equals the label of
/// sample `n`. Stored one column per rule.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectnessLabels {
    pub columns: Vec<Vec<u8>>,
}

impl CorrectnessLabels {
    pub fn n_rules(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, sample: usize, rule: usize) -> u8 {
        self.columns[rule][sample]
    }

    /// Fraction of samples on which each rule is correct.
    pub fn rates(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| c.iter().map(|&v| v as f64).sum::<f64>() / c.len().max(1) as f64)
            .collect()
    }
}

pub fn build_correctness_labels(
    rules: &SelectedRuleSet,
    x: &FeatureMatrix,
    labels: &[u8],
) -> Result<CorrectnessLabels> {
    if labels.len() != x.n_rows() {
        return Err(Error::Data(format!(
            "{} labels for {} samples",
            labels.len(),
            x.n_rows()
        )));
    }
    let needed = rules
        .rules
        .iter()
        .map(|r| r.required_features())
        .max()
        .unwrap_or(0);
    if x.n_cols() < needed {
        return Err(Error::FeatureCount {
            expected: needed,
            got: x.n_cols(),
        });
    }
    let columns = rules
        .rules
        .iter()
        .map(|rule| {
            x.rows()
                .zip(labels)
                .map(|(s, &y)| (rule.output_unchecked(s) == y) as u8)
                .collect()
        })
        .collect();
    Ok(CorrectnessLabels { columns })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectnessModel {
    /// Training labels held a single value; always predicts it.
    Constant { correct: u8 },
    /// Coefficients act on the raw feature values listed in the set's
    /// `feature_union`.
    Logistic { model: LogisticModel },
}

impl CorrectnessModel {
    /// Probability that the rule is correct, given the K union features.
    pub fn probability(&self, features: &[f64]) -> f64 {
        match self {
            CorrectnessModel::Constant { correct } => *correct as f64,
            CorrectnessModel::Logistic { model } => model.predict_proba(features),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessModelSet {
    pub models: Vec<CorrectnessModel>,
    pub feature_union: Vec<usize>,
    pub threshold: f64,
}

impl CorrectnessModelSet {
    fn gather(&self, sample: &[f64]) -> Result<Vec<f64>> {
        let needed = self.feature_union.last().map_or(0, |&f| f + 1);
        if sample.len() < needed {
            return Err(Error::FeatureCount {
                expected: needed,
                got: sample.len(),
            });
        }
        Ok(self.feature_union.iter().map(|&f| sample[f]).collect())
    }

    /// Probability of correctness for each rule.
    pub fn probabilities(&self, sample: &[f64]) -> Result<Vec<f64>> {
        let z = self.gather(sample)?;
        Ok(self.models.iter().map(|m| m.probability(&z)).collect())
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectnessConfig {
    pub cv_folds: usize,
    pub grid_size: usize,
    pub grid_ratio: f64,
    pub threshold: f64,
    pub seed: u64,
    pub solver: SolverSettings,
}

impl Default for CorrectnessConfig {
    fn default() -> Self {
        CorrectnessConfig {
            cv_folds: 3,
            grid_size: DEFAULT_GRID_SIZE,
            grid_ratio: DEFAULT_GRID_RATIO,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
            solver: SolverSettings::default(),
        }
    }
}

/// Column-standardized copy of the union features, plus the means and
/// scales needed to map coefficients back. Constant columns become zero.
fn standardized(x: &FeatureMatrix, features: &[usize]) -> (DenseDesign, Vec<f64>, Vec<f64>) {
    let n = x.n_rows() as f64;
    let mut means = Vec::with_capacity(features.len());
    let mut scales = Vec::with_capacity(features.len());
    let columns = features
        .iter()
        .map(|&f| {
            let raw: Vec<f64> = x.rows().map(|r| r[f]).collect();
            let mean = raw.iter().sum::<f64>() / n;
            let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            means.push(mean);
            scales.push(sd);
            if sd > 0.0 {
                raw.iter().map(|v| (v - mean) / sd).collect()
            } else {
                vec![0.0; raw.len()]
            }
        })
        .collect();
    (
        DenseDesign::from_columns(x.n_rows(), columns),
        means,
        scales,
    )
}

fn fit_one(
    design: &DenseDesign,
    means: &[f64],
    scales: &[f64],
    y: &[u8],
    config: &CorrectnessConfig,
) -> Result<CorrectnessModel> {
    let positives = y.iter().filter(|&&v| v == 1).count();
    if positives == 0 || positives == y.len() {
        return Ok(CorrectnessModel::Constant {
            correct: (positives > 0) as u8,
        });
    }
    let grid = lambda_grid(lambda_max(design, y), config.grid_size, config.grid_ratio);
    // A class too small to appear in every inner fold leaves nothing to
    // cross-validate; fall back to the most penalized grid value.
    let index = if positives.min(y.len() - positives) < config.cv_folds {
        0
    } else {
        cv_select_lambda(
            design,
            y,
            config.cv_folds,
            &grid,
            config.seed,
            &config.solver,
        )?
        .index
    };
    let fitted = fit_to_index(design, y, &grid, index, &config.solver)?;
    let mut intercept = fitted.intercept;
    let coefficients = fitted
        .coefficients
        .iter()
        .zip(means.iter().zip(scales))
        .map(|(&b, (&mean, &sd))| {
            if sd > 0.0 && b != 0.0 {
                intercept -= b * mean / sd;
                b / sd
            } else {
                0.0
            }
        })
        .collect();
    Ok(CorrectnessModel::Logistic {
        model: LogisticModel {
            intercept,
            coefficients,
            lambda: fitted.lambda,
        },
    })
}

/// Fits one L1 logistic model per rule on the K features used by the rule
/// set, with λ chosen by cross-validation.
pub fn fit_correctness_models(
    x: &FeatureMatrix,
    rules: &SelectedRuleSet,
    labels: &CorrectnessLabels,
    config: &CorrectnessConfig,
) -> Result<CorrectnessModelSet> {
    if labels.n_rules() != rules.len() {
        return Err(Error::InvalidParameter(format!(
            "{} label columns for {} rules",
            labels.n_rules(),
            rules.len()
        )));
    }
    if !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {}",
            config.threshold
        )));
    }
    let (design, means, scales) = standardized(x, &rules.feature_union);
    let models = labels
        .columns
        .par_iter()
        .map(|y| fit_one(&design, &means, &scales, y, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrectnessModelSet {
        models,
        feature_union: rules.feature_union.clone(),
        threshold: config.threshold,
    })
}

/// Entry `m` is 1 iff model `m` gives probability ≥ threshold.
pub fn predict_correctness(models: &CorrectnessModelSet, sample: &[f64]) -> Result<Vec<u8>> {
    Ok(models
        .probabilities(sample)?
        .into_iter()
        .map(|p| (p >= models.threshold) as u8)
        .collect())
}
