//! End-to-end training: forest, rules, selection, correctness models.

use crate::correctness::{
    build_correctness_labels, fit_correctness_models, CorrectnessConfig, CorrectnessModelSet,
    DEFAULT_THRESHOLD,
};
use crate::data::{FeatureMatrix, FeatureSpec};
use crate::error::{Error, Result};
use crate::lasso::{cv_select_lambda, default_grid, fit_to_index, BinaryDesign, SolverSettings};
use crate::predictor::{predict_sample, PredictionTrace, WeightScheme};
use crate::rules::{build_condition_matrix, dedup_rules, extract_forest_rules, Rule};
use crate::seed::derive_seed;
use crate::selection::{select_top_rules, SelectedRuleSet};
use crate::tree::{fit_forest, ForestParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Number of rules to keep.
    pub m: usize,
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub weights: WeightScheme,
    /// Inner folds for choosing λ, both for rule selection and for the
    /// correctness models.
    pub cv_folds: usize,
    pub threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            m: 10,
            n_trees: 100,
            max_depth: 3,
            seed: 42,
            weights: WeightScheme::default(),
            cv_folds: 3,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl PipelineConfig {
    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        if self.n_trees == 0 || self.max_depth == 0 {
            return Err(Error::InvalidParameter(
                "trees and max depth must be at least 1".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidParameter(
                "cross-validation needs at least 2 folds".into(),
            ));
        }
        WeightScheme::new(self.weights.weight_correct, self.weights.weight_incorrect)?;
        Ok(())
    }

    fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            seed: derive_seed(self.seed, &[10]),
            ..ForestParams::default()
        }
    }

    fn correctness_config(&self) -> CorrectnessConfig {
        CorrectnessConfig {
            cv_folds: self.cv_folds,
            threshold: self.threshold,
            seed: derive_seed(self.seed, &[12]),
            ..CorrectnessConfig::default()
        }
    }
}

/// Where a model came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub dataset: String,
    /// `(repeat, fold)` when trained inside cross-validation.
    pub split: Option<(usize, usize)>,
    pub config: PipelineConfig,
    /// Rules left after deduplication (P).
    pub candidate_rules: usize,
    /// Penalty chosen for rule selection.
    pub lambda: f64,
    pub training_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub features: Vec<FeatureSpec>,
    /// Display names of class 0 and class 1.
    pub class_names: [String; 2],
    pub selected: SelectedRuleSet,
    pub correctness: CorrectnessModelSet,
    /// Share of training samples on which each selected rule was right.
    pub correctness_rates: Vec<f64>,
    pub weights: WeightScheme,
    pub info: TrainingInfo,
}

impl PipelineModel {
    pub fn m(&self) -> usize {
        self.selected.len()
    }

    pub fn k(&self) -> usize {
        self.selected.feature_union.len()
    }

    pub fn predict(&self, sample: &[f64]) -> Result<PredictionTrace> {
        predict_sample(self, sample)
    }

    pub fn class_name_refs(&self) -> [&str; 2] {
        [&self.class_names[0], &self.class_names[1]]
    }

    pub fn rule_text(&self, index: usize) -> String {
        self.selected.rules[index]
            .display(&self.features, self.class_name_refs())
            .to_string()
    }
}

/// Every deduplicated rule ranked by selection-coefficient magnitude.
#[derive(Clone, Debug)]
pub struct RankedRules {
    pub ranked: SelectedRuleSet,
    pub lambda: f64,
}

impl RankedRules {
    pub fn candidate_count(&self) -> usize {
        self.ranked.len()
    }

    pub fn top(&self, m: usize) -> Result<SelectedRuleSet> {
        self.ranked.prefix(m)
    }
}

/// Grows the forest, extracts and deduplicates rules, and fits the
/// cross-validated LASSO on the condition matrix.
pub fn rank_rules(x: &FeatureMatrix, y: &[u8], config: &PipelineConfig) -> Result<RankedRules> {
    config.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::Data(format!(
            "{} labels for {} samples",
            y.len(),
            x.n_rows()
        )));
    }
    let all: Vec<usize> = (0..x.n_rows()).collect();
    let forest = fit_forest(x, y, &all, &config.forest_params())?;
    let rules: Vec<Rule> = dedup_rules(extract_forest_rules(&forest, x.specs()));
    let matrix = build_condition_matrix(&rules, x.rows())?;
    let design = BinaryDesign::new(matrix.n_rows(), matrix.into_columns());
    let grid = default_grid(&design, y);
    let settings = SolverSettings::default();
    let cv = cv_select_lambda(
        &design,
        y,
        config.cv_folds,
        &grid,
        derive_seed(config.seed, &[11]),
        &settings,
    )?;
    let model = fit_to_index(&design, y, &grid, cv.index, &settings)?;
    Ok(RankedRules {
        ranked: select_top_rules(&model, &rules, rules.len())?,
        lambda: cv.lambda,
    })
}

/// Fits the correctness models for an already selected rule set.
pub fn finish_pipeline(
    x: &FeatureMatrix,
    y: &[u8],
    selected: SelectedRuleSet,
    config: &PipelineConfig,
    info: TrainingInfo,
) -> Result<PipelineModel> {
    let labels = build_correctness_labels(&selected, x, y)?;
    let correctness = fit_correctness_models(x, &selected, &labels, &config.correctness_config())?;
    Ok(PipelineModel {
        features: x.specs().to_vec(),
        class_names: ["negative".into(), "positive".into()],
        correctness_rates: labels.rates(),
        selected,
        correctness,
        weights: config.weights,
        info,
    })
}

pub fn train_pipeline(
    x: &FeatureMatrix,
    y: &[u8],
    config: &PipelineConfig,
) -> Result<PipelineModel> {
    let ranked = rank_rules(x, y, config)?;
    let selected = ranked.top(config.m)?;
    let info = TrainingInfo {
        dataset: String::new(),
        split: None,
        config: config.clone(),
        candidate_rules: ranked.candidate_count(),
        lambda: ranked.lambda,
        training_samples: x.n_rows(),
    };
    finish_pipeline(x, y, selected, config, info)
}
