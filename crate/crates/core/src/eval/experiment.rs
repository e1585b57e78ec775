//! Repeated stratified cross-validation of the pipeline and the baselines.

use super::auc::compute_auc;
use super::baselines::{count_rules, fit_baseline, Baseline, BaselineSettings};
use super::report::{EvaluationReport, FoldAuc, RuleCount, Variant};
use crate::data::{FeatureMatrix, SplitPlan};
use crate::error::{Error, Result};
use crate::pipeline::{finish_pipeline, rank_rules, PipelineConfig, TrainingInfo};
use crate::seed::derive_seed;
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub m_values: Vec<usize>,
    pub baselines: Vec<Baseline>,
    /// Pipeline settings; `m` and `seed` are overridden per run.
    pub pipeline: PipelineConfig,
    pub baseline_settings: BaselineSettings,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m_values: vec![3, 5, 10, 15, 20],
            baselines: Baseline::ALL.to_vec(),
            pipeline: PipelineConfig::default(),
            baseline_settings: BaselineSettings::default(),
            seed: 42,
        }
    }
}

struct Cell {
    aucs: Vec<FoldAuc>,
    rules: Vec<RuleCount>,
}

fn run_cell(
    x: &FeatureMatrix,
    y: &[u8],
    plan: &SplitPlan,
    repeat: usize,
    fold: usize,
    config: &ExperimentConfig,
    dataset: &str,
) -> Result<Cell> {
    let (train, test) = plan.split(repeat, fold);
    let seed = derive_seed(config.seed, &[3, repeat as u64, fold as u64]);
    let test_labels: Vec<u8> = test.iter().map(|&i| y[i]).collect();
    let mut aucs = Vec::new();
    let mut rules = Vec::new();

    if !config.m_values.is_empty() {
        let x_train = x.select(&train);
        let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let pipeline_config = PipelineConfig {
            seed,
            ..config.pipeline.clone()
        };
        let ranked = rank_rules(&x_train, &y_train, &pipeline_config)?;
        for &m in &config.m_values {
            let selected = ranked.top(m)?;
            let info = TrainingInfo {
                dataset: dataset.to_string(),
                split: Some((repeat, fold)),
                config: PipelineConfig {
                    m,
                    ..pipeline_config.clone()
                },
                candidate_rules: ranked.candidate_count(),
                lambda: ranked.lambda,
                training_samples: train.len(),
            };
            let model = finish_pipeline(&x_train, &y_train, selected, &info.config.clone(), info)?;
            let mut weighted = Vec::with_capacity(test.len());
            let mut simple = Vec::with_capacity(test.len());
            for &i in &test {
                let trace = model.predict(x.row(i))?;
                simple.push(trace.simple_mean());
                weighted.push(trace.probability);
            }
            for (variant, scores) in [(Variant::Weighted, weighted), (Variant::SimpleMean, simple)]
            {
                aucs.push(FoldAuc {
                    variant,
                    m: Some(m),
                    repeat,
                    fold,
                    auc: compute_auc(&scores, &test_labels)?,
                });
            }
            rules.push(RuleCount {
                variant: Variant::Weighted,
                repeat,
                fold,
                rules: m,
            });
        }
    }

    for &kind in &config.baselines {
        let fitted = fit_baseline(
            kind,
            x,
            y,
            &train,
            &config.baseline_settings,
            derive_seed(seed, &[20 + kind as u64]),
        )?;
        aucs.push(FoldAuc {
            variant: Variant::Baseline(kind),
            m: None,
            repeat,
            fold,
            auc: compute_auc(&fitted.scores(x, &test), &test_labels)?,
        });
        rules.push(RuleCount {
            variant: Variant::Baseline(kind),
            repeat,
            fold,
            rules: count_rules(&fitted.forest),
        });
    }
    Ok(Cell { aucs, rules })
}

/// Trains and scores every variant on every repeat × fold cell of `plan`.
/// Cells run in parallel; the report does not depend on the thread count.
pub fn run_experiment(
    dataset: &str,
    x: &FeatureMatrix,
    y: &[u8],
    plan: &SplitPlan,
    config: &ExperimentConfig,
) -> Result<EvaluationReport> {
    if plan.n_samples() != x.n_rows() || y.len() != x.n_rows() {
        return Err(Error::Data(format!(
            "split plan covers {} samples, data has {} rows and {} labels",
            plan.n_samples(),
            x.n_rows(),
            y.len()
        )));
    }
    if config.m_values.contains(&0) {
        return Err(Error::InvalidParameter(
            "M values must be at least 1".into(),
        ));
    }
    let mut config = config.clone();
    config.m_values.sort_unstable();
    config.m_values.dedup();
    config.baselines.sort_unstable();
    config.baselines.dedup();
    let config = &config;
    let cells: Vec<(usize, usize)> = (0..plan.repeats)
        .flat_map(|r| (0..plan.folds).map(move |f| (r, f)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(r, f)| run_cell(x, y, plan, r, f, config, dataset))
        .collect::<Result<Vec<_>>>()?;
    let mut report = EvaluationReport {
        dataset: dataset.to_string(),
        repeats: plan.repeats,
        folds: plan.folds,
        m_values: config.m_values.clone(),
        baselines: config.baselines.clone(),
        aucs: Vec::new(),
        rule_counts: Vec::new(),
    };
    for cell in results {
        report.aucs.extend(cell.aucs);
        report.rule_counts.extend(cell.rules);
    }
    Ok(report)
}
