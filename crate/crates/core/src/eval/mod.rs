//! Cross-validated comparison of the rule pipeline against tree baselines.

mod auc;
mod baselines;
mod experiment;
mod report;

pub use auc::compute_auc;
pub use baselines::{count_rules, fit_baseline, Baseline, BaselineSettings, FittedBaseline};
pub use experiment::{run_experiment, ExperimentConfig};
pub use report::{
    mean_ci, AveragingRow, EvaluationReport, FoldAuc, RuleCount, SummaryRow, Variant,
};
