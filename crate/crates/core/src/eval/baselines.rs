//! Reference classifiers: a tuned deep random forest, a small random forest
//! and a tuned single decision tree.

use super::auc::compute_auc;
use crate::data::{stratified_folds, FeatureMatrix};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::tree::{fit_forest, Forest, ForestParams};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Baseline {
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "rf-simple")]
    SimpleForest,
    #[serde(rename = "dt")]
    DecisionTree,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [
        Baseline::RandomForest,
        Baseline::SimpleForest,
        Baseline::DecisionTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::RandomForest => "rf",
            Baseline::SimpleForest => "rf-simple",
            Baseline::DecisionTree => "dt",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown baseline `{s}` (expected rf, rf-simple or dt)"
                ))
            })
    }
}

/// Hyperparameters of the reference classifiers. The `*_grid` entries are
/// tuned by inner cross-validated AUC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSettings {
    pub rf_trees_grid: Vec<usize>,
    pub rf_max_depth: usize,
    pub rf_min_leaf: usize,
    pub simple_trees: usize,
    pub simple_max_depth: usize,
    pub dt_min_leaf_grid: Vec<usize>,
    pub dt_max_depth: usize,
    pub inner_folds: usize,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings {
            rf_trees_grid: vec![50, 100, 200],
            rf_max_depth: 25,
            rf_min_leaf: 1,
            simple_trees: 5,
            simple_max_depth: 3,
            dt_min_leaf_grid: vec![1, 5, 10],
            dt_max_depth: 25,
            inner_folds: 3,
        }
    }
}

/// A fitted baseline and the grid value picked for it, if any.
#[derive(Clone, Debug)]
pub struct FittedBaseline {
    pub kind: Baseline,
    pub forest: Forest,
    pub chosen: Option<usize>,
}

/// Number of rules a tree model encodes: its total leaf count.
pub fn count_rules(forest: &Forest) -> usize {
    forest.n_leaves()
}

fn forest_scores(forest: &Forest, x: &FeatureMatrix, rows: &[usize]) -> Vec<f64> {
    rows.iter()
        .map(|&i| forest.predict_proba_unchecked(x.row(i)))
        .collect()
}

/// Mean inner-fold AUC of each candidate; `fit(train)` returns one model per
/// candidate.
fn inner_cv<F>(
    x: &FeatureMatrix,
    y: &[u8],
    rows: &[usize],
    folds: usize,
    seed: u64,
    candidates: usize,
    fit: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[usize]) -> Result<Vec<Forest>>,
{
    let labels: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    let assignment = stratified_folds(&labels, folds, seed)?;
    let mut total = vec![0.0; candidates];
    let mut used = 0;
    for f in 0..folds {
        let (inner_train, inner_test): (Vec<usize>, Vec<usize>) =
            (0..rows.len()).partition(|&k| assignment[k] != f);
        let train: Vec<usize> = inner_train.iter().map(|&k| rows[k]).collect();
        let test: Vec<usize> = inner_test.iter().map(|&k| rows[k]).collect();
        let test_labels: Vec<u8> = test.iter().map(|&i| y[i]).collect();
        if !test_labels.contains(&0) || !test_labels.contains(&1) {
            continue;
        }
        let models = fit(&train)?;
        for (t, m) in total.iter_mut().zip(&models) {
            *t += compute_auc(&forest_scores(m, x, &test), &test_labels)?;
        }
        used += 1;
    }
    Ok(total.iter().map(|t| t / used.max(1) as f64).collect())
}

/// Index of the largest value; ties go to the earliest.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

fn fit_random_forest(
    x: &FeatureMatrix,
    y: &[u8],
    rows: &[usize],
    s: &BaselineSettings,
    seed: u64,
) -> Result<FittedBaseline> {
    let mut grid = s.rf_trees_grid.clone();
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::InvalidParameter(
            "tree-count grid must hold positive values".into(),
        ));
    }
    grid.sort_unstable();
    grid.dedup();
    let params = |n_trees| ForestParams {
        n_trees,
        max_depth: s.rf_max_depth,
        feature_subset_size: None,
        min_leaf: s.rf_min_leaf,
        bootstrap: true,
        seed,
    };
    let largest = *grid.last().expect("non-empty grid");
    // Forests are prefix-stable, so one forest of the largest size yields
    // every smaller candidate by truncation.
    let chosen = if grid.len() == 1 {
        largest
    } else {
        let scores = inner_cv(
            x,
            y,
            rows,
            s.inner_folds,
            derive_seed(seed, &[1]),
            grid.len(),
            |train| {
                let full = fit_forest(x, y, train, &params(largest))?;
                Ok(grid.iter().map(|&n| full.truncated(n)).collect())
            },
        )?;
        grid[argmax(&scores)]
    };
    Ok(FittedBaseline {
        kind: Baseline::RandomForest,
        forest: fit_forest(x, y, rows, &params(chosen))?,
        chosen: Some(chosen),
    })
}

fn fit_decision_tree(
    x: &FeatureMatrix,
    y: &[u8],
    rows: &[usize],
    s: &BaselineSettings,
    seed: u64,
) -> Result<FittedBaseline> {
    let mut grid = s.dt_min_leaf_grid.clone();
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::InvalidParameter(
            "min-leaf grid must hold positive values".into(),
        ));
    }
    grid.sort_unstable();
    grid.dedup();
    let params = |min_leaf| ForestParams {
        n_trees: 1,
        max_depth: s.dt_max_depth,
        feature_subset_size: Some(x.n_cols()),
        min_leaf,
        bootstrap: false,
        seed,
    };
    let chosen = if grid.len() == 1 {
        grid[0]
    } else {
        let scores = inner_cv(
            x,
            y,
            rows,
            s.inner_folds,
            derive_seed(seed, &[1]),
            grid.len(),
            |train| {
                grid.iter()
                    .map(|&m| fit_forest(x, y, train, &params(m)))
                    .collect()
            },
        )?;
        grid[argmax(&scores)]
    };
    Ok(FittedBaseline {
        kind: Baseline::DecisionTree,
        forest: fit_forest(x, y, rows, &params(chosen))?,
        chosen: Some(chosen),
    })
}

pub fn fit_baseline(
    kind: Baseline,
    x: &FeatureMatrix,
    y: &[u8],
    rows: &[usize],
    settings: &BaselineSettings,
    seed: u64,
) -> Result<FittedBaseline> {
    match kind {
        Baseline::RandomForest => fit_random_forest(x, y, rows, settings, seed),
        Baseline::DecisionTree => fit_decision_tree(x, y, rows, settings, seed),
        Baseline::SimpleForest => {
            let params = ForestParams {
                n_trees: settings.simple_trees,
                max_depth: settings.simple_max_depth,
                feature_subset_size: None,
                min_leaf: 1,
                bootstrap: true,
                seed,
            };
            Ok(FittedBaseline {
                kind,
                forest: fit_forest(x, y, rows, &params)?,
                chosen: None,
            })
        }
    }
}

impl FittedBaseline {
    pub fn scores(&self, x: &FeatureMatrix, rows: &[usize]) -> Vec<f64> {
        forest_scores(&self.forest, x, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{SplitTest, TreeNode};

    #[test]
    fn complete_depth_three_tree_has_eight_rules() {
        fn complete(depth: usize) -> TreeNode {
            if depth == 0 {
                TreeNode::leaf([1, 0])
            } else {
                TreeNode::Split {
                    feature: 0,
                    test: SplitTest::Threshold(depth as f64),
                    left: Box::new(complete(depth - 1)),
                    right: Box::new(complete(depth - 1)),
                }
            }
        }
        let forest = Forest {
            params: ForestParams::default(),
            trees: vec![complete(3)],
        };
        assert_eq!(count_rules(&forest), 8);
    }

    #[test]
    fn names_round_trip() {
        for b in Baseline::ALL {
            assert_eq!(b.name().parse::<Baseline>().unwrap(), b);
        }
        assert!("svm".parse::<Baseline>().is_err());
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[0.5, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.9, 0.1]), 0);
    }
}
