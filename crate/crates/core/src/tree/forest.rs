use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{fit_tree, TreeNode, TreeParams};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features drawn per node; `None` means `ceil(sqrt(D))`.
    pub feature_subset_size: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 3,
            feature_subset_size: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub fn subset_size(&self, n_features: usize) -> usize {
        self.feature_subset_size
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub trees: Vec<TreeNode>,
}

/// Seed of tree `index`; independent of how many trees are grown, so a
/// forest's first `k` trees equal a `k`-tree forest with the same seed.
fn tree_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, &[2, index as u64])
}

pub fn fit_forest(
    x: &FeatureMatrix,
    y: &[u8],
    rows: &[usize],
    params: &ForestParams,
) -> Result<Forest> {
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
    }
    if rows.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        feature_subset_size: params.subset_size(x.n_cols()),
        min_leaf: params.min_leaf,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = tree_seed(params.seed, t);
            if params.bootstrap {
                let mut rng = rng_from(derive_seed(seed, &[0]));
                let sample: Vec<usize> = (0..rows.len())
                    .map(|_| rows[rng.gen_range(0..rows.len())])
                    .collect();
                fit_tree(x, y, &sample, tree_params, seed)
            } else {
                fit_tree(x, y, rows, tree_params, seed)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        params: *params,
        trees,
    })
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean over trees of the reached leaf's positive fraction.
    pub fn predict_proba(&self, sample: &[f64]) -> Result<f64> {
        let needed = self
            .trees
            .iter()
            .filter_map(TreeNode::max_feature)
            .max()
            .map_or(0, |f| f + 1);
        if sample.len() < needed {
            return Err(Error::FeatureCount {
                expected: needed,
                got: sample.len(),
            });
        }
        Ok(self.predict_proba_unchecked(sample))
    }

    pub(crate) fn predict_proba_unchecked(&self, sample: &[f64]) -> f64 {
        self.trees
            .iter()
            .map(|t| t.predict_proba(sample))
            .sum::<f64>()
            / self.trees.len() as f64
    }

    /// Total leaf count, i.e. the number of rules the ensemble uses.
    pub fn n_leaves(&self) -> usize {
        self.trees.iter().map(TreeNode::n_leaves).sum()
    }

    /// The first `n` trees as a forest of their own.
    pub fn truncated(&self, n: usize) -> Forest {
        Forest {
            params: ForestParams {
                n_trees: n.min(self.trees.len()),
                ..self.params
            },
            trees: self.trees[..n.min(self.trees.len())].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureKind, FeatureSpec};
    use crate::tree::fit_tree;

    fn dataset(n: usize, seed: u64) -> (FeatureMatrix, Vec<u8>) {
        let mut rng = rng_from(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| (r[0] + 0.5 * r[1] > 0.0) as u8)
            .collect();
        let specs = (0..4)
            .map(|j| FeatureSpec {
                name: format!("x{j}"),
                kind: FeatureKind::Numeric,
            })
            .collect();
        (FeatureMatrix::from_rows(specs, &rows).unwrap(), y)
    }

    #[test]
    fn hundred_depth_three_trees() {
        let (x, y) = dataset(80, 1);
        let rows: Vec<usize> = (0..80).collect();
        let f = fit_forest(&x, &y, &rows, &ForestParams::default()).unwrap();
        assert_eq!(f.n_trees(), 100);
        assert!(f.trees.iter().all(|t| t.depth() <= 3));
    }

    #[test]
    fn single_tree_forest_equals_tree() {
        let (x, y) = dataset(50, 2);
        let rows: Vec<usize> = (0..50).collect();
        let p = ForestParams {
            n_trees: 1,
            feature_subset_size: Some(4),
            bootstrap: false,
            seed: 5,
            ..Default::default()
        };
        let f = fit_forest(&x, &y, &rows, &p).unwrap();
        let tp = TreeParams {
            max_depth: 3,
            feature_subset_size: 4,
            min_leaf: 1,
        };
        assert_eq!(
            f.trees[0],
            fit_tree(&x, &y, &rows, tp, tree_seed(5, 0)).unwrap()
        );
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let (x, y) = dataset(60, 3);
        let rows: Vec<usize> = (0..60).collect();
        let p = ForestParams {
            n_trees: 20,
            ..Default::default()
        };
        let a = fit_forest(&x, &y, &rows, &p).unwrap();
        assert_eq!(a, fit_forest(&x, &y, &rows, &p).unwrap());
        let small = fit_forest(&x, &y, &rows, &ForestParams { n_trees: 7, ..p }).unwrap();
        assert_eq!(a.truncated(7), small);
    }

    #[test]
    fn probability_is_mean_of_leaf_fractions() {
        let f = Forest {
            params: ForestParams::default(),
            trees: vec![TreeNode::leaf([5, 0]), TreeNode::leaf([0, 5])],
        };
        assert_eq!(f.predict_proba(&[0.0]).unwrap(), 0.5);
        let one = Forest {
            params: ForestParams::default(),
            trees: vec![TreeNode::leaf([0, 3])],
        };
        assert_eq!(one.predict_proba(&[]).unwrap(), 1.0);
    }

    #[test]
    fn identical_trees_match_single_tree() {
        let (x, y) = dataset(40, 4);
        let rows: Vec<usize> = (0..40).collect();
        let tree = fit_tree(
            &x,
            &y,
            &rows,
            TreeParams {
                max_depth: 3,
                feature_subset_size: 2,
                min_leaf: 1,
            },
            0,
        )
        .unwrap();
        let f = Forest {
            params: ForestParams::default(),
            trees: vec![tree.clone(); 100],
        };
        for i in 0..40 {
            let s = x.row(i);
            assert!((f.predict_proba(s).unwrap() - tree.predict_proba(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_count_mismatch() {
        let (x, y) = dataset(40, 5);
        let rows: Vec<usize> = (0..40).collect();
        let f = fit_forest(
            &x,
            &y,
            &rows,
            &ForestParams {
                n_trees: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(
            f.predict_proba(&[]),
            Err(Error::FeatureCount { .. })
        ));
    }
}
