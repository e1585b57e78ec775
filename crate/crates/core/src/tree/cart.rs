//! Depth-limited CART trees grown with the Gini criterion.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};
use crate::seed::{rng_from, Rng};

/// Branch test of a split node. Samples passing the test go left.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value", rename_all = "lowercase")]
pub enum SplitTest {
    /// `x <= threshold`
    Threshold(f64),
    /// `x == code`
    Category(u32),
}

impl SplitTest {
    #[inline]
    pub fn passes(&self, x: f64) -> bool {
        match *self {
            SplitTest::Threshold(t) => x <= t,
            SplitTest::Category(c) => x == c as f64,
        }
    }

    fn sort_key(&self) -> f64 {
        match *self {
            SplitTest::Threshold(t) => t,
            SplitTest::Category(c) => c as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        test: SplitTest,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        predicted_class: u8,
        /// `[negatives, positives]` among the training samples reaching the leaf.
        class_counts: [usize; 2],
    },
}

impl TreeNode {
    pub fn leaf(class_counts: [usize; 2]) -> Self {
        TreeNode::Leaf {
            predicted_class: (class_counts[1] > class_counts[0]) as u8,
            class_counts,
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Longest root-to-leaf path, counted in splits.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Class counts of the leaf reached by `sample`. The caller guarantees
    /// `sample` covers every split feature.
    pub fn leaf_counts(&self, sample: &[f64]) -> [usize; 2] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class_counts, .. } => return *class_counts,
                TreeNode::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    node = if test.passes(sample[*feature]) {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Positive-class fraction of the reached leaf.
    pub fn predict_proba(&self, sample: &[f64]) -> f64 {
        let [neg, pos] = self.leaf_counts(sample);
        pos as f64 / (neg + pos) as f64
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => Some(
                (*feature)
                    .max(left.max_feature().unwrap_or(0))
                    .max(right.max_feature().unwrap_or(0)),
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub feature_subset_size: usize,
    pub min_leaf: usize,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    score: f64,
    feature: usize,
    test: SplitTest,
}

impl Candidate {
    /// Lower weighted impurity wins; ties go to the lower feature index,
    /// then the lower threshold or category code.
    fn beats(&self, other: &Candidate) -> bool {
        const EPS: f64 = 1e-12;
        if self.score < other.score - EPS {
            return true;
        }
        if self.score > other.score + EPS {
            return false;
        }
        (self.feature, self.test.sort_key()) < (other.feature, other.test.sort_key())
    }
}

/// `n * gini` for a node with the given class counts.
#[inline]
fn weighted_gini(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (a, b) = (neg as f64, pos as f64);
    n - (a * a + b * b) / n
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    y: &'a [u8],
    params: TreeParams,
    rng: Rng,
    features: Vec<usize>,
    pairs: Vec<(f64, u8)>,
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        [rows.len() - pos, pos]
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> TreeNode {
        let counts = self.counts(rows);
        if depth >= self.params.max_depth
            || counts[0] == 0
            || counts[1] == 0
            || rows.len() < 2 * self.params.min_leaf
        {
            return TreeNode::leaf(counts);
        }
        let parent = weighted_gini(counts[0], counts[1]);
        let Some(best) = self.best_split(rows) else {
            return TreeNode::leaf(counts);
        };
        if best.score >= parent - 1e-12 {
            return TreeNode::leaf(counts);
        }

        // Partition in place: passing rows first.
        let mut mid = 0;
        for i in 0..rows.len() {
            if best.test.passes(self.x.get(rows[i], best.feature)) {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        let (l, r) = rows.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        TreeNode::Split {
            feature: best.feature,
            test: best.test,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Visits features in random order until `feature_subset_size` features
    /// that are non-constant on this node have been evaluated.
    fn best_split(&mut self, rows: &[usize]) -> Option<Candidate> {
        self.features.shuffle(&mut self.rng);
        let mut best: Option<Candidate> = None;
        let mut informative = 0;
        for k in 0..self.features.len() {
            if informative >= self.params.feature_subset_size {
                break;
            }
            let feature = self.features[k];
            let (constant, cand) = match &self.x.specs()[feature].kind {
                FeatureKind::Numeric => self.numeric_split(rows, feature),
                FeatureKind::Categorical { categories } => {
                    self.categorical_split(rows, feature, categories.len())
                }
            };
            if constant {
                continue;
            }
            informative += 1;
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.beats(b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn numeric_split(&mut self, rows: &[usize], feature: usize) -> (bool, Option<Candidate>) {
        self.pairs.clear();
        self.pairs
            .extend(rows.iter().map(|&r| (self.x.get(r, feature), self.y[r])));
        self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.pairs.len();
        if self.pairs[0].0 == self.pairs[n - 1].0 {
            return (true, None);
        }
        let total_pos = self.pairs.iter().filter(|p| p.1 == 1).count();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Candidate> = None;
        let mut left_pos = 0;
        for i in 0..n - 1 {
            left_pos += self.pairs[i].1 as usize;
            let n_left = i + 1;
            if self.pairs[i].0 == self.pairs[i + 1].0 {
                continue;
            }
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let score = weighted_gini(n_left - left_pos, left_pos)
                + weighted_gini(n - n_left - (total_pos - left_pos), total_pos - left_pos);
            let threshold = 0.5 * (self.pairs[i].0 + self.pairs[i + 1].0);
            // Midpoint of adjacent floats can round up to the upper value.
            let threshold = if threshold >= self.pairs[i + 1].0 {
                self.pairs[i].0
            } else {
                threshold
            };
            let cand = Candidate {
                score,
                feature,
                test: SplitTest::Threshold(threshold),
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        (false, best)
    }

    fn categorical_split(
        &self,
        rows: &[usize],
        feature: usize,
        n_categories: usize,
    ) -> (bool, Option<Candidate>) {
        let mut counts = vec![[0usize; 2]; n_categories];
        for &r in rows {
            counts[self.x.get(r, feature) as usize][self.y[r] as usize] += 1;
        }
        let present = counts.iter().filter(|c| c[0] + c[1] > 0).count();
        if present < 2 {
            return (true, None);
        }
        let n = rows.len();
        let total_pos: usize = counts.iter().map(|c| c[1]).sum();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Candidate> = None;
        for (code, c) in counts.iter().enumerate() {
            let n_in = c[0] + c[1];
            if n_in == 0 || n_in < min_leaf || n - n_in < min_leaf {
                continue;
            }
            let score = weighted_gini(c[0], c[1])
                + weighted_gini(n - n_in - (total_pos - c[1]), total_pos - c[1]);
            let cand = Candidate {
                score,
                feature,
                test: SplitTest::Category(code as u32),
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        (false, best)
    }
}

/// Grows one tree on the samples `rows` of `(x, y)`; `rows` may contain
/// repeats (bootstrap draws).
pub fn fit_tree(
    x: &FeatureMatrix,
    y: &[u8],
    rows: &[usize],
    params: TreeParams,
    seed: u64,
) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if params.feature_subset_size == 0 || params.feature_subset_size > x.n_cols() {
        return Err(Error::InvalidParameter(format!(
            "feature_subset_size must be in 1..={}, got {}",
            x.n_cols(),
            params.feature_subset_size
        )));
    }
    if params.min_leaf == 0 {
        return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
    }
    let mut grower = Grower {
        x,
        y,
        params,
        rng: rng_from(seed),
        features: (0..x.n_cols()).collect(),
        pairs: Vec::with_capacity(rows.len()),
    };
    let mut rows = rows.to_vec();
    Ok(grower.grow(&mut rows, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    fn numeric(rows: &[Vec<f64>]) -> FeatureMatrix {
        let d = rows[0].len();
        let specs = (0..d)
            .map(|j| FeatureSpec {
                name: format!("x{j}"),
                kind: FeatureKind::Numeric,
            })
            .collect();
        FeatureMatrix::from_rows(specs, rows).unwrap()
    }

    fn params(max_depth: usize, m: usize) -> TreeParams {
        TreeParams {
            max_depth,
            feature_subset_size: m,
            min_leaf: 1,
        }
    }

    #[test]
    fn stump_on_four_points() {
        let x = numeric(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let y = [0, 0, 1, 1];
        let t = fit_tree(&x, &y, &[0, 1, 2, 3], params(1, 1), 0).unwrap();
        match t {
            TreeNode::Split {
                feature: 0,
                test: SplitTest::Threshold(th),
                left,
                right,
            } => {
                assert_eq!(th, 2.5);
                assert!(matches!(
                    *left,
                    TreeNode::Leaf {
                        predicted_class: 0,
                        ..
                    }
                ));
                assert!(matches!(
                    *right,
                    TreeNode::Leaf {
                        predicted_class: 1,
                        ..
                    }
                ));
            }
            other => panic!("expected a stump, got {other:?}"),
        }
    }

    #[test]
    fn pure_data_gives_single_leaf() {
        let x = numeric(&[vec![1.0], vec![2.0], vec![3.0]]);
        let t = fit_tree(&x, &[1, 1, 1], &[0, 1, 2], params(3, 1), 0).unwrap();
        assert_eq!(
            t,
            TreeNode::Leaf {
                predicted_class: 1,
                class_counts: [0, 3]
            }
        );
    }

    #[test]
    fn leaf_tie_predicts_negative() {
        assert!(matches!(
            TreeNode::leaf([2, 2]),
            TreeNode::Leaf {
                predicted_class: 0,
                ..
            }
        ));
    }

    #[test]
    fn categorical_equality_split() {
        let specs = vec![FeatureSpec {
            name: "c".into(),
            kind: FeatureKind::Categorical {
                categories: vec!["a".into(), "b".into(), "c".into()],
            },
        }];
        let x = FeatureMatrix::from_rows(
            specs,
            &[
                vec![0.0],
                vec![1.0],
                vec![2.0],
                vec![1.0],
                vec![0.0],
                vec![2.0],
            ],
        )
        .unwrap();
        let y = [0, 1, 0, 1, 0, 0];
        let t = fit_tree(&x, &y, &[0, 1, 2, 3, 4, 5], params(1, 1), 0).unwrap();
        assert!(matches!(
            t,
            TreeNode::Split {
                test: SplitTest::Category(1),
                ..
            }
        ));
    }

    #[test]
    fn respects_min_leaf() {
        let x = numeric(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0]]);
        let y = [1, 0, 0, 0, 0];
        let p = TreeParams {
            max_depth: 3,
            feature_subset_size: 1,
            min_leaf: 2,
        };
        let t = fit_tree(&x, &y, &[0, 1, 2, 3, 4], p, 0).unwrap();
        fn check(t: &TreeNode) {
            match t {
                TreeNode::Leaf { class_counts, .. } => {
                    assert!(class_counts[0] + class_counts[1] >= 2)
                }
                TreeNode::Split { left, right, .. } => {
                    check(left);
                    check(right)
                }
            }
        }
        check(&t);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = numeric(&[vec![1.0], vec![2.0]]);
        assert!(fit_tree(&x, &[0, 1], &[], params(3, 1), 0).is_err());
        assert!(fit_tree(&x, &[0, 1], &[0, 1], params(3, 2), 0).is_err());
        assert!(fit_tree(&x, &[0, 1], &[0, 1], params(3, 0), 0).is_err());
    }

    /// Brute force: try every midpoint and keep the lowest weighted Gini,
    /// preferring the lowest threshold.
    fn brute_force_threshold(xs: &[f64], ys: &[u8]) -> Option<f64> {
        let mut sorted: Vec<f64> = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let gini = |idx: &[usize]| {
            let n = idx.len() as f64;
            if n == 0.0 {
                return 0.0;
            }
            let p = idx.iter().filter(|&&i| ys[i] == 1).count() as f64 / n;
            n * (1.0 - p * p - (1.0 - p) * (1.0 - p))
        };
        let all: Vec<usize> = (0..xs.len()).collect();
        let parent = gini(&all);
        let mut best: Option<(f64, f64)> = None;
        for w in sorted.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| xs[i] <= t);
            let s = gini(&l) + gini(&r);
            if best.is_none_or(|(bs, _)| s < bs - 1e-12) {
                best = Some((s, t));
            }
        }
        best.filter(|(s, _)| *s < parent - 1e-12).map(|(_, t)| t)
    }

    #[test]
    fn gini_matches_brute_force_on_micro_data() {
        use rand::Rng as _;
        let mut rng = rng_from(7);
        for _ in 0..500 {
            let n = rng.gen_range(2..=5);
            let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
            let ys: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let x = numeric(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>());
            let rows: Vec<usize> = (0..n).collect();
            let t = fit_tree(&x, &ys, &rows, params(1, 1), 0).unwrap();
            let got = match t {
                TreeNode::Split {
                    test: SplitTest::Threshold(th),
                    ..
                } => Some(th),
                _ => None,
            };
            assert_eq!(got, brute_force_threshold(&xs, &ys), "xs={xs:?} ys={ys:?}");
        }
    }
}
