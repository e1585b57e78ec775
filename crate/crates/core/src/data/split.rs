use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

/// Repeated stratified k-fold assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
    /// `assignments[r][n]` is the test fold of sample `n` in repeat `r`.
    pub assignments: Vec<Vec<usize>>,
}

/// Stratified fold ids for `labels`.
///
/// Each class is shuffled, the classes are concatenated and samples are dealt
/// to folds round-robin, so per-fold class counts differ by at most one.
/// Fold ids are then relabelled at random so the folds receiving the extra
/// samples vary between seeds.
///
/// A class smaller than `folds` is allowed here and leaves some folds without
/// that class; [`SplitPlan::new`] rejects that case.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "folds must be >= 2, got {folds}"
        )));
    }
    let mut by_class = class_members(labels);
    let mut rng = rng_from(seed);
    let mut relabel: Vec<usize> = (0..folds).collect();
    relabel.shuffle(&mut rng);
    let mut out = vec![0; labels.len()];
    let mut k = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            out[i] = relabel[k % folds];
            k += 1;
        }
    }
    Ok(out)
}

fn class_members(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[(l != 0) as usize].push(i);
    }
    by_class
}

impl SplitPlan {
    /// Every class needs at least `folds` members so that each test fold
    /// contains both classes.
    pub fn new(labels: &[u8], repeats: usize, folds: usize, seed: u64) -> Result<Self> {
        if repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be >= 1".into()));
        }
        if folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "folds must be >= 2, got {folds}"
            )));
        }
        for (class, members) in class_members(labels).iter().enumerate() {
            if members.len() < folds {
                return Err(Error::InvalidParameter(format!(
                    "class {class} has {} members, fewer than {folds} folds",
                    members.len()
                )));
            }
        }
        let assignments = (0..repeats)
            .map(|r| stratified_folds(labels, folds, derive_seed(seed, &[1, r as u64])))
            .collect::<Result<_>>()?;
        Ok(SplitPlan {
            repeats,
            folds,
            seed,
            assignments,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.assignments.first().map_or(0, Vec::len)
    }

    /// `(train, test)` sample indices for one cell of the plan, both ascending.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments[repeat].iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize, pos: usize) -> Vec<u8> {
        (0..n).map(|i| (i < pos) as u8).collect()
    }

    #[test]
    fn exact_proportions() {
        let y = labels(100, 30);
        let plan = SplitPlan::new(&y, 1, 5, 9).unwrap();
        for f in 0..5 {
            let (_, test) = plan.split(0, f);
            assert_eq!(test.len(), 20);
            assert_eq!(test.iter().filter(|&&i| y[i] == 1).count(), 6);
        }
    }

    #[test]
    fn deterministic() {
        let y = labels(57, 20);
        assert_eq!(
            SplitPlan::new(&y, 3, 5, 1).unwrap(),
            SplitPlan::new(&y, 3, 5, 1).unwrap()
        );
        assert_ne!(
            SplitPlan::new(&y, 1, 5, 1).unwrap(),
            SplitPlan::new(&y, 1, 5, 2).unwrap()
        );
    }

    #[test]
    fn small_positive_class_allocation() {
        // Enumerating assignments of 3 positives to 5 folds with at most one
        // more than floor(3/5) per fold leaves only the pattern {1,1,1,0,0}.
        let y = labels(10, 3);
        for seed in 0..20 {
            let folds = stratified_folds(&y, 5, seed).unwrap();
            let mut counts = vec![0usize; 5];
            for (i, &f) in folds.iter().enumerate() {
                counts[f] += y[i] as usize;
            }
            counts.sort();
            assert_eq!(counts, vec![0, 0, 1, 1, 1]);
        }
    }

    #[test]
    fn rejects_small_classes_and_bad_folds() {
        assert!(SplitPlan::new(&labels(10, 3), 1, 4, 0).is_err());
        assert!(SplitPlan::new(&labels(10, 5), 1, 1, 0).is_err());
        assert!(SplitPlan::new(&labels(10, 5), 0, 2, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(n in 10usize..200, frac in 0.1f64..0.9, folds in 2usize..6, seed: u64) {
            let pos = ((n as f64 * frac) as usize).clamp(folds, n - folds);
            let y = labels(n, pos);
            let plan = SplitPlan::new(&y, 2, folds, seed).unwrap();
            let global = pos as f64 / n as f64;
            for r in 0..2 {
                let mut seen = vec![0usize; n];
                for f in 0..folds {
                    let (train, test) = plan.split(r, f);
                    prop_assert_eq!(train.len() + test.len(), n);
                    for &i in &test { seen[i] += 1; }
                    for &i in &train { prop_assert!(plan.assignments[r][i] != f); }
                    let rate = test.iter().filter(|&&i| y[i] == 1).count() as f64 / test.len() as f64;
                    prop_assert!((rate - global).abs() <= 1.0 / test.len() as f64 + 1e-12);
                }
                prop_assert!(seen.iter().all(|&c| c == 1));
            }
        }
    }
}
