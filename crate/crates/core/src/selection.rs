//! Picking the M rules with the largest LASSO coefficients.

use crate::error::{Error, Result};
use crate::lasso::LogisticModel;
use crate::rules::Rule;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedRuleSet {
    pub rules: Vec<Rule>,
    /// Selection coefficient of each rule, same order as `rules`.
    pub coefficients: Vec<f64>,
    /// Position of each rule in the candidate list it was selected from.
    pub source_indices: Vec<usize>,
    /// Sorted distinct feature indices used by `rules`.
    pub feature_union: Vec<usize>,
    /// Set when fewer than M coefficients were nonzero and zero-coefficient
    /// rules had to fill the remaining slots.
    pub padded: bool,
}

impl SelectedRuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Builds a set from explicit rules, e.g. for hand-written examples.
    pub fn from_rules(rules: Vec<Rule>, coefficients: Vec<f64>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidParameter(
                "a rule set needs at least one rule".into(),
            ));
        }
        if rules.len() != coefficients.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rules but {} coefficients",
                rules.len(),
                coefficients.len()
            )));
        }
        let feature_union = feature_union(&rules);
        Ok(SelectedRuleSet {
            source_indices: (0..rules.len()).collect(),
            padded: false,
            rules,
            coefficients,
            feature_union,
        })
    }

    /// The first `m` rules of this set, which is itself the top-`m`
    /// selection when the set is ordered by decreasing magnitude.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::NotEnoughRules {
                requested: m,
                available: self.len(),
            });
        }
        let rules = self.rules[..m].to_vec();
        Ok(SelectedRuleSet {
            feature_union: feature_union(&rules),
            rules,
            coefficients: self.coefficients[..m].to_vec(),
            source_indices: self.source_indices[..m].to_vec(),
            padded: self.coefficients[..m].contains(&0.0),
        })
    }
}

fn feature_union(rules: &[Rule]) -> Vec<usize> {
    let mut f: Vec<usize> = rules.iter().flat_map(Rule::features).collect();
    f.sort_unstable();
    f.dedup();
    f
}

/// Candidate indices ordered by decreasing |coefficient|, ties by index.
pub fn rank_by_magnitude(coefficients: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..coefficients.len()).collect();
    order.sort_by(|&a, &b| {
        coefficients[b]
            .abs()
            .total_cmp(&coefficients[a].abs())
            .then(a.cmp(&b))
    });
    order
}

/// Keeps the `m` rules whose coefficients are largest in absolute value.
pub fn select_top_rules(
    model: &LogisticModel,
    rules: &[Rule],
    m: usize,
) -> Result<SelectedRuleSet> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be at least 1".into()));
    }
    if model.coefficients.len() != rules.len() {
        return Err(Error::InvalidParameter(format!(
            "model has {} coefficients for {} rules",
            model.coefficients.len(),
            rules.len()
        )));
    }
    if m > rules.len() {
        return Err(Error::NotEnoughRules {
            requested: m,
            available: rules.len(),
        });
    }
    let top: Vec<usize> = rank_by_magnitude(&model.coefficients)
        .into_iter()
        .take(m)
        .collect();
    let picked: Vec<Rule> = top.iter().map(|&i| rules[i].clone()).collect();
    Ok(SelectedRuleSet {
        feature_union: feature_union(&picked),
        rules: picked,
        coefficients: top.iter().map(|&i| model.coefficients[i]).collect(),
        padded: model.n_nonzero() < m,
        source_indices: top,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{Condition, Op, Provenance};
    use proptest::prelude::*;

    fn rule(feature: usize, leaf: usize) -> Rule {
        Rule {
            conditions: vec![Condition {
                feature,
                op: Op::Le,
                value: leaf as f64,
            }],
            then_class: 1,
            provenance: Provenance { tree: 0, leaf },
        }
    }

    fn model(coefficients: Vec<f64>) -> LogisticModel {
        LogisticModel {
            intercept: 0.0,
            coefficients,
            lambda: 0.1,
        }
    }

    #[test]
    fn ranks_by_absolute_value() {
        let rules: Vec<Rule> = (0..4).map(|i| rule(i, i)).collect();
        let s = select_top_rules(&model(vec![0.5, -0.9, 0.0, 0.3]), &rules, 2).unwrap();
        assert_eq!(s.source_indices, vec![1, 0]);
        assert_eq!(s.coefficients, vec![-0.9, 0.5]);
        assert_eq!(s.feature_union, vec![0, 1]);
        assert!(!s.padded);
    }

    #[test]
    fn pads_with_zero_rules_in_index_order() {
        let rules: Vec<Rule> = (0..5).map(|i| rule(i, i)).collect();
        let s = select_top_rules(&model(vec![0.0; 5]), &rules, 3).unwrap();
        assert_eq!(s.source_indices, vec![0, 1, 2]);
        assert!(s.padded);
        let s = select_top_rules(&model(vec![0.0, 0.0, 0.0, 0.2, 0.0]), &rules, 3).unwrap();
        assert_eq!(s.source_indices, vec![3, 0, 1]);
        assert!(s.padded);
    }

    #[test]
    fn m_equal_to_p_returns_everything() {
        let rules: Vec<Rule> = (0..4).map(|i| rule(i % 2, i)).collect();
        let s = select_top_rules(&model(vec![0.1, -0.4, 0.3, 0.2]), &rules, 4).unwrap();
        assert_eq!(s.source_indices, vec![1, 2, 3, 0]);
        assert_eq!(s.feature_union, vec![0, 1]);
    }

    #[test]
    fn rejects_bad_m() {
        let rules: Vec<Rule> = (0..3).map(|i| rule(i, i)).collect();
        let m = model(vec![0.1, 0.2, 0.3]);
        assert!(matches!(
            select_top_rules(&m, &rules, 4),
            Err(Error::NotEnoughRules {
                requested: 4,
                available: 3
            })
        ));
        assert!(select_top_rules(&m, &rules, 0).is_err());
    }

    #[test]
    fn prefix_matches_smaller_selection() {
        let rules: Vec<Rule> = (0..6).map(|i| rule(i, i)).collect();
        let m = model(vec![0.1, -0.7, 0.0, 0.3, 0.0, 0.2]);
        let all = select_top_rules(&m, &rules, 6).unwrap();
        for k in 1..=6 {
            assert_eq!(
                all.prefix(k).unwrap(),
                select_top_rules(&m, &rules, k).unwrap()
            );
        }
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            coefs in prop::collection::vec(-5.0f64..5.0, 1..30),
            m_frac in 0.0f64..1.0,
            perm_seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let p = coefs.len();
            let m = 1 + ((p - 1) as f64 * m_frac) as usize;
            let rules: Vec<Rule> = (0..p).map(|i| rule(i, i)).collect();
            let base = select_top_rules(&model(coefs.clone()), &rules, m).unwrap();

            let mut perm: Vec<usize> = (0..p).collect();
            perm.shuffle(&mut crate::seed::rng_from(perm_seed));
            let shuffled_rules: Vec<Rule> = perm.iter().map(|&i| rules[i].clone()).collect();
            let shuffled_coefs: Vec<f64> = perm.iter().map(|&i| coefs[i]).collect();
            let other = select_top_rules(&model(shuffled_coefs), &shuffled_rules, m).unwrap();

            // Continuous draws make magnitude ties essentially impossible.
            prop_assert_eq!(&base.rules, &other.rules);
            prop_assert_eq!(&base.coefficients, &other.coefficients);
            prop_assert_eq!(base.feature_union, other.feature_union);
        }
    }
}
