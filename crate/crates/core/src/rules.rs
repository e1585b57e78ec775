//! Decision rules read off root-to-leaf tree paths.
//!
//! A rule's IF-part is the conjunction of branch tests along one path and its
//! THEN-part is the leaf's class. When the IF-part fails the rule predicts the
//! opposite class, so every rule outputs a class for every sample.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureSpec};
use crate::error::{Error, Result};
use crate::tree::{Forest, SplitTest, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "≤",
            Op::Gt => ">",
            Op::Eq => "=",
            Op::Ne => "≠",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub op: Op,
    /// Threshold for `≤`/`>`, category code for `=`/`≠`.
    pub value: f64,
}

impl Condition {
    #[inline]
    pub fn holds(&self, x: f64) -> bool {
        match self.op {
            Op::Le => x <= self.value,
            Op::Gt => x > self.value,
            Op::Eq => x == self.value,
            Op::Ne => x != self.value,
        }
    }

    fn key(&self) -> (usize, Op, u64) {
        // +0.0 and -0.0 compare equal as thresholds.
        (self.feature, self.op, (self.value + 0.0).to_bits())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tree: usize,
    pub leaf: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub then_class: u8,
    pub provenance: Provenance,
}

impl Rule {
    pub fn else_class(&self) -> u8 {
        1 - self.then_class
    }

    /// Highest feature index referenced, plus one.
    pub fn required_features(&self) -> usize {
        self.conditions
            .iter()
            .map(|c| c.feature + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.conditions.iter().map(|c| c.feature)
    }

    fn check(&self, sample: &[f64]) -> Result<()> {
        let needed = self.required_features();
        if sample.len() < needed {
            return Err(Error::FeatureCount {
                expected: needed,
                got: sample.len(),
            });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn verified_unchecked(&self, sample: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.holds(sample[c.feature]))
    }

    #[inline]
    pub(crate) fn output_unchecked(&self, sample: &[f64]) -> u8 {
        if self.verified_unchecked(sample) {
            self.then_class
        } else {
            self.else_class()
        }
    }

    /// 1 iff every condition of the IF-part holds.
    pub fn condition_verified(&self, sample: &[f64]) -> Result<u8> {
        self.check(sample)?;
        Ok(self.verified_unchecked(sample) as u8)
    }

    /// THEN class when the IF-part holds, ELSE class otherwise.
    pub fn rule_output(&self, sample: &[f64]) -> Result<u8> {
        self.check(sample)?;
        Ok(self.output_unchecked(sample))
    }

    /// Sorted conditions and THEN class; provenance is ignored.
    fn canonical_key(&self) -> (Vec<(usize, Op, u64)>, u8) {
        let mut conds: Vec<_> = self.conditions.iter().map(Condition::key).collect();
        conds.sort_unstable();
        (conds, self.then_class)
    }

    pub fn display<'a>(
        &'a self,
        features: &'a [FeatureSpec],
        class_names: [&'a str; 2],
    ) -> RuleDisplay<'a> {
        RuleDisplay {
            rule: self,
            features,
            class_names,
        }
    }
}

/// Compact decimal rendering for thresholds: at most 6 significant digits.
fn fmt_threshold(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 12) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `IF a ≤ 1.5 AND b = x, THEN pos (ELSE neg)`
pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    features: &'a [FeatureSpec],
    class_names: [&'a str; 2],
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("IF ")?;
        if self.rule.conditions.is_empty() {
            f.write_str("TRUE")?;
        }
        for (i, c) in self.rule.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            let spec = self.features.get(c.feature);
            let name = spec.map_or_else(|| format!("x{}", c.feature), |s| s.name.clone());
            let value = match spec.map(|s| &s.kind) {
                Some(FeatureKind::Categorical { categories }) => categories
                    .get(c.value as usize)
                    .cloned()
                    .unwrap_or_else(|| fmt_threshold(c.value)),
                _ => fmt_threshold(c.value),
            };
            write!(f, "{name} {} {value}", c.op.symbol())?;
        }
        write!(
            f,
            ", THEN {} (ELSE {})",
            self.class_names[self.rule.then_class as usize],
            self.class_names[self.rule.else_class() as usize]
        )
    }
}

fn binary_category_count(features: &[FeatureSpec], feature: usize) -> bool {
    matches!(
        features.get(feature).map(|s| &s.kind),
        Some(FeatureKind::Categorical { categories }) if categories.len() == 2
    )
}

/// One rule per leaf, in depth-first left-to-right leaf order.
///
/// The right branch of a split negates its test (`≤` becomes `>`, `=`
/// becomes `≠`). For a two-category feature `≠ a` is written as `= b`.
pub fn extract_rules(tree: &TreeNode, tree_index: usize, features: &[FeatureSpec]) -> Vec<Rule> {
    fn walk(
        node: &TreeNode,
        path: &mut Vec<Condition>,
        out: &mut Vec<Rule>,
        tree: usize,
        features: &[FeatureSpec],
    ) {
        match node {
            TreeNode::Leaf {
                predicted_class, ..
            } => {
                let leaf = out.len();
                out.push(Rule {
                    conditions: path.clone(),
                    then_class: *predicted_class,
                    provenance: Provenance { tree, leaf },
                });
            }
            TreeNode::Split {
                feature,
                test,
                left,
                right,
            } => {
                let (pass, fail) = match *test {
                    SplitTest::Threshold(t) => (
                        Condition {
                            feature: *feature,
                            op: Op::Le,
                            value: t,
                        },
                        Condition {
                            feature: *feature,
                            op: Op::Gt,
                            value: t,
                        },
                    ),
                    SplitTest::Category(c) => {
                        let eq = Condition {
                            feature: *feature,
                            op: Op::Eq,
                            value: c as f64,
                        };
                        let ne = if binary_category_count(features, *feature) {
                            Condition {
                                feature: *feature,
                                op: Op::Eq,
                                value: (1 - c.min(1)) as f64,
                            }
                        } else {
                            Condition {
                                feature: *feature,
                                op: Op::Ne,
                                value: c as f64,
                            }
                        };
                        (eq, ne)
                    }
                };
                path.push(pass);
                walk(left, path, out, tree, features);
                path.pop();
                path.push(fail);
                walk(right, path, out, tree, features);
                path.pop();
            }
        }
    }
    let mut out = Vec::with_capacity(tree.n_leaves());
    walk(tree, &mut Vec::new(), &mut out, tree_index, features);
    out
}

/// Rules of every tree, concatenated in tree order.
pub fn extract_forest_rules(forest: &Forest, features: &[FeatureSpec]) -> Vec<Rule> {
    forest
        .trees
        .iter()
        .enumerate()
        .flat_map(|(t, tree)| extract_rules(tree, t, features))
        .collect()
}

/// Drops rules equal to an earlier one up to condition order. Rules with the
/// same IF-part but different THEN classes are both kept.
pub fn dedup_rules(rules: Vec<Rule>) -> Vec<Rule> {
    let mut seen = HashSet::new();
    rules
        .into_iter()
        .filter(|r| seen.insert(r.canonical_key()))
        .collect()
}

/// Binary N×P matrix; entry `(n, p)` is 1 iff rule `p`'s IF-part holds for
/// sample `n`. Stored column-wise as the sorted rows where the entry is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionMatrix {
    n_rows: usize,
    columns: Vec<Vec<u32>>,
}

impl ConditionMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.columns[col].binary_search(&(row as u32)).is_ok() as u8
    }

    /// Rows where column `col` is 1.
    pub fn column(&self, col: usize) -> &[u32] {
        &self.columns[col]
    }

    pub fn row(&self, row: usize) -> Vec<u8> {
        (0..self.n_cols()).map(|c| self.get(row, c)).collect()
    }

    pub fn into_columns(self) -> Vec<Vec<u32>> {
        self.columns
    }
}

/// Evaluates every rule on every sample.
pub fn build_condition_matrix<'a, I>(rules: &[Rule], samples: I) -> Result<ConditionMatrix>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let needed = rules.iter().map(Rule::required_features).max().unwrap_or(0);
    let mut columns = vec![Vec::new(); rules.len()];
    let mut n_rows = 0;
    for (n, sample) in samples.into_iter().enumerate() {
        if sample.len() < needed {
            return Err(Error::FeatureCount {
                expected: needed,
                got: sample.len(),
            });
        }
        for (col, rule) in columns.iter_mut().zip(rules) {
            if rule.verified_unchecked(sample) {
                col.push(n as u32);
            }
        }
        n_rows += 1;
    }
    Ok(ConditionMatrix { n_rows, columns })
}
