//! Fold-level results and their summaries.

use super::baselines::Baseline;
use crate::error::Result;
use serde::{Serialize, Serializer};
use std::fmt;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Correctness-weighted average of the selected rules.
    Weighted,
    /// Plain average of the selected rules.
    SimpleMean,
    Baseline(Baseline),
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Weighted => "proposed",
            Variant::SimpleMean => "proposed-mean",
            Variant::Baseline(b) => b.name(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Variant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldAuc {
    pub variant: Variant,
    pub m: Option<usize>,
    pub repeat: usize,
    pub fold: usize,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleCount {
    pub variant: Variant,
    pub repeat: usize,
    pub fold: usize,
    pub rules: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: Variant,
    pub m: Option<usize>,
    pub n: usize,
    pub mean_auc: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95: f64,
    pub mean_rules: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragingRow {
    pub m: usize,
    pub weighted_auc: f64,
    pub simple_auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub repeats: usize,
    pub folds: usize,
    pub m_values: Vec<usize>,
    pub baselines: Vec<Baseline>,
    pub aucs: Vec<FoldAuc>,
    pub rule_counts: Vec<RuleCount>,
}

/// Mean and 1.96 · sample standard deviation / √n.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl EvaluationReport {
    /// Variants in report order: baselines, then both averaging modes per M.
    pub fn variants(&self) -> Vec<(Variant, Option<usize>)> {
        let mut out: Vec<(Variant, Option<usize>)> = self
            .baselines
            .iter()
            .map(|&b| (Variant::Baseline(b), None))
            .collect();
        for &m in &self.m_values {
            out.push((Variant::Weighted, Some(m)));
            out.push((Variant::SimpleMean, Some(m)));
        }
        out
    }

    pub fn fold_aucs(&self, variant: Variant, m: Option<usize>) -> Vec<f64> {
        self.aucs
            .iter()
            .filter(|a| a.variant == variant && a.m == m)
            .map(|a| a.auc)
            .collect()
    }

    pub fn mean_auc(&self, variant: Variant, m: Option<usize>) -> Option<f64> {
        let v = self.fold_aucs(variant, m);
        (!v.is_empty()).then(|| mean_ci(&v).0)
    }

    pub fn mean_rules(&self, variant: Variant) -> Option<f64> {
        let v: Vec<f64> = self
            .rule_counts
            .iter()
            .filter(|r| r.variant == variant)
            .map(|r| r.rules as f64)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.variants()
            .into_iter()
            .map(|(variant, m)| {
                let aucs = self.fold_aucs(variant, m);
                let (mean_auc, ci95) = mean_ci(&aucs);
                SummaryRow {
                    variant,
                    m,
                    n: aucs.len(),
                    mean_auc,
                    ci95,
                    mean_rules: match variant {
                        Variant::Baseline(_) => self.mean_rules(variant),
                        _ => m.map(|m| m as f64),
                    },
                }
            })
            .collect()
    }

    /// AUC against M for both averaging modes.
    pub fn averaging(&self) -> Vec<AveragingRow> {
        self.m_values
            .iter()
            .map(|&m| AveragingRow {
                m,
                weighted_auc: self
                    .mean_auc(Variant::Weighted, Some(m))
                    .unwrap_or(f64::NAN),
                simple_auc: self
                    .mean_auc(Variant::SimpleMean, Some(m))
                    .unwrap_or(f64::NAN),
            })
            .collect()
    }

    pub fn write_folds_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "model_variant", "M", "repeat", "fold", "auc"])?;
        for a in &self.aucs {
            out.write_record([
                self.dataset.clone(),
                a.variant.to_string(),
                fmt_opt(a.m),
                a.repeat.to_string(),
                a.fold.to_string(),
                a.auc.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "dataset",
            "model_variant",
            "M",
            "n",
            "mean_auc",
            "ci95",
            "mean_rules",
        ])?;
        for row in self.summary() {
            out.write_record([
                self.dataset.clone(),
                row.variant.to_string(),
                fmt_opt(row.m),
                row.n.to_string(),
                format!("{:.4}", row.mean_auc),
                format!("{:.4}", row.ci95),
                fmt_opt(row.mean_rules.map(|r| format!("{r:.1}"))),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_averaging_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "M", "weighted_auc", "simple_auc"])?;
        for row in self.averaging() {
            out.write_record([
                self.dataset.clone(),
                row.m.to_string(),
                format!("{:.4}", row.weighted_auc),
                format!("{:.4}", row.simple_auc),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_rule_counts_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "model_variant", "repeat", "fold", "rules"])?;
        for r in &self.rule_counts {
            out.write_record([
                self.dataset.clone(),
                r.variant.to_string(),
                r.repeat.to_string(),
                r.fold.to_string(),
                r.rules.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Plain-text table of the summary.
    pub fn render_summary(&self) -> String {
        let mut s = format!(
            "{} ({} x {}-fold CV)\n{:<15} {:>4} {:>8} {:>8} {:>10}\n",
            self.dataset, self.repeats, self.folds, "variant", "M", "AUC", "±95%", "rules"
        );
        for row in self.summary() {
            s.push_str(&format!(
                "{:<15} {:>4} {:>8.4} {:>8.4} {:>10}\n",
                row.variant.to_string(),
                fmt_opt(row.m),
                row.mean_auc,
                row.ci95,
                fmt_opt(row.mean_rules.map(|r| format!("{r:.1}")))
            ));
        }
        s
    }
}
