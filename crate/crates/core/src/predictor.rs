//! Combining rule outputs into a positive-class probability.

use crate::error::{Error, Result};
use crate::pipeline::PipelineModel;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub weight_correct: f64,
    pub weight_incorrect: f64,
}

impl Default for WeightScheme {
    fn default() -> Self {
        WeightScheme {
            weight_correct: 2.0,
            weight_incorrect: 1.0,
        }
    }
}

impl WeightScheme {
    pub fn new(weight_correct: f64, weight_incorrect: f64) -> Result<Self> {
        let ok = |w: f64| w.is_finite() && w > 0.0;
        if !ok(weight_correct) || !ok(weight_incorrect) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive and finite, got {weight_correct} and {weight_incorrect}"
            )));
        }
        Ok(WeightScheme {
            weight_correct,
            weight_incorrect,
        })
    }

    pub fn weight(&self, correct: u8) -> f64 {
        if correct == 1 {
            self.weight_correct
        } else {
            self.weight_incorrect
        }
    }
}

/// Fraction of rules voting for the positive class.
pub fn simple_mean_probability(rule_outputs: &[u8]) -> Result<f64> {
    if rule_outputs.is_empty() {
        return Err(Error::InvalidParameter("empty rule set".into()));
    }
    let votes = rule_outputs.iter().map(|&o| o as f64).sum::<f64>();
    Ok(votes / rule_outputs.len() as f64)
}

/// `Σ o_i w_i / Σ w_i`, with `w_i` chosen by the predicted correctness of rule `i`.
pub fn weighted_probability(
    rule_outputs: &[u8],
    correctness: &[u8],
    scheme: &WeightScheme,
) -> Result<f64> {
    if rule_outputs.is_empty() {
        return Err(Error::InvalidParameter("empty rule set".into()));
    }
    if rule_outputs.len() != correctness.len() {
        return Err(Error::InvalidParameter(format!(
            "{} rule outputs but {} correctness flags",
            rule_outputs.len(),
            correctness.len()
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (&o, &c) in rule_outputs.iter().zip(correctness) {
        let w = scheme.weight(c);
        num += o as f64 * w;
        den += w;
    }
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionTrace {
    pub rule_outputs: Vec<u8>,
    pub correctness_flags: Vec<u8>,
    pub weights: Vec<f64>,
    pub probability: f64,
}

impl PredictionTrace {
    /// Unweighted vote share of the same rule outputs.
    pub fn simple_mean(&self) -> f64 {
        simple_mean_probability(&self.rule_outputs).expect("trace holds at least one rule")
    }

    /// Class 1 when the probability is at least 0.5.
    pub fn class(&self) -> u8 {
        (self.probability >= 0.5) as u8
    }
}

pub fn predict_sample(model: &PipelineModel, sample: &[f64]) -> Result<PredictionTrace> {
    if sample.len() != model.features.len() {
        return Err(Error::FeatureCount {
            expected: model.features.len(),
            got: sample.len(),
        });
    }
    let rule_outputs = model
        .selected
        .rules
        .iter()
        .map(|r| r.rule_output(sample))
        .collect::<Result<Vec<_>>>()?;
    let correctness_flags = crate::correctness::predict_correctness(&model.correctness, sample)?;
    let probability = weighted_probability(&rule_outputs, &correctness_flags, &model.weights)?;
    Ok(PredictionTrace {
        weights: correctness_flags
            .iter()
            .map(|&c| model.weights.weight(c))
            .collect(),
        rule_outputs,
        correctness_flags,
        probability,
    })
}
