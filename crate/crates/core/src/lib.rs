//! Personalized rule extraction from tree ensembles.
//!
//! A random forest of shallow trees is decomposed into IF-THEN-ELSE rules,
//! an L1-penalized logistic regression selects the `M` strongest rules, and
//! one classifier per selected rule predicts whether that rule will be right
//! for a given sample. Predictions average the rule outputs, weighting rules
//! expected to be correct more heavily.

pub mod correctness;
pub mod data;
pub mod error;
pub mod eval;
pub mod lasso;
pub mod pipeline;
pub mod predictor;
pub mod rules;
pub mod seed;
pub mod selection;
pub mod tree;

pub use error::{Error, Result};
