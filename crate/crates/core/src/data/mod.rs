//! Dataset loading, imputation and cross-validation splits.

mod dataset;
mod schema;
mod split;

pub use dataset::{Dataset, FeatureColumn, FeatureKind, FeatureMatrix, FeatureSpec};
pub use schema::{ColumnDecl, Schema, SCHEMA_VERSION};
pub use split::{stratified_folds, SplitPlan};
