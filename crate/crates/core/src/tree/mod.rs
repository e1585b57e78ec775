//! CART trees and random forests used as rule generators and baselines.

mod cart;
mod forest;

pub use cart::{fit_tree, SplitTest, TreeNode, TreeParams};
pub use forest::{fit_forest, Forest, ForestParams};
