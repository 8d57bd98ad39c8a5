//! Feature selection, CART training, MLC config compilation and metrics.

mod anova;
mod cart;
mod config;
mod dataset;
mod metrics;
mod rfe;

pub use anova::{anova_rank, anova_rank_with, FeatureRanking};
pub use cart::{gini, gini_importances, predict, train_tree, train_tree_with, DecisionTree, Node, TreeParams};
pub use config::{compile_config, parse_config, Encoding, MlcConfig, MAX_NODES};
pub use dataset::LabeledFeatureSet;
pub use metrics::{evaluate, ConfusionMatrix, Evaluation};
pub use rfe::{rfe_select, rfe_select_indices};
