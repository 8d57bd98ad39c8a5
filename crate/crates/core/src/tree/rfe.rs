//! Recursive feature elimination driven by tree Gini importance.

use crate::error::{Error, Result};
use crate::features::FeatureSpec;

use super::cart::{gini_importances, train_tree, TreeParams};
use super::dataset::LabeledFeatureSet;

/// Surviving feature indices, ascending.
///
/// Each round trains a tree on the survivors and drops the feature with the
/// lowest importance; on ties the higher original index goes first.
pub fn rfe_select_indices(data: &LabeledFeatureSet, target_count: usize, params: TreeParams) -> Result<Vec<usize>> {
    if target_count == 0 {
        return Err(Error::Validation("RFE target count must be positive".into()));
    }
    if target_count > data.n_features() {
        return Err(Error::Validation(format!(
            "RFE target {target_count} exceeds {} features",
            data.n_features()
        )));
    }
    let mut survivors: Vec<usize> = (0..data.n_features()).collect();
    while survivors.len() > target_count {
        let subset = data.select_features(&survivors);
        let tree = train_tree(&subset, params)?;
        let importance = gini_importances(&tree, &subset);
        let mut drop = 0;
        for pos in 1..survivors.len() {
            // survivors ascend, so `<=` moves ties toward the higher index
            if importance[pos] <= importance[drop] {
                drop = pos;
            }
        }
        survivors.remove(drop);
    }
    Ok(survivors)
}

pub fn rfe_select(data: &LabeledFeatureSet, target_count: usize, params: TreeParams) -> Result<Vec<FeatureSpec>> {
    let keep = rfe_select_indices(data, target_count, params)?;
    Ok(keep.into_iter().map(|i| data.feature_specs()[i]).collect())
}
