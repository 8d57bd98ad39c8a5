use crate::error::{Error, Result};
use crate::features::{FeatureSpec, FeatureVector};

/// Feature rows with class labels, the training input for every tree tool.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatureSet {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_set: Vec<String>,
    feature_specs: Vec<FeatureSpec>,
}

impl LabeledFeatureSet {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_set: Vec<String>,
        feature_specs: Vec<FeatureSpec>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Validation(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != feature_specs.len()) {
            return Err(Error::Validation(format!(
                "row {i} has {} values, expected {}",
                rows[i].len(),
                feature_specs.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::Validation(format!("row {i} has a non-finite value")));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_set.len()) {
            return Err(Error::Validation(format!("label index {l} outside class set")));
        }
        Ok(LabeledFeatureSet {
            rows,
            labels,
            class_set,
            feature_specs,
        })
    }

    /// Collects the labeled windows; unlabeled windows are skipped.
    pub fn from_vectors(
        vectors: &[FeatureVector],
        class_set: Vec<String>,
        feature_specs: Vec<FeatureSpec>,
    ) -> Result<Self> {
        let (rows, labels) = vectors
            .iter()
            .filter_map(|v| v.label.map(|l| (v.values.clone(), l)))
            .unzip();
        Self::new(rows, labels, class_set, feature_specs)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_set(&self) -> &[String] {
        &self.class_set
    }

    pub fn feature_specs(&self) -> &[FeatureSpec] {
        &self.feature_specs
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_specs.len()
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.rows[row][feature]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_set.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn distinct_labels(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Keeps only the given feature columns, in the given order.
    pub fn select_features(&self, keep: &[usize]) -> LabeledFeatureSet {
        LabeledFeatureSet {
            rows: self.rows.iter().map(|r| keep.iter().map(|&k| r[k]).collect()).collect(),
            labels: self.labels.clone(),
            class_set: self.class_set.clone(),
            feature_specs: keep.iter().map(|&k| self.feature_specs[k]).collect(),
        }
    }
}
