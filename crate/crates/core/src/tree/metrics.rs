//! Confusion matrix, accuracy and Cohen's kappa.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::cart::{predict, DecisionTree};
use super::dataset::LabeledFeatureSet;

/// `counts[i][j]` = samples of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Validation(format!("confusion matrix must be {k}x{k}")));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn from_labels(classes: Vec<String>, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Validation(format!(
                "{} true labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = ConfusionMatrix::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.record(t, p);
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.trace() as f64 / total as f64
    }

    /// Cohen's kappa. When chance agreement is 1 the ratio is undefined;
    /// it is then 1 for perfect observed agreement and 0 otherwise.
    pub fn kappa(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let n = total as f64;
        let k = self.counts.len();
        let p_o = self.trace() as f64 / n;
        let p_e: f64 = (0..k)
            .map(|i| {
                let row: u64 = self.counts[i].iter().sum();
                let col: u64 = self.counts.iter().map(|r| r[i]).sum();
                row as f64 * col as f64
            })
            .sum::<f64>()
            / (n * n);
        if p_e == 1.0 {
            return if p_o == 1.0 { 1.0 } else { 0.0 };
        }
        (p_o - p_e) / (1.0 - p_e)
    }

    /// Plain-text matrix: rows are true classes, columns predictions.
    pub fn render(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(String::len)
            .chain(self.counts.iter().flatten().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1);
        let mut out = format!("{:width$}", "");
        for c in &self.classes {
            let _ = write!(out, "  {c:>width$}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(out, "{c:<width$}");
            for v in row {
                let _ = write!(out, "  {v:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub kappa: f64,
}

impl Evaluation {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        Evaluation {
            accuracy: confusion.accuracy(),
            kappa: confusion.kappa(),
            confusion,
        }
    }

    pub fn report(&self) -> String {
        format!(
            "{}correct {}/{}\naccuracy {}\nkappa {}\n",
            self.confusion.render(),
            self.confusion.trace(),
            self.confusion.total(),
            self.accuracy,
            self.kappa
        )
    }
}

pub fn evaluate(tree: &DecisionTree, data: &LabeledFeatureSet) -> Evaluation {
    let mut m = ConfusionMatrix::new(data.class_set().to_vec());
    for (row, &truth) in data.rows().iter().zip(data.labels()) {
        m.record(truth, predict(tree, row));
    }
    Evaluation::from_confusion(m)
}
