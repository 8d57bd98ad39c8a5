//! One-way ANOVA F-statistic per feature.

use crate::error::{Error, Result};
use crate::par::{map_indices, Exec};

use super::dataset::LabeledFeatureSet;

/// Per-feature F scores and the feature indices sorted by descending score.
///
/// A feature whose classes are internally constant but differ from each
/// other scores `f64::INFINITY`, which ranks above every finite score.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

fn f_statistic(groups: &[Vec<f64>]) -> f64 {
    let all = groups.iter().flatten();
    let first = groups[0][0];
    if all.clone().all(|&x| x == first) {
        return 0.0;
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    let grand = all.sum::<f64>() / n as f64;

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (mean - grand) * (mean - grand);
        // a constant group contributes exactly zero
        if g.iter().any(|&x| x != g[0]) {
            ss_within += g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        }
    }
    if ss_within == 0.0 {
        return f64::INFINITY;
    }
    (ss_between / (k - 1) as f64) / (ss_within / (n - k) as f64)
}

pub fn anova_rank(data: &LabeledFeatureSet) -> Result<FeatureRanking> {
    anova_rank_with(data, Exec::default())
}

pub fn anova_rank_with(data: &LabeledFeatureSet, exec: Exec) -> Result<FeatureRanking> {
    let counts = data.class_counts();
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if present.len() < 2 {
        return Err(Error::Validation(format!(
            "ANOVA needs at least 2 classes, found {}",
            present.len()
        )));
    }
    if let Some(&c) = present.iter().find(|&&c| counts[c] < 2) {
        return Err(Error::Validation(format!(
            "class '{}' has {} sample(s); ANOVA needs at least 2 per class",
            data.class_set()[c],
            counts[c]
        )));
    }
    let scores = map_indices(exec, data.n_features(), |f| {
        let groups: Vec<Vec<f64>> = present
            .iter()
            .map(|&c| {
                (0..data.len())
                    .filter(|&i| data.labels()[i] == c)
                    .map(|i| data.value(i, f))
                    .collect()
            })
            .collect();
        f_statistic(&groups)
    });
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(FeatureRanking { scores, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::locomotion_feature_set;

    fn set(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> LabeledFeatureSet {
        let n = rows[0].len();
        LabeledFeatureSet::new(
            rows,
            labels,
            vec!["a".into(), "b".into(), "c".into()],
            locomotion_feature_set().into_iter().take(n).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_feature_scores_zero() {
        let d = set(vec![vec![0.1], vec![0.1], vec![0.1], vec![0.1]], vec![0, 0, 1, 1]);
        assert_eq!(anova_rank(&d).unwrap().scores, vec![0.0]);
    }

    #[test]
    fn perfect_separation_is_infinite() {
        let d = set(vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![1.0, 1.5], vec![1.0, 1.7]], vec![0, 0, 1, 1]);
        let r = anova_rank(&d).unwrap();
        assert_eq!(r.scores[0], f64::INFINITY);
        assert!(r.scores[1].is_finite());
        assert_eq!(r.order, vec![0, 1]);
    }

    #[test]
    fn known_value() {
        // groups {1,2,3} and {4,5,6}: SSB = 13.5, SSW = 4, F = 13.5 / (4/4)
        let d = set(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0], vec![6.0]],
            vec![0, 0, 0, 1, 1, 1],
        );
        assert!((anova_rank(&d).unwrap().scores[0] - 13.5).abs() < 1e-12);
    }

    #[test]
    fn undersized_class_rejected() {
        let d = set(vec![vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1]);
        assert!(anova_rank(&d).is_err());
        let d = set(vec![vec![1.0], vec![2.0]], vec![0, 0]);
        assert!(anova_rank(&d).is_err());
    }
}
