//! Greedy CART with Gini impurity.
//!
//! A sample goes LEFT iff its feature value is `<=` the threshold. The same
//! convention is used by the predictor and the virtual sensor.

use crate::error::{Error, Result};
use crate::par::{map_indices, Exec};

use super::dataset::LabeledFeatureSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Index into the class set.
    Leaf { class: usize },
}

/// Node table with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Validates that `nodes` form a proper binary tree rooted at 0.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Validation("tree has no nodes".into()));
        }
        let n = nodes.len();
        let mut parents = vec![0usize; n];
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Split {
                left, right, threshold, ..
            } = *node
            {
                if !threshold.is_finite() {
                    return Err(Error::Validation(format!("node {i}: threshold is not finite")));
                }
                for child in [left, right] {
                    if child >= n {
                        return Err(Error::Validation(format!("node {i}: child {child} out of range")));
                    }
                    if child == 0 {
                        return Err(Error::Validation(format!("node {i}: root used as a child")));
                    }
                    parents[child] += 1;
                }
            }
        }
        if let Some(i) = (1..n).find(|&i| parents[i] != 1) {
            return Err(Error::Validation(format!("node {i} has {} parents", parents[i])));
        }
        // unique parents plus full reachability from the root rules out cycles
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Validation(format!("node {i} reached twice")));
            }
            if let Node::Split { left, right, .. } = nodes[i] {
                stack.push(left);
                stack.push(right);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Validation(format!("node {i} unreachable from root")));
        }
        Ok(DecisionTree { nodes })
    }

    pub fn leaf(class: usize) -> Self {
        DecisionTree {
            nodes: vec![Node::Leaf { class }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Largest feature index referenced by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Class indices that appear in leaves, ascending and deduplicated.
    pub fn leaf_classes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { class } => Some(*class),
                Node::Split { .. } => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(crate) fn map_classes(&self, f: impl Fn(usize) -> usize) -> DecisionTree {
        DecisionTree {
            nodes: self
                .nodes
                .iter()
                .map(|n| match *n {
                    Node::Leaf { class } => Node::Leaf { class: f(class) },
                    split => split,
                })
                .collect(),
        }
    }
}

pub fn predict(tree: &DecisionTree, values: &[f64]) -> usize {
    let mut i = 0;
    loop {
        match tree.nodes[i] {
            Node::Leaf { class } => return class,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => i = if values[feature] <= threshold { left } else { right },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 4,
            min_leaf: 2,
        }
    }
}

/// Gini impurity `1 - sum p_c^2` of a class histogram.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// `n * gini`, computed from counts as `n - sum c^2 / n`.
fn weighted_gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: usize = counts.iter().map(|c| c * c).sum();
    n as f64 - sq as f64 / n as f64
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

fn best_split_on(data: &LabeledFeatureSet, idx: &[usize], feature: usize, min_leaf: usize) -> Option<Candidate> {
    let k = data.class_set().len();
    let mut sorted: Vec<(f64, usize)> = idx.iter().map(|&i| (data.value(i, feature), data.labels()[i])).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = sorted.len();
    let mut right = vec![0usize; k];
    for &(_, l) in &sorted {
        right[l] += 1;
    }
    let mut left = vec![0usize; k];
    let mut best: Option<Candidate> = None;
    for pos in 0..n - 1 {
        let (v, l) = sorted[pos];
        left[l] += 1;
        right[l] -= 1;
        let next = sorted[pos + 1].0;
        if v == next {
            continue;
        }
        let n_left = pos + 1;
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let score = weighted_gini(&left, n_left) + weighted_gini(&right, n_right);
        // ascending sweep: strict improvement keeps the lowest threshold on ties
        if best.is_none_or(|b| score < b.score) {
            best = Some(Candidate {
                score,
                feature,
                threshold: midpoint(v, next),
            });
        }
    }
    best
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a> {
    data: &'a LabeledFeatureSet,
    params: TreeParams,
    exec: Exec,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mut counts = vec![0usize; self.data.class_set().len()];
        for &i in &idx {
            counts[self.data.labels()[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || depth >= self.params.max_depth {
            None
        } else {
            let data = self.data;
            let min_leaf = self.params.min_leaf;
            let per_feature = map_indices(self.exec, data.n_features(), |f| best_split_on(data, &idx, f, min_leaf));
            // feature order is preserved, so strict improvement keeps the lower ordinal on ties
            per_feature
                .into_iter()
                .flatten()
                .fold(None, |best: Option<Candidate>, c| match best {
                    Some(b) if c.score >= b.score => Some(b),
                    _ => Some(c),
                })
        };
        let Some(split) = split else {
            self.nodes.push(Node::Leaf {
                class: majority(&counts),
            });
            return id;
        };
        self.nodes.push(Node::Leaf { class: 0 });
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.data.value(i, split.feature) <= split.threshold);
        let left = self.build(left_idx, depth + 1);
        let right = self.build(right_idx, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Trains a deterministic CART tree; nodes are numbered in preorder.
pub fn train_tree(data: &LabeledFeatureSet, params: TreeParams) -> Result<DecisionTree> {
    train_tree_with(data, params, Exec::default())
}

pub fn train_tree_with(data: &LabeledFeatureSet, params: TreeParams, exec: Exec) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::Validation("cannot train on an empty dataset".into()));
    }
    if params.max_depth < 1 || params.min_leaf < 1 {
        return Err(Error::Validation("max_depth and min_leaf must be at least 1".into()));
    }
    let mut b = Builder {
        data,
        params,
        exec,
        nodes: Vec::new(),
    };
    b.build((0..data.len()).collect(), 0);
    Ok(DecisionTree { nodes: b.nodes })
}

/// Total weighted Gini decrease attributed to each feature's splits,
/// measured by routing `data` through `tree`.
pub fn gini_importances(tree: &DecisionTree, data: &LabeledFeatureSet) -> Vec<f64> {
    let k = data.class_set().len();
    let mut importance = vec![0.0; data.n_features()];
    let mut stack = vec![(0usize, (0..data.len()).collect::<Vec<_>>())];
    let hist = |idx: &[usize]| {
        let mut c = vec![0usize; k];
        for &i in idx {
            c[data.labels()[i]] += 1;
        }
        c
    };
    while let Some((node, idx)) = stack.pop() {
        if let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = tree.nodes[node]
        {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.value(i, feature) <= threshold);
            let parent = weighted_gini(&hist(&idx), idx.len());
            let children = weighted_gini(&hist(&l), l.len()) + weighted_gini(&hist(&r), r.len());
            importance[feature] += parent - children;
            stack.push((left, l));
            stack.push((right, r));
        }
    }
    importance
}
