#![allow(dead_code)]

use har_core::features::{Axis, FeatureKind, FeatureSpec, Sensor};
use har_core::ingest::{Recording, SampleFrame};
use har_core::tree::{DecisionTree, Node};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn classes() -> Vec<String> {
    ["walk", "stairsUp", "stance"].iter().map(|s| s.to_string()).collect()
}

/// |a - b| / max(|a|, |b|), zero when both are zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn random_frame(rng: &mut impl Rng, t: f64) -> SampleFrame {
    let mut acc = [0.0; 3];
    let mut gyr = [0.0; 3];
    for k in 0..3 {
        acc[k] = rng.random_range(-2.0..2.0);
        gyr[k] = rng.random_range(-250.0..250.0);
    }
    SampleFrame::new(t, acc, gyr)
}

pub fn random_recording(rng: &mut impl Rng, n: usize, rate: f64) -> Recording {
    let frames = (0..n)
        .map(|i| {
            let f = random_frame(rng, i as f64 / rate);
            let label = rng.random_range(0..3);
            f.with_label(label)
        })
        .collect();
    Recording::with_rate(frames, rate, classes()).unwrap()
}

pub fn all_specs() -> Vec<FeatureSpec> {
    let mut out = Vec::new();
    for kind in FeatureKind::ALL {
        for sensor in [Sensor::Acc, Sensor::Gyr] {
            for axis in [Axis::X, Axis::Y, Axis::Z, Axis::V] {
                out.push(FeatureSpec::new(kind, sensor, axis));
            }
        }
    }
    out
}

/// Random proper tree over `n_features` features with preorder numbering.
/// `threshold` picks the split value for a feature.
pub fn random_tree(
    rng: &mut impl Rng,
    n_features: usize,
    n_classes: usize,
    max_depth: usize,
    threshold: &mut impl FnMut(&mut dyn rand::RngCore, usize) -> f64,
) -> DecisionTree {
    fn grow(
        rng: &mut dyn rand::RngCore,
        nodes: &mut Vec<Node>,
        depth: usize,
        n_features: usize,
        n_classes: usize,
        max_depth: usize,
        threshold: &mut dyn FnMut(&mut dyn rand::RngCore, usize) -> f64,
    ) -> usize {
        let id = nodes.len();
        let split = depth < max_depth && (depth == 0 || rng.random_bool(0.6));
        if !split {
            nodes.push(Node::Leaf {
                class: rng.random_range(0..n_classes),
            });
            return id;
        }
        let feature = rng.random_range(0..n_features);
        let th = threshold(rng, feature);
        nodes.push(Node::Leaf { class: 0 });
        let left = grow(rng, nodes, depth + 1, n_features, n_classes, max_depth, threshold);
        let right = grow(rng, nodes, depth + 1, n_features, n_classes, max_depth, threshold);
        nodes[id] = Node::Split {
            feature,
            threshold: th,
            left,
            right,
        };
        id
    }
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, 0, n_features, n_classes, max_depth, threshold);
    DecisionTree::from_nodes(nodes).unwrap()
}

/// Random valid config whose thresholds sit at least 1e-6 away from every
/// feature value the recording produces.
pub fn random_config(rng: &mut impl Rng, rec: &Recording, window: usize) -> har_core::tree::MlcConfig {
    use har_core::features::{window_features, WindowSpec};
    use har_core::tree::{compile_config, Encoding};
    use rand::seq::SliceRandom;

    let mut specs = all_specs();
    specs.shuffle(rng);
    specs.truncate(rng.random_range(1..=12));
    let ws = WindowSpec::new(rec.rate_hz(), window).unwrap();
    let vectors = window_features(rec, &ws, &specs).unwrap();
    let columns: Vec<Vec<f64>> = (0..specs.len())
        .map(|f| {
            let mut c: Vec<f64> = vectors.iter().map(|v| v.values[f]).collect();
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    let mut pick = |g: &mut dyn rand::RngCore, f: usize| {
        let c = &columns[f];
        let gaps: Vec<f64> = c
            .windows(2)
            .filter(|w| w[1] - w[0] >= 2e-6)
            .map(|w| w[0] + (w[1] - w[0]) * g.random_range(0.25..0.75))
            .filter(|m| c.iter().all(|v| (v - m).abs() >= 1e-6))
            .collect();
        if gaps.is_empty() {
            c.last().copied().unwrap_or(0.0) + 1.0
        } else {
            gaps[g.random_range(0..gaps.len())]
        }
    };
    let depth = rng.random_range(1..5);
    let tree = random_tree(rng, specs.len(), 3, depth, &mut pick);
    compile_config(&tree, &specs, &ws, &classes(), &Encoding::locomotion()).unwrap()
}
