//! The deployable MLC configuration and its canonical `MLCFG v1` text form.
//!
//! ```text
//! MLCFG v1
//! odr_hz 240
//! window 240
//! feature <ordinal> <KIND> <SENSOR> <AXIS>
//! node <idx> split <feature_ordinal> <threshold> <left_idx> <right_idx>
//! node <idx> leaf <class_name>
//! encode <class_name> <register_value>
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{check_unique, FeatureSpec, WindowSpec};

use super::cart::{DecisionTree, Node};

/// Config format limit on tree size.
pub const MAX_NODES: usize = 256;

const MAGIC: &str = "MLCFG v1";

/// Class name to output-register value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub entries: Vec<(String, u8)>,
}

impl Encoding {
    pub fn new(entries: Vec<(String, u8)>) -> Result<Self> {
        let e = Encoding { entries };
        e.check()?;
        Ok(e)
    }

    /// `stance=8, walk=0, stairsUp=4`
    pub fn locomotion() -> Self {
        Encoding {
            entries: vec![("stance".into(), 8), ("walk".into(), 0), ("stairsUp".into(), 4)],
        }
    }

    /// Names and values must both be unique.
    pub fn check(&self) -> Result<()> {
        for (i, (name, value)) in self.entries.iter().enumerate() {
            for (other, v) in &self.entries[..i] {
                if other == name {
                    return Err(Error::Config(format!("class '{name}' encoded twice")));
                }
                if v == value {
                    return Err(Error::Config(format!(
                        "encoding is not injective: '{other}' and '{name}' both map to {value}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, class: &str) -> Option<u8> {
        self.entries.iter().find(|(c, _)| c == class).map(|(_, v)| *v)
    }

    pub fn decode(&self, value: u8) -> Option<&str> {
        self.entries.iter().find(|(_, v)| *v == value).map(|(c, _)| c.as_str())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|pair| {
                let (name, value) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::Validation(format!("encoding entry '{pair}' is not class=value")))?;
                let value: u8 = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Validation(format!("register value '{value}' is not in 0..255")))?;
                Ok((name.trim().to_string(), value))
            })
            .collect::<Result<Vec<_>>>()?;
        Encoding::new(entries)
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}={v}")?;
        }
        Ok(())
    }
}

/// Everything the virtual sensor needs to run the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MlcConfig {
    pub odr_hz: f64,
    pub window_length: usize,
    pub feature_specs: Vec<FeatureSpec>,
    /// Leaves index `class_set`.
    pub tree: DecisionTree,
    pub class_set: Vec<String>,
    pub encoding: Encoding,
}

impl MlcConfig {
    pub fn validate(&self) -> Result<()> {
        WindowSpec::new(self.odr_hz, self.window_length).map_err(|e| Error::Config(e.to_string()))?;
        check_unique(&self.feature_specs).map_err(|e| Error::Config(e.to_string()))?;
        if self.tree.size() > MAX_NODES {
            return Err(Error::Config(format!(
                "tree has {} nodes, limit is {MAX_NODES}",
                self.tree.size()
            )));
        }
        if let Some(f) = self.tree.max_feature() {
            if f >= self.feature_specs.len() {
                return Err(Error::Config(format!(
                    "split on feature {f} but only {} features configured",
                    self.feature_specs.len()
                )));
            }
        }
        self.encoding.check()?;
        if let Some((c, _)) = self.encoding.entries.iter().find(|(c, _)| !self.class_set.contains(c)) {
            return Err(Error::Config(format!("encoding names unknown class '{c}'")));
        }
        for class in self.tree.leaf_classes() {
            let name = self
                .class_set
                .get(class)
                .ok_or_else(|| Error::Config(format!("leaf class index {class} outside class set")))?;
            if self.encoding.get(name).is_none() {
                return Err(Error::Config(format!("leaf class '{name}' has no encoding")));
            }
        }
        Ok(())
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec::new(self.odr_hz, self.window_length).expect("validated config")
    }

    /// Register value for a class index.
    pub fn code_of(&self, class: usize) -> Option<u8> {
        self.class_set.get(class).and_then(|c| self.encoding.get(c))
    }

    /// Canonical text. Encode lines follow class-set order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("odr_hz {}\n", self.odr_hz));
        out.push_str(&format!("window {}\n", self.window_length));
        for (i, s) in self.feature_specs.iter().enumerate() {
            out.push_str(&format!("feature {i} {} {} {}\n", s.kind, s.channel.sensor, s.channel.axis));
        }
        for (i, n) in self.tree.nodes().iter().enumerate() {
            match n {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => out.push_str(&format!("node {i} split {feature} {threshold} {left} {right}\n")),
                Node::Leaf { class } => out.push_str(&format!("node {i} leaf {}\n", self.class_set[*class])),
            }
        }
        for c in &self.class_set {
            if let Some(v) = self.encoding.get(c) {
                out.push_str(&format!("encode {c} {v}\n"));
            }
        }
        out
    }
}

/// Builds a validated config. Classes without an encoding are dropped from
/// the class set (they must not appear in leaves).
pub fn compile_config(
    tree: &DecisionTree,
    feature_specs: &[FeatureSpec],
    wspec: &WindowSpec,
    class_set: &[String],
    encoding: &Encoding,
) -> Result<MlcConfig> {
    encoding.check()?;
    for class in tree.leaf_classes() {
        let name = class_set
            .get(class)
            .ok_or_else(|| Error::Config(format!("leaf class index {class} outside class set")))?;
        if encoding.get(name).is_none() {
            return Err(Error::Config(format!("leaf class '{name}' has no encoding")));
        }
    }
    if let Some((c, _)) = encoding.entries.iter().find(|(c, _)| !class_set.contains(c)) {
        return Err(Error::Config(format!("encoding names unknown class '{c}'")));
    }
    let kept: Vec<usize> = (0..class_set.len()).filter(|&i| encoding.get(&class_set[i]).is_some()).collect();
    let tree = tree.map_classes(|c| kept.iter().position(|&k| k == c).expect("leaf classes are encoded"));
    let cfg = MlcConfig {
        odr_hz: wspec.odr_hz(),
        window_length: wspec.length(),
        feature_specs: feature_specs.to_vec(),
        tree,
        class_set: kept.iter().map(|&i| class_set[i].clone()).collect(),
        encoding: Encoding {
            entries: kept
                .iter()
                .map(|&i| (class_set[i].clone(), encoding.get(&class_set[i]).unwrap()))
                .collect(),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

enum RawNode {
    Split(usize, f64, usize, usize),
    Leaf(String),
}

fn field<T: FromStr>(tokens: &[&str], i: usize, line: usize, what: &str) -> Result<T> {
    let tok = tokens
        .get(i)
        .ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{tok}'")))
}

fn arity(tokens: &[&str], n: usize, line: usize) -> Result<()> {
    if tokens.len() != n {
        return Err(Error::parse(
            line,
            format!("'{}' takes {} fields, found {}", tokens[0], n - 1, tokens.len() - 1),
        ));
    }
    Ok(())
}

/// Parses and validates `MLCFG v1` text.
pub fn parse_config(text: &str) -> Result<MlcConfig> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(Error::parse(1, format!("expected '{MAGIC}' header"))),
    }
    let mut odr_hz: Option<f64> = None;
    let mut window: Option<usize> = None;
    let mut features = Vec::new();
    let mut raw_nodes = Vec::new();
    let mut encodes: Vec<(String, u8)> = Vec::new();

    for (line, content) in lines {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&directive) = tokens.first() else {
            continue;
        };
        match directive {
            "odr_hz" => {
                arity(&tokens, 2, line)?;
                if odr_hz.replace(field(&tokens, 1, line, "ODR")?).is_some() {
                    return Err(Error::parse(line, "duplicate odr_hz"));
                }
            }
            "window" => {
                arity(&tokens, 2, line)?;
                if window.replace(field(&tokens, 1, line, "window length")?).is_some() {
                    return Err(Error::parse(line, "duplicate window"));
                }
            }
            "feature" => {
                arity(&tokens, 5, line)?;
                let ordinal: usize = field(&tokens, 1, line, "feature ordinal")?;
                if ordinal != features.len() {
                    return Err(Error::parse(line, format!("feature ordinal {ordinal}, expected {}", features.len())));
                }
                features.push(FeatureSpec::new(
                    field(&tokens, 2, line, "feature kind")?,
                    field(&tokens, 3, line, "sensor")?,
                    field(&tokens, 4, line, "axis")?,
                ));
            }
            "node" => {
                let idx: usize = field(&tokens, 1, line, "node index")?;
                if idx != raw_nodes.len() {
                    return Err(Error::parse(line, format!("node index {idx}, expected {}", raw_nodes.len())));
                }
                match tokens.get(2).copied() {
                    Some("split") => {
                        arity(&tokens, 7, line)?;
                        let threshold: f64 = field(&tokens, 4, line, "threshold")?;
                        if !threshold.is_finite() {
                            return Err(Error::parse(line, "threshold must be finite"));
                        }
                        raw_nodes.push(RawNode::Split(
                            field(&tokens, 3, line, "feature ordinal")?,
                            threshold,
                            field(&tokens, 5, line, "left index")?,
                            field(&tokens, 6, line, "right index")?,
                        ));
                    }
                    Some("leaf") => {
                        arity(&tokens, 4, line)?;
                        raw_nodes.push(RawNode::Leaf(tokens[3].to_string()));
                    }
                    other => return Err(Error::parse(line, format!("unknown node type {other:?}"))),
                }
            }
            "encode" => {
                arity(&tokens, 3, line)?;
                encodes.push((tokens[1].to_string(), field(&tokens, 2, line, "register value (0..255)")?));
            }
            other => return Err(Error::parse(line, format!("unknown directive '{other}'"))),
        }
    }

    let odr_hz = odr_hz.ok_or_else(|| Error::Config("missing odr_hz".into()))?;
    let window_length = window.ok_or_else(|| Error::Config("missing window".into()))?;
    if raw_nodes.is_empty() {
        return Err(Error::Config("config has no nodes".into()));
    }
    let mut class_set: Vec<String> = encodes.iter().map(|(c, _)| c.clone()).collect();
    class_set.dedup();
    let mut class_index = |name: &str| -> usize {
        match class_set.iter().position(|c| c == name) {
            Some(i) => i,
            None => {
                class_set.push(name.to_string());
                class_set.len() - 1
            }
        }
    };
    let nodes: Vec<Node> = raw_nodes
        .into_iter()
        .map(|n| match n {
            RawNode::Split(feature, threshold, left, right) => Node::Split {
                feature,
                threshold,
                left,
                right,
            },
            RawNode::Leaf(name) => Node::Leaf {
                class: class_index(&name),
            },
        })
        .collect();
    let tree = DecisionTree::from_nodes(nodes).map_err(|e| Error::Config(e.to_string()))?;
    let cfg = MlcConfig {
        odr_hz,
        window_length,
        feature_specs: features,
        tree,
        class_set,
        encoding: Encoding { entries: encodes },
    };
    cfg.validate()?;
    Ok(cfg)
}
