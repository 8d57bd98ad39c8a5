//! The `har` subcommands.

use std::path::{Path, PathBuf};

use har_core::features::{
    locomotion_feature_set, vectors_to_csv, window_features, FeatureSpec, FeatureVector, WindowSpec,
};
use har_core::host::faults_to_csv;
use har_core::ingest::{conform_rate, fmt_sig, parse_csv, Recording};
use har_core::sensor::{events_to_csv, WakeupSpec};
use har_core::sim::{classify_offline, replay, ReplayOutput};
use har_core::tree::{
    anova_rank, compile_config, evaluate, parse_config, rfe_select_indices, train_tree, ConfusionMatrix, DecisionTree,
    Encoding, Evaluation, FeatureRanking, LabeledFeatureSet, MlcConfig, TreeParams,
};

use crate::error::{CliError, Result};
use crate::output::{read_text, write_atomic};
use crate::synth::{generate, SynthSpec};

pub const DEFAULT_CLASSES: &str = "walk,stairsUp,stance";
pub const DEFAULT_ENCODING: &str = "stance=8,walk=0,stairsUp=4";

pub fn parse_classes(s: &str) -> Result<Vec<String>> {
    let classes: Vec<String> = s.split(',').map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect();
    if classes.is_empty() {
        return Err(har_core::Error::Validation("class list is empty".into()).into());
    }
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].contains(c) {
            return Err(har_core::Error::Validation(format!("class '{c}' listed twice")).into());
        }
    }
    Ok(classes)
}

fn input<T>(path: &Path, r: har_core::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_recording(path: &Path, classes: &[String]) -> Result<Recording> {
    let text = read_text(path)?;
    input(path, parse_csv(&text, classes))
}

pub fn load_config(path: &Path) -> Result<MlcConfig> {
    let text = read_text(path)?;
    input(path, parse_config(&text))
}

pub fn cmd_synth(spec: &SynthSpec, classes: &[String], out: &Path) -> Result<Recording> {
    let rec = generate(spec, classes)?;
    write_atomic(out, &rec.to_csv())?;
    Ok(rec)
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub classes: Vec<String>,
    pub encoding: Encoding,
    pub params: TreeParams,
    /// Features kept after RFE (the full set keeps everything).
    pub features: usize,
    pub window: WindowSpec,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            classes: parse_classes(DEFAULT_CLASSES).unwrap(),
            encoding: DEFAULT_ENCODING.parse().unwrap(),
            params: TreeParams::default(),
            features: 15,
            window: WindowSpec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub dataset: LabeledFeatureSet,
    pub selected: Vec<usize>,
    pub tree: DecisionTree,
    pub config: MlcConfig,
    pub evaluation: Evaluation,
}

impl TrainOutcome {
    pub fn report(&self) -> String {
        let names: Vec<String> = self.selected.iter().map(|&i| format!("F{}:{}", i + 1, self.dataset.feature_specs()[i])).collect();
        format!(
            "instances {}\nfeatures {}\ntree leaves {} size {} depth {}\n{}",
            self.dataset.len(),
            names.join(" "),
            self.tree.leaves(),
            self.tree.size(),
            self.tree.depth(),
            self.evaluation.report()
        )
    }
}

/// Window features of a recording under the locomotion feature set, and
/// the labeled training set built from them.
pub fn build_dataset(rec: &Recording, window: &WindowSpec) -> Result<(Vec<FeatureVector>, LabeledFeatureSet)> {
    let rec = conform_rate(rec, window.odr_hz())?;
    let specs = locomotion_feature_set();
    let vectors = window_features(&rec, window, &specs)?;
    let data = LabeledFeatureSet::from_vectors(&vectors, rec.class_set().to_vec(), specs)?;
    if data.is_empty() {
        return Err(CliError::Degenerate("recording has no complete labeled window".into()));
    }
    if data.distinct_labels() < 2 {
        return Err(CliError::Degenerate(format!(
            "training needs at least 2 classes, found {}",
            data.distinct_labels()
        )));
    }
    Ok((vectors, data))
}

pub fn train_dataset(data: LabeledFeatureSet, opts: &TrainOptions) -> Result<TrainOutcome> {
    let selected = rfe_select_indices(&data, opts.features.min(data.n_features()), opts.params)?;
    let reduced = data.select_features(&selected);
    let tree = train_tree(&reduced, opts.params)?;
    let evaluation = evaluate(&tree, &reduced);
    let config = compile_config(&tree, reduced.feature_specs(), &opts.window, reduced.class_set(), &opts.encoding)?;
    Ok(TrainOutcome {
        dataset: data,
        selected,
        tree,
        config,
        evaluation,
    })
}

pub fn cmd_train(
    csv: &Path,
    opts: &TrainOptions,
    out: &Path,
    report: Option<&Path>,
    features_out: Option<&Path>,
) -> Result<TrainOutcome> {
    let rec = load_recording(csv, &opts.classes)?;
    let (vectors, data) = build_dataset(&rec, &opts.window)?;
    if let Some(p) = features_out {
        write_atomic(p, &vectors_to_csv(&vectors, data.n_features(), data.class_set()))?;
    }
    let outcome = train_dataset(data, opts)?;
    write_atomic(out, &outcome.config.to_text())?;
    if let Some(p) = report {
        write_atomic(p, &outcome.report())?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub specs: Vec<FeatureSpec>,
    pub ranking: FeatureRanking,
    pub selected: Vec<usize>,
}

impl Selection {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ordinal,feature,f_score,anova_rank,selected\n");
        for (i, spec) in self.specs.iter().enumerate() {
            let rank = self.ranking.order.iter().position(|&o| o == i).unwrap() + 1;
            out.push_str(&format!(
                "F{},{spec},{},{rank},{}\n",
                i + 1,
                fmt_sig(self.ranking.scores[i]),
                u8::from(self.selected.contains(&i))
            ));
        }
        out
    }
}

pub fn cmd_select(csv: &Path, opts: &TrainOptions, out: Option<&Path>) -> Result<Selection> {
    let rec = load_recording(csv, &opts.classes)?;
    let (_, data) = build_dataset(&rec, &opts.window)?;
    let ranking = anova_rank(&data)?;
    let selected = rfe_select_indices(&data, opts.features.min(data.n_features()), opts.params)?;
    let sel = Selection {
        specs: data.feature_specs().to_vec(),
        ranking,
        selected,
    };
    if let Some(p) = out {
        write_atomic(p, &sel.to_csv())?;
    }
    Ok(sel)
}

/// Re-validates a config, optionally re-encodes it, and writes canonical text.
pub fn cmd_compile(cfg_path: &Path, encoding: Option<&Encoding>, out: &Path) -> Result<MlcConfig> {
    let cfg = load_config(cfg_path)?;
    let cfg = match encoding {
        None => cfg,
        Some(enc) => compile_config(&cfg.tree, &cfg.feature_specs, &cfg.window_spec(), &cfg.class_set, enc)?,
    };
    write_atomic(out, &cfg.to_text())?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct ReplayPaths {
    pub timeline: PathBuf,
    pub events: PathBuf,
    pub windows: PathBuf,
    pub faults: PathBuf,
}

impl ReplayPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ReplayPaths {
            timeline: dir.join("timeline.csv"),
            events: dir.join("events.csv"),
            windows: dir.join("windows.csv"),
            faults: dir.join("faults.csv"),
        }
    }
}

pub fn cmd_replay(
    csv: &Path,
    cfg_path: &Path,
    classes: &[String],
    wakeup: WakeupSpec,
    out_dir: &Path,
) -> Result<ReplayOutput> {
    let cfg = load_config(cfg_path)?;
    let rec = load_recording(csv, classes)?;
    let out = replay(&rec, &cfg, wakeup)?;
    let paths = ReplayPaths::in_dir(out_dir);
    write_atomic(&paths.timeline, &out.timeline.to_csv())?;
    write_atomic(&paths.events, &events_to_csv(&out.events))?;
    write_atomic(&paths.windows, &out.windows_csv())?;
    write_atomic(&paths.faults, &faults_to_csv(&out.faults))?;
    Ok(out)
}

/// Reads one named column from a CSV with a header row.
fn read_column(path: &Path, names: &[&str]) -> Result<Vec<String>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = names
        .iter()
        .find_map(|n| header.iter().position(|h| h == n))
        .ok_or_else(|| CliError::Input {
            path: path.to_path_buf(),
            source: har_core::Error::Parse {
                line: 1,
                msg: format!("no column named {}", names.join(" or ")),
            },
        })?;
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',').nth(col).map(|s| s.trim().to_string()).ok_or_else(|| CliError::Input {
                path: path.to_path_buf(),
                source: har_core::Error::Parse {
                    line: i + 2,
                    msg: format!("missing column {}", col + 1),
                },
            })
        })
        .collect()
}

/// Compares predictions with ground truth. Predictions come from the
/// `predicted` column; truth from `labels` (column `label` or `truth`) or,
/// when absent, from the `truth` column of the predictions file.
pub fn cmd_eval(predictions: &Path, labels: Option<&Path>, classes: &[String]) -> Result<Evaluation> {
    let predicted = read_column(predictions, &["predicted"])?;
    let truth = match labels {
        Some(p) => read_column(p, &["label", "truth"])?,
        None => read_column(predictions, &["truth"])?,
    };
    let index = |name: &str| -> Result<usize> {
        classes
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| har_core::Error::Validation(format!("unknown label '{name}'")).into())
    };
    let mut t_idx = Vec::new();
    let mut p_idx = Vec::new();
    for (t, p) in truth.iter().zip(&predicted) {
        if t.is_empty() {
            continue;
        }
        t_idx.push(index(t)?);
        p_idx.push(index(p)?);
    }
    if truth.len() != predicted.len() {
        return Err(har_core::Error::Validation(format!(
            "{} labels but {} predictions",
            truth.len(),
            predicted.len()
        ))
        .into());
    }
    if t_idx.is_empty() {
        return Err(CliError::Degenerate("no labeled predictions to evaluate".into()));
    }
    let m = ConfusionMatrix::from_labels(classes.to_vec(), &t_idx, &p_idx)?;
    Ok(Evaluation::from_confusion(m))
}

/// Block-averaged channels at `rate_hz`, plus the decision trace when a
/// config is given (register value in force at each output sample).
pub fn cmd_plotdata(csv: &Path, classes: &[String], cfg_path: Option<&Path>, rate_hz: f64, out: &Path) -> Result<usize> {
    let rec = load_recording(csv, classes)?;
    let trace = match cfg_path {
        Some(p) => {
            let cfg = load_config(p)?;
            let decisions = classify_offline(&rec, &cfg)?;
            Some(
                decisions
                    .into_iter()
                    .map(|(t, c)| (t, cfg.code_of(c).expect("validated")))
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };
    let down = conform_rate(&rec, rate_hz)?;
    let mut text = String::from("t_s,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps");
    if trace.is_some() {
        text.push_str(",dec_tree_out");
    }
    text.push('\n');
    let mut next = 0;
    let mut current: Option<u8> = None;
    for f in down.frames() {
        text.push_str(&fmt_sig(f.t));
        for v in f.acc.iter().chain(&f.gyr) {
            text.push(',');
            text.push_str(&fmt_sig(*v));
        }
        if let Some(tr) = &trace {
            while next < tr.len() && tr[next].0 <= f.t {
                current = Some(tr[next].1);
                next += 1;
            }
            text.push(',');
            if let Some(c) = current {
                text.push_str(&c.to_string());
            }
        }
        text.push('\n');
    }
    write_atomic(out, &text)?;
    Ok(down.len())
}

/// Synthesizes a training set whose windows split into the requested
/// per-class counts (one window per second at the default ODR).
pub fn training_spec(walk: usize, stairs: usize, stance: usize, seed: u64) -> SynthSpec {
    use crate::synth::{Mode, Phase};
    SynthSpec {
        seed,
        phases: vec![
            Phase {
                mode: Mode::Walk,
                duration_s: walk as f64,
            },
            Phase {
                mode: Mode::StairsUp,
                duration_s: stairs as f64,
            },
            Phase {
                mode: Mode::Stance,
                duration_s: stance as f64,
            },
        ],
        ..SynthSpec::default()
    }
}
