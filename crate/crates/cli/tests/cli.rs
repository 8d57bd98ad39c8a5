use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use har_cli::synth::{generate, parse_phases, SynthSpec};
use har_core::features::parse_vectors_csv;
use har_core::host::ModeTimeline;
use har_core::sensor::parse_events_csv;
use har_core::tree::parse_config;
use proptest::prelude::*;
use tempfile::TempDir;

const CLASSES: [&str; 3] = ["walk", "stairsUp", "stance"];

fn classes() -> Vec<String> {
    CLASSES.iter().map(|s| s.to_string()).collect()
}

fn har(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_har")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = har(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], code: i32) -> String {
    let out = har(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Trained {
    dir: TempDir,
    train_csv: PathBuf,
    cfg: PathBuf,
}

fn trained(rate: &str) -> Trained {
    let dir = TempDir::new().unwrap();
    let train_csv = dir.path().join("train.csv");
    let cfg = dir.path().join("model.mlcfg");
    ok(&["synth", "--rate-hz", rate, "--out", s(&train_csv)]);
    ok(&["train", s(&train_csv), "--out", s(&cfg)]);
    Trained { dir, train_csv, cfg }
}

#[test]
fn full_pipeline_through_binary() {
    let t = trained("240");
    let d = t.dir.path();
    let report = d.join("report.txt");
    let feats = d.join("features.csv");
    let stdout = ok(&[
        "train",
        s(&t.train_csv),
        "--out",
        s(&t.cfg),
        "--report",
        s(&report),
        "--features-out",
        s(&feats),
    ]);
    assert!(stdout.contains("instances 43"), "{stdout}");
    assert_eq!(fs::read_to_string(&report).unwrap(), stdout);
    let vectors = parse_vectors_csv(&fs::read_to_string(&feats).unwrap(), &classes()).unwrap();
    assert_eq!(vectors.len(), 43);

    let cfg = parse_config(&fs::read_to_string(&t.cfg).unwrap()).unwrap();
    assert_eq!(cfg.encoding.get("stance"), Some(8));

    let trial = d.join("trial.csv");
    let out_dir = d.join("replay");
    fs::create_dir(&out_dir).unwrap();
    ok(&["synth", "--seed", "7", "--segments", "stance:5,walk:4,stairsUp:9", "--out", s(&trial)]);
    let stdout = ok(&["replay", s(&trial), s(&t.cfg), "--out", s(&out_dir)]);
    assert!(stdout.starts_with("mode,start_s,end_s,duration_s\n"));

    let timeline = ModeTimeline::parse_csv(&fs::read_to_string(out_dir.join("timeline.csv")).unwrap()).unwrap();
    assert_eq!(timeline.modes(), ["stance", "walk", "stairsUp"]);
    let events = parse_events_csv(&fs::read_to_string(out_dir.join("events.csv")).unwrap()).unwrap();
    assert!(!events.is_empty());
    assert_eq!(fs::read_to_string(out_dir.join("faults.csv")).unwrap(), "t_s,raw_value\n");

    let eval = ok(&["eval", s(&out_dir.join("windows.csv"))]);
    assert!(eval.contains("correct 18/18"), "{eval}");

    let sel = ok(&["select", s(&t.train_csv), "--features", "3"]);
    assert_eq!(sel.lines().count(), 16);
    assert_eq!(sel.lines().skip(1).filter(|l| l.ends_with(",1")).count(), 3);
}

#[test]
fn eval_on_training_windows_is_diagonal() {
    let t = trained("240");
    let d = t.dir.path();
    let feats = d.join("features.csv");
    let out_dir = d.join("r");
    fs::create_dir(&out_dir).unwrap();
    ok(&["train", s(&t.train_csv), "--out", s(&t.cfg), "--features-out", s(&feats)]);
    ok(&["replay", s(&t.train_csv), s(&t.cfg), "--out", s(&out_dir), "--wakeup-g", "5"]);
    let report_path = d.join("eval.txt");
    let eval = ok(&["eval", s(&out_dir.join("windows.csv")), "--labels", s(&feats), "--out", s(&report_path)]);
    assert!(eval.contains("correct 43/43"), "{eval}");
    assert!(eval.contains("kappa 1"), "{eval}");
    assert_eq!(fs::read_to_string(report_path).unwrap(), eval);
    let rows: Vec<Vec<u64>> = eval
        .lines()
        .filter(|l| CLASSES.iter().any(|c| l.starts_with(c)))
        .map(|l| l.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows, vec![vec![16, 0, 0], vec![0, 16, 0], vec![0, 0, 11]]);
}

#[test]
fn high_rate_input_is_decimated() {
    let t = trained("7680");
    let text = fs::read_to_string(&t.train_csv).unwrap();
    assert_eq!(text.lines().count() - 1, 43 * 7680);
    let report = ok(&["train", s(&t.train_csv), "--out", s(&t.cfg)]);
    assert!(report.contains("instances 43"));
    assert!(report.contains("accuracy 1"));
}

#[test]
fn compile_round_trips_and_reencodes() {
    let t = trained("240");
    let d = t.dir.path();
    let same = d.join("same.mlcfg");
    ok(&["compile", s(&t.cfg), "--out", s(&same)]);
    assert_eq!(fs::read(&same).unwrap(), fs::read(&t.cfg).unwrap());
    let re = d.join("re.mlcfg");
    ok(&["compile", s(&t.cfg), "--reencode", "--encoding", "stance=1,walk=2,stairsUp=3", "--out", s(&re)]);
    let cfg = parse_config(&fs::read_to_string(re).unwrap()).unwrap();
    assert_eq!(cfg.encoding.get("stance"), Some(1));
}

#[test]
fn plotdata_downsamples_with_decision_trace() {
    let t = trained("240");
    let out = t.dir.path().join("plot.csv");
    let stdout = ok(&["plotdata", s(&t.train_csv), "--config", s(&t.cfg), "--out", s(&out)]);
    assert_eq!(stdout.trim(), format!("wrote {} rows", 43 * 60));
    let text = fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().ends_with(",dec_tree_out"));
    let codes: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(codes[0], "");
    assert_eq!(codes.last().copied(), Some("8"));
}

#[test]
fn missing_file_exits_3() {
    let err = fails(&["train", "/nonexistent/rec.csv", "--out", "/tmp/x.mlcfg"], 3);
    assert!(err.contains("/nonexistent/rec.csv"));
}

#[test]
fn malformed_csv_exits_4_with_line() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "t_s,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps,label\n0,0,0,1,0,0,0,walk\n0.1,zz,0,1,0,0,0,walk\n").unwrap();
    let err = fails(&["train", s(&p), "--out", s(&dir.path().join("m"))], 4);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn replay_rejects_config_with_unencoded_leaf() {
    let t = trained("240");
    let text = fs::read_to_string(&t.cfg).unwrap();
    let stripped: String = text
        .lines()
        .filter(|l| !l.starts_with("encode stance"))
        .map(|l| format!("{l}\n"))
        .collect();
    let bad = t.dir.path().join("bad.mlcfg");
    fs::write(&bad, stripped).unwrap();
    let out_dir = t.dir.path().join("o");
    fs::create_dir(&out_dir).unwrap();
    let err = fails(&["replay", s(&t.train_csv), s(&bad), "--out", s(&out_dir)], 5);
    assert!(err.contains("stance"), "{err}");
    assert!(!out_dir.join("timeline.csv").exists());
}

#[test]
fn single_class_training_exits_6() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("one.csv");
    ok(&["synth", "--segments", "walk:5", "--out", s(&p)]);
    let err = fails(&["train", s(&p), "--out", s(&dir.path().join("m"))], 6);
    assert!(err.contains("2 classes"), "{err}");
}

#[test]
fn non_finite_sample_exits_7() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("nan.csv");
    fs::write(&p, "t_s,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps,label\n0,0,0,1,0,0,0,walk\n0.1,NaN,0,1,0,0,0,walk\n").unwrap();
    fails(&["train", s(&p), "--out", s(&dir.path().join("m"))], 7);
}

#[test]
fn unknown_label_names_the_label() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("l.csv");
    fs::write(&p, "t_s,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps,label\n0,0,0,1,0,0,0,jog\n").unwrap();
    let err = fails(&["train", s(&p), "--out", s(&dir.path().join("m"))], 7);
    assert!(err.contains("jog"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    fails(&["frobnicate"], 2);
    fails(&["train"], 2);
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.mlcfg");
    fails(&["train", "/nonexistent.csv", "--out", s(&out)], 3);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synth_length_and_labels_follow_phases(seed in any::<u64>(), a in 1u32..6, b in 1u32..6) {
        let phases = parse_phases(&format!("walk:{a},stance:{b}")).unwrap();
        let spec = SynthSpec { seed, phases, ..SynthSpec::default() };
        let rec = generate(&spec, &classes()).unwrap();
        prop_assert_eq!(rec.len(), ((a + b) * 240) as usize);
        let labels: Vec<usize> = rec.frames().iter().map(|f| f.label.unwrap()).collect();
        prop_assert!(labels[..(a * 240) as usize].iter().all(|&l| l == 0));
        prop_assert!(labels[(a * 240) as usize..].iter().all(|&l| l == 2));
        prop_assert_eq!(generate(&spec, &classes()).unwrap(), rec);
    }
}
