mod common;

use common::{classes, random_config, random_recording, rng};
use har_core::host::HostController;
use har_core::ingest::{Recording, SampleFrame};
use har_core::sensor::{reg, Cause, VirtualSensor, WakeupSpec};
use har_core::sim::{classify_offline, replay};
use har_core::tree::{compile_config, DecisionTree, Encoding};
use har_core::features::{locomotion_feature_set, WindowSpec};
use proptest::prelude::*;
use rand::Rng;

fn runs<T: PartialEq>(xs: &[T]) -> usize {
    if xs.is_empty() {
        0
    } else {
        1 + xs.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

#[test]
fn emulator_matches_offline_classification() {
    let mut r = rng(31);
    for _ in 0..100 {
        let n = r.random_range(200..2000);
        let rec = random_recording(&mut r, n, 240.0);
        let window = r.random_range(20..240);
        let cfg = random_config(&mut r, &rec, window);
        let offline = classify_offline(&rec, &cfg).unwrap();
        let mut sensor = VirtualSensor::new(cfg.clone()).unwrap();
        let mut live = Vec::new();
        for f in rec.frames() {
            if let Some(d) = sensor.clock_in(f).unwrap() {
                live.push((d.window_end_t, d.class));
                assert_eq!(Some(d.code), cfg.code_of(d.class));
                assert_eq!(sensor.peek(reg::DEC_TREE_OUT_1), d.code);
            }
        }
        assert_eq!(live, offline);
    }
}

#[test]
fn line_tracks_latches_and_status_clears_on_read() {
    let mut r = rng(32);
    let rec = random_recording(&mut r, 3000, 240.0);
    let cfg = random_config(&mut r, &rec, 60);
    let mut s = VirtualSensor::new(cfg).unwrap();
    assert_eq!(s.read_register(reg::WHO_AM_I), reg::WHO_AM_I_VALUE);
    for f in rec.frames() {
        s.clock_in(f).unwrap();
        let latched = s.peek(reg::MLC_STATUS) & reg::LATCH != 0 || s.peek(reg::WAKE_SRC) & reg::LATCH != 0;
        assert_eq!(s.interrupt_asserted(), latched);
        if r.random_bool(0.5) {
            s.read_register(reg::MLC_STATUS);
            s.read_register(reg::WAKE_SRC);
            assert!(!s.interrupt_asserted());
            assert_eq!(s.peek(reg::MLC_STATUS), 0);
        }
    }
}

fn still(n: usize) -> Recording {
    let frames = (0..n)
        .map(|i| SampleFrame::new(i as f64 / 240.0, [0.0, 0.0, 1.0], [0.0; 3]).with_label(2))
        .collect();
    Recording::with_rate(frames, 240.0, classes()).unwrap()
}

#[test]
fn still_sensor_raises_one_result_and_no_wakeup() {
    let cfg = compile_config(
        &DecisionTree::leaf(2),
        &locomotion_feature_set(),
        &WindowSpec::default(),
        &classes(),
        &Encoding::locomotion(),
    )
    .unwrap();
    let out = replay(&still(240 * 10), &cfg, WakeupSpec::default()).unwrap();
    assert_eq!(out.events.len(), 1);
    assert_eq!(out.events[0].cause, Cause::MlcResult);
    assert_eq!(out.events[0].dec_tree_out, 8);
    assert_eq!(out.host_reads, 3);
    assert_eq!(out.timeline.segments.len(), 1);
    assert_eq!(out.timeline.segments[0].duration_s, 10.0);
}

#[test]
fn unknown_code_is_logged_as_fault() {
    let cfg = compile_config(
        &DecisionTree::leaf(2),
        &locomotion_feature_set(),
        &WindowSpec::default(),
        &classes(),
        &Encoding::locomotion(),
    )
    .unwrap();
    let mut s = VirtualSensor::new(cfg).unwrap();
    let mut host = HostController::new(Encoding::new(vec![("walk".into(), 0)]).unwrap());
    host.arm(0.0);
    for f in still(480).frames() {
        s.clock_in(f).unwrap();
        host.poll(f.t, &mut s).unwrap();
    }
    assert_eq!(host.faults().len(), 1);
    assert_eq!(host.faults()[0].raw, 8);
    assert!(host.finalize(2.0).unwrap().segments.is_empty());
}

#[test]
fn wakeup_threshold_is_strict() {
    let spec = WakeupSpec::default();
    let at = |z: f64| SampleFrame::new(0.0, [0.0, 0.0, z], [0.0; 3]);
    assert!(!spec.triggers(&at(1.05)));
    assert!(spec.triggers(&at(1.2)));
    assert!(spec.triggers(&at(0.8)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn replay_invariants(seed in any::<u64>(), n in 300usize..3000, window in 30usize..240) {
        let mut r = rng(seed);
        let rec = random_recording(&mut r, n, 240.0);
        let cfg = random_config(&mut r, &rec, window);
        let out = replay(&rec, &cfg, WakeupSpec::default()).unwrap();

        let codes: Vec<u8> = out.windows.iter().map(|w| w.code).collect();
        let results = out.events.iter().filter(|e| e.cause == Cause::MlcResult).count();
        prop_assert_eq!(results, runs(&codes));
        prop_assert_eq!(out.quiescent_reads, 0);
        prop_assert_eq!(out.timeline.segments.len(), runs(&codes));
        prop_assert!(out.faults.is_empty());
        out.timeline.validate().unwrap();

        let span = n as f64 / 240.0;
        if !codes.is_empty() {
            let sum: f64 = out.timeline.segments.iter().map(|s| s.duration_s).sum();
            prop_assert!((sum - span).abs() <= 1e-9 * span);
            prop_assert_eq!(out.timeline.segments[0].start_s, 0.0);
        }
        for w in out.events.windows(2) {
            prop_assert!(w[0].t <= w[1].t);
        }
    }
}
