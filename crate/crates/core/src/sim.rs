//! Closed-loop replay: a recording clocked through the virtual sensor while
//! the host services every interrupt.

use crate::error::Result;
use crate::features::window_features;
use crate::host::{Fault, HostController, ModeTimeline};
use crate::ingest::{conform_rate, fmt_sig, Recording};
use crate::sensor::{InterruptEvent, VirtualSensor, WakeupSpec};
use crate::tree::{predict, MlcConfig};

/// One classifier decision as seen at the output register.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub window_end_t: f64,
    pub code: u8,
    pub predicted: String,
    /// Majority label of the window in the source recording.
    pub truth: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    pub windows: Vec<WindowRecord>,
    pub events: Vec<InterruptEvent>,
    pub timeline: ModeTimeline,
    pub faults: Vec<Fault>,
    /// Register reads performed by the host.
    pub host_reads: u64,
    /// Reads performed on ticks where the line was deasserted.
    pub quiescent_reads: u64,
}

pub const WINDOWS_HEADER: &str = "window_end_t,dec_tree_out,predicted,truth";

impl ReplayOutput {
    pub fn windows_csv(&self) -> String {
        let mut out = format!("{WINDOWS_HEADER}\n");
        for w in &self.windows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_sig(w.window_end_t),
                w.code,
                w.predicted,
                w.truth.as_deref().unwrap_or("")
            ));
        }
        out
    }
}

/// Replays `rec` (at the config ODR, or an integer multiple of it).
///
/// The host is armed at the first frame and the timeline is closed at the
/// end of the last sample period.
pub fn replay(rec: &Recording, cfg: &MlcConfig, wakeup: WakeupSpec) -> Result<ReplayOutput> {
    let rec = conform_rate(rec, cfg.odr_hz)?;
    let mut sensor = VirtualSensor::with_wakeup(cfg.clone(), wakeup)?;
    let mut host = HostController::new(cfg.encoding.clone());
    let frames = rec.frames();
    let t0 = frames[0].t;
    host.arm(t0);

    let labels: Vec<Option<usize>> = window_labels(&rec, cfg.window_length);
    let mut windows = Vec::new();
    let mut quiescent_reads = 0;
    for frame in frames {
        if let Some(d) = sensor.clock_in(frame)? {
            windows.push(WindowRecord {
                window_end_t: d.window_end_t,
                code: d.code,
                predicted: cfg.class_set[d.class].clone(),
                truth: labels[windows.len()].map(|l| rec.class_set()[l].clone()),
            });
        }
        let before = host.reads();
        let line = sensor.interrupt_asserted();
        host.poll(frame.t, &mut sensor)?;
        if !line {
            quiescent_reads += host.reads() - before;
        }
    }
    let t_end = t0 + frames.len() as f64 / rec.rate_hz();
    let timeline = host.finalize(t_end)?;
    Ok(ReplayOutput {
        windows,
        events: sensor.take_events(),
        timeline,
        faults: host.faults().to_vec(),
        host_reads: host.reads(),
        quiescent_reads,
    })
}

fn window_labels(rec: &Recording, length: usize) -> Vec<Option<usize>> {
    rec.frames()
        .chunks_exact(length)
        .map(|w| crate::ingest::majority_label(w.iter().map(|f| f.label)))
        .collect()
}

/// Batch classification of every complete window, as (window end, class index).
pub fn classify_offline(rec: &Recording, cfg: &MlcConfig) -> Result<Vec<(f64, usize)>> {
    let rec = conform_rate(rec, cfg.odr_hz)?;
    let vectors = window_features(&rec, &cfg.window_spec(), &cfg.feature_specs)?;
    Ok(vectors
        .iter()
        .map(|v| (v.window_end_t, predict(&cfg.tree, &v.values)))
        .collect())
}
