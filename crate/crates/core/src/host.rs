//! Interrupt-driven host controller.
//!
//! The host sleeps until the sensor's interrupt line asserts, reads the two
//! status registers (clearing their latches) and, on a classification event,
//! the decision-tree output register. It turns the stream of decoded modes
//! into a timeline of contiguous segments. It never sees raw samples.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::sensor::{reg, RegisterBus};
use crate::tree::Encoding;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Sleep,
    Service,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub mode: String,
    pub start_s: f64,
    pub end_s: f64,
    pub duration_s: f64,
}

/// Contiguous, non-empty segments with distinct consecutive modes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeTimeline {
    pub segments: Vec<Segment>,
}

pub const TIMELINE_HEADER: &str = "mode,start_s,end_s,duration_s";

impl ModeTimeline {
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if s.duration_s.partial_cmp(&0.0) != Some(Ordering::Greater) || s.duration_s != s.end_s - s.start_s {
                return Err(Error::Validation(format!("segment {i} has a bad duration")));
            }
            if let Some(next) = self.segments.get(i + 1) {
                if next.start_s != s.end_s {
                    return Err(Error::Validation(format!("gap after segment {i}")));
                }
                if next.mode == s.mode {
                    return Err(Error::Validation(format!("segments {i} and {} repeat mode '{}'", i + 1, s.mode)));
                }
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.mode.as_str()).collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    /// Seconds rounded to two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{TIMELINE_HEADER}\n");
        for s in &self.segments {
            out.push_str(&format!("{},{:.2},{:.2},{:.2}\n", s.mode, s.start_s, s.end_s, s.duration_s));
        }
        out
    }

    /// Reads [`ModeTimeline::to_csv`] output. Values carry two-decimal
    /// precision, so only the layout invariants are checked.
    pub fn parse_csv(text: &str) -> Result<ModeTimeline> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TIMELINE_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected header '{TIMELINE_HEADER}'"))),
        }
        let segments = lines
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let line = i + 1;
                let f: Vec<&str> = l.split(',').map(str::trim).collect();
                if f.len() != 4 {
                    return Err(Error::parse(line, format!("expected 4 fields, found {}", f.len())));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(line, format!("'{s}' is not a number")));
                Ok(Segment {
                    mode: f[0].to_string(),
                    start_s: num(f[1])?,
                    end_s: num(f[2])?,
                    duration_s: num(f[3])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModeTimeline { segments })
    }
}

/// A register value the encoding does not know.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fault {
    pub t: f64,
    pub raw: u8,
}

pub const FAULTS_HEADER: &str = "t_s,raw_value";

pub fn faults_to_csv(faults: &[Fault]) -> String {
    let mut out = format!("{FAULTS_HEADER}\n");
    for f in faults {
        out.push_str(&format!("{},{}\n", crate::ingest::fmt_sig(f.t), f.raw));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HostState {
    pub phase: Phase,
    /// Closed segments.
    pub timeline: ModeTimeline,
    /// Mode and start of the segment still open.
    pub open: Option<(String, f64)>,
    /// Register reads performed so far.
    pub reads: u64,
}

#[derive(Debug, Clone)]
pub struct HostController {
    encoding: Encoding,
    state: HostState,
    faults: Vec<Fault>,
    armed_at: Option<f64>,
    last_t: Option<f64>,
    finalized: Option<ModeTimeline>,
}

impl HostController {
    pub fn new(encoding: Encoding) -> Self {
        HostController {
            encoding,
            state: HostState {
                phase: Phase::Sleep,
                timeline: ModeTimeline::default(),
                open: None,
                reads: 0,
            },
            faults: Vec::new(),
            armed_at: None,
            last_t: None,
            finalized: None,
        }
    }

    /// Marks the start of monitoring. The first segment then starts at `t0`
    /// instead of at the first interrupt, since the first decision describes
    /// the window that began at `t0`.
    pub fn arm(&mut self, t0: f64) {
        if self.state.open.is_none() && self.state.timeline.segments.is_empty() {
            self.armed_at = Some(t0);
        }
    }

    pub fn state(&self) -> &HostState {
        &self.state
    }

    pub fn reads(&self) -> u64 {
        self.state.reads
    }

    pub fn faults(&self) -> &[Fault] {
        &self.faults
    }

    fn read(&mut self, bus: &mut impl RegisterBus, addr: u8) -> u8 {
        debug_assert_eq!(self.state.phase, Phase::Service);
        self.state.reads += 1;
        bus.read_register(addr)
    }

    /// Services the line if it is asserted. Returns whether the host woke.
    pub fn poll(&mut self, t: f64, bus: &mut impl RegisterBus) -> Result<bool> {
        if !bus.interrupt_asserted() {
            return Ok(false);
        }
        self.on_interrupt(t, bus)?;
        Ok(true)
    }

    /// One service routine, run when the interrupt line asserts at `t`.
    pub fn on_interrupt(&mut self, t: f64, bus: &mut impl RegisterBus) -> Result<()> {
        if self.finalized.is_some() {
            return Err(Error::Contract("interrupt after finalize".into()));
        }
        if let Some(last) = self.last_t {
            if t < last {
                return Err(Error::Contract(format!("interrupt at {t} s after {last} s")));
            }
        }
        self.last_t = Some(t);
        self.state.phase = Phase::Service;

        let mlc = self.read(bus, reg::MLC_STATUS) & reg::LATCH != 0;
        let _wake = self.read(bus, reg::WAKE_SRC);
        if mlc {
            let raw = self.read(bus, reg::DEC_TREE_OUT_1);
            match self.encoding.decode(raw) {
                None => self.faults.push(Fault { t, raw }),
                Some(mode) => {
                    let mode = mode.to_string();
                    match self.state.open.take() {
                        Some((open, start)) if open == mode => self.state.open = Some((open, start)),
                        Some((open, start)) => {
                            self.state.timeline.segments.push(Segment {
                                mode: open,
                                start_s: start,
                                end_s: t,
                                duration_s: t - start,
                            });
                            self.state.open = Some((mode, t));
                        }
                        None => {
                            let start = self.armed_at.unwrap_or(t);
                            self.state.open = Some((mode, start));
                        }
                    }
                }
            }
        }
        self.state.phase = Phase::Sleep;
        Ok(())
    }

    /// Closes the open segment at `t_end`. Calling it again returns the same
    /// timeline.
    pub fn finalize(&mut self, t_end: f64) -> Result<ModeTimeline> {
        if let Some(done) = &self.finalized {
            return Ok(done.clone());
        }
        let mut timeline = self.state.timeline.clone();
        if let Some((mode, start)) = &self.state.open {
            if t_end.partial_cmp(start) != Some(Ordering::Greater) {
                return Err(Error::Contract(format!("finalize at {t_end} s before open segment start {start} s")));
            }
            timeline.segments.push(Segment {
                mode: mode.clone(),
                start_s: *start,
                end_s: t_end,
                duration_s: t_end - start,
            });
        }
        self.state.timeline = timeline.clone();
        self.state.open = None;
        self.finalized = Some(timeline.clone());
        Ok(timeline)
    }
}
