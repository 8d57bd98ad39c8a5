//! Register-level IMU emulator with an embedded decision-tree core.
//!
//! Frames are clocked in one at a time. Each completed window is classified,
//! the encoded label lands in `DEC_TREE_OUT_1`, and a label change latches
//! `MLC_STATUS`. Independently, a per-sample motion threshold latches
//! `WAKE_SRC`. Both latches drive one interrupt line and clear on read.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{ChannelSelector, Axis, Sensor, StreamingFeatures};
use crate::ingest::{fmt_sig, SampleFrame};
use crate::tree::{predict, MlcConfig};

/// Register addresses.
pub mod reg {
    pub const WHO_AM_I: u8 = 0x0F;
    pub const WAKE_SRC: u8 = 0x1B;
    pub const MLC_STATUS: u8 = 0x38;
    pub const DEC_TREE_OUT_1: u8 = 0x70;

    pub const WHO_AM_I_VALUE: u8 = 0x70;
    /// Latch bit shared by `MLC_STATUS` and `WAKE_SRC`.
    pub const LATCH: u8 = 0x01;
}

/// Read access to a device's registers and its interrupt pin. This is the
/// host's entire view of the sensor.
pub trait RegisterBus {
    fn read_register(&mut self, addr: u8) -> u8;
    fn interrupt_asserted(&self) -> bool;
}

/// 8-bit register space; undefined addresses read 0.
#[derive(Debug, Clone)]
pub struct RegisterFile {
    regs: [u8; 256],
}

impl Default for RegisterFile {
    fn default() -> Self {
        let mut regs = [0u8; 256];
        regs[reg::WHO_AM_I as usize] = reg::WHO_AM_I_VALUE;
        RegisterFile { regs }
    }
}

impl RegisterFile {
    pub fn get(&self, addr: u8) -> u8 {
        self.regs[addr as usize]
    }

    fn set(&mut self, addr: u8, value: u8) {
        if addr != reg::WHO_AM_I {
            self.regs[addr as usize] = value;
        }
    }

    fn latched(&self, addr: u8) -> bool {
        self.get(addr) & reg::LATCH != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    MlcResult,
    Wakeup,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cause::MlcResult => "MLC_RESULT",
            Cause::Wakeup => "WAKEUP",
        })
    }
}

impl FromStr for Cause {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MLC_RESULT" => Ok(Cause::MlcResult),
            "WAKEUP" => Ok(Cause::Wakeup),
            other => Err(Error::Validation(format!("unknown interrupt cause '{other}'"))),
        }
    }
}

/// One assertion of the interrupt line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterruptEvent {
    pub t: f64,
    pub cause: Cause,
    /// `DEC_TREE_OUT_1` at the time of the event.
    pub dec_tree_out: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeupSpec {
    /// Allowed deviation of the accelerometer norm from 1 g.
    pub threshold_g: f64,
}

impl Default for WakeupSpec {
    fn default() -> Self {
        WakeupSpec { threshold_g: 0.10 }
    }
}

impl WakeupSpec {
    pub fn new(threshold_g: f64) -> Result<Self> {
        if !(threshold_g.is_finite() && threshold_g >= 0.0) {
            return Err(Error::Validation(format!("wakeup threshold {threshold_g} g is not a non-negative number")));
        }
        Ok(WakeupSpec { threshold_g })
    }

    pub fn triggers(&self, frame: &SampleFrame) -> bool {
        let norm = ChannelSelector::new(Sensor::Acc, Axis::V).sample(frame);
        (norm - 1.0).abs() > self.threshold_g
    }
}

/// Result of one completed window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub window_end_t: f64,
    /// Index into the config's class set.
    pub class: usize,
    pub code: u8,
}

#[derive(Debug, Clone)]
pub struct VirtualSensor {
    cfg: MlcConfig,
    features: StreamingFeatures,
    regs: RegisterFile,
    wakeup: WakeupSpec,
    events: Vec<InterruptEvent>,
    last_code: Option<u8>,
}

impl VirtualSensor {
    pub fn new(cfg: MlcConfig) -> Result<Self> {
        Self::with_wakeup(cfg, WakeupSpec::default())
    }

    pub fn with_wakeup(cfg: MlcConfig, wakeup: WakeupSpec) -> Result<Self> {
        cfg.validate()?;
        Ok(VirtualSensor {
            features: StreamingFeatures::new(cfg.window_spec(), cfg.feature_specs.clone()),
            cfg,
            regs: RegisterFile::default(),
            wakeup,
            events: Vec::new(),
            last_code: None,
        })
    }

    /// Replaces the configuration and resets all state. An invalid config is
    /// rejected before anything changes.
    pub fn load_config(&mut self, cfg: MlcConfig) -> Result<()> {
        *self = Self::with_wakeup(cfg, self.wakeup)?;
        Ok(())
    }

    pub fn config(&self) -> &MlcConfig {
        &self.cfg
    }

    pub fn events(&self) -> &[InterruptEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<InterruptEvent> {
        std::mem::take(&mut self.events)
    }

    /// Register value without read side effects.
    pub fn peek(&self, addr: u8) -> u8 {
        self.regs.get(addr)
    }

    pub fn interrupt_asserted(&self) -> bool {
        self.regs.latched(reg::MLC_STATUS) || self.regs.latched(reg::WAKE_SRC)
    }

    /// Feeds one frame at the classifier ODR.
    pub fn clock_in(&mut self, frame: &SampleFrame) -> Result<Option<Decision>> {
        let vector = self.features.push(frame.clone())?;

        if self.wakeup.triggers(frame) && !self.regs.latched(reg::WAKE_SRC) {
            self.regs.set(reg::WAKE_SRC, reg::LATCH);
            self.events.push(InterruptEvent {
                t: frame.t,
                cause: Cause::Wakeup,
                dec_tree_out: self.regs.get(reg::DEC_TREE_OUT_1),
            });
        }

        let Some(vector) = vector else {
            return Ok(None);
        };
        let class = predict(&self.cfg.tree, &vector.values);
        let code = self.cfg.code_of(class).expect("validated config encodes every leaf");
        self.regs.set(reg::DEC_TREE_OUT_1, code);
        if self.last_code != Some(code) {
            self.regs.set(reg::MLC_STATUS, reg::LATCH);
            self.events.push(InterruptEvent {
                t: vector.window_end_t,
                cause: Cause::MlcResult,
                dec_tree_out: code,
            });
        }
        self.last_code = Some(code);
        Ok(Some(Decision {
            window_end_t: vector.window_end_t,
            class,
            code,
        }))
    }

    /// Status registers clear on read; everything else is side-effect free.
    pub fn read_register(&mut self, addr: u8) -> u8 {
        let value = self.regs.get(addr);
        if addr == reg::MLC_STATUS || addr == reg::WAKE_SRC {
            self.regs.set(addr, 0);
        }
        value
    }
}

impl RegisterBus for VirtualSensor {
    fn read_register(&mut self, addr: u8) -> u8 {
        VirtualSensor::read_register(self, addr)
    }

    fn interrupt_asserted(&self) -> bool {
        VirtualSensor::interrupt_asserted(self)
    }
}

pub const EVENTS_HEADER: &str = "t_s,cause,dec_tree_out";

pub fn events_to_csv(events: &[InterruptEvent]) -> String {
    let mut out = format!("{EVENTS_HEADER}\n");
    for e in events {
        out.push_str(&format!("{},{},{}\n", fmt_sig(e.t), e.cause, e.dec_tree_out));
    }
    out
}

pub fn parse_events_csv(text: &str) -> Result<Vec<InterruptEvent>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EVENTS_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header '{EVENTS_HEADER}'"))),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = i + 1;
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::parse(line, format!("expected 3 fields, found {}", f.len())));
            }
            Ok(InterruptEvent {
                t: f[0].parse().map_err(|_| Error::parse(line, "bad timestamp"))?,
                cause: f[1].parse().map_err(|e: Error| Error::parse(line, e.to_string()))?,
                dec_tree_out: f[2].parse().map_err(|_| Error::parse(line, "bad register value"))?,
            })
        })
        .collect()
}
