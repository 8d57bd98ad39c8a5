//! Windowed inertial features over tumbling windows.
//!
//! Conventions: VARIANCE is the population form, ENERGY is the unnormalized
//! sum of squares, and the `V` axis is the per-sample Euclidean norm of the
//! three axes of one sensor. Training and inference share these definitions.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{fmt_sig, majority_label, Recording, SampleFrame, RATE_TOLERANCE};
use crate::par::{map_indices, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sensor {
    Acc,
    Gyr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
    /// Euclidean norm of the three axes.
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelSelector {
    pub sensor: Sensor,
    pub axis: Axis,
}

impl ChannelSelector {
    pub const fn new(sensor: Sensor, axis: Axis) -> Self {
        ChannelSelector { sensor, axis }
    }

    /// Scalar value of this channel for one frame.
    pub fn sample(&self, frame: &SampleFrame) -> f64 {
        let v = match self.sensor {
            Sensor::Acc => &frame.acc,
            Sensor::Gyr => &frame.gyr,
        };
        match self.axis {
            Axis::X => v[0],
            Axis::Y => v[1],
            Axis::Z => v[2],
            Axis::V => (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Mean,
    Variance,
    Energy,
    Maximum,
    Minimum,
    AbsMinimum,
    PeakToPeak,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 7] = [
        FeatureKind::Mean,
        FeatureKind::Variance,
        FeatureKind::Energy,
        FeatureKind::Maximum,
        FeatureKind::Minimum,
        FeatureKind::AbsMinimum,
        FeatureKind::PeakToPeak,
    ];

    pub fn min_samples(self) -> usize {
        match self {
            FeatureKind::Variance => 2,
            _ => 1,
        }
    }
}

/// One configured feature: a statistic over one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub channel: ChannelSelector,
}

impl FeatureSpec {
    pub const fn new(kind: FeatureKind, sensor: Sensor, axis: Axis) -> Self {
        FeatureSpec {
            kind,
            channel: ChannelSelector::new(sensor, axis),
        }
    }
}

macro_rules! token_enum {
    ($ty:ty, $what:literal, { $($variant:path => $tok:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $tok),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($tok => Ok($variant),)+
                    other => Err(Error::Validation(format!(concat!("unknown ", $what, " '{}'"), other))),
                }
            }
        }
    };
}

token_enum!(Sensor, "sensor", { Sensor::Acc => "ACC", Sensor::Gyr => "GYR" });
token_enum!(Axis, "axis", { Axis::X => "X", Axis::Y => "Y", Axis::Z => "Z", Axis::V => "V" });
token_enum!(FeatureKind, "feature kind", {
    FeatureKind::Mean => "MEAN",
    FeatureKind::Variance => "VARIANCE",
    FeatureKind::Energy => "ENERGY",
    FeatureKind::Maximum => "MAXIMUM",
    FeatureKind::Minimum => "MINIMUM",
    FeatureKind::AbsMinimum => "ABS_MINIMUM",
    FeatureKind::PeakToPeak => "PEAK_TO_PEAK",
});

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{}", self.kind, self.channel.sensor, self.channel.axis)
    }
}

/// The fifteen-feature set F1..F15 used for the locomotion classifier.
pub fn locomotion_feature_set() -> Vec<FeatureSpec> {
    use Axis::*;
    use FeatureKind::*;
    use Sensor::*;
    vec![
        FeatureSpec::new(Variance, Gyr, X),
        FeatureSpec::new(Energy, Gyr, X),
        FeatureSpec::new(AbsMinimum, Gyr, V),
        FeatureSpec::new(Maximum, Gyr, X),
        FeatureSpec::new(Minimum, Acc, X),
        FeatureSpec::new(PeakToPeak, Acc, X),
        FeatureSpec::new(Mean, Gyr, X),
        FeatureSpec::new(Energy, Acc, Y),
        FeatureSpec::new(Maximum, Acc, X),
        FeatureSpec::new(PeakToPeak, Gyr, X),
        FeatureSpec::new(Minimum, Gyr, X),
        FeatureSpec::new(Variance, Acc, X),
        FeatureSpec::new(PeakToPeak, Gyr, Y),
        FeatureSpec::new(Minimum, Gyr, Y),
        FeatureSpec::new(Mean, Acc, Z),
    ]
}

/// Rejects configurations that repeat a (kind, channel) pair.
pub fn check_unique(specs: &[FeatureSpec]) -> Result<()> {
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].contains(s) {
            return Err(Error::Validation(format!("feature {s} configured twice")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    odr_hz: f64,
    length: usize,
}

impl WindowSpec {
    pub fn new(odr_hz: f64, length: usize) -> Result<Self> {
        if !(odr_hz.is_finite() && odr_hz > 0.0) {
            return Err(Error::Validation(format!("ODR {odr_hz} Hz is not positive")));
        }
        if length < 2 {
            return Err(Error::Validation(format!("window length {length} is below 2")));
        }
        Ok(WindowSpec { odr_hz, length })
    }

    pub fn odr_hz(&self) -> f64 {
        self.odr_hz
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn duration_s(&self) -> f64 {
        self.length as f64 / self.odr_hz
    }
}

impl Default for WindowSpec {
    /// 240 Hz, 240-sample (one second) windows.
    fn default() -> Self {
        WindowSpec {
            odr_hz: 240.0,
            length: 240,
        }
    }
}

/// Feature values of one window, in configuration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Timestamp of the window's last sample.
    pub window_end_t: f64,
    /// Majority ground-truth label of the window's frames, if any.
    pub label: Option<usize>,
}

pub fn channel_series(window: &[SampleFrame], sel: ChannelSelector) -> Vec<f64> {
    window.iter().map(|f| sel.sample(f)).collect()
}

pub fn compute_feature(series: &[f64], kind: FeatureKind) -> Result<f64> {
    if series.len() < kind.min_samples() {
        return Err(Error::Contract(format!(
            "{kind} needs at least {} samples, got {}",
            kind.min_samples(),
            series.len()
        )));
    }
    let n = series.len() as f64;
    let value = match kind {
        FeatureKind::Mean => series.iter().sum::<f64>() / n,
        FeatureKind::Variance => {
            // shifted by the first sample so a constant series is exactly 0
            let origin = series[0];
            let mean = series.iter().map(|x| x - origin).sum::<f64>() / n;
            series
                .iter()
                .map(|x| {
                    let d = x - origin - mean;
                    d * d
                })
                .sum::<f64>()
                / n
        }
        FeatureKind::Energy => series.iter().map(|x| x * x).sum(),
        FeatureKind::Maximum => series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        FeatureKind::Minimum => series.iter().copied().fold(f64::INFINITY, f64::min),
        FeatureKind::AbsMinimum => series.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min),
        FeatureKind::PeakToPeak => {
            let (lo, hi) = series
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            hi - lo
        }
    };
    Ok(value)
}

/// Features of one complete window. Both the batch and streaming paths go
/// through here so they agree bit for bit.
fn window_vector(window: &[SampleFrame], specs: &[FeatureSpec]) -> Result<FeatureVector> {
    let mut cache: Vec<(ChannelSelector, Vec<f64>)> = Vec::with_capacity(8);
    let mut values = Vec::with_capacity(specs.len());
    for spec in specs {
        let idx = match cache.iter().position(|(c, _)| *c == spec.channel) {
            Some(i) => i,
            None => {
                cache.push((spec.channel, channel_series(window, spec.channel)));
                cache.len() - 1
            }
        };
        let v = compute_feature(&cache[idx].1, spec.kind)?;
        if !v.is_finite() {
            return Err(Error::Validation(format!(
                "feature {spec} is not finite in window ending at {} s",
                window[window.len() - 1].t
            )));
        }
        values.push(v);
    }
    Ok(FeatureVector {
        values,
        window_end_t: window[window.len() - 1].t,
        label: majority_label(window.iter().map(|f| f.label)),
    })
}

fn check_rate(rec: &Recording, wspec: &WindowSpec) -> Result<()> {
    if (rec.rate_hz() - wspec.odr_hz).abs() / wspec.odr_hz > RATE_TOLERANCE {
        return Err(Error::Validation(format!(
            "recording rate {} Hz does not match classifier ODR {} Hz",
            rec.rate_hz(),
            wspec.odr_hz
        )));
    }
    Ok(())
}

/// One feature vector per complete tumbling window; the trailing partial
/// window is dropped.
pub fn window_features(rec: &Recording, wspec: &WindowSpec, specs: &[FeatureSpec]) -> Result<Vec<FeatureVector>> {
    window_features_with(rec, wspec, specs, Exec::default())
}

pub fn window_features_with(
    rec: &Recording,
    wspec: &WindowSpec,
    specs: &[FeatureSpec],
    exec: Exec,
) -> Result<Vec<FeatureVector>> {
    check_rate(rec, wspec)?;
    let frames = rec.frames();
    let len = wspec.length;
    let count = frames.len() / len;
    map_indices(exec, count, |w| window_vector(&frames[w * len..(w + 1) * len], specs))
        .into_iter()
        .collect()
}

/// Incremental form of [`window_features`] for frame-at-a-time consumers.
#[derive(Debug, Clone)]
pub struct StreamingFeatures {
    wspec: WindowSpec,
    specs: Vec<FeatureSpec>,
    buf: Vec<SampleFrame>,
    last_t: Option<f64>,
}

impl StreamingFeatures {
    pub fn new(wspec: WindowSpec, specs: Vec<FeatureSpec>) -> Self {
        StreamingFeatures {
            buf: Vec::with_capacity(wspec.length),
            wspec,
            specs,
            last_t: None,
        }
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn window(&self) -> &WindowSpec {
        &self.wspec
    }

    /// Samples buffered toward the current window.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    pub fn reset(&mut self) {
        self.buf.clear();
        self.last_t = None;
    }

    /// Returns a vector exactly when `frame` completes a window.
    pub fn push(&mut self, frame: SampleFrame) -> Result<Option<FeatureVector>> {
        if let Some(last) = self.last_t {
            if frame.t.partial_cmp(&last) != Some(Ordering::Greater) {
                return Err(Error::Contract(format!("frame at {} s pushed after {last} s", frame.t)));
            }
        }
        self.last_t = Some(frame.t);
        self.buf.push(frame);
        if self.buf.len() < self.wspec.length {
            return Ok(None);
        }
        let out = window_vector(&self.buf, &self.specs);
        self.buf.clear();
        out.map(Some)
    }
}

/// Feature vectors as `window_end_t,F1..Fn[,label]`, 9 significant digits.
pub fn vectors_to_csv(vectors: &[FeatureVector], n_features: usize, class_set: &[String]) -> String {
    let labeled = vectors.iter().any(|v| v.label.is_some());
    let mut out = String::from("window_end_t");
    for i in 1..=n_features {
        out.push_str(&format!(",F{i}"));
    }
    if labeled {
        out.push_str(",label");
    }
    out.push('\n');
    for v in vectors {
        out.push_str(&fmt_sig(v.window_end_t));
        for x in &v.values {
            out.push(',');
            out.push_str(&fmt_sig(*x));
        }
        if labeled {
            out.push(',');
            if let Some(l) = v.label {
                out.push_str(&class_set[l]);
            }
        }
        out.push('\n');
    }
    out
}

/// Reads the output of [`vectors_to_csv`].
pub fn parse_vectors_csv(text: &str, class_set: &[String]) -> Result<Vec<FeatureVector>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"window_end_t") {
        return Err(Error::parse(1, "first column must be window_end_t"));
    }
    let labeled = cols.last() == Some(&"label");
    let n_features = cols.len() - 1 - usize::from(labeled);
    let mut out = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::parse(line_no, format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::parse(line_no, format!("'{s}' is not a number")))
        };
        let window_end_t = num(fields[0])?;
        let values = fields[1..=n_features].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let label = if labeled && !fields[cols.len() - 1].is_empty() {
            let name = fields[cols.len() - 1];
            Some(
                class_set
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::Validation(format!("line {line_no}: unknown label '{name}'")))?,
            )
        } else {
            None
        };
        out.push(FeatureVector {
            values,
            window_end_t,
            label,
        });
    }
    Ok(out)
}
