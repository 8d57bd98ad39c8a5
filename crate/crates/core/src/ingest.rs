//! Labeled six-axis recordings: CSV I/O and decimation to the classifier rate.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Rate assigned to a recording whose rate cannot be inferred (a single frame).
pub const DEFAULT_RATE_HZ: f64 = 240.0;

/// Relative tolerance used for every rate comparison.
pub const RATE_TOLERANCE: f64 = 0.01;

pub const CSV_HEADER: &str = "t_s,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps,label";
const NUMERIC_COLUMNS: [&str; 7] = ["t_s", "ax_g", "ay_g", "az_g", "gx_dps", "gy_dps", "gz_dps"];

/// One timestamped inertial sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFrame {
    /// Seconds since the start of the recording.
    pub t: f64,
    /// Acceleration in g.
    pub acc: [f64; 3],
    /// Angular rate in dps.
    pub gyr: [f64; 3],
    /// Index into the owning recording's class set.
    pub label: Option<usize>,
}

impl SampleFrame {
    pub fn new(t: f64, acc: [f64; 3], gyr: [f64; 3]) -> Self {
        SampleFrame {
            t,
            acc,
            gyr,
            label: None,
        }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    fn is_finite(&self) -> bool {
        self.acc.iter().chain(self.gyr.iter()).all(|v| v.is_finite())
    }
}

/// An ordered, validated sequence of frames at a nominal rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    frames: Vec<SampleFrame>,
    rate_hz: f64,
    class_set: Vec<String>,
}

impl Recording {
    /// Builds a recording and infers its rate from the median frame spacing.
    pub fn new(frames: Vec<SampleFrame>, class_set: Vec<String>) -> Result<Self> {
        let rate_hz = infer_rate(&frames).unwrap_or(DEFAULT_RATE_HZ);
        Self::with_rate(frames, rate_hz, class_set)
    }

    /// Builds a recording with an explicit nominal rate.
    pub fn with_rate(frames: Vec<SampleFrame>, rate_hz: f64, class_set: Vec<String>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Validation("recording has no frames".into()));
        }
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::Validation(format!("rate {rate_hz} Hz is not positive")));
        }
        for (i, f) in frames.iter().enumerate() {
            if !(f.t.is_finite() && f.t >= 0.0) {
                return Err(Error::Validation(format!("frame {i}: timestamp {} is not a non-negative number", f.t)));
            }
            if !f.is_finite() {
                return Err(Error::Validation(format!("frame {i}: non-finite channel value")));
            }
            if let Some(l) = f.label {
                if l >= class_set.len() {
                    return Err(Error::Validation(format!("frame {i}: label index {l} outside class set")));
                }
            }
        }
        if let Some(i) = frames.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::Validation(format!(
                "timestamps not strictly increasing at frame {} ({} after {})",
                i + 1,
                frames[i + 1].t,
                frames[i].t
            )));
        }
        if frames.len() > 1 {
            let n = frames.len();
            let mean_dt = (frames[n - 1].t - frames[0].t) / (n - 1) as f64;
            let nominal = 1.0 / rate_hz;
            if ((mean_dt - nominal) / nominal).abs() > RATE_TOLERANCE {
                return Err(Error::Validation(format!(
                    "frame spacing {mean_dt} s inconsistent with {rate_hz} Hz"
                )));
            }
        }
        Ok(Recording {
            frames,
            rate_hz,
            class_set,
        })
    }

    pub fn frames(&self) -> &[SampleFrame] {
        &self.frames
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn class_set(&self) -> &[String] {
        &self.class_set
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn label_name(&self, frame: &SampleFrame) -> Option<&str> {
        frame.label.map(|l| self.class_set[l].as_str())
    }

    pub fn is_labeled(&self) -> bool {
        self.frames.iter().any(|f| f.label.is_some())
    }

    /// Same frames relabeled against another class set (by class name).
    pub fn remap_classes(&self, class_set: &[String]) -> Result<Recording> {
        let map: Vec<usize> = self
            .class_set
            .iter()
            .map(|c| {
                class_set
                    .iter()
                    .position(|k| k == c)
                    .ok_or_else(|| Error::Validation(format!("unknown label '{c}'")))
            })
            .collect::<Result<_>>()?;
        let frames = self
            .frames
            .iter()
            .map(|f| SampleFrame {
                label: f.label.map(|l| map[l]),
                ..f.clone()
            })
            .collect();
        Ok(Recording {
            frames,
            rate_hz: self.rate_hz,
            class_set: class_set.to_vec(),
        })
    }

    /// Serializes to the ingest CSV format with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let labeled = self.is_labeled();
        let mut out = String::with_capacity(self.frames.len() * 64);
        if labeled {
            out.push_str(CSV_HEADER);
        } else {
            out.push_str(&CSV_HEADER[..CSV_HEADER.len() - ",label".len()]);
        }
        out.push('\n');
        for f in &self.frames {
            out.push_str(&fmt_sig(f.t));
            for v in f.acc.iter().chain(f.gyr.iter()) {
                out.push(',');
                out.push_str(&fmt_sig(*v));
            }
            if labeled {
                out.push(',');
                if let Some(name) = self.label_name(f) {
                    out.push_str(name);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Formats `x` rounded to 9 significant digits, using the shortest decimal
/// that reproduces the rounded value.
pub fn fmt_sig(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    let mut s = String::new();
    let _ = write!(s, "{rounded}");
    if s == "-0" {
        s.remove(0);
    }
    s
}

fn infer_rate(frames: &[SampleFrame]) -> Option<f64> {
    if frames.len() < 2 {
        return None;
    }
    let mut dts: Vec<f64> = frames.windows(2).map(|w| w[1].t - w[0].t).collect();
    dts.sort_by(f64::total_cmp);
    let n = dts.len();
    let median = if n % 2 == 1 {
        dts[n / 2]
    } else {
        0.5 * (dts[n / 2 - 1] + dts[n / 2])
    };
    (median > 0.0).then(|| 1.0 / median)
}

/// Parses the ingest CSV format. Labels must belong to `class_set`.
pub fn parse_csv(text: &str, class_set: &[String]) -> Result<Recording> {
    if class_set.is_empty() {
        return Err(Error::Contract("class set is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::parse(1, e.to_string()))?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let labeled = match header.len() {
        7 => false,
        8 => true,
        n => return Err(Error::parse(1, format!("header has {n} columns, expected 7 or 8"))),
    };
    for (i, name) in NUMERIC_COLUMNS.iter().enumerate() {
        if &header[i] != *name {
            return Err(Error::parse(1, format!("column {} is '{}', expected '{name}'", i + 1, &header[i])));
        }
    }
    if labeled && &header[7] != "label" {
        return Err(Error::parse(1, format!("column 8 is '{}', expected 'label'", &header[7])));
    }
    let width = header.len();

    let mut frames = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(Error::parse(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let mut vals = [0.0f64; 7];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = rec[i]
                .parse()
                .map_err(|_| Error::parse(line, format!("field '{}' is not a number ({})", &rec[i], NUMERIC_COLUMNS[i])))?;
        }
        let label = if labeled && !rec[7].is_empty() {
            let name = &rec[7];
            let idx = class_set
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Validation(format!("line {line}: unknown label '{name}'")))?;
            Some(idx)
        } else {
            None
        };
        frames.push(SampleFrame {
            t: vals[0],
            acc: [vals[1], vals[2], vals[3]],
            gyr: [vals[4], vals[5], vals[6]],
            label,
        });
    }
    if frames.is_empty() {
        return Err(Error::Validation("recording has no frames".into()));
    }
    Recording::new(frames, class_set.to_vec())
}

/// Integer-ratio rate reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecimationSpec {
    input_rate_hz: f64,
    output_rate_hz: f64,
    factor: usize,
}

impl DecimationSpec {
    pub fn new(input_rate_hz: f64, output_rate_hz: f64) -> Result<Self> {
        if !(input_rate_hz > 0.0 && output_rate_hz > 0.0 && input_rate_hz.is_finite() && output_rate_hz.is_finite()) {
            return Err(Error::Validation("decimation rates must be positive".into()));
        }
        let ratio = input_rate_hz / output_rate_hz;
        let factor = ratio.round();
        if factor < 1.0 || (factor * output_rate_hz - input_rate_hz).abs() > 1e-9 * input_rate_hz {
            return Err(Error::Validation(format!(
                "{input_rate_hz} Hz is not an integer multiple of {output_rate_hz} Hz"
            )));
        }
        Ok(DecimationSpec {
            input_rate_hz,
            output_rate_hz,
            factor: factor as usize,
        })
    }

    pub fn input_rate_hz(&self) -> f64 {
        self.input_rate_hz
    }

    pub fn output_rate_hz(&self) -> f64 {
        self.output_rate_hz
    }

    pub fn factor(&self) -> usize {
        self.factor
    }
}

/// Most frequent label; ties go to the label that occurs first.
pub fn majority_label<I>(labels: I) -> Option<usize>
where
    I: IntoIterator<Item = Option<usize>>,
{
    // (label, count) in first-occurrence order
    let mut counts: Vec<(Option<usize>, usize)> = Vec::new();
    for l in labels {
        match counts.iter_mut().find(|(k, _)| *k == l) {
            Some((_, c)) => *c += 1,
            None => counts.push((l, 1)),
        }
    }
    let mut best: Option<(Option<usize>, usize)> = None;
    for (l, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((l, c));
        }
    }
    best.and_then(|(l, _)| l)
}

/// Block-average decimation: each output frame is the channel mean of
/// `factor` consecutive input frames, stamped with the block's first timestamp.
pub fn decimate(rec: &Recording, spec: &DecimationSpec) -> Result<Recording> {
    let rel = (rec.rate_hz - spec.input_rate_hz).abs() / spec.input_rate_hz;
    if rel > RATE_TOLERANCE {
        return Err(Error::Validation(format!(
            "recording rate {} Hz does not match decimation input {} Hz",
            rec.rate_hz, spec.input_rate_hz
        )));
    }
    let factor = spec.factor;
    if rec.frames.len() < factor {
        return Err(Error::Validation(format!(
            "recording has {} frames, fewer than decimation factor {factor}",
            rec.frames.len()
        )));
    }
    let n = factor as f64;
    let frames = rec
        .frames
        .chunks_exact(factor)
        .map(|block| {
            let mut acc = [0.0; 3];
            let mut gyr = [0.0; 3];
            for f in block {
                for k in 0..3 {
                    acc[k] += f.acc[k];
                    gyr[k] += f.gyr[k];
                }
            }
            SampleFrame {
                t: block[0].t,
                acc: acc.map(|s| s / n),
                gyr: gyr.map(|s| s / n),
                label: majority_label(block.iter().map(|f| f.label)),
            }
        })
        .collect();
    Ok(Recording {
        frames,
        rate_hz: spec.output_rate_hz,
        class_set: rec.class_set.clone(),
    })
}

/// Brings a recording to `rate_hz`: unchanged when it already matches,
/// block-averaged when its rate is an integer multiple.
pub fn conform_rate(rec: &Recording, rate_hz: f64) -> Result<Recording> {
    if (rec.rate_hz - rate_hz).abs() / rate_hz <= RATE_TOLERANCE {
        return Ok(rec.clone());
    }
    let factor = (rec.rate_hz / rate_hz).round();
    if factor < 2.0 {
        return Err(Error::Validation(format!(
            "recording rate {} Hz is below the target rate {rate_hz} Hz",
            rec.rate_hz
        )));
    }
    let spec = DecimationSpec::new(factor * rate_hz, rate_hz)?;
    decimate(rec, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> Vec<String> {
        ["walk", "stairsUp", "stance"].iter().map(|s| s.to_string()).collect()
    }

    fn ramp(n: usize, rate: f64, f: impl Fn(usize) -> f64) -> Recording {
        let frames = (0..n)
            .map(|i| SampleFrame::new(i as f64 / rate, [f(i), 0.0, 1.0], [0.0; 3]))
            .collect();
        Recording::with_rate(frames, rate, classes()).unwrap()
    }

    #[test]
    fn single_row() {
        let rec = parse_csv(&format!("{CSV_HEADER}\n0.000,0,0,1,0,0,0,stance\n"), &classes()).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.frames()[0].acc, [0.0, 0.0, 1.0]);
        assert_eq!(rec.label_name(&rec.frames()[0]), Some("stance"));
    }

    #[test]
    fn rate_inferred_from_spacing() {
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for i in 0..7680 {
            text.push_str(&format!("{},0,0,1,0,0,0,walk\n", i as f64 / 7680.0));
        }
        let rec = parse_csv(&text, &classes()).unwrap();
        assert!((rec.rate_hz() - 7680.0).abs() / 7680.0 < 0.01);
    }

    #[test]
    fn non_numeric_field_reports_line() {
        let text = format!("{CSV_HEADER}\n0.0,0,0,1,0,0,0,walk\n0.1,a,0,0,0,0,0,walk\n");
        match parse_csv(&text, &classes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let text = format!("{CSV_HEADER}\n0.0,0,0,1,0,0,0,walk\n0.1,0,0\n");
        assert!(matches!(parse_csv(&text, &classes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn crlf_and_unlabeled() {
        let text = "t_s,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps\r\n0,0,0,1,0,0,0\r\n0.5,1e-1,0,1,0,0,0\r\n";
        let rec = parse_csv(text, &classes()).unwrap();
        assert_eq!(rec.len(), 2);
        assert!(!rec.is_labeled());
        assert_eq!(rec.frames()[1].acc[0], 0.1);
        assert!((rec.rate_hz() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_monotonic_timestamps_rejected() {
        let text = format!("{CSV_HEADER}\n0.0,0,0,1,0,0,0,walk\n0.1,0,0,1,0,0,0,walk\n0.05,0,0,1,0,0,0,walk\n");
        assert!(matches!(parse_csv(&text, &classes()), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_label_named() {
        let text = format!("{CSV_HEADER}\n0.0,0,0,1,0,0,0,jog\n");
        match parse_csv(&text, &classes()) {
            Err(Error::Validation(msg)) => assert!(msg.contains("jog")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn decimate_constant() {
        let rec = ramp(64, 7680.0, |_| 0.0);
        let out = decimate(&rec, &DecimationSpec::new(7680.0, 240.0).unwrap()).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.frames().iter().all(|f| f.acc[2] == 1.0));
        assert_eq!(out.rate_hz(), 240.0);
    }

    #[test]
    fn decimate_block_means() {
        let rec = ramp(4, 2.0, |i| 2.0 * i as f64);
        let out = decimate(&rec, &DecimationSpec::new(2.0, 1.0).unwrap()).unwrap();
        let ax: Vec<f64> = out.frames().iter().map(|f| f.acc[0]).collect();
        assert_eq!(ax, vec![1.0, 5.0]);
        assert_eq!(out.frames()[1].t, 1.0);
    }

    #[test]
    fn decimate_errors() {
        let rec = ramp(10, 100.0, |_| 0.0);
        assert!(decimate(&rec, &DecimationSpec::new(200.0, 100.0).unwrap()).is_err());
        assert!(decimate(&rec, &DecimationSpec::new(100.0, 5.0).unwrap()).is_err());
        assert!(DecimationSpec::new(100.0, 30.0).is_err());
        assert_eq!(DecimationSpec::new(7680.0, 240.0).unwrap().factor(), 32);
    }

    #[test]
    fn conform_rate_decimates_multiples() {
        let rec = ramp(7680, 7680.0, |_| 0.0);
        let out = conform_rate(&rec, 240.0).unwrap();
        assert_eq!(out.len(), 240);
        assert_eq!(conform_rate(&out, 240.0).unwrap(), out);
        assert!(conform_rate(&out, 7680.0).is_err());
    }

    #[test]
    fn majority_tie_goes_to_first() {
        assert_eq!(majority_label([Some(1), Some(0), Some(0), Some(1)]), Some(1));
        assert_eq!(majority_label([Some(1), Some(0), Some(0)]), Some(0));
        assert_eq!(majority_label([None, None]), None);
    }

    #[test]
    fn fmt_sig_is_short() {
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(-0.0), "0");
    }
}
