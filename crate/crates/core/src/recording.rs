//! Continuous recordings, the NSR container format and imagery-window
//! epoching.
//!
//! An NSR file is
//!
//! ```text
//! NSR1\n
//! {"channels":[...],"markers":[[sample_index,event_code],...],"n_samples":N,
//!  "notch_hz":null,"sampling_rate_hz":1000.0,"subject_id":"..."}\n
//! <n_channels * n_samples little-endian f32, frame-major>
//! ```
//!
//! The header is a single line of compact JSON with sorted keys. Sample
//! values are microvolts.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::error::{Error, Result};

pub const NSR_MAGIC: &str = "NSR1";

/// 64 scalp positions of the extended 10/20 system (FCz ground and Fpz
/// reference are not recorded).
pub const STANDARD_64: [&str; 64] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6", "T7", "C3", "Cz",
    "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3", "Pz", "P4", "P8", "PO9",
    "O1", "Oz", "O2", "PO10", "AF7", "AF3", "AF4", "AF8", "F5", "F1", "F2", "F6", "FT9", "FT7",
    "FC3", "FC4", "FT8", "FT10", "C5", "C1", "C2", "C6", "TP7", "CP3", "CPz", "CP4", "TP8", "P5",
    "P1", "P2", "P6", "PO7", "PO3", "POz", "PO4", "PO8",
];

// ── Channel layout ──────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ChannelLayout {
    names: Vec<String>,
}

impl ChannelLayout {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidRecording("channel layout is empty".into()));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidRecording(format!("duplicate channel name {n:?}")));
            }
        }
        Ok(Self { names })
    }

    pub fn standard_64() -> Self {
        Self {
            names: STANDARD_64.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The standard 64-channel montage when `n == 64`, otherwise its first
    /// `n` labels, falling back to `E<i>` names past 64.
    pub fn with_count(n: usize) -> Self {
        let names = (0..n)
            .map(|i| match STANDARD_64.get(i) {
                Some(s) => s.to_string(),
                None => format!("E{}", i + 1),
            })
            .collect();
        Self { names }
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl TryFrom<Vec<String>> for ChannelLayout {
    type Error = Error;
    fn try_from(names: Vec<String>) -> Result<Self> {
        ChannelLayout::new(names)
    }
}

impl From<ChannelLayout> for Vec<String> {
    fn from(l: ChannelLayout) -> Self {
        l.names
    }
}

impl Default for ChannelLayout {
    fn default() -> Self {
        Self::standard_64()
    }
}

// ── Markers and recordings ──────────────────────────────

/// Imagery-phase onset of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventMarker {
    pub sample_index: u64,
    pub command: Command,
}

impl EventMarker {
    pub fn new(sample_index: u64, command: Command) -> Self {
        Self {
            sample_index,
            command,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub sampling_rate_hz: f64,
    pub layout: ChannelLayout,
    /// channels × samples, microvolts. Column-major storage, so each column
    /// is one frame and the buffer matches the NSR payload order.
    pub data: DMatrix<f32>,
    pub markers: Vec<EventMarker>,
    pub notch_applied_hz: Option<f64>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        sampling_rate_hz: f64,
        layout: ChannelLayout,
        data: DMatrix<f32>,
        markers: Vec<EventMarker>,
        notch_applied_hz: Option<f64>,
    ) -> Result<Self> {
        let rec = Self {
            subject_id: subject_id.into(),
            sampling_rate_hz,
            layout,
            data,
            markers,
            notch_applied_hz,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(Error::InvalidRecording(format!(
                "sampling rate {} must be positive",
                self.sampling_rate_hz
            )));
        }
        if self.data.nrows() != self.layout.count() {
            return Err(Error::InvalidRecording(format!(
                "data has {} rows but layout has {} channels",
                self.data.nrows(),
                self.layout.count()
            )));
        }
        if let Some(f) = self.notch_applied_hz {
            if !f.is_finite() {
                return Err(Error::InvalidRecording("notch frequency is not finite".into()));
            }
        }
        let n = self.n_samples();
        for (k, m) in self.markers.iter().enumerate() {
            if m.sample_index >= n as u64 {
                return Err(Error::MarkerOutOfRange {
                    marker: k,
                    sample_index: m.sample_index,
                    n_samples: n,
                });
            }
            if k > 0 && self.markers[k - 1].sample_index > m.sample_index {
                return Err(Error::InvalidRecording(format!(
                    "markers not sorted at index {k}"
                )));
            }
        }
        Ok(())
    }

    /// Equality that compares sample values by bit pattern.
    pub fn bitwise_eq(&self, other: &Recording) -> bool {
        self.subject_id == other.subject_id
            && self.sampling_rate_hz.to_bits() == other.sampling_rate_hz.to_bits()
            && self.layout == other.layout
            && self.markers == other.markers
            && self.notch_applied_hz.map(f64::to_bits) == other.notch_applied_hz.map(f64::to_bits)
            && self.data.shape() == other.data.shape()
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

// ── NSR I/O ─────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NsrHeader {
    subject_id: String,
    sampling_rate_hz: f64,
    channels: Vec<String>,
    notch_hz: Option<f64>,
    markers: Vec<(u64, i64)>,
    n_samples: usize,
}

fn header_line(rec: &Recording) -> Result<String> {
    let header = NsrHeader {
        subject_id: rec.subject_id.clone(),
        sampling_rate_hz: rec.sampling_rate_hz,
        channels: rec.layout.names().to_vec(),
        notch_hz: rec.notch_applied_hz,
        markers: rec
            .markers
            .iter()
            .map(|m| (m.sample_index, m.command.code() as i64))
            .collect(),
        n_samples: rec.n_samples(),
    };
    // Value maps are BTreeMaps: sorted keys, one canonical byte form.
    let v = serde_json::to_value(&header)?;
    Ok(serde_json::to_string(&v)?)
}

pub fn save_recording(rec: &Recording, path: &Path) -> Result<()> {
    rec.validate()?;
    let header = header_line(rec)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::with_capacity(1 << 20, tmp.as_file());
        let io = |e| Error::io(path, e);
        w.write_all(NSR_MAGIC.as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
        w.write_all(header.as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
        for v in rec.data.as_slice() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_line(r: &mut impl BufRead, what: &str, path: &Path) -> Result<String> {
    let mut buf = Vec::new();
    r.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
    if buf.last() != Some(&b'\n') {
        return Err(Error::MalformedHeader(format!("missing {what} line")));
    }
    buf.pop();
    String::from_utf8(buf).map_err(|_| Error::MalformedHeader(format!("{what} line is not UTF-8")))
}

pub fn load_recording(path: &Path) -> Result<Recording> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len() as usize;
    let mut r = BufReader::with_capacity(1 << 20, file);

    let magic = read_line(&mut r, "magic", path)?;
    if magic != NSR_MAGIC {
        return Err(Error::MalformedHeader(format!("bad magic {magic:?}")));
    }
    let json = read_line(&mut r, "header", path)?;
    let header: NsrHeader = serde_json::from_str(&json)
        .map_err(|e| Error::MalformedHeader(format!("header JSON: {e}")))?;
    let layout = ChannelLayout::new(header.channels)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let n_ch = layout.count();

    let payload_len = file_len
        .checked_sub(magic.len() + json.len() + 2)
        .ok_or_else(|| Error::MalformedHeader("file shorter than its header".into()))?;
    if payload_len % (4 * n_ch) != 0 {
        return Err(Error::DataLength {
            len: payload_len,
            channels: n_ch,
        });
    }
    let n_frames = payload_len / (4 * n_ch);
    if n_frames != header.n_samples {
        return Err(Error::MalformedHeader(format!(
            "n_samples is {} but payload holds {n_frames} frames",
            header.n_samples
        )));
    }

    let total = n_ch * n_frames;
    let mut values = Vec::with_capacity(total);
    let mut chunk = vec![0u8; 1 << 20];
    while values.len() < total {
        let want = ((total - values.len()) * 4).min(chunk.len());
        r.read_exact(&mut chunk[..want]).map_err(|e| Error::io(path, e))?;
        values.extend(
            chunk[..want]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
        );
    }

    let mut markers = Vec::with_capacity(header.markers.len());
    for (k, (idx, code)) in header.markers.into_iter().enumerate() {
        if idx >= n_frames as u64 {
            return Err(Error::MarkerOutOfRange {
                marker: k,
                sample_index: idx,
                n_samples: n_frames,
            });
        }
        markers.push(EventMarker::new(idx, Command::from_code(code)?));
    }

    Recording::new(
        header.subject_id,
        header.sampling_rate_hz,
        layout,
        DMatrix::from_vec(n_ch, n_frames, values),
        markers,
        header.notch_hz,
    )
}

// ── Paradigm timing and epoching ────────────────────────

/// Phase durations of one trial, in seconds: rest, visual cue/preparation,
/// fixation, imagery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParadigmTiming {
    pub rest_s: f64,
    pub cue_s: f64,
    pub fixation_s: f64,
    pub imagery_s: f64,
}

impl Default for ParadigmTiming {
    fn default() -> Self {
        Self {
            rest_s: 3.0,
            cue_s: 3.0,
            fixation_s: 3.0,
            imagery_s: 4.0,
        }
    }
}

impl ParadigmTiming {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rest_s", self.rest_s),
            ("cue_s", self.cue_s),
            ("fixation_s", self.fixation_s),
            ("imagery_s", self.imagery_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Samples in the imagery window at `fs`.
    pub fn imagery_samples(&self, fs: f64) -> usize {
        (self.imagery_s * fs).round() as usize
    }

    /// Samples between trial start and imagery onset.
    pub fn pre_imagery_samples(&self, fs: f64) -> usize {
        ((self.rest_s + self.cue_s + self.fixation_s) * fs).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub label: Command,
    /// channels × T
    pub samples: DMatrix<f64>,
}

impl Trial {
    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub trials: Vec<Trial>,
    pub layout: ChannelLayout,
    pub sampling_rate_hz: f64,
}

impl TrialSet {
    pub fn new(trials: Vec<Trial>, layout: ChannelLayout, sampling_rate_hz: f64) -> Result<Self> {
        let ts = Self {
            trials,
            layout,
            sampling_rate_hz,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        let n_ch = self.layout.count();
        let t = self.trials.first().map(Trial::n_samples);
        for (k, tr) in self.trials.iter().enumerate() {
            if tr.n_channels() != n_ch {
                return Err(Error::ShapeMismatch(format!(
                    "trial {k} has {} channels, layout has {n_ch}",
                    tr.n_channels()
                )));
            }
            if Some(tr.n_samples()) != t {
                return Err(Error::ShapeMismatch(format!(
                    "trial {k} has {} samples, trial 0 has {}",
                    tr.n_samples(),
                    t.unwrap_or(0)
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn labels(&self) -> Vec<Command> {
        self.trials.iter().map(|t| t.label).collect()
    }

    /// Copy of the trials at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TrialSet {
        TrialSet {
            trials: indices.iter().map(|&i| self.trials[i].clone()).collect(),
            layout: self.layout.clone(),
            sampling_rate_hz: self.sampling_rate_hz,
        }
    }
}

/// One trial per marker covering `[onset, onset + imagery_s·fs)`.
pub fn extract_trials(rec: &Recording, timing: &ParadigmTiming) -> Result<TrialSet> {
    timing.validate()?;
    let t = timing.imagery_samples(rec.sampling_rate_hz);
    let n = rec.n_samples();
    let mut trials = Vec::with_capacity(rec.markers.len());
    for (k, m) in rec.markers.iter().enumerate() {
        let start = m.sample_index as usize;
        let end = start + t;
        if end > n {
            return Err(Error::WindowOutOfRange {
                marker: k,
                start,
                end,
                n_samples: n,
            });
        }
        let window = rec.data.columns(start, t).map(f64::from);
        trials.push(Trial {
            label: m.command,
            samples: window,
        });
    }
    TrialSet::new(trials, rec.layout.clone(), rec.sampling_rate_hz)
}

pub fn class_histogram(ts: &TrialSet) -> BTreeMap<Command, usize> {
    let mut h: BTreeMap<Command, usize> = Command::ALL.iter().map(|&c| (c, 0)).collect();
    for t in &ts.trials {
        *h.entry(t.label).or_insert(0) += 1;
    }
    h
}
