//! Seeded synthetic EEG with controllable class separability.
//!
//! Generative model, per subject:
//!
//! * a random mixing matrix `A` (channels × sources) with orthonormal
//!   columns, drawn from the subject seed;
//! * `n_sources` latent sources, each white Gaussian noise band-limited to
//!   8–30 Hz (ideal bandpass in the frequency domain) and scaled to
//!   [`SOURCE_STD_UV`];
//! * during the imagery window of a class-`c` trial, source `j` has its
//!   standard deviation multiplied by `1 + separability·P[c][j]` with `P`
//!   from [`pattern_matrix`]; rest, cue and fixation phases keep unit gain;
//! * `X = A·S + noise_floor·W` with `W` white Gaussian noise.
//!
//! Class order is a seeded shuffle of the balanced label multiset and each
//! marker sits at an imagery onset. A final rest period follows the last
//! trial so edge effects of continuous filtering stay outside it.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::error::{Error, Result};
use crate::recording::{ChannelLayout, EventMarker, ParadigmTiming, Recording};

/// Number of sources the class pattern acts on.
pub const PATTERN_SOURCES: usize = 8;

/// Standard deviation of each latent source at unit gain, microvolts.
pub const SOURCE_STD_UV: f64 = 10.0;

pub const LINE_FREQ_HZ: f64 = 60.0;

/// Passband of the latent sources, Hz.
pub const SOURCE_BAND_HZ: [f64; 2] = [8.0, 30.0];

const MIXING_STREAM: u64 = 0;
const SESSION_STREAM: u64 = 1;

/// Class `c` (row `c.index()`) drives sources `2c` and `2c + 1` with weight
/// `1/√2` each. Rows are orthonormal and no two classes share a source.
pub fn pattern_matrix() -> [[f64; PATTERN_SOURCES]; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = [[0.0; PATTERN_SOURCES]; 4];
    for (c, row) in p.iter_mut().enumerate() {
        row[2 * c] = h;
        row[2 * c + 1] = h;
    }
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_channels: usize,
    pub fs_hz: f64,
    pub trials_per_class: usize,
    pub timing: ParadigmTiming,
    pub separability: f64,
    /// Standard deviation of the additive white sensor noise, microvolts.
    pub noise_floor: f64,
    pub seed: u64,
    pub n_sources: usize,
    /// Amplitude of an added 60 Hz sinusoid on every channel; 0 disables it.
    pub line_noise_uv: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_channels: 64,
            fs_hz: 1000.0,
            trials_per_class: 50,
            timing: ParadigmTiming::default(),
            separability: 0.5,
            noise_floor: 1.0,
            seed: 0,
            n_sources: PATTERN_SOURCES,
            line_noise_uv: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        if !(0.0..=1.0).contains(&self.separability) {
            return Err(Error::InvalidConfig(format!(
                "separability {} outside [0, 1]",
                self.separability
            )));
        }
        if !(self.noise_floor.is_finite() && self.noise_floor > 0.0) {
            return Err(Error::InvalidConfig("noise_floor must be > 0".into()));
        }
        if self.n_sources < PATTERN_SOURCES {
            return Err(Error::InvalidConfig(format!(
                "n_sources must be at least {PATTERN_SOURCES}"
            )));
        }
        if self.n_sources > self.n_channels {
            return Err(Error::InvalidConfig(format!(
                "n_sources {} exceeds n_channels {}",
                self.n_sources, self.n_channels
            )));
        }
        if !(self.fs_hz.is_finite() && self.fs_hz > 2.0 * LINE_FREQ_HZ) {
            return Err(Error::InvalidConfig(format!(
                "fs_hz must exceed {} Hz",
                2.0 * LINE_FREQ_HZ
            )));
        }
        if self.trials_per_class == 0 {
            return Err(Error::InvalidConfig("trials_per_class must be >= 1".into()));
        }
        if !(self.line_noise_uv.is_finite() && self.line_noise_uv >= 0.0) {
            return Err(Error::InvalidConfig("line_noise_uv must be >= 0".into()));
        }
        Ok(())
    }

    pub fn subject_id(&self) -> String {
        format!("synth-{}", self.seed)
    }
}

/// Random channels × sources matrix with orthonormal columns.
pub fn mixing_matrix(cfg: &SynthConfig) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(MIXING_STREAM);
    let g = DMatrix::from_fn(cfg.n_channels, cfg.n_sources, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = g.qr().q();
    // QR leaves column signs to the implementation; pin them.
    for mut col in q.column_iter_mut() {
        let s: f64 = col.iter().sum();
        if s < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// Zeroes every DFT bin of `x` outside `band` (both signs of frequency).
pub fn band_limit(x: &mut [f64], band: [f64; 2], fs: f64, planner: &mut FftPlanner<f64>) {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * fs / n as f64;
        if f < band[0] || f > band[1] {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    for (o, v) in x.iter_mut().zip(&buf) {
        *o = v.re / n as f64;
    }
}

/// One paradigm-shaped session for the subject defined by `cfg.seed`.
pub fn generate_subject(cfg: &SynthConfig) -> Result<Recording> {
    generate_session(cfg, cfg.seed)
}

/// A session with the subject's mixing matrix (from `cfg.seed`) but trial
/// order, sources and noise drawn from `session_seed`. Used to probe a
/// trained decoder with fresh trials from the same subject.
pub fn generate_session(cfg: &SynthConfig, session_seed: u64) -> Result<Recording> {
    cfg.validate()?;
    let fs = cfg.fs_hz;
    let mixing = mixing_matrix(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(session_seed);
    rng.set_stream(SESSION_STREAM);

    let mut labels: Vec<Command> = Command::ALL
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, cfg.trials_per_class))
        .collect();
    labels.shuffle(&mut rng);

    let pre = cfg.timing.pre_imagery_samples(fs);
    let imagery = cfg.timing.imagery_samples(fs);
    let tail = (cfg.timing.rest_s * fs).round() as usize;
    let period = pre + imagery;
    let n = labels.len() * period + tail;

    let markers: Vec<EventMarker> = labels
        .iter()
        .enumerate()
        .map(|(k, &c)| EventMarker::new((k * period + pre) as u64, c))
        .collect();

    // Sources: band-limited, unit RMS, then per-window class gains.
    let mut planner = FftPlanner::new();
    let pattern = pattern_matrix();
    let mut sources: Vec<Vec<f64>> = Vec::with_capacity(cfg.n_sources);
    for j in 0..cfg.n_sources {
        let mut s: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        band_limit(&mut s, SOURCE_BAND_HZ, fs, &mut planner);
        let rms = (s.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let scale = SOURCE_STD_UV / rms;
        s.iter_mut().for_each(|v| *v *= scale);
        if j < PATTERN_SOURCES {
            for m in &markers {
                let gain = 1.0 + cfg.separability * pattern[m.command.index()][j];
                let start = m.sample_index as usize;
                s[start..start + imagery].iter_mut().for_each(|v| *v *= gain);
            }
        }
        sources.push(s);
    }

    let n_ch = cfg.n_channels;
    let line_w = 2.0 * std::f64::consts::PI * LINE_FREQ_HZ / fs;
    let mut data = DMatrix::<f32>::zeros(n_ch, n);
    let mut frame = vec![0.0f64; n_ch];
    for (t, out) in data.as_mut_slice().chunks_exact_mut(n_ch).enumerate() {
        frame.iter_mut().for_each(|v| *v = 0.0);
        for (j, s) in sources.iter().enumerate() {
            let sv = s[t];
            for (ch, f) in frame.iter_mut().enumerate() {
                *f += mixing[(ch, j)] * sv;
            }
        }
        let line = if cfg.line_noise_uv > 0.0 {
            cfg.line_noise_uv * (line_w * t as f64).sin()
        } else {
            0.0
        };
        for (o, f) in out.iter_mut().zip(&frame) {
            let noise: f64 = rng.sample(StandardNormal);
            *o = (f + cfg.noise_floor * noise + line) as f32;
        }
    }

    Recording::new(
        cfg.subject_id(),
        fs,
        ChannelLayout::with_count(n_ch),
        data,
        markers,
        None,
    )
}
