//! IIR filter design (Butterworth bandpass, notch) and zero-phase
//! forward-backward filtering.
//!
//! Bandpass design follows the classic analog route: Butterworth lowpass
//! prototype poles, lowpass-to-bandpass transform about the prewarped band
//! edges, then the bilinear transform. An order-`n` prototype yields a
//! `2n`-order digital bandpass.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recording::{Recording, Trial, TrialSet};

type C64 = Complex<f64>;

/// Transfer function coefficients, `a[0] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub description: String,
}

impl FilterSpec {
    pub fn new(b: Vec<f64>, a: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        let spec = Self {
            b,
            a,
            description: description.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn identity() -> Self {
        Self {
            b: vec![1.0],
            a: vec![1.0],
            description: "identity".into(),
        }
    }

    /// Coefficient count of the longer polynomial.
    pub fn n_taps(&self) -> usize {
        self.a.len().max(self.b.len())
    }

    /// Roots of the denominator.
    pub fn poles(&self) -> Vec<C64> {
        poly_roots(&self.a)
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        self.poles().iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() || self.b.is_empty() {
            return Err(Error::InvalidFilter("empty coefficient list".into()));
        }
        if self.a[0] != 1.0 {
            return Err(Error::InvalidFilter(format!("a[0] must be 1, got {}", self.a[0])));
        }
        if self.a.iter().chain(&self.b).any(|c| !c.is_finite()) {
            return Err(Error::InvalidFilter("non-finite coefficient".into()));
        }
        let max_pole = self.max_pole_magnitude();
        if max_pole >= 1.0 {
            return Err(Error::UnstableFilter { max_pole });
        }
        Ok(())
    }
}

// ── Polynomial helpers ──────────────────────────────────

/// Monic polynomial (highest power first) with the given roots; roots must
/// come in conjugate pairs so the imaginary parts cancel.
fn poly_from_roots(roots: &[C64]) -> Vec<f64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

/// Roots of `c[0]·x^n + ... + c[n]` via companion-matrix eigenvalues.
fn poly_roots(c: &[f64]) -> Vec<C64> {
    let lead = c.iter().position(|&v| v != 0.0);
    let Some(lead) = lead else { return Vec::new() };
    let c = &c[lead..];
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

// ── Design ──────────────────────────────────────────────

fn prewarp(f_hz: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f_hz / fs).tan()
}

/// Analog Butterworth lowpass prototype poles (unit cutoff).
fn butter_prototype(order: usize) -> Vec<C64> {
    let n = order as f64;
    (0..order)
        .map(|k| {
            let m = -(n - 1.0) + 2.0 * k as f64;
            -C64::from_polar(1.0, PI * m / (2.0 * n))
        })
        .collect()
}

/// Largest accepted deviation of the band-edge gain from 1/√2.
pub const EDGE_GAIN_TOL: f64 = 1e-6;

pub fn design_bandpass(low_hz: f64, high_hz: f64, order: usize, fs: f64) -> Result<FilterSpec> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::InvalidFilter(format!("sampling rate {fs} must be positive")));
    }
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
        return Err(Error::InvalidFilter(format!(
            "band [{low_hz}, {high_hz}] Hz must satisfy 0 < low < high < fs/2 = {}",
            fs / 2.0
        )));
    }
    if order == 0 {
        return Err(Error::InvalidFilter("order must be >= 1".into()));
    }

    let w1 = prewarp(low_hz, fs);
    let w2 = prewarp(high_hz, fs);
    let bw = w2 - w1;
    let w0 = (w1 * w2).sqrt();

    // Lowpass to bandpass: each prototype pole splits into two.
    let mut poles = Vec::with_capacity(2 * order);
    for p in butter_prototype(order) {
        let half = p * (bw / 2.0);
        let disc = (half * half - C64::new(w0 * w0, 0.0)).sqrt();
        poles.push(half + disc);
        poles.push(half - disc);
    }
    let gain = bw.powi(order as i32);

    // Bilinear transform. `order` analog zeros at s = 0 map to z = 1, the
    // remaining `order` zeros at infinity map to z = -1.
    let fs2 = 2.0 * fs;
    let zpole: Vec<C64> = poles.iter().map(|&p| (fs2 + p) / (fs2 - p)).collect();
    let mut zzero = vec![C64::new(1.0, 0.0); order];
    zzero.extend(std::iter::repeat_n(C64::new(-1.0, 0.0), order));
    let num: C64 = std::iter::repeat_n(C64::new(fs2, 0.0), order).product();
    let den: C64 = poles.iter().map(|&p| fs2 - p).product();
    let k = gain * (num / den).re;

    let b: Vec<f64> = poly_from_roots(&zzero).into_iter().map(|c| c * k).collect();
    let a = poly_from_roots(&zpole);
    let spec = FilterSpec::new(
        b,
        a,
        format!("butter{order}-bandpass-{low_hz}-{high_hz}@{fs}"),
    )?;
    // Narrow low bands at high order lose precision in polynomial form even
    // when the poles stay inside the unit circle.
    for edge in [low_hz, high_hz] {
        let (m, _) = frequency_response(&spec, edge, fs);
        if !((m - std::f64::consts::FRAC_1_SQRT_2).abs() <= EDGE_GAIN_TOL) {
            return Err(Error::InvalidFilter(format!(
                "coefficients too ill-conditioned: gain {m} at the {edge} Hz edge"
            )));
        }
    }
    Ok(spec)
}

/// Second-order notch: zeros on the unit circle at `freq_hz`, pole radius
/// set by the quality factor `q`, unity gain at DC and Nyquist.
pub fn design_notch(freq_hz: f64, q: f64, fs: f64) -> Result<FilterSpec> {
    if !(fs.is_finite() && fs > 0.0 && freq_hz > 0.0 && freq_hz < fs / 2.0) {
        return Err(Error::InvalidFilter(format!(
            "notch frequency {freq_hz} Hz must lie in (0, fs/2)"
        )));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidFilter(format!("q must be > 0, got {q}")));
    }
    let w0 = 2.0 * PI * freq_hz / fs;
    let alpha = w0.sin() / (2.0 * q);
    let cw = w0.cos();
    let a0 = 1.0 + alpha;
    let b = vec![1.0 / a0, -2.0 * cw / a0, 1.0 / a0];
    let a = vec![1.0, -2.0 * cw / a0, (1.0 - alpha) / a0];
    FilterSpec::new(b, a, format!("notch-{freq_hz}-q{q}@{fs}"))
}

/// Magnitude and phase (radians) of `H(e^{jω})`, `ω = 2πf/fs`.
pub fn frequency_response(spec: &FilterSpec, freq_hz: f64, fs: f64) -> (f64, f64) {
    let w = 2.0 * PI * freq_hz / fs;
    let eval = |c: &[f64]| -> C64 {
        c.iter()
            .enumerate()
            .map(|(k, &v)| C64::from_polar(v, -w * k as f64))
            .sum()
    };
    let h = eval(&spec.b) / eval(&spec.a);
    (h.norm(), h.arg())
}

// ── Filtering ───────────────────────────────────────────

fn padded_coefficients(spec: &FilterSpec) -> (Vec<f64>, Vec<f64>) {
    let n = spec.n_taps();
    let mut b = spec.b.clone();
    let mut a = spec.a.clone();
    b.resize(n, 0.0);
    a.resize(n, 0.0);
    (b, a)
}

/// Direct-form II transposed filter, state `z` updated in place.
fn lfilter_in_place(b: &[f64], a: &[f64], x: &mut [f64], z: &mut [f64]) {
    let n = b.len();
    if n == 1 {
        for v in x.iter_mut() {
            *v *= b[0];
        }
        return;
    }
    for v in x.iter_mut() {
        let xi = *v;
        let y = b[0] * xi + z[0];
        for i in 1..n - 1 {
            z[i - 1] = b[i] * xi + z[i] - a[i] * y;
        }
        z[n - 2] = b[n - 1] * xi - a[n - 1] * y;
        *v = y;
    }
}

/// Steady-state filter state for a unit step input.
fn lfilter_zi(b: &[f64], a: &[f64]) -> Vec<f64> {
    let n = b.len();
    if n < 2 {
        return Vec::new();
    }
    let m = n - 1;
    // I - companion(a)^T
    let mut lhs = DMatrix::<f64>::identity(m, m);
    for i in 0..m {
        lhs[(i, 0)] += a[i + 1];
    }
    for i in 0..m - 1 {
        lhs[(i, i + 1)] -= 1.0;
    }
    let rhs = DVector::from_iterator(m, (1..n).map(|i| b[i] - a[i] * b[0]));
    lhs.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|| vec![0.0; m])
}

/// Minimum signal length accepted by [`filtfilt`] is one more than this.
pub fn filtfilt_min_len(spec: &FilterSpec) -> usize {
    3 * spec.n_taps()
}

/// Zero-phase filtering: odd-reflection padding of `3·(n_taps − 1)`
/// samples on each side, forward pass, backward pass, padding stripped.
/// Both passes start from the steady-state response to the first sample.
pub fn filtfilt(spec: &FilterSpec, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    filtfilt_in_place(spec, &mut out)?;
    Ok(out)
}

pub fn filtfilt_in_place(spec: &FilterSpec, x: &mut [f64]) -> Result<()> {
    let n = x.len();
    let min = filtfilt_min_len(spec);
    if n <= min {
        return Err(Error::SignalTooShort { len: n, min });
    }
    let (b, a) = padded_coefficients(spec);
    let pad = 3 * (spec.n_taps() - 1);
    let zi = lfilter_zi(&b, &a);

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((0..pad).map(|i| 2.0 * x[0] - x[pad - i]));
    ext.extend_from_slice(x);
    ext.extend((0..pad).map(|i| 2.0 * x[n - 1] - x[n - 2 - i]));

    let mut z: Vec<f64> = zi.iter().map(|v| v * ext[0]).collect();
    lfilter_in_place(&b, &a, &mut ext, &mut z);
    ext.reverse();
    let mut z: Vec<f64> = zi.iter().map(|v| v * ext[0]).collect();
    lfilter_in_place(&b, &a, &mut ext, &mut z);
    ext.reverse();

    x.copy_from_slice(&ext[pad..pad + n]);
    Ok(())
}

/// Filters every channel of every trial independently.
pub fn filter_trialset(spec: &FilterSpec, ts: &TrialSet) -> Result<TrialSet> {
    let mut trials = Vec::with_capacity(ts.len());
    let mut row = Vec::new();
    for t in &ts.trials {
        let mut samples = t.samples.clone();
        for r in 0..samples.nrows() {
            row.clear();
            row.extend(samples.row(r).iter().copied());
            filtfilt_in_place(spec, &mut row)?;
            for (c, v) in row.iter().enumerate() {
                samples[(r, c)] = *v;
            }
        }
        trials.push(Trial {
            label: t.label,
            samples,
        });
    }
    TrialSet::new(trials, ts.layout.clone(), ts.sampling_rate_hz)
}

/// Filters each channel of a continuous recording in place. Channels are
/// gathered in blocks so the frame-major buffer is walked a few times
/// rather than once per channel.
pub fn filter_recording_in_place(spec: &FilterSpec, rec: &mut Recording) -> Result<()> {
    const BLOCK: usize = 8;
    let n_ch = rec.n_channels();
    let n = rec.n_samples();
    let mut rows: Vec<Vec<f64>> = (0..BLOCK.min(n_ch)).map(|_| vec![0.0; n]).collect();
    for start in (0..n_ch).step_by(BLOCK) {
        let width = BLOCK.min(n_ch - start);
        for (t, frame) in rec.data.as_slice().chunks_exact(n_ch).enumerate() {
            for j in 0..width {
                rows[j][t] = frame[start + j] as f64;
            }
        }
        for row in rows.iter_mut().take(width) {
            filtfilt_in_place(spec, row)?;
        }
        for (t, frame) in rec.data.as_mut_slice().chunks_exact_mut(n_ch).enumerate() {
            for j in 0..width {
                frame[start + j] = rows[j][t] as f32;
            }
        }
    }
    Ok(())
}

pub fn filter_recording(spec: &FilterSpec, rec: &Recording) -> Result<Recording> {
    let mut out = rec.clone();
    filter_recording_in_place(spec, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn default_band() -> FilterSpec {
        design_bandpass(8.0, 30.0, 2, 1000.0).unwrap()
    }

    #[test]
    fn bandpass_edges_are_half_power() {
        let f = default_band();
        assert_eq!(f.a.len(), 5);
        assert_eq!(f.b.len(), 5);
        for edge in [8.0, 30.0] {
            let (m, _) = frequency_response(&f, edge, 1000.0);
            assert_abs_diff_eq!(m, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-6);
        }
    }

    #[test]
    fn bandpass_zeros_at_dc_and_nyquist() {
        let f = default_band();
        assert!(frequency_response(&f, 0.0, 1000.0).0 < 1e-9);
        assert!(frequency_response(&f, 500.0, 1000.0).0 < 1e-9);
    }

    #[test]
    fn bandpass_passband_center() {
        let f = default_band();
        let center = (8.0f64 * 30.0).sqrt();
        assert!(frequency_response(&f, center, 1000.0).0 >= 0.99);
        let m19 = frequency_response(&f, 19.0, 1000.0).0;
        assert!((0.95..=1.0 + 1e-12).contains(&m19), "{m19}");
    }

    #[test]
    fn higher_orders_keep_edges() {
        for order in 1..=4 {
            let f = design_bandpass(8.0, 30.0, order, 1000.0).unwrap();
            assert_eq!(f.a.len(), 2 * order + 1);
            for edge in [8.0, 30.0] {
                let (m, _) = frequency_response(&f, edge, 1000.0);
                assert_abs_diff_eq!(m, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-6);
            }
            assert!(f.max_pole_magnitude() < 1.0);
        }
    }

    #[test]
    fn bandpass_rejects_bad_bands() {
        assert!(design_bandpass(30.0, 8.0, 2, 1000.0).is_err());
        assert!(design_bandpass(0.0, 8.0, 2, 1000.0).is_err());
        assert!(design_bandpass(8.0, 500.0, 2, 1000.0).is_err());
        assert!(design_bandpass(8.0, 30.0, 0, 1000.0).is_err());
    }

    #[test]
    fn extreme_order_is_reported_unstable() {
        // A very narrow, very high order design loses its poles to rounding
        // in the expanded transfer-function polynomial.
        match design_bandpass(1.0, 1.5, 24, 1000.0) {
            Err(Error::UnstableFilter { max_pole }) => assert!(max_pole >= 1.0),
            Err(Error::InvalidFilter(_)) => {}
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn notch_response() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        assert!(frequency_response(&f, 60.0, 1000.0).0 < 1e-9);
        assert_abs_diff_eq!(frequency_response(&f, 0.0, 1000.0).0, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(frequency_response(&f, 500.0, 1000.0).0, 1.0, epsilon = 1e-6);
        assert!(frequency_response(&f, 55.0, 1000.0).0 > 0.9);
        assert!(frequency_response(&f, 65.0, 1000.0).0 > 0.9);
        assert!(design_notch(600.0, 30.0, 1000.0).is_err());
        assert!(design_notch(60.0, 0.0, 1000.0).is_err());
    }

    #[test]
    fn response_of_trivial_filters() {
        let id = FilterSpec::identity();
        for f in [0.0, 13.0, 250.0, 500.0] {
            let (m, p) = frequency_response(&id, f, 1000.0);
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
        }
        let delay = FilterSpec::new(vec![0.0, 1.0], vec![1.0], "delay").unwrap();
        let (m, p) = frequency_response(&delay, 250.0, 1000.0);
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p, -PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_specs() {
        assert!(FilterSpec::new(vec![1.0], vec![2.0], "x").is_err());
        assert!(matches!(
            FilterSpec::new(vec![1.0], vec![1.0, -1.5], "x"),
            Err(Error::UnstableFilter { .. })
        ));
    }

    #[test]
    fn constant_is_rejected() {
        let f = default_band();
        let x = vec![3.5; 2000];
        let y = filtfilt(&f, &x).unwrap();
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 1e-6 * 3.5, "{peak}");
    }

    #[test]
    fn too_short_signal() {
        let f = default_band();
        assert!(matches!(
            filtfilt(&f, &[1.0; 15]),
            Err(Error::SignalTooShort { len: 15, min: 15 })
        ));
        assert!(filtfilt(&f, &[1.0; 16]).is_ok());
    }

    #[test]
    fn sine_amplitude_matches_squared_response() {
        let f = default_band();
        let fs = 1000.0;
        let x: Vec<f64> = (0..4000).map(|n| (2.0 * PI * 19.0 * n as f64 / fs).sin()).collect();
        let y = filtfilt(&f, &x).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        let ratio = rms(&y[200..3800]) / rms(&x[200..3800]);
        let h = frequency_response(&f, 19.0, fs).0;
        assert!((ratio / (h * h) - 1.0).abs() < 0.02, "{ratio} vs {}", h * h);
    }

    #[test]
    fn trialset_filtering_preserves_shape_and_labels() {
        use crate::recording::ChannelLayout;
        use crate::Command;
        let f = default_band();
        let empty = TrialSet::new(vec![], ChannelLayout::with_count(2), 1000.0).unwrap();
        assert!(filter_trialset(&f, &empty).unwrap().is_empty());

        let samples = DMatrix::from_fn(2, 500, |r, c| ((c * (r + 1)) as f64 * 0.1).sin());
        let t = Trial {
            label: Command::Splitting,
            samples,
        };
        let ts = TrialSet::new(vec![t.clone(), t], ChannelLayout::with_count(2), 1000.0).unwrap();
        let out = filter_trialset(&f, &ts).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.trials[0].label, Command::Splitting);
        assert_eq!(out.trials[0].samples.shape(), (2, 500));
        let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&out.trials[0].samples), bits(&out.trials[1].samples));
    }

    #[test]
    fn recording_filter_matches_per_channel_filtfilt() {
        use crate::recording::ChannelLayout;
        let f = default_band();
        let n_ch = 11;
        let data = DMatrix::from_fn(n_ch, 700, |r, c| ((c as f32) * 0.05 * (r as f32 + 1.0)).sin());
        let rec = Recording::new("s", 1000.0, ChannelLayout::with_count(n_ch), data, vec![], None)
            .unwrap();
        let out = filter_recording(&f, &rec).unwrap();
        for r in 0..n_ch {
            let x: Vec<f64> = rec.data.row(r).iter().map(|&v| v as f64).collect();
            let y = filtfilt(&f, &x).unwrap();
            for (c, v) in y.iter().enumerate() {
                assert_eq!(out.data[(r, c)], *v as f32);
            }
        }
    }
}
