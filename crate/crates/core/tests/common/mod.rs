#![allow(dead_code)]

use brainswarm::csp::ClassCovariance;
use brainswarm::recording::{extract_trials, ParadigmTiming, TrialSet};
use brainswarm::synth::{self, SynthConfig};
use brainswarm::{dsp, synth::generate_subject};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Small, fast subject: 16 channels at 250 Hz with short inter-trial gaps.
pub fn small_synth(separability: f64, trials_per_class: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        n_channels: 16,
        fs_hz: 250.0,
        trials_per_class,
        timing: ParadigmTiming {
            rest_s: 1.0,
            cue_s: 0.5,
            fixation_s: 0.5,
            imagery_s: 2.0,
        },
        separability,
        seed,
        ..SynthConfig::default()
    }
}

/// Generate, bandpass 8–30 Hz on the continuous data, epoch.
pub fn trials(cfg: &SynthConfig) -> TrialSet {
    let mut rec = generate_subject(cfg).unwrap();
    let band = dsp::design_bandpass(8.0, 30.0, 2, cfg.fs_hz).unwrap();
    dsp::filter_recording_in_place(&band, &mut rec).unwrap();
    extract_trials(&rec, &cfg.timing).unwrap()
}

pub fn session_trials(cfg: &SynthConfig, session_seed: u64) -> TrialSet {
    let mut rec = synth::generate_session(cfg, session_seed).unwrap();
    let band = dsp::design_bandpass(8.0, 30.0, 2, cfg.fs_hz).unwrap();
    dsp::filter_recording_in_place(&band, &mut rec).unwrap();
    extract_trials(&rec, &cfg.timing).unwrap()
}

/// Trace-normalized sample covariance of `4·n` Gaussian samples pushed
/// through a random channel scaling, so conditioning varies.
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let t = 4 * n + 8;
    let scales: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
    let x = DMatrix::from_fn(n, t, |r, _| scales[r] * rng.sample::<f64, _>(StandardNormal));
    let c = &x * x.transpose();
    let tr = c.trace();
    c / tr
}

pub fn class_cov(m: DMatrix<f64>) -> ClassCovariance {
    ClassCovariance {
        matrix: m,
        n_trials: 1,
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}
