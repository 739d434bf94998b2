mod common;

use brainswarm::decode::{fit_decoder, predict, DecoderConfig};
use brainswarm::recording::class_histogram;
use brainswarm::synth::{generate_subject, SynthConfig};
use brainswarm::Command;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Channel-averaged Welch PSD (Hann window, 50 % overlap), one-sided, with
/// bin spacing fs/seg.
fn welch_psd(rows: &[Vec<f64>], seg: usize) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(seg);
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg as f64).cos())
        .collect();
    let mut psd = vec![0.0; seg / 2 + 1];
    let mut count = 0usize;
    for x in rows {
        let mut start = 0;
        while start + seg <= x.len() {
            let mut buf: Vec<Complex64> = (0..seg).map(|i| Complex64::new(x[start + i] * window[i], 0.0)).collect();
            fft.process(&mut buf);
            for (k, p) in psd.iter_mut().enumerate() {
                *p += buf[k].norm_sqr();
            }
            count += 1;
            start += seg / 2;
        }
    }
    psd.iter().map(|p| p / count as f64).collect()
}

#[test]
fn power_is_concentrated_in_band() {
    let cfg = SynthConfig {
        trials_per_class: 3,
        separability: 0.9,
        seed: 5,
        ..SynthConfig::default()
    };
    let rec = generate_subject(&cfg).unwrap();
    let rows: Vec<Vec<f64>> = (0..rec.n_channels())
        .map(|c| rec.data.row(c).iter().map(|&v| v as f64).collect())
        .collect();
    let seg = 1000;
    let psd = welch_psd(&rows, seg);
    let hz = |k: usize| k as f64 * cfg.fs_hz / seg as f64;
    let peak = (0..psd.len()).filter(|&k| (8.0..=30.0).contains(&hz(k))).map(|k| psd[k]).fold(0.0, f64::max);
    let outside = (0..psd.len())
        .filter(|&k| !(6.0..=32.0).contains(&hz(k)))
        .map(|k| psd[k])
        .fold(0.0, f64::max);
    let db = 10.0 * (outside / peak).log10();
    assert!(db <= -20.0, "strongest out-of-band bin is {db:.1} dB re the in-band peak");
}

#[test]
fn default_label_multiset_is_balanced() {
    let cfg = common::small_synth(0.5, 50, 1);
    let ts = common::trials(&cfg);
    assert_eq!(ts.len(), 200);
    assert!(class_histogram(&ts).values().all(|&n| n == 50));
}

#[test]
fn same_seed_same_bits() {
    let cfg = common::small_synth(0.5, 4, 9);
    let a = generate_subject(&cfg).unwrap();
    let b = generate_subject(&cfg).unwrap();
    assert!(a.bitwise_eq(&b));
    let c = generate_subject(&SynthConfig { seed: 10, ..cfg }).unwrap();
    assert!(!a.bitwise_eq(&c));
}

#[test]
fn decoder_recovers_each_class_on_fresh_trials() {
    let cfg = common::small_synth(0.9, 50, 21);
    let model = fit_decoder(&common::trials(&cfg), &DecoderConfig::default()).unwrap();
    let probe_cfg = SynthConfig {
        trials_per_class: 100,
        ..cfg.clone()
    };
    let probe = common::session_trials(&probe_cfg, 9_999);
    let mut hits = [0usize; 4];
    let mut totals = [0usize; 4];
    for t in &probe.trials {
        totals[t.label.index()] += 1;
        if predict(&model, t).unwrap().label == t.label {
            hits[t.label.index()] += 1;
        }
    }
    for c in Command::ALL {
        let rate = hits[c.index()] as f64 / totals[c.index()] as f64;
        assert_eq!(totals[c.index()], 100);
        assert!(rate >= 0.9, "{c}: {rate}");
    }
}
