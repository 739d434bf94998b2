mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use brainswarm::cli::{
    cmd_evaluate, cmd_pipeline, cmd_simulate, cmd_synth, sha256_file, PipelineManifest, PredictionSource, RunConfig,
};
use brainswarm::eval::GroupSummary;
use brainswarm::swarm::SwarmConfig;
use brainswarm::synth::SynthConfig;
use brainswarm::{jsonio, Command};

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_brainswarm"))
}

fn synth_cfg(separability: f64) -> SynthConfig {
    common::small_synth(separability, 10, 40)
}

fn run_cfg() -> RunConfig {
    RunConfig {
        timing: synth_cfg(0.0).timing,
        ..RunConfig::default()
    }
}

fn files_under(dir: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out
}

#[test]
fn synth_writes_checksummed_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_cfg(0.5);
    let m = cmd_synth(&cfg, &dir.path().join("a"), 3, 2).unwrap();
    assert_eq!(m.subjects.len(), 3);
    assert_eq!(m.subjects.iter().map(|s| s.seed).collect::<Vec<_>>(), vec![40, 41, 42]);
    for s in &m.subjects {
        assert_eq!(sha256_file(&dir.path().join("a").join(&s.file)).unwrap(), s.sha256);
    }
    let again = cmd_synth(&cfg, &dir.path().join("b"), 3, 1).unwrap();
    assert_eq!(m, again);
    assert!(cmd_synth(&cfg, &dir.path().join("c"), 0, 1).is_err());
}

#[test]
fn evaluate_summarizes_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let m = cmd_synth(&synth_cfg(0.9), dir.path(), 2, 1).unwrap();
    let paths: Vec<PathBuf> = m.subjects.iter().map(|s| dir.path().join(&s.file)).collect();
    let cfg = run_cfg();
    let out = dir.path().join("summary.json");
    let g = cmd_evaluate(&paths, &cfg, &out, 2).unwrap();
    assert_eq!(g.per_subject.len(), 2);
    assert!(g.grand_mean >= 0.9, "{}", g.grand_mean);
    let fp = cfg.fingerprint().unwrap();
    assert_eq!(g.config_fingerprint, fp);
    assert!(g.per_subject.values().all(|r| r.config_fingerprint == fp));
    let means: Vec<f64> = g.per_subject.values().map(|r| r.mean_accuracy).collect();
    assert!((g.grand_mean - means.iter().sum::<f64>() / 2.0).abs() < 1e-12);
    let back: GroupSummary = jsonio::read_json(&out).unwrap();
    assert_eq!(back, g);

    let one = cmd_evaluate(&paths[..1], &cfg, &dir.path().join("one.json"), 1).unwrap();
    assert_eq!(one.per_subject.len(), 1);

    // Epoch-stage filtering is a different configuration with its own fingerprint.
    let epoch = RunConfig {
        filter_stage: serde_json::from_str(r#""epoch""#).unwrap(),
        ..run_cfg()
    };
    let e = cmd_evaluate(&paths[..1], &epoch, &dir.path().join("e.json"), 1).unwrap();
    assert_ne!(e.config_fingerprint, g.config_fingerprint);
    assert!(e.grand_mean >= 0.8);
}

#[test]
fn simulate_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SwarmConfig::default();
    let log = cmd_simulate(&[Command::Hovering], &cfg, &dir.path().join("h"), None).unwrap();
    assert_eq!(log.segments[0].timeline.len(), 1);
    let csv = std::fs::read_to_string(dir.path().join("h").join(&log.segments[0].trajectory_file)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 50);
    assert_eq!(csv.lines().next().unwrap(), "step,drone_id,x,y");

    let seq = [Command::Aggregating, Command::Dispersing, Command::Splitting, Command::Hovering];
    let log = cmd_simulate(&seq, &cfg, &dir.path().join("s"), None).unwrap();
    assert_eq!(log.segments.len(), 4);
    assert!(log.segments.iter().all(|s| s.converged));
    assert!(log.segments[0].timeline.last().unwrap().mean_centroid_dist <= cfg.r_aggregate);
    assert_eq!(log.segments[2].timeline.last().unwrap().cluster_count, 2);
    assert_eq!(files_under(&dir.path().join("s").join("trajectories")).len(), 4);
    assert!(cmd_simulate(&[], &cfg, &dir.path().join("e"), None).is_err());
}

#[test]
fn pipeline_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let m = cmd_synth(&synth_cfg(0.9), &dir.path().join("data"), 1, 1).unwrap();
    let nsr = dir.path().join("data").join(&m.subjects[0].file);
    let run_cfg = run_cfg();
    let swarm_cfg = SwarmConfig::default();
    let a = cmd_pipeline(&nsr, &run_cfg, &swarm_cfg, &dir.path().join("a")).unwrap();
    let b = cmd_pipeline(&nsr, &run_cfg, &swarm_cfg, &dir.path().join("b")).unwrap();

    let mut emitted = files_under(&dir.path().join("a"));
    assert!(emitted.remove("manifest.json"));
    assert_eq!(emitted, a.files.iter().cloned().collect());
    assert_eq!(a.behaviors.len(), 8, "fold 0 holds 2 trials per class");

    for f in &a.files {
        let (x, y) = (dir.path().join("a").join(f), dir.path().join("b").join(f));
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{f}");
    }
    let strip = |m: &PipelineManifest| PipelineManifest { timestamp: 0, ..m.clone() };
    assert_eq!(strip(&a), strip(&b));
    let read = |p: &Path| -> serde_json::Value {
        let mut v: serde_json::Value = jsonio::read_json(p).unwrap();
        v.as_object_mut().unwrap().remove("timestamp").unwrap();
        v
    };
    assert_eq!(read(&dir.path().join("a/manifest.json")), read(&dir.path().join("b/manifest.json")));

    // The CvResult written by the pipeline drives `simulate` the same way.
    let src: PredictionSource = jsonio::read_json(&dir.path().join("a/cv.json")).unwrap();
    assert_eq!(src.behaviors(Some(0)), a.behaviors);
    assert_eq!(src.config_fingerprint(), a.config_fingerprint);
}

#[test]
fn binary_exit_codes_and_messages() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let ok = bin()
        .args(["simulate", "--out"])
        .arg(d.join("sim"))
        .args(["--behaviors", "4,3,2,1"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(d.join("sim/metrics.json").exists());

    let bad_code = bin().args(["simulate", "--out"]).arg(d.join("x")).args(["--behaviors", "5"]).output().unwrap();
    assert!(!bad_code.status.success());

    std::fs::write(d.join("typo.json"), r#"{"k_fold": 3}"#).unwrap();
    std::fs::write(d.join("junk.nsr"), b"NSR1\n{not json\n").unwrap();
    let typo = bin()
        .args(["evaluate", "--out"])
        .arg(d.join("o.json"))
        .arg("--config")
        .arg(d.join("typo.json"))
        .arg(d.join("junk.nsr"))
        .output()
        .unwrap();
    assert!(!typo.status.success());
    assert!(String::from_utf8_lossy(&typo.stderr).contains("typo.json"));

    let corrupt = bin()
        .args(["pipeline", "--out"])
        .arg(d.join("p"))
        .arg(d.join("junk.nsr"))
        .output()
        .unwrap();
    assert!(!corrupt.status.success());
    assert!(String::from_utf8_lossy(&corrupt.stderr).contains("junk.nsr"));
    assert!(!d.join("p/manifest.json").exists());

    std::fs::write(d.join("s.json"), serde_json::to_string(&synth_cfg(0.5)).unwrap()).unwrap();
    let synth = bin()
        .args(["synth", "--subjects", "1", "--seed", "3", "--config"])
        .arg(d.join("s.json"))
        .arg("--out")
        .arg(d.join("data"))
        .output()
        .unwrap();
    assert!(synth.status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&synth.stdout).unwrap();
    assert_eq!(manifest["subjects"][0]["seed"], 3);

    let zero = bin().args(["synth", "--subjects", "0", "--out"]).arg(d.join("z")).output().unwrap();
    assert!(!zero.status.success());
}
