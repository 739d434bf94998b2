//! Command-line orchestration: synthesize recordings, cross-validate
//! subjects, and drive the swarm simulator from decoded labels.
//!
//! Every subcommand is also a plain function here so tests can call it
//! without spawning a process.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::command::Command;
use crate::csp::LogVarianceMode;
use crate::decode::{DecoderConfig, PreparedTrials};
use crate::dsp::{self, FilterSpec};
use crate::error::{Error, Result};
use crate::eval::{self, CvResult, GroupSummary, TrialPrediction};
use crate::jsonio;
use crate::recording::{self, ParadigmTiming, Recording};
use crate::swarm::{self, SwarmConfig, SwarmMetrics};
use crate::synth::{self, SynthConfig};

/// Quality factor of the optional line-noise notch.
pub const NOTCH_Q: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterStage {
    /// Filter the whole recording, then cut epochs.
    Continuous,
    /// Cut epochs, then filter each one.
    Epoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub band: [f64; 2],
    pub filter_order: usize,
    pub n_pairs: usize,
    pub shrinkage: f64,
    pub ridge: f64,
    pub k_folds: usize,
    pub seed: u64,
    pub filter_stage: FilterStage,
    pub log_variance_mode: LogVarianceMode,
    /// Notch frequency applied before the bandpass, unless the recording
    /// says it was already notched.
    pub notch_hz: Option<f64>,
    pub timing: ParadigmTiming,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DecoderConfig::default();
        Self {
            band: [8.0, 30.0],
            filter_order: 2,
            n_pairs: d.n_pairs,
            shrinkage: d.shrinkage,
            ridge: d.ridge,
            k_folds: 5,
            seed: 0,
            filter_stage: FilterStage::Continuous,
            log_variance_mode: d.log_variance_mode,
            notch_hz: None,
            timing: ParadigmTiming::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.band[0] > 0.0 && self.band[0] < self.band[1]) {
            return bad(format!("band {:?} must satisfy 0 < low < high", self.band));
        }
        if self.filter_order == 0 {
            return bad("filter_order must be >= 1".into());
        }
        if self.n_pairs == 0 {
            return bad("n_pairs must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.shrinkage) {
            return bad(format!("shrinkage {} outside [0, 1]", self.shrinkage));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return bad("ridge must be >= 0".into());
        }
        if self.k_folds < 2 {
            return bad("k_folds must be >= 2".into());
        }
        self.timing.validate()
    }

    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            n_pairs: self.n_pairs,
            shrinkage: self.shrinkage,
            ridge: self.ridge,
            log_variance_mode: self.log_variance_mode,
        }
    }

    pub fn bandpass(&self, fs: f64) -> Result<FilterSpec> {
        dsp::design_bandpass(self.band[0], self.band[1], self.filter_order, fs)
    }

    pub fn fingerprint(&self) -> Result<String> {
        jsonio::fingerprint(self)
    }
}

/// Reads a JSON config, or returns the defaults when no path is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => jsonio::read_json(p).map_err(|e| e.context(format!("config {}", p.display()))),
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Applies `f` to every item on up to `jobs` threads; results keep input
/// order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

// ── synth ───────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSubject {
    pub subject_id: String,
    pub seed: u64,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub config_fingerprint: String,
    pub subjects: Vec<SynthSubject>,
}

/// Writes one recording per subject, seeded `cfg.seed + i`, plus
/// `manifest.json` listing them.
pub fn cmd_synth(cfg: &SynthConfig, out: &Path, n_subjects: usize, jobs: usize) -> Result<SynthManifest> {
    if n_subjects == 0 {
        return Err(Error::InvalidConfig("n_subjects must be >= 1".into()));
    }
    cfg.validate()?;
    create_dir(out)?;
    let seeds: Vec<u64> = (0..n_subjects as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let results = parallel_map(&seeds, jobs, |&seed| -> Result<SynthSubject> {
        let sub = SynthConfig { seed, ..cfg.clone() };
        let rec = synth::generate_subject(&sub)?;
        let path = out.join(format!("{}.nsr", sub.subject_id()));
        recording::save_recording(&rec, &path)?;
        drop(rec);
        Ok(SynthSubject {
            subject_id: sub.subject_id(),
            seed,
            file: relative(&path, out),
            sha256: sha256_file(&path)?,
        })
    });
    let manifest = SynthManifest {
        config: cfg.clone(),
        config_fingerprint: jsonio::fingerprint(cfg)?,
        subjects: results.into_iter().collect::<Result<_>>()?,
    };
    jsonio::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

// ── evaluate ────────────────────────────────────────────

/// Notch (if configured), bandpass and epoching in the configured order.
pub fn preprocess(mut rec: Recording, cfg: &RunConfig) -> Result<recording::TrialSet> {
    let fs = rec.sampling_rate_hz;
    if let (Some(f), None) = (cfg.notch_hz, rec.notch_applied_hz) {
        let notch = dsp::design_notch(f, NOTCH_Q, fs)?;
        dsp::filter_recording_in_place(&notch, &mut rec)?;
        rec.notch_applied_hz = Some(f);
    }
    let band = cfg.bandpass(fs)?;
    match cfg.filter_stage {
        FilterStage::Continuous => {
            dsp::filter_recording_in_place(&band, &mut rec)?;
            recording::extract_trials(&rec, &cfg.timing)
        }
        FilterStage::Epoch => {
            let ts = recording::extract_trials(&rec, &cfg.timing)?;
            drop(rec);
            dsp::filter_trialset(&band, &ts)
        }
    }
}

/// Cross-validates one in-memory recording. The result carries the run
/// config's fingerprint.
pub fn evaluate_recording(rec: Recording, cfg: &RunConfig) -> Result<CvResult> {
    cfg.validate()?;
    let subject_id = rec.subject_id.clone();
    let ts = preprocess(rec, cfg)?;
    let folds = eval::stratified_kfold(&ts.labels(), cfg.k_folds, cfg.seed)?;
    let prep = PreparedTrials::new(&ts)?;
    drop(ts);
    let mut r = eval::cross_validate_prepared(&prep, &folds, &cfg.decoder_config())?;
    r.subject_id = subject_id;
    r.config_fingerprint = cfg.fingerprint()?;
    Ok(r)
}

pub fn evaluate_file(path: &Path, cfg: &RunConfig) -> Result<CvResult> {
    let run = || evaluate_recording(recording::load_recording(path)?, cfg);
    run().map_err(|e| e.context(format!("subject file {}", path.display())))
}

pub fn cmd_evaluate(paths: &[PathBuf], cfg: &RunConfig, out: &Path, jobs: usize) -> Result<GroupSummary> {
    if paths.is_empty() {
        return Err(Error::Empty("no recordings given"));
    }
    cfg.validate()?;
    let results = parallel_map(paths, jobs, |p| evaluate_file(p, cfg));
    let mut per_subject = BTreeMap::new();
    for (path, r) in paths.iter().zip(results) {
        let r = r?;
        if per_subject.contains_key(&r.subject_id) {
            return Err(Error::InvalidRecording(format!(
                "duplicate subject id {:?} in {}",
                r.subject_id,
                path.display()
            )));
        }
        per_subject.insert(r.subject_id.clone(), r);
    }
    let summary = eval::summarize_group(per_subject)?;
    jsonio::write_json(out, &summary)?;
    Ok(summary)
}

// ── simulate ────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub index: usize,
    pub behavior: Command,
    pub behavior_name: String,
    /// Seed handed to `set_behavior` (only Dispersing consumes it).
    pub seed: u64,
    pub steps: usize,
    pub converged: bool,
    pub trajectory_file: String,
    /// Metrics of every trajectory snapshot.
    pub timeline: Vec<SwarmMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationLog {
    pub swarm_config: SwarmConfig,
    pub swarm_config_fingerprint: String,
    /// Fingerprint of the run config whose predictions drove the swarm.
    pub config_fingerprint: Option<String>,
    pub segments: Vec<Segment>,
}

impl SimulationLog {
    pub fn final_metrics(&self) -> Option<&SwarmMetrics> {
        self.segments.last().and_then(|s| s.timeline.last())
    }
}

pub fn parse_behaviors(text: &str) -> Result<Vec<Command>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let code: i64 = t
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("behavior code {t:?} is not an integer")))?;
            Command::from_code(code)
        })
        .collect()
}

/// Held-out predictions from a `GroupSummary` or a single `CvResult`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PredictionSource {
    Group(GroupSummary),
    Single(CvResult),
}

impl PredictionSource {
    /// Predicted labels in trial order (subjects in id order), optionally
    /// restricted to one fold.
    pub fn behaviors(&self, fold: Option<usize>) -> Vec<Command> {
        let results: Vec<&CvResult> = match self {
            PredictionSource::Group(g) => g.per_subject.values().collect(),
            PredictionSource::Single(r) => vec![r],
        };
        results
            .iter()
            .flat_map(|r| r.predictions.iter())
            .filter(|p| fold.is_none_or(|f| p.fold == f))
            .map(|p| p.predicted)
            .collect()
    }

    pub fn config_fingerprint(&self) -> &str {
        match self {
            PredictionSource::Group(g) => &g.config_fingerprint,
            PredictionSource::Single(r) => &r.config_fingerprint,
        }
    }
}

/// Runs `behaviors` in order from the initial formation, each to
/// convergence from the previous final state. Writes
/// `trajectories/NNN_<behavior>.csv` and `metrics.json` under `out`.
pub fn cmd_simulate(
    behaviors: &[Command],
    cfg: &SwarmConfig,
    out: &Path,
    config_fingerprint: Option<String>,
) -> Result<SimulationLog> {
    if behaviors.is_empty() {
        return Err(Error::Empty("behavior sequence"));
    }
    let traj_dir = out.join("trajectories");
    create_dir(&traj_dir)?;
    let mut state = swarm::init_swarm(cfg)?;
    let mut segments = Vec::with_capacity(behaviors.len());
    for (index, &b) in behaviors.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(index as u64);
        let s = swarm::set_behavior(&state, b, cfg, seed)?;
        let run = swarm::run_until_converged(&s, cfg);
        let path = traj_dir.join(format!("{index:03}_{}.csv", b.name().to_lowercase()));
        swarm::write_trajectory_csv(&path, &run.trajectory)?;
        segments.push(Segment {
            index,
            behavior: b,
            behavior_name: b.name().to_string(),
            seed,
            steps: run.steps,
            converged: run.converged,
            trajectory_file: relative(&path, out),
            timeline: run.trajectory.iter().map(|p| swarm::metrics(p, cfg)).collect(),
        });
        state = run.state;
    }
    let log = SimulationLog {
        swarm_config: cfg.clone(),
        swarm_config_fingerprint: jsonio::fingerprint(cfg)?,
        config_fingerprint,
        segments,
    };
    jsonio::write_json(&out.join("metrics.json"), &log)?;
    Ok(log)
}

// ── pipeline ────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub config_fingerprint: String,
    pub swarm_config_fingerprint: String,
    pub run_config: RunConfig,
    pub swarm_config: SwarmConfig,
    pub subject_id: String,
    pub input_file: String,
    pub input_sha256: String,
    pub cv_seed: u64,
    pub swarm_seed: u64,
    pub fold: usize,
    pub behaviors: Vec<Command>,
    pub version: String,
    /// Output files relative to the output directory.
    pub files: Vec<String>,
    /// Seconds since the Unix epoch; the only field that differs between
    /// identical runs.
    pub timestamp: u64,
}

/// Evaluates one subject, feeds the fold-0 held-out predictions to the
/// simulator, and writes `cv.json`, the simulation outputs and
/// `manifest.json`.
pub fn cmd_pipeline(nsr: &Path, run_cfg: &RunConfig, swarm_cfg: &SwarmConfig, out: &Path) -> Result<PipelineManifest> {
    swarm_cfg.validate()?;
    let cv = evaluate_file(nsr, run_cfg)?;
    create_dir(out)?;
    let cv_path = out.join("cv.json");
    jsonio::write_json(&cv_path, &cv)?;

    const FOLD: usize = 0;
    let behaviors: Vec<Command> = cv
        .predictions
        .iter()
        .filter(|p: &&TrialPrediction| p.fold == FOLD)
        .map(|p| p.predicted)
        .collect();
    let log = cmd_simulate(&behaviors, swarm_cfg, out, Some(cv.config_fingerprint.clone()))?;

    let mut files = vec![relative(&cv_path, out), "metrics.json".to_string()];
    files.extend(log.segments.iter().map(|s| s.trajectory_file.clone()));
    files.sort();
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = PipelineManifest {
        config_fingerprint: cv.config_fingerprint.clone(),
        swarm_config_fingerprint: log.swarm_config_fingerprint.clone(),
        run_config: run_cfg.clone(),
        swarm_config: swarm_cfg.clone(),
        subject_id: cv.subject_id.clone(),
        input_file: nsr
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        input_sha256: sha256_file(nsr)?,
        cv_seed: run_cfg.seed,
        swarm_seed: swarm_cfg.seed,
        fold: FOLD,
        behaviors,
        version: env!("CARGO_PKG_VERSION").to_string(),
        files,
        timestamp,
    };
    jsonio::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

// ── argument parsing ────────────────────────────────────

#[derive(Debug, Parser)]
#[command(name = "brainswarm", version, about = "EEG imagery decoding driving a drone swarm simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file; omitted fields take their defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate synthetic subject recordings
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        subjects: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Cross-validate recordings and write a group summary
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Output JSON file
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(required = true)]
        recordings: Vec<PathBuf>,
    },
    /// Run the swarm simulator on a behavior sequence or decoded predictions
    Simulate {
        /// Swarm config JSON
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated event codes, e.g. 4,3,2,1
        #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
        behaviors: Option<String>,
        /// GroupSummary or CvResult JSON from `evaluate` / `pipeline`
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Only use predictions from this fold
        #[arg(long, requires = "predictions")]
        fold: Option<usize>,
    },
    /// Evaluate one recording and fly its fold-0 predictions
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        swarm_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        recording: PathBuf,
    },
}

fn with_seed<T>(mut cfg: T, seed: Option<u64>, set: impl FnOnce(&mut T, u64)) -> T {
    if let Some(s) = seed {
        set(&mut cfg, s);
    }
    cfg
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Synth {
            common,
            out,
            subjects,
            jobs,
        } => {
            let cfg: SynthConfig = load_config(common.config.as_deref())?;
            let cfg = with_seed(cfg, common.seed, |c, s| c.seed = s);
            let manifest = cmd_synth(&cfg, &out, subjects, jobs)?;
            print!("{}", jsonio::to_canonical_json(&manifest)?);
        }
        Cmd::Evaluate {
            common,
            out,
            jobs,
            recordings,
        } => {
            let cfg: RunConfig = load_config(common.config.as_deref())?;
            let cfg = with_seed(cfg, common.seed, |c, s| c.seed = s);
            let summary = cmd_evaluate(&recordings, &cfg, &out, jobs)?;
            for (id, r) in &summary.per_subject {
                println!("{id}\t{:.4} ± {:.4}", r.mean_accuracy, r.std_accuracy);
            }
            println!("grand mean\t{:.4} ± {:.4}", summary.grand_mean, summary.grand_std);
        }
        Cmd::Simulate {
            common,
            out,
            behaviors,
            predictions,
            fold,
        } => {
            let cfg: SwarmConfig = load_config(common.config.as_deref())?;
            let cfg = with_seed(cfg, common.seed, |c, s| c.seed = s);
            let (seq, fp) = match (behaviors, predictions) {
                (Some(text), _) => (parse_behaviors(&text)?, None),
                (None, Some(p)) => {
                    let src: PredictionSource = jsonio::read_json(&p)
                        .map_err(|e| e.context(format!("predictions {}", p.display())))?;
                    (src.behaviors(fold), Some(src.config_fingerprint().to_string()))
                }
                (None, None) => unreachable!("clap requires one of --behaviors / --predictions"),
            };
            create_dir(&out)?;
            let log = cmd_simulate(&seq, &cfg, &out, fp)?;
            for s in &log.segments {
                let m = s.timeline.last().expect("trajectory has the initial snapshot");
                println!(
                    "{:03} {:<11} steps {:>3} converged {} centroid {:.3} nn {:.3} clusters {}",
                    s.index, s.behavior_name, s.steps, s.converged, m.mean_centroid_dist, m.mean_nn_dist, m.cluster_count
                );
            }
        }
        Cmd::Pipeline {
            common,
            swarm_config,
            out,
            recording,
        } => {
            let run_cfg: RunConfig = load_config(common.config.as_deref())?;
            let run_cfg = with_seed(run_cfg, common.seed, |c, s| c.seed = s);
            let swarm_cfg: SwarmConfig = load_config(swarm_config.as_deref())?;
            let m = cmd_pipeline(&recording, &run_cfg, &swarm_cfg, &out)?;
            print!("{}", jsonio::to_canonical_json(&m)?);
        }
    }
    Ok(())
}

/// Every wrapping variant prints its source inline, so one line carries
/// the whole chain.
pub fn report(e: &Error) -> String {
    format!("error: {e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_defaults_and_strictness() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.band, [8.0, 30.0]);
        assert_eq!(c.filter_stage, FilterStage::Continuous);
        let e: RunConfig = serde_json::from_str(r#"{"filter_stage": "epoch", "k_folds": 4}"#).unwrap();
        assert_eq!(e.filter_stage, FilterStage::Epoch);
        assert!(serde_json::from_str::<RunConfig>(r#"{"k_fold": 4}"#).is_err());
        assert!(RunConfig { k_folds: 1, ..c.clone() }.validate().is_err());
        assert!(RunConfig { band: [30.0, 8.0], ..c.clone() }.validate().is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig { seed: 1, ..a.clone() };
        assert_eq!(a.fingerprint().unwrap(), RunConfig::default().fingerprint().unwrap());
        assert_ne!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
    }

    #[test]
    fn behavior_parsing() {
        assert_eq!(
            parse_behaviors("4, 3,2,1").unwrap(),
            vec![Command::Aggregating, Command::Dispersing, Command::Splitting, Command::Hovering]
        );
        assert!(parse_behaviors("1,5").is_err());
        assert!(parse_behaviors("x").is_err());
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v: Vec<u64> = (0..20).collect();
        assert_eq!(parallel_map(&v, 3, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert_eq!(parallel_map(&v, 1, |x| x + 1)[19], 20);
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from(["brainswarm", "simulate", "--out", "o", "--behaviors", "1,2"]).unwrap();
        assert!(matches!(cli.command, Cmd::Simulate { .. }));
        assert!(Cli::try_parse_from(["brainswarm", "simulate", "--out", "o"]).is_err());
        assert!(Cli::try_parse_from(["brainswarm", "evaluate", "--out", "o"]).is_err());
    }
}
