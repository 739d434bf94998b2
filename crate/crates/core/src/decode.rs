//! Shrinkage LDA and the one-vs-rest four-command decoder.
//!
//! For each command `c` the decoder fits a CSP model on the class-`c`
//! trials against all other trials, extracts log-variance features for
//! every training trial with it, and fits a binary LDA with class `c` as
//! the positive class. Prediction takes the argmax of the four raw LDA
//! scores, ties going to the smallest event code.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::csp::{self, CspModel, LogVarianceMode, TrialStats};
use crate::dsp::FilterSpec;
use crate::error::{Error, Result};
use crate::recording::{Trial, TrialSet};

/// Minimum trials per class on each side of a binary fit.
pub const MIN_TRIALS_PER_CLASS: usize = 2;

// ── LDA ─────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub shrinkage: f64,
}

impl LdaModel {
    /// `weightsᵀx + bias`; positive means the positive class.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

fn mean_vector(rows: &[Vec<f64>], d: usize) -> DVector<f64> {
    let mut m = DVector::zeros(d);
    for r in rows {
        m += DVector::from_column_slice(r);
    }
    m / rows.len() as f64
}

/// Binary LDA with a shrunk pooled covariance
/// `(1 − s)·Σ + s·(trace(Σ)/d)·I`, where `Σ` is the maximum-likelihood
/// pooled within-class covariance (scatter divided by `n₊ + n₋`).
pub fn fit_lda(pos: &[Vec<f64>], neg: &[Vec<f64>], shrinkage: f64) -> Result<LdaModel> {
    if pos.len() < MIN_TRIALS_PER_CLASS || neg.len() < MIN_TRIALS_PER_CLASS {
        return Err(Error::InvalidConfig(format!(
            "LDA needs at least {MIN_TRIALS_PER_CLASS} samples per class, got {} and {}",
            pos.len(),
            neg.len()
        )));
    }
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::InvalidConfig(format!("shrinkage {shrinkage} outside [0, 1]")));
    }
    let d = pos[0].len();
    if d == 0 || pos.iter().chain(neg).any(|r| r.len() != d) {
        return Err(Error::ShapeMismatch("inconsistent feature dimensions".into()));
    }

    let mu_pos = mean_vector(pos, d);
    let mu_neg = mean_vector(neg, d);
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for (rows, mu) in [(pos, &mu_pos), (neg, &mu_neg)] {
        for r in rows {
            let dev = DVector::from_column_slice(r) - mu;
            scatter += &dev * dev.transpose();
        }
    }
    let n = (pos.len() + neg.len()) as f64;
    let sigma = scatter / n;
    let target = sigma.trace() / d as f64;
    let shrunk = &sigma * (1.0 - shrinkage) + DMatrix::identity(d, d) * (shrinkage * target);

    let eig = SymmetricEigen::new((&shrunk + shrunk.transpose()) * 0.5);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0 && min > max * d as f64 * f64::EPSILON * 16.0) {
        return Err(Error::SingularCovariance { shrinkage });
    }
    let diff = &mu_pos - &mu_neg;
    let rotated = eig.eigenvectors.transpose() * &diff;
    let scaled = DVector::from_iterator(d, rotated.iter().zip(eig.eigenvalues.iter()).map(|(v, l)| v / l));
    let w = &eig.eigenvectors * scaled;

    let bias = -w.dot(&(&mu_pos + &mu_neg)) / 2.0 + (pos.len() as f64 / neg.len() as f64).ln();
    Ok(LdaModel {
        weights: w.iter().copied().collect(),
        bias,
        shrinkage,
    })
}

// ── Decoder ─────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub n_pairs: usize,
    pub shrinkage: f64,
    pub ridge: f64,
    pub log_variance_mode: LogVarianceMode,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            n_pairs: 3,
            shrinkage: 0.05,
            ridge: 1e-9,
            log_variance_mode: LogVarianceMode::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub csp: CspModel,
    pub lda: LdaModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderModel {
    pub per_class: BTreeMap<Command, ClassModel>,
    pub n_pairs: usize,
    pub filter_spec: Option<FilterSpec>,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Command,
    pub scores: BTreeMap<Command, f64>,
}

/// Per-trial scatter and normalized covariance, computed once so
/// cross-validation can refit on index subsets without touching samples.
#[derive(Debug, Clone)]
pub struct PreparedTrials {
    pub labels: Vec<Command>,
    pub stats: Vec<TrialStats>,
    pub covariances: Vec<DMatrix<f64>>,
    pub n_channels: usize,
}

impl PreparedTrials {
    pub fn new(ts: &TrialSet) -> Result<Self> {
        let mut stats = Vec::with_capacity(ts.len());
        let mut covariances = Vec::with_capacity(ts.len());
        for (k, t) in ts.trials.iter().enumerate() {
            let s = TrialStats::from_trial(t).map_err(|e| e.context(format!("trial {k}")))?;
            covariances.push(s.covariance().map_err(|e| e.context(format!("trial {k}")))?);
            stats.push(s);
        }
        Ok(Self {
            labels: ts.labels(),
            stats,
            covariances,
            n_channels: ts.layout.count(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn fit_decoder(train: &TrialSet, cfg: &DecoderConfig) -> Result<DecoderModel> {
    let prep = PreparedTrials::new(train)?;
    let all: Vec<usize> = (0..prep.len()).collect();
    fit_prepared(&prep, &all, cfg)
}

/// Fits on the trials at `train_idx` only; nothing else in `prep` is read.
pub fn fit_prepared(prep: &PreparedTrials, train_idx: &[usize], cfg: &DecoderConfig) -> Result<DecoderModel> {
    for c in Command::ALL {
        let count = train_idx.iter().filter(|&&i| prep.labels[i] == c).count();
        if count < MIN_TRIALS_PER_CLASS {
            return Err(Error::MissingClass {
                class: c,
                count,
                needed: MIN_TRIALS_PER_CLASS,
            });
        }
    }

    let mut per_class = BTreeMap::new();
    for c in Command::ALL {
        let (pos, neg): (Vec<usize>, Vec<usize>) = train_idx.iter().partition(|&&i| prep.labels[i] == c);
        let c_pos = csp::mean_covariance(pos.iter().map(|&i| &prep.covariances[i]))?;
        let c_neg = csp::mean_covariance(neg.iter().map(|&i| &prep.covariances[i]))?;
        let mut model = csp::fit_csp(&c_pos, &c_neg, cfg.n_pairs, cfg.ridge)
            .map_err(|e| e.context(format!("CSP for {c}")))?;
        model.mode = cfg.log_variance_mode;

        let feats = |idx: &[usize]| -> Vec<Vec<f64>> {
            idx.iter().map(|&i| csp::features_from_stats(&model, &prep.stats[i])).collect()
        };
        let lda = fit_lda(&feats(&pos), &feats(&neg), cfg.shrinkage)
            .map_err(|e| e.context(format!("LDA for {c}")))?;
        per_class.insert(c, ClassModel { csp: model, lda });
    }

    Ok(DecoderModel {
        per_class,
        n_pairs: cfg.n_pairs,
        filter_spec: None,
        config_fingerprint: String::new(),
    })
}

fn argmax(scores: BTreeMap<Command, f64>) -> Prediction {
    let mut best: Option<(Command, f64)> = None;
    // Ascending code order, so strict `>` keeps the smallest code on ties.
    for (&c, &s) in &scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    let best = best.map_or(Command::Hovering, |(c, _)| c);
    Prediction { label: best, scores }
}

pub fn predict_stats(model: &DecoderModel, stats: &TrialStats) -> Prediction {
    let scores = model
        .per_class
        .iter()
        .map(|(&c, m)| (c, m.lda.score(&csp::features_from_stats(&m.csp, stats))))
        .collect();
    argmax(scores)
}

pub fn predict(model: &DecoderModel, trial: &Trial) -> Result<Prediction> {
    let scores = model
        .per_class
        .iter()
        .map(|(&c, m)| Ok((c, m.lda.score(&csp::csp_features(&m.csp, trial)?))))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(argmax(scores))
}
