//! Stratified k-fold cross-validation and multi-subject aggregation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::decode::{self, DecoderConfig, PreparedTrials};
use crate::error::{Error, Result};
use crate::jsonio;
use crate::recording::TrialSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of_trial: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_trial.len())
            .filter(|&i| self.fold_of_trial[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_trial.len())
            .filter(|&i| self.fold_of_trial[i] != fold)
            .collect()
    }
}

/// Shuffles each class's trial indices with a seeded RNG, then deals them
/// round-robin into `k` folds. The dealing position carries over from one
/// class to the next so fold totals stay balanced too.
pub fn stratified_kfold(labels: &[Command], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig("k must be >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of_trial = vec![0; labels.len()];
    let mut next = 0usize;
    for c in Command::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < k {
            return Err(Error::InvalidConfig(format!(
                "class {c} has {} trials, fewer than k = {k}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of_trial[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment {
        fold_of_trial,
        k,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPrediction {
    pub trial: usize,
    pub fold: usize,
    pub label: Command,
    pub predicted: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub subject_id: String,
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation across folds.
    pub std_accuracy: f64,
    /// Rows are true commands, columns predicted, both in code order.
    pub confusion: [[usize; 4]; 4],
    pub seed: u64,
    pub config_fingerprint: String,
    /// Held-out prediction of every trial, in trial order.
    pub predictions: Vec<TrialPrediction>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn cross_validate(ts: &TrialSet, k: usize, seed: u64, cfg: &DecoderConfig) -> Result<CvResult> {
    let folds = stratified_kfold(&ts.labels(), k, seed)?;
    let prep = PreparedTrials::new(ts)?;
    cross_validate_prepared(&prep, &folds, cfg)
}

/// Runs every fold: fit on the trials outside the fold (CSP and LDA both),
/// predict the trials inside it.
pub fn cross_validate_prepared(
    prep: &PreparedTrials,
    folds: &FoldAssignment,
    cfg: &DecoderConfig,
) -> Result<CvResult> {
    if folds.fold_of_trial.len() != prep.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} fold assignments for {} trials",
            folds.fold_of_trial.len(),
            prep.len()
        )));
    }
    let mut predictions = Vec::with_capacity(prep.len());
    let mut per_fold_accuracy = Vec::with_capacity(folds.k);
    let mut confusion = [[0usize; 4]; 4];
    for fold in 0..folds.k {
        let train = folds.train_indices(fold);
        let test = folds.test_indices(fold);
        debug_assert!(test.iter().all(|i| !train.contains(i)));
        let model = decode::fit_prepared(prep, &train, cfg).map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;
        let mut correct = 0usize;
        for &i in &test {
            let predicted = decode::predict_stats(&model, &prep.stats[i]).label;
            let label = prep.labels[i];
            confusion[label.index()][predicted.index()] += 1;
            correct += usize::from(predicted == label);
            predictions.push(TrialPrediction {
                trial: i,
                fold,
                label,
                predicted,
            });
        }
        per_fold_accuracy.push(if test.is_empty() {
            0.0
        } else {
            correct as f64 / test.len() as f64
        });
    }
    predictions.sort_by_key(|p| p.trial);
    let (mean_accuracy, std_accuracy) = mean_std(&per_fold_accuracy);
    Ok(CvResult {
        subject_id: String::new(),
        per_fold_accuracy,
        mean_accuracy,
        std_accuracy,
        confusion,
        seed: folds.seed,
        config_fingerprint: jsonio::fingerprint(cfg)?,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub per_subject: BTreeMap<String, CvResult>,
    /// Mean of the subjects' mean accuracies.
    pub grand_mean: f64,
    /// Population standard deviation of the subjects' mean accuracies.
    pub grand_std: f64,
    /// Average over subjects of the across-fold standard deviation.
    pub mean_fold_std: f64,
    pub config_fingerprint: String,
}

/// Refuses to merge results produced under different configurations.
pub fn summarize_group(results: BTreeMap<String, CvResult>) -> Result<GroupSummary> {
    let first = results
        .values()
        .next()
        .ok_or(Error::Empty("no subject results to summarize"))?;
    let fingerprint = first.config_fingerprint.clone();
    for (subject, r) in &results {
        if r.config_fingerprint != fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: fingerprint,
                found: r.config_fingerprint.clone(),
                subject: subject.clone(),
            });
        }
    }
    let means: Vec<f64> = results.values().map(|r| r.mean_accuracy).collect();
    let (grand_mean, grand_std) = mean_std(&means);
    let fold_stds: Vec<f64> = results.values().map(|r| r.std_accuracy).collect();
    let (mean_fold_std, _) = mean_std(&fold_stds);
    Ok(GroupSummary {
        per_subject: results,
        grand_mean,
        grand_std,
        mean_fold_std,
        config_fingerprint: fingerprint,
    })
}
