//! Common spatial patterns for a binary (class vs rest) problem.
//!
//! Spatial filters solve `C₊ w = λ (C₊ + C₋ + ridge·I) w`. The solution
//! goes through whitening: eigendecompose the composite, whiten, then
//! eigendecompose the whitened positive-class covariance. Filters are the
//! columns of `W`, sorted by descending `λ`, scaled so that
//! `Wᵀ(C₊ + C₋ + ridge·I)W = I`.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonio::row_major;
use crate::recording::Trial;

/// Variances below this are clamped before taking the log.
pub const MIN_VARIANCE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogVarianceMode {
    /// `ln(var_i)`
    #[default]
    Plain,
    /// `ln(var_i / Σ var_selected)`
    Normalized,
}

/// Trace-normalized covariance averaged over the trials of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCovariance {
    pub matrix: DMatrix<f64>,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspModel {
    /// channels × channels, one spatial filter per column.
    #[serde(with = "row_major")]
    pub filters: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// First and last `n_pairs` column indices.
    pub selected: Vec<usize>,
    #[serde(default)]
    pub mode: LogVarianceMode,
}

impl CspModel {
    pub fn n_channels(&self) -> usize {
        self.filters.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.selected.len()
    }
}

// ── Per-trial statistics ────────────────────────────────

/// Mean-centered scatter `X Xᵀ` of one trial. Both the CSP covariance and
/// the projected variances used as features derive from it, so it is
/// computed once per trial and reused across folds and subproblems.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub scatter: DMatrix<f64>,
    pub n_samples: usize,
}

impl TrialStats {
    pub fn from_trial(trial: &Trial) -> Result<Self> {
        let t = trial.n_samples();
        if t < 2 {
            return Err(Error::ShapeMismatch(format!("trial has {t} samples, need at least 2")));
        }
        let mut x = trial.samples.clone();
        for mut row in x.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        let scatter = &x * x.transpose();
        Ok(Self {
            scatter: symmetrize(scatter),
            n_samples: t,
        })
    }

    /// `XXᵀ / trace(XXᵀ)`.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let tr = self.scatter.trace();
        if !(tr > 0.0) {
            return Err(Error::DegenerateTrial);
        }
        Ok(&self.scatter / tr)
    }

    /// Variance of the projection `wᵀX` (divide by `T`).
    pub fn projected_variance(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.scatter * w)) / self.n_samples as f64
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn trial_covariance(trial: &Trial) -> Result<DMatrix<f64>> {
    TrialStats::from_trial(trial)?.covariance()
}

/// Mean of already trace-normalized covariances.
pub fn mean_covariance<'a>(covs: impl IntoIterator<Item = &'a DMatrix<f64>>) -> Result<ClassCovariance> {
    let mut it = covs.into_iter();
    let first = it.next().ok_or(Error::Empty("class covariance needs at least one trial"))?;
    let mut acc = first.clone();
    let mut n = 1usize;
    for c in it {
        if c.shape() != acc.shape() {
            return Err(Error::ShapeMismatch(format!(
                "covariance {:?} vs {:?}",
                c.shape(),
                acc.shape()
            )));
        }
        acc += c;
        n += 1;
    }
    Ok(ClassCovariance {
        matrix: symmetrize(acc / n as f64),
        n_trials: n,
    })
}

pub fn class_mean_covariance(trials: &[&Trial]) -> Result<ClassCovariance> {
    let covs = trials
        .iter()
        .map(|t| trial_covariance(t))
        .collect::<Result<Vec<_>>>()?;
    mean_covariance(&covs)
}

// ── Fitting ─────────────────────────────────────────────

/// Flips each column so its largest-magnitude entry is positive.
fn canonicalize_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let (mut best, mut best_abs) = (0.0, -1.0);
        for &v in col.iter() {
            if v.abs() > best_abs {
                best = v;
                best_abs = v.abs();
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

pub fn fit_csp(
    c_pos: &ClassCovariance,
    c_neg: &ClassCovariance,
    n_pairs: usize,
    ridge: f64,
) -> Result<CspModel> {
    let n = c_pos.matrix.nrows();
    if c_pos.matrix.shape() != (n, n) || c_neg.matrix.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "class covariances {:?} and {:?}",
            c_pos.matrix.shape(),
            c_neg.matrix.shape()
        )));
    }
    if n_pairs == 0 || 2 * n_pairs > n {
        return Err(Error::InvalidConfig(format!(
            "n_pairs = {n_pairs} must be in 1..={} for {n} channels",
            n / 2
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidConfig(format!("ridge must be >= 0, got {ridge}")));
    }

    let composite = symmetrize(&c_pos.matrix + &c_neg.matrix + DMatrix::identity(n, n) * ridge);
    let eig = SymmetricEigen::new(composite);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > max * n as f64 * f64::EPSILON) {
        return Err(Error::RankDeficient { min_eigenvalue: min });
    }
    let mut whitening = eig.eigenvectors;
    for (j, mut col) in whitening.column_iter_mut().enumerate() {
        col /= eig.eigenvalues[j].sqrt();
    }

    let s = symmetrize(whitening.transpose() * &c_pos.matrix * &whitening);
    let eig2 = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig2.eigenvalues[j].total_cmp(&eig2.eigenvalues[i]).then(i.cmp(&j)));

    let rotation = DMatrix::from_fn(n, n, |r, c| eig2.eigenvectors[(r, order[c])]);
    let mut filters = whitening * rotation;
    canonicalize_signs(&mut filters);
    let eigenvalues = order.iter().map(|&i| eig2.eigenvalues[i]).collect();
    let selected = (0..n_pairs).chain(n - n_pairs..n).collect();

    Ok(CspModel {
        filters,
        eigenvalues,
        selected,
        mode: LogVarianceMode::Plain,
    })
}

// ── Features ────────────────────────────────────────────

fn log_variances(model: &CspModel, variances: Vec<f64>) -> Vec<f64> {
    let clamped = variances.iter().filter(|&&v| !(v >= MIN_VARIANCE)).count();
    if clamped > 0 {
        warn!("{clamped} zero-variance CSP projection(s) clamped to {MIN_VARIANCE:e}");
    }
    let vars: Vec<f64> = variances.into_iter().map(|v| if v >= MIN_VARIANCE { v } else { MIN_VARIANCE }).collect();
    match model.mode {
        LogVarianceMode::Plain => vars.iter().map(|v| v.ln()).collect(),
        LogVarianceMode::Normalized => {
            let total: f64 = vars.iter().sum();
            vars.iter().map(|v| (v / total).ln()).collect()
        }
    }
}

/// Log-variance of each selected spatial filter output.
pub fn csp_features(model: &CspModel, trial: &Trial) -> Result<Vec<f64>> {
    if trial.n_channels() != model.n_channels() {
        return Err(Error::ShapeMismatch(format!(
            "trial has {} channels, model expects {}",
            trial.n_channels(),
            model.n_channels()
        )));
    }
    let t = trial.n_samples();
    let vars = model
        .selected
        .iter()
        .map(|&j| {
            let proj = model.filters.column(j).transpose() * &trial.samples;
            let mean = proj.mean();
            proj.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64
        })
        .collect();
    Ok(log_variances(model, vars))
}

/// Same as [`csp_features`] computed from cached trial statistics.
pub fn features_from_stats(model: &CspModel, stats: &TrialStats) -> Vec<f64> {
    let vars = model
        .selected
        .iter()
        .map(|&j| stats.projected_variance(&model.filters.column(j).into_owned()))
        .collect();
    log_variances(model, vars)
}
