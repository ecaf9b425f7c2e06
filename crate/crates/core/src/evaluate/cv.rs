use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auc_pr, auc_roc, threshold_confusion, Confusion, Cut, MeanSd};
use crate::error::{Error, Result};
use crate::featurize::FeatureMatrix;
use crate::scoring::score_values;
use crate::solver::{fit, ConstraintSet, FitConfig, FitMetadata, ScoreModel};

/// Fold index for every row. Each class is shuffled and dealt round-robin,
/// the dealing position carrying over from positives to negatives, so fold
/// sizes differ by at most one and class counts per fold by at most one.
pub fn stratified_kfold(y: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid("at least two folds are required"));
    }
    if y.len() < k {
        return Err(Error::invalid(format!("{} rows cannot fill {k} folds", y.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; y.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        rows.shuffle(&mut rng);
        for i in rows {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

/// Discrimination and band confusion of one score vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub auc_roc: f64,
    pub auc_pr: f64,
    /// Non-low band, `score >= low`.
    pub confusion_low: Confusion,
    /// High band, `score > high`.
    pub confusion_high: Confusion,
}

impl ModelMetrics {
    pub fn compute(scores: &[f64], y: &[bool], model: &ScoreModel) -> Result<Self> {
        Ok(Self {
            auc_roc: auc_roc(scores, y)?,
            auc_pr: auc_pr(scores, y)?,
            confusion_low: threshold_confusion(scores, y, Cut::AtLeast(model.thresholds.low))?,
            confusion_high: threshold_confusion(scores, y, Cut::Above(model.thresholds.high))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub fitted: ModelMetrics,
    pub baseline: ModelMetrics,
    pub fit: FitMetadata,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub auc_roc: MeanSd,
    pub auc_pr: MeanSd,
    /// Computed once over the concatenated out-of-fold scores.
    pub pooled_auc_roc: f64,
    pub pooled_auc_pr: f64,
    pub tpr_low: MeanSd,
    pub fpr_low: MeanSd,
    pub tpr_high: MeanSd,
    pub fpr_high: MeanSd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    pub fitted: MetricSummary,
    pub baseline: MetricSummary,
    /// Out-of-fold scores in matrix row order.
    pub oof_fitted: Vec<f64>,
    pub oof_baseline: Vec<f64>,
}

fn summarize(folds: &[&ModelMetrics], oof: &[f64], y: &[bool]) -> Result<MetricSummary> {
    let col = |f: fn(&ModelMetrics) -> f64| MeanSd::of(&folds.iter().map(|m| f(m)).collect::<Vec<_>>());
    Ok(MetricSummary {
        auc_roc: col(|m| m.auc_roc),
        auc_pr: col(|m| m.auc_pr),
        pooled_auc_roc: auc_roc(oof, y)?,
        pooled_auc_pr: auc_pr(oof, y)?,
        tpr_low: col(|m| m.confusion_low.tpr),
        fpr_low: col(|m| m.confusion_low.fpr),
        tpr_high: col(|m| m.confusion_high.tpr),
        fpr_high: col(|m| m.confusion_high.fpr),
    })
}

/// Fits on each training split (folds in parallel) and scores the held-out rows
/// with both the fitted and the baseline model.
pub fn cross_validate(
    matrix: &FeatureMatrix,
    constraints: &ConstraintSet,
    config: &FitConfig,
    baseline: &ScoreModel,
    k: usize,
    seed: u64,
) -> Result<CrossValidation> {
    baseline.check_dictionary(&matrix.dictionary)?;
    let assignment = stratified_kfold(&matrix.y, k, seed)?;
    let folds: Vec<(FoldResult, Vec<usize>, Vec<f64>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..matrix.n_rows()).partition(|&i| assignment[i] == fold);
            let train_m = matrix.select(&train);
            let test_m = matrix.select(&test);
            let f = fit(train_m.x.view(), &train_m.y, constraints, config)?;
            let model = ScoreModel::from_fit(&matrix.dictionary, constraints, f)?;
            let fitted_scores = score_values(&model, test_m.x.view())?;
            let base_scores = score_values(baseline, test_m.x.view())?;
            let result = FoldResult {
                fold,
                n_train: train.len(),
                n_test: test.len(),
                fitted: ModelMetrics::compute(&fitted_scores, &test_m.y, &model)?,
                baseline: ModelMetrics::compute(&base_scores, &test_m.y, baseline)?,
                fit: model.fit.clone().expect("fitted model carries metadata"),
                beta: model.beta().to_vec(),
            };
            Ok((result, test, fitted_scores, base_scores))
        })
        .collect::<Result<_>>()?;

    let n = matrix.n_rows();
    let mut oof_fitted = vec![0.0; n];
    let mut oof_baseline = vec![0.0; n];
    for (_, rows, fs, bs) in &folds {
        for (j, &i) in rows.iter().enumerate() {
            oof_fitted[i] = fs[j];
            oof_baseline[i] = bs[j];
        }
    }
    let results: Vec<FoldResult> = folds.into_iter().map(|(r, ..)| r).collect();
    let fitted = summarize(&results.iter().map(|r| &r.fitted).collect::<Vec<_>>(), &oof_fitted, &matrix.y)?;
    let base = summarize(&results.iter().map(|r| &r.baseline).collect::<Vec<_>>(), &oof_baseline, &matrix.y)?;
    Ok(CrossValidation {
        folds: results,
        fitted,
        baseline: base,
        oof_fitted,
        oof_baseline,
    })
}
