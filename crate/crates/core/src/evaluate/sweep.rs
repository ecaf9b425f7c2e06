use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::cross_validate;
use crate::cohort::{build_cohort, CohortCounts, LabelingPolicy};
use crate::encounter::Encounter;
use crate::error::{Error, Result};
use crate::featurize::build_matrix;
use crate::solver::{fit, Coefficient, ConstraintSet, FitConfig, FitMetadata, ScoreModel};

/// Spread of one feature's share of the coefficient sum across several fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStability {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

impl FeatureStability {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

fn shares(beta: &[f64]) -> Vec<f64> {
    let total: f64 = beta.iter().sum();
    beta.iter()
        .map(|b| if total > 0.0 { b / total } else { 0.0 })
        .collect()
}

/// Per-feature share statistics over coefficient vectors that share a dictionary.
pub fn stability_stats(names: &[String], tables: &[Vec<f64>]) -> Result<Vec<FeatureStability>> {
    if tables.is_empty() {
        return Err(Error::invalid("no coefficient vectors"));
    }
    if let Some(t) = tables.iter().find(|t| t.len() != names.len()) {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficients for {} names",
            t.len(),
            names.len()
        )));
    }
    let share_rows: Vec<Vec<f64>> = tables.iter().map(|t| shares(t)).collect();
    Ok(names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = share_rows.iter().map(|r| r[j]).collect();
            let spread = super::metrics::MeanSd::of(&col);
            FeatureStability {
                name: name.clone(),
                min: col.iter().copied().fold(f64::INFINITY, f64::min),
                max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean: spread.mean,
                sd: spread.sd,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub high_thresholds: Vec<u32>,
    pub policy: LabelingPolicy,
    pub augmented: bool,
    pub folds: usize,
    pub seed: u64,
    pub fit: FitConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            high_thresholds: (4..=8).collect(),
            policy: LabelingPolicy::default(),
            augmented: true,
            folds: 5,
            seed: 1,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub high_threshold: u32,
    pub counts: CohortCounts,
    pub coefficients: Vec<Coefficient>,
    pub fit: FitMetadata,
    /// Share statistics across the cross-validation folds of this cohort.
    pub fold_stability: Vec<FeatureStability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Share statistics across the full-cohort fits of all thresholds.
    pub across_cohorts: Vec<FeatureStability>,
}

impl SweepResult {
    pub fn high_counts(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.counts.high).collect()
    }
}

/// Relabels, refits and cross-validates once per high-intensity threshold.
pub fn sensitivity_sweep(encounters: &[Encounter], config: &SweepConfig) -> Result<SweepResult> {
    if config.high_thresholds.is_empty() {
        return Err(Error::invalid("no thresholds to sweep"));
    }
    let points: Vec<SweepPoint> = config
        .high_thresholds
        .par_iter()
        .map(|&t| {
            let policy = config.policy.with_high_threshold(t);
            let cohort = build_cohort(encounters, &policy)?;
            let matrix = build_matrix(&cohort, config.augmented)?;
            let dict = &matrix.dictionary;
            let constraints = ConstraintSet::default_chains(dict)?;
            let mut fit_config = config.fit.clone();
            if fit_config.init.is_none() {
                fit_config.init = Some(dict.baseline_coefficients().to_vec());
            }
            let baseline = ScoreModel::baseline(dict)?;
            let cv = cross_validate(&matrix, &constraints, &fit_config, &baseline, config.folds, config.seed)?;
            let full = fit(matrix.x.view(), &matrix.y, &constraints, &fit_config)?;
            let model = ScoreModel::from_fit(dict, &constraints, full)?;
            let names: Vec<String> = dict.names().map(str::to_string).collect();
            let tables: Vec<Vec<f64>> = cv.folds.iter().map(|f| f.beta.clone()).collect();
            Ok(SweepPoint {
                high_threshold: t,
                counts: cohort.counts,
                fit: model.fit.clone().expect("fitted model carries metadata"),
                coefficients: model.coefficients,
                fold_stability: stability_stats(&names, &tables)?,
            })
        })
        .collect::<Result<_>>()?;
    let names: Vec<String> = points[0].coefficients.iter().map(|c| c.name.clone()).collect();
    let tables: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.coefficients.iter().map(|c| c.beta).collect())
        .collect();
    Ok(SweepResult {
        across_cohorts: stability_stats(&names, &tables)?,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn identical_vectors_have_zero_spread() {
        let v = vec![1.0, 2.0, 3.0];
        let s = stability_stats(&names(3), &[v.clone(), v.clone(), v]).unwrap();
        assert!(s.iter().all(|f| f.sd == 0.0 && f.range() == 0.0));
    }

    #[test]
    fn range_in_share_terms() {
        // sums 4 and 5: shares of f0 are 0.25 and 0.4
        let s = stability_stats(&names(2), &[vec![1.0, 3.0], vec![2.0, 3.0]]).unwrap();
        assert_relative_eq!(s[0].range(), 0.15, epsilon = 1e-15);
        assert_relative_eq!(s[1].range(), 0.75 - 0.6, epsilon = 1e-15);
        assert!(stability_stats(&names(2), &[vec![1.0]]).is_err());
    }
}
