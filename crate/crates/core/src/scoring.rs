//! Applying a score model to feature rows.

use std::cmp::Ordering;
use std::io::Write;

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::FeatureMatrix;
use crate::solver::{ScoreModel, Thresholds};

/// Contributions listed per row in the scored CSV.
pub const TOP_CONTRIBUTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Low,
    Moderate,
    High,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Low, Category::Moderate, Category::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Low => "low",
            Category::Moderate => "moderate",
            Category::High => "high",
        }
    }
}

/// `Low` below `low`, `High` above `high`, `Moderate` between, both bounds inclusive.
pub fn categorize(score: f64, thresholds: Thresholds) -> Category {
    if score < thresholds.low {
        Category::Low
    } else if score <= thresholds.high {
        Category::Moderate
    } else {
        Category::High
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEncounter {
    pub id: String,
    pub score: f64,
    pub category: Category,
    /// `(feature, beta_j * x_j)` in dictionary order.
    pub contributions: Vec<(String, f64)>,
}

impl ScoredEncounter {
    /// Non-zero contributions, largest first (ties by dictionary order).
    pub fn top_contributions(&self, k: usize) -> Vec<(&str, f64)> {
        let mut nonzero: Vec<(usize, &str, f64)> = self
            .contributions
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| *c != 0.0)
            .map(|(i, (n, c))| (i, n.as_str(), *c))
            .collect();
        nonzero.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        nonzero.into_iter().take(k).map(|(_, n, c)| (n, c)).collect()
    }
}

/// Plain dot product, summed in dictionary order.
pub fn raw_score(beta: ArrayView1<f64>, row: ArrayView1<f64>) -> f64 {
    beta.iter().zip(row).map(|(b, x)| b * x).sum()
}

pub fn score_row(model: &ScoreModel, id: &str, row: ArrayView1<f64>) -> Result<ScoredEncounter> {
    if row.len() != model.coefficients.len() {
        return Err(Error::DictionaryMismatch(format!(
            "row has {} values for {} coefficients",
            row.len(),
            model.coefficients.len()
        )));
    }
    let contributions: Vec<(String, f64)> = model
        .coefficients
        .iter()
        .zip(row)
        .map(|(c, &x)| (c.name.clone(), c.beta * x))
        .collect();
    let score = contributions.iter().map(|(_, c)| c).sum();
    Ok(ScoredEncounter {
        id: id.to_string(),
        score,
        category: categorize(score, model.thresholds),
        contributions,
    })
}

/// Scores every row of `matrix` after checking it was built with the model's dictionary.
pub fn score(model: &ScoreModel, matrix: &FeatureMatrix) -> Result<Vec<ScoredEncounter>> {
    model.check_dictionary(&matrix.dictionary)?;
    (0..matrix.n_rows())
        .into_par_iter()
        .map(|i| score_row(model, &matrix.ids[i], matrix.x.row(i)))
        .collect()
}

/// Scores only, without the per-feature breakdown.
pub fn score_values(model: &ScoreModel, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.coefficients.len() {
        return Err(Error::DictionaryMismatch(format!(
            "{} columns for {} coefficients",
            x.ncols(),
            model.coefficients.len()
        )));
    }
    let beta = model.beta();
    Ok(x.rows().into_iter().map(|r| raw_score(beta.view(), r)).collect())
}

pub fn write_scored_csv<W: Write>(scored: &[ScoredEncounter], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "score".to_string(), "category".to_string()];
    for k in 1..=TOP_CONTRIBUTIONS {
        header.push(format!("feature_{k}"));
        header.push(format!("contribution_{k}"));
    }
    w.write_record(&header)?;
    for s in scored {
        let mut record = vec![s.id.clone(), s.score.to_string(), s.category.as_str().to_string()];
        let top = s.top_contributions(TOP_CONTRIBUTIONS);
        for k in 0..TOP_CONTRIBUTIONS {
            match top.get(k) {
                Some((name, c)) => {
                    record.push(name.to_string());
                    record.push(c.to_string());
                }
                None => {
                    record.push(String::new());
                    record.push(String::new());
                }
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Share of deltas in `[-2, 2]`.
    pub within_2: f64,
    /// Share of deltas in `[-5, 5]`.
    pub within_5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDifferential {
    pub ids: Vec<String>,
    /// `score_a - score_b` per row.
    pub deltas: Vec<f64>,
    pub summary: DifferentialSummary,
}

pub fn summarize_deltas(deltas: &[f64]) -> DifferentialSummary {
    let n = deltas.len();
    if n == 0 {
        return DifferentialSummary {
            n: 0,
            mean: 0.0,
            sd: 0.0,
            within_2: 0.0,
            within_5: 0.0,
        };
    }
    let nf = n as f64;
    let mean = deltas.iter().sum::<f64>() / nf;
    let var = if n > 1 {
        deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let share = |r: f64| deltas.iter().filter(|d| d.abs() <= r).count() as f64 / nf;
    DifferentialSummary {
        n,
        mean,
        sd: var.sqrt(),
        within_2: share(2.0),
        within_5: share(5.0),
    }
}

pub fn score_differential(
    model_a: &ScoreModel,
    model_b: &ScoreModel,
    matrix: &FeatureMatrix,
) -> Result<ScoreDifferential> {
    model_a.check_dictionary(&matrix.dictionary)?;
    model_b.check_dictionary(&matrix.dictionary)?;
    let a = score_values(model_a, matrix.x.view())?;
    let b = score_values(model_b, matrix.x.view())?;
    let deltas: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(ScoreDifferential {
        ids: matrix.ids.clone(),
        summary: summarize_deltas(&deltas),
        deltas,
    })
}
