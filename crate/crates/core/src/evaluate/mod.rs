//! Cross-validated discrimination, band concordance, score differentials,
//! coefficient stability and the labeling sensitivity sweep.

mod cv;
mod metrics;
pub mod svg;
mod sweep;

pub use cv::{cross_validate, stratified_kfold, CrossValidation, FoldResult, MetricSummary, ModelMetrics};
pub use metrics::{
    auc_pr, auc_roc, midranks, pr_curve, roc_curve, spearman, threshold_confusion, Confusion, CurvePoint,
    Cut, MeanSd,
};
pub use sweep::{sensitivity_sweep, stability_stats, FeatureStability, SweepConfig, SweepPoint, SweepResult};

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, CohortCounts, CohortRole};
use crate::error::{Error, Result};
use crate::featurize::{build_matrix, feature_rows, FeatureMatrix};
use crate::scoring::{categorize, score_differential, score_values, Category, DifferentialSummary};
use crate::solver::{fit, ConstraintSet, FitConfig, ScoreModel};

/// Row of the concordance table: the weak label an encounter carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskGroup {
    Low,
    High,
    Unknown,
}

impl RiskGroup {
    pub const ALL: [RiskGroup; 3] = [RiskGroup::Low, RiskGroup::High, RiskGroup::Unknown];

    pub fn of_role(role: CohortRole) -> Self {
        match role.target() {
            Some(false) => RiskGroup::Low,
            Some(true) => RiskGroup::High,
            None => RiskGroup::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RiskGroup::Low => "low",
            RiskGroup::High => "high",
            RiskGroup::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceRow {
    pub label: RiskGroup,
    pub total: usize,
    /// Encounters per predicted band, Low / Moderate / High.
    pub counts: [usize; 3],
    /// Row percentages; zero for an empty row.
    pub percent: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceTable {
    pub rows: Vec<ConcordanceRow>,
}

impl ConcordanceTable {
    fn tabulate<'a>(cells: impl Iterator<Item = (RiskGroup, Category)> + 'a) -> Self {
        let mut counts = [[0usize; 3]; 3];
        for (g, c) in cells {
            counts[g as usize][c as usize] += 1;
        }
        let rows = RiskGroup::ALL
            .iter()
            .map(|&g| {
                let row = counts[g as usize];
                let total: usize = row.iter().sum();
                let pct = |c: usize| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 };
                ConcordanceRow {
                    label: g,
                    total,
                    counts: row,
                    percent: [pct(row[0]), pct(row[1]), pct(row[2])],
                }
            })
            .collect();
        Self { rows }
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.total).sum()
    }
}

/// Separate tables for encounters without and with a documented fall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concordance {
    pub non_fall: ConcordanceTable,
    pub fall: ConcordanceTable,
}

pub fn concordance_table(categories: &[Category], labels: &[RiskGroup], falls: &[bool]) -> Result<Concordance> {
    if categories.len() != labels.len() || labels.len() != falls.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} categories, {} labels, {} fall flags",
            categories.len(),
            labels.len(),
            falls.len()
        )));
    }
    let cells = |fall: bool| {
        (0..labels.len())
            .filter(move |&i| falls[i] == fall)
            .map(|i| (labels[i], categories[i]))
    };
    Ok(Concordance {
        non_fall: ConcordanceTable::tabulate(cells(false)),
        fall: ConcordanceTable::tabulate(cells(true)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    pub augmented: bool,
    pub fit: FitConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 1,
            augmented: true,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub folds: Vec<FoldResult>,
    pub fitted: MetricSummary,
    pub baseline: MetricSummary,
    /// Share statistics of the fitted coefficients across folds.
    pub stability: Vec<FeatureStability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceReport {
    pub fitted: Concordance,
    pub baseline: Concordance,
}

/// Everything written to the JSON metrics summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub cohort: CohortCounts,
    pub n_features: usize,
    pub cross_validation: CrossValidationReport,
    /// Fitted on the whole binary cohort; used for concordance and differentials.
    pub final_model: ScoreModel,
    pub concordance: ConcordanceReport,
    /// Final fitted score minus baseline score over all labeled encounters.
    pub differential: DifferentialSummary,
    /// Rank correlation of mean assessment score with mean daily targeted interventions.
    pub spearman_jhfrat_vs_targeted: f64,
}

impl EvalReport {
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Out-of-fold scores per binary-cohort row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofScore {
    pub id: String,
    pub label: u8,
    pub fitted: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialRow {
    pub id: String,
    pub delta: f64,
}

/// A report together with the per-row data its tables and plots are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub oof: Vec<OofScore>,
    pub differentials: Vec<DifferentialRow>,
}

/// Rank correlation between each encounter's mean assessment points and its
/// mean daily targeted-intervention count.
pub fn jhfrat_intervention_spearman(cohort: &Cohort) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = cohort
        .members
        .iter()
        .filter_map(|m| {
            m.encounter
                .mean_jhfrat_points()
                .map(|p| (p, m.encounter.mean_daily_targeted()))
        })
        .unzip();
    spearman(&x, &y)
}

pub fn evaluate(cohort: &Cohort, config: &EvalConfig) -> Result<Evaluation> {
    let matrix = build_matrix(cohort, config.augmented)?;
    let dict = matrix.dictionary.clone();
    let constraints = ConstraintSet::default_chains(&dict)?;
    let baseline = ScoreModel::baseline(&dict)?;
    let mut fit_config = config.fit.clone();
    if fit_config.init.is_none() {
        fit_config.init = Some(dict.baseline_coefficients().to_vec());
    }

    let cv = cross_validate(&matrix, &constraints, &fit_config, &baseline, config.folds, config.seed)?;
    let names: Vec<String> = dict.names().map(str::to_string).collect();
    let tables: Vec<Vec<f64>> = cv.folds.iter().map(|f| f.beta.clone()).collect();
    let stability = stability_stats(&names, &tables)?;

    let full = fit(matrix.x.view(), &matrix.y, &constraints, &fit_config)?;
    let final_model = ScoreModel::from_fit(&dict, &constraints, full)?;

    let (ids, x) = feature_rows(cohort.members.iter().map(|m| &m.encounter), &dict)?;
    let all = FeatureMatrix {
        ids,
        x,
        y: cohort.members.iter().map(|m| m.role.target().unwrap_or(false)).collect(),
        dictionary: dict.clone(),
    };
    let groups: Vec<RiskGroup> = cohort.members.iter().map(|m| RiskGroup::of_role(m.role)).collect();
    let falls: Vec<bool> = cohort.members.iter().map(|m| m.encounter.has_fall()).collect();
    let bands = |model: &ScoreModel| -> Result<Vec<Category>> {
        Ok(score_values(model, all.x.view())?
            .into_iter()
            .map(|s| categorize(s, model.thresholds))
            .collect())
    };
    let concordance = ConcordanceReport {
        fitted: concordance_table(&bands(&final_model)?, &groups, &falls)?,
        baseline: concordance_table(&bands(&baseline)?, &groups, &falls)?,
    };
    let diff = score_differential(&final_model, &baseline, &all)?;

    let report = EvalReport {
        config: config.clone(),
        cohort: cohort.counts,
        n_features: dict.len(),
        cross_validation: CrossValidationReport {
            folds: cv.folds,
            fitted: cv.fitted,
            baseline: cv.baseline,
            stability,
        },
        final_model,
        concordance,
        differential: diff.summary,
        spearman_jhfrat_vs_targeted: jhfrat_intervention_spearman(cohort)?,
    };
    let oof = matrix
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| OofScore {
            id: id.clone(),
            label: u8::from(matrix.y[i]),
            fitted: cv.oof_fitted[i],
            baseline: cv.oof_baseline[i],
        })
        .collect();
    let differentials = diff
        .ids
        .into_iter()
        .zip(diff.deltas)
        .map(|(id, delta)| DifferentialRow { id, delta })
        .collect();
    Ok(Evaluation {
        report,
        oof,
        differentials,
    })
}

fn write_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(reader: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_oof_csv(rows: &[OofScore]) -> Result<Vec<u8>> {
    write_rows(rows)
}

pub fn read_oof_csv<R: Read>(reader: R) -> Result<Vec<OofScore>> {
    read_rows(reader)
}

pub fn write_differentials_csv(rows: &[DifferentialRow]) -> Result<Vec<u8>> {
    write_rows(rows)
}

pub fn read_differentials_csv<R: Read>(reader: R) -> Result<Vec<DifferentialRow>> {
    read_rows(reader)
}

#[derive(Serialize)]
struct CurveRow<'a> {
    model: &'a str,
    threshold: f64,
    x: f64,
    y: f64,
}

/// Rendered report files, by file name: CSV tables and SVG figures.
pub fn report_files(eval: &Evaluation) -> Result<Vec<(String, Vec<u8>)>> {
    let report = &eval.report;
    let y: Vec<bool> = eval.oof.iter().map(|r| r.label == 1).collect();
    let fitted: Vec<f64> = eval.oof.iter().map(|r| r.fitted).collect();
    let baseline: Vec<f64> = eval.oof.iter().map(|r| r.baseline).collect();
    let roc = [("fitted", roc_curve(&fitted, &y)?), ("baseline", roc_curve(&baseline, &y)?)];
    let pr = [("fitted", pr_curve(&fitted, &y)?), ("baseline", pr_curve(&baseline, &y)?)];

    let curve_csv = |curves: &[(&str, Vec<CurvePoint>)]| {
        let rows: Vec<CurveRow> = curves
            .iter()
            .flat_map(|(model, pts)| {
                pts.iter().map(move |p| CurveRow {
                    model,
                    threshold: p.threshold,
                    x: p.x,
                    y: p.y,
                })
            })
            .collect();
        write_rows(&rows)
    };
    let series = |curves: &[(&str, Vec<CurvePoint>)], summary: [&MetricSummary; 2], pr: bool| {
        curves
            .iter()
            .zip(summary)
            .map(|((model, pts), s)| {
                let metric = if pr { s.auc_pr } else { s.auc_roc };
                (
                    format!("{model} {:.3} ± {:.3}", metric.mean, metric.sd),
                    pts.iter().map(|p| (p.x, p.y)).collect::<Vec<_>>(),
                )
            })
            .collect::<Vec<_>>()
    };
    let cvr = &report.cross_validation;
    let summaries = [&cvr.fitted, &cvr.baseline];
    let roc_series = series(&roc, summaries, false);
    let pr_series = series(&pr, summaries, true);
    let mut files = vec![
        ("roc.csv".to_string(), curve_csv(&roc)?),
        ("pr.csv".to_string(), curve_csv(&pr)?),
        (
            "roc.svg".to_string(),
            svg::unit_line_chart(
                "ROC (out-of-fold)",
                "false positive rate",
                "true positive rate",
                &as_svg(&roc_series),
                true,
            )
            .into_bytes(),
        ),
        (
            "pr.svg".to_string(),
            svg::unit_line_chart("Precision-recall (out-of-fold)", "recall", "precision", &as_svg(&pr_series), false)
                .into_bytes(),
        ),
    ];
    let deltas: Vec<f64> = eval.differentials.iter().map(|d| d.delta).collect();
    files.push((
        "differential.svg".to_string(),
        svg::histogram("Score differential, fitted minus baseline", "points", &deltas).into_bytes(),
    ));
    files.push(("folds.csv".to_string(), folds_csv(cvr)?));
    files.push(("coefficients.csv".to_string(), coefficients_csv(report)?));
    files.push(("concordance.csv".to_string(), concordance_csv(&report.concordance)?));
    files.push(("stability.csv".to_string(), write_rows(&cvr.stability)?));
    Ok(files)
}

fn as_svg(s: &[(String, Vec<(f64, f64)>)]) -> Vec<svg::Series<'_>> {
    s.iter()
        .map(|(label, points)| svg::Series {
            label,
            points: points.clone(),
        })
        .collect()
}

fn folds_csv(cv: &CrossValidationReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "fold", "model", "n_train", "n_test", "auc_roc", "auc_pr", "tpr_low", "fpr_low", "tpr_high", "fpr_high",
    ])?;
    for f in &cv.folds {
        for (model, m) in [("fitted", &f.fitted), ("baseline", &f.baseline)] {
            w.write_record([
                f.fold.to_string(),
                model.to_string(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                m.auc_roc.to_string(),
                m.auc_pr.to_string(),
                m.confusion_low.tpr.to_string(),
                m.confusion_low.fpr.to_string(),
                m.confusion_high.tpr.to_string(),
                m.confusion_high.fpr.to_string(),
            ])?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn coefficients_csv(report: &EvalReport) -> Result<Vec<u8>> {
    let model = &report.final_model;
    let shares = model.shares();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["feature".to_string(), "beta".to_string(), "share".to_string()];
    header.extend(report.cross_validation.folds.iter().map(|f| format!("fold_{}", f.fold)));
    w.write_record(&header)?;
    for (j, c) in model.coefficients.iter().enumerate() {
        let mut record = vec![c.name.clone(), c.beta.to_string(), shares[j].to_string()];
        record.extend(report.cross_validation.folds.iter().map(|f| f.beta[j].to_string()));
        w.write_record(&record)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn concordance_csv(c: &ConcordanceReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model", "stratum", "label", "total", "low", "moderate", "high", "pct_low", "pct_moderate", "pct_high",
    ])?;
    for (model, conc) in [("fitted", &c.fitted), ("baseline", &c.baseline)] {
        for (stratum, table) in [("non_fall", &conc.non_fall), ("fall", &conc.fall)] {
            for r in &table.rows {
                w.write_record([
                    model.to_string(),
                    stratum.to_string(),
                    r.label.as_str().to_string(),
                    r.total.to_string(),
                    r.counts[0].to_string(),
                    r.counts[1].to_string(),
                    r.counts[2].to_string(),
                    format!("{:.2}", r.percent[0]),
                    format!("{:.2}", r.percent[1]),
                    format!("{:.2}", r.percent[2]),
                ])?;
            }
        }
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_low_encounter_scored_zero() {
        let c = concordance_table(&[Category::Low], &[RiskGroup::Low], &[false]).unwrap();
        assert_eq!(c.non_fall.rows[0].counts, [1, 0, 0]);
        assert_eq!(c.non_fall.rows[0].percent, [100.0, 0.0, 0.0]);
        assert_eq!(c.fall.total(), 0);
    }

    #[test]
    fn strata_are_conserved() {
        let cats = [Category::High, Category::Low, Category::Moderate, Category::High, Category::Low];
        let groups = [RiskGroup::High, RiskGroup::Low, RiskGroup::Unknown, RiskGroup::High, RiskGroup::Unknown];
        let falls = [true, false, false, false, true];
        let c = concordance_table(&cats, &groups, &falls).unwrap();
        assert_eq!(c.fall.total(), 2);
        assert_eq!(c.non_fall.total(), 3);
        for t in [&c.fall, &c.non_fall] {
            for r in &t.rows {
                assert_eq!(r.counts.iter().sum::<usize>(), r.total);
            }
        }
        assert!(concordance_table(&cats, &groups, &falls[..2]).is_err());
    }
}
