use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_binary(scores: &[f64], y: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            y.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".to_string()));
    }
    let n1 = y.iter().filter(|&&v| v).count();
    let n0 = y.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClass);
    }
    Ok((n1, n0))
}

/// 1-based ranks with tied values sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Area under the ROC curve from the Mann-Whitney statistic; ties count one half.
pub fn auc_roc(scores: &[f64], y: &[bool]) -> Result<f64> {
    let (n1, n0) = check_binary(scores, y)?;
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(y).filter(|(_, &v)| v).map(|(r, _)| r).sum();
    let n1f = n1 as f64;
    Ok((rank_sum - n1f * (n1f + 1.0) / 2.0) / (n1f * n0 as f64))
}

/// Distinct score levels, highest first, with the positive and negative count at each.
fn descending_groups(scores: &[f64], y: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if g.0 == scores[i] => {
                if y[i] {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((scores[i], usize::from(y[i]), usize::from(!y[i]))),
        }
    }
    groups
}

/// Average precision: recall increments weighted by precision, tied scores entering together.
pub fn auc_pr(scores: &[f64], y: &[bool]) -> Result<f64> {
    let (n1, _) = check_binary(scores, y)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    for (_, pos, neg) in descending_groups(scores, y) {
        tp += pos;
        fp += neg;
        if pos > 0 {
            ap += (pos as f64 / n1 as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// `(fpr, tpr)` at every distinct score used as an inclusive cut, from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(scores: &[f64], y: &[bool]) -> Result<Vec<CurvePoint>> {
    let (n1, n0) = check_binary(scores, y)?;
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (s, pos, neg) in descending_groups(scores, y) {
        tp += pos;
        fp += neg;
        points.push(CurvePoint {
            threshold: s,
            x: fp as f64 / n0 as f64,
            y: tp as f64 / n1 as f64,
        });
    }
    Ok(points)
}

/// `(recall, precision)` at every distinct score used as an inclusive cut.
pub fn pr_curve(scores: &[f64], y: &[bool]) -> Result<Vec<CurvePoint>> {
    let (n1, _) = check_binary(scores, y)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    Ok(descending_groups(scores, y)
        .into_iter()
        .map(|(s, pos, neg)| {
            tp += pos;
            fp += neg;
            CurvePoint {
                threshold: s,
                x: tp as f64 / n1 as f64,
                y: tp as f64 / (tp + fp) as f64,
            }
        })
        .collect())
}

/// How a score is compared with a cut-point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "threshold")]
pub enum Cut {
    /// Positive iff `score >= t`.
    AtLeast(f64),
    /// Positive iff `score > t`.
    Above(f64),
}

impl Cut {
    pub fn positive(self, score: f64) -> bool {
        match self {
            Cut::AtLeast(t) => score >= t,
            Cut::Above(t) => score > t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub cut: Cut,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tpr: f64,
    pub fpr: f64,
}

pub fn threshold_confusion(scores: &[f64], y: &[bool], cut: Cut) -> Result<Confusion> {
    check_binary(scores, y)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &label) in scores.iter().zip(y) {
        match (cut.positive(s), label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Confusion {
        cut,
        tp,
        fp,
        tn,
        fn_,
        tpr: tp as f64 / (tp + fn_) as f64,
        fpr: fp as f64 / (fp + tn) as f64,
    })
}

/// Pearson correlation of midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("rank correlation needs at least two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".to_string()));
    }
    let rx = midranks(x);
    let ry = midranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("rank correlation of a constant sequence"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Mean and sample standard deviation (0 for fewer than two values).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: 0.0, sd: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}
