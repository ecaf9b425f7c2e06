use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::constraints::{ChainTransform, ConstraintSet};
use super::objective::gradient;
use super::FitConfig;
use crate::error::Result;

/// First-order optimality residuals for the constrained maximization.
///
/// Multipliers are estimated from the gradient in increment coordinates, so
/// the report is defined at any point, feasible or not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Max-norm of `grad + sum_c mu_c * grad(slack_c)`.
    pub stationarity: f64,
    /// Largest negative slack.
    pub primal_feasibility: f64,
    /// Largest `|mu_c * slack_c|`.
    pub complementary_slackness: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.complementary_slackness)
    }
}

pub fn kkt_residuals(
    x: ArrayView2<f64>,
    y: &[bool],
    w: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    constraints: &ConstraintSet,
    config: &FitConfig,
) -> Result<KktReport> {
    let grad = gradient(x, y, w, beta, config)?;
    let transform = ChainTransform::new(constraints, beta.len())?;
    Ok(kkt_from_gradient(&transform, beta, &grad))
}

pub(crate) fn kkt_from_gradient(
    transform: &ChainTransform,
    beta: ArrayView1<f64>,
    grad_beta: &Array1<f64>,
) -> KktReport {
    let slack = transform.to_increments(beta);
    let reduced = transform.pull_gradient(grad_beta);
    let mut residual = grad_beta.clone();
    let mut report = KktReport::default();
    for c in 0..transform.dim() {
        let mu = (-reduced[c]).max(0.0);
        residual[c] += mu;
        if let Some(p) = transform.pred(c) {
            residual[p] -= mu;
        }
        report.primal_feasibility = report.primal_feasibility.max(-slack[c]);
        report.complementary_slackness = report.complementary_slackness.max((mu * slack[c]).abs());
    }
    report.stationarity = residual.iter().fold(0.0, |acc, r| acc.max(r.abs()));
    report
}
