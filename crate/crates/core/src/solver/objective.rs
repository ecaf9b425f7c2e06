//! Weighted dual-threshold logistic log-likelihood and its derivatives.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{FitConfig, SampleWeights};
use crate::error::{Error, Result};

/// `ln(1 + e^z)` without overflow.
pub fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_shapes(
    x: ArrayView2<f64>,
    y: &[bool],
    w: ArrayView1<f64>,
    beta: ArrayView1<f64>,
) -> Result<()> {
    let (n, m) = x.dim();
    if y.len() != n || w.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows but {} labels and {} weights",
            y.len(),
            w.len()
        )));
    }
    if beta.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "{m} columns but {} coefficients",
            beta.len()
        )));
    }
    Ok(())
}

/// `sum_i w_i [ y_i (x_i.beta - T) - ln(1 + e^(x_i.beta - T)) ]`
pub fn log_likelihood(
    x: ArrayView2<f64>,
    y: &[bool],
    w: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    threshold: f64,
) -> Result<f64> {
    check_shapes(x, y, w, beta)?;
    let scores = x.dot(&beta);
    Ok(likelihood_from_scores(&scores, y, w, threshold))
}

fn likelihood_from_scores(scores: &Array1<f64>, y: &[bool], w: ArrayView1<f64>, t: f64) -> f64 {
    scores
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&s, &yi), &wi)| {
            let z = s - t;
            wi * (if yi { z } else { 0.0 } - log1p_exp(z))
        })
        .sum()
}

/// `lambda * L(T_low) + (1 - lambda) * L(T_high)`
pub fn objective(
    x: ArrayView2<f64>,
    y: &[bool],
    w: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    config: &FitConfig,
) -> Result<f64> {
    check_shapes(x, y, w, beta)?;
    let scores = x.dot(&beta);
    Ok(objective_from_scores(&scores, y, w, config))
}

fn objective_from_scores(
    scores: &Array1<f64>,
    y: &[bool],
    w: ArrayView1<f64>,
    config: &FitConfig,
) -> f64 {
    let t = config.thresholds;
    let lambda = config.lambda;
    let mut total = 0.0;
    if lambda != 0.0 {
        total += lambda * likelihood_from_scores(scores, y, w, t.low);
    }
    if lambda != 1.0 {
        total += (1.0 - lambda) * likelihood_from_scores(scores, y, w, t.high);
    }
    total
}

/// Per-row residual `sum_T weight_T (y_i - sigma(s_i - T))`, pre-multiplied by `w_i`.
fn residuals(scores: &Array1<f64>, y: &[bool], w: ArrayView1<f64>, config: &FitConfig) -> Array1<f64> {
    let t = config.thresholds;
    let lambda = config.lambda;
    Array1::from_iter(scores.iter().zip(y).zip(w).map(|((&s, &yi), &wi)| {
        let target = if yi { 1.0 } else { 0.0 };
        wi * (lambda * (target - sigmoid(s - t.low))
            + (1.0 - lambda) * (target - sigmoid(s - t.high)))
    }))
}

pub fn gradient(
    x: ArrayView2<f64>,
    y: &[bool],
    w: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    config: &FitConfig,
) -> Result<Array1<f64>> {
    check_shapes(x, y, w, beta)?;
    let scores = x.dot(&beta);
    Ok(x.t().dot(&residuals(&scores, y, w, config)))
}

/// Data and weights for repeated objective evaluations during a fit.
pub(crate) struct Problem<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [bool],
    w: SampleWeights,
    config: &'a FitConfig,
}

pub(crate) struct Evaluation {
    pub scores: Array1<f64>,
    pub value: f64,
}

impl<'a> Problem<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &'a [bool], w: SampleWeights, config: &'a FitConfig) -> Self {
        Self { x, y, w, config }
    }

    pub fn evaluate(&self, beta: &Array1<f64>) -> Evaluation {
        let scores = self.x.dot(beta);
        let value = objective_from_scores(&scores, self.y, self.w.view(), self.config);
        Evaluation { scores, value }
    }

    pub fn gradient(&self, eval: &Evaluation) -> Array1<f64> {
        self.x
            .t()
            .dot(&residuals(&eval.scores, self.y, self.w.view(), self.config))
    }

    /// Negated Hessian `X' diag(c) X` with `c_i = w_i sum_T weight_T sigma'(s_i - T)`.
    pub fn neg_hessian(&self, eval: &Evaluation) -> Array2<f64> {
        let t = self.config.thresholds;
        let lambda = self.config.lambda;
        let c = Array1::from_iter(eval.scores.iter().zip(self.w.view()).map(|(&s, &wi)| {
            let lo = sigmoid(s - t.low);
            let hi = sigmoid(s - t.high);
            wi * (lambda * lo * (1.0 - lo) + (1.0 - lambda) * hi * (1.0 - hi))
        }));
        let weighted = &self.x * &c.insert_axis(Axis(1));
        self.x.t().dot(&weighted)
    }
}
