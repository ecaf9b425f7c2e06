//! Constrained score optimization.
//!
//! Maximizes `lambda * L(6) + (1 - lambda) * L(13)` over non-negative
//! coefficients that respect ordinal chains within single-select categories,
//! where `L(T)` is the class-balanced logistic log-likelihood of the score
//! `x.beta` against the fixed threshold `T`.
//!
//! Each chain `a <= b <= c` is rewritten in increments (`beta_a = d_a`,
//! `beta_b = d_a + d_b`, ...) so the feasible set becomes `d >= 0`. The
//! ascent then alternates projected Newton steps on the free increments with
//! a projected-gradient fallback, both under an Armijo backtracking rule.

mod constraints;
mod kkt;
mod model;
mod objective;

pub use constraints::{ConstraintSet, DEFAULT_CHAINS};
pub use kkt::{kkt_residuals, KktReport};
pub use model::{Coefficient, ScoreModel};
pub use objective::{gradient, log1p_exp, log_likelihood, objective, sigmoid};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use constraints::ChainTransform;
use objective::{Evaluation, Problem};

/// Category cut-points of the score scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            low: 6.0,
            high: 13.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda: f64,
    pub thresholds: Thresholds,
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-increase constant of the Armijo rule.
    pub armijo: f64,
    /// Step shrink factor while backtracking.
    pub backtrack: f64,
    /// Starting coefficients; projected onto the feasible set. Zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    /// Keep every accepted iterate in [`Fit::trace`].
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            thresholds: Thresholds::default(),
            tol: 1e-8,
            max_iter: 1_000_000,
            armijo: 1e-4,
            backtrack: 0.5,
            init: None,
            record_trace: false,
        }
    }
}

impl FitConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_init(mut self, init: impl Into<Vec<f64>>) -> Self {
        self.init = Some(init.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if !(self.thresholds.low < self.thresholds.high) {
            return Err(Error::invalid("low threshold must be below high threshold"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::invalid("line-search constants must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Class-balanced row weights: `1/n1` for positives, `1/n0` for negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights(Array1<f64>);

impl SampleWeights {
    pub fn balanced(y: &[bool]) -> Result<Self> {
        let n1 = y.iter().filter(|&&v| v).count();
        let n0 = y.len() - n1;
        if n1 == 0 || n0 == 0 {
            return Err(Error::SingleClass);
        }
        let (w1, w0) = (1.0 / n1 as f64, 1.0 / n0 as f64);
        Ok(Self(y.iter().map(|&v| if v { w1 } else { w0 }).collect()))
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ProjectedGradient,
    ObjectiveStalled,
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub lambda: f64,
    pub thresholds: Thresholds,
    pub iterations: usize,
    pub objective: f64,
    pub projected_gradient: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub kkt: KktReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub beta: Array1<f64>,
    pub metadata: FitMetadata,
    /// Accepted iterates as `(objective, beta)`, starting point first.
    pub trace: Option<Vec<(f64, Array1<f64>)>>,
}

/// Consecutive negligible improvements before the ascent is declared stalled.
const STALL_PATIENCE: usize = 3;

/// Relative pivot below which the reduced Hessian counts as singular.
const SINGULAR_PIVOT: f64 = 1e-10;

/// Projected-gradient norm under which a line-search failure still counts as converged.
const LINE_SEARCH_FLOOR: f64 = 1e-6;

pub fn fit(
    x: ArrayView2<f64>,
    y: &[bool],
    constraints: &ConstraintSet,
    config: &FitConfig,
) -> Result<Fit> {
    config.validate()?;
    let (n, m) = x.dim();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{n} rows but {} labels", y.len())));
    }
    if n < 2 {
        return Err(Error::invalid("at least two rows are required"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature matrix".to_string()));
    }
    let weights = SampleWeights::balanced(y)?;
    let transform = ChainTransform::new(constraints, m)?;
    let init = match &config.init {
        Some(v) if v.len() != m => {
            return Err(Error::ShapeMismatch(format!(
                "initial point has {} entries for {m} columns",
                v.len()
            )))
        }
        Some(v) if v.iter().any(|b| !b.is_finite()) => {
            return Err(Error::NonFinite("initial point".to_string()))
        }
        Some(v) => Array1::from(v.clone()),
        None => Array1::zeros(m),
    };

    let problem = Problem::new(x, y, weights, config);
    let mut ascent = Ascent::new(&problem, &transform, config, init);
    ascent.run();
    ascent.finish()
}

fn projected_gradient_norm(delta: &Array1<f64>, g: &Array1<f64>) -> f64 {
    delta
        .iter()
        .zip(g)
        .map(|(&d, &gi)| (d - (d + gi).max(0.0)).abs())
        .fold(0.0, f64::max)
}

struct Ascent<'p, 'a> {
    problem: &'p Problem<'a>,
    transform: &'p ChainTransform,
    lift: Array2<f64>,
    config: &'p FitConfig,
    delta: Array1<f64>,
    beta: Array1<f64>,
    eval: Evaluation,
    reduced_grad: Array1<f64>,
    grad_beta: Array1<f64>,
    iterations: usize,
    stop: Option<StopReason>,
    stalled: usize,
    warnings: Vec<String>,
    trace: Option<Vec<(f64, Array1<f64>)>>,
    last_step: Option<(Array1<f64>, Array1<f64>)>,
}

impl<'p, 'a> Ascent<'p, 'a> {
    fn new(
        problem: &'p Problem<'a>,
        transform: &'p ChainTransform,
        config: &'p FitConfig,
        init: Array1<f64>,
    ) -> Self {
        let delta = transform.to_increments(init.view()).mapv(|d| d.max(0.0));
        let beta = transform.to_beta(&delta);
        let eval = problem.evaluate(&beta);
        let grad_beta = problem.gradient(&eval);
        let reduced_grad = transform.pull_gradient(&grad_beta);
        let trace = config
            .record_trace
            .then(|| vec![(eval.value, beta.clone())]);
        Self {
            problem,
            transform,
            lift: transform.matrix(),
            config,
            delta,
            beta,
            eval,
            reduced_grad,
            grad_beta,
            iterations: 0,
            stop: None,
            stalled: 0,
            warnings: Vec::new(),
            trace,
            last_step: None,
        }
    }

    fn pg_norm(&self) -> f64 {
        projected_gradient_norm(&self.delta, &self.reduced_grad)
    }

    fn run(&mut self) {
        loop {
            if self.pg_norm() <= self.config.tol {
                self.stop = Some(StopReason::ProjectedGradient);
                return;
            }
            if self.iterations >= self.config.max_iter {
                self.stop = Some(StopReason::MaxIterations);
                return;
            }
            let candidate = self
                .newton_step()
                .or_else(|| self.gradient_step());
            let Some((delta, eval)) = candidate else {
                self.stop = Some(StopReason::LineSearchFailed);
                return;
            };
            let improvement = eval.value - self.eval.value;
            self.accept(delta, eval);
            if improvement <= self.config.tol * self.eval.value.abs().max(1.0) {
                self.stalled += 1;
                if self.stalled >= STALL_PATIENCE {
                    self.stop = Some(StopReason::ObjectiveStalled);
                    return;
                }
            } else {
                self.stalled = 0;
            }
        }
    }

    fn accept(&mut self, delta: Array1<f64>, eval: Evaluation) {
        let old_delta = std::mem::replace(&mut self.delta, delta);
        let old_grad = self.reduced_grad.clone();
        self.beta = self.transform.to_beta(&self.delta);
        self.eval = eval;
        self.grad_beta = self.problem.gradient(&self.eval);
        self.reduced_grad = self.transform.pull_gradient(&self.grad_beta);
        self.last_step = Some((&self.delta - &old_delta, &self.reduced_grad - &old_grad));
        self.iterations += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push((self.eval.value, self.beta.clone()));
        }
    }

    /// Negated Hessian in increment coordinates.
    fn reduced_neg_hessian(&self) -> Array2<f64> {
        let h = self.problem.neg_hessian(&self.eval);
        self.lift.t().dot(&h).dot(&self.lift)
    }

    /// Armijo backtracking along the projection arc `max(delta + t * dir, 0)`.
    fn search(&self, direction: &Array1<f64>, initial: f64) -> Option<(Array1<f64>, Evaluation)> {
        let mut step = initial;
        for _ in 0..80 {
            let trial = (&self.delta + &(direction * step)).mapv(|d| d.max(0.0));
            let predicted = self.reduced_grad.dot(&(&trial - &self.delta));
            if predicted > 0.0 {
                let beta = self.transform.to_beta(&trial);
                let eval = self.problem.evaluate(&beta);
                if eval.value.is_finite()
                    && eval.value >= self.eval.value + self.config.armijo * predicted
                {
                    return Some((trial, eval));
                }
            }
            step *= self.config.backtrack;
        }
        None
    }

    fn newton_step(&mut self) -> Option<(Array1<f64>, Evaluation)> {
        let m = self.delta.len();
        let pg = self.pg_norm();
        let eps = pg.min(1e-3);
        let binding: Vec<bool> = (0..m)
            .map(|c| self.delta[c] <= eps && self.reduced_grad[c] <= 0.0)
            .collect();
        let free: Vec<usize> = (0..m).filter(|&c| !binding[c]).collect();
        let mut direction = Array1::zeros(m);
        for c in (0..m).filter(|&c| binding[c]) {
            direction[c] = -self.delta[c];
        }
        if !free.is_empty() {
            let h = self.reduced_neg_hessian();
            let k = free.len();
            let mut sub = Array2::zeros((k, k));
            let mut rhs = Array1::zeros(k);
            for (a, &i) in free.iter().enumerate() {
                rhs[a] = self.reduced_grad[i];
                for (b, &j) in free.iter().enumerate() {
                    sub[[a, b]] = h[[i, j]];
                }
            }
            let (step, _) = regularized_solve(&sub, &rhs)?;
            for (a, &i) in free.iter().enumerate() {
                direction[i] = step[a];
            }
        }
        self.search(&direction, 1.0)
    }

    fn gradient_step(&self) -> Option<(Array1<f64>, Evaluation)> {
        // Barzilai-Borwein scale from the previous accepted step
        let scale = match &self.last_step {
            Some((s, yv)) => {
                let sy = -s.dot(yv);
                if sy > 0.0 {
                    (s.dot(s) / sy).clamp(1e-10, 1e10)
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        self.search(&self.reduced_grad, scale)
    }

    fn finish(mut self) -> Result<Fit> {
        let stop = self.stop.unwrap_or(StopReason::MaxIterations);
        let pg = self.pg_norm();
        let converged = match stop {
            StopReason::ProjectedGradient | StopReason::ObjectiveStalled => true,
            StopReason::LineSearchFailed => pg <= LINE_SEARCH_FLOOR,
            StopReason::MaxIterations => false,
        };
        if stop == StopReason::ObjectiveStalled && pg > LINE_SEARCH_FLOOR {
            self.warnings.push(format!(
                "objective stalled with projected gradient {pg:.3e}; the optimum may lie at infinity"
            ));
        }
        if self.reduced_hessian_singular() {
            self.warnings
                .push("reduced Hessian is near-singular; the optimum may not be unique".to_string());
        }
        let kkt = kkt::kkt_from_gradient(self.transform, self.beta.view(), &self.grad_beta);
        Ok(Fit {
            beta: self.beta,
            metadata: FitMetadata {
                lambda: self.config.lambda,
                thresholds: self.config.thresholds,
                iterations: self.iterations,
                objective: self.eval.value,
                projected_gradient: pg,
                converged,
                stop_reason: stop,
                kkt,
                warnings: self.warnings,
            },
            trace: self.trace,
        })
    }

    fn reduced_hessian_singular(&self) -> bool {
        let m = self.delta.len();
        let free: Vec<usize> = (0..m)
            .filter(|&c| self.delta[c] > 0.0 || self.reduced_grad[c] > 0.0)
            .collect();
        if free.is_empty() {
            return false;
        }
        let h = self.reduced_neg_hessian();
        let sub = Array2::from_shape_fn((free.len(), free.len()), |(a, b)| h[[free[a], free[b]]]);
        match cholesky(&sub) {
            Some((_, ratio)) => ratio < SINGULAR_PIVOT,
            None => true,
        }
    }
}

/// Lower Cholesky factor and the smallest squared pivot relative to the largest diagonal.
fn cholesky(a: &Array2<f64>) -> Option<(Array2<f64>, f64)> {
    let k = a.nrows();
    let max_diag = (0..k).map(|i| a[[i, i]]).fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    let mut l = Array2::<f64>::zeros((k, k));
    let mut min_pivot = f64::INFINITY;
    for j in 0..k {
        let mut d = a[[j, j]];
        for p in 0..j {
            d -= l[[j, p]] * l[[j, p]];
        }
        if !(d > 0.0) {
            return None;
        }
        min_pivot = min_pivot.min(d);
        let root = d.sqrt();
        l[[j, j]] = root;
        for i in (j + 1)..k {
            let mut s = a[[i, j]];
            for p in 0..j {
                s -= l[[i, p]] * l[[j, p]];
            }
            l[[i, j]] = s / root;
        }
    }
    Some((l, min_pivot / max_diag))
}

fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let k = b.len();
    let mut z = Array1::<f64>::zeros(k);
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[[i, p]] * z[p];
        }
        z[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(k);
    for i in (0..k).rev() {
        let mut s = z[i];
        for p in (i + 1)..k {
            s -= l[[p, i]] * x[p];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves `(a + mu I) x = b` for the smallest tried `mu` that makes the system positive definite.
fn regularized_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<(Array1<f64>, f64)> {
    let k = a.nrows();
    let scale = (0..k).map(|i| a[[i, i]].abs()).fold(0.0, f64::max).max(1e-300);
    let mut mu = 0.0;
    for _ in 0..12 {
        let shifted = a + &(Array2::<f64>::eye(k) * mu);
        if let Some((l, _)) = cholesky(&shifted) {
            let x = cholesky_solve(&l, b);
            if x.iter().all(|v| v.is_finite()) {
                return Some((x, mu));
            }
        }
        mu = if mu == 0.0 { scale * 1e-12 } else { mu * 100.0 };
    }
    None
}
