use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::encounter::JhfratItem;
use crate::error::{Error, Result};
use crate::featurize::FeatureDictionary;

/// Ordering constraints `beta[lower] <= beta[upper]` between columns.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pairs: Vec<(usize, usize)>,
}

/// Ordinal chains over the single-select assessment categories.
pub const DEFAULT_CHAINS: [[JhfratItem; 3]; 3] = [
    [
        JhfratItem::Age60To69,
        JhfratItem::Age70To79,
        JhfratItem::Age80Plus,
    ],
    [
        JhfratItem::OneHighRiskDrug,
        JhfratItem::TwoPlusHighRiskDrugs,
        JhfratItem::SedatedProcedure,
    ],
    [
        JhfratItem::EquipmentOne,
        JhfratItem::EquipmentTwo,
        JhfratItem::EquipmentThreePlus,
    ],
];

impl ConstraintSet {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let unique: BTreeSet<(usize, usize)> = pairs.into_iter().collect();
        Self {
            pairs: unique.into_iter().collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Chains `a <= b <= c` given as column lists.
    pub fn from_chains(chains: &[Vec<usize>]) -> Self {
        Self::new(
            chains
                .iter()
                .flat_map(|chain| chain.windows(2).map(|w| (w[0], w[1]))),
        )
    }

    /// Age, medication and equipment chains resolved against `dict`.
    pub fn default_chains(dict: &FeatureDictionary) -> Result<Self> {
        let mut chains = Vec::new();
        for chain in DEFAULT_CHAINS {
            let cols = chain
                .iter()
                .map(|item| {
                    dict.index_of(item.key()).ok_or_else(|| {
                        Error::DictionaryMismatch(format!("missing column {}", item.key()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            chains.push(cols);
        }
        Ok(Self::from_chains(&chains))
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Largest violation `beta[lower] - beta[upper]`, or 0 when all pairs hold.
    pub fn max_violation(&self, beta: ArrayView1<f64>) -> f64 {
        self.pairs
            .iter()
            .map(|&(lo, hi)| (beta[lo] - beta[hi]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Maps increments `delta >= 0` onto coefficients satisfying the chain
/// ordering and non-negativity: along a chain `a <= b <= c`,
/// `beta_a = delta_a`, `beta_b = delta_a + delta_b`, and so on.
#[derive(Debug, Clone)]
pub(crate) struct ChainTransform {
    pred: Vec<Option<usize>>,
    succ: Vec<Option<usize>>,
}

impl ChainTransform {
    pub fn new(constraints: &ConstraintSet, m: usize) -> Result<Self> {
        let mut pred = vec![None; m];
        let mut succ = vec![None; m];
        for &(lo, hi) in constraints.pairs() {
            if lo >= m || hi >= m {
                return Err(Error::invalid(format!(
                    "constraint ({lo}, {hi}) references a column outside 0..{m}"
                )));
            }
            if lo == hi {
                return Err(Error::CyclicConstraints(lo));
            }
            if succ[lo].is_some() {
                return Err(Error::UnsupportedConstraints(format!(
                    "column {lo} has more than one upper neighbour; only disjoint chains are supported"
                )));
            }
            if pred[hi].is_some() {
                return Err(Error::UnsupportedConstraints(format!(
                    "column {hi} has more than one lower neighbour; only disjoint chains are supported"
                )));
            }
            succ[lo] = Some(hi);
            pred[hi] = Some(lo);
        }
        // with in/out degree <= 1, a cycle is a loop of predecessor links
        for start in 0..m {
            let mut node = start;
            let mut steps = 0;
            while let Some(p) = pred[node] {
                node = p;
                steps += 1;
                if node == start || steps > m {
                    return Err(Error::CyclicConstraints(start));
                }
            }
        }
        Ok(Self { pred, succ })
    }

    pub fn dim(&self) -> usize {
        self.pred.len()
    }

    pub fn pred(&self, c: usize) -> Option<usize> {
        self.pred[c]
    }

    pub fn to_beta(&self, delta: &Array1<f64>) -> Array1<f64> {
        let mut beta = Array1::zeros(self.dim());
        for head in (0..self.dim()).filter(|&c| self.pred[c].is_none()) {
            let mut acc = 0.0;
            let mut node = Some(head);
            while let Some(c) = node {
                acc += delta[c];
                beta[c] = acc;
                node = self.succ[c];
            }
        }
        beta
    }

    /// Slack of each increment constraint: `beta_c - beta_pred(c)`, or `beta_c` at a chain head.
    pub fn to_increments(&self, beta: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_shape_fn(self.dim(), |c| match self.pred[c] {
            Some(p) => beta[c] - beta[p],
            None => beta[c],
        })
    }

    /// Gradient with respect to the increments: suffix sums along each chain.
    pub fn pull_gradient(&self, grad_beta: &Array1<f64>) -> Array1<f64> {
        let mut g = Array1::zeros(self.dim());
        for tail in (0..self.dim()).filter(|&c| self.succ[c].is_none()) {
            let mut acc = 0.0;
            let mut node = Some(tail);
            while let Some(c) = node {
                acc += grad_beta[c];
                g[c] = acc;
                node = self.pred[c];
            }
        }
        g
    }

    /// Dense `beta = A * delta` matrix.
    pub fn matrix(&self) -> Array2<f64> {
        let m = self.dim();
        let mut a = Array2::zeros((m, m));
        for row in 0..m {
            let mut node = Some(row);
            while let Some(c) = node {
                a[[row, c]] = 1.0;
                node = self.pred[c];
            }
        }
        a
    }
}
