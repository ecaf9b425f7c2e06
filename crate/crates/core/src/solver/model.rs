use std::io::{Read, Write};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::constraints::ConstraintSet;
use super::{Fit, FitMetadata, Thresholds};
use crate::error::{Error, Result};
use crate::featurize::FeatureDictionary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub beta: f64,
}

/// Fitted (or published) additive score: one non-negative point value per
/// feature plus the category thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub dictionary_hash: String,
    pub coefficients: Vec<Coefficient>,
    pub thresholds: Thresholds,
    /// Ordering pairs by feature name, lower first.
    pub constraints: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitMetadata>,
}

impl ScoreModel {
    pub fn from_fit(dict: &FeatureDictionary, constraints: &ConstraintSet, fit: Fit) -> Result<Self> {
        if fit.beta.len() != dict.len() {
            return Err(Error::DictionaryMismatch(format!(
                "{} coefficients for {} features",
                fit.beta.len(),
                dict.len()
            )));
        }
        let names: Vec<&str> = dict.names().collect();
        Ok(Self {
            dictionary_hash: dict.hash(),
            coefficients: names
                .iter()
                .zip(fit.beta.iter())
                .map(|(name, &beta)| Coefficient {
                    name: name.to_string(),
                    beta,
                })
                .collect(),
            thresholds: fit.metadata.thresholds,
            constraints: constraints
                .pairs()
                .iter()
                .map(|&(lo, hi)| (names[lo].to_string(), names[hi].to_string()))
                .collect(),
            fit: Some(fit.metadata),
        })
    }

    /// The published bedside tool expressed over `dict` (EHR columns score zero).
    pub fn baseline(dict: &FeatureDictionary) -> Result<Self> {
        let constraints = ConstraintSet::default_chains(dict)?;
        let names: Vec<&str> = dict.names().collect();
        Ok(Self {
            dictionary_hash: dict.hash(),
            coefficients: names
                .iter()
                .zip(dict.baseline_coefficients().iter())
                .map(|(name, &beta)| Coefficient {
                    name: name.to_string(),
                    beta,
                })
                .collect(),
            thresholds: Thresholds::default(),
            constraints: constraints
                .pairs()
                .iter()
                .map(|&(lo, hi)| (names[lo].to_string(), names[hi].to_string()))
                .collect(),
            fit: None,
        })
    }

    pub fn beta(&self) -> Array1<f64> {
        self.coefficients.iter().map(|c| c.beta).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coefficients.iter().map(|c| c.name.as_str())
    }

    /// Each coefficient as a fraction of the coefficient sum.
    pub fn shares(&self) -> Vec<f64> {
        let total: f64 = self.coefficients.iter().map(|c| c.beta).sum();
        self.coefficients
            .iter()
            .map(|c| if total > 0.0 { c.beta / total } else { 0.0 })
            .collect()
    }

    pub fn check_dictionary(&self, dict: &FeatureDictionary) -> Result<()> {
        if self.dictionary_hash != dict.hash() || !self.names().eq(dict.names()) {
            return Err(Error::DictionaryMismatch(
                "model was fitted against a different feature dictionary".to_string(),
            ));
        }
        Ok(())
    }

    /// Column-index form of the stored ordering pairs.
    pub fn constraint_set(&self) -> Result<ConstraintSet> {
        let index = |name: &str| {
            self.coefficients
                .iter()
                .position(|c| c.name == name)
                .ok_or_else(|| Error::DictionaryMismatch(format!("unknown feature {name}")))
        };
        let pairs = self
            .constraints
            .iter()
            .map(|(lo, hi)| Ok((index(lo)?, index(hi)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConstraintSet::new(pairs))
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let model: ScoreModel = serde_json::from_reader(reader)?;
        if model.coefficients.iter().any(|c| !c.beta.is_finite()) {
            return Err(Error::NonFinite("model coefficients".to_string()));
        }
        Ok(model)
    }
}
