//! Additive fall-risk scores fitted from weakly labeled inpatient encounters.
//!
//! Encounters are labeled from daily counts of risk-targeted nursing
//! interventions ([`cohort`]), turned into averaged assessment features and
//! binned EHR indicators ([`featurize`]), and fitted with non-negative,
//! ordered point values against two fixed score thresholds ([`solver`]).
//! [`scoring`] and [`evaluate`] compare the result with the published
//! bedside tool; [`synth`] generates cohorts with known latent risk.
//!
//! ```no_run
//! use fallrisk::cohort::{build_cohort, LabelingPolicy};
//! use fallrisk::evaluate::{evaluate, EvalConfig};
//! use fallrisk::synth::{generate, SynthConfig};
//!
//! let synth = generate(&SynthConfig::default())?;
//! let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default())?;
//! let eval = evaluate(&cohort, &EvalConfig::default())?;
//! println!("{:.3}", eval.report.cross_validation.fitted.auc_roc.mean);
//! # Ok::<(), fallrisk::Error>(())
//! ```

pub mod cli;
pub mod cohort;
pub mod encounter;
pub mod error;
pub mod evaluate;
pub mod featurize;
pub mod scoring;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
