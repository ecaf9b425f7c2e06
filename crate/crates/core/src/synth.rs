//! Synthetic cohorts with a known latent risk per encounter.
//!
//! Every encounter draws a latent risk `r ~ U(0, 1)` and works on the logit
//! scale `z = scale * ln(r / (1 - r))`. Assessment items, EHR bins, service,
//! intervention intensity and the fall hazard all load on `z`, with
//! intercepts solved numerically so that marginal occurrence rates hit the
//! configured targets. The loadings do not follow the published points:
//! fall history and medications carry little signal, cognition and mobility
//! carry a lot.

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encounter::{
    AssessmentRecord, Demographics, Encounter, Hospital, JhfratItem, JhfratItems, Race, Service, Sex,
};
use crate::error::{Error, Result};

/// Grid size of the midpoint rule over the latent risk.
const QUADRATURE_POINTS: usize = 4000;

/// Kinds of routine (non-targeted) fall-prevention activity.
pub const NONTARGETED_KINDS: [&str; 10] = [
    "hourly_rounding",
    "nonskid_footwear",
    "call_light_in_reach",
    "toileting_schedule",
    "patient_education",
    "mobility_plan",
    "physical_therapy",
    "occupational_therapy",
    "medication_review",
    "low_bed",
];

fn sigmoid(x: f64) -> f64 {
    crate::solver::sigmoid(x)
}

/// A binary trait with marginal rate `rate` and log-odds slope `loading` on the latent scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkedRate {
    pub rate: f64,
    pub loading: f64,
}

/// An ordered categorical trait: `rates[k]` is the marginal share of
/// category `k + 1`, category 0 takes the remainder, and
/// `P(category >= k | z) = sigmoid(c_k + loading * z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeLink {
    pub rates: Vec<f64>,
    pub loading: f64,
}

impl CumulativeLink {
    fn new(rates: &[f64], loading: f64) -> Self {
        Self {
            rates: rates.to_vec(),
            loading,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        check_probability(what, self.rates.iter().sum())?;
        for &r in &self.rates {
            check_probability(what, r)?;
        }
        check_finite(what, self.loading)
    }
}

/// A measure recorded for only part of the cohort, binned as a [`CumulativeLink`]
/// among the encounters that have it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialMeasure {
    /// Share of encounters without the measure.
    pub missing: f64,
    /// Unconditional shares of the non-reference bins, lowest risk first.
    pub link: CumulativeLink,
}

impl PartialMeasure {
    fn conditional(&self) -> CumulativeLink {
        let present = 1.0 - self.missing;
        CumulativeLink {
            rates: self.link.rates.iter().map(|r| r / present).collect(),
            loading: self.link.loading,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        check_probability(what, self.missing)?;
        if self.missing >= 1.0 {
            return Err(Error::invalid(format!("{what}: measure is never recorded")));
        }
        self.conditional().validate(what)
    }
}

/// Expected daily targeted interventions as a function of the latent logit `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IntensityLink {
    /// The same mean for everyone, without extra noise.
    Constant { mean: f64 },
    /// `base * exp(slope * z)`, times log-normal encounter and day noise.
    Exponential {
        base: f64,
        slope: f64,
        encounter_sd: f64,
        day_sd: f64,
    },
}

impl IntensityLink {
    fn validate(&self) -> Result<()> {
        match *self {
            IntensityLink::Constant { mean } => {
                if !(mean >= 0.0 && mean.is_finite()) {
                    return Err(Error::invalid("intensity mean must be a non-negative number"));
                }
            }
            IntensityLink::Exponential {
                base,
                slope,
                encounter_sd,
                day_sd,
            } => {
                if !(base >= 0.0 && base.is_finite()) {
                    return Err(Error::invalid("intensity base must be a non-negative number"));
                }
                if !(slope >= 0.0 && slope.is_finite()) {
                    return Err(Error::invalid("intensity must be non-decreasing in latent risk"));
                }
                if !(encounter_sd >= 0.0 && day_sd >= 0.0) {
                    return Err(Error::invalid("intensity noise must be non-negative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallHazard {
    /// Target falls per 1000 patient-days.
    pub per_1000_days: f64,
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_encounters: usize,
    pub seed: u64,
    /// Multiplier from `logit(r)` to the latent scale `z`.
    pub latent_scale: f64,
    pub min_stay_days: u32,
    pub max_stay_days: u32,
    /// Mean stay beyond `min_stay_days` before truncation to the range.
    pub mean_extra_days: f64,
    /// Probabilities of 0, 1, 2, 3 assessments on a given day.
    pub assessments_per_day: [f64; 4],
    /// Chance that an assessment redraws an item instead of copying the encounter state.
    pub item_redraw: f64,
    pub age: CumulativeLink,
    pub equipment: CumulativeLink,
    pub medications: CumulativeLink,
    /// Multi-select items in column order, with their own links.
    pub items: Vec<(JhfratItem, LinkedRate)>,
    /// Bins `(35,45]`, `(25,35]`, `<=25`; `>45` is the reference.
    pub ampac: PartialMeasure,
    /// Bins 4-5, 1-3; 6-8 is the reference.
    pub jhhlm: PartialMeasure,
    /// Bins 5-10, >10; <5 is the reference.
    pub comorbidity: CumulativeLink,
    /// Female share.
    pub female: f64,
    /// Black, white, other.
    pub race: [f64; 3],
    /// Service shares and latent loadings, in `Service::ALL` order.
    pub service: [LinkedRate; 7],
    pub intensity: IntensityLink,
    pub fall: FallHazard,
    /// Daily chance of each routine activity at `z = 0`.
    pub nontargeted_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        use JhfratItem::*;
        let item = |item, rate, loading| (item, LinkedRate { rate, loading });
        let svc = |rate, loading| LinkedRate { rate, loading };
        Self {
            n_encounters: 20_000,
            seed: 1,
            latent_scale: 0.6,
            min_stay_days: 2,
            max_stay_days: 21,
            mean_extra_days: 4.0,
            assessments_per_day: [0.1, 0.3, 0.4, 0.2],
            item_redraw: 0.25,
            age: CumulativeLink::new(&[0.221, 0.197, 0.132], 0.3),
            equipment: CumulativeLink::new(&[0.403, 0.213, 0.129], 0.8),
            medications: CumulativeLink::new(&[0.337, 0.407, 0.032], 0.3),
            items: vec![
                item(Incontinence, 0.174, 1.0),
                item(UrgencyFrequency, 0.072, 0.8),
                item(AlteredAwareness, 0.095, 1.4),
                item(Impulsive, 0.029, 1.4),
                item(LacksUnderstanding, 0.047, 1.4),
                item(FallHistory, 0.119, 0.25),
                item(RequiresAssistance, 0.511, 1.8),
                item(UnsteadyGait, 0.080, 1.2),
                item(VisualAuditoryImpairment, 0.015, 0.8),
            ],
            ampac: PartialMeasure {
                missing: 0.127,
                link: CumulativeLink::new(&[0.272, 0.094, 0.091], 1.4),
            },
            jhhlm: PartialMeasure {
                missing: 0.091,
                link: CumulativeLink::new(&[0.081, 0.180], 1.2),
            },
            comorbidity: CumulativeLink::new(&[0.240, 0.004], 0.4),
            female: 0.502,
            race: [0.334, 0.551, 0.115],
            service: [
                svc(0.588, 0.0),
                svc(0.179, -0.3),
                svc(0.071, 0.0),
                svc(0.053, 0.6),
                svc(0.036, 0.3),
                svc(0.031, 0.6),
                svc(0.043, 0.0),
            ],
            intensity: IntensityLink::Exponential {
                base: 1.0,
                slope: 1.5,
                encounter_sd: 0.25,
                day_sd: 0.3,
            },
            fall: FallHazard {
                per_1000_days: 1.07,
                loading: 0.8,
            },
            nontargeted_rate: 0.3,
        }
    }
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0 + 1e-9).contains(&p) {
        return Err(Error::invalid(format!("{what}: probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_finite(what: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

impl SynthConfig {
    pub fn with_intensity(mut self, intensity: IntensityLink) -> Self {
        self.intensity = intensity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_encounters == 0 {
            return Err(Error::invalid("n_encounters must be positive"));
        }
        if !(self.latent_scale > 0.0 && self.latent_scale.is_finite()) {
            return Err(Error::invalid("latent_scale must be positive"));
        }
        if self.min_stay_days == 0 || self.min_stay_days > self.max_stay_days {
            return Err(Error::invalid("stay range must satisfy 1 <= min <= max"));
        }
        if !(self.mean_extra_days >= 0.0 && self.mean_extra_days.is_finite()) {
            return Err(Error::invalid("mean_extra_days must be non-negative"));
        }
        for &p in &self.assessments_per_day {
            check_probability("assessments_per_day", p)?;
        }
        if (self.assessments_per_day.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("assessments_per_day must sum to 1"));
        }
        check_probability("item_redraw", self.item_redraw)?;
        self.age.validate("age")?;
        self.equipment.validate("equipment")?;
        self.medications.validate("medications")?;
        if self.age.rates.len() != 3 || self.equipment.rates.len() != 3 || self.medications.rates.len() != 3 {
            return Err(Error::invalid("single-select categories take exactly three levels"));
        }
        for (item, link) in &self.items {
            if item.category().is_single_select() {
                return Err(Error::invalid(format!("{item} belongs to a single-select category")));
            }
            check_probability(item.key(), link.rate)?;
            check_finite(item.key(), link.loading)?;
        }
        self.ampac.validate("ampac")?;
        self.jhhlm.validate("jhhlm")?;
        if self.ampac.link.rates.len() != 3 || self.jhhlm.link.rates.len() != 2 {
            return Err(Error::invalid("ampac takes three and jhhlm two non-reference bins"));
        }
        self.comorbidity.validate("comorbidity")?;
        if self.comorbidity.rates.len() != 2 {
            return Err(Error::invalid("comorbidity takes two non-reference bins"));
        }
        check_probability("female", self.female)?;
        for &p in &self.race {
            check_probability("race", p)?;
        }
        for s in &self.service {
            check_probability("service", s.rate)?;
            check_finite("service loading", s.loading)?;
        }
        if self.service.iter().all(|s| s.rate == 0.0) || self.race.iter().all(|&p| p == 0.0) {
            return Err(Error::invalid("categorical shares must not all be zero"));
        }
        self.intensity.validate()?;
        if !(self.fall.per_1000_days >= 0.0 && self.fall.per_1000_days < 1000.0) {
            return Err(Error::invalid("fall rate must lie in [0, 1000) per 1000 days"));
        }
        check_finite("fall loading", self.fall.loading)?;
        check_probability("nontargeted_rate", self.nontargeted_rate)
    }
}

/// Midpoint grid over the latent logit.
fn latent_grid(scale: f64) -> Vec<f64> {
    (0..QUADRATURE_POINTS)
        .map(|i| {
            let r = (i as f64 + 0.5) / QUADRATURE_POINTS as f64;
            scale * (r / (1.0 - r)).ln()
        })
        .collect()
}

/// Intercept `c` with `mean_z sigmoid(c + loading z) = target`, by bisection.
fn solve_intercept(grid: &[f64], loading: f64, target: f64) -> f64 {
    if target <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if target >= 1.0 {
        return f64::INFINITY;
    }
    let mean = |c: f64| grid.iter().map(|&z| sigmoid(c + loading * z)).sum::<f64>() / grid.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solved intercepts of a [`CumulativeLink`], one per threshold.
#[derive(Debug, Clone)]
struct Ordinal {
    cuts: Vec<f64>,
    loading: f64,
}

impl Ordinal {
    fn calibrate(grid: &[f64], link: &CumulativeLink) -> Self {
        let cuts = (0..link.rates.len())
            .map(|k| solve_intercept(grid, link.loading, link.rates[k..].iter().sum()))
            .collect();
        Self {
            cuts,
            loading: link.loading,
        }
    }

    fn sample<R: Rng>(&self, z: f64, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cuts
            .iter()
            .take_while(|&&c| u < sigmoid(c + self.loading * z))
            .count()
    }
}

/// Softmax service model whose intercepts are fitted by iterative scaling.
fn calibrate_service(grid: &[f64], service: &[LinkedRate; 7]) -> [f64; 7] {
    let total: f64 = service.iter().map(|s| s.rate).sum();
    let target: Vec<f64> = service.iter().map(|s| s.rate / total).collect();
    let mut logits = [0.0; 7];
    for (k, t) in target.iter().enumerate() {
        logits[k] = if *t > 0.0 { t.ln() } else { f64::NEG_INFINITY };
    }
    for _ in 0..500 {
        let mut marginal = [0.0; 7];
        for &z in grid {
            let p = softmax(&logits, service, z);
            for k in 0..7 {
                marginal[k] += p[k] / grid.len() as f64;
            }
        }
        for k in 0..7 {
            if target[k] > 0.0 {
                logits[k] += (target[k] / marginal[k]).ln();
            }
        }
    }
    logits
}

fn softmax(logits: &[f64; 7], service: &[LinkedRate; 7], z: f64) -> [f64; 7] {
    let mut p = [0.0; 7];
    let scores: Vec<f64> = (0..7).map(|k| logits[k] + service[k].loading * z).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for k in 0..7 {
        p[k] = (scores[k] - max).exp();
        sum += p[k];
    }
    for v in &mut p {
        *v /= sum;
    }
    p
}

struct Calibration {
    age: Ordinal,
    equipment: Ordinal,
    medications: Ordinal,
    items: Vec<(JhfratItem, f64, f64)>,
    ampac: Ordinal,
    jhhlm: Ordinal,
    comorbidity: Ordinal,
    service: [f64; 7],
    fall_intercept: f64,
}

impl Calibration {
    fn new(cfg: &SynthConfig) -> Self {
        let grid = latent_grid(cfg.latent_scale);
        let mean_exp = grid.iter().map(|&z| (cfg.fall.loading * z).exp()).sum::<f64>() / grid.len() as f64;
        Self {
            age: Ordinal::calibrate(&grid, &cfg.age),
            equipment: Ordinal::calibrate(&grid, &cfg.equipment),
            medications: Ordinal::calibrate(&grid, &cfg.medications),
            items: cfg
                .items
                .iter()
                .map(|(item, l)| (*item, solve_intercept(&grid, l.loading, l.rate), l.loading))
                .collect(),
            ampac: Ordinal::calibrate(&grid, &cfg.ampac.conditional()),
            jhhlm: Ordinal::calibrate(&grid, &cfg.jhhlm.conditional()),
            comorbidity: Ordinal::calibrate(&grid, &cfg.comorbidity),
            service: calibrate_service(&grid, &cfg.service),
            fall_intercept: (cfg.fall.per_1000_days / 1000.0).ln() - mean_exp.ln(),
        }
    }
}

/// Synthetic encounters with their latent risk.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub encounters: Vec<Encounter>,
    /// Latent risk in `(0, 1)`, aligned with `encounters`.
    pub latent_risk: Vec<f64>,
}

#[derive(Serialize)]
struct TruthRow<'a> {
    id: &'a str,
    latent_risk: f64,
}

impl SynthCohort {
    /// CSV with columns `id,latent_risk`.
    pub fn write_truth_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (e, &r) in self.encounters.iter().zip(&self.latent_risk) {
            w.serialize(TruthRow {
                id: &e.id,
                latent_risk: r,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthCohort> {
    config.validate()?;
    let cal = Calibration::new(config);
    let (encounters, latent_risk) = (0..config.n_encounters)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            synth_encounter(i, config, &cal, &mut rng)
        })
        .unzip();
    Ok(SynthCohort {
        encounters,
        latent_risk,
    })
}

fn draw_stay<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> u32 {
    // shifted geometric, redrawn until it lands in range
    let p = 1.0 / (1.0 + cfg.mean_extra_days);
    loop {
        let mut extra = 0;
        while rng.random::<f64>() >= p && extra <= cfg.max_stay_days {
            extra += 1;
        }
        let days = cfg.min_stay_days + extra;
        if days <= cfg.max_stay_days {
            return days;
        }
    }
}

fn pick<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as u32)
}

const AGE_ITEMS: [JhfratItem; 3] = [JhfratItem::Age60To69, JhfratItem::Age70To79, JhfratItem::Age80Plus];
const EQUIPMENT_ITEMS: [JhfratItem; 3] = [
    JhfratItem::EquipmentOne,
    JhfratItem::EquipmentTwo,
    JhfratItem::EquipmentThreePlus,
];
const MEDICATION_ITEMS: [JhfratItem; 3] = [
    JhfratItem::OneHighRiskDrug,
    JhfratItem::TwoPlusHighRiskDrugs,
    JhfratItem::SedatedProcedure,
];

fn synth_encounter(i: usize, cfg: &SynthConfig, cal: &Calibration, rng: &mut ChaCha8Rng) -> (Encounter, f64) {
    let r: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let z = cfg.latent_scale * (r / (1.0 - r)).ln();
    let days = draw_stay(cfg, rng);
    let hospital = [Hospital::Jhh, Hospital::Bmc, Hospital::Hcm][pick(&[0.5, 0.3, 0.2], rng)];

    let age_level = cal.age.sample(z, rng);
    let age_years = match age_level {
        0 => rng.random_range(18..60),
        1 => rng.random_range(60..70),
        2 => rng.random_range(70..80),
        _ => rng.random_range(80..100),
    };
    let comorbidity_count = match cal.comorbidity.sample(z, rng) {
        0 => rng.random_range(0..5),
        1 => rng.random_range(5..=10),
        _ => rng.random_range(11..16),
    };
    let service_p = softmax(&cal.service, &cfg.service, z);
    let demographics = Demographics {
        age_years,
        sex: if rng.random::<f64>() < cfg.female { Sex::Female } else { Sex::Male },
        race: Race::ALL[pick(&cfg.race, rng)],
        service: Service::ALL[pick(&service_p, rng)],
        comorbidity_count,
    };

    // encounter-level item states
    let equipment = cal.equipment.sample(z, rng);
    let medications = cal.medications.sample(z, rng);
    let item_p: Vec<(JhfratItem, f64)> = cal
        .items
        .iter()
        .map(|&(item, c, loading)| (item, sigmoid(c + loading * z)))
        .collect();
    let item_state: Vec<bool> = item_p.iter().map(|&(_, p)| rng.random::<f64>() < p).collect();

    // mobility measures: bin first, then a level inside the bin
    let ampac_level = (rng.random::<f64>() >= cfg.ampac.missing).then(|| {
        let (lo, hi) = match cal.ampac.sample(z, rng) {
            0 => (45.5, 60.0),
            1 => (35.5, 45.0),
            2 => (25.5, 35.0),
            _ => (10.0, 25.0),
        };
        rng.random_range(lo..=hi)
    });
    let jhhlm_level: Option<u8> = (rng.random::<f64>() >= cfg.jhhlm.missing).then(|| match cal.jhhlm.sample(z, rng) {
        0 => rng.random_range(6..=8),
        1 => rng.random_range(4..=5),
        _ => rng.random_range(1..=3),
    });

    let mut assessments = Vec::new();
    for day in 1..=days {
        for _ in 0..pick(&cfg.assessments_per_day, rng) {
            let mut items = JhfratItems::empty();
            if age_level > 0 {
                items.insert(AGE_ITEMS[age_level - 1]);
            }
            let eq = if rng.random::<f64>() < cfg.item_redraw { cal.equipment.sample(z, rng) } else { equipment };
            if eq > 0 {
                items.insert(EQUIPMENT_ITEMS[eq - 1]);
            }
            let med = if rng.random::<f64>() < cfg.item_redraw { cal.medications.sample(z, rng) } else { medications };
            if med > 0 {
                items.insert(MEDICATION_ITEMS[med - 1]);
            }
            for (k, &(item, p)) in item_p.iter().enumerate() {
                let on = if rng.random::<f64>() < cfg.item_redraw { rng.random::<f64>() < p } else { item_state[k] };
                if on {
                    items.insert(item);
                }
            }
            assessments.push(AssessmentRecord {
                day,
                items,
                jhhlm: jhhlm_level.filter(|_| rng.random::<f64>() < 0.9),
                ampac: ampac_level.filter(|_| rng.random::<f64>() < 0.9),
            });
        }
    }
    // scatter recorded AM-PAC values around the encounter level, keeping their mean on it
    if let Some(level) = ampac_level {
        let idx: Vec<usize> = (0..assessments.len()).filter(|&k| assessments[k].ampac.is_some()).collect();
        let noise: Vec<f64> = idx.iter().map(|_| rng.random_range(-4.0..4.0)).collect();
        let centre = noise.iter().sum::<f64>() / noise.len().max(1) as f64;
        for (k, n) in idx.into_iter().zip(noise) {
            assessments[k].ampac = Some(level + n - centre);
        }
    }

    let encounter_mean = match cfg.intensity {
        IntensityLink::Constant { mean } => mean,
        IntensityLink::Exponential {
            base,
            slope,
            encounter_sd,
            ..
        } => base * (slope * z).exp() * lognormal(encounter_sd, rng),
    };
    let day_sd = match cfg.intensity {
        IntensityLink::Constant { .. } => 0.0,
        IntensityLink::Exponential { day_sd, .. } => day_sd,
    };
    let daily_targeted: Vec<u32> = (0..days)
        .map(|_| poisson(encounter_mean * lognormal(day_sd, rng), rng))
        .collect();

    let kind_p = sigmoid(logit(cfg.nontargeted_rate) + 0.5 * z);
    let daily_nontargeted: Vec<BTreeSet<String>> = (0..days)
        .map(|_| {
            NONTARGETED_KINDS
                .iter()
                .filter(|_| rng.random::<f64>() < kind_p)
                .map(|k| k.to_string())
                .collect()
        })
        .collect();

    let hazard = (cal.fall_intercept + cfg.fall.loading * z).exp().min(1.0);
    let fall_day = (1..=days).find(|_| rng.random::<f64>() < hazard);

    let encounter = Encounter {
        id: format!("E{:06}", i + 1),
        hospital,
        admit_length_days: days,
        daily_targeted,
        daily_nontargeted,
        assessments,
        demographics,
        fall_day,
        truncated_at_fall: false,
    };
    (encounter, r)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn lognormal<R: Rng>(sd: f64, rng: &mut R) -> f64 {
    if sd == 0.0 {
        return 1.0;
    }
    // unit mean
    LogNormal::new(-0.5 * sd * sd, sd).map_or(1.0, |d| d.sample(rng))
}
