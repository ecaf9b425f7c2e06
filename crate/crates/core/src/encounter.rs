//! Encounter records as ingested from JSON Lines.
//!
//! One [`Encounter`] is one inpatient stay: daily targeted intervention
//! counts, the non-targeted intervention kinds applied each day, the repeated
//! bedside assessments and a handful of demographics.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 18 binary items of the bedside fall-risk assessment, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JhfratItem {
    Age60To69,
    Age70To79,
    Age80Plus,
    Incontinence,
    UrgencyFrequency,
    AlteredAwareness,
    Impulsive,
    LacksUnderstanding,
    EquipmentOne,
    EquipmentTwo,
    EquipmentThreePlus,
    FallHistory,
    OneHighRiskDrug,
    TwoPlusHighRiskDrugs,
    SedatedProcedure,
    RequiresAssistance,
    UnsteadyGait,
    VisualAuditoryImpairment,
}

/// Assessment categories; three of them are single-select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JhfratCategory {
    Age,
    Elimination,
    Cognition,
    Equipment,
    FallHistory,
    Medications,
    Mobility,
}

impl JhfratCategory {
    pub fn is_single_select(self) -> bool {
        matches!(
            self,
            JhfratCategory::Age | JhfratCategory::Medications | JhfratCategory::Equipment
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            JhfratCategory::Age => "age",
            JhfratCategory::Elimination => "elimination",
            JhfratCategory::Cognition => "cognition",
            JhfratCategory::Equipment => "equipment",
            JhfratCategory::FallHistory => "fall_history",
            JhfratCategory::Medications => "medications",
            JhfratCategory::Mobility => "mobility",
        }
    }
}

impl JhfratItem {
    pub const COUNT: usize = 18;

    pub const ALL: [JhfratItem; 18] = [
        JhfratItem::Age60To69,
        JhfratItem::Age70To79,
        JhfratItem::Age80Plus,
        JhfratItem::Incontinence,
        JhfratItem::UrgencyFrequency,
        JhfratItem::AlteredAwareness,
        JhfratItem::Impulsive,
        JhfratItem::LacksUnderstanding,
        JhfratItem::EquipmentOne,
        JhfratItem::EquipmentTwo,
        JhfratItem::EquipmentThreePlus,
        JhfratItem::FallHistory,
        JhfratItem::OneHighRiskDrug,
        JhfratItem::TwoPlusHighRiskDrugs,
        JhfratItem::SedatedProcedure,
        JhfratItem::RequiresAssistance,
        JhfratItem::UnsteadyGait,
        JhfratItem::VisualAuditoryImpairment,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Stable snake_case key, also used as the feature column name.
    pub fn key(self) -> &'static str {
        match self {
            JhfratItem::Age60To69 => "age_60_69",
            JhfratItem::Age70To79 => "age_70_79",
            JhfratItem::Age80Plus => "age_80_plus",
            JhfratItem::Incontinence => "incontinence",
            JhfratItem::UrgencyFrequency => "urgency_frequency",
            JhfratItem::AlteredAwareness => "altered_awareness",
            JhfratItem::Impulsive => "impulsive",
            JhfratItem::LacksUnderstanding => "lacks_understanding",
            JhfratItem::EquipmentOne => "equipment_one",
            JhfratItem::EquipmentTwo => "equipment_two",
            JhfratItem::EquipmentThreePlus => "equipment_three_plus",
            JhfratItem::FallHistory => "fall_history",
            JhfratItem::OneHighRiskDrug => "one_high_risk_drug",
            JhfratItem::TwoPlusHighRiskDrugs => "two_plus_high_risk_drugs",
            JhfratItem::SedatedProcedure => "sedated_procedure",
            JhfratItem::RequiresAssistance => "requires_assistance",
            JhfratItem::UnsteadyGait => "unsteady_gait",
            JhfratItem::VisualAuditoryImpairment => "visual_auditory_impairment",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|item| item.key() == key)
    }

    pub fn category(self) -> JhfratCategory {
        use JhfratItem::*;
        match self {
            Age60To69 | Age70To79 | Age80Plus => JhfratCategory::Age,
            Incontinence | UrgencyFrequency => JhfratCategory::Elimination,
            AlteredAwareness | Impulsive | LacksUnderstanding => JhfratCategory::Cognition,
            EquipmentOne | EquipmentTwo | EquipmentThreePlus => JhfratCategory::Equipment,
            FallHistory => JhfratCategory::FallHistory,
            OneHighRiskDrug | TwoPlusHighRiskDrugs | SedatedProcedure => {
                JhfratCategory::Medications
            }
            RequiresAssistance | UnsteadyGait | VisualAuditoryImpairment => {
                JhfratCategory::Mobility
            }
        }
    }

    /// Published point value of the item in the bedside tool.
    pub fn points(self) -> f64 {
        use JhfratItem::*;
        match self {
            Age60To69 => 1.0,
            Age70To79 => 2.0,
            Age80Plus => 3.0,
            Incontinence => 2.0,
            UrgencyFrequency => 2.0,
            AlteredAwareness => 1.0,
            Impulsive => 2.0,
            LacksUnderstanding => 4.0,
            EquipmentOne => 1.0,
            EquipmentTwo => 2.0,
            EquipmentThreePlus => 3.0,
            FallHistory => 5.0,
            OneHighRiskDrug => 3.0,
            TwoPlusHighRiskDrugs => 5.0,
            SedatedProcedure => 7.0,
            RequiresAssistance => 2.0,
            UnsteadyGait => 2.0,
            VisualAuditoryImpairment => 2.0,
        }
    }
}

impl fmt::Display for JhfratItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Set of flagged assessment items, stored as a bitmask.
///
/// Serializes as a sorted list of item keys, e.g. `["age_70_79", "impulsive"]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct JhfratItems(u32);

impl JhfratItems {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_items(items: impl IntoIterator<Item = JhfratItem>) -> Self {
        let mut set = Self::empty();
        for item in items {
            set.insert(item);
        }
        set
    }

    pub fn insert(&mut self, item: JhfratItem) {
        self.0 |= 1 << item.index();
    }

    pub fn contains(&self, item: JhfratItem) -> bool {
        self.0 & (1 << item.index()) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = JhfratItem> + '_ {
        JhfratItem::ALL
            .iter()
            .copied()
            .filter(move |item| self.contains(*item))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Sum of published points over the flagged items.
    pub fn points(&self) -> f64 {
        self.iter().map(JhfratItem::points).sum()
    }
}

impl Serialize for JhfratItems {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(JhfratItem::key))
    }
}

impl<'de> Deserialize<'de> for JhfratItems {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let keys = Vec::<String>::deserialize(deserializer)?;
        let mut set = JhfratItems::empty();
        for key in keys {
            let item = JhfratItem::from_key(&key)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown assessment item {key:?}")))?;
            set.insert(item);
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hospital {
    Jhh,
    Bmc,
    Hcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub const ALL: [Sex; 2] = [Sex::Female, Sex::Male];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Race {
    Black,
    White,
    Other,
}

impl Race {
    pub const ALL: [Race; 3] = [Race::Black, Race::White, Race::Other];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Service {
    Medicine,
    Surgery,
    OncologyHematology,
    Neurosurgery,
    Orthopedics,
    Neurology,
    Other,
}

impl Service {
    pub const ALL: [Service; 7] = [
        Service::Medicine,
        Service::Surgery,
        Service::OncologyHematology,
        Service::Neurosurgery,
        Service::Orthopedics,
        Service::Neurology,
        Service::Other,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age_years: u32,
    pub sex: Sex,
    pub race: Race,
    pub service: Service,
    pub comorbidity_count: u32,
}

/// One bedside assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    /// 1-based day of the stay.
    pub day: u32,
    pub items: JhfratItems,
    /// Highest level of mobility, 1 to 8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jhhlm: Option<u8>,
    /// Mobility short-form score on whatever non-negative scale the source uses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ampac: Option<f64>,
}

impl AssessmentRecord {
    pub fn validate(&self) -> Result<()> {
        for category in [
            JhfratCategory::Age,
            JhfratCategory::Medications,
            JhfratCategory::Equipment,
        ] {
            let flagged = self.items.iter().filter(|i| i.category() == category).count();
            if flagged > 1 {
                return Err(Error::invalid(format!(
                    "assessment on day {} flags {flagged} items in single-select category {}",
                    self.day,
                    category.name()
                )));
            }
        }
        if let Some(level) = self.jhhlm {
            if !(1..=8).contains(&level) {
                return Err(Error::invalid(format!("mobility level {level} outside 1-8")));
            }
        }
        if let Some(score) = self.ampac {
            if !score.is_finite() || score < 0.0 {
                return Err(Error::invalid(format!("mobility score {score} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// One inpatient stay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encounter {
    pub id: String,
    pub hospital: Hospital,
    pub admit_length_days: u32,
    pub daily_targeted: Vec<u32>,
    pub daily_nontargeted: Vec<BTreeSet<String>>,
    pub assessments: Vec<AssessmentRecord>,
    pub demographics: Demographics,
    /// 1-based day of the first documented fall.
    #[serde(default)]
    pub fall_day: Option<u32>,
    /// Set once the stay has been cut back to the days before `fall_day`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated_at_fall: bool,
}

impl Encounter {
    pub fn validate(&self) -> Result<()> {
        let len = self.admit_length_days as usize;
        if len == 0 {
            return Err(Error::invalid(format!("{}: admit_length_days must be >= 1", self.id)));
        }
        if self.daily_targeted.len() != len {
            return Err(Error::invalid(format!(
                "{}: daily_targeted has {} entries for a {len}-day stay",
                self.id,
                self.daily_targeted.len()
            )));
        }
        if self.daily_nontargeted.len() != len {
            return Err(Error::invalid(format!(
                "{}: daily_nontargeted has {} entries for a {len}-day stay",
                self.id,
                self.daily_nontargeted.len()
            )));
        }
        if self
            .assessments
            .windows(2)
            .any(|pair| pair[1].day < pair[0].day)
        {
            return Err(Error::invalid(format!("{}: assessments out of order", self.id)));
        }
        for record in &self.assessments {
            if record.day == 0 {
                return Err(Error::invalid(format!("{}: assessment day 0", self.id)));
            }
            record
                .validate()
                .map_err(|e| Error::invalid(format!("{}: {e}", self.id)))?;
        }
        if let Some(day) = self.fall_day {
            let upper = if self.truncated_at_fall {
                self.admit_length_days + 1
            } else {
                self.admit_length_days
            };
            if day == 0 || day > upper || (self.truncated_at_fall && day != upper) {
                return Err(Error::invalid(format!(
                    "{}: fall_day {day} outside the stay",
                    self.id
                )));
            }
        } else if self.truncated_at_fall {
            return Err(Error::invalid(format!("{}: truncated without a fall day", self.id)));
        }
        Ok(())
    }

    pub fn has_fall(&self) -> bool {
        self.fall_day.is_some()
    }

    /// Mean of the published assessment score over all records.
    pub fn mean_jhfrat_points(&self) -> Option<f64> {
        if self.assessments.is_empty() {
            return None;
        }
        let total: f64 = self.assessments.iter().map(|a| a.items.points()).sum();
        Some(total / self.assessments.len() as f64)
    }

    pub fn mean_daily_targeted(&self) -> f64 {
        let total: u64 = self.daily_targeted.iter().map(|&c| c as u64).sum();
        total as f64 / self.daily_targeted.len().max(1) as f64
    }
}

/// Reads encounters from JSON Lines, validating each one. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Encounter>> {
    read_jsonl_records(reader, |e: &Encounter| e.validate())
}

pub(crate) fn read_jsonl_records<T, R, F>(reader: R, validate: F) -> Result<Vec<T>>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
    F: Fn(&T) -> Result<()>,
{
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))?;
        validate(&record).map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write, T: Serialize>(mut writer: W, records: &[T]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_points_sum_to_49() {
        let total: f64 = JhfratItem::ALL.iter().map(|i| i.points()).sum();
        assert_eq!(total, 49.0);
    }

    #[test]
    fn items_serialize_as_keys() {
        let items = JhfratItems::from_items([JhfratItem::Impulsive, JhfratItem::Age70To79]);
        let json = serde_json::to_string(&items).unwrap();
        assert_eq!(json, r#"["age_70_79","impulsive"]"#);
        let back: JhfratItems = serde_json::from_str(&json).unwrap();
        assert_eq!(back, items);
        assert!(serde_json::from_str::<JhfratItems>(r#"["bogus"]"#).is_err());
    }

    #[test]
    fn single_select_violation_rejected() {
        let record = AssessmentRecord {
            day: 1,
            items: JhfratItems::from_items([JhfratItem::OneHighRiskDrug, JhfratItem::SedatedProcedure]),
            jhhlm: None,
            ampac: None,
        };
        assert!(record.validate().is_err());
    }

    #[test]
    fn encounter_lengths_checked() {
        let mut e = fixtures::encounter("a", &[0, 1, 2]);
        assert!(e.validate().is_ok());
        e.daily_targeted.pop();
        assert!(e.validate().is_err());

        let mut e = fixtures::encounter("b", &[0, 1, 2]);
        e.fall_day = Some(4);
        assert!(e.validate().is_err());
        e.fall_day = Some(3);
        assert!(e.validate().is_ok());
    }

    #[test]
    fn jsonl_round_trip() {
        let encounters = vec![fixtures::encounter("a", &[0, 1]), fixtures::encounter("b", &[3])];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &encounters).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, encounters);
    }
}
