//! Feature construction: encounter-averaged assessment items plus binned
//! one-hot EHR indicators.

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::Cohort;
use crate::encounter::{Encounter, JhfratItem, Race, Service, Sex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Jhfrat,
    Ehr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Mean of a binary flag over the stay, in [0, 1].
    AveragedBinary,
    /// 0 or 1.
    Indicator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub source: FeatureSource,
    pub category: String,
    pub kind: FeatureKind,
    /// Single-select or one-hot group the feature belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

pub const AMPAC_BINS: [&str; 4] = ["ampac_le_25", "ampac_25_35", "ampac_35_45", "ampac_gt_45"];
pub const JHHLM_BINS: [&str; 3] = ["jhhlm_1_3", "jhhlm_4_5", "jhhlm_6_8"];
pub const COMORBIDITY_BINS: [&str; 3] = ["comorbid_lt_5", "comorbid_5_10", "comorbid_gt_10"];
pub const SEX_COLUMNS: [&str; 2] = ["sex_female", "sex_male"];
pub const RACE_COLUMNS: [&str; 3] = ["race_black", "race_white", "race_other"];
pub const SERVICE_COLUMNS: [&str; 7] = [
    "service_medicine",
    "service_surgery",
    "service_oncology_hematology",
    "service_neurosurgery",
    "service_orthopedics",
    "service_neurology",
    "service_other",
];

pub const EHR_FEATURE_COUNT: usize = 4 + 3 + 3 + 2 + 3 + 7;

/// Ordered column definitions for a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDictionary {
    pub features: Vec<FeatureSpec>,
}

impl FeatureDictionary {
    /// The 18 assessment items only.
    pub fn jhfrat_only() -> Self {
        let features = JhfratItem::ALL
            .iter()
            .map(|item| {
                let category = item.category();
                FeatureSpec {
                    name: item.key().to_string(),
                    source: FeatureSource::Jhfrat,
                    category: category.name().to_string(),
                    kind: FeatureKind::AveragedBinary,
                    group: category.is_single_select().then(|| category.name().to_string()),
                }
            })
            .collect();
        Self { features }
    }

    /// Assessment items followed by the binned EHR indicators.
    pub fn augmented() -> Self {
        let mut dict = Self::jhfrat_only();
        let groups: [(&str, &[&str]); 6] = [
            ("ampac", &AMPAC_BINS),
            ("jhhlm", &JHHLM_BINS),
            ("comorbidities", &COMORBIDITY_BINS),
            ("sex", &SEX_COLUMNS),
            ("race", &RACE_COLUMNS),
            ("service", &SERVICE_COLUMNS),
        ];
        for (group, names) in groups {
            dict.features.extend(names.iter().map(|name| FeatureSpec {
                name: name.to_string(),
                source: FeatureSource::Ehr,
                category: group.to_string(),
                kind: FeatureKind::Indicator,
                group: Some(group.to_string()),
            }));
        }
        dict
    }

    pub fn for_variant(augmented: bool) -> Self {
        if augmented {
            Self::augmented()
        } else {
            Self::jhfrat_only()
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, f) in self.features.iter().enumerate() {
            if seen.insert(f.name.as_str(), i).is_some() {
                return Err(Error::DictionaryMismatch(format!("duplicate feature {}", f.name)));
            }
        }
        for (i, item) in JhfratItem::ALL.iter().enumerate() {
            if self.features.get(i).map(|f| f.name.as_str()) != Some(item.key()) {
                return Err(Error::DictionaryMismatch(format!(
                    "column {i} must be assessment item {}",
                    item.key()
                )));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("dictionary serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Published points for assessment columns, zero for EHR columns.
    pub fn baseline_coefficients(&self) -> Array1<f64> {
        self.features
            .iter()
            .map(|f| JhfratItem::from_key(&f.name).map_or(0.0, JhfratItem::points))
            .collect()
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fraction of retained assessments flagging each item.
pub fn average_jhfrat(e: &Encounter) -> Result<[f64; JhfratItem::COUNT]> {
    if e.assessments.is_empty() {
        return Err(Error::invalid(format!("{}: no assessments to average", e.id)));
    }
    let mut counts = [0usize; JhfratItem::COUNT];
    for record in &e.assessments {
        for item in record.items.iter() {
            counts[item.index()] += 1;
        }
    }
    let n = e.assessments.len() as f64;
    Ok(counts.map(|c| c as f64 / n))
}

fn mean_present(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn ampac_bin(mean: f64) -> usize {
    if mean <= 25.0 {
        0
    } else if mean <= 35.0 {
        1
    } else if mean <= 45.0 {
        2
    } else {
        3
    }
}

/// Bin of the rounded mean mobility level.
pub fn jhhlm_bin(mean: f64) -> usize {
    match mean.round() as i64 {
        i64::MIN..=3 => 0,
        4 | 5 => 1,
        _ => 2,
    }
}

pub fn comorbidity_bin(count: u32) -> usize {
    match count {
        0..=4 => 0,
        5..=10 => 1,
        _ => 2,
    }
}

/// EHR indicators in dictionary order (AM-PAC, JH-HLM, comorbidities, sex,
/// race, service). A measure absent from every record leaves its group all zero.
pub fn bin_ehr(e: &Encounter) -> Result<[f64; EHR_FEATURE_COUNT]> {
    for record in &e.assessments {
        if let Some(level) = record.jhhlm {
            if !(1..=8).contains(&level) {
                return Err(Error::invalid(format!("{}: mobility level {level} outside 1-8", e.id)));
            }
        }
        if let Some(score) = record.ampac {
            if !score.is_finite() || score < 0.0 {
                return Err(Error::invalid(format!("{}: negative mobility score {score}", e.id)));
            }
        }
    }
    let mut out = [0.0; EHR_FEATURE_COUNT];
    let mut offset = 0;
    if let Some(mean) = mean_present(e.assessments.iter().filter_map(|a| a.ampac)) {
        out[offset + ampac_bin(mean)] = 1.0;
    }
    offset += AMPAC_BINS.len();
    if let Some(mean) = mean_present(e.assessments.iter().filter_map(|a| a.jhhlm.map(f64::from))) {
        out[offset + jhhlm_bin(mean)] = 1.0;
    }
    offset += JHHLM_BINS.len();
    out[offset + comorbidity_bin(e.demographics.comorbidity_count)] = 1.0;
    offset += COMORBIDITY_BINS.len();
    let d = &e.demographics;
    out[offset + Sex::ALL.iter().position(|&s| s == d.sex).unwrap()] = 1.0;
    offset += SEX_COLUMNS.len();
    out[offset + Race::ALL.iter().position(|&r| r == d.race).unwrap()] = 1.0;
    offset += RACE_COLUMNS.len();
    out[offset + Service::ALL.iter().position(|&s| s == d.service).unwrap()] = 1.0;
    Ok(out)
}

/// Feature row for one encounter in the column order of `dict`.
pub fn feature_row(e: &Encounter, dict: &FeatureDictionary) -> Result<Vec<f64>> {
    let items = average_jhfrat(e)?;
    let needs_ehr = dict.features.iter().any(|f| f.source == FeatureSource::Ehr);
    let ehr = if needs_ehr { Some(bin_ehr(e)?) } else { None };
    dict.features
        .iter()
        .map(|f| match f.source {
            FeatureSource::Jhfrat => JhfratItem::from_key(&f.name)
                .map(|item| items[item.index()])
                .ok_or_else(|| Error::DictionaryMismatch(format!("unknown item {}", f.name))),
            FeatureSource::Ehr => ehr_column(&f.name)
                .map(|i| ehr.as_ref().map_or(0.0, |v| v[i]))
                .ok_or_else(|| Error::DictionaryMismatch(format!("unknown EHR column {}", f.name))),
        })
        .collect()
}

fn ehr_column(name: &str) -> Option<usize> {
    AMPAC_BINS
        .iter()
        .chain(&JHHLM_BINS)
        .chain(&COMORBIDITY_BINS)
        .chain(&SEX_COLUMNS)
        .chain(&RACE_COLUMNS)
        .chain(&SERVICE_COLUMNS)
        .position(|&n| n == name)
}

/// Stacks feature rows for a set of encounters.
pub fn feature_rows<'a>(
    encounters: impl IntoIterator<Item = &'a Encounter>,
    dict: &FeatureDictionary,
) -> Result<(Vec<String>, Array2<f64>)> {
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for e in encounters {
        ids.push(e.id.clone());
        data.extend(feature_row(e, dict)?);
    }
    let x = Array2::from_shape_vec((ids.len(), dict.len()), data)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok((ids, x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub x: Array2<f64>,
    pub y: Vec<bool>,
    pub dictionary: FeatureDictionary,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            x: self.x.select(ndarray::Axis(0), rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            dictionary: self.dictionary.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend(self.dictionary.names().map(str::to_string));
        w.write_record(&header)?;
        for (i, row) in self.x.rows().into_iter().enumerate() {
            let mut record = vec![self.ids[i].clone(), u8::from(self.y[i]).to_string()];
            record.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, dictionary: FeatureDictionary) -> Result<Self> {
        dictionary.validate()?;
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let expected: Vec<&str> = ["id", "label"]
            .into_iter()
            .chain(dictionary.names())
            .collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(Error::DictionaryMismatch(
                "CSV header does not match the feature dictionary".to_string(),
            ));
        }
        let m = dictionary.len();
        let mut ids = Vec::new();
        let mut y = Vec::new();
        let mut data = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            ids.push(record[0].to_string());
            y.push(match &record[1] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::invalid(format!("row {}: label {other:?}", line + 1)))
                }
            });
            for field in record.iter().skip(2) {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::invalid(format!("row {}: value {field:?}", line + 1)))?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("feature row {}", line + 1)));
                }
                data.push(v);
            }
        }
        let x = Array2::from_shape_vec((ids.len(), m), data)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Ok(Self {
            ids,
            x,
            y,
            dictionary,
        })
    }
}

/// Feature matrix over the binary training cohort.
pub fn build_matrix(cohort: &Cohort, augmented: bool) -> Result<FeatureMatrix> {
    let dictionary = FeatureDictionary::for_variant(augmented);
    let (encounters, y): (Vec<&Encounter>, Vec<bool>) =
        cohort.binary().map(|(m, y)| (&m.encounter, y)).unzip();
    if encounters.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let (ids, x) = feature_rows(encounters, &dictionary)?;
    Ok(FeatureMatrix {
        ids,
        x,
        y,
        dictionary,
    })
}

/// Score of the fixed published tool: assessment columns dotted with their points.
pub fn baseline_jhfrat_score(row: ArrayView1<f64>) -> f64 {
    JhfratItem::ALL
        .iter()
        .map(|item| item.points() * row[item.index()])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encounter::fixtures::encounter;
    use crate::encounter::{AssessmentRecord, JhfratItems};

    fn record(day: u32, items: &[JhfratItem]) -> AssessmentRecord {
        AssessmentRecord {
            day,
            items: JhfratItems::from_items(items.iter().copied()),
            jhhlm: None,
            ampac: None,
        }
    }

    #[test]
    fn averages() {
        let mut e = encounter("a", &[0, 0, 0, 0]);
        e.assessments = vec![
            record(1, &[JhfratItem::Impulsive, JhfratItem::FallHistory]),
            record(2, &[JhfratItem::FallHistory]),
            record(3, &[JhfratItem::FallHistory, JhfratItem::Impulsive]),
            record(4, &[JhfratItem::FallHistory]),
        ];
        let avg = average_jhfrat(&e).unwrap();
        assert_eq!(avg[JhfratItem::FallHistory.index()], 1.0);
        assert_eq!(avg[JhfratItem::Impulsive.index()], 0.5);
        assert_eq!(avg[JhfratItem::Age60To69.index()], 0.0);
    }

    #[test]
    fn truncated_fall_encounter_averages_pre_fall_records() {
        let mut e = encounter("f", &[0, 0, 0, 0, 0, 0]);
        e.assessments = vec![
            record(1, &[JhfratItem::UnsteadyGait]),
            record(2, &[]),
            record(3, &[JhfratItem::UnsteadyGait]),
            record(5, &[JhfratItem::UnsteadyGait]),
            record(6, &[JhfratItem::UnsteadyGait]),
        ];
        e.fall_day = Some(5);
        let t = crate::cohort::truncate_at_fall(&e);
        let avg = average_jhfrat(&t).unwrap();
        // manual mean over the three pre-fall records: (1 + 0 + 1) / 3
        assert_eq!(avg[JhfratItem::UnsteadyGait.index()], 2.0 / 3.0);
    }

    #[test]
    fn bin_boundaries() {
        assert_eq!(ampac_bin(25.0), 0);
        assert_eq!(ampac_bin(25.0001), 1);
        assert_eq!(ampac_bin(35.0), 1);
        assert_eq!(ampac_bin(45.0), 2);
        assert_eq!(ampac_bin(45.5), 3);
        assert_eq!(comorbidity_bin(4), 0);
        assert_eq!(comorbidity_bin(5), 1);
        assert_eq!(comorbidity_bin(10), 1);
        assert_eq!(comorbidity_bin(11), 2);
        assert_eq!(jhhlm_bin(3.4), 0);
        assert_eq!(jhhlm_bin(3.5), 1);
        assert_eq!(jhhlm_bin(5.49), 1);
        assert_eq!(jhhlm_bin(5.5), 2);
    }

    #[test]
    fn ehr_one_hots() {
        let mut e = encounter("a", &[0, 0, 0]);
        e.demographics.service = Service::Neurosurgery;
        e.demographics.comorbidity_count = 10;
        e.assessments[0].ampac = Some(20.0);
        e.assessments[1].ampac = Some(30.0);
        e.assessments[2].jhhlm = Some(7);
        let v = bin_ehr(&e).unwrap();
        let dict = FeatureDictionary::augmented();
        let col = |name: &str| v[dict.index_of(name).unwrap() - JhfratItem::COUNT];
        assert_eq!(col("ampac_le_25"), 1.0); // mean 25.0, closed right edge
        assert_eq!(col("ampac_25_35"), 0.0);
        assert_eq!(col("jhhlm_6_8"), 1.0);
        assert_eq!(col("comorbid_5_10"), 1.0);
        assert_eq!(col("service_neurosurgery"), 1.0);
        let services: f64 = SERVICE_COLUMNS.iter().map(|n| col(n)).sum();
        assert_eq!(services, 1.0);
    }

    #[test]
    fn missing_measures_leave_group_empty() {
        let e = encounter("a", &[0, 0, 0]);
        let v = bin_ehr(&e).unwrap();
        assert!(v[..7].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_measures_rejected() {
        let mut e = encounter("a", &[0, 0, 0]);
        e.assessments[0].jhhlm = Some(9);
        assert!(bin_ehr(&e).is_err());
        let mut e = encounter("a", &[0, 0, 0]);
        e.assessments[0].ampac = Some(-1.0);
        assert!(bin_ehr(&e).is_err());
    }

    #[test]
    fn dictionary_sizes_and_hash() {
        assert_eq!(FeatureDictionary::jhfrat_only().len(), 18);
        let aug = FeatureDictionary::augmented();
        assert_eq!(aug.len(), 40);
        aug.validate().unwrap();
        assert_eq!(aug.baseline_coefficients().sum(), 49.0);
        let json = aug.to_json_pretty().unwrap();
        let back: FeatureDictionary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, aug);
        assert_eq!(back.hash(), aug.hash());
        assert_ne!(aug.hash(), FeatureDictionary::jhfrat_only().hash());
    }

    #[test]
    fn baseline_score_examples() {
        let mut row = Array1::<f64>::zeros(18);
        assert_eq!(baseline_jhfrat_score(row.view()), 0.0);
        row[JhfratItem::FallHistory.index()] = 1.0;
        assert_eq!(baseline_jhfrat_score(row.view()), 5.0);
        let mut row = Array1::<f64>::zeros(18);
        row[JhfratItem::RequiresAssistance.index()] = 0.5;
        assert_eq!(baseline_jhfrat_score(row.view()), 1.0);
    }

    #[test]
    fn identical_encounters_identical_rows() {
        let a = encounter("a", &[0, 0, 0]);
        let mut b = a.clone();
        b.id = "b".into();
        let dict = FeatureDictionary::augmented();
        assert_eq!(feature_row(&a, &dict).unwrap(), feature_row(&b, &dict).unwrap());
    }
}
