//! Weak risk labels from targeted-intervention time series.
//!
//! Encounters pass the exclusion rules, are cut back to the days before a
//! first fall, and are labeled Low / High / Indeterminate from runs of
//! overlapping day windows. High-risk fall encounters then pull up to three
//! Indeterminate look-alikes into the High class.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encounter::Encounter;
use crate::error::{Error, Result};

/// Minimum fraction of the stay that a qualifying run must cover, as a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StretchFraction {
    pub numerator: u32,
    pub denominator: u32,
}

impl StretchFraction {
    pub const HALF: StretchFraction = StretchFraction {
        numerator: 1,
        denominator: 2,
    };

    /// `ceil(fraction * days)` in exact integer arithmetic.
    pub fn required_days(self, days: usize) -> usize {
        let num = self.numerator as u64 * days as u64;
        num.div_ceil(self.denominator as u64) as usize
    }
}

/// What to do when an encounter satisfies both the Low and the High criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictRule {
    /// Neither label is consistent over the stay; report it as Indeterminate.
    #[default]
    Indeterminate,
    /// Fail with [`Error::InvariantViolation`].
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingPolicy {
    pub low_max_per_window: u32,
    pub high_min_per_window: u32,
    pub window_days: usize,
    pub stretch_fraction: StretchFraction,
    pub edge_doubling: bool,
    #[serde(default)]
    pub on_conflict: ConflictRule,
}

impl Default for LabelingPolicy {
    fn default() -> Self {
        Self {
            low_max_per_window: 1,
            high_min_per_window: 6,
            window_days: 3,
            stretch_fraction: StretchFraction::HALF,
            edge_doubling: true,
            on_conflict: ConflictRule::Indeterminate,
        }
    }
}

impl LabelingPolicy {
    pub fn with_high_threshold(mut self, high_min_per_window: u32) -> Self {
        self.high_min_per_window = high_min_per_window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.low_max_per_window >= self.high_min_per_window {
            return Err(Error::invalid(format!(
                "low_max_per_window ({}) must be below high_min_per_window ({})",
                self.low_max_per_window, self.high_min_per_window
            )));
        }
        if self.window_days == 0 {
            return Err(Error::invalid("window_days must be >= 1"));
        }
        let f = self.stretch_fraction;
        if f.denominator == 0 || f.numerator == 0 || f.numerator > f.denominator {
            return Err(Error::invalid(format!(
                "stretch fraction {}/{} must lie in (0, 1]",
                f.numerator, f.denominator
            )));
        }
        Ok(())
    }
}

/// Summed targeted count over one window, with the original days it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSum {
    pub first_day: u32,
    pub last_day: u32,
    pub sum: u32,
}

/// Sliding windows over the day sequence, optionally with the first and last
/// day doubled so edge days take part in as many windows as interior ones.
pub fn padded_windows(daily_targeted: &[u32], policy: &LabelingPolicy) -> Result<Vec<WindowSum>> {
    if daily_targeted.is_empty() {
        return Err(Error::invalid("day sequence is empty"));
    }
    if policy.window_days == 0 {
        return Err(Error::invalid("window_days must be >= 1"));
    }
    let n = daily_targeted.len();
    // (original 1-based day, count) for each padded position; a lone day is
    // both first and last, so it is doubled once
    let padded: Vec<(u32, u32)> = if policy.edge_doubling && n == 1 {
        vec![(1, daily_targeted[0]); 2]
    } else if policy.edge_doubling {
        std::iter::once((1, daily_targeted[0]))
            .chain(daily_targeted.iter().enumerate().map(|(i, &c)| (i as u32 + 1, c)))
            .chain(std::iter::once((n as u32, daily_targeted[n - 1])))
            .collect()
    } else {
        daily_targeted
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u32 + 1, c))
            .collect()
    };
    if padded.len() < policy.window_days {
        return Err(Error::invalid(format!(
            "{n}-day sequence yields no full {}-day window",
            policy.window_days
        )));
    }
    Ok(padded
        .windows(policy.window_days)
        .map(|w| WindowSum {
            first_day: w[0].0,
            last_day: w[w.len() - 1].0,
            sum: w.iter().map(|&(_, c)| c).sum(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Low,
    Indeterminate,
    High,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Low => "low",
            Label::Indeterminate => "indeterminate",
            Label::High => "high",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Low,
    High,
}

/// A maximal run of consecutive qualifying windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRun {
    pub kind: RunKind,
    pub start_day: u32,
    pub end_day: u32,
    pub span_days: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskLabel {
    pub label: Label,
    pub evidence: Vec<WindowRun>,
}

fn qualifying_runs(
    windows: &[WindowSum],
    kind: RunKind,
    required_days: usize,
    qualifies: impl Fn(u32) -> bool,
) -> Vec<WindowRun> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < windows.len() {
        if !qualifies(windows[i].sum) {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < windows.len() && qualifies(windows[i + 1].sum) {
            i += 1;
        }
        // window day ranges are contiguous and ordered, so the union is one interval
        let start_day = windows[start].first_day;
        let end_day = windows[start..=i].iter().map(|w| w.last_day).max().unwrap_or(start_day);
        let span = end_day - start_day + 1;
        if span as usize >= required_days {
            runs.push(WindowRun {
                kind,
                start_day,
                end_day,
                span_days: span,
            });
        }
        i += 1;
    }
    runs
}

pub fn label_encounter(encounter: &Encounter, policy: &LabelingPolicy) -> Result<RiskLabel> {
    label_days(&encounter.daily_targeted, policy)
        .map_err(|e| match e {
            Error::InvariantViolation(msg) => {
                Error::InvariantViolation(format!("{}: {msg}", encounter.id))
            }
            other => other,
        })
}

/// Labels a bare day sequence; see [`label_encounter`].
pub fn label_days(daily_targeted: &[u32], policy: &LabelingPolicy) -> Result<RiskLabel> {
    policy.validate()?;
    let windows = padded_windows(daily_targeted, policy)?;
    let required = policy.stretch_fraction.required_days(daily_targeted.len());
    let low = qualifying_runs(&windows, RunKind::Low, required, |s| {
        s <= policy.low_max_per_window
    });
    let high = qualifying_runs(&windows, RunKind::High, required, |s| {
        s >= policy.high_min_per_window
    });
    let label = match (low.is_empty(), high.is_empty()) {
        (false, true) => Label::Low,
        (true, false) => Label::High,
        (true, true) => Label::Indeterminate,
        (false, false) => match policy.on_conflict {
            ConflictRule::Indeterminate => Label::Indeterminate,
            ConflictRule::Error => {
                return Err(Error::InvariantViolation(
                    "both the low and the high criterion hold".to_string(),
                ))
            }
        },
    };
    let mut evidence = low;
    evidence.extend(high);
    Ok(RiskLabel { label, evidence })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    TooShort,
    TooLong,
    EarlyFall,
    LateFall,
    TooFewAssessments,
}

impl ExclusionReason {
    pub const ALL: [ExclusionReason; 5] = [
        ExclusionReason::TooShort,
        ExclusionReason::TooLong,
        ExclusionReason::EarlyFall,
        ExclusionReason::LateFall,
        ExclusionReason::TooFewAssessments,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::TooShort => "too_short",
            ExclusionReason::TooLong => "too_long",
            ExclusionReason::EarlyFall => "early_fall",
            ExclusionReason::LateFall => "late_fall",
            ExclusionReason::TooFewAssessments => "too_few_assessments",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionCriteria {
    pub min_days: u32,
    pub max_days: u32,
    pub min_assessments: usize,
    pub earliest_fall_day: u32,
    pub latest_fall_day: u32,
}

impl Default for ExclusionCriteria {
    fn default() -> Self {
        Self {
            min_days: 2,
            max_days: 21,
            min_assessments: 3,
            earliest_fall_day: 3,
            latest_fall_day: 21,
        }
    }
}

/// Count of excluded encounters per reason; every reason is always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionTally(pub BTreeMap<ExclusionReason, usize>);

impl Default for ExclusionTally {
    fn default() -> Self {
        Self(ExclusionReason::ALL.iter().map(|&r| (r, 0)).collect())
    }
}

impl ExclusionTally {
    pub fn get(&self, reason: ExclusionReason) -> usize {
        self.0.get(&reason).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["reason", "count"])?;
        for reason in ExclusionReason::ALL {
            w.write_record([reason.as_str(), &self.get(reason).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cuts a fall encounter back to the days strictly before its fall.
pub fn truncate_at_fall(encounter: &Encounter) -> Encounter {
    let Some(fall_day) = encounter.fall_day else {
        return encounter.clone();
    };
    if encounter.truncated_at_fall {
        return encounter.clone();
    }
    let keep = (fall_day as usize).saturating_sub(1).min(encounter.daily_targeted.len());
    let mut out = encounter.clone();
    out.admit_length_days = keep as u32;
    out.daily_targeted.truncate(keep);
    out.daily_nontargeted.truncate(keep);
    out.assessments.retain(|a| a.day < fall_day);
    out.truncated_at_fall = true;
    out
}

fn exclusion_reason(e: &Encounter, criteria: &ExclusionCriteria) -> Option<ExclusionReason> {
    if e.admit_length_days < criteria.min_days {
        return Some(ExclusionReason::TooShort);
    }
    if e.admit_length_days > criteria.max_days {
        return Some(ExclusionReason::TooLong);
    }
    if let Some(day) = e.fall_day {
        if day < criteria.earliest_fall_day {
            return Some(ExclusionReason::EarlyFall);
        }
        if day > criteria.latest_fall_day {
            return Some(ExclusionReason::LateFall);
        }
    }
    None
}

/// Applies the stay-length, fall-day and assessment-count rules.
///
/// Fall encounters are truncated before the assessment count is checked, so
/// every kept encounter carries at least `min_assessments` usable records.
pub fn apply_exclusions(encounters: &[Encounter]) -> (Vec<Encounter>, ExclusionTally) {
    apply_exclusions_with(encounters, &ExclusionCriteria::default())
}

pub fn apply_exclusions_with(
    encounters: &[Encounter],
    criteria: &ExclusionCriteria,
) -> (Vec<Encounter>, ExclusionTally) {
    let mut tally = ExclusionTally::default();
    let mut kept = Vec::with_capacity(encounters.len());
    for e in encounters {
        if let Some(reason) = exclusion_reason(e, criteria) {
            *tally.0.entry(reason).or_default() += 1;
            continue;
        }
        let e = truncate_at_fall(e);
        if e.assessments.len() < criteria.min_assessments {
            *tally.0.entry(ExclusionReason::TooFewAssessments).or_default() += 1;
            continue;
        }
        kept.push(e);
    }
    (kept, tally)
}

/// Indeterminate encounters matched to one high-risk fall encounter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallMatch {
    pub fall_encounter_id: String,
    pub pattern: Vec<u32>,
    pub matched_ids: Vec<String>,
    pub shared_kinds: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub matches: Vec<FallMatch>,
    pub diagnostics: Vec<String>,
}

pub const MAX_MATCHES_PER_FALL: usize = 3;

fn kinds_in<'a>(days: impl Iterator<Item = &'a BTreeSet<String>>) -> BTreeSet<&'a str> {
    days.flat_map(|set| set.iter().map(String::as_str)).collect()
}

/// Pairs every high-risk fall encounter with up to three Indeterminate
/// encounters showing the same pre-fall targeted-count pattern.
///
/// Candidates are ranked by how many non-targeted intervention kinds their
/// matching window shares with the pre-fall window, then by id. Fall
/// encounters are processed in id order and a candidate is matched at most once.
pub fn match_fall_encounters(
    high_fall: &[&Encounter],
    indeterminate: &[&Encounter],
    policy: &LabelingPolicy,
) -> MatchOutcome {
    let width = policy.window_days;
    let mut outcome = MatchOutcome::default();
    let mut falls: Vec<&Encounter> = high_fall.to_vec();
    falls.sort_by(|a, b| a.id.cmp(&b.id));
    let mut pool: Vec<&Encounter> = indeterminate.to_vec();
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    let mut taken: HashSet<&str> = HashSet::new();

    for fall in falls {
        let Some(fall_day) = fall.fall_day else {
            outcome
                .diagnostics
                .push(format!("{}: no fall day, skipped", fall.id));
            continue;
        };
        // pre-fall window covers days fall_day - width ..= fall_day - 1
        let end = fall_day as usize - 1;
        if end < width || end > fall.daily_targeted.len() {
            outcome.diagnostics.push(format!(
                "{}: fewer than {width} days before the fall, skipped",
                fall.id
            ));
            continue;
        }
        let start = end - width;
        let pattern = &fall.daily_targeted[start..end];
        let fall_kinds = kinds_in(fall.daily_nontargeted[start..end].iter());

        let mut ranked: Vec<(usize, &str)> = pool
            .iter()
            .filter(|c| !taken.contains(c.id.as_str()))
            .filter_map(|c| {
                c.daily_targeted
                    .windows(width)
                    .enumerate()
                    .filter(|(_, w)| *w == pattern)
                    .map(|(s, _)| {
                        let kinds = kinds_in(c.daily_nontargeted[s..s + width].iter());
                        kinds.intersection(&fall_kinds).count()
                    })
                    .max()
                    .map(|shared| (shared, c.id.as_str()))
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        ranked.truncate(MAX_MATCHES_PER_FALL);
        if ranked.is_empty() {
            continue;
        }
        for (_, id) in &ranked {
            taken.insert(id);
        }
        outcome.matches.push(FallMatch {
            fall_encounter_id: fall.id.clone(),
            pattern: pattern.to_vec(),
            matched_ids: ranked.iter().map(|(_, id)| id.to_string()).collect(),
            shared_kinds: ranked.iter().map(|(s, _)| *s).collect(),
        });
    }
    outcome
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortRole {
    Low,
    High,
    /// Indeterminate by its own windows, promoted by fall matching.
    Promoted,
    Indeterminate,
}

impl CohortRole {
    /// Binary training label; `None` for encounters outside the binary cohort.
    pub fn target(self) -> Option<bool> {
        match self {
            CohortRole::Low => Some(false),
            CohortRole::High | CohortRole::Promoted => Some(true),
            CohortRole::Indeterminate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledEncounter {
    pub encounter: Encounter,
    pub label: RiskLabel,
    pub role: CohortRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_to: Option<String>,
}

impl LabeledEncounter {
    pub fn validate(&self) -> Result<()> {
        self.encounter.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortCounts {
    pub low: usize,
    /// High-labeled plus promoted matches.
    pub high: usize,
    pub high_labeled: usize,
    pub promoted: usize,
    pub indeterminate: usize,
}

impl CohortCounts {
    pub fn total(&self) -> usize {
        self.low + self.high + self.indeterminate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub policy: LabelingPolicy,
    pub members: Vec<LabeledEncounter>,
    pub counts: CohortCounts,
    pub exclusions: ExclusionTally,
    pub matches: MatchOutcome,
}

impl Cohort {
    /// Members of the binary training cohort with their targets.
    pub fn binary(&self) -> impl Iterator<Item = (&LabeledEncounter, bool)> {
        self.members
            .iter()
            .filter_map(|m| m.role.target().map(|y| (m, y)))
    }

    pub fn indeterminate(&self) -> impl Iterator<Item = &LabeledEncounter> {
        self.members
            .iter()
            .filter(|m| m.role == CohortRole::Indeterminate)
    }

    /// Reassembles a cohort from labeled members, recomputing the counts.
    pub fn from_members(
        policy: LabelingPolicy,
        members: Vec<LabeledEncounter>,
        exclusions: ExclusionTally,
        matches: MatchOutcome,
    ) -> Self {
        let counts = count_roles(&members);
        Self {
            policy,
            members,
            counts,
            exclusions,
            matches,
        }
    }
}

fn count_roles(members: &[LabeledEncounter]) -> CohortCounts {
    let mut counts = CohortCounts::default();
    for m in members {
        match m.role {
            CohortRole::Low => counts.low += 1,
            CohortRole::High => {
                counts.high += 1;
                counts.high_labeled += 1;
            }
            CohortRole::Promoted => {
                counts.high += 1;
                counts.promoted += 1;
            }
            CohortRole::Indeterminate => counts.indeterminate += 1,
        }
    }
    counts
}

/// Exclusions, labeling and fall matching in one pass.
pub fn build_cohort(encounters: &[Encounter], policy: &LabelingPolicy) -> Result<Cohort> {
    policy.validate()?;
    let (kept, exclusions) = apply_exclusions(encounters);
    let labels: Vec<RiskLabel> = kept
        .par_iter()
        .map(|e| label_encounter(e, policy))
        .collect::<Result<_>>()?;

    let high_fall: Vec<&Encounter> = kept
        .iter()
        .zip(&labels)
        .filter(|(e, l)| l.label == Label::High && e.has_fall())
        .map(|(e, _)| e)
        .collect();
    let indeterminate: Vec<&Encounter> = kept
        .iter()
        .zip(&labels)
        .filter(|(_, l)| l.label == Label::Indeterminate)
        .map(|(e, _)| e)
        .collect();
    let matches = match_fall_encounters(&high_fall, &indeterminate, policy);
    let promoted: BTreeMap<&str, &str> = matches
        .matches
        .iter()
        .flat_map(|m| {
            m.matched_ids
                .iter()
                .map(move |id| (id.as_str(), m.fall_encounter_id.as_str()))
        })
        .collect();

    let members: Vec<LabeledEncounter> = kept
        .iter()
        .zip(labels)
        .map(|(e, label)| {
            let matched_to = promoted.get(e.id.as_str()).map(|s| s.to_string());
            let role = match (label.label, &matched_to) {
                (Label::Low, _) => CohortRole::Low,
                (Label::High, _) => CohortRole::High,
                (Label::Indeterminate, Some(_)) => CohortRole::Promoted,
                (Label::Indeterminate, None) => CohortRole::Indeterminate,
            };
            LabeledEncounter {
                encounter: e.clone(),
                label,
                role,
                matched_to,
            }
        })
        .collect();

    let cohort = Cohort::from_members(*policy, members, exclusions, matches);
    if cohort.counts.low + cohort.counts.high == 0 {
        return Err(Error::EmptyCohort);
    }
    Ok(cohort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encounter::fixtures::encounter;
    use crate::encounter::AssessmentRecord;

    fn policy() -> LabelingPolicy {
        LabelingPolicy::default()
    }

    fn sums(days: &[u32]) -> Vec<u32> {
        padded_windows(days, &policy())
            .unwrap()
            .iter()
            .map(|w| w.sum)
            .collect()
    }

    #[test]
    fn padded_window_examples() {
        assert_eq!(sums(&[0, 0, 0, 0]), vec![0, 0, 0, 0]);
        assert_eq!(sums(&[2, 0, 1]), vec![4, 3, 2]);
        let w = padded_windows(&[2, 0, 1], &policy()).unwrap();
        assert_eq!((w[0].first_day, w[0].last_day), (1, 2));
        assert_eq!((w[1].first_day, w[1].last_day), (1, 3));
        assert_eq!((w[2].first_day, w[2].last_day), (2, 3));
        assert!(padded_windows(&[5], &policy()).is_err());
        assert!(padded_windows(&[], &policy()).is_err());
    }

    #[test]
    fn windows_without_edge_doubling() {
        let p = LabelingPolicy {
            edge_doubling: false,
            ..policy()
        };
        let w = padded_windows(&[1, 2, 3, 4], &p).unwrap();
        assert_eq!(w.iter().map(|w| w.sum).collect::<Vec<_>>(), vec![6, 9]);
    }

    #[test]
    fn labels_for_flat_sequences() {
        let low = label_days(&[0; 6], &policy()).unwrap();
        assert_eq!(low.label, Label::Low);
        assert_eq!(
            low.evidence,
            vec![WindowRun {
                kind: RunKind::Low,
                start_day: 1,
                end_day: 6,
                span_days: 6
            }]
        );
        assert_eq!(label_days(&[3; 6], &policy()).unwrap().label, Label::High);
    }

    #[test]
    fn split_sequence_satisfies_both_and_is_indeterminate() {
        // low run covers days 1-3, high run covers days 3-6; each reaches ceil(6/2)
        let label = label_days(&[0, 0, 0, 4, 4, 4], &policy()).unwrap();
        assert_eq!(label.label, Label::Indeterminate);
        assert_eq!(label.evidence.len(), 2);
        assert_eq!((label.evidence[0].start_day, label.evidence[0].end_day), (1, 3));
        assert_eq!((label.evidence[1].start_day, label.evidence[1].end_day), (3, 6));

        let strict = LabelingPolicy {
            on_conflict: ConflictRule::Error,
            ..policy()
        };
        assert!(matches!(
            label_days(&[0, 0, 0, 4, 4, 4], &strict),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn neither_criterion_is_indeterminate() {
        // every window sums to 2 or 3: too many for low, too few for high
        let label = label_days(&[1, 1, 1, 1, 1, 1], &policy()).unwrap();
        assert_eq!(label.label, Label::Indeterminate);
        assert!(label.evidence.is_empty());
    }

    #[test]
    fn short_run_does_not_qualify() {
        // 8 days need 4 covered days; only days 1-2 carry low windows
        let label = label_days(&[0, 0, 2, 2, 2, 2, 2, 2], &policy()).unwrap();
        assert_eq!(label.label, Label::High);
    }

    #[test]
    fn invalid_policy_rejected() {
        let p = LabelingPolicy {
            low_max_per_window: 6,
            ..policy()
        };
        assert!(label_days(&[0, 0], &p).is_err());
        assert_eq!(StretchFraction::HALF.required_days(7), 4);
        assert_eq!(StretchFraction::HALF.required_days(6), 3);
    }

    fn with_assessments(mut e: Encounter, days: &[u32]) -> Encounter {
        e.assessments = days
            .iter()
            .map(|&day| AssessmentRecord {
                day,
                items: Default::default(),
                jhhlm: None,
                ampac: None,
            })
            .collect();
        e
    }

    #[test]
    fn exclusion_examples() {
        let short = encounter("short", &[0]);
        let boundary = with_assessments(encounter("boundary", &[0; 21]), &[1, 2, 3]);
        let long = encounter("long", &[0; 22]);
        let mut early = encounter("early", &[0; 5]);
        early.fall_day = Some(2);
        let few = with_assessments(encounter("few", &[0; 4]), &[1, 2]);

        let input = vec![short, boundary.clone(), long, early, few];
        let (kept, tally) = apply_exclusions(&input);
        assert_eq!(kept, vec![boundary]);
        assert_eq!(tally.get(ExclusionReason::TooShort), 1);
        assert_eq!(tally.get(ExclusionReason::TooLong), 1);
        assert_eq!(tally.get(ExclusionReason::EarlyFall), 1);
        assert_eq!(tally.get(ExclusionReason::TooFewAssessments), 1);
        assert_eq!(input.len(), kept.len() + tally.total());
    }

    #[test]
    fn fall_truncation_keeps_pre_fall_days() {
        let mut e = with_assessments(encounter("f", &[1, 2, 3, 4, 5, 6]), &[1, 2, 3, 4, 5, 6]);
        e.fall_day = Some(5);
        let (kept, _) = apply_exclusions(&[e]);
        let t = &kept[0];
        assert_eq!(t.admit_length_days, 4);
        assert_eq!(t.daily_targeted, vec![1, 2, 3, 4]);
        assert_eq!(t.assessments.len(), 4);
        assert!(t.truncated_at_fall);
        t.validate().unwrap();
    }

    #[test]
    fn late_fall_excluded() {
        let mut e = with_assessments(encounter("late", &[0; 21]), &[1, 2, 3]);
        e.fall_day = Some(21);
        let (kept, _) = apply_exclusions(&[e.clone()]);
        assert_eq!(kept.len(), 1);
        // a day-22 fall cannot occur inside a 21-day stay, so widen the stay limit
        let criteria = ExclusionCriteria {
            max_days: 30,
            ..Default::default()
        };
        let mut e = with_assessments(encounter("late", &[0; 25]), &[1, 2, 3]);
        e.fall_day = Some(22);
        let (_, tally) = apply_exclusions_with(&[e], &criteria);
        assert_eq!(tally.get(ExclusionReason::LateFall), 1);
    }

    fn with_kinds(mut e: Encounter, kinds: &[&[&str]]) -> Encounter {
        e.daily_nontargeted = kinds
            .iter()
            .map(|day| day.iter().map(|s| s.to_string()).collect())
            .collect();
        e
    }

    #[test]
    fn unique_exact_match() {
        let mut fall = encounter("fall", &[5, 2, 3, 2, 9]);
        fall.fall_day = Some(5);
        let fall = truncate_at_fall(&fall);
        let hit = encounter("hit", &[0, 2, 3, 2, 0]);
        let miss = encounter("miss", &[2, 3, 1, 2, 3]);
        let out = match_fall_encounters(&[&fall], &[&hit, &miss], &policy());
        assert_eq!(out.matches.len(), 1);
        assert_eq!(out.matches[0].pattern, vec![2, 3, 2]);
        assert_eq!(out.matches[0].matched_ids, vec!["hit".to_string()]);
    }

    #[test]
    fn ranking_by_shared_kinds() {
        let all: &[&str] = &["a", "b", "c", "d"];
        let mut fall = with_kinds(
            encounter("fall", &[1, 1, 1, 0]),
            &[&["a", "b"], &["c"], &["d"], &[]],
        );
        fall.fall_day = Some(4);
        let fall = truncate_at_fall(&fall);
        let cands = [
            with_kinds(encounter("c1", &[1, 1, 1]), &[all, &[], &[]]),
            with_kinds(encounter("c2", &[1, 1, 1]), &[&["a"], &["b", "c"], &["d"]]),
            with_kinds(encounter("c3", &[1, 1, 1]), &[&["a", "b", "c"], &[], &[]]),
            with_kinds(encounter("c4", &[1, 1, 1]), &[&["a"], &["b"], &[]]),
            with_kinds(encounter("c5", &[1, 1, 1]), &[&["x"], &[], &[]]),
        ];
        let refs: Vec<&Encounter> = cands.iter().rev().collect();
        let out = match_fall_encounters(&[&fall], &refs, &policy());
        assert_eq!(out.matches[0].matched_ids, vec!["c1", "c2", "c3"]);
        assert_eq!(out.matches[0].shared_kinds, vec![4, 4, 3]);
    }

    #[test]
    fn empty_pool_and_short_prefall() {
        let mut fall = encounter("fall", &[1, 1, 1, 1]);
        fall.fall_day = Some(4);
        let fall = truncate_at_fall(&fall);
        assert!(match_fall_encounters(&[&fall], &[], &policy()).matches.is_empty());

        let mut early = encounter("early", &[1, 1, 1, 1]);
        early.fall_day = Some(3);
        let early = truncate_at_fall(&early);
        let cand = encounter("c", &[1, 1, 1]);
        let out = match_fall_encounters(&[&early], &[&cand], &policy());
        assert!(out.matches.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn all_zero_cohort_is_low() {
        let encounters: Vec<Encounter> = (0..5)
            .map(|i| encounter(&format!("e{i}"), &[0, 0, 0, 0]))
            .collect();
        let cohort = build_cohort(&encounters, &policy()).unwrap();
        assert_eq!(cohort.counts.low, 5);
        assert_eq!(cohort.counts.high + cohort.counts.indeterminate, 0);
    }

    #[test]
    fn empty_cohort_is_an_error() {
        let encounters = vec![encounter("x", &[1, 1, 1, 1])];
        assert!(matches!(
            build_cohort(&encounters, &policy()),
            Err(Error::EmptyCohort)
        ));
    }

    #[test]
    fn promotion_moves_match_into_high() {
        let mut fall = encounter("a_fall", &[2, 2, 2, 2, 2, 2, 0]);
        fall.fall_day = Some(7);
        let look_alike = encounter("b_cand", &[1, 1, 1, 2, 2, 2, 1, 1, 1, 1]);
        let low = encounter("c_low", &[0, 0, 0, 0]);
        let cohort = build_cohort(&[fall, look_alike, low], &policy()).unwrap();
        assert_eq!(cohort.counts.high_labeled, 1);
        assert_eq!(cohort.counts.promoted, 1);
        assert_eq!(cohort.counts.high, 2);
        assert_eq!(cohort.counts.low, 1);
        let cand = cohort.members.iter().find(|m| m.encounter.id == "b_cand").unwrap();
        assert_eq!(cand.role, CohortRole::Promoted);
        assert_eq!(cand.matched_to.as_deref(), Some("a_fall"));
    }
}
