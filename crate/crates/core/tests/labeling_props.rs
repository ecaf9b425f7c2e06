mod common;

use fallrisk::cohort::{apply_exclusions, build_cohort, label_days, padded_windows, Label, LabelingPolicy};
use fallrisk::synth::{generate, SynthConfig};
use proptest::prelude::*;

fn days_strategy(max_len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(prop_oneof![3 => 0u32..=1, 2 => 0u32..=8], 2..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn raising_a_day_never_moves_toward_low(days in days_strategy(21), pick in any::<prop::sample::Index>(), bump in 1u32..4) {
        let policy = LabelingPolicy::default();
        let before = label_days(&days, &policy).unwrap().label;
        let mut raised = days.clone();
        raised[pick.index(days.len())] += bump;
        let after = label_days(&raised, &policy).unwrap().label;
        prop_assert!(after >= before, "{:?}: {} -> {}", days, before, after);
    }

    #[test]
    fn matches_brute_force(days in days_strategy(10), high in 2u32..10) {
        let policy = LabelingPolicy::default().with_high_threshold(high);
        let got = label_days(&days, &policy).unwrap().label;
        prop_assert_eq!(got, common::brute_force_label(&days, policy.low_max_per_window, high));
    }

    #[test]
    fn every_day_is_covered(days in days_strategy(21)) {
        let windows = padded_windows(&days, &LabelingPolicy::default()).unwrap();
        prop_assert_eq!(windows.len(), days.len());
        for d in 1..=days.len() as u32 {
            prop_assert!(windows.iter().any(|w| w.first_day <= d && d <= w.last_day));
        }
    }

    #[test]
    fn evidence_supports_the_label(days in days_strategy(21)) {
        let policy = LabelingPolicy::default();
        let label = label_days(&days, &policy).unwrap();
        let need = days.len().div_ceil(2) as u32;
        prop_assert!(label.evidence.iter().all(|r| r.span_days >= need));
        match label.label {
            Label::Low | Label::High => prop_assert!(!label.evidence.is_empty()),
            Label::Indeterminate => {}
        }
    }
}

#[test]
fn exclusion_tally_is_conserved() {
    for seed in 1..=3 {
        let synth = generate(&SynthConfig {
            n_encounters: 2000,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let (kept, tally) = apply_exclusions(&synth.encounters);
        assert_eq!(kept.len() + tally.total(), synth.encounters.len());
        let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default()).unwrap();
        assert_eq!(cohort.counts.total(), kept.len());
        assert_eq!(cohort.members.len(), kept.len());
    }
}

#[test]
fn labeling_is_deterministic() {
    let synth = generate(&SynthConfig {
        n_encounters: 3000,
        seed: 9,
        ..SynthConfig::default()
    })
    .unwrap();
    let a = build_cohort(&synth.encounters, &LabelingPolicy::default()).unwrap();
    let b = build_cohort(&synth.encounters, &LabelingPolicy::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn quiet_cohort_is_all_low() {
    let encounters: Vec<_> = (0..50)
        .map(|i| common::encounter(&format!("Q{i:03}"), &vec![0; 3 + i % 10]))
        .collect();
    let cohort = build_cohort(&encounters, &LabelingPolicy::default()).unwrap();
    assert_eq!(cohort.counts.low, 50);
    assert_eq!(cohort.counts.high + cohort.counts.indeterminate, 0);
}

#[test]
fn indeterminate_is_the_remainder_across_thresholds() {
    let synth = generate(&SynthConfig {
        n_encounters: 3000,
        seed: 4,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut highs = Vec::new();
    for t in 4..=8 {
        let c = build_cohort(&synth.encounters, &LabelingPolicy::default().with_high_threshold(t)).unwrap();
        assert_eq!(c.counts.indeterminate, c.members.len() - c.counts.low - c.counts.high);
        highs.push(c.counts.high);
    }
    assert!(highs.windows(2).all(|w| w[1] <= w[0]), "{highs:?}");
}
