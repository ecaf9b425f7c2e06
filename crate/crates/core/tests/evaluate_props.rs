mod common;

use fallrisk::cohort::{build_cohort, LabelingPolicy};
use fallrisk::evaluate::{
    auc_roc, concordance_table, cross_validate, evaluate, stratified_kfold, threshold_confusion, Cut, EvalConfig,
    RiskGroup,
};
use fallrisk::featurize::build_matrix;
use fallrisk::scoring::Category;
use fallrisk::solver::{ConstraintSet, FitConfig, ScoreModel};
use fallrisk::synth::{generate, SynthConfig};
use proptest::prelude::*;

fn labeled_scores(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..12, any::<bool>()), 2..max)
        .prop_filter("both classes", |v| v.iter().any(|p| p.1) && v.iter().any(|p| !p.1))
        .prop_map(|v| (v.iter().map(|p| p.0 as f64).collect(), v.iter().map(|p| p.1).collect()))
}

proptest! {
    #[test]
    fn auc_survives_increasing_transforms((scores, y) in labeled_scores(60), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        let base = auc_roc(&scores, &y).unwrap();
        let affine: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let cubic: Vec<f64> = scores.iter().map(|s| (s - 4.0).powi(3) + s.exp()).collect();
        prop_assert!((auc_roc(&affine, &y).unwrap() - base).abs() <= 1e-12);
        prop_assert!((auc_roc(&cubic, &y).unwrap() - base).abs() <= 1e-12);
    }

    #[test]
    fn auc_matches_pair_counting((scores, y) in labeled_scores(50)) {
        prop_assert!((auc_roc(&scores, &y).unwrap() - common::pair_auc(&scores, &y)).abs() <= 1e-12);
    }

    #[test]
    fn confusion_rates_fall_as_the_cut_rises((scores, y) in labeled_scores(80), t in 0.0f64..12.0, dt in 0.0f64..5.0) {
        for cut in [|t| Cut::AtLeast(t), |t| Cut::Above(t)] {
            let lo = threshold_confusion(&scores, &y, cut(t)).unwrap();
            let hi = threshold_confusion(&scores, &y, cut(t + dt)).unwrap();
            prop_assert!(hi.tpr <= lo.tpr && hi.fpr <= lo.fpr);
            prop_assert_eq!(lo.tp + lo.fp + lo.tn + lo.fn_, y.len());
        }
    }

    #[test]
    fn concordance_conserves_strata(cells in prop::collection::vec((0usize..3, 0usize..3, any::<bool>()), 0..200)) {
        let cats: Vec<Category> = cells.iter().map(|c| Category::ALL[c.0]).collect();
        let groups: Vec<RiskGroup> = cells.iter().map(|c| RiskGroup::ALL[c.1]).collect();
        let falls: Vec<bool> = cells.iter().map(|c| c.2).collect();
        let table = concordance_table(&cats, &groups, &falls).unwrap();
        let n_fall = falls.iter().filter(|&&f| f).count();
        prop_assert_eq!(table.fall.total(), n_fall);
        prop_assert_eq!(table.non_fall.total(), cells.len() - n_fall);
        for row in table.fall.rows.iter().chain(&table.non_fall.rows) {
            prop_assert_eq!(row.counts.iter().sum::<usize>(), row.total);
        }
    }

    #[test]
    fn folds_are_stratified_and_reproducible(y in prop::collection::vec(any::<bool>(), 10..300), k in 2usize..8, seed in any::<u64>()) {
        let a = stratified_kfold(&y, k, seed).unwrap();
        prop_assert_eq!(&a, &stratified_kfold(&y, k, seed).unwrap());
        for class in [true, false] {
            let mut sizes = vec![0usize; k];
            for (f, _) in a.iter().zip(&y).filter(|(_, &v)| v == class) {
                sizes[*f] += 1;
            }
            let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(max - min <= 1);
        }
    }
}

#[test]
fn cross_validation_is_deterministic() {
    let synth = generate(&SynthConfig {
        n_encounters: 3000,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default()).unwrap();
    let m = build_matrix(&cohort, true).unwrap();
    let constraints = ConstraintSet::default_chains(&m.dictionary).unwrap();
    let baseline = ScoreModel::baseline(&m.dictionary).unwrap();
    let config = FitConfig::default().with_init(m.dictionary.baseline_coefficients().to_vec());
    let a = cross_validate(&m, &constraints, &config, &baseline, 5, 42).unwrap();
    let b = cross_validate(&m, &constraints, &config, &baseline, 5, 42).unwrap();
    assert_eq!(a, b);

    let ea = evaluate(&cohort, &EvalConfig::default()).unwrap();
    let eb = evaluate(&cohort, &EvalConfig::default()).unwrap();
    let (mut ja, mut jb) = (Vec::new(), Vec::new());
    ea.report.write_json(&mut ja).unwrap();
    eb.report.write_json(&mut jb).unwrap();
    assert_eq!(ja, jb);
    let r = &ea.report.cross_validation;
    for s in [&r.fitted, &r.baseline] {
        assert!((0.0..=1.0).contains(&s.auc_roc.mean) && (0.0..=1.0).contains(&s.pooled_auc_roc));
    }
    let c = &ea.report.concordance.fitted;
    assert_eq!(c.fall.total() + c.non_fall.total(), cohort.members.len());
}
