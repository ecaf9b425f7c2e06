use fallrisk::featurize::FeatureDictionary;
use fallrisk::scoring::{categorize, score_differential, score_row, Category};
use fallrisk::solver::{ScoreModel, Thresholds};
use fallrisk::featurize::FeatureMatrix;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn model_with(beta: &[f64]) -> ScoreModel {
    let mut m = ScoreModel::baseline(&FeatureDictionary::jhfrat_only()).unwrap();
    for (c, &b) in m.coefficients.iter_mut().zip(beta) {
        c.beta = b;
    }
    m
}

proptest! {
    #[test]
    fn score_is_the_sum_of_contributions(
        beta in prop::collection::vec(0.0f64..10.0, 18),
        row in prop::collection::vec(0.0f64..=1.0, 18),
    ) {
        let model = model_with(&beta);
        let s = score_row(&model, "r", Array1::from(row.clone()).view()).unwrap();
        let sum: f64 = s.contributions.iter().map(|(_, c)| c).sum();
        prop_assert_eq!(s.score, sum);
        let dot: f64 = beta.iter().zip(&row).map(|(b, x)| b * x).sum();
        prop_assert!((s.score - dot).abs() <= 1e-12 * dot.max(1.0));
        prop_assert_eq!(s.category, categorize(s.score, model.thresholds));
    }

    #[test]
    fn category_is_monotone_in_score(a in -5.0f64..30.0, b in -5.0f64..30.0) {
        let t = Thresholds::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(categorize(lo, t) <= categorize(hi, t));
    }
}

#[test]
fn band_boundaries() {
    let t = Thresholds::default();
    assert_eq!(categorize(5.999, t), Category::Low);
    assert_eq!(categorize(6.0, t), Category::Moderate);
    assert_eq!(categorize(13.0, t), Category::Moderate);
    assert_eq!(categorize(13.001, t), Category::High);
}

#[test]
fn one_extra_point_on_half_the_rows() {
    let dict = FeatureDictionary::jhfrat_only();
    let a = ScoreModel::baseline(&dict).unwrap();
    let mut b = a.clone();
    b.coefficients[0].beta += 1.0;
    let mut x = Array2::zeros((10, 18));
    for i in 0..5 {
        x[[i, 0]] = 1.0;
    }
    let matrix = FeatureMatrix {
        ids: (0..10).map(|i| i.to_string()).collect(),
        x,
        y: vec![false; 10],
        dictionary: dict,
    };
    let diff = score_differential(&a, &b, &matrix).unwrap();
    assert_eq!(diff.summary.mean, -0.5);
    assert_eq!(diff.summary.within_2, 1.0);
    let same = score_differential(&a, &a, &matrix).unwrap();
    assert!(same.deltas.iter().all(|&d| d == 0.0));
    assert_eq!((same.summary.within_2, same.summary.within_5), (1.0, 1.0));
}
