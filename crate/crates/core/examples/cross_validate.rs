//! Stratified cross-validation of the fitted score against the published
//! tool, including the category concordance tables.
//!
//! cargo run --release --example cross_validate -- [folds] [seed]

use fallrisk::cohort::{build_cohort, LabelingPolicy};
use fallrisk::evaluate::{evaluate, EvalConfig};
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let mut args = std::env::args().skip(1);
    let folds = args.next().map_or(5, |s| s.parse().expect("folds"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let synth = generate(&SynthConfig {
        n_encounters: 10_000,
        seed,
        ..SynthConfig::default()
    })?;
    let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default())?;
    let eval = evaluate(
        &cohort,
        &EvalConfig {
            folds,
            seed,
            ..EvalConfig::default()
        },
    )?;
    let cv = &eval.report.cross_validation;
    println!("fold  n_test  fitted_auc  baseline_auc");
    for f in &cv.folds {
        println!("{:>4}  {:>6}  {:>10.4}  {:>12.4}", f.fold, f.n_test, f.fitted.auc_roc, f.baseline.auc_roc);
    }
    for (name, s) in [("fitted", &cv.fitted), ("baseline", &cv.baseline)] {
        println!(
            "{name:<8} AUC-ROC {:.4} ± {:.4}  AUC-PR {:.4} ± {:.4}  TPR@6 {:.3}  FPR@6 {:.3}  TPR@13 {:.3}  FPR@13 {:.3}",
            s.auc_roc.mean, s.auc_roc.sd, s.auc_pr.mean, s.auc_pr.sd,
            s.tpr_low.mean, s.fpr_low.mean, s.tpr_high.mean, s.fpr_high.mean
        );
    }
    for (name, c) in [("fitted", &eval.report.concordance.fitted), ("baseline", &eval.report.concordance.baseline)] {
        println!("\n{name} bands (non-fall encounters, row % by labeled group):");
        for row in &c.non_fall.rows {
            println!(
                "  {:<9} n={:<6} low {:>5.1}  moderate {:>5.1}  high {:>5.1}",
                row.label.as_str(), row.total, row.percent[0], row.percent[1], row.percent[2]
            );
        }
    }
    Ok(())
}
