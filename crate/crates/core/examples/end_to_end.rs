//! Synthetic cohort through labeling, cross-validated fitting and the
//! threshold sweep, printing the headline comparisons.
//!
//! cargo run --release --example end_to_end -- [n_encounters] [seed]

use std::time::Instant;

use fallrisk::cohort::{build_cohort, LabelingPolicy};
use fallrisk::evaluate::{evaluate, sensitivity_sweep, EvalConfig, SweepConfig};
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(20_000, |s| s.parse().expect("n_encounters"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let start = Instant::now();

    let synth = generate(&SynthConfig {
        n_encounters: n,
        seed,
        ..SynthConfig::default()
    })?;
    let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default())?;
    let c = cohort.counts;
    println!(
        "cohort: {} low, {} high ({} by windows, {} matched), {} indeterminate, {} excluded",
        c.low,
        c.high,
        c.high_labeled,
        c.promoted,
        c.indeterminate,
        cohort.exclusions.total()
    );

    let eval = evaluate(
        &cohort,
        &EvalConfig {
            seed,
            ..EvalConfig::default()
        },
    )?;
    let cv = &eval.report.cross_validation;
    println!(
        "AUC-ROC fitted {:.4} ± {:.4} (pooled {:.4}), baseline {:.4} ± {:.4} (pooled {:.4})",
        cv.fitted.auc_roc.mean,
        cv.fitted.auc_roc.sd,
        cv.fitted.pooled_auc_roc,
        cv.baseline.auc_roc.mean,
        cv.baseline.auc_roc.sd,
        cv.baseline.pooled_auc_roc
    );
    println!(
        "AUC-PR  fitted {:.4} ± {:.4}, baseline {:.4} ± {:.4}",
        cv.fitted.auc_pr.mean, cv.fitted.auc_pr.sd, cv.baseline.auc_pr.mean, cv.baseline.auc_pr.sd
    );
    println!(
        "rank correlation, mean assessment score vs mean daily targeted: {:.3}",
        eval.report.spearman_jhfrat_vs_targeted
    );
    let d = &eval.report.differential;
    println!(
        "differential fitted - baseline: mean {:.2}, within ±2 {:.1}%, within ±5 {:.1}%",
        d.mean,
        100.0 * d.within_2,
        100.0 * d.within_5
    );
    println!("final coefficients:");
    for (c, share) in eval.report.final_model.coefficients.iter().zip(eval.report.final_model.shares()) {
        println!("  {:<30} {:>7.3} ({:>5.1}%)", c.name, c.beta, 100.0 * share);
    }

    let sweep = sensitivity_sweep(
        &synth.encounters,
        &SweepConfig {
            seed,
            ..SweepConfig::default()
        },
    )?;
    for p in &sweep.points {
        println!(
            "threshold {}: {} low, {} high, {} indeterminate",
            p.high_threshold, p.counts.low, p.counts.high, p.counts.indeterminate
        );
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
