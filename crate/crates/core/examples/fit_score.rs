//! Fits the constrained score on one cohort, checks optimality and prints
//! the coefficients next to the published points.
//!
//! cargo run --release --example fit_score -- [lambda]

use fallrisk::cohort::{build_cohort, LabelingPolicy};
use fallrisk::featurize::build_matrix;
use fallrisk::solver::{fit, ConstraintSet, FitConfig, ScoreModel};
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let lambda = std::env::args().nth(1).map_or(0.5, |s| s.parse().expect("lambda"));
    let synth = generate(&SynthConfig {
        n_encounters: 8_000,
        ..SynthConfig::default()
    })?;
    let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default())?;
    let m = build_matrix(&cohort, true)?;
    let dict = &m.dictionary;
    let constraints = ConstraintSet::default_chains(dict)?;
    let config = FitConfig::default()
        .with_lambda(lambda)
        .with_init(dict.baseline_coefficients().to_vec());

    let result = fit(m.x.view(), &m.y, &constraints, &config)?;
    let meta = &result.metadata;
    println!(
        "{} iterations, stop {:?}, objective {:.6}, projected gradient {:.2e}",
        meta.iterations, meta.stop_reason, meta.objective, meta.projected_gradient
    );
    println!(
        "KKT: stationarity {:.2e}, feasibility {:.2e}, complementarity {:.2e}",
        meta.kkt.stationarity, meta.kkt.primal_feasibility, meta.kkt.complementary_slackness
    );
    for w in &meta.warnings {
        println!("warning: {w}");
    }

    let model = ScoreModel::from_fit(dict, &constraints, result)?;
    let baseline = dict.baseline_coefficients();
    println!("\n{:<28} {:>8} {:>8}", "feature", "fitted", "points");
    for (c, b) in model.coefficients.iter().zip(baseline.iter()) {
        println!("{:<28} {:>8.3} {:>8.1}", c.name, c.beta, b);
    }
    let violation = constraints.max_violation(model.beta().view());
    println!("largest ordering violation {violation:.2e}");
    Ok(())
}
