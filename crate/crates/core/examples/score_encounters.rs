//! Scores encounters with a fitted model, explains the top contributions and
//! summarizes the difference from the published tool.
//!
//! cargo run --release --example score_encounters

use fallrisk::cohort::{build_cohort, LabelingPolicy};
use fallrisk::featurize::build_matrix;
use fallrisk::scoring::{score, score_differential, Category};
use fallrisk::solver::{fit, ConstraintSet, FitConfig, ScoreModel};
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let synth = generate(&SynthConfig {
        n_encounters: 5_000,
        ..SynthConfig::default()
    })?;
    let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default())?;
    let m = build_matrix(&cohort, true)?;
    let dict = &m.dictionary;
    let constraints = ConstraintSet::default_chains(dict)?;
    let config = FitConfig::default().with_init(dict.baseline_coefficients().to_vec());
    let model = ScoreModel::from_fit(dict, &constraints, fit(m.x.view(), &m.y, &constraints, &config)?)?;
    let baseline = ScoreModel::baseline(dict)?;

    let scored = score(&model, &m)?;
    for s in scored.iter().take(3) {
        println!("{} score {:.2} ({})", s.id, s.score, s.category.as_str());
        for (name, c) in s.top_contributions(3) {
            println!("    {name:<28} {c:+.2}");
        }
    }
    for cat in Category::ALL {
        let n = scored.iter().filter(|s| s.category == cat).count();
        println!("{:<9} {n}", cat.as_str());
    }

    let diff = score_differential(&model, &baseline, &m)?;
    let d = diff.summary;
    println!(
        "fitted - published over {} encounters: mean {:+.2}, sd {:.2}, within ±2 {:.1}%, within ±5 {:.1}%",
        d.n, d.mean, d.sd, 100.0 * d.within_2, 100.0 * d.within_5
    );

    let mut json = Vec::new();
    model.write_json(&mut json)?;
    let reloaded = ScoreModel::read_json(json.as_slice())?;
    println!("model JSON round trip identical: {}", reloaded == model);
    Ok(())
}
