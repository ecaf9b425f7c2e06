//! Feature matrices for both dictionaries, with the published tool's score
//! reproduced from the assessment columns.
//!
//! cargo run --example build_features

use fallrisk::cohort::{build_cohort, LabelingPolicy};
use fallrisk::featurize::{baseline_jhfrat_score, build_matrix};
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let synth = generate(&SynthConfig {
        n_encounters: 2_000,
        ..SynthConfig::default()
    })?;
    let cohort = build_cohort(&synth.encounters, &LabelingPolicy::default())?;
    for augmented in [false, true] {
        let m = build_matrix(&cohort, augmented)?;
        let positives = m.y.iter().filter(|&&y| y).count();
        println!(
            "augmented={augmented}: {} rows x {} columns, {positives} positives, dictionary {}",
            m.n_rows(),
            m.n_features(),
            &m.dictionary.hash()[..12]
        );
    }

    let m = build_matrix(&cohort, true)?;
    let names: Vec<&str> = m.dictionary.names().collect();
    println!("\nfirst row ({}):", m.ids[0]);
    for (name, v) in names.iter().zip(m.x.row(0)) {
        if *v != 0.0 {
            println!("  {name:<28} {v:.3}");
        }
    }
    println!("baseline score of that row: {:.2}", baseline_jhfrat_score(m.x.row(0)));

    let mut csv = Vec::new();
    m.select(&[0, 1, 2]).write_csv(&mut csv)?;
    println!("\nCSV head:\n{}", String::from_utf8_lossy(&csv).lines().next().unwrap_or_default());
    Ok(())
}
