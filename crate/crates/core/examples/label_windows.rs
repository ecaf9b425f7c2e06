//! Window labeling of hand-written day sequences, then a full cohort build.
//!
//! cargo run --example label_windows

use fallrisk::cohort::{build_cohort, label_days, padded_windows, LabelingPolicy};
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let policy = LabelingPolicy::default();
    let sequences: [&[u32]; 5] = [
        &[0, 0, 1, 0, 0, 0],
        &[3, 2, 4, 2, 3, 2],
        &[0, 0, 0, 5, 6, 7, 6],
        &[0, 4, 0, 4, 0, 4],
        &[2],
    ];
    for days in sequences {
        if let Err(e) = padded_windows(days, &policy) {
            println!("{days:?} -> rejected: {e}");
            continue;
        }
        let sums: Vec<u32> = padded_windows(days, &policy)?.iter().map(|w| w.sum).collect();
        let label = label_days(days, &policy)?;
        println!("{days:?} windows {sums:?} -> {}", label.label);
        for run in &label.evidence {
            println!("    {:?} run over days {}..={} ({} days)", run.kind, run.start_day, run.end_day, run.span_days);
        }
    }

    let synth = generate(&SynthConfig {
        n_encounters: 3_000,
        ..SynthConfig::default()
    })?;
    let cohort = build_cohort(&synth.encounters, &policy)?;
    println!("\nexclusions:");
    for (reason, count) in &cohort.exclusions.0 {
        println!("  {:<28} {count}", reason.as_str());
    }
    let c = cohort.counts;
    println!(
        "{} low, {} high-labeled, {} promoted by fall matching, {} indeterminate",
        c.low, c.high_labeled, c.promoted, c.indeterminate
    );
    for m in cohort.matches.matches.iter().take(3) {
        println!("  fall {} pattern {:?} matched {:?}", m.fall_encounter_id, m.pattern, m.matched_ids);
    }
    Ok(())
}
