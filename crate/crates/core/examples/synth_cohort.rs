//! Generates a synthetic cohort and prints a few marginal rates.
//!
//! cargo run --release --example synth_cohort -- [n_encounters] [seed]

use fallrisk::encounter::JhfratItem;
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(5_000, |s| s.parse().expect("n_encounters"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let synth = generate(&SynthConfig {
        n_encounters: n,
        seed,
        ..SynthConfig::default()
    })?;
    let encounters = &synth.encounters;

    let days: usize = encounters.iter().map(|e| e.daily_targeted.len()).sum();
    let falls = encounters.iter().filter(|e| e.has_fall()).count();
    println!("{n} encounters, {days} patient-days, {falls} falls ({:.2} per 1000 days)", 1000.0 * falls as f64 / days as f64);

    let first_items = |item| {
        encounters
            .iter()
            .filter(|e| e.assessments.first().is_some_and(|a| a.items.contains(item)))
            .count() as f64
            / n as f64
    };
    for item in [JhfratItem::Age80Plus, JhfratItem::RequiresAssistance, JhfratItem::UnsteadyGait, JhfratItem::FallHistory] {
        println!("  first assessment with {:<22} {:.3}", item.key(), first_items(item));
    }
    let mean_targeted: f64 = encounters.iter().map(|e| e.mean_daily_targeted()).sum::<f64>() / n as f64;
    println!("mean daily targeted interventions {mean_targeted:.2}");

    let mut stdout = std::io::stdout().lock();
    println!("first three truth rows:");
    let mut truth = Vec::new();
    synth.write_truth_csv(&mut truth)?;
    use std::io::Write;
    for line in String::from_utf8_lossy(&truth).lines().take(4) {
        writeln!(stdout, "  {line}")?;
    }
    Ok(())
}
