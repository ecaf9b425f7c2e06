//! Relabels and refits across high-intensity thresholds and reports how the
//! coefficient shares move.
//!
//! cargo run --release --example threshold_sweep

use fallrisk::evaluate::{sensitivity_sweep, SweepConfig};
use fallrisk::synth::{generate, SynthConfig};

fn main() -> fallrisk::Result<()> {
    let synth = generate(&SynthConfig {
        n_encounters: 8_000,
        ..SynthConfig::default()
    })?;
    let sweep = sensitivity_sweep(&synth.encounters, &SweepConfig::default())?;
    for p in &sweep.points {
        println!(
            "threshold {}: {} low, {} high, {} indeterminate, {} iterations",
            p.high_threshold, p.counts.low, p.counts.high, p.counts.indeterminate, p.fit.iterations
        );
    }
    let mut stability = sweep.across_cohorts.clone();
    stability.sort_by(|a, b| b.range().total_cmp(&a.range()));
    println!("\nlargest share ranges across thresholds:");
    for s in stability.iter().take(8) {
        println!("  {:<28} {:.3}..{:.3} (sd {:.4})", s.name, s.min, s.max, s.sd);
    }
    Ok(())
}
