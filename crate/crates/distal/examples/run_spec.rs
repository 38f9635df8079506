//! Loads an experiment spec and prints its shatter table and assertions.
//! Usage: `cargo run --example run_spec -- docs/specs/presburger-mod3.json`

use distal::experiment::{run_experiment, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/specs/omin1d-x-less-y.json").to_string()
    });
    let spec = ExperimentSpec::from_json(&std::fs::read_to_string(path)?)?;
    let outcome = run_experiment(&spec, None, 1)?;
    for row in &outcome.shatter.rows {
        println!("n = {:>4}: max cells {}", row.n, row.max_deduped);
    }
    println!("slope {:.4}, expected exponent {}", outcome.summary.slope, outcome.summary.expected_exponent);
    for a in &outcome.summary.assertions {
        println!("  {} {}: {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail);
    }
    Ok(())
}
