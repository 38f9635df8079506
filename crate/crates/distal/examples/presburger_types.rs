//! Conjunction cells for Presburger and ordered vector space families: one
//! cell per realized type, with unrealizable congruence systems certified.

use distal::conj_cells::{check_conjunction_property, ConjDecomposition};
use distal::decomp::verify;
use distal::families::{build, type_census_1d, Point};
use distal::scalars::rat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pts = |v: &[i64]| -> Vec<Point> { v.iter().map(|&x| vec![rat(x)]).collect() };
    for (name, family) in [("x - y mod 3", build::presburger_basic(3)), ("trichotomy", build::trichotomy(1))] {
        let engine = ConjDecomposition::new(&family)?;
        let params = pts(&[0, 1, 5, 9]);
        let report = verify(&engine, &family, &params, &[])?;
        let census = type_census_1d(&family, &params)?;
        println!("{name}: {} cells, {} types, passed {}", report.cell_count_deduped, census.count, report.passed());
    }
    let family = build::presburger_basic(3);
    for outcome in check_conjunction_property(&family, &pts(&[0, 1]))? {
        println!("  {outcome:?}");
    }
    Ok(())
}
