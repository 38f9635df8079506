//! One-dimensional decomposition of `{x < y}` and an interval family over Q.

use distal::decomp::{verify, Decomposition};
use distal::families::{build, Point};
use distal::omin1d::Omin1d;
use distal::scalars::{fmt_rat, rat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = build::x_less_than_y();
    let engine = Omin1d::for_family(&family)?;
    let params: Vec<Point> = [0, 2, 5].iter().map(|&v| vec![rat(v)]).collect();
    for cell in engine.instantiate(&params)? {
        println!("{:<28} {}", cell.descriptor.to_string(), cell.shape.describe());
    }
    let report = verify(&engine, &family, &params, &[])?;
    println!(
        "covered {} uncrossed {} cells {} census {}",
        report.covered, report.uncrossed, report.cell_count_deduped, report.census_lower_bound
    );

    // two predicates, the second a union of two intervals
    let family = build::interval(vec![
        (1, vec![(Some((1, -1, true)), Some((1, 1, false)))]),
        (2, vec![(None, Some((2, 0, false))), (Some((1, 3, true)), None)]),
    ]);
    let engine = Omin1d::for_family(&family)?;
    let params: Vec<Point> = [-3, 0, 1, 4].iter().map(|&v| vec![rat(v)]).collect();
    let report = verify(&engine, &family, &params, &[])?;
    let b: Vec<String> = params.iter().map(|p| fmt_rat(&p[0])).collect();
    println!("B = {{{}}}: {} cells, passed {}", b.join(", "), report.cell_count_deduped, report.passed());
    Ok(())
}
