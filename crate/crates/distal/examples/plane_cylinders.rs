//! Cylindrical cells in the plane for a semilinear family, built by stacking
//! one-dimensional fiber cells over a decomposition of the projection.

use distal::decomp::{verify, Decomposition};
use distal::dim_induction::{grid_probes, intersection_probes, Induction};
use distal::families::{Domain, FamilyKind, LinearAtom, ParamFamily, Predicate, Rel};
use distal::scalars::rat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // x1 + x2 < y1 and x1 - x2 >= y2
    let family = ParamFamily::new(
        FamilyKind::Semilinear,
        Domain::Rationals,
        2,
        2,
        vec![
            Predicate::Linear { atom: LinearAtom::new(vec![rat(1), rat(1)], vec![rat(-1), rat(0)], rat(0), Rel::Lt) },
            Predicate::Linear { atom: LinearAtom::new(vec![rat(1), rat(-1)], vec![rat(0), rat(-1)], rat(0), Rel::Ge) },
        ],
    )?;
    let engine = Induction::for_family(&family)?;
    for n in [1usize, 2, 3, 4] {
        let params: Vec<_> = (0..n as i64).map(|i| vec![rat(3 * i - 2), rat(2 - 2 * i)]).collect();
        let mut probes = grid_probes(21);
        probes.extend(intersection_probes(&family, &params));
        let report = verify(&engine, &family, &params, &probes)?;
        println!(
            "|B| = {n}: {} cells, census {}, passed {}",
            report.cell_count_raw, report.census_lower_bound, report.passed()
        );
    }
    let params = vec![vec![rat(0), rat(0)]];
    for cell in engine.instantiate(&params)? {
        println!("  {}", cell.shape.describe());
    }
    Ok(())
}
