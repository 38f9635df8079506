//! Balls in Q_3: the inclusion forest, its atoms, and the decomposition of a
//! Macintyre-style family.

use std::sync::Arc;

use distal::arrangement::Affine;
use distal::decomp::{verify, Decomposition};
use distal::families::{build, Domain, FamilyKind, ParamFamily, Predicate};
use distal::padic::{Ball, BallForest, PadicDecomposition};
use distal::scalars::{rat, valuation, GammaValue};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 3;
    println!("v_3(18) = {}, v_3(0) = {}", valuation(&rat(18), p), valuation(&rat(0), p));

    let balls = [
        Ball::new(rat(0), GammaValue::Finite(0)),
        Ball::new(rat(0), GammaValue::Finite(1)),
        Ball::new(rat(1), GammaValue::Finite(1)),
        Ball::point(rat(9)),
    ];
    let forest = BallForest::build(&balls, p);
    println!("{} balls, {} Hasse edges, {} atoms", forest.len(), forest.edge_count(), forest.atoms().len());

    let y = build::affine1(1, 0);
    let family = Arc::new(ParamFamily::new(
        FamilyKind::ValuationForm,
        Domain::Padic { prime: p },
        1,
        1,
        vec![
            Predicate::ValBall { f: Affine::constant(1, rat(1)), c: y.clone() },
            Predicate::Power { lambda: rat(1), c: y.clone(), n: 2 },
        ],
    )?);
    let engine = PadicDecomposition::new(family.clone())?;
    let params: Vec<_> = [0, 1, 4, 10].iter().map(|&v| vec![rat(v)]).collect();
    let report = verify(&engine, &family, &params, &[])?;
    let widest = engine.instantiate(&params)?.iter().map(|c| c.descriptor.arity()).max().unwrap_or(0);
    println!(
        "{} cells, passed {}, descriptors use at most {widest} parameters",
        report.cell_count_deduped,
        report.passed()
    );
    Ok(())
}
