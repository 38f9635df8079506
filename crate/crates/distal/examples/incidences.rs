//! Incidence consequences: a K_{2,2}-free grid sweep and the sum-product
//! counting identities.

use distal::experiment::ZarankiewiczSweep;
use distal::incidence::{sum_bb_experiment, sum_product_experiment, Field};
use distal::scalars::rat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sweep = ZarankiewiczSweep::run(&[16, 32, 64], 4, 1)?;
    for r in &sweep.reports {
        println!("{}: |E| = {}, ratio {:.4}", r.experiment, r.edges, r.ratio);
    }
    println!("growth over the last three sizes: {:.2}%", 100.0 * sweep.growth.unwrap_or(f64::NAN));

    let a: Vec<_> = [1, 2, 4, 8, 16].iter().map(|&v| rat(v)).collect();
    for field in [Field::Rationals, Field::Padic { prime: 5 }] {
        let r = sum_product_experiment(&a, field)?;
        println!(
            "over {}: |A+A| = {}, |A·A| = {}, |E| = {} ≥ |A|³ = {}",
            r.field, r.sum_size, r.product_size, r.incidences, r.lower_bound
        );
    }
    let b: Vec<_> = [1, 3, 5].iter().map(|&v| rat(v)).collect();
    let r = sum_bb_experiment(&a, &b, Field::Rationals)?;
    println!("|A + B·B| = {}, |E| = {} = |A||B|² = {}", r.target_size, r.incidences, r.expected);
    Ok(())
}
