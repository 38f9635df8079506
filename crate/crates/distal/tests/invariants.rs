use proptest::prelude::*;

use distal::conj_cells::ConjDecomposition;
use distal::decomp::verify;
use distal::families::{build, type_census_1d, Point};
use distal::incidence::{contains_ksu, sum_bb_experiment, BipartiteInstance, Field};
use distal::omin1d::Omin1d;
use distal::padic::{brute_force_atoms, Ball, BallForest};
use distal::scalars::{rat, ratio, valuation, GammaValue, Rat};

fn points(values: &[i64]) -> Vec<Point> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v.into_iter().map(|x| vec![rat(x)]).collect()
}

fn graph() -> impl Strategy<Value = (usize, Vec<Vec<u32>>)> {
    (1usize..9).prop_flat_map(|points| (Just(points), prop::collection::vec(prop::collection::vec(0..points as u32, 0..6), 1..9)))
}

fn has_k22(points: usize, nbrs: &[Vec<u32>]) -> bool {
    let adj = |p: u32, j: usize| nbrs[j].contains(&p);
    (0..points as u32).any(|a| {
        (a + 1..points as u32).any(|b| (0..nbrs.len()).filter(|&j| adj(a, j) && adj(b, j)).count() >= 2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k22_search_matches_pairs((n, nbrs) in graph(), shift in 0usize..8) {
        let inst = BipartiteInstance::new(n, nbrs.clone());
        let found = contains_ksu(&inst, 2, 2).unwrap();
        prop_assert_eq!(found.is_some(), has_k22(n, &nbrs));
        if let Some(w) = &found {
            for &j in &w.params {
                for &p in &w.points {
                    prop_assert!(inst.neighbors[j].contains(&(p as u32)));
                }
            }
        }
        // relabelling points cannot change the answer
        let relabel = |p: u32| ((p as usize + shift) % n) as u32;
        let moved: Vec<Vec<u32>> = nbrs.iter().map(|ps| ps.iter().map(|&p| relabel(p)).collect()).collect();
        prop_assert_eq!(contains_ksu(&BipartiteInstance::new(n, moved), 2, 2).unwrap().is_some(), found.is_some());
    }

    #[test]
    fn x_less_y_cells_equal_types(values in prop::collection::vec(-30i64..30, 1..20)) {
        let family = build::x_less_than_y();
        let params = points(&values);
        let report = verify(&Omin1d::for_family(&family).unwrap(), &family, &params, &[]).unwrap();
        prop_assert!(report.passed());
        prop_assert_eq!(report.cell_count_deduped, type_census_1d(&family, &params).unwrap().count);
        prop_assert_eq!(report.cell_count_deduped, params.len() + 1);
    }

    #[test]
    fn presburger_cells_equal_types(values in prop::collection::vec(-20i64..20, 1..12), k in 2u64..5) {
        let family = build::presburger_basic(k);
        let params = points(&values);
        let report = verify(&ConjDecomposition::new(&family).unwrap(), &family, &params, &[]).unwrap();
        prop_assert!(report.passed());
        prop_assert_eq!(report.cell_count_deduped, type_census_1d(&family, &params).unwrap().count);
    }

    #[test]
    fn valuation_is_multiplicative_and_ultrametric(
        a in (-999i64..999, 1i64..99), b in (-999i64..999, 1i64..99), p in prop::sample::select(vec![3u64, 5, 7])
    ) {
        let (a, b): (Rat, Rat) = (ratio(a.0, a.1), ratio(b.0, b.1));
        let (va, vb) = (valuation(&a, p), valuation(&b, p));
        if let (Some(x), Some(y)) = (va.finite(), vb.finite()) {
            prop_assert_eq!(valuation(&(&a * &b), p), GammaValue::Finite(x + y));
        }
        let vs = valuation(&(&a + &b), p);
        prop_assert!(vs >= va.min(vb));
        if va != vb {
            prop_assert_eq!(vs, va.min(vb));
        }
    }

    #[test]
    fn forest_atoms_match_membership_classes(
        raw in prop::collection::vec((0i64..30, -2i64..3), 1..12), p in prop::sample::select(vec![3u64, 5])
    ) {
        let balls: Vec<Ball> = raw.iter().map(|&(c, r)| Ball::new(rat(c), GammaValue::Finite(r))).collect();
        let forest = BallForest::build(&balls, p);
        let (_, _, classes) = brute_force_atoms(&balls, p);
        prop_assert_eq!(forest.atoms().len(), classes);
        prop_assert!(classes <= 2 * balls.len() + 1);
    }

    #[test]
    fn sum_bb_identity(a in prop::collection::btree_set(-40i64..40, 1..10), b in prop::collection::btree_set(1i64..40, 1..10)) {
        let a: Vec<Rat> = a.into_iter().map(rat).collect();
        let b: Vec<Rat> = b.into_iter().map(rat).collect();
        let r = sum_bb_experiment(&a, &b, Field::Rationals).unwrap();
        prop_assert!(r.identity_holds);
        prop_assert_eq!(r.incidences, a.len() * b.len() * b.len());
    }
}

#[test]
fn verification_is_repeatable() {
    let family = build::x_less_than_y();
    let params = points(&[1, 4, 9]);
    let a = verify(&Omin1d::for_family(&family).unwrap(), &family, &params, &[]).unwrap();
    let b = verify(&Omin1d::for_family(&family).unwrap(), &family, &params, &[]).unwrap();
    assert_eq!(a, b);
}
