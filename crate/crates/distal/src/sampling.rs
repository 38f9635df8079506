//! Seeded generators for parameter sets and random families, shared by the
//! experiment runner and the test suites.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::arrangement::Affine;
use crate::families::{Bound, Domain, FamilyKind, LinearAtom, ParamFamily, Piece, Point, Predicate, Rel};
use crate::rng::SeededRng;
use crate::scalars::{rat, ratio, Rat};

/// How parameter tuples are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ParamSampler {
    /// Coordinates `k/d` with `|k| ≤ span·n` and `1 ≤ d ≤ den`.
    Rational { span: i64, den: i64 },
    /// Integer coordinates in `[-span·n, span·n]`.
    Integer { span: i64 },
    /// Integers `r + p^k·u` with `k ≤ depth`, `0 ≤ r < p`, `|u| ≤ n`.
    Padic { prime: u64, depth: u32 },
}

impl ParamSampler {
    /// Default sampler for a family's domain.
    pub fn for_domain(domain: Domain) -> ParamSampler {
        match domain {
            Domain::Rationals => ParamSampler::Rational { span: 4, den: 3 },
            Domain::Integers => ParamSampler::Integer { span: 4 },
            Domain::Padic { prime } => ParamSampler::Padic { prime, depth: 4 },
        }
    }

    /// `n` distinct tuples of dimension `dim`.
    pub fn sample(&self, rng: &mut SeededRng, n: usize, dim: usize) -> Vec<Point> {
        let n_i = n as i64 + 1;
        let draw = |rng: &mut SeededRng| -> Rat {
            match *self {
                ParamSampler::Rational { span, den } => ratio(rng.range(-span * n_i, span * n_i), rng.range(1, den.max(1))),
                ParamSampler::Integer { span } => rat(rng.range(-span * n_i, span * n_i)),
                ParamSampler::Padic { prime, depth } => {
                    let k = rng.range(0, depth as i64) as u32;
                    let r = rng.range(0, prime as i64 - 1);
                    rat(r + (prime as i64).pow(k) * rng.range(-n_i, n_i))
                }
            }
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(n);
        let mut misses = 0usize;
        while out.len() < n {
            let p: Point = (0..dim).map(|_| draw(rng)).collect();
            if seen.insert(p.clone()) {
                out.push(p);
            } else {
                misses += 1;
                assert!(misses < 1_000_000, "parameter space too small for {n} distinct tuples");
            }
        }
        out
    }
}

fn aff(k: i64, c: i64) -> Affine {
    Affine::new(vec![rat(k)], rat(c))
}

/// Interval family over `Q` in one scalar parameter: up to `max_preds`
/// predicates, each a union of at most `max_bound` pieces with ends
/// `k·y + c` (`k ∈ {-1, 0, 1, 2}`), possibly unbounded.
pub fn interval_family(rng: &mut SeededRng, max_preds: usize, max_bound: usize) -> ParamFamily {
    let preds = rng.range(1, max_preds as i64) as usize;
    let mut predicates = Vec::with_capacity(preds);
    for _ in 0..preds {
        let pieces = rng.range(1, max_bound as i64) as usize;
        let mut ps = Vec::with_capacity(pieces);
        for _ in 0..pieces {
            let end = |rng: &mut SeededRng| {
                (rng.below(5) > 0).then(|| Bound { at: aff(*rng.pick(&[-1, 0, 1, 1, 2]), rng.range(-4, 4)), closed: rng.coin() })
            };
            ps.push(Piece { lower: end(rng), upper: end(rng) });
        }
        predicates.push(Predicate::Interval { bound: pieces, pieces: ps });
    }
    ParamFamily::new(FamilyKind::Interval, Domain::Rationals, 1, 1, predicates).expect("generated interval family is valid")
}

fn nonzero(rng: &mut SeededRng, lim: i64) -> i64 {
    let v = rng.range(1, lim);
    if rng.coin() {
        -v
    } else {
        v
    }
}

/// Semilinear family in the plane with two parameters: one or two atoms
/// `a·x + y_i·s + c □ 0` with small integer coefficients.
pub fn semilinear_plane_family(rng: &mut SeededRng) -> ParamFamily {
    let count = rng.range(1, 2) as usize;
    let predicates = (0..count)
        .map(|i| {
            let x = vec![rat(nonzero(rng, 2)), rat(rng.range(-2, 2))];
            let mut y = vec![rat(0), rat(0)];
            y[i % 2] = rat(nonzero(rng, 1));
            let rel = *rng.pick(&[Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge]);
            Predicate::Linear { atom: LinearAtom::new(x, y, rat(rng.range(-2, 2)), rel) }
        })
        .collect();
    ParamFamily::new(FamilyKind::Semilinear, Domain::Rationals, 2, 2, predicates).expect("generated semilinear family is valid")
}

fn trichotomy_of(x: Vec<Rat>, y: Vec<Rat>, c: Rat) -> Vec<Predicate> {
    [Rel::Lt, Rel::Eq, Rel::Gt]
        .into_iter()
        .map(|rel| Predicate::Linear { atom: LinearAtom::new(x.clone(), y.clone(), c.clone(), rel) })
        .collect()
}

/// Negation-closed vector-linear family in dimension `d`, one scalar
/// parameter: the trichotomies of one or two forms `a·x − y + c`.
pub fn vector_linear_family(rng: &mut SeededRng, d: usize) -> ParamFamily {
    let forms = rng.range(1, 2);
    let mut predicates = Vec::new();
    for _ in 0..forms {
        let x: Vec<Rat> = (0..d).map(|_| ratio(nonzero(rng, 3), rng.range(1, 2))).collect();
        predicates.extend(trichotomy_of(x, vec![rat(-1)], rat(rng.range(-3, 3))));
    }
    ParamFamily::new(FamilyKind::VectorLinear, Domain::Rationals, d, 1, predicates).expect("generated vector-linear family is valid")
}

/// Negation-closed Presburger family in one variable: the trichotomy of
/// `x − y + c` and every residue class of `K | a·x − y + c'`.
pub fn presburger_family(rng: &mut SeededRng) -> ParamFamily {
    let mut predicates = trichotomy_of(vec![rat(1)], vec![rat(-1)], rat(rng.range(-2, 2)));
    let k = rng.range(2, 4) as u64;
    let a = rat(rng.range(1, 2));
    for c in 0..k as i64 {
        predicates.push(Predicate::Divides { modulus: k, x: vec![a.clone()], y: vec![rat(-1)], c: rat(c) });
    }
    ParamFamily::new(FamilyKind::Congruence, Domain::Integers, 1, 1, predicates).expect("generated Presburger family is valid")
}

/// Macintyre-dialect family over `Q_p`: radius functions `F` and centers `C`
/// (each of size 1 or 2), with `v(f(y)) < v(x − c(y))` for every pair and
/// `P_n(λ(x − c(y)))` for every center and `λ ∈ {1, 2}`.
pub fn macintyre_family(rng: &mut SeededRng, prime: u64, n: u32) -> ParamFamily {
    let fs: Vec<Affine> = (0..rng.range(1, 2)).map(|_| aff(rng.range(0, 2), rng.range(1, 3))).collect();
    let cs: Vec<Affine> = (0..rng.range(1, 2)).map(|_| aff(rng.range(1, 2), rng.range(0, 2))).collect();
    let mut predicates = Vec::new();
    for f in &fs {
        for c in &cs {
            predicates.push(Predicate::ValBall { f: f.clone(), c: c.clone() });
        }
    }
    for c in &cs {
        for lambda in [1, 2] {
            predicates.push(Predicate::Power { lambda: rat(lambda), c: c.clone(), n });
        }
    }
    ParamFamily::new(FamilyKind::ValuationForm, Domain::Padic { prime }, 1, 1, predicates).expect("generated valuation family is valid")
}
