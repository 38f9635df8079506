//! Decompositions for conjunction-closed families: every cell is a conjunction
//! of family members, one canonical parameter per predicate, so cells and
//! realizable types are in bijection.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arrangement::{cylindrical_probes, Affine, Cut, Interval};
use crate::decomp::{
    check_distinct, CellInstance, CellShape, DecompError, Decomposition, Descriptor, Instantiation, IntervalLocator,
    Locator,
};
use crate::families::{
    check_params, exact_line_probes, Domain, Evaluator, FamilyKind, Landmarks, LinearAtom, ParamFamily, Point,
    Predicate, Rel,
};
use crate::scalars::{ceil_int, floor_int, fmt_point, Rat};

pub fn negate_rel(r: Rel) -> Rel {
    match r {
        Rel::Lt => Rel::Ge,
        Rel::Le => Rel::Gt,
        Rel::Eq => Rel::Ne,
        Rel::Ne => Rel::Eq,
        Rel::Ge => Rel::Lt,
        Rel::Gt => Rel::Le,
    }
}

/// One instantiated literal `φ(x; b)` or its negation, as a condition on `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    /// `form(x) rel 0`.
    Sign { form: Affine, rel: Rel },
    /// `modulus | form(x)` when `divides`, otherwise its negation.
    Divisible { form: Affine, modulus: u64, divides: bool },
}

impl Literal {
    /// The literal `φ(x; b)` for a vector-linear or congruence predicate.
    pub fn of(pred: &Predicate, b: &[Rat]) -> Result<Literal, DecompError> {
        match pred {
            Predicate::Linear { atom } => Ok(Literal::Sign { form: atom.at_param(b), rel: atom.rel }),
            Predicate::Divides { modulus, x, y, c } => Ok(Literal::Divisible {
                form: LinearAtom::new(x.clone(), y.clone(), c.clone(), Rel::Eq).at_param(b),
                modulus: *modulus,
                divides: true,
            }),
            _ => Err(DecompError::Unsupported("conjunction cells need linear or divisibility atoms".into())),
        }
    }

    pub fn negate(&self) -> Literal {
        match self {
            Literal::Sign { form, rel } => Literal::Sign { form: form.clone(), rel: negate_rel(*rel) },
            Literal::Divisible { form, modulus, divides } => {
                Literal::Divisible { form: form.clone(), modulus: *modulus, divides: !divides }
            }
        }
    }

    pub fn holds(&self, x: &[Rat]) -> bool {
        match self {
            Literal::Sign { form, rel } => rel.test(&form.eval(x)),
            Literal::Divisible { form, modulus, divides } => {
                let v = form.eval(x);
                let d = v.is_integer() && v.numer().mod_floor(&BigInt::from(*modulus)).is_zero();
                d == *divides
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Sign { form, rel } => write!(f, "{form} {} 0", rel.symbol()),
            Literal::Divisible { form, modulus, divides } => {
                write!(f, "{modulus} {} {form}", if *divides { "|" } else { "∤" })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Strength {
    Zero,
    Strict,
    Weak,
}

/// `coeffs·x + constant (=|<|≤) 0`.
#[derive(Debug, Clone)]
struct Constraint {
    coeffs: Vec<Rat>,
    constant: Rat,
    strength: Strength,
}

impl Constraint {
    fn trivially_ok(&self) -> bool {
        match self.strength {
            Strength::Zero => self.constant.is_zero(),
            Strength::Strict => self.constant.is_negative(),
            Strength::Weak => !self.constant.is_positive(),
        }
    }
}

/// Fourier–Motzkin with strictness tracking; exact over an ordered field.
fn fm_feasible(mut cons: Vec<Constraint>, dim: usize) -> bool {
    // equalities first: solve and substitute
    while let Some(pos) = cons.iter().position(|c| c.strength == Strength::Zero) {
        let eq = cons.swap_remove(pos);
        let Some(i) = eq.coeffs.iter().position(|a| !a.is_zero()) else {
            if !eq.constant.is_zero() {
                return false;
            }
            continue;
        };
        let pivot = eq.coeffs[i].clone();
        for c in cons.iter_mut() {
            if c.coeffs[i].is_zero() {
                continue;
            }
            let k = &c.coeffs[i] / &pivot;
            for j in 0..dim {
                let d = &k * &eq.coeffs[j];
                c.coeffs[j] -= d;
            }
            c.constant -= &k * &eq.constant;
        }
    }
    for var in 0..dim {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for c in cons {
            match c.coeffs[var].cmp(&Rat::zero()) {
                Ordering::Greater => pos.push(c),
                Ordering::Less => neg.push(c),
                Ordering::Equal => rest.push(c),
            }
        }
        for p in &pos {
            for n in &neg {
                let sp = Rat::one() / &p.coeffs[var];
                let sn = Rat::one() / -&n.coeffs[var];
                let coeffs = (0..dim).map(|j| &p.coeffs[j] * &sp + &n.coeffs[j] * &sn).collect();
                let strict = p.strength == Strength::Strict || n.strength == Strength::Strict;
                rest.push(Constraint {
                    coeffs,
                    constant: &p.constant * &sp + &n.constant * &sn,
                    strength: if strict { Strength::Strict } else { Strength::Weak },
                });
            }
        }
        cons = rest;
    }
    cons.iter().all(Constraint::trivially_ok)
}

fn sign_constraints(form: &Affine, rel: Rel) -> Vec<Vec<Constraint>> {
    let mk = |neg: bool, strength| {
        let f = if neg { form.scale(&-Rat::one()) } else { form.clone() };
        Constraint { coeffs: f.coeffs, constant: f.constant, strength }
    };
    match rel {
        Rel::Lt => vec![vec![mk(false, Strength::Strict)]],
        Rel::Le => vec![vec![mk(false, Strength::Weak)]],
        Rel::Eq => vec![vec![mk(false, Strength::Zero)]],
        Rel::Ge => vec![vec![mk(true, Strength::Weak)]],
        Rel::Gt => vec![vec![mk(true, Strength::Strict)]],
        Rel::Ne => vec![vec![mk(false, Strength::Strict)], vec![mk(true, Strength::Strict)]],
    }
}

/// Whether the conjunction of `lits` is realizable in `domain^dim`.
pub fn feasible(lits: &[Literal], domain: Domain, dim: usize) -> Result<bool, DecompError> {
    match domain {
        Domain::Rationals => {
            let mut branches: Vec<Vec<Constraint>> = vec![Vec::new()];
            for l in lits {
                let Literal::Sign { form, rel } = l else {
                    return Err(DecompError::Unsupported("divisibility over the rationals".into()));
                };
                let alts = sign_constraints(form, *rel);
                branches = branches
                    .into_iter()
                    .flat_map(|b| {
                        alts.iter().map(move |alt| {
                            let mut nb = b.clone();
                            nb.extend(alt.iter().cloned());
                            nb
                        })
                    })
                    .collect();
            }
            Ok(branches.into_iter().any(|b| fm_feasible(b, dim)))
        }
        Domain::Integers if dim == 1 => Ok(integer_feasible(lits)),
        Domain::Integers => Err(DecompError::Unsupported("integer feasibility in dimension above 1".into())),
        Domain::Padic { .. } => Err(DecompError::Unsupported("conjunction cells over p-adic fields".into())),
    }
}

fn integer_feasible(lits: &[Literal]) -> bool {
    let (mut lo, mut hi): (Option<BigInt>, Option<BigInt>) = (None, None);
    let mut avoid: Vec<BigInt> = Vec::new();
    let mut residues: Vec<(BigInt, BigInt, u64, bool)> = Vec::new();
    let raise = |cur: &mut Option<BigInt>, v: BigInt| {
        if cur.as_ref().is_none_or(|c| v > *c) {
            *cur = Some(v)
        }
    };
    let lower = |cur: &mut Option<BigInt>, v: BigInt| {
        if cur.as_ref().is_none_or(|c| v < *c) {
            *cur = Some(v)
        }
    };
    for l in lits {
        match l {
            Literal::Sign { form, rel } => {
                let a = &form.coeffs[0];
                if a.is_zero() {
                    if !rel.test(&form.constant) {
                        return false;
                    }
                    continue;
                }
                // x (rel') t with rel' flipped for negative slope
                let t = -&form.constant / a;
                let rel = if a.is_negative() { flip(*rel) } else { *rel };
                match rel {
                    Rel::Lt => lower(&mut hi, ceil_int(&t) - 1),
                    Rel::Le => lower(&mut hi, floor_int(&t)),
                    Rel::Gt => raise(&mut lo, floor_int(&t) + 1),
                    Rel::Ge => raise(&mut lo, ceil_int(&t)),
                    Rel::Eq => {
                        if !t.is_integer() {
                            return false;
                        }
                        raise(&mut lo, t.to_integer());
                        lower(&mut hi, t.to_integer());
                    }
                    Rel::Ne => {
                        if t.is_integer() {
                            avoid.push(t.to_integer());
                        }
                    }
                }
            }
            Literal::Divisible { form, modulus, divides } => {
                let (a, k) = (&form.coeffs[0], &form.constant);
                if !a.is_integer() || !k.is_integer() {
                    // a non-integral constant is never divisible; such inputs do not arise from integer parameters
                    if *divides {
                        return false;
                    }
                    continue;
                }
                residues.push((a.to_integer(), k.to_integer(), *modulus, *divides));
            }
        }
    }
    if let (Some(l), Some(h)) = (&lo, &hi) {
        if l > h {
            return false;
        }
    }
    let period: u64 = residues.iter().fold(1u64, |acc, r| acc.lcm(&r.2));
    let ok_residue = |x: &BigInt| {
        residues.iter().all(|(a, k, m, d)| ((a * x + k).mod_floor(&BigInt::from(*m)).is_zero()) == *d)
    };
    let classes: Vec<u64> = (0..period).filter(|r| ok_residue(&BigInt::from(*r))).collect();
    if classes.is_empty() {
        return false;
    }
    let per = BigInt::from(period);
    let slack = avoid.len() as u64 + 1;
    for r in classes {
        let r = BigInt::from(r);
        // first few members of the class inside [lo, hi]
        let start = match (&lo, &hi) {
            (Some(l), _) => l + (&r - l).mod_floor(&per),
            (None, Some(h)) => h - (h - &r).mod_floor(&per) - &per * BigInt::from(slack - 1),
            (None, None) => r.clone(),
        };
        for i in 0..slack {
            let x = &start + &per * BigInt::from(i);
            if lo.as_ref().is_some_and(|l| x < *l) || hi.as_ref().is_some_and(|h| x > *h) {
                continue;
            }
            if !avoid.contains(&x) {
                return true;
            }
        }
    }
    false
}

fn flip(r: Rel) -> Rel {
    match r {
        Rel::Lt => Rel::Gt,
        Rel::Le => Rel::Ge,
        Rel::Gt => Rel::Lt,
        Rel::Ge => Rel::Le,
        other => other,
    }
}

/// `φ(M;b) ⊆ φ'(M;b')` as literal sets.
pub fn literal_subset(a: &Literal, b: &Literal, domain: Domain, dim: usize) -> Result<bool, DecompError> {
    Ok(!feasible(&[a.clone(), b.negate()], domain, dim)?)
}

/// Key that orders the true literals of one predicate in a type by inclusion
/// (smaller key, smaller set); equal sets get equal keys.
fn inclusion_key(lit: &Literal, domain: Domain) -> Rat {
    let Literal::Sign { form, rel } = lit else {
        return Rat::zero();
    };
    if form.coeffs.iter().all(Zero::is_zero) {
        return Rat::zero();
    }
    match domain {
        Domain::Integers if form.coeffs.len() == 1 => {
            // x ≤ s or x ≥ s after clearing the slope
            let a = &form.coeffs[0];
            let t = -&form.constant / a;
            let rel = if a.is_negative() { flip(*rel) } else { *rel };
            match rel {
                Rel::Lt => Rat::from_integer(ceil_int(&t) - 1),
                Rel::Le => Rat::from_integer(floor_int(&t)),
                Rel::Gt => -Rat::from_integer(floor_int(&t) + 1),
                Rel::Ge => -Rat::from_integer(ceil_int(&t)),
                _ => Rat::zero(),
            }
        }
        _ => match rel {
            Rel::Lt | Rel::Le => -form.constant.clone(),
            Rel::Gt | Rel::Ge => form.constant.clone(),
            _ => Rat::zero(),
        },
    }
}

/// A chosen literal of a conjunction cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Choice {
    pub predicate: usize,
    pub param_index: usize,
    pub param: Point,
    pub literal: Literal,
}

/// `⋀_{φ ∈ Φ''} φ(x; b_φ)`.
#[derive(Debug, Clone)]
pub struct ConjCell {
    family: Arc<ParamFamily>,
    pub chosen: Vec<Choice>,
    witness: Option<Point>,
}

impl ConjCell {
    pub fn new(family: Arc<ParamFamily>, chosen: Vec<Choice>, witness: Option<Point>) -> ConjCell {
        ConjCell { family, chosen, witness }
    }

    fn literals(&self) -> Vec<Literal> {
        self.chosen.iter().map(|c| c.literal.clone()).collect()
    }

    fn feasible_with(&self, extra: Literal) -> bool {
        let mut lits = self.literals();
        lits.push(extra);
        feasible(&lits, self.family.domain, self.family.point_dim).unwrap_or(false)
    }

    pub fn descriptor(&self) -> Descriptor {
        let phis: Vec<String> = self.chosen.iter().map(|c| c.predicate.to_string()).collect();
        Descriptor::new(format!("conj{{{}}}", phis.join(",")), self.chosen.iter().map(|c| c.param_index).collect())
    }

    pub fn instance(self) -> CellInstance {
        CellInstance::new(self.descriptor(), Arc::new(self))
    }

    /// Order constraints of a one-dimensional cell as an interval.
    fn order_hull(&self) -> Option<Interval> {
        if self.family.point_dim != 1 {
            return None;
        }
        let mut iv = Interval::full();
        for c in &self.chosen {
            let Literal::Sign { form, rel } = &c.literal else { continue };
            let a = &form.coeffs[0];
            if a.is_zero() {
                if !rel.test(&form.constant) {
                    return Some(Interval::empty());
                }
                continue;
            }
            let t = -&form.constant / a;
            let rel = if a.is_negative() { flip(*rel) } else { *rel };
            let part = match rel {
                Rel::Lt => Interval::new(None, Some(Cut::new(t, false))),
                Rel::Le => Interval::new(None, Some(Cut::new(t, true))),
                Rel::Gt => Interval::new(Some(Cut::new(t, false)), None),
                Rel::Ge => Interval::new(Some(Cut::new(t, true)), None),
                Rel::Eq => Interval::point(t),
                Rel::Ne => continue,
            };
            iv = iv.intersect(&part);
        }
        Some(iv)
    }
}

impl CellShape for ConjCell {
    fn contains(&self, x: &[Rat]) -> bool {
        self.chosen.iter().all(|c| c.literal.holds(x))
    }

    /// Emptiness, crossing by some `φ(·;b)`, a predicate left out although
    /// implied by `φ(·;b)`, or a chosen parameter that `b` beats (smaller set,
    /// then smaller value).
    fn excluded_by(&self, b: &[Rat]) -> bool {
        let fam = &self.family;
        let (domain, dim) = (fam.domain, fam.point_dim);
        let lits = self.literals();
        if !feasible(&lits, domain, dim).unwrap_or(false) {
            return true;
        }
        for (phi, pred) in fam.predicates.iter().enumerate() {
            let Ok(lit) = Literal::of(pred, b) else { return true };
            let meets = self.feasible_with(lit.clone());
            let leaves = self.feasible_with(lit.negate());
            if meets && leaves {
                return true;
            }
            let inside = !leaves;
            match self.chosen.iter().find(|c| c.predicate == phi) {
                None if inside => return true,
                None => {}
                Some(c) if inside => {
                    let sub = literal_subset(&lit, &c.literal, domain, dim).unwrap_or(false);
                    let sup = literal_subset(&c.literal, &lit, domain, dim).unwrap_or(false);
                    if (sub && !sup) || (sub && sup && b < c.param.as_slice()) {
                        return true;
                    }
                }
                Some(_) => {}
            }
        }
        false
    }

    fn witness(&self) -> Option<Point> {
        self.witness.clone()
    }

    fn landmarks(&self) -> Landmarks {
        Landmarks { points: self.order_hull().map(|i| i.endpoints()).unwrap_or_default(), ..Landmarks::default() }
    }

    fn interval(&self) -> Option<Interval> {
        let exact = matches!(self.family.domain, Domain::Rationals)
            && self.chosen.iter().all(|c| matches!(c.literal, Literal::Sign { rel, .. } if rel != Rel::Ne));
        if exact {
            self.order_hull()
        } else {
            None
        }
    }

    fn hull(&self) -> Option<Interval> {
        self.order_hull()
    }

    fn describe(&self) -> String {
        if self.chosen.is_empty() {
            return "⊤".into();
        }
        self.chosen.iter().map(|c| c.literal.to_string()).collect::<Vec<_>>().join(" ∧ ")
    }

    fn canonical(&self) -> String {
        let mut parts: Vec<String> = self.chosen.iter().map(|c| format!("{}:{}", c.predicate, c.literal)).collect();
        parts.sort();
        parts.join(";")
    }
}

/// The conjunction decomposition of a vector-linear or congruence family.
#[derive(Debug, Clone)]
pub struct ConjDecomposition {
    pub family: Arc<ParamFamily>,
}

impl ConjDecomposition {
    pub fn new(family: &ParamFamily) -> Result<ConjDecomposition, DecompError> {
        match (family.kind, family.domain) {
            (FamilyKind::VectorLinear, Domain::Rationals) => {}
            (FamilyKind::Congruence, Domain::Integers) if family.point_dim == 1 => {}
            (FamilyKind::Congruence, _) => {
                return Err(DecompError::Unsupported("congruence cells are built for points of dimension 1".into()))
            }
            (k, _) => return Err(DecompError::Unsupported(format!("conjunction cells for {k:?} families"))),
        }
        Ok(ConjDecomposition { family: Arc::new(family.clone()) })
    }

    fn probes(&self, params: &[Point]) -> Result<Vec<Point>, DecompError> {
        let f = &self.family;
        if f.point_dim == 1 {
            Ok(exact_line_probes(f, params, &Landmarks::default())?.into_iter().map(|x| vec![x]).collect())
        } else {
            Ok(cylindrical_probes(&f.all_forms(params), f.point_dim))
        }
    }

    /// Canonical cells, one per realizable type, in order of first probe.
    pub fn cells(&self, params: &[Point]) -> Result<Vec<ConjCell>, DecompError> {
        let f = &self.family;
        let ev = Evaluator::new(f, params);
        let n = params.len();
        let mut seen: HashMap<Vec<bool>, ()> = HashMap::new();
        let mut out = Vec::new();
        let lits: Vec<Vec<Literal>> = f
            .predicates
            .iter()
            .map(|p| params.iter().map(|b| Literal::of(p, b)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let keys: Vec<Vec<Rat>> = lits.iter().map(|row| row.iter().map(|l| inclusion_key(l, f.domain)).collect()).collect();
        for x in self.probes(params)? {
            let tv = ev.truth_vector(&x);
            if seen.insert(tv.clone(), ()).is_some() {
                continue;
            }
            let mut chosen = Vec::new();
            for phi in 0..f.predicates.len() {
                let best = (0..n)
                    .filter(|&j| tv[phi * n + j])
                    .min_by(|&i, &j| keys[phi][i].cmp(&keys[phi][j]).then_with(|| params[i].cmp(&params[j])));
                if let Some(j) = best {
                    chosen.push(Choice {
                        predicate: phi,
                        param_index: j,
                        param: params[j].clone(),
                        literal: lits[phi][j].clone(),
                    });
                }
            }
            out.push(ConjCell::new(f.clone(), chosen, Some(x)));
        }
        Ok(out)
    }
}

impl Decomposition for ConjDecomposition {
    fn name(&self) -> String {
        "conj-cells".into()
    }

    fn point_dim(&self) -> usize {
        self.family.point_dim
    }

    fn param_dim(&self) -> usize {
        self.family.param_dim
    }

    fn parameter_count(&self) -> usize {
        self.family.predicates.len()
    }

    /// Every conjunction over every subset of predicates and every choice of
    /// parameters: `∑_k C(|Φ|,k)|B|^k` cells.
    fn potential_cells(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        let f = &self.family;
        let mut partial: Vec<Vec<Choice>> = vec![Vec::new()];
        for (phi, pred) in f.predicates.iter().enumerate() {
            let mut next = Vec::new();
            for p in &partial {
                next.push(p.clone());
                for (j, b) in params.iter().enumerate() {
                    let mut q = p.clone();
                    q.push(Choice { predicate: phi, param_index: j, param: b.clone(), literal: Literal::of(pred, b)? });
                    next.push(q);
                }
            }
            partial = next;
        }
        Ok(partial.into_iter().map(|c| ConjCell::new(f.clone(), c, None).instance()).collect())
    }

    fn instantiate_with_locator(&self, params: &[Point]) -> Result<Instantiation, DecompError> {
        check_distinct(params, self.param_dim())?;
        check_params(&self.family, params)?;
        let cells: Vec<CellInstance> = self.cells(params)?.into_iter().map(ConjCell::instance).collect();
        let locator = if self.family.point_dim == 1 {
            IntervalLocator::build(&cells).map(|l| Arc::new(l) as Arc<dyn Locator>)
        } else {
            None
        };
        Ok(Instantiation { cells, locator })
    }
}

/// Why a conjunction over all of `B` is unrealizable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// `φ(·;b)` alone is empty.
    EmptyLiteral { param_index: usize },
    /// `φ(·;b₁) ∧ φ(·;b₂)` is empty.
    Clash { first: usize, second: usize },
}

/// Outcome of the conjunction check for one predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ConjunctionOutcome {
    /// `B` is empty.
    Vacuous { predicate: usize },
    /// `⋀_b φ(x;b) ≡ φ(x;b₀)`.
    Equivalent { predicate: usize, witness: usize },
    Unrealizable { predicate: usize, certificate: Certificate },
    /// The property fails: the conjunction is realizable but no single member defines it.
    Counterexample { predicate: usize, param_index: usize },
}

impl ConjunctionOutcome {
    pub fn holds(&self) -> bool {
        !matches!(self, ConjunctionOutcome::Counterexample { .. })
    }
}

/// Checks that for every predicate the conjunction over `B` collapses to one
/// member or is unrealizable. Divisibility certificates are gcd-based.
pub fn check_conjunction_property(family: &ParamFamily, params: &[Point]) -> Result<Vec<ConjunctionOutcome>, DecompError> {
    if !matches!(family.kind, FamilyKind::VectorLinear | FamilyKind::Congruence) {
        return Err(DecompError::Unsupported(format!("conjunction property for {:?} families", family.kind)));
    }
    check_params(family, params)?;
    let (domain, dim) = (family.domain, family.point_dim);
    let mut out = Vec::new();
    for (phi, pred) in family.predicates.iter().enumerate() {
        if params.is_empty() {
            out.push(ConjunctionOutcome::Vacuous { predicate: phi });
            continue;
        }
        if let Predicate::Divides { .. } = pred {
            out.push(match divisibility_certificate(pred, params)? {
                Some(certificate) => ConjunctionOutcome::Unrealizable { predicate: phi, certificate },
                None => ConjunctionOutcome::Equivalent { predicate: phi, witness: 0 },
            });
            continue;
        }
        let lits: Vec<Literal> = params.iter().map(|b| Literal::of(pred, b)).collect::<Result<_, _>>()?;
        if !feasible(&lits, domain, dim)? {
            let certificate = match (0..lits.len()).find(|&j| !feasible(&lits[j..=j], domain, dim).unwrap_or(false)) {
                Some(j) => Certificate::EmptyLiteral { param_index: j },
                None => {
                    let mut pair = None;
                    'search: for i in 0..lits.len() {
                        for j in i + 1..lits.len() {
                            if !feasible(&[lits[i].clone(), lits[j].clone()], domain, dim)? {
                                pair = Some(Certificate::Clash { first: i, second: j });
                                break 'search;
                            }
                        }
                    }
                    match pair {
                        Some(c) => c,
                        None => {
                            out.push(ConjunctionOutcome::Counterexample { predicate: phi, param_index: 0 });
                            continue;
                        }
                    }
                }
            };
            out.push(ConjunctionOutcome::Unrealizable { predicate: phi, certificate });
            continue;
        }
        let keys: Vec<Rat> = lits.iter().map(|l| inclusion_key(l, domain)).collect();
        let best = (0..lits.len())
            .min_by(|&i, &j| keys[i].cmp(&keys[j]).then_with(|| params[i].cmp(&params[j])))
            .expect("nonempty");
        let mut verdict = ConjunctionOutcome::Equivalent { predicate: phi, witness: best };
        for j in 0..lits.len() {
            if !literal_subset(&lits[best], &lits[j], domain, dim)? {
                verdict = ConjunctionOutcome::Counterexample { predicate: phi, param_index: j };
                break;
            }
        }
        out.push(verdict);
    }
    Ok(out)
}

/// gcd/residue argument for `K | f(x) + g(b) + c` over `B`: empty if some
/// `gcd(f, K)` fails to divide a constant, a clash if two constants differ mod `K`.
pub fn divisibility_certificate(pred: &Predicate, params: &[Point]) -> Result<Option<Certificate>, DecompError> {
    let Predicate::Divides { modulus, x, y, c } = pred else {
        return Err(DecompError::Unsupported("divisibility certificate for a non-divisibility atom".into()));
    };
    let m = BigInt::from(*modulus);
    let g = x.iter().fold(m.clone(), |acc, k| acc.gcd(&k.to_integer()));
    let mut consts = Vec::with_capacity(params.len());
    for (j, b) in params.iter().enumerate() {
        let k = LinearAtom::new(x.clone(), y.clone(), c.clone(), Rel::Eq).param_part().eval(b);
        if !k.is_integer() || !k.to_integer().mod_floor(&g).is_zero() {
            return Ok(Some(Certificate::EmptyLiteral { param_index: j }));
        }
        consts.push(k.to_integer().mod_floor(&m));
    }
    for j in 1..consts.len() {
        if consts[j] != consts[0] {
            return Ok(Some(Certificate::Clash { first: 0, second: j }));
        }
    }
    Ok(None)
}

/// Exhaustive residue search: whether some `x ∈ [0, K)^d` satisfies every
/// `φ(x;b)`, which decides realizability since the atom is `K`-periodic in `x`.
pub fn divisibility_realizable_by_search(pred: &Predicate, params: &[Point], point_dim: usize) -> bool {
    let Predicate::Divides { modulus, .. } = pred else { return false };
    let total = (*modulus as usize).pow(point_dim as u32);
    (0..total).any(|mut idx| {
        let x: Point = (0..point_dim)
            .map(|_| {
                let r = idx % *modulus as usize;
                idx /= *modulus as usize;
                Rat::from_integer(BigInt::from(r))
            })
            .collect();
        params.iter().all(|b| pred.holds(&x, b, Domain::Integers))
    })
}

/// Indices of the predicates whose disjunction is the negation of `φ`.
pub fn negation_partners(family: &ParamFamily, phi: usize) -> Result<Vec<usize>, DecompError> {
    let preds = &family.predicates;
    let missing = |what: String| DecompError::Unsupported(format!("predicate {phi} is not negation-closed: {what}"));
    match preds.get(phi) {
        Some(Predicate::Linear { atom }) => {
            let mut out = Vec::new();
            for rel in [Rel::Lt, Rel::Eq, Rel::Gt].into_iter().filter(|r| *r != atom.rel) {
                let idx = preds.iter().position(|p| {
                    matches!(p, Predicate::Linear { atom: a } if a.x == atom.x && a.y == atom.y && a.c == atom.c && a.rel == rel)
                });
                out.push(idx.ok_or_else(|| missing(format!("no sibling with relation {}", rel.symbol())))?);
            }
            Ok(out)
        }
        Some(Predicate::Divides { modulus, x, y, c }) => {
            let m = BigInt::from(*modulus);
            let own = c.to_integer().mod_floor(&m);
            let mut out = Vec::new();
            for r in 0..*modulus {
                let r = BigInt::from(r);
                if r == own {
                    continue;
                }
                let idx = preds.iter().position(|p| {
                    matches!(p, Predicate::Divides { modulus: m2, x: x2, y: y2, c: c2 }
                        if m2 == modulus && x2 == x && y2 == y && c2.is_integer() && c2.to_integer().mod_floor(&m) == r)
                });
                out.push(idx.ok_or_else(|| missing(format!("no sibling with constant {r} mod {modulus}")))?);
            }
            Ok(out)
        }
        Some(_) => Err(missing("not an atom".into())),
        None => Err(DecompError::Family(crate::families::FamilyError::Index(phi))),
    }
}

/// First sample where `¬φ(a;b)` disagrees with the designated disjunction.
pub fn check_negation_closure(family: &ParamFamily, samples: &[(Point, Point)]) -> Result<Option<String>, DecompError> {
    for phi in 0..family.predicates.len() {
        let partners = negation_partners(family, phi)?;
        for (a, b) in samples {
            let neg = !family.holds(phi, a, b);
            let disj = partners.iter().any(|&q| family.holds(q, a, b));
            if neg != disj {
                return Ok(Some(format!("predicate {phi} at x = {}, b = {}", fmt_point(a), fmt_point(b))));
            }
        }
    }
    Ok(None)
}

/// Expected exponent of the conjunction decomposition: `|x|` for both structures.
pub fn expected_exponent(structure: &str, point_dim: usize) -> Result<Rat, DecompError> {
    match structure {
        "vector-space" | "presburger" => Ok(Rat::from_integer(BigInt::from(point_dim))),
        other => Err(DecompError::Unsupported(format!("no exponent recorded for structure {other:?}"))),
    }
}

/// Renders a literal list for diagnostics.
pub fn describe_literals(lits: &[Literal]) -> String {
    lits.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ∧ ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{filter_by_exclusion, verify};
    use crate::families::{build, type_census_1d};
    use crate::scalars::rat;
    use std::collections::BTreeSet;

    fn pts(v: &[i64]) -> Vec<Point> {
        v.iter().map(|x| vec![rat(*x)]).collect()
    }

    fn parity_family() -> ParamFamily {
        let mut preds = Vec::new();
        for c in 0..2 {
            preds.push(Predicate::Divides { modulus: 2, x: vec![rat(1)], y: vec![rat(1)], c: rat(c) });
        }
        ParamFamily::new(FamilyKind::Congruence, Domain::Integers, 1, 1, preds).unwrap()
    }

    #[test]
    fn conjunction_property_examples() {
        let lt = build::trichotomy(1);
        let out = check_conjunction_property(&lt, &pts(&[0, 2])).unwrap();
        assert_eq!(out[0], ConjunctionOutcome::Equivalent { predicate: 0, witness: 0 });
        let par = parity_family();
        let out = check_conjunction_property(&par, &pts(&[0, 1])).unwrap();
        assert!(matches!(out[0], ConjunctionOutcome::Unrealizable { certificate: Certificate::Clash { .. }, .. }));
        let out = check_conjunction_property(&par, &pts(&[0, 2])).unwrap();
        assert_eq!(out[0], ConjunctionOutcome::Equivalent { predicate: 0, witness: 0 });
        assert!(!divisibility_realizable_by_search(&par.predicates[0], &pts(&[0, 1]), 1));
        assert!(divisibility_realizable_by_search(&par.predicates[0], &pts(&[0, 2]), 1));
    }

    #[test]
    fn trichotomy_five_cells() {
        let f = build::trichotomy(1);
        let d = ConjDecomposition::new(&f).unwrap();
        let b = pts(&[0, 2]);
        let cells = d.instantiate(&b).unwrap();
        assert_eq!(cells.len(), 5);
        let r = verify(&d, &f, &b, &[]).unwrap();
        assert!(r.passed() && r.exact);
        assert_eq!(r.cell_count_deduped, 5);
        assert_eq!(r.census_lower_bound, 5);
        let empty = d.instantiate(&[]).unwrap();
        assert_eq!(empty.len(), 1);
        assert_eq!(empty[0].shape.describe(), "⊤");
    }

    #[test]
    fn presburger_matches_census() {
        let f = build::presburger_basic(2);
        let d = ConjDecomposition::new(&f).unwrap();
        for b in [pts(&[0, 1]), pts(&[0, 2]), pts(&[-3, 4, 5])] {
            let r = verify(&d, &f, &b, &[]).unwrap();
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.cell_count_deduped, type_census_1d(&f, &b).unwrap().count);
            assert_eq!(r.cell_count_raw, r.cell_count_deduped);
        }
    }

    #[test]
    fn fast_path_matches_filter() {
        for (f, b) in [
            (build::trichotomy(1), pts(&[0, 2])),
            (build::trichotomy(1), pts(&[1, -1, 4])),
            (build::presburger_basic(2), pts(&[0, 1])),
            (build::presburger_basic(2), pts(&[0, 3])),
        ] {
            let d = ConjDecomposition::new(&f).unwrap();
            let fast: BTreeSet<Descriptor> = d.instantiate(&b).unwrap().into_iter().map(|c| c.descriptor).collect();
            let slow: BTreeSet<Descriptor> =
                filter_by_exclusion(d.potential_cells(&b).unwrap(), &b).into_iter().map(|c| c.descriptor).collect();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn feasibility_over_rationals() {
        let x = |k: i64, c: i64| Affine::new(vec![rat(k), rat(0)], rat(c));
        let y = |k: i64, c: i64| Affine::new(vec![rat(0), rat(k)], rat(c));
        let sum = Affine::new(vec![rat(1), rat(1)], rat(-1));
        // x > 0, y > 0, x + y < 1 is open and nonempty; with x + y = 0 it is empty
        let tri = vec![
            Literal::Sign { form: x(1, 0), rel: Rel::Gt },
            Literal::Sign { form: y(1, 0), rel: Rel::Gt },
            Literal::Sign { form: sum.clone(), rel: Rel::Lt },
        ];
        assert!(feasible(&tri, Domain::Rationals, 2).unwrap());
        let mut degenerate = tri.clone();
        degenerate[2] = Literal::Sign { form: Affine::new(vec![rat(1), rat(1)], rat(0)), rel: Rel::Le };
        assert!(!feasible(&degenerate, Domain::Rationals, 2).unwrap());
        let strict_pair = vec![Literal::Sign { form: x(1, 0), rel: Rel::Lt }, Literal::Sign { form: x(1, 0), rel: Rel::Gt }];
        assert!(!feasible(&strict_pair, Domain::Rationals, 2).unwrap());
        let ne = vec![Literal::Sign { form: x(1, 0), rel: Rel::Ne }, Literal::Sign { form: x(1, 0), rel: Rel::Ge }];
        assert!(feasible(&ne, Domain::Rationals, 2).unwrap());
    }

    #[test]
    fn feasibility_over_integers() {
        let f = |k: i64, c: i64| Affine::new(vec![rat(k)], rat(c));
        // 0 < 2x < 2 has no integer solution; 3 | x with 1 ≤ x ≤ 2 neither
        let gap = vec![Literal::Sign { form: f(2, 0), rel: Rel::Gt }, Literal::Sign { form: f(2, -2), rel: Rel::Lt }];
        assert!(!feasible(&gap, Domain::Integers, 1).unwrap());
        let res = vec![
            Literal::Sign { form: f(1, -1), rel: Rel::Ge },
            Literal::Sign { form: f(1, -2), rel: Rel::Le },
            Literal::Divisible { form: f(1, 0), modulus: 3, divides: true },
        ];
        assert!(!feasible(&res, Domain::Integers, 1).unwrap());
        let avoid = vec![
            Literal::Sign { form: f(1, 0), rel: Rel::Ge },
            Literal::Sign { form: f(1, -3), rel: Rel::Le },
            Literal::Sign { form: f(1, 0), rel: Rel::Ne },
            Literal::Divisible { form: f(1, 0), modulus: 3, divides: true },
        ];
        assert!(feasible(&avoid, Domain::Integers, 1).unwrap());
    }

    #[test]
    fn negation_closure_and_exponents() {
        let f = build::presburger_basic(3);
        assert_eq!(negation_partners(&f, 0).unwrap().len(), 2);
        assert_eq!(negation_partners(&f, 3).unwrap().len(), 2);
        let samples: Vec<(Point, Point)> = (-4..5).flat_map(|a| (-3..3).map(move |b| (vec![rat(a)], vec![rat(b)]))).collect();
        assert_eq!(check_negation_closure(&f, &samples).unwrap(), None);
        let lone = build::x_less_than_y();
        assert!(negation_partners(&lone, 0).is_err());
        assert_eq!(expected_exponent("vector-space", 1).unwrap(), rat(1));
        assert_eq!(expected_exponent("presburger", 2).unwrap(), rat(2));
        assert_eq!(expected_exponent("vector-space", 3).unwrap(), rat(3));
        assert!(expected_exponent("field", 1).is_err());
    }

    #[test]
    fn grid_in_the_plane() {
        let f = build::trichotomy(2);
        let d = ConjDecomposition::new(&f).unwrap();
        let b = vec![vec![rat(0), rat(0)], vec![rat(1), rat(1)]];
        let cells = d.instantiate(&b).unwrap();
        // 5 × 5 faces of the coordinate grid through 0 and 1
        assert_eq!(cells.len(), 25);
    }
}
