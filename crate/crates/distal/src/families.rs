//! Parametrized families Φ(x;y) in evaluable normal forms, plus brute-force
//! type-census oracles.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrangement::{cylindrical_probes, line_representatives, Affine, Cut, Interval};
use crate::scalars::{
    check_prime, checked_pow, fmt_point, mod_inverse, mul_mod, p_power, rat, rat_serde,
    small_valuation, val_and_residue, valuation, GammaValue, PowerResidues, Rat,
};

pub type Point = Vec<Rat>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("predicate index {0} out of range")]
    Index(usize),
    #[error("predicate {index} has {count} convex components, above its declared bound {bound}")]
    TooManyComponents { index: usize, count: usize, bound: usize },
    #[error("invalid family: {0}")]
    Invalid(String),
    #[error("unsupported for this family kind: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Interval,
    Semilinear,
    VectorLinear,
    Congruence,
    ValuationForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Domain {
    Rationals,
    Integers,
    Padic { prime: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rel {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Rel {
    pub fn test(self, v: &Rat) -> bool {
        match self {
            Rel::Lt => v.is_negative(),
            Rel::Le => !v.is_positive(),
            Rel::Eq => v.is_zero(),
            Rel::Ne => !v.is_zero(),
            Rel::Ge => !v.is_negative(),
            Rel::Gt => v.is_positive(),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// `x·a + y·b + c rel 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearAtom {
    #[serde(with = "rat_serde::vec")]
    pub x: Vec<Rat>,
    #[serde(with = "rat_serde::vec")]
    pub y: Vec<Rat>,
    #[serde(with = "rat_serde", default = "Rat::zero")]
    pub c: Rat,
    pub rel: Rel,
}

impl LinearAtom {
    pub fn new(x: Vec<Rat>, y: Vec<Rat>, c: Rat, rel: Rel) -> LinearAtom {
        LinearAtom { x, y, c, rel }
    }

    pub fn value(&self, a: &[Rat], b: &[Rat]) -> Rat {
        self.at_param(b).eval(a)
    }

    pub fn holds(&self, a: &[Rat], b: &[Rat]) -> bool {
        self.rel.test(&self.value(a, b))
    }

    /// The form in point space obtained by fixing the parameter.
    pub fn at_param(&self, b: &[Rat]) -> Affine {
        let mut constant = self.c.clone();
        for (k, v) in self.y.iter().zip(b) {
            if !k.is_zero() {
                constant += k * v;
            }
        }
        Affine { coeffs: self.x.clone(), constant }
    }

    /// Affine function of the parameter `y·b + c`.
    pub fn param_part(&self) -> Affine {
        Affine { coeffs: self.y.clone(), constant: self.c.clone() }
    }
}

impl fmt::Display for LinearAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, k) in self.x.iter().enumerate() {
            if !k.is_zero() {
                terms.push(format!("{}*x{}", crate::scalars::fmt_rat(k), i + 1));
            }
        }
        for (i, k) in self.y.iter().enumerate() {
            if !k.is_zero() {
                terms.push(format!("{}*y{}", crate::scalars::fmt_rat(k), i + 1));
            }
        }
        if !self.c.is_zero() || terms.is_empty() {
            terms.push(crate::scalars::fmt_rat(&self.c));
        }
        write!(f, "{} {} 0", terms.join(" + "), self.rel.symbol())
    }
}

/// Boolean combination of linear atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Atom(LinearAtom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn holds(&self, a: &[Rat], b: &[Rat]) -> bool {
        match self {
            Formula::Atom(at) => at.holds(a, b),
            Formula::Not(f) => !f.holds(a, b),
            Formula::And(fs) => fs.iter().all(|f| f.holds(a, b)),
            Formula::Or(fs) => fs.iter().any(|f| f.holds(a, b)),
        }
    }

    pub fn atoms(&self) -> Vec<&LinearAtom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a LinearAtom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
        }
    }
}

/// Endpoint of an interval piece, affine in the parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bound {
    pub at: Affine,
    pub closed: bool,
}

/// One interval with parameter-dependent ends; `None` ends are infinite.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Piece {
    pub lower: Option<Bound>,
    pub upper: Option<Bound>,
}

impl Piece {
    pub fn at_param(&self, b: &[Rat]) -> Interval {
        Interval {
            lower: self.lower.as_ref().map(|e| Cut::new(e.at.eval(b), e.closed)),
            upper: self.upper.as_ref().map(|e| Cut::new(e.at.eval(b), e.closed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Predicate {
    /// Union of parameter-dependent intervals with at most `bound` convex components.
    Interval { bound: usize, pieces: Vec<Piece> },
    /// Boolean combination of affine inequalities.
    Formula { formula: Formula },
    /// A single atom `f(x) + g(y) + c □ 0`.
    Linear { atom: LinearAtom },
    /// `modulus | x·a + y·b + c` over the integers.
    Divides {
        modulus: u64,
        #[serde(with = "rat_serde::vec")]
        x: Vec<Rat>,
        #[serde(with = "rat_serde::vec")]
        y: Vec<Rat>,
        #[serde(with = "rat_serde", default = "Rat::zero")]
        c: Rat,
    },
    /// `v(f(y)) < v(x − c(y))`.
    ValBall { f: Affine, c: Affine },
    /// `P_n(λ·(x − c(y)))`.
    Power {
        #[serde(with = "rat_serde")]
        lambda: Rat,
        c: Affine,
        n: u32,
    },
    /// `v(x − c_i(y)) < v(x − c_j(y))`.
    ValCompare { ci: Affine, cj: Affine },
    /// `x − c(y) ∈ λ·Q_{m,n}`.
    QCoset {
        c: Affine,
        #[serde(with = "rat_serde")]
        lambda: Rat,
        m: u32,
        n: u32,
    },
}

impl Predicate {
    pub fn holds(&self, a: &[Rat], b: &[Rat], domain: Domain) -> bool {
        match self {
            Predicate::Interval { pieces, .. } => pieces.iter().any(|p| p.at_param(b).contains(&a[0])),
            Predicate::Formula { formula } => formula.holds(a, b),
            Predicate::Linear { atom } => atom.holds(a, b),
            Predicate::Divides { modulus, x, y, c } => {
                let v = LinearAtom::new(x.clone(), y.clone(), c.clone(), Rel::Eq).value(a, b);
                v.is_integer() && v.numer().mod_floor(&BigInt::from(*modulus)).is_zero()
            }
            Predicate::ValBall { f, c } => {
                let p = prime_of(domain);
                valuation(&f.eval(b), p) < valuation(&(&a[0] - c.eval(b)), p)
            }
            Predicate::Power { lambda, c, n } => {
                let p = prime_of(domain);
                power_table(p, *n).contains(&(lambda * (&a[0] - c.eval(b))))
            }
            Predicate::ValCompare { ci, cj } => {
                let p = prime_of(domain);
                valuation(&(&a[0] - ci.eval(b)), p) < valuation(&(&a[0] - cj.eval(b)), p)
            }
            Predicate::QCoset { c, lambda, m, n } => {
                let p = prime_of(domain);
                crate::scalars::in_qmn(&(&a[0] - c.eval(b)), lambda, p, *m, *n)
            }
        }
    }

    /// Hyperplanes in point space on whose faces the predicate is constant.
    pub fn critical_forms(&self, b: &[Rat], point_dim: usize) -> Vec<Affine> {
        match self {
            Predicate::Interval { pieces, .. } => {
                let mut out = Vec::new();
                for p in pieces {
                    for e in p.lower.iter().chain(p.upper.iter()) {
                        out.push(Affine::new(vec![rat(1)], -e.at.eval(b)));
                    }
                }
                out
            }
            Predicate::Formula { formula } => formula.atoms().iter().map(|a| a.at_param(b)).collect(),
            Predicate::Linear { atom } => vec![atom.at_param(b)],
            Predicate::Divides { .. } => Vec::new(),
            _ => vec![Affine::constant(point_dim, Rat::zero())],
        }
    }

    fn centers(&self) -> Vec<&Affine> {
        match self {
            Predicate::ValBall { c, .. } | Predicate::Power { c, .. } | Predicate::QCoset { c, .. } => vec![c],
            Predicate::ValCompare { ci, cj } => vec![ci, cj],
            _ => Vec::new(),
        }
    }
}

fn prime_of(domain: Domain) -> u64 {
    match domain {
        Domain::Padic { prime } => prime,
        _ => panic!("valuation predicate outside a p-adic domain"),
    }
}

type TableCache = Mutex<HashMap<(u64, u32), Arc<PowerResidues>>>;

/// Shared residue tables for `P_n`, built once per `(p, n)`.
pub fn power_table(p: u64, n: u32) -> Arc<PowerResidues> {
    static TABLES: OnceLock<TableCache> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = tables.lock().expect("table lock");
    guard.entry((p, n)).or_insert_with(|| Arc::new(PowerResidues::new(p, n))).clone()
}

/// A finite family of parametrized predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamFamily {
    pub kind: FamilyKind,
    pub domain: Domain,
    pub point_dim: usize,
    pub param_dim: usize,
    pub predicates: Vec<Predicate>,
}

/// The two valuation-form dialects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValuationDialect {
    Macintyre,
    Laff,
}

impl ParamFamily {
    pub fn new(
        kind: FamilyKind,
        domain: Domain,
        point_dim: usize,
        param_dim: usize,
        predicates: Vec<Predicate>,
    ) -> Result<ParamFamily, FamilyError> {
        let fam = ParamFamily { kind, domain, point_dim, param_dim, predicates };
        fam.validate()?;
        Ok(fam)
    }

    pub fn from_json(text: &str) -> Result<ParamFamily, FamilyError> {
        let fam: ParamFamily =
            serde_json::from_str(text).map_err(|e| FamilyError::Invalid(e.to_string()))?;
        fam.validate()?;
        Ok(fam)
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn prime(&self) -> Option<u64> {
        match self.domain {
            Domain::Padic { prime } => Some(prime),
            _ => None,
        }
    }

    pub fn dialect(&self) -> Option<ValuationDialect> {
        if self.kind != FamilyKind::ValuationForm {
            return None;
        }
        let laff = self
            .predicates
            .iter()
            .any(|p| matches!(p, Predicate::ValCompare { .. } | Predicate::QCoset { .. }));
        Some(if laff { ValuationDialect::Laff } else { ValuationDialect::Macintyre })
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        let bad = |m: String| Err(FamilyError::Invalid(m));
        let check_affine = |a: &Affine, what: &str| -> Result<(), FamilyError> {
            if a.coeffs.len() != self.param_dim {
                return Err(FamilyError::Invalid(format!(
                    "{what} has {} coefficients, parameter dimension is {}",
                    a.coeffs.len(),
                    self.param_dim
                )));
            }
            Ok(())
        };
        let check_atom = |a: &LinearAtom| -> Result<(), FamilyError> {
            if a.x.len() != self.point_dim || a.y.len() != self.param_dim {
                return Err(FamilyError::Invalid(format!("atom {a} has wrong arity")));
            }
            Ok(())
        };
        let want_domain = match self.kind {
            FamilyKind::Interval | FamilyKind::Semilinear | FamilyKind::VectorLinear => {
                matches!(self.domain, Domain::Rationals)
            }
            FamilyKind::Congruence => matches!(self.domain, Domain::Integers),
            FamilyKind::ValuationForm => matches!(self.domain, Domain::Padic { .. }),
        };
        if !want_domain {
            return bad(format!("{:?} family over {:?}", self.kind, self.domain));
        }
        if let Domain::Padic { prime } = self.domain {
            check_prime(prime).map_err(|e| FamilyError::Invalid(e.to_string()))?;
        }
        if matches!(self.kind, FamilyKind::Interval | FamilyKind::ValuationForm) && self.point_dim != 1 {
            return bad(format!("{:?} families have points of dimension 1", self.kind));
        }
        let (mut mac, mut laff) = (false, false);
        for (i, p) in self.predicates.iter().enumerate() {
            let ok = match (self.kind, p) {
                (FamilyKind::Interval, Predicate::Interval { bound, pieces }) => {
                    for pc in pieces {
                        for e in pc.lower.iter().chain(pc.upper.iter()) {
                            check_affine(&e.at, "interval endpoint")?;
                        }
                    }
                    *bound >= 1
                }
                (FamilyKind::Semilinear, Predicate::Formula { formula }) => {
                    formula.atoms().into_iter().try_for_each(check_atom)?;
                    true
                }
                (FamilyKind::Semilinear, Predicate::Linear { atom }) => {
                    check_atom(atom)?;
                    true
                }
                (FamilyKind::VectorLinear, Predicate::Linear { atom }) => {
                    check_atom(atom)?;
                    matches!(atom.rel, Rel::Lt | Rel::Eq | Rel::Gt)
                }
                (FamilyKind::Congruence, Predicate::Linear { atom }) => {
                    check_atom(atom)?;
                    atom.x.iter().chain(atom.y.iter()).all(|k| k.is_integer())
                        && atom.c.is_integer()
                        && matches!(atom.rel, Rel::Lt | Rel::Eq | Rel::Gt)
                }
                (FamilyKind::Congruence, Predicate::Divides { modulus, x, y, c }) => {
                    check_atom(&LinearAtom::new(x.clone(), y.clone(), c.clone(), Rel::Eq))?;
                    *modulus >= 1 && x.iter().chain(y.iter()).all(|k| k.is_integer()) && c.is_integer()
                }
                (FamilyKind::ValuationForm, Predicate::ValBall { f, c }) => {
                    check_affine(f, "valuation argument")?;
                    check_affine(c, "center")?;
                    mac = true;
                    true
                }
                (FamilyKind::ValuationForm, Predicate::Power { c, n, .. }) => {
                    check_affine(c, "center")?;
                    mac = true;
                    *n >= 2
                }
                (FamilyKind::ValuationForm, Predicate::ValCompare { ci, cj }) => {
                    check_affine(ci, "center")?;
                    check_affine(cj, "center")?;
                    laff = true;
                    true
                }
                (FamilyKind::ValuationForm, Predicate::QCoset { c, m, n, .. }) => {
                    check_affine(c, "center")?;
                    laff = true;
                    *m >= 1 && *n >= 1
                }
                _ => false,
            };
            if !ok {
                return bad(format!("predicate {i} does not fit the {:?} normal form", self.kind));
            }
        }
        if mac && laff {
            return bad("Macintyre and affine-language atoms cannot be mixed".into());
        }
        Ok(())
    }

    fn check_dims(&self, idx: usize, a: &[Rat], b: &[Rat]) -> Result<(), FamilyError> {
        if idx >= self.predicates.len() {
            return Err(FamilyError::Index(idx));
        }
        if a.len() != self.point_dim {
            return Err(FamilyError::Dimension { expected: self.point_dim, got: a.len() });
        }
        if b.len() != self.param_dim {
            return Err(FamilyError::Dimension { expected: self.param_dim, got: b.len() });
        }
        Ok(())
    }

    /// Exact truth value of `φ_idx(a; b)`.
    pub fn evaluate(&self, idx: usize, a: &[Rat], b: &[Rat]) -> Result<bool, FamilyError> {
        self.check_dims(idx, a, b)?;
        Ok(self.holds(idx, a, b))
    }

    /// Unchecked evaluation for hot loops.
    pub fn holds(&self, idx: usize, a: &[Rat], b: &[Rat]) -> bool {
        self.predicates[idx].holds(a, b, self.domain)
    }

    /// Combined modulus of all congruence atoms (1 when there are none).
    pub fn modulus(&self) -> u64 {
        self.predicates.iter().fold(1u64, |acc, p| match p {
            Predicate::Divides { modulus, .. } => acc.lcm(modulus),
            _ => acc,
        })
    }

    /// Precision (exponent of p) at which residues decide every predicate.
    pub fn residue_precision(&self) -> u32 {
        let p = self.prime().unwrap_or(3);
        self.predicates
            .iter()
            .map(|pr| match pr {
                Predicate::Power { n, .. } => 2 * small_valuation(*n as u64, p) + 1,
                Predicate::QCoset { n, .. } => *n,
                _ => 1,
            })
            .max()
            .unwrap_or(1)
    }

    /// Period of valuation conditions (lcm of the `n` of `P_n` and the `m` of `Q_{m,n}`).
    pub fn valuation_period(&self) -> i64 {
        self.predicates.iter().fold(1i64, |acc, pr| match pr {
            Predicate::Power { n, .. } => acc.lcm(&(*n as i64)),
            Predicate::QCoset { m, .. } => acc.lcm(&(*m as i64)),
            _ => acc,
        })
    }

    /// All center values `c(b)` over the parameters, deduplicated in first-seen order.
    pub fn centers(&self, params: &[Point]) -> Vec<Rat> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for b in params {
            for p in &self.predicates {
                for c in p.centers() {
                    let v = c.eval(b);
                    if seen.insert(v.clone()) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Critical forms of every instance `φ(·;b)`, `b ∈ B`.
    pub fn all_forms(&self, params: &[Point]) -> Vec<Affine> {
        let mut out = Vec::new();
        for b in params {
            for p in &self.predicates {
                out.extend(p.critical_forms(b, self.point_dim));
            }
        }
        out
    }
}

/// Extra line landmarks contributed by cells (endpoints, ball centers, radii).
#[derive(Debug, Clone, Default)]
pub struct Landmarks {
    pub points: Vec<Rat>,
    pub centers: Vec<Rat>,
    pub radii: Vec<i64>,
}

/// Probe set on the line that meets every realizable Φ-type over `B` and every
/// face cut out by the given landmarks. Exact for all one-dimensional kinds.
pub fn exact_line_probes(
    family: &ParamFamily,
    params: &[Point],
    extra: &Landmarks,
) -> Result<Vec<Rat>, FamilyError> {
    if family.point_dim != 1 {
        return Err(FamilyError::Unsupported("exact probing needs points of dimension 1".into()));
    }
    match family.domain {
        Domain::Rationals => {
            let mut zeros: Vec<Rat> = extra.points.clone();
            for f in family.all_forms(params) {
                if let Some(r) = f.root_in_first() {
                    zeros.push(r.constant);
                }
            }
            Ok(line_representatives(zeros))
        }
        Domain::Integers => {
            let mut zeros: Vec<Rat> = extra.points.clone();
            for f in family.all_forms(params) {
                if let Some(r) = f.root_in_first() {
                    zeros.push(r.constant);
                }
            }
            Ok(integer_windows(&zeros, family.modulus()))
        }
        Domain::Padic { prime } => {
            let mut centers = family.centers(params);
            centers.extend(extra.centers.iter().cloned());
            let k = family.residue_precision();
            let mut thresholds: Vec<i64> = extra.radii.clone();
            for b in params {
                for pr in &family.predicates {
                    if let Predicate::ValBall { f, .. } = pr {
                        if let GammaValue::Finite(v) = valuation(&f.eval(b), prime) {
                            thresholds.push(v);
                        }
                    }
                }
            }
            Ok(padic_probes(&centers, &thresholds, prime, k, family.valuation_period()))
        }
    }
}

/// Integers in a window of half-width `modulus` around every landmark; just
/// `[0, modulus)` when there are no landmarks.
pub fn integer_windows(landmarks: &[Rat], modulus: u64) -> Vec<Rat> {
    let k = BigInt::from(modulus.max(1));
    let mut out: BTreeSet<BigInt> = BTreeSet::new();
    if landmarks.is_empty() {
        let mut i = BigInt::zero();
        while i < k {
            out.insert(i.clone());
            i += 1;
        }
    }
    for t in landmarks {
        let lo = t.floor().to_integer() - &k;
        let hi = t.ceil().to_integer() + &k;
        let mut i = lo;
        while i <= hi {
            out.insert(i.clone());
            i += 1;
        }
    }
    out.into_iter().map(Rat::from_integer).collect()
}

/// Points `c + p^s·u` for every center `c`, every unit `u` mod `p^k`, and every
/// `s` in a window that covers each valuation regime and residue period.
pub fn padic_probes(centers: &[Rat], thresholds: &[i64], p: u64, k: u32, period: i64) -> Vec<Rat> {
    let centers: Vec<Rat> = if centers.is_empty() {
        vec![Rat::zero()]
    } else {
        centers.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    };
    let mut radii: Vec<i64> = thresholds.to_vec();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if let GammaValue::Finite(v) = valuation(&(&centers[i] - &centers[j]), p) {
                radii.push(v);
            }
        }
    }
    let lo_t = radii.iter().copied().min().unwrap_or(0);
    let hi_t = radii.iter().copied().max().unwrap_or(0);
    let margin = period + k as i64 + 2;
    let modulus = checked_pow(p, k).expect("probe modulus fits");
    let units: Vec<u64> = (1..modulus).filter(|u| u % p != 0).collect();
    let mut out = Vec::with_capacity(centers.len() * units.len() * (hi_t - lo_t + 2 * margin + 1) as usize);
    for c in &centers {
        out.push(c.clone());
        for s in (lo_t - margin)..=(hi_t + margin) {
            let scale = p_power(p, s);
            for u in &units {
                out.push(c + &scale * rat(*u as i64));
            }
        }
    }
    out
}

/// Point-independent data of one `φ(·;b)`, ready for fast repeated evaluation.
#[derive(Debug, Clone)]
enum Prepared {
    Intervals(Vec<Interval>),
    Formula(Formula, Point),
    Linear(Affine, Rel),
    Divides(Affine, BigInt),
    ValBall { radius: GammaValue, center: usize },
    Power { center: usize, lambda: Option<(i64, u64)>, table: Arc<PowerResidues> },
    ValCompare { ci: usize, cj: usize },
    QCoset { center: usize, lambda: Option<(i64, u64)>, m: u32, n: u32 },
}

/// Evaluates all of `Φ(·;B)` at points, sharing work across predicates.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub predicate_count: usize,
    pub param_count: usize,
    prepared: Vec<Prepared>,
    centers: Vec<Rat>,
    prime: u64,
    precision: u32,
    modulus: u64,
}

/// Valuation and unit residue of `x − c` for each center `c`.
pub type Displacements = Vec<Option<(i64, u64)>>;

impl Evaluator {
    pub fn new(family: &ParamFamily, params: &[Point]) -> Evaluator {
        let prime = family.prime().unwrap_or(3);
        let precision = family.residue_precision();
        let modulus = checked_pow(prime, precision).expect("residue modulus fits");
        let mut centers: Vec<Rat> = Vec::new();
        let mut center_index: HashMap<Rat, usize> = HashMap::new();
        let mut intern = |v: Rat| -> usize {
            if let Some(i) = center_index.get(&v) {
                return *i;
            }
            centers.push(v.clone());
            center_index.insert(v, centers.len() - 1);
            centers.len() - 1
        };
        let lam_data = |lambda: &Rat, prec: u32| -> Option<(i64, u64)> {
            val_and_residue(lambda, prime, prec)
        };
        let mut prepared = Vec::with_capacity(family.len() * params.len());
        for pr in &family.predicates {
            for b in params {
                prepared.push(match pr {
                    Predicate::Interval { pieces, .. } => {
                        Prepared::Intervals(pieces.iter().map(|p| p.at_param(b)).collect())
                    }
                    Predicate::Formula { formula } => Prepared::Formula(formula.clone(), b.clone()),
                    Predicate::Linear { atom } => Prepared::Linear(atom.at_param(b), atom.rel),
                    Predicate::Divides { modulus, x, y, c } => Prepared::Divides(
                        LinearAtom::new(x.clone(), y.clone(), c.clone(), Rel::Eq).at_param(b),
                        BigInt::from(*modulus),
                    ),
                    Predicate::ValBall { f, c } => Prepared::ValBall {
                        radius: valuation(&f.eval(b), prime),
                        center: intern(c.eval(b)),
                    },
                    Predicate::Power { lambda, c, n } => {
                        let table = power_table(prime, *n);
                        Prepared::Power {
                            center: intern(c.eval(b)),
                            lambda: lam_data(lambda, table.precision),
                            table,
                        }
                    }
                    Predicate::ValCompare { ci, cj } => {
                        Prepared::ValCompare { ci: intern(ci.eval(b)), cj: intern(cj.eval(b)) }
                    }
                    Predicate::QCoset { c, lambda, m, n } => Prepared::QCoset {
                        center: intern(c.eval(b)),
                        lambda: lam_data(lambda, *n),
                        m: *m,
                        n: *n,
                    },
                });
            }
        }
        Evaluator {
            predicate_count: family.len(),
            param_count: params.len(),
            prepared,
            centers,
            prime,
            precision,
            modulus,
        }
    }

    pub fn width(&self) -> usize {
        self.prepared.len()
    }

    /// `(v(x − c), unit residue)` for every interned center.
    pub fn displacements(&self, x: &Rat) -> Displacements {
        self.centers
            .iter()
            .map(|c| val_and_residue(&(x - c), self.prime, self.precision))
            .collect()
    }

    fn eval_prepared(&self, pr: &Prepared, a: &[Rat], disp: &Displacements) -> bool {
        let p = self.prime;
        match pr {
            Prepared::Intervals(parts) => parts.iter().any(|i| i.contains(&a[0])),
            Prepared::Formula(f, b) => f.holds(a, b),
            Prepared::Linear(form, rel) => rel.test(&form.eval(a)),
            Prepared::Divides(form, k) => {
                let v = form.eval(a);
                v.is_integer() && v.numer().mod_floor(k).is_zero()
            }
            Prepared::ValBall { radius, center } => {
                let v = disp[*center].map_or(GammaValue::PosInf, |d| GammaValue::Finite(d.0));
                *radius < v
            }
            Prepared::Power { center, lambda, table } => match (disp[*center], lambda) {
                (None, _) | (_, None) => true,
                (Some((v, u)), Some((lv, lu))) => {
                    let m = table.modulus();
                    table.decide(v + lv, mul_mod(u % m, lu % m, m))
                }
            },
            Prepared::ValCompare { ci, cj } => {
                let vi = disp[*ci].map_or(GammaValue::PosInf, |d| GammaValue::Finite(d.0));
                let vj = disp[*cj].map_or(GammaValue::PosInf, |d| GammaValue::Finite(d.0));
                vi < vj
            }
            Prepared::QCoset { center, lambda, m, n } => match (disp[*center], lambda) {
                (None, None) => true,
                (None, Some(_)) | (Some(_), None) => false,
                (Some((v, u)), Some((lv, lu))) => {
                    let modn = checked_pow(p, *n).expect("fits");
                    let inv = mod_inverse(lu % modn, modn).expect("unit");
                    (v - lv).rem_euclid(*m as i64) == 0 && mul_mod(u % modn, inv, modn) == 1 % modn
                }
            },
        }
    }

    fn needs_displacements(&self) -> bool {
        !self.centers.is_empty()
    }

    /// Truth values ordered predicate-major: index `φ·|B| + j`.
    pub fn truth_vector(&self, a: &[Rat]) -> Vec<bool> {
        let disp = if self.needs_displacements() { self.displacements(&a[0]) } else { Vec::new() };
        self.prepared.iter().map(|pr| self.eval_prepared(pr, a, &disp)).collect()
    }

    pub fn truth_vector_with(&self, a: &[Rat], disp: &Displacements) -> Vec<bool> {
        self.prepared.iter().map(|pr| self.eval_prepared(pr, a, disp)).collect()
    }

    pub fn holds(&self, phi: usize, j: usize, a: &[Rat]) -> bool {
        let pr = &self.prepared[phi * self.param_count + j];
        let disp = if self.needs_displacements() { self.displacements(&a[0]) } else { Vec::new() };
        self.eval_prepared(pr, a, &disp)
    }

    pub fn residue_modulus(&self) -> u64 {
        self.modulus
    }
}

/// Realized Φ-types over a parameter set, with one witness point per type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCensus {
    pub count: usize,
    #[serde(skip)]
    pub witnesses: Vec<(Point, Vec<bool>)>,
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, b) in bits.iter().enumerate() {
        if *b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

/// Number of distinct truth vectors among the probes: a lower bound on the
/// number of Φ-types over `B`, exact when the probes meet every type.
pub fn type_census_probe(family: &ParamFamily, params: &[Point], probes: &[Point]) -> TypeCensus {
    let ev = Evaluator::new(family, params);
    let mut seen = std::collections::HashSet::new();
    let mut witnesses = Vec::new();
    for a in probes {
        let bits = ev.truth_vector(a);
        if seen.insert(pack(&bits)) {
            witnesses.push((a.clone(), bits));
        }
    }
    TypeCensus { count: witnesses.len(), witnesses }
}

/// Exact number of Φ-types over `B` for one-dimensional families.
pub fn type_census_1d(family: &ParamFamily, params: &[Point]) -> Result<TypeCensus, FamilyError> {
    let probes: Vec<Point> =
        exact_line_probes(family, params, &Landmarks::default())?.into_iter().map(|x| vec![x]).collect();
    Ok(type_census_probe(family, params, &probes))
}

/// Exact census for semilinear and vector-linear families in any dimension,
/// via one probe per face of the arrangement of all critical forms.
pub fn type_census_arrangement(family: &ParamFamily, params: &[Point]) -> Result<TypeCensus, FamilyError> {
    if family.domain != Domain::Rationals {
        return Err(FamilyError::Unsupported("arrangement census needs an ordered rational family".into()));
    }
    let probes = cylindrical_probes(&family.all_forms(params), family.point_dim);
    Ok(type_census_probe(family, params, &probes))
}

/// Checks that parameters are pairwise distinct and of the right arity.
pub fn check_params(family: &ParamFamily, params: &[Point]) -> Result<(), FamilyError> {
    let mut seen = BTreeSet::new();
    for b in params {
        if b.len() != family.param_dim {
            return Err(FamilyError::Dimension { expected: family.param_dim, got: b.len() });
        }
        if !seen.insert(b.clone()) {
            return Err(FamilyError::Invalid(format!("duplicate parameter {}", fmt_point(b))));
        }
    }
    Ok(())
}

/// Convenience constructors for common families.
pub mod build {
    use super::*;

    fn aff1(k: i64, c: i64) -> Affine {
        Affine::new(vec![rat(k)], rat(c))
    }

    /// Interval family with one predicate per list of pieces, each given as
    /// `(lower, upper)` with ends `(slope, offset, closed)` in a scalar parameter.
    #[allow(clippy::type_complexity)]
    pub fn interval(preds: Vec<(usize, Vec<(Option<(i64, i64, bool)>, Option<(i64, i64, bool)>)>)>) -> ParamFamily {
        let predicates = preds
            .into_iter()
            .map(|(bound, pieces)| Predicate::Interval {
                bound,
                pieces: pieces
                    .into_iter()
                    .map(|(lo, hi)| Piece {
                        lower: lo.map(|(k, c, closed)| Bound { at: aff1(k, c), closed }),
                        upper: hi.map(|(k, c, closed)| Bound { at: aff1(k, c), closed }),
                    })
                    .collect(),
            })
            .collect();
        ParamFamily::new(FamilyKind::Interval, Domain::Rationals, 1, 1, predicates).expect("valid interval family")
    }

    /// `{x < y}` as an interval family.
    pub fn x_less_than_y() -> ParamFamily {
        interval(vec![(1, vec![(None, Some((1, 0, false)))])])
    }

    /// Trichotomy `x − y < 0, = 0, > 0` in dimension `d` (coordinatewise for `d > 1`).
    pub fn trichotomy(d: usize) -> ParamFamily {
        let mut predicates = Vec::new();
        for i in 0..d {
            for rel in [Rel::Lt, Rel::Eq, Rel::Gt] {
                let mut x = vec![rat(0); d];
                let mut y = vec![rat(0); d];
                x[i] = rat(1);
                y[i] = rat(-1);
                predicates.push(Predicate::Linear { atom: LinearAtom::new(x, y, rat(0), rel) });
            }
        }
        ParamFamily::new(FamilyKind::VectorLinear, Domain::Rationals, d, d, predicates).expect("valid")
    }

    /// `x_i < y_i` for each coordinate `i < d`.
    pub fn coordinatewise_less(d: usize) -> ParamFamily {
        let predicates = (0..d)
            .map(|i| {
                let mut x = vec![rat(0); d];
                let mut y = vec![rat(0); d];
                x[i] = rat(1);
                y[i] = rat(-1);
                Predicate::Linear { atom: LinearAtom::new(x, y, rat(0), Rel::Lt) }
            })
            .collect();
        ParamFamily::new(FamilyKind::Semilinear, Domain::Rationals, d, d, predicates).expect("valid")
    }

    /// Presburger family: order trichotomy of `x − y` and all classes of `k | x − y + c`.
    pub fn presburger_basic(k: u64) -> ParamFamily {
        let mut predicates = Vec::new();
        for rel in [Rel::Lt, Rel::Eq, Rel::Gt] {
            predicates.push(Predicate::Linear { atom: LinearAtom::new(vec![rat(1)], vec![rat(-1)], rat(0), rel) });
        }
        for c in 0..k as i64 {
            predicates.push(Predicate::Divides { modulus: k, x: vec![rat(1)], y: vec![rat(-1)], c: rat(c) });
        }
        ParamFamily::new(FamilyKind::Congruence, Domain::Integers, 1, 1, predicates).expect("valid")
    }

    pub fn affine1(k: i64, c: i64) -> Affine {
        aff1(k, c)
    }
}
