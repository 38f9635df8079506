//! Ultrametric balls, the atoms they cut out of `Q_p`, and cell decompositions
//! for one-variable valuation families in two dialects:
//!
//! * balls and power residues: `v(f(y)) < v(x − c(y))`, `P_n(λ·(x − c(y)))`;
//! * affine: `v(x − c_i(y)) < v(x − c_j(y))`, `x − c(y) ∈ λ·Q_{m,n}`.
//!
//! Both decompose the line into *subintervals* `B_lo(t) ∖ (removed balls of
//! radius hi)` around a center `t`, and each subinterval into finitely many
//! residue pieces: an annulus core split by a coset class of `x − t`, and thin
//! boundary shells split into small balls. Radii are read off the ball forest.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::Zero;

use crate::arrangement::Affine;
use crate::decomp::{CellInstance, CellShape, DecompError, Decomposition, Descriptor, Instantiation, Locator};
use crate::families::{power_table, FamilyError, FamilyKind, Landmarks, ParamFamily, Point, Predicate, ValuationDialect};
use crate::scalars::{
    ball_key, checked_pow, fmt_rat, in_ball, in_qmn, p_power, rat, small_valuation, valuation, GammaValue, PowerResidues,
    Rat,
};

/// Identity of a ball as a set: its radius and a canonical center.
pub type BallKey = (GammaValue, Rat);

/// `B_r(c) = {x : v(x − c) > r}`. Radius `+∞` is the point `{c}`, `−∞` the whole line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub center: Rat,
    pub radius: GammaValue,
}

impl Ball {
    pub fn new(center: Rat, radius: GammaValue) -> Ball {
        Ball { center, radius }
    }

    pub fn point(center: Rat) -> Ball {
        Ball { center, radius: GammaValue::PosInf }
    }

    pub fn whole() -> Ball {
        Ball { center: Rat::zero(), radius: GammaValue::NegInf }
    }

    pub fn contains(&self, x: &Rat, p: u64) -> bool {
        in_ball(x, &self.center, self.radius, p)
    }

    /// `self ⊆ other`.
    pub fn within(&self, other: &Ball, p: u64) -> bool {
        self.radius >= other.radius && other.contains(&self.center, p)
    }

    pub fn key(&self, p: u64) -> BallKey {
        ball_key(&self.center, self.radius, p)
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.radius {
            GammaValue::NegInf => write!(f, "Q_p"),
            GammaValue::PosInf => write!(f, "{{{}}}", fmt_rat(&self.center)),
            GammaValue::Finite(r) => write!(f, "B_{r}({})", fmt_rat(&self.center)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestNode {
    pub ball: Ball,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Index of the first input ball with this extent.
    pub first_input: usize,
}

/// Distinct balls ordered by inclusion (Hasse diagram). Two balls are either
/// nested or disjoint, so this is a forest.
#[derive(Debug, Clone)]
pub struct BallForest {
    pub prime: u64,
    pub nodes: Vec<ForestNode>,
    pub roots: Vec<usize>,
}

impl BallForest {
    pub fn build(balls: &[Ball], p: u64) -> BallForest {
        let mut index: HashMap<BallKey, usize> = HashMap::new();
        let mut nodes: Vec<ForestNode> = Vec::new();
        for (i, b) in balls.iter().enumerate() {
            index.entry(b.key(p)).or_insert_with(|| {
                nodes.push(ForestNode { ball: b.clone(), parent: None, children: Vec::new(), first_input: i });
                nodes.len() - 1
            });
        }
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| (nodes[i].ball.radius, i));
        let mut forest = BallForest { prime: p, nodes, roots: Vec::new() };
        for i in order {
            let mut parent: Option<usize> = None;
            loop {
                let level = match parent {
                    None => &forest.roots,
                    Some(q) => &forest.nodes[q].children,
                };
                match level.iter().copied().find(|&j| forest.nodes[i].ball.within(&forest.nodes[j].ball, p)) {
                    Some(j) => parent = Some(j),
                    None => break,
                }
            }
            forest.nodes[i].parent = parent;
            match parent {
                None => forest.roots.push(i),
                Some(q) => forest.nodes[q].children.push(i),
            }
        }
        forest
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of Hasse edges.
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.parent.is_some()).count()
    }

    /// Nodes containing `x`, outermost first.
    pub fn path(&self, x: &Rat) -> Vec<usize> {
        let mut out = Vec::new();
        let mut level = &self.roots;
        while let Some(&i) = level.iter().find(|&&i| self.nodes[i].ball.contains(x, self.prime)) {
            out.push(i);
            level = &self.nodes[i].children;
        }
        out
    }

    /// Whether the part of node `i` outside its children is empty.
    fn node_atom_empty(&self, i: usize) -> bool {
        let node = &self.nodes[i];
        match node.ball.radius {
            GammaValue::Finite(r) => {
                node.children.len() as u64 == self.prime
                    && node.children.iter().all(|&c| self.nodes[c].ball.radius == GammaValue::Finite(r + 1))
            }
            _ => false,
        }
    }

    /// Atoms of the Boolean algebra generated by the balls: the complement of
    /// the roots, then `node ∖ children` for every node, skipping empty ones.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        let whole_root = self.roots.iter().any(|&r| self.nodes[r].ball.radius == GammaValue::NegInf);
        if !whole_root {
            out.push(Atom { outer: None, removed: self.roots.clone() });
        }
        for i in 0..self.nodes.len() {
            if !self.node_atom_empty(i) {
                out.push(Atom { outer: Some(i), removed: self.nodes[i].children.clone() });
            }
        }
        out
    }

    /// The atom containing `x`, as `outer` node (`None` for the complement of the roots).
    pub fn locate(&self, x: &Rat) -> Option<usize> {
        self.path(x).last().copied()
    }
}

/// `outer ∖ ⋃ removed`, with `outer = None` standing for the whole line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub outer: Option<usize>,
    pub removed: Vec<usize>,
}

impl Atom {
    pub fn contains(&self, forest: &BallForest, x: &Rat) -> bool {
        let p = forest.prime;
        self.outer.is_none_or(|o| forest.nodes[o].ball.contains(x, p))
            && !self.removed.iter().any(|&r| forest.nodes[r].ball.contains(x, p))
    }

    /// The atom in the form `B_lo(t) ∖ ⋃_{q ∈ removed} B_hi(q)` with at most
    /// `p − 1` removed balls, when every removed ball has the same radius and
    /// some center of `centers` lies in them. When all `p` sub-balls of
    /// `B_{hi−1}(t)` are removed they merge into that single ball.
    pub fn normalize(&self, forest: &BallForest, centers: &[Rat]) -> Option<Subinterval> {
        let p = forest.prime;
        if let Some(o) = self.outer {
            if forest.nodes[o].ball.radius == GammaValue::PosInf {
                let t = forest.nodes[o].ball.center.clone();
                return Some(Subinterval {
                    center: t,
                    lower: GammaValue::PosInf,
                    upper: GammaValue::PosInf,
                    removed: Vec::new(),
                });
            }
        }
        let lower = self.outer.map_or(GammaValue::NegInf, |o| forest.nodes[o].ball.radius);
        let first = *self.removed.first()?;
        let upper = forest.nodes[first].ball.radius;
        if self.removed.iter().any(|&r| forest.nodes[r].ball.radius != upper) {
            return None;
        }
        let rep = |node: usize| centers.iter().find(|c| forest.nodes[node].ball.contains(c, p)).cloned();
        let mut reps: Vec<Rat> = Vec::new();
        for &r in &self.removed {
            reps.push(rep(r)?);
        }
        let t = reps[0].clone();
        if reps.len() as u64 == p {
            if let GammaValue::Finite(u) = upper {
                return Some(Subinterval { center: t.clone(), lower, upper: GammaValue::Finite(u - 1), removed: vec![t] });
            }
        }
        Some(Subinterval { center: t, lower, upper, removed: reps })
    }
}

/// `B_lower(center) ∖ ⋃_{q ∈ removed} B_upper(q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subinterval {
    pub center: Rat,
    pub lower: GammaValue,
    pub upper: GammaValue,
    pub removed: Vec<Rat>,
}

impl Subinterval {
    pub fn contains(&self, x: &Rat, p: u64) -> bool {
        in_ball(x, &self.center, self.lower, p) && !self.removed.iter().any(|q| in_ball(x, q, self.upper, p))
    }
}

/// Probes meeting every region cut out by `balls`: all centers, and
/// `c + p^s·u` for every center `c`, unit digit `u` and `s` from one below the
/// smallest to one above the largest finite radius or center distance.
pub fn region_probes(balls: &[Ball], p: u64) -> Vec<Rat> {
    let mut centers: Vec<Rat> = balls.iter().map(|b| b.center.clone()).collect();
    centers.sort();
    centers.dedup();
    if centers.is_empty() {
        return vec![Rat::zero()];
    }
    let mut scales: Vec<i64> = balls.iter().filter_map(|b| b.radius.finite()).collect();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if let GammaValue::Finite(v) = valuation(&(&centers[i] - &centers[j]), p) {
                scales.push(v);
            }
        }
    }
    let lo = scales.iter().copied().min().unwrap_or(0) - 1;
    let hi = scales.iter().copied().max().unwrap_or(0) + 1;
    let mut out = Vec::new();
    for c in &centers {
        out.push(c.clone());
        for s in lo..=hi {
            let step = p_power(p, s);
            for u in 1..p {
                out.push(c + &step * rat(u as i64));
            }
        }
    }
    out
}

/// Brute-force atoms: probes grouped by their membership vector over `balls`.
/// Returns the probes and, for each, the index of its membership class.
pub fn brute_force_atoms(balls: &[Ball], p: u64) -> (Vec<Rat>, Vec<usize>, usize) {
    let probes = region_probes(balls, p);
    let mut classes: HashMap<Vec<bool>, usize> = HashMap::new();
    let labels = probes
        .iter()
        .map(|x| {
            let sig: Vec<bool> = balls.iter().map(|b| b.contains(x, p)).collect();
            let n = classes.len();
            *classes.entry(sig).or_insert(n)
        })
        .collect();
    let n = classes.len();
    (probes, labels, n)
}

/// `v(x − t)` for the center `t` of the subinterval holding `x`. Every center
/// inside the atom's outer ball qualifies; they must all agree.
pub fn t_val(forest: &BallForest, centers: &[Rat], x: &Rat) -> Result<GammaValue, String> {
    let p = forest.prime;
    let outer = forest.locate(x);
    if let Some(o) = outer {
        if forest.nodes[o].ball.radius == GammaValue::PosInf {
            return Ok(GammaValue::PosInf);
        }
    }
    let candidates: Vec<&Rat> = centers.iter().filter(|c| outer.is_none_or(|o| forest.nodes[o].ball.contains(c, p))).collect();
    let mut vals = candidates.iter().map(|t| valuation(&(x - *t), p));
    let first = vals.next().ok_or_else(|| format!("no center in the subinterval of {}", fmt_rat(x)))?;
    for (v, t) in vals.zip(candidates.iter().skip(1)) {
        if v != first {
            return Err(format!(
                "T-val of {} is ambiguous: {first} from {} but {v} from {}",
                fmt_rat(x),
                fmt_rat(candidates[0]),
                fmt_rat(t)
            ));
        }
    }
    Ok(first)
}

/// Whether `v(y − x) > 2v(n) + v(y − a)` implies `(x − a)/(y − a) ∈ P_n^×`
/// at this instance (vacuously true when the hypothesis fails).
pub fn coset_transfer_holds(p: u64, n: u32, a: &Rat, x: &Rat, y: &Rat) -> bool {
    if y == a {
        return true;
    }
    let margin = 2 * small_valuation(n as u64, p) as i64;
    let hypothesis = valuation(&(y - x), p) > valuation(&(y - a), p).shift(margin);
    !hypothesis || (x != a && power_table(p, n).contains(&((x - a) / (y - a))))
}

/// Representatives of `Q_p^× / P_n^×`, found by brute force over `p^j·u`.
pub fn power_coset_reps(p: u64, n: u32) -> Vec<Rat> {
    let table = power_table(p, n);
    let modulus = table.modulus();
    let mut reps: Vec<Rat> = Vec::new();
    for j in 0..n.max(1) as i64 {
        for u in (1..modulus).filter(|u| u % p != 0) {
            let cand = p_power(p, j) * rat(u as i64);
            if !reps.iter().any(|r| table.contains(&(&cand / r))) {
                reps.push(cand);
            }
        }
    }
    reps
}

/// Representatives of `Q_p^× / Q_{m,n}^×`: `p^j·u` for `j < m` and units `u` mod `p^n`.
pub fn qmn_coset_reps(p: u64, m: u32, n: u32) -> Vec<Rat> {
    let modulus = checked_pow(p, n).expect("residue modulus fits");
    let mut reps = Vec::new();
    for j in 0..m.max(1) as i64 {
        for u in (1..modulus).filter(|u| u % p != 0) {
            reps.push(p_power(p, j) * rat(u as i64));
        }
    }
    reps
}

/// Where a radius comes from, relative to a cell's own center `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RadiusSource {
    NegInf,
    PosInf,
    /// `v(f(b))`.
    Val { f: usize, b: usize },
    /// `v(t − c(b))`.
    Dist { c: usize, b: usize },
    /// `v(c_j(b) − c_k(b))`.
    Gap { j: usize, k: usize, b: usize },
}

impl RadiusSource {
    fn param(&self) -> Option<usize> {
        match *self {
            RadiusSource::Val { b, .. } | RadiusSource::Dist { b, .. } | RadiusSource::Gap { b, .. } => Some(b),
            _ => None,
        }
    }

    fn label(&self) -> String {
        match *self {
            RadiusSource::NegInf => "-inf".into(),
            RadiusSource::PosInf => "+inf".into(),
            RadiusSource::Val { f, .. } => format!("v(f{f})"),
            RadiusSource::Dist { c, .. } => format!("v(t-c{c})"),
            RadiusSource::Gap { j, k, .. } => format!("v(c{j}-c{k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PieceKind {
    Whole,
    Point,
    /// Annulus core `lo + w < v(x − t) < hi − w` with `x − t` in the given coset class.
    Coset { class: usize },
    /// The ball `B_{r+w}(t + p^r·unit)` at `r = lo + step` or `r = hi − step`.
    Boundary { side: Side, step: i64, unit: u64 },
}

/// Cell descriptor before evaluation against `B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSpec {
    pub kind: PieceKind,
    /// `(center function, parameter index)` of `t`.
    pub center: (usize, usize),
    pub lower: RadiusSource,
    pub upper: RadiusSource,
    /// Affine dialect: one center inside each other removed ball.
    pub others: Vec<(usize, usize)>,
    /// Affine dialect: the `p` removed balls fill `B_{hi−1}(t)` and are removed as one.
    pub merged: bool,
}

impl CellSpec {
    pub fn descriptor(&self) -> Descriptor {
        let mut template = match self.kind {
            PieceKind::Whole => return Descriptor::new("whole", Vec::new()),
            PieceKind::Point => format!("point t=c{}", self.center.0),
            PieceKind::Coset { class } => format!("coset[{class}] t=c{}", self.center.0),
            PieceKind::Boundary { side, step, unit } => {
                let s = if side == Side::Lower { "lo+" } else { "hi-" };
                format!("ball[{s}{step},{unit}] t=c{}", self.center.0)
            }
        };
        let mut params = vec![self.center.1];
        if self.kind != PieceKind::Point {
            template.push_str(&format!(" lo={} hi={}", self.lower.label(), self.upper.label()));
            if self.merged {
                template.push_str("-1");
            }
            params.extend(self.lower.param());
            params.extend(self.upper.param());
            if !self.others.is_empty() {
                let cs: Vec<String> = self.others.iter().map(|(c, _)| format!("c{c}")).collect();
                template.push_str(&format!(" rm={}", cs.join(",")));
                params.extend(self.others.iter().map(|(_, b)| *b));
            }
        }
        Descriptor::new(template, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Macintyre,
    Affine,
}

/// The function sets and residue data a decomposition needs from a family.
#[derive(Debug)]
pub struct ValuationForms {
    pub prime: u64,
    pub dialect: Dialect,
    /// Radius functions `f` (the zero function is implicit).
    pub radius_fns: Vec<Affine>,
    pub center_fns: Vec<Affine>,
    /// `n` of `P_n` (balls dialect) or of `Q_{m,n}` (affine dialect).
    pub n: u32,
    /// `m` of `Q_{m,n}`; 1 in the balls dialect.
    pub m: u32,
    /// Width `w` of the boundary shells: `2v(n)` or `n − 1`.
    pub margin: i64,
    /// Coset representatives splitting annulus cores.
    pub classes: Vec<Rat>,
    /// Unit digits mod `p^(w+1)` splitting boundary shells.
    pub units: Vec<u64>,
    table: Arc<PowerResidues>,
}

impl ValuationForms {
    pub fn from_family(family: &ParamFamily) -> Result<ValuationForms, FamilyError> {
        let dialect = match family.dialect() {
            Some(ValuationDialect::Macintyre) => Dialect::Macintyre,
            Some(ValuationDialect::Laff) => Dialect::Affine,
            None => return Err(FamilyError::Unsupported(format!("{:?} is not a valuation family", family.kind))),
        };
        if family.point_dim != 1 {
            return Err(FamilyError::Unsupported("valuation families need points of dimension 1".into()));
        }
        let prime = family.prime().ok_or_else(|| FamilyError::Invalid("valuation family without a prime".into()))?;
        let mut radius_fns: Vec<Affine> = Vec::new();
        let mut center_fns: Vec<Affine> = Vec::new();
        let push = |v: &mut Vec<Affine>, a: &Affine| {
            if !v.contains(a) {
                v.push(a.clone());
            }
        };
        let (mut pn, mut qm, mut qn) = (1u32, 1u32, 1u32);
        for pr in &family.predicates {
            match pr {
                Predicate::ValBall { f, c } => {
                    if !(f.coeffs.iter().all(Zero::is_zero) && f.constant.is_zero()) {
                        push(&mut radius_fns, f);
                    }
                    push(&mut center_fns, c);
                }
                Predicate::Power { c, n, .. } => {
                    push(&mut center_fns, c);
                    pn = pn.lcm(n);
                }
                Predicate::ValCompare { ci, cj } => {
                    push(&mut center_fns, ci);
                    push(&mut center_fns, cj);
                }
                Predicate::QCoset { c, m, n, .. } => {
                    push(&mut center_fns, c);
                    qm = qm.lcm(m);
                    qn = qn.max(*n);
                }
                other => return Err(FamilyError::Unsupported(format!("predicate {other:?} in a valuation family"))),
            }
        }
        let (n, m, margin, classes) = match dialect {
            Dialect::Macintyre => {
                let e = 2 * small_valuation(pn as u64, prime) as i64;
                (pn, 1, e, power_coset_reps(prime, pn))
            }
            Dialect::Affine => (qn, qm, qn as i64 - 1, qmn_coset_reps(prime, qm, qn)),
        };
        let modulus = checked_pow(prime, (margin + 1) as u32).map_err(|e| FamilyError::Invalid(e.to_string()))?;
        let units = (1..modulus).filter(|u| u % prime != 0).collect();
        Ok(ValuationForms {
            prime,
            dialect,
            radius_fns,
            center_fns,
            n,
            m,
            margin,
            classes,
            units,
            table: power_table(prime, pn),
        })
    }

    fn v(&self, a: &Rat) -> GammaValue {
        valuation(a, self.prime)
    }

    fn in_class(&self, class: usize, d: &Rat) -> bool {
        let lambda = &self.classes[class];
        match self.dialect {
            Dialect::Macintyre => self.table.contains(&(lambda * d)),
            Dialect::Affine => in_qmn(d, lambda, self.prime, self.m, self.n),
        }
    }

    /// Valuations `v` of `x − t` compatible with a class: `v ≡ target (mod period)`.
    fn class_congruence(&self, class: usize) -> (i64, i64) {
        let lv = self.v(&self.classes[class]).finite().expect("classes are nonzero");
        match self.dialect {
            Dialect::Macintyre => ((-lv).rem_euclid(self.n as i64), self.n as i64),
            Dialect::Affine => (lv.rem_euclid(self.m as i64), self.m as i64),
        }
    }

    fn radius(&self, src: RadiusSource, t: &Rat, params: &[Point]) -> GammaValue {
        match src {
            RadiusSource::NegInf => GammaValue::NegInf,
            RadiusSource::PosInf => GammaValue::PosInf,
            RadiusSource::Val { f, b } => self.v(&self.radius_fns[f].eval(&params[b])),
            RadiusSource::Dist { c, b } => self.v(&(t - self.center_fns[c].eval(&params[b]))),
            RadiusSource::Gap { j, k, b } => {
                let y = &params[b];
                self.v(&(self.center_fns[j].eval(y) - self.center_fns[k].eval(y)))
            }
        }
    }

    /// Whether `B_r(t)` for the source's radius is one of the special balls.
    fn names_ball_about(&self, src: RadiusSource, t: &Rat, params: &[Point]) -> bool {
        let p = self.prime;
        match src {
            RadiusSource::Val { b, .. } | RadiusSource::Gap { b, .. } => {
                let r = self.radius(src, t, params);
                self.center_fns.iter().any(|c| in_ball(t, &c.eval(&params[b]), r, p))
            }
            _ => true,
        }
    }

    /// Evaluates a descriptor against `B`.
    pub fn resolve(self: &Arc<Self>, spec: &CellSpec, params: &[Point]) -> PadicCell {
        let p = self.prime;
        let (c0, b0) = spec.center;
        let t = self.center_fns[c0].eval(&params[b0]);
        let lower = self.radius(spec.lower, &t, params);
        let mut upper = self.radius(spec.upper, &t, params);
        let mut valid =
            self.names_ball_about(spec.lower, &t, params) && self.names_ball_about(spec.upper, &t, params);
        let mut removed = Vec::new();
        if self.dialect == Dialect::Affine {
            let others: Vec<Rat> = spec.others.iter().map(|&(c, b)| self.center_fns[c].eval(&params[b])).collect();
            let ok_shape = if spec.merged { others.len() as u64 + 1 == p } else { (others.len() as u64) + 2 <= p.max(2) };
            valid &= ok_shape && (others.is_empty() || upper.is_finite());
            for (i, q) in others.iter().enumerate() {
                valid &= self.v(&(q - &t)) == upper;
                for q2 in &others[..i] {
                    valid &= self.v(&(q - q2)) == upper;
                }
            }
            if spec.merged {
                upper = upper.shift(-1);
                removed.push(t.clone());
            } else {
                removed.push(t.clone());
                removed.extend(others);
            }
        } else {
            valid &= spec.others.is_empty() && !spec.merged;
        }
        PadicCell { forms: Arc::clone(self), kind: spec.kind, center: t, lower, upper, removed, valid }
    }
}

/// One cell, evaluated: its center, radii and the removed-ball representatives.
#[derive(Debug)]
pub struct PadicCell {
    forms: Arc<ValuationForms>,
    pub kind: PieceKind,
    pub center: Rat,
    pub lower: GammaValue,
    pub upper: GammaValue,
    /// Affine dialect only: representatives of the removed radius-`upper` balls, `t` first.
    pub removed: Vec<Rat>,
    /// Own parameters are consistent (radii name special balls about `t`, representatives are distinct children).
    pub valid: bool,
}

impl PadicCell {
    fn p(&self) -> u64 {
        self.forms.prime
    }

    /// Shell radius `r` of a boundary piece, if it lies in `(lower, upper]`.
    fn shell(&self) -> Option<i64> {
        let PieceKind::Boundary { side, step, .. } = self.kind else { return None };
        let r = match side {
            Side::Lower => self.lower.finite()? + step,
            Side::Upper => self.upper.finite()? - step,
        };
        (self.lower < GammaValue::Finite(r) && GammaValue::Finite(r) <= self.upper).then_some(r)
    }

    fn shell_ball(&self) -> Option<Ball> {
        let PieceKind::Boundary { unit, .. } = self.kind else { return None };
        let r = self.shell()?;
        let q = &self.center + p_power(self.p(), r) * rat(unit as i64);
        Some(Ball::new(q, GammaValue::Finite(r + self.forms.margin)))
    }

    fn in_subinterval(&self, x: &Rat) -> bool {
        let p = self.p();
        in_ball(x, &self.center, self.lower, p) && !self.removed.iter().any(|q| in_ball(x, q, self.upper, p))
    }

    /// Emptiness, decided from the cell's own parameters.
    pub fn is_empty(&self) -> bool {
        match self.kind {
            PieceKind::Whole | PieceKind::Point => false,
            PieceKind::Coset { class } => {
                if self.lower >= self.upper {
                    return true;
                }
                let w = self.forms.margin;
                match (self.lower, self.upper) {
                    (GammaValue::Finite(lo), GammaValue::Finite(hi)) => {
                        let (target, period) = self.forms.class_congruence(class);
                        let first = lo + w + 1 + (target - (lo + w + 1)).rem_euclid(period);
                        first >= hi - w
                    }
                    _ => false,
                }
            }
            PieceKind::Boundary { .. } => match self.shell_ball() {
                None => true,
                Some(ball) => {
                    self.forms.dialect == Dialect::Affine
                        && GammaValue::Finite(self.shell().expect("shell")) == self.upper
                        && self.removed.iter().any(|q| in_ball(&ball.center, q, self.upper, self.p()))
                }
            },
        }
    }

    /// Smallest ball holding the cell; used for point location.
    pub fn enclosing_ball(&self) -> Ball {
        match self.kind {
            PieceKind::Whole => Ball::whole(),
            PieceKind::Point => Ball::point(self.center.clone()),
            PieceKind::Coset { .. } => Ball::new(self.center.clone(), self.lower),
            PieceKind::Boundary { .. } => {
                self.shell_ball().unwrap_or_else(|| Ball::new(self.center.clone(), self.lower))
            }
        }
    }

    fn excluded_balls_dialect(&self, b: &[Rat]) -> bool {
        let f = &self.forms;
        let p = f.prime;
        let (lo, hi) = (self.lower, self.upper);
        let centers: Vec<Rat> = f.center_fns.iter().map(|c| c.eval(b)).collect();
        let dists: Vec<GammaValue> = centers.iter().map(|c| f.v(&(&self.center - c))).collect();
        // a center strictly between the two balls
        if dists.iter().any(|&d| lo < d && d < hi) {
            return true;
        }
        // a radius ball about some center, strictly between the two balls
        for rf in &f.radius_fns {
            let r = f.v(&rf.eval(b));
            if lo < r && r < hi && dists.iter().any(|&d| r < d) {
                return true;
            }
        }
        // a boundary ball of the outer shell that is one of the removed balls
        if let (Some(r), Some(ball)) = (self.shell(), self.shell_ball()) {
            if GammaValue::Finite(r) == hi && centers.iter().any(|c| in_ball(c, &ball.center, hi, p)) {
                return true;
            }
        }
        false
    }

    fn excluded_affine_dialect(&self, b: &[Rat]) -> bool {
        let f = &self.forms;
        let p = f.prime;
        let (lo, hi) = (self.lower, self.upper);
        let centers: Vec<Rat> = f.center_fns.iter().map(|c| c.eval(b)).collect();
        let dists: Vec<GammaValue> = centers.iter().map(|c| f.v(&(c - &self.center))).collect();
        if dists.iter().any(|&d| lo < d && d < hi) {
            return true;
        }
        for j in 0..centers.len() {
            for k in j + 1..centers.len() {
                let g = f.v(&(&centers[j] - &centers[k]));
                if lo < g && g < hi && dists.iter().any(|&d| lo < d) {
                    return true;
                }
            }
        }
        centers
            .iter()
            .zip(&dists)
            .any(|(c, &d)| d >= hi && !self.removed.iter().any(|q| in_ball(c, q, hi, p)))
    }

    fn fmt_extent(&self) -> String {
        let t = fmt_rat(&self.center);
        let w = self.forms.margin;
        match self.kind {
            PieceKind::Whole => "Q_p".into(),
            PieceKind::Point => format!("{{{t}}}"),
            PieceKind::Coset { class } => {
                let lam = fmt_rat(&self.forms.classes[class]);
                let class_txt = match self.forms.dialect {
                    Dialect::Macintyre => format!("P_{}({lam}(x-{t}))", self.forms.n),
                    Dialect::Affine => format!("x-{t} in {lam}Q_{{{},{}}}", self.forms.m, self.forms.n),
                };
                format!("{{x : {} < v(x-{t}) < {}, {class_txt}}}", self.lower.shift(w), self.upper.shift(-w))
            }
            PieceKind::Boundary { .. } => match self.shell_ball() {
                Some(b) => b.to_string(),
                None => "∅".into(),
            },
        }
    }
}

impl CellShape for PadicCell {
    fn contains(&self, x: &[Rat]) -> bool {
        let x = &x[0];
        let p = self.p();
        let inside = match self.kind {
            PieceKind::Whole => return true,
            PieceKind::Point => return *x == self.center,
            PieceKind::Coset { class } => {
                let d = x - &self.center;
                if d.is_zero() {
                    return false;
                }
                let v = self.forms.v(&d);
                let w = self.forms.margin;
                self.lower.shift(w) < v && v < self.upper.shift(-w) && self.forms.in_class(class, &d)
            }
            PieceKind::Boundary { .. } => self.shell_ball().is_some_and(|b| b.contains(x, p)),
        };
        inside && (self.forms.dialect == Dialect::Macintyre || self.in_subinterval(x))
    }

    fn excluded_by(&self, b: &[Rat]) -> bool {
        if !self.valid || self.is_empty() {
            return true;
        }
        match self.kind {
            PieceKind::Whole => !self.forms.center_fns.is_empty(),
            PieceKind::Point => false,
            _ => match self.forms.dialect {
                Dialect::Macintyre => self.excluded_balls_dialect(b),
                Dialect::Affine => self.excluded_affine_dialect(b),
            },
        }
    }

    fn witness(&self) -> Option<Point> {
        let p = self.p();
        let x = match self.kind {
            PieceKind::Whole => Rat::zero(),
            PieceKind::Point => self.center.clone(),
            PieceKind::Boundary { .. } => self.shell_ball()?.center,
            PieceKind::Coset { class } => {
                if self.is_empty() {
                    return None;
                }
                let (target, period) = self.forms.class_congruence(class);
                let w = self.forms.margin;
                let start = match self.lower {
                    GammaValue::Finite(lo) => lo + w + 1,
                    _ => self.upper.finite().map_or(0, |hi| hi - w - 1 - 2 * period),
                };
                let v = start + (target - start).rem_euclid(period);
                // x − t = λ^{-1}·p^(v − v(λ)) lands in the class for either dialect
                let lambda = &self.forms.classes[class];
                let lv = self.forms.v(lambda).finite().expect("nonzero");
                let d = match self.forms.dialect {
                    Dialect::Macintyre => p_power(p, v + lv) / lambda,
                    Dialect::Affine => lambda * p_power(p, v - lv),
                };
                &self.center + d
            }
        };
        let pt = vec![x];
        self.contains(&pt).then_some(pt)
    }

    fn landmarks(&self) -> Landmarks {
        Landmarks {
            points: Vec::new(),
            centers: vec![self.center.clone()],
            radii: [self.lower, self.upper].iter().filter_map(|r| r.finite()).collect(),
        }
    }

    fn describe(&self) -> String {
        self.fmt_extent()
    }

    fn canonical(&self) -> String {
        let p = self.p();
        match self.kind {
            PieceKind::Whole => "Q_p".into(),
            PieceKind::Point => format!("pt {}", fmt_rat(&self.center)),
            PieceKind::Coset { class } => {
                let (r, c) = ball_key(&self.center, self.upper.shift(-1), p);
                format!("core {} {} {r} {} {class}", self.lower, self.upper, fmt_rat(&c))
            }
            PieceKind::Boundary { .. } => match self.shell_ball() {
                Some(b) => {
                    let (r, c) = b.key(p);
                    format!("ball {r} {}", fmt_rat(&c))
                }
                None => "∅".into(),
            },
        }
    }
}

/// Point locator over the enclosing balls of a cell list.
pub struct BallLocator {
    forest: BallForest,
    cells_at: Vec<Vec<usize>>,
}

impl BallLocator {
    pub fn build(balls: &[Ball], p: u64) -> BallLocator {
        let forest = BallForest::build(balls, p);
        let mut index: HashMap<BallKey, usize> = HashMap::new();
        for (i, n) in forest.nodes.iter().enumerate() {
            index.insert(n.ball.key(p), i);
        }
        let mut cells_at = vec![Vec::new(); forest.len()];
        for (ci, b) in balls.iter().enumerate() {
            cells_at[index[&b.key(p)]].push(ci);
        }
        BallLocator { forest, cells_at }
    }
}

impl Locator for BallLocator {
    fn candidates(&self, x: &[Rat]) -> Vec<usize> {
        self.forest.path(&x[0]).into_iter().flat_map(|n| self.cells_at[n].iter().copied()).collect()
    }
}

/// Special balls with the source of each radius, as seen from any center inside.
#[derive(Debug, Clone)]
pub struct BallLayout {
    /// `(center function, parameter index)` in parameter-major order.
    pub refs: Vec<(usize, usize)>,
    pub values: Vec<Rat>,
    pub balls: Vec<Ball>,
    pub origins: Vec<RadiusSource>,
    pub forest: BallForest,
}

impl BallLayout {
    pub fn build(forms: &ValuationForms, params: &[Point]) -> BallLayout {
        let p = forms.prime;
        let mut refs = Vec::new();
        let mut values = Vec::new();
        for (b, y) in params.iter().enumerate() {
            for (c, cf) in forms.center_fns.iter().enumerate() {
                refs.push((c, b));
                values.push(cf.eval(y));
            }
        }
        let mut balls: Vec<Ball> = Vec::new();
        let mut origins: Vec<RadiusSource> = Vec::new();
        // distinct center values, first reference wins
        let mut distinct: Vec<usize> = Vec::new();
        let mut seen: HashMap<&Rat, ()> = HashMap::new();
        for (i, v) in values.iter().enumerate() {
            if seen.insert(v, ()).is_none() {
                distinct.push(i);
            }
        }
        for &i in &distinct {
            balls.push(Ball::point(values[i].clone()));
            origins.push(RadiusSource::PosInf);
        }
        if forms.dialect == Dialect::Macintyre {
            for (b, y) in params.iter().enumerate() {
                for (f, rf) in forms.radius_fns.iter().enumerate() {
                    let r = forms.v(&rf.eval(y));
                    if r == GammaValue::PosInf {
                        continue;
                    }
                    for cf in &forms.center_fns {
                        balls.push(Ball::new(cf.eval(y), r));
                        origins.push(RadiusSource::Val { f, b });
                    }
                }
            }
        }
        for &i in &distinct {
            let mut radii: BTreeMap<GammaValue, usize> = BTreeMap::new();
            for &j in &distinct {
                if i != j {
                    radii.entry(forms.v(&(&values[i] - &values[j]))).or_insert(j);
                }
            }
            for (r, j) in radii {
                let (c, b) = refs[j];
                balls.push(Ball::new(values[i].clone(), r));
                origins.push(RadiusSource::Dist { c, b });
            }
        }
        if forms.dialect == Dialect::Affine {
            let k = forms.center_fns.len();
            for (b, y) in params.iter().enumerate() {
                let cs: Vec<Rat> = forms.center_fns.iter().map(|c| c.eval(y)).collect();
                for j in 0..k {
                    for kk in j + 1..k {
                        let g = forms.v(&(&cs[j] - &cs[kk]));
                        if g == GammaValue::PosInf {
                            continue;
                        }
                        for ci in &cs {
                            balls.push(Ball::new(ci.clone(), g));
                            origins.push(RadiusSource::Gap { j, k: kk, b });
                        }
                    }
                }
            }
        }
        let forest = BallForest::build(&balls, p);
        BallLayout { refs, values, balls, origins, forest }
    }

    /// Distinct special balls.
    pub fn distinct_balls(&self) -> Vec<Ball> {
        self.forest.nodes.iter().map(|n| n.ball.clone()).collect()
    }
}

/// Decomposition for one-variable valuation families (either dialect).
pub struct PadicDecomposition {
    pub family: Arc<ParamFamily>,
    pub forms: Arc<ValuationForms>,
}

impl PadicDecomposition {
    pub fn new(family: Arc<ParamFamily>) -> Result<PadicDecomposition, DecompError> {
        if family.kind != FamilyKind::ValuationForm {
            return Err(DecompError::Unsupported(format!("{:?} family", family.kind)));
        }
        let forms = Arc::new(ValuationForms::from_family(&family)?);
        Ok(PadicDecomposition { family, forms })
    }

    pub fn dialect(&self) -> Dialect {
        self.forms.dialect
    }

    pub fn layout(&self, params: &[Point]) -> BallLayout {
        BallLayout::build(&self.forms, params)
    }

    fn piece_kinds(&self) -> Vec<PieceKind> {
        let f = &self.forms;
        let mut out: Vec<PieceKind> = (0..f.classes.len()).map(|class| PieceKind::Coset { class }).collect();
        for &unit in &f.units {
            for step in 1..=f.margin {
                out.push(PieceKind::Boundary { side: Side::Lower, step, unit });
            }
            for step in 0..=f.margin {
                out.push(PieceKind::Boundary { side: Side::Upper, step, unit });
            }
        }
        out
    }

    fn radius_sources(&self, params: &[Point]) -> Vec<RadiusSource> {
        let f = &self.forms;
        let mut out = Vec::new();
        for b in 0..params.len() {
            if f.dialect == Dialect::Macintyre {
                out.extend((0..f.radius_fns.len()).map(|f| RadiusSource::Val { f, b }));
            }
            out.extend((0..f.center_fns.len()).map(|c| RadiusSource::Dist { c, b }));
            if f.dialect == Dialect::Affine {
                for j in 0..f.center_fns.len() {
                    for k in j + 1..f.center_fns.len() {
                        out.push(RadiusSource::Gap { j, k, b });
                    }
                }
            }
        }
        out
    }

    fn instance(&self, spec: CellSpec, params: &[Point]) -> (CellInstance, Arc<PadicCell>) {
        let cell = Arc::new(self.forms.resolve(&spec, params));
        (CellInstance::new(spec.descriptor(), cell.clone()), cell)
    }

    /// `T(B)`, one descriptor per cell, read off the ball forest.
    pub fn cells(&self, params: &[Point]) -> Result<(Vec<CellInstance>, Vec<Ball>), DecompError> {
        crate::decomp::check_distinct(params, self.family.param_dim)?;
        let f = &self.forms;
        let p = f.prime;
        if params.is_empty() || f.center_fns.is_empty() {
            let spec = CellSpec {
                kind: PieceKind::Whole,
                center: (0, 0),
                lower: RadiusSource::NegInf,
                upper: RadiusSource::PosInf,
                others: Vec::new(),
                merged: false,
            };
            let cell = Arc::new(PadicCell {
                forms: Arc::clone(f),
                kind: PieceKind::Whole,
                center: Rat::zero(),
                lower: GammaValue::NegInf,
                upper: GammaValue::PosInf,
                removed: Vec::new(),
                valid: true,
            });
            return Ok((vec![CellInstance::new(spec.descriptor(), cell)], vec![Ball::whole()]));
        }
        let lay = self.layout(params);
        let forest = &lay.forest;
        // first center reference inside each node, and the path of every reference
        let mut first_ref: Vec<Option<usize>> = vec![None; forest.len()];
        let mut paths: Vec<Vec<usize>> = Vec::with_capacity(lay.values.len());
        for (i, v) in lay.values.iter().enumerate() {
            let path = forest.path(v);
            for &n in &path {
                first_ref[n].get_or_insert(i);
            }
            paths.push(path);
        }
        let kinds = self.piece_kinds();
        let mut out: Vec<CellInstance> = Vec::new();
        let mut encl: Vec<Ball> = Vec::new();
        let emit = |spec: CellSpec, out: &mut Vec<CellInstance>, encl: &mut Vec<Ball>| {
            let (inst, cell) = self.instance(spec, params);
            debug_assert!(cell.valid, "fast path produced an inconsistent descriptor {}", inst.descriptor);
            if !cell.is_empty() {
                encl.push(cell.enclosing_ball());
                out.push(inst);
            }
        };
        for atom in forest.atoms() {
            if let Some(o) = atom.outer {
                if forest.nodes[o].ball.radius == GammaValue::PosInf {
                    let r = first_ref[o].expect("point balls are centers");
                    let spec = CellSpec {
                        kind: PieceKind::Point,
                        center: lay.refs[r],
                        lower: RadiusSource::PosInf,
                        upper: RadiusSource::PosInf,
                        others: Vec::new(),
                        merged: false,
                    };
                    emit(spec, &mut out, &mut encl);
                    continue;
                }
            }
            let t_ref = match atom.outer {
                Some(o) => first_ref[o].expect("every special ball holds a center"),
                None => 0,
            };
            let path = &paths[t_ref];
            let depth = match atom.outer {
                Some(o) => path.iter().position(|&n| n == o).expect("t lies in its atom's ball") + 1,
                None => 0,
            };
            let child_t = path[depth];
            let upper_radius = forest.nodes[child_t].ball.radius;
            if atom.removed.iter().any(|&r| forest.nodes[r].ball.radius != upper_radius) {
                return Err(DecompError::Unsupported("special balls with unequal sibling radii".into()));
            }
            let lower = atom.outer.map_or(RadiusSource::NegInf, |o| lay.origins[forest.nodes[o].first_input]);
            let upper = lay.origins[forest.nodes[child_t].first_input];
            let (others, merged) = match f.dialect {
                Dialect::Macintyre => (Vec::new(), false),
                Dialect::Affine => {
                    let others: Vec<(usize, usize)> = atom
                        .removed
                        .iter()
                        .filter(|&&r| r != child_t)
                        .map(|&r| lay.refs[first_ref[r].expect("removed balls hold centers")])
                        .collect();
                    let merged = others.len() as u64 + 1 == p;
                    (others, merged)
                }
            };
            let mut seen_shells: HashMap<(i64, u64), ()> = HashMap::new();
            for &kind in &kinds {
                let spec = CellSpec {
                    kind,
                    center: lay.refs[t_ref],
                    lower,
                    upper,
                    others: others.clone(),
                    merged,
                };
                if let PieceKind::Boundary { unit, .. } = kind {
                    let cell = f.resolve(&spec, params);
                    let Some(r) = cell.shell() else { continue };
                    if seen_shells.insert((r, unit), ()).is_some() {
                        continue;
                    }
                    if f.dialect == Dialect::Macintyre && GammaValue::Finite(r) == cell.upper {
                        let q = cell.shell_ball().expect("shell").center;
                        if atom.removed.iter().any(|&n| forest.nodes[n].ball.contains(&q, p)) {
                            continue;
                        }
                    }
                }
                emit(spec, &mut out, &mut encl);
            }
        }
        Ok((out, encl))
    }
}

impl Decomposition for PadicDecomposition {
    fn name(&self) -> String {
        match self.forms.dialect {
            Dialect::Macintyre => "padic-balls".into(),
            Dialect::Affine => "padic-affine".into(),
        }
    }

    fn point_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        self.family.param_dim
    }

    fn parameter_count(&self) -> usize {
        match self.forms.dialect {
            Dialect::Macintyre => 3,
            Dialect::Affine => 3 + self.forms.prime as usize - 1,
        }
    }

    /// All descriptors over `B`, except those whose own parameters already
    /// make them empty or malformed (`lower ≥ upper`, representatives not at
    /// distance `upper` from `t` or from each other); those are excluded by
    /// every `b` anyway and would only blow up the enumeration.
    fn potential_cells(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        crate::decomp::check_distinct(params, self.family.param_dim)?;
        let f = &self.forms;
        let p = f.prime;
        let whole = CellSpec {
            kind: PieceKind::Whole,
            center: (0, 0),
            lower: RadiusSource::NegInf,
            upper: RadiusSource::PosInf,
            others: Vec::new(),
            merged: false,
        };
        let mut out = vec![CellInstance::new(
            whole.descriptor(),
            Arc::new(PadicCell {
                forms: Arc::clone(f),
                kind: PieceKind::Whole,
                center: Rat::zero(),
                lower: GammaValue::NegInf,
                upper: GammaValue::PosInf,
                removed: Vec::new(),
                valid: true,
            }),
        )];
        let refs: Vec<(usize, usize)> =
            (0..params.len()).flat_map(|b| (0..f.center_fns.len()).map(move |c| (c, b))).collect();
        let values: Vec<Rat> = refs.iter().map(|&(c, b)| f.center_fns[c].eval(&params[b])).collect();
        let sources = self.radius_sources(params);
        let mut lowers = vec![RadiusSource::NegInf];
        lowers.extend(sources.iter().copied());
        let mut uppers = vec![RadiusSource::PosInf];
        uppers.extend(sources.iter().copied());
        let kinds = self.piece_kinds();
        for (ti, &center) in refs.iter().enumerate() {
            let t = &values[ti];
            out.push(
                self.instance(
                    CellSpec {
                        kind: PieceKind::Point,
                        center,
                        lower: RadiusSource::PosInf,
                        upper: RadiusSource::PosInf,
                        others: Vec::new(),
                        merged: false,
                    },
                    params,
                )
                .0,
            );
            for &lower in &lowers {
                let lv = f.radius(lower, t, params);
                for &upper in &uppers {
                    let uv = f.radius(upper, t, params);
                    if lv >= uv {
                        continue;
                    }
                    let layouts: Vec<(Vec<(usize, usize)>, bool)> = match f.dialect {
                        Dialect::Macintyre => vec![(Vec::new(), false)],
                        Dialect::Affine => removal_choices(&refs, &values, t, uv, p, f),
                    };
                    for (others, merged) in layouts {
                        for &kind in &kinds {
                            let spec = CellSpec { kind, center, lower, upper, others: others.clone(), merged };
                            out.push(self.instance(spec, params).0);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn instantiate_with_locator(&self, params: &[Point]) -> Result<Instantiation, DecompError> {
        let (cells, encl) = self.cells(params)?;
        let locator = BallLocator::build(&encl, self.forms.prime);
        Ok(Instantiation { cells, locator: Some(Arc::new(locator)) })
    }
}

/// Sets of other removed-ball representatives: centers at distance exactly
/// `upper` from `t` and from each other, at most `p − 1` of them.
fn removal_choices(
    refs: &[(usize, usize)],
    values: &[Rat],
    t: &Rat,
    upper: GammaValue,
    p: u64,
    f: &ValuationForms,
) -> Vec<(Vec<(usize, usize)>, bool)> {
    let mut out = vec![(Vec::new(), p == 1)];
    if !upper.is_finite() {
        return out;
    }
    let near: Vec<usize> = (0..refs.len()).filter(|&i| f.v(&(&values[i] - t)) == upper).collect();
    let mut stack: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
    while let Some((chosen, from)) = stack.pop() {
        for (k, &i) in near.iter().enumerate().skip(from) {
            if chosen.iter().any(|&j| f.v(&(&values[i] - &values[j])) != upper) {
                continue;
            }
            let mut next = chosen.clone();
            next.push(i);
            if (next.len() as u64) < p {
                let merged = next.len() as u64 + 1 == p;
                out.push((next.iter().map(|&j| refs[j]).collect(), merged));
                if !merged {
                    stack.push((next, k + 1));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::verify;
    use crate::families::{build, Domain};
    use std::collections::HashSet;

    fn ball(c: i64, r: i64) -> Ball {
        Ball::new(rat(c), GammaValue::Finite(r))
    }

    fn params(vals: &[i64]) -> Vec<Point> {
        vals.iter().map(|&v| vec![rat(v)]).collect()
    }

    fn balls_family(p: u64) -> ParamFamily {
        let y = build::affine1(1, 0);
        ParamFamily::new(
            FamilyKind::ValuationForm,
            Domain::Padic { prime: p },
            1,
            1,
            vec![
                Predicate::ValBall { f: Affine::constant(1, rat(0)), c: y.clone() },
                Predicate::ValBall { f: y.clone(), c: y.clone() },
                Predicate::Power { lambda: rat(1), c: y.clone(), n: 2 },
                Predicate::Power { lambda: rat(2), c: y, n: 2 },
            ],
        )
        .unwrap()
    }

    fn affine_family(p: u64) -> ParamFamily {
        let y = build::affine1(1, 0);
        let y2 = build::affine1(2, 0);
        ParamFamily::new(
            FamilyKind::ValuationForm,
            Domain::Padic { prime: p },
            1,
            1,
            vec![
                Predicate::ValCompare { ci: y.clone(), cj: y2.clone() },
                Predicate::ValCompare { ci: y2.clone(), cj: y.clone() },
                Predicate::QCoset { c: y, lambda: rat(1), m: 2, n: 1 },
                Predicate::QCoset { c: y2, lambda: rat(2), m: 2, n: 1 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn special_balls_include_points_and_unit_ball() {
        let fam = balls_family(3);
        let forms = ValuationForms::from_family(&fam).unwrap();
        let lay = BallLayout::build(&forms, &params(&[0, 1]));
        let keys: HashSet<BallKey> = lay.distinct_balls().iter().map(|b| b.key(3)).collect();
        assert!(keys.contains(&Ball::point(rat(0)).key(3)));
        assert!(keys.contains(&Ball::point(rat(1)).key(3)));
        assert!(keys.contains(&ball(0, 0).key(3)));
    }

    #[test]
    fn forest_edges() {
        assert_eq!(BallForest::build(&[ball(0, 1), ball(0, 0)], 3).edge_count(), 1);
        assert_eq!(BallForest::build(&[ball(0, 0), ball(1, 0)], 3).edge_count(), 0);
        // same ball twice collapses
        assert_eq!(BallForest::build(&[ball(0, 0), ball(3, 0)], 3).len(), 1);
    }

    #[test]
    fn atom_counts() {
        assert_eq!(BallForest::build(&[ball(0, 0)], 3).atoms().len(), 2);
        assert_eq!(BallForest::build(&[ball(0, 0), ball(1, 0)], 3).atoms().len(), 3);
        assert_eq!(BallForest::build(&[ball(0, 0), ball(0, 1), ball(0, 2)], 3).atoms().len(), 4);
        // all three unit sub-balls of B_{-1}(0) cover it
        let cover = [ball(0, -1), ball(0, 0), ball(1, 0), ball(2, 0)];
        assert_eq!(BallForest::build(&cover, 3).atoms().len(), 4);
    }

    #[test]
    fn atoms_match_brute_force() {
        let sets: Vec<Vec<Ball>> = vec![
            vec![ball(0, 0)],
            vec![ball(0, 0), ball(1, 0), ball(0, 2), ball(9, 1)],
            vec![ball(0, -1), ball(0, 0), ball(1, 0), ball(2, 0)],
            vec![ball(5, 3), Ball::point(rat(5)), ball(5, -2), Ball::point(rat(7))],
        ];
        for balls in sets {
            let forest = BallForest::build(&balls, 3);
            let atoms = forest.atoms();
            let (probes, labels, n) = brute_force_atoms(&balls, 3);
            assert_eq!(atoms.len(), n, "{balls:?}");
            let mut map: HashMap<usize, usize> = HashMap::new();
            for (x, &l) in probes.iter().zip(&labels) {
                let hits: Vec<usize> = (0..atoms.len()).filter(|&a| atoms[a].contains(&forest, x)).collect();
                assert_eq!(hits.len(), 1);
                assert_eq!(*map.entry(l).or_insert(hits[0]), hits[0]);
            }
        }
    }

    #[test]
    fn normalized_atoms_have_the_same_extent() {
        let fam = balls_family(3);
        let forms = ValuationForms::from_family(&fam).unwrap();
        let lay = BallLayout::build(&forms, &params(&[0, 1, 3, 4, 12]));
        let balls = lay.distinct_balls();
        let probes = region_probes(&balls, 3);
        for atom in lay.forest.atoms() {
            let sub = atom.normalize(&lay.forest, &lay.values).expect("special balls normalize");
            assert!(sub.removed.len() < 3);
            for x in &probes {
                assert_eq!(atom.contains(&lay.forest, x), sub.contains(x, 3), "{sub:?} at {x}");
            }
        }
        for x in &probes {
            t_val(&lay.forest, &lay.values, x).unwrap();
        }
    }

    #[test]
    fn coset_transfer_example() {
        assert!(coset_transfer_holds(3, 2, &rat(0), &rat(28), &rat(1)));
        assert_eq!(power_coset_reps(3, 2).len(), 4);
        assert_eq!(power_coset_reps(2, 2).len(), 8);
    }

    #[test]
    fn balls_dialect_example_verifies() {
        let fam = Arc::new(balls_family(3));
        let d = PadicDecomposition::new(fam.clone()).unwrap();
        let b = params(&[0, 1, 3]);
        let rep = verify(&d, &fam, &b, &[]).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.cell_count_raw, 21);
        let inst = d.instantiate(&b).unwrap();
        assert!(inst.iter().all(|c| c.descriptor.arity() <= 3));
    }

    #[test]
    fn affine_dialect_example_verifies() {
        let fam = Arc::new(affine_family(3));
        let d = PadicDecomposition::new(fam.clone()).unwrap();
        let b = params(&[0, 1, 3]);
        let rep = verify(&d, &fam, &b, &[]).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    fn extents(cells: &[CellInstance]) -> Vec<String> {
        let mut v: Vec<String> = cells.iter().map(|c| c.shape.canonical()).collect();
        v.sort();
        v.dedup();
        v
    }

    #[test]
    fn fast_path_matches_filter() {
        for (fam, bs) in [
            (balls_family(3), vec![vec![0, 1, 3], vec![0, 9], vec![2, 5, 11]]),
            (affine_family(3), vec![vec![0, 1], vec![0, 3], vec![1, 4]]),
        ] {
            let fam = Arc::new(fam);
            let d = PadicDecomposition::new(fam.clone()).unwrap();
            for vals in bs {
                let b = params(&vals);
                let fast = d.instantiate(&b).unwrap();
                let slow: Vec<CellInstance> = d
                    .potential_cells(&b)
                    .unwrap()
                    .into_iter()
                    .filter(|c| !b.iter().any(|y| c.excluded_by(y)))
                    .collect();
                assert_eq!(extents(&fast), extents(&slow), "{} B={vals:?}", d.name());
                assert_eq!(extents(&fast).len(), fast.len());
            }
        }
    }

    #[test]
    fn removing_a_cell_breaks_coverage() {
        let fam = Arc::new(balls_family(3));
        let d = PadicDecomposition::new(fam.clone()).unwrap();
        let b = params(&[0, 1, 3]);
        let mut inst = d.instantiate(&b).unwrap();
        inst.remove(0);
        let rep = crate::decomp::verify_instantiation(&Instantiation::plain(inst), &fam, &b, &[]).unwrap();
        assert!(!rep.covered);
    }
}
