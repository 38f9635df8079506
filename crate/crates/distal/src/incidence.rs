//! Incidence graphs: `K_{s,u}` search, Zarankiewicz-type edge-count ratios on
//! grid constructions, sum-product and `A + B·B` experiments, and dual trace
//! counting for the VC-density probe.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomp::{loglog_slope, par_map};
use crate::families::Point;
use crate::scalars::{fmt_rat, rat, valuation, GammaValue, Rat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IncidenceError {
    #[error("input set is empty")]
    EmptySet,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unsupported subgraph shape K_{{{0},{1}}}: one side must have size 1 to 3")]
    Shape(usize, usize),
    #[error("graph contains K_{{{s},{u}}}: points {points:?}, parameters {params:?}")]
    ContainsKsu { s: usize, u: usize, points: Vec<usize>, params: Vec<usize> },
    #[error("invalid bound profile: {0}")]
    Profile(String),
}

/// Where equality of coordinates is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Field {
    Rationals,
    /// Rationals inside `Q_p`: `a = b` iff `v_p(a − b) = +∞`.
    Padic { prime: u64 },
}

impl Field {
    pub fn equal(&self, a: &Rat, b: &Rat) -> bool {
        match self {
            Field::Rationals => a == b,
            Field::Padic { prime } => valuation(&(a - b), *prime) == GammaValue::PosInf,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Field::Rationals => "Q".into(),
            Field::Padic { prime } => format!("Q_{prime}"),
        }
    }
}

/// A binary relation `E(x; y)` between points and parameters.
pub trait Relation: Send + Sync {
    fn name(&self) -> String;
    fn holds(&self, x: &[Rat], y: &[Rat]) -> bool;
    /// Parameters realizing every trace `{a ∈ A : E(a; b)}` on `points`.
    fn trace_params(&self, points: &[Point]) -> Vec<Point>;
}

/// Relations whose instances are graphs `x2 = f(x1; y)` of functions of `x1`.
pub trait GraphRelation: Relation {
    fn value(&self, x1: &Rat, y: &[Rat]) -> Rat;
}

/// Slopes from `p` to the other points with a different first coordinate.
fn slopes_from(p: &[Rat], points: &[Point]) -> BTreeSet<Rat> {
    points
        .iter()
        .filter(|q| q[0] != p[0])
        .map(|q| (&q[1] - &p[1]) / (&q[0] - &p[0]))
        .collect()
}

/// Smallest integer `≥ start` not in `used` (and not zero when `nonzero`).
fn fresh(used: &BTreeSet<Rat>, start: i64, nonzero: bool) -> Rat {
    let mut k = start;
    loop {
        let v = rat(k);
        if !used.contains(&v) && !(nonzero && k == 0) {
            return v;
        }
        k += 1;
    }
}

fn max_of(values: impl Iterator<Item = Rat>) -> Rat {
    values.max().unwrap_or_else(|| rat(0))
}

/// Non-vertical lines `x2 = y1 + y2·x1`.
#[derive(Debug, Clone, Copy)]
pub struct SlopeIntercept {
    pub field: Field,
}

impl Relation for SlopeIntercept {
    fn name(&self) -> String {
        format!("x2 = y1 + y2*x1 over {}", self.field.label())
    }
    fn holds(&self, x: &[Rat], y: &[Rat]) -> bool {
        self.field.equal(&x[1], &self.value(&x[0], y))
    }
    fn trace_params(&self, points: &[Point]) -> Vec<Point> {
        let mut out = BTreeSet::new();
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                if q[0] != p[0] {
                    let s = (&q[1] - &p[1]) / (&q[0] - &p[0]);
                    out.insert(vec![&p[1] - &s * &p[0], s]);
                }
            }
            let s = fresh(&slopes_from(p, points), 0, false);
            out.insert(vec![&p[1] - &s * &p[0], s]);
        }
        // a horizontal line above every point
        out.insert(vec![max_of(points.iter().map(|p| p[1].clone())) + rat(1), rat(0)]);
        out.into_iter().collect()
    }
}

impl GraphRelation for SlopeIntercept {
    fn value(&self, x1: &Rat, y: &[Rat]) -> Rat {
        &y[0] + &y[1] * x1
    }
}

/// Lines through `(y1, 0)` with slope `y2`: `y2·(x1 − y1) = x2`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedLine {
    pub field: Field,
}

impl Relation for ShiftedLine {
    fn name(&self) -> String {
        format!("y2*(x1 - y1) = x2 over {}", self.field.label())
    }
    fn holds(&self, x: &[Rat], y: &[Rat]) -> bool {
        self.field.equal(&x[1], &self.value(&x[0], y))
    }
    /// Realizable lines: every non-horizontal line, and `x2 = 0`.
    fn trace_params(&self, points: &[Point]) -> Vec<Point> {
        let mut out = BTreeSet::new();
        let through = |p: &[Rat], s: &Rat| vec![&p[0] - &p[1] / s, s.clone()];
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                if q[0] == p[0] {
                    continue;
                }
                let s = (&q[1] - &p[1]) / (&q[0] - &p[0]);
                if s != rat(0) {
                    out.insert(through(p, &s));
                } else if p[1] == rat(0) {
                    out.insert(vec![rat(0), rat(0)]);
                }
            }
            out.insert(through(p, &fresh(&slopes_from(p, points), 1, true)));
        }
        // slope 1 shifted past every x1 − x2
        out.insert(vec![max_of(points.iter().map(|p| &p[0] - &p[1])) + rat(1), rat(1)]);
        out.into_iter().collect()
    }
}

impl GraphRelation for ShiftedLine {
    fn value(&self, x1: &Rat, y: &[Rat]) -> Rat {
        &y[1] * (x1 - &y[0])
    }
}

/// `x = y` on the line.
#[derive(Debug, Clone, Copy)]
pub struct Equality;

impl Relation for Equality {
    fn name(&self) -> String {
        "x = y".into()
    }
    fn holds(&self, x: &[Rat], y: &[Rat]) -> bool {
        x[0] == y[0]
    }
    fn trace_params(&self, points: &[Point]) -> Vec<Point> {
        let mut out: BTreeSet<Point> = points.iter().cloned().collect();
        out.insert(vec![max_of(points.iter().map(|p| p[0].clone())) + rat(1)]);
        out.into_iter().collect()
    }
}

/// The empty relation.
#[derive(Debug, Clone, Copy)]
pub struct Never;

impl Relation for Never {
    fn name(&self) -> String {
        "false".into()
    }
    fn holds(&self, _x: &[Rat], _y: &[Rat]) -> bool {
        false
    }
    fn trace_params(&self, _points: &[Point]) -> Vec<Point> {
        vec![vec![rat(0)]]
    }
}

/// A finite bipartite graph `E ⊆ P × Q`, stored as the sorted point
/// neighborhoods of each parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteInstance {
    pub point_count: usize,
    pub neighbors: Vec<Vec<u32>>,
}

impl BipartiteInstance {
    pub fn new(point_count: usize, mut neighbors: Vec<Vec<u32>>) -> BipartiteInstance {
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        BipartiteInstance { point_count, neighbors }
    }

    /// Evaluates the relation on every pair.
    pub fn from_relation(rel: &dyn Relation, points: &[Point], params: &[Point]) -> BipartiteInstance {
        let neighbors = params
            .iter()
            .map(|y| (0..points.len()).filter(|&i| rel.holds(&points[i], y)).map(|i| i as u32).collect())
            .collect();
        BipartiteInstance::new(points.len(), neighbors)
    }

    pub fn param_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// The same graph with the roles of points and parameters swapped.
    pub fn transpose(&self) -> BipartiteInstance {
        let mut adj = vec![Vec::new(); self.point_count];
        for (q, ns) in self.neighbors.iter().enumerate() {
            for &p in ns {
                adj[p as usize].push(q as u32);
            }
        }
        BipartiteInstance { point_count: self.neighbors.len(), neighbors: adj }
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Some `k` elements of side A (`k ≤ 3`) with at least `need` common
/// neighbors in side B. `a_adj[a]` and `b_adj[b]` are sorted neighborhoods.
/// Second and third elements are restricted to those sharing `need`
/// neighbors with the first, found by counting over its neighborhood.
fn common_neighborhood_search(
    a_adj: &[Vec<u32>],
    b_adj: &[Vec<u32>],
    k: usize,
    need: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let take = |c: &[u32]| c[..need].iter().map(|&x| x as usize).collect::<Vec<_>>();
    let mut count = vec![0u32; a_adj.len()];
    let mut touched = Vec::new();
    for a1 in 0..a_adj.len() {
        let c1 = &a_adj[a1];
        if c1.len() < need {
            continue;
        }
        if k == 1 {
            return Some((vec![a1], take(c1)));
        }
        touched.clear();
        for &b in c1 {
            for &a in &b_adj[b as usize] {
                let a = a as usize;
                if a > a1 {
                    if count[a] == 0 {
                        touched.push(a);
                    }
                    count[a] += 1;
                }
            }
        }
        let mut cands: Vec<usize> = touched.iter().copied().filter(|&a| count[a] as usize >= need).collect();
        for &a in &touched {
            count[a] = 0;
        }
        cands.sort_unstable();
        for (i, &a2) in cands.iter().enumerate() {
            let c2 = intersect(c1, &a_adj[a2]);
            if k == 2 {
                return Some((vec![a1, a2], take(&c2)));
            }
            for &a3 in &cands[i + 1..] {
                let c3 = intersect(&c2, &a_adj[a3]);
                if c3.len() >= need {
                    return Some((vec![a1, a2, a3], take(&c3)));
                }
            }
        }
    }
    None
}

/// `s` points and `u` parameters, every pair incident.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KsuWitness {
    pub points: Vec<usize>,
    pub params: Vec<usize>,
}

/// Exhaustive search for `K_{s,u}`. Subsets are enumerated on whichever side
/// has size at most 3 and the smaller sum of squared degrees on the other.
pub fn contains_ksu(inst: &BipartiteInstance, s: usize, u: usize) -> Result<Option<KsuWitness>, IncidenceError> {
    if s == 0 || u == 0 || (s > 3 && u > 3) {
        return Err(IncidenceError::Shape(s, u));
    }
    if s > inst.point_count || u > inst.param_count() {
        return Ok(None);
    }
    let by_point = inst.transpose().neighbors;
    let cost = |adj: &[Vec<u32>]| adj.iter().map(|n| (n.len() * n.len()) as u128).sum::<u128>();
    // subsets of points cost Σ deg(q)², subsets of parameters Σ deg(p)²
    let point_side = s <= 3 && (u > 3 || cost(&inst.neighbors) <= cost(&by_point));
    Ok(if point_side {
        common_neighborhood_search(&by_point, &inst.neighbors, s, u).map(|(points, params)| KsuWitness { points, params })
    } else {
        common_neighborhood_search(&inst.neighbors, &by_point, u, s).map(|(params, points)| KsuWitness { points, params })
    })
}

/// Exponents of the edge bound `m^q n^r + m + n` for graphs omitting `K_{s,u}`
/// whose relation has distal exponent `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundProfile {
    pub s: usize,
    pub u: usize,
    pub t: f64,
}

impl BoundProfile {
    pub fn new(s: usize, u: usize, t: f64) -> Result<BoundProfile, IncidenceError> {
        if s == 0 || u == 0 || t < 1.0 || t * s as f64 <= 1.0 {
            return Err(IncidenceError::Profile(format!("s = {s}, u = {u}, t = {t}")));
        }
        Ok(BoundProfile { s, u, t })
    }

    /// `(t − 1)s / (ts − 1)`.
    pub fn q(&self) -> f64 {
        (self.t - 1.0) * self.s as f64 / (self.t * self.s as f64 - 1.0)
    }

    /// `t(s − 1) / (ts − 1)`.
    pub fn r(&self) -> f64 {
        self.t * (self.s as f64 - 1.0) / (self.t * self.s as f64 - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZarankiewiczReport {
    pub experiment: String,
    pub m: usize,
    pub n: usize,
    pub edges: usize,
    pub q: f64,
    pub r: f64,
    /// `m^q n^r + m + n`.
    pub bound_base: f64,
    pub ratio: f64,
}

/// Edge count against `m^q n^r + m + n`, after certifying `K_{s,u}`-freeness.
pub fn zarankiewicz_check(
    inst: &BipartiteInstance,
    profile: &BoundProfile,
    experiment: &str,
) -> Result<ZarankiewiczReport, IncidenceError> {
    if let Some(w) = contains_ksu(inst, profile.s, profile.u)? {
        return Err(IncidenceError::ContainsKsu { s: profile.s, u: profile.u, points: w.points, params: w.params });
    }
    let (m, n) = (inst.point_count, inst.param_count());
    let (q, r) = (profile.q(), profile.r());
    let bound_base = (m as f64).powf(q) * (n as f64).powf(r) + m as f64 + n as f64;
    let edges = inst.edge_count();
    let ratio = if edges == 0 { 0.0 } else { edges as f64 / bound_base };
    Ok(ZarankiewiczReport { experiment: experiment.into(), m, n, edges, q, r, bound_base, ratio })
}

/// Relative growth of the ratio over the last three reports.
pub fn ratio_growth(reports: &[ZarankiewiczReport]) -> Option<f64> {
    let k = reports.len();
    if k < 3 || reports[k - 3].ratio == 0.0 {
        return None;
    }
    Some(reports[k - 1].ratio / reports[k - 3].ratio - 1.0)
}

/// Grid points `[1, k] × [1, 2kl]` against the lines `x2 = b + a·x1` with
/// `a ∈ [1, l]`, `b ∈ [1, kl]`. Every line meets exactly `k` grid points, so
/// `|E| = k²l²` with `m = 2k²l` and `n = kl²`.
pub fn elekes_grid(k: usize, l: usize) -> BipartiteInstance {
    let height = 2 * k * l;
    let mut neighbors = Vec::with_capacity(k * l * l);
    for a in 1..=l {
        for b in 1..=k * l {
            neighbors.push((1..=k).map(|x| ((x - 1) * height + (b + a * x - 1)) as u32).collect());
        }
    }
    BipartiteInstance { point_count: k * height, neighbors }
}

/// Explicit coordinates of the grid construction, in the same index order:
/// points `(x1, x2)` and line parameters `(b, a)` for [`SlopeIntercept`].
pub fn elekes_coordinates(k: usize, l: usize) -> (Vec<Point>, Vec<Point>) {
    let height = 2 * k * l;
    let mut points = Vec::with_capacity(k * height);
    for x in 1..=k {
        for y in 1..=height {
            points.push(vec![rat(x as i64), rat(y as i64)]);
        }
    }
    let mut lines = Vec::with_capacity(k * l * l);
    for a in 1..=l {
        for b in 1..=k * l {
            lines.push(vec![rat(b as i64), rat(a as i64)]);
        }
    }
    (points, lines)
}

/// Grid instances with `k = n` for each size and a fixed slope count, checked
/// in parallel and reported in size order.
pub fn zarankiewicz_sweep(
    sizes: &[usize],
    slopes: usize,
    profile: &BoundProfile,
    threads: usize,
) -> Result<Vec<ZarankiewiczReport>, IncidenceError> {
    par_map(sizes, threads, |&n| zarankiewicz_check(&elekes_grid(n, slopes), profile, &format!("elekes-grid-k{n}-l{slopes}")))
        .into_iter()
        .collect()
}

/// Incidences of a graph relation with a point set, counted exactly: on the
/// graph of `f(·; y)` the only candidate over `x1` is `(x1, f(x1; y))`.
pub fn count_graph_incidences(rel: &dyn GraphRelation, points: &[Point], params: &[Point]) -> usize {
    let set: HashSet<&Point> = points.iter().collect();
    let firsts: BTreeSet<&Rat> = points.iter().map(|p| &p[0]).collect();
    let mut count = 0;
    for y in params {
        for x1 in &firsts {
            let candidate = vec![(*x1).clone(), rel.value(x1, y)];
            if set.contains(&candidate) {
                debug_assert!(rel.holds(&candidate, y));
                count += 1;
            }
        }
    }
    count
}

/// Incidences with the grid `xs × ys` without materializing it.
pub fn count_grid_incidences(rel: &dyn GraphRelation, xs: &BTreeSet<Rat>, ys: &BTreeSet<Rat>, params: &[Point]) -> usize {
    // keyed by the reduced numerator/denominator: hashing a `Ratio` directly
    // walks its continued fraction
    let ys: HashSet<(&BigInt, &BigInt)> = ys.iter().map(|v| (v.numer(), v.denom())).collect();
    let mut count = 0;
    for y in params {
        for x1 in xs {
            let v = rel.value(x1, y);
            if ys.contains(&(v.numer(), v.denom())) {
                debug_assert!(rel.holds(&[x1.clone(), v.clone()], y));
                count += 1;
            }
        }
    }
    count
}

/// Least common denominator of the given values.
fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    values.into_iter().fold(BigInt::from(1), |l, v| l.lcm(v.denom()))
}

/// `scale·v` for each value, when all results stay below `2^40` in size.
fn scaled(values: &[Rat], scale: &BigInt) -> Option<Vec<i128>> {
    let limit = BigInt::from(1i64 << 40);
    values
        .iter()
        .map(|v| {
            let w = (v * Rat::from_integer(scale.clone())).to_integer();
            (w.abs() < limit).then(|| w.to_i128()).flatten()
        })
        .collect()
}

/// Sum-product incidences after clearing denominators: with `L` the common
/// denominator, `(u, v) ↦ (Lu, L²v)` and `(c, d) ↦ (Lc, Ld)` preserve
/// `d(u − c) = v`, so the count is that of an integer configuration.
fn sum_product_integer_count(a: &[Rat]) -> Option<usize> {
    let a = scaled(a, &common_denominator(a))?;
    let sums: BTreeSet<i128> = a.iter().flat_map(|x| a.iter().map(move |y| x + y)).collect();
    let prods: HashSet<i128> = a.iter().flat_map(|x| a.iter().map(move |y| x * y)).collect();
    let mut count = 0;
    for c in &a {
        for d in &a {
            count += sums.iter().filter(|&&u| prods.contains(&(d * (u - c)))).count();
        }
    }
    Some(count)
}

/// `A + B·B` incidences after clearing denominators: `x ↦ Lx`, `y ↦ L²y` and
/// `(a, b) ↦ (L²a, Lb)` preserve `y = a + b·x`.
fn sum_bb_integer_count(a: &[Rat], b: &[Rat]) -> Option<usize> {
    let l = common_denominator(a.iter().chain(b));
    let a = scaled(a, &(&l * &l))?;
    let b = scaled(b, &l)?;
    let squares: Vec<i128> = b.iter().flat_map(|y| b.iter().map(move |z| y * z)).collect();
    let target: HashSet<i128> = a.iter().flat_map(|x| squares.iter().map(move |s| x + s)).collect();
    let mut count = 0;
    for p in &a {
        for q in &b {
            count += b.iter().filter(|&&x| target.contains(&(p + q * x))).count();
        }
    }
    Some(count)
}

fn distinct(a: &[Rat]) -> Result<Vec<Rat>, IncidenceError> {
    let set: BTreeSet<Rat> = a.iter().cloned().collect();
    if set.is_empty() {
        return Err(IncidenceError::EmptySet);
    }
    Ok(set.into_iter().collect())
}

fn sums(a: &[Rat], b: &[Rat]) -> BTreeSet<Rat> {
    a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect()
}

fn products(a: &[Rat], b: &[Rat]) -> BTreeSet<Rat> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumProductReport {
    pub field: String,
    pub a_size: usize,
    pub sum_size: usize,
    pub product_size: usize,
    pub max_size: usize,
    /// `log_|A| max(|A+A|, |A·A|)`; zero when `|A| = 1`.
    pub exponent: f64,
    pub points: usize,
    pub params: usize,
    pub incidences: usize,
    pub lower_bound: usize,
    pub holds: bool,
}

/// Points `(A+A) × (A·A)` against the lines `y2(x1 − y1) = x2`, `y ∈ A × A`.
/// Each line `(c, d)` meets `(a + c, a·d)` for every `a ∈ A`, so `|E| ≥ |A|³`.
pub fn sum_product_experiment(a: &[Rat], field: Field) -> Result<SumProductReport, IncidenceError> {
    let a = distinct(a)?;
    let (sum, prod) = (sums(&a, &a), products(&a, &a));
    let params: Vec<Point> = a.iter().flat_map(|c| a.iter().map(move |d| vec![c.clone(), d.clone()])).collect();
    // equality in Q_p restricted to Q is equality in Q, so one count serves both
    let incidences = sum_product_integer_count(&a)
        .unwrap_or_else(|| count_grid_incidences(&ShiftedLine { field }, &sum, &prod, &params));
    let points = sum.len() * prod.len();
    let lower_bound = a.len().pow(3);
    let max_size = sum.len().max(prod.len());
    let exponent = if a.len() > 1 { (max_size as f64).ln() / (a.len() as f64).ln() } else { 0.0 };
    Ok(SumProductReport {
        field: field.label(),
        a_size: a.len(),
        sum_size: sum.len(),
        product_size: prod.len(),
        max_size,
        exponent,
        points,
        params: params.len(),
        incidences,
        lower_bound,
        holds: incidences >= lower_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumBbReport {
    pub field: String,
    pub a_size: usize,
    pub b_size: usize,
    /// `|A + B·B|`.
    pub target_size: usize,
    pub incidences: usize,
    pub expected: usize,
    pub identity_holds: bool,
    /// `|A + B·B| / (|A|^{1/2} |B|)`, the lower-bound shape for lines (`t = 2`).
    pub ratio: f64,
}

/// Points `B × (A + B·B)` against the lines `x2 = y1 + y2·x1`, `y ∈ A × B`.
/// Line `(a, b)` meets exactly `(c, a + bc)` for each `c ∈ B`.
pub fn sum_bb_experiment(a: &[Rat], b: &[Rat], field: Field) -> Result<SumBbReport, IncidenceError> {
    let (a, b) = (distinct(a)?, distinct(b)?);
    let zero = [rat(0)];
    if a == zero && b == zero {
        return Err(IncidenceError::Degenerate("both sets are {0}".into()));
    }
    let target = sums(&a, &products(&b, &b).into_iter().collect::<Vec<_>>());
    let params: Vec<Point> = a.iter().flat_map(|x| b.iter().map(move |y| vec![x.clone(), y.clone()])).collect();
    let incidences = sum_bb_integer_count(&a, &b)
        .unwrap_or_else(|| count_grid_incidences(&SlopeIntercept { field }, &b.iter().cloned().collect(), &target, &params));
    let expected = a.len() * b.len() * b.len();
    Ok(SumBbReport {
        field: field.label(),
        a_size: a.len(),
        b_size: b.len(),
        target_size: target.len(),
        incidences,
        expected,
        identity_holds: incidences == expected,
        ratio: target.len() as f64 / ((a.len() as f64).sqrt() * b.len() as f64),
    })
}

/// Number of distinct traces `{a ∈ A : E(a; b)}` over all parameters `b`.
pub fn trace_count(rel: &dyn Relation, points: &[Point]) -> usize {
    rel.trace_params(points)
        .iter()
        .map(|y| points.iter().map(|x| rel.holds(x, y)).collect::<Vec<bool>>())
        .collect::<HashSet<_>>()
        .len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcDensityReport {
    pub relation: String,
    pub sizes: Vec<usize>,
    /// Maximum trace count per size.
    pub traces: Vec<usize>,
    pub exponent: f64,
    /// No sample's point-trace graph contains `K_{s,2}`.
    pub ksu_free: bool,
}

/// Growth of the maximum trace count over sample sets, grouped by size.
pub fn vc_density_probe(rel: &dyn Relation, samples: &[Vec<Point>], s: usize) -> Result<VcDensityReport, IncidenceError> {
    let mut by_size: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut ksu_free = true;
    for a in samples {
        let a: Vec<Point> = a.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let count = trace_count(rel, &a);
        let e = by_size.entry(a.len()).or_insert(0);
        *e = (*e).max(count);
        let inst = BipartiteInstance::from_relation(rel, &a, &rel.trace_params(&a));
        if contains_ksu(&inst, s, 2)?.is_some() {
            ksu_free = false;
        }
    }
    let sizes: Vec<usize> = by_size.keys().copied().collect();
    let traces: Vec<usize> = by_size.values().copied().collect();
    let pts: Vec<(f64, f64)> = sizes.iter().zip(&traces).map(|(&n, &t)| (n as f64, t as f64)).collect();
    Ok(VcDensityReport { relation: rel.name(), sizes, traces, exponent: loglog_slope(&pts).unwrap_or(0.0), ksu_free })
}

/// Renders a set of scalars for diagnostics.
pub fn describe_set(a: &[Rat]) -> String {
    format!("{{{}}}", a.iter().map(fmt_rat).collect::<Vec<_>>().join(", "))
}
