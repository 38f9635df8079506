//! The decomposition abstraction: potential cells, exclusion predicates,
//! instantiation, the verifier, combinators and shatter-exponent fitting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrangement::Interval;
use crate::families::{check_params, exact_line_probes, Evaluator, FamilyError, Landmarks, ParamFamily, Point};
use crate::scalars::{fmt_point, Rat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("duplicate parameter {0}")]
    DuplicateParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("input is not a chain under inclusion: {0}")]
    NotAChain(String),
}

/// Template id plus the indices (into `B`) of the parameters it uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Descriptor {
    pub template: String,
    pub params: Vec<usize>,
}

impl Descriptor {
    pub fn new(template: impl Into<String>, params: Vec<usize>) -> Descriptor {
        Descriptor { template: template.into(), params }
    }

    /// Number of distinct elements of `B` referenced.
    pub fn arity(&self) -> usize {
        self.params.iter().collect::<BTreeSet<_>>().len()
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.params.iter().map(|p| format!("b{p}")).collect();
        write!(f, "{}[{}]", self.template, ps.join(","))
    }
}

/// A cell's extent and exclusion predicate, definable from its own parameters.
pub trait CellShape: Send + Sync + fmt::Debug {
    fn contains(&self, x: &[Rat]) -> bool;

    /// `b ∈ I(Δ)`.
    fn excluded_by(&self, b: &[Rat]) -> bool;

    /// A point of the cell, when one is cheaply known.
    fn witness(&self) -> Option<Point> {
        None
    }

    /// Endpoints, centers and radii relevant to exact probing on the line.
    fn landmarks(&self) -> Landmarks {
        Landmarks::default()
    }

    /// The extent as an interval, for cells on the ordered line.
    fn interval(&self) -> Option<Interval> {
        None
    }

    /// Smallest interval containing the extent; used only for point location.
    fn hull(&self) -> Option<Interval> {
        self.interval()
    }

    /// Human-readable extent.
    fn describe(&self) -> String;

    /// Key that identifies the extent up to renaming of parameters.
    fn canonical(&self) -> String {
        self.describe()
    }
}

#[derive(Debug, Clone)]
pub struct CellInstance {
    pub descriptor: Descriptor,
    pub shape: Arc<dyn CellShape>,
}

impl CellInstance {
    pub fn new(descriptor: Descriptor, shape: Arc<dyn CellShape>) -> CellInstance {
        CellInstance { descriptor, shape }
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.shape.contains(x)
    }

    pub fn excluded_by(&self, b: &[Rat]) -> bool {
        self.shape.excluded_by(b)
    }
}

/// Maps a point to a superset of the indices of cells that may contain it.
pub trait Locator: Send + Sync {
    fn candidates(&self, x: &[Rat]) -> Vec<usize>;
}

/// Result of instantiation: `T(B)` plus an optional point locator.
#[derive(Clone)]
pub struct Instantiation {
    pub cells: Vec<CellInstance>,
    pub locator: Option<Arc<dyn Locator>>,
}

impl Instantiation {
    pub fn plain(cells: Vec<CellInstance>) -> Instantiation {
        Instantiation { cells, locator: None }
    }
}

pub trait Decomposition: Send + Sync {
    fn name(&self) -> String;
    fn point_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    /// Maximum number of elements of `B` a cell may reference.
    fn parameter_count(&self) -> usize;

    /// All of `Ψ(B)`. May be expensive; meant for brute-force cross-checks on small `B`.
    fn potential_cells(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError>;

    /// `T(B)` with a locator. The default filters `Ψ(B)` by the exclusion predicates.
    fn instantiate_with_locator(&self, params: &[Point]) -> Result<Instantiation, DecompError> {
        check_distinct(params, self.param_dim())?;
        let cells = self
            .potential_cells(params)?
            .into_iter()
            .filter(|c| !params.iter().any(|b| c.excluded_by(b)))
            .collect();
        Ok(Instantiation::plain(cells))
    }

    /// `T(B) = {Δ ∈ Ψ(B) : B ∩ I(Δ) = ∅}`.
    fn instantiate(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        Ok(self.instantiate_with_locator(params)?.cells)
    }
}

pub fn check_distinct(params: &[Point], dim: usize) -> Result<(), DecompError> {
    let mut seen = HashSet::new();
    for b in params {
        if b.len() != dim {
            return Err(DecompError::Dimension(format!("parameter {} has arity {}, expected {dim}", fmt_point(b), b.len())));
        }
        if !seen.insert(b) {
            return Err(DecompError::DuplicateParameter(fmt_point(b)));
        }
    }
    Ok(())
}

/// Maps `f` over `items` on up to `threads` scoped threads, keeping input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Reference to `B` filtered by exclusion; used by brute-force tests.
pub fn filter_by_exclusion(cells: Vec<CellInstance>, params: &[Point]) -> Vec<CellInstance> {
    cells.into_iter().filter(|c| !params.iter().any(|b| c.excluded_by(b))).collect()
}

/// Locator for cells on the line whose hulls are pairwise equal or disjoint.
pub struct IntervalLocator {
    groups: Vec<Vec<usize>>,
    lows: Vec<Option<Rat>>,
}

impl IntervalLocator {
    /// `None` unless every cell has a known hull and distinct hulls are disjoint.
    pub fn build(cells: &[CellInstance]) -> Option<IntervalLocator> {
        let mut items: Vec<(usize, Interval)> = Vec::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            let iv = c.shape.hull()?;
            if !iv.is_empty() {
                items.push((i, iv));
            }
        }
        items.sort_by(|a, b| cmp_lower(&a.1, &b.1).then_with(|| cmp_upper(&a.1, &b.1)));
        let mut groups: Vec<(Interval, Vec<usize>)> = Vec::new();
        for (i, iv) in items {
            match groups.last_mut() {
                Some((g, members)) if *g == iv => members.push(i),
                _ => groups.push((iv, vec![i])),
            }
        }
        for w in groups.windows(2) {
            if !w[0].0.intersect(&w[1].0).is_empty() {
                return None;
            }
        }
        Some(IntervalLocator {
            lows: groups.iter().map(|(iv, _)| iv.lower.as_ref().map(|c| c.at.clone())).collect(),
            groups: groups.into_iter().map(|(_, m)| m).collect(),
        })
    }
}

fn cmp_lower(a: &Interval, b: &Interval) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match (&a.lower, &b.lower) {
        (None, None) => Equal,
        (None, _) => Less,
        (_, None) => Greater,
        (Some(x), Some(y)) => x.at.cmp(&y.at).then_with(|| y.closed.cmp(&x.closed)),
    }
}

fn cmp_upper(a: &Interval, b: &Interval) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match (&a.upper, &b.upper) {
        (None, None) => Equal,
        (None, _) => Greater,
        (_, None) => Less,
        (Some(x), Some(y)) => x.at.cmp(&y.at).then_with(|| x.closed.cmp(&y.closed)),
    }
}

impl Locator for IntervalLocator {
    fn candidates(&self, x: &[Rat]) -> Vec<usize> {
        // last group whose lower end is ≤ x, plus its predecessor for the
        // open/closed tie at a shared endpoint
        let pos = self.lows.partition_point(|lo| lo.as_ref().is_none_or(|l| l <= &x[0]));
        let mut out = Vec::new();
        for g in pos.saturating_sub(2)..pos {
            out.extend_from_slice(&self.groups[g]);
        }
        out
    }
}

/// Two probes in one cell that disagree on some `φ(·;b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingWitness {
    pub cell: String,
    pub predicate: usize,
    pub param_index: usize,
    pub holds_at: String,
    pub fails_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub covered: bool,
    pub uncovered_probe: Option<String>,
    pub uncrossed: bool,
    pub crossing: Option<CrossingWitness>,
    pub cell_count_raw: usize,
    pub cell_count_deduped: usize,
    pub census_lower_bound: usize,
    pub count_bound_holds: bool,
    pub probe_count: usize,
    /// Whether the probe set is known to meet every face (one-dimensional families).
    pub exact: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.covered && self.uncrossed && self.count_bound_holds
    }
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

/// Probe set used by the verifier: exact line probes (including every cell's
/// landmarks) in dimension one, otherwise the caller's probes plus cell witnesses.
pub fn verification_probes(
    family: &ParamFamily,
    params: &[Point],
    cells: &[CellInstance],
    probes: &[Point],
) -> Result<(Vec<Point>, bool), DecompError> {
    if family.point_dim == 1 {
        let mut marks = Landmarks::default();
        for c in cells {
            let l = c.shape.landmarks();
            marks.points.extend(l.points);
            marks.centers.extend(l.centers);
            marks.radii.extend(l.radii);
        }
        marks.points.sort();
        marks.points.dedup();
        marks.centers.sort();
        marks.centers.dedup();
        marks.radii.sort();
        marks.radii.dedup();
        let mut pts: Vec<Point> = exact_line_probes(family, params, &marks)?.into_iter().map(|x| vec![x]).collect();
        pts.extend(probes.iter().cloned());
        Ok((pts, true))
    } else {
        let mut pts: Vec<Point> = probes.to_vec();
        pts.extend(cells.iter().filter_map(|c| c.shape.witness()));
        Ok((pts, false))
    }
}

/// Membership lists: for each probe, the cells containing it.
fn memberships(inst: &Instantiation, probes: &[Point]) -> Vec<Vec<usize>> {
    probes
        .iter()
        .map(|x| match &inst.locator {
            Some(loc) => {
                let mut c: Vec<usize> = loc.candidates(x).into_iter().filter(|&i| inst.cells[i].contains(x)).collect();
                c.sort_unstable();
                c.dedup();
                c
            }
            None => (0..inst.cells.len()).filter(|&i| inst.cells[i].contains(x)).collect(),
        })
        .collect()
}

/// Number of distinct nonempty cells: by probe signature when the probes are
/// exact, by canonical extent key otherwise.
fn dedupe(cells: &[CellInstance], members: &[Vec<usize>], exact: bool) -> usize {
    if exact {
        let mut sig: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
        for (pi, m) in members.iter().enumerate() {
            for &c in m {
                sig[c].push(pi);
            }
        }
        sig.into_iter().filter(|s| !s.is_empty()).collect::<HashSet<_>>().len()
    } else {
        let mut hit = vec![false; cells.len()];
        for m in members {
            for &c in m {
                hit[c] = true;
            }
        }
        cells
            .iter()
            .enumerate()
            .filter(|(i, c)| hit[*i] || c.shape.witness().is_some())
            .map(|(_, c)| c.shape.canonical())
            .collect::<HashSet<_>>()
            .len()
    }
}

/// Runs the full check of a decomposition against a family over `B`.
pub fn verify(
    decomp: &dyn Decomposition,
    family: &ParamFamily,
    params: &[Point],
    probes: &[Point],
) -> Result<VerificationReport, DecompError> {
    let inst = decomp.instantiate_with_locator(params)?;
    verify_instantiation(&inst, family, params, probes)
}

/// Verifies an already instantiated cell list.
pub fn verify_instantiation(
    inst: &Instantiation,
    family: &ParamFamily,
    params: &[Point],
    probes: &[Point],
) -> Result<VerificationReport, DecompError> {
    check_params(family, params)?;
    let (probes, exact) = verification_probes(family, params, &inst.cells, probes)?;
    let ev = Evaluator::new(family, params);
    let truths: Vec<Vec<u64>> = probes.iter().map(|x| pack(&ev.truth_vector(x))).collect();
    let census = truths.iter().collect::<HashSet<_>>().len();
    let members = memberships(inst, &probes);

    let uncovered = members.iter().position(|m| m.is_empty());
    let mut first_member: Vec<Option<usize>> = vec![None; inst.cells.len()];
    let mut crossing = None;
    'outer: for (pi, m) in members.iter().enumerate() {
        for &c in m {
            match first_member[c] {
                None => first_member[c] = Some(pi),
                Some(q) if truths[q] != truths[pi] => {
                    let bits_q = ev.truth_vector(&probes[q]);
                    let bits_p = ev.truth_vector(&probes[pi]);
                    let k = (0..bits_q.len()).find(|&k| bits_q[k] != bits_p[k]).expect("vectors differ");
                    let (holds, fails) = if bits_q[k] { (q, pi) } else { (pi, q) };
                    crossing = Some(CrossingWitness {
                        cell: format!("{} {}", inst.cells[c].descriptor, inst.cells[c].shape.describe()),
                        predicate: k / params.len().max(1),
                        param_index: k % params.len().max(1),
                        holds_at: fmt_point(&probes[holds]),
                        fails_at: fmt_point(&probes[fails]),
                    });
                    break 'outer;
                }
                _ => {}
            }
        }
    }
    let deduped = dedupe(&inst.cells, &members, exact);
    Ok(VerificationReport {
        covered: uncovered.is_none(),
        uncovered_probe: uncovered.map(|i| fmt_point(&probes[i])),
        uncrossed: crossing.is_none(),
        crossing,
        cell_count_raw: inst.cells.len(),
        cell_count_deduped: deduped,
        census_lower_bound: census,
        count_bound_holds: deduped >= census,
        probe_count: probes.len(),
        exact,
    })
}

/// Verifies the decomposition against a family built from boolean
/// combinations of the base family; non-crossing is expected to persist.
pub fn boolean_lift(
    decomp: &dyn Decomposition,
    derived_family: &ParamFamily,
    params: &[Point],
    probes: &[Point],
) -> Result<VerificationReport, DecompError> {
    verify(decomp, derived_family, params, probes)
}

/// `(raw, deduped)` cell counts of `T(B)`.
pub fn cell_counts(decomp: &dyn Decomposition, family: &ParamFamily, params: &[Point]) -> Result<(usize, usize), DecompError> {
    let inst = decomp.instantiate_with_locator(params)?;
    let (probes, exact) = verification_probes(family, params, &inst.cells, &[])?;
    let members = if exact { memberships(&inst, &probes) } else { Vec::new() };
    Ok((inst.cells.len(), dedupe(&inst.cells, &members, exact)))
}

/// Product decomposition: cells are nonempty intersections, exclusions are unions.
pub struct Intersection {
    parts: Vec<Arc<dyn Decomposition>>,
}

#[derive(Debug)]
struct ProductCell {
    parts: Vec<Arc<dyn CellShape>>,
}

impl CellShape for ProductCell {
    fn contains(&self, x: &[Rat]) -> bool {
        self.parts.iter().all(|p| p.contains(x))
    }

    fn excluded_by(&self, b: &[Rat]) -> bool {
        self.parts.iter().any(|p| p.excluded_by(b))
    }

    fn witness(&self) -> Option<Point> {
        if let Some(iv) = self.interval() {
            return iv.witness().map(|w| vec![w]);
        }
        self.parts.iter().filter_map(|p| p.witness()).find(|w| self.contains(w))
    }

    fn landmarks(&self) -> Landmarks {
        let mut out = Landmarks::default();
        for p in &self.parts {
            let l = p.landmarks();
            out.points.extend(l.points);
            out.centers.extend(l.centers);
            out.radii.extend(l.radii);
        }
        out
    }

    fn interval(&self) -> Option<Interval> {
        let mut acc = Interval::full();
        for p in &self.parts {
            acc = acc.intersect(&p.interval()?);
        }
        Some(acc)
    }

    fn describe(&self) -> String {
        if let Some(iv) = self.interval() {
            return iv.to_string();
        }
        let parts: Vec<String> = self.parts.iter().map(|p| p.describe()).collect();
        parts.join(" ∩ ")
    }

    fn canonical(&self) -> String {
        if let Some(iv) = self.interval() {
            return iv.to_string();
        }
        let parts: Vec<String> = self.parts.iter().map(|p| p.canonical()).collect();
        parts.join(" ∩ ")
    }
}

/// Builds the product decomposition of `decomps` over a shared point space.
pub fn intersect(decomps: Vec<Arc<dyn Decomposition>>) -> Result<Intersection, DecompError> {
    let first = decomps.first().ok_or_else(|| DecompError::Unsupported("empty intersection".into()))?;
    let (pd, qd) = (first.point_dim(), first.param_dim());
    if decomps.iter().any(|d| d.point_dim() != pd || d.param_dim() != qd) {
        return Err(DecompError::Dimension("intersected decompositions differ in dimension".into()));
    }
    Ok(Intersection { parts: decomps })
}

impl Intersection {
    fn combine(&self, lists: Vec<Vec<CellInstance>>) -> Vec<CellInstance> {
        // (template names, parameter indices, shapes) of each partial product
        type Partial = (Vec<String>, Vec<usize>, Vec<Arc<dyn CellShape>>);
        let mut acc: Vec<Partial> = vec![(vec![], vec![], vec![])];
        for list in lists {
            let mut next = Vec::with_capacity(acc.len() * list.len());
            for (names, params, shapes) in &acc {
                for c in &list {
                    let mut shapes2 = shapes.clone();
                    shapes2.push(c.shape.clone());
                    // prune empty intersections early when extents are intervals
                    let probe = ProductCell { parts: shapes2.clone() };
                    if probe.interval().is_some_and(|iv| iv.is_empty()) {
                        continue;
                    }
                    let mut names2 = names.clone();
                    names2.push(c.descriptor.template.clone());
                    let mut params2 = params.clone();
                    params2.extend(c.descriptor.params.iter().copied());
                    next.push((names2, params2, shapes2));
                }
            }
            acc = next;
        }
        acc.into_iter()
            .map(|(names, params, shapes)| {
                CellInstance::new(Descriptor::new(names.join(" & "), params), Arc::new(ProductCell { parts: shapes }))
            })
            .collect()
    }
}

impl Decomposition for Intersection {
    fn name(&self) -> String {
        let names: Vec<String> = self.parts.iter().map(|p| p.name()).collect();
        format!("intersect({})", names.join(", "))
    }

    fn point_dim(&self) -> usize {
        self.parts[0].point_dim()
    }

    fn param_dim(&self) -> usize {
        self.parts[0].param_dim()
    }

    fn parameter_count(&self) -> usize {
        self.parts.iter().map(|p| p.parameter_count()).sum()
    }

    fn potential_cells(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        let lists = self.parts.iter().map(|p| p.potential_cells(params)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.combine(lists))
    }

    fn instantiate_with_locator(&self, params: &[Point]) -> Result<Instantiation, DecompError> {
        check_distinct(params, self.param_dim())?;
        let lists = self.parts.iter().map(|p| p.instantiate(params)).collect::<Result<Vec<_>, _>>()?;
        let cells = self.combine(lists);
        let locator = IntervalLocator::build(&cells).map(|l| Arc::new(l) as Arc<dyn Locator>);
        Ok(Instantiation { cells, locator })
    }
}

/// The decomposition with a single cell, the whole space, never excluded.
pub struct Trivial {
    pub point_dim: usize,
    pub param_dim: usize,
}

#[derive(Debug)]
struct WholeSpace {
    dim: usize,
}

impl CellShape for WholeSpace {
    fn contains(&self, _x: &[Rat]) -> bool {
        true
    }
    fn excluded_by(&self, _b: &[Rat]) -> bool {
        false
    }
    fn witness(&self) -> Option<Point> {
        Some(vec![crate::scalars::rat(0); self.dim])
    }
    fn interval(&self) -> Option<Interval> {
        (self.dim == 1).then(Interval::full)
    }
    fn describe(&self) -> String {
        "whole space".into()
    }
}

impl Decomposition for Trivial {
    fn name(&self) -> String {
        "trivial".into()
    }
    fn point_dim(&self) -> usize {
        self.point_dim
    }
    fn param_dim(&self) -> usize {
        self.param_dim
    }
    fn parameter_count(&self) -> usize {
        0
    }
    fn potential_cells(&self, _params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        Ok(vec![CellInstance::new(Descriptor::new("whole", vec![]), Arc::new(WholeSpace { dim: self.point_dim }))])
    }
}

/// Drops one cell from another decomposition's output; a deliberate failure mode.
pub struct DropCell {
    pub inner: Arc<dyn Decomposition>,
    pub index: usize,
}

impl Decomposition for DropCell {
    fn name(&self) -> String {
        format!("{} minus cell {}", self.inner.name(), self.index)
    }
    fn point_dim(&self) -> usize {
        self.inner.point_dim()
    }
    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }
    fn potential_cells(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        self.inner.potential_cells(params)
    }
    fn instantiate_with_locator(&self, params: &[Point]) -> Result<Instantiation, DecompError> {
        let mut cells = self.inner.instantiate(params)?;
        if self.index < cells.len() {
            cells.remove(self.index);
        }
        Ok(Instantiation::plain(cells))
    }
}

/// Per-size maxima and the fitted log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterTable {
    pub rows: Vec<ShatterRow>,
    pub slope: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterRow {
    pub n: usize,
    pub max_raw: usize,
    pub max_deduped: usize,
    pub trials: usize,
}

/// Least-squares slope of `ln y` against `ln x`; `None` if fewer than two distinct `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Slope of `ln max|T(B)|` against `ln n` over seeded samples of `B`.
///
/// `sampler(n, trial)` must be deterministic; trials are reduced by maximum.
pub fn shatter_estimate(
    decomp: &dyn Decomposition,
    family: &ParamFamily,
    sampler: &mut dyn FnMut(usize, usize) -> Vec<Point>,
    sizes: &[usize],
    trials: usize,
) -> Result<ShatterTable, DecompError> {
    let mut rows = Vec::new();
    for &n in sizes {
        let (mut max_raw, mut max_dd) = (0, 0);
        for t in 0..trials {
            let params = sampler(n, t);
            let (raw, dd) = cell_counts(decomp, family, &params)?;
            max_raw = max_raw.max(raw);
            max_dd = max_dd.max(dd);
        }
        rows.push(ShatterRow { n, max_raw, max_deduped: max_dd, trials });
    }
    Ok(fit_table(rows))
}

/// Fits the slope of a table of per-size maxima.
pub fn fit_table(rows: Vec<ShatterRow>) -> ShatterTable {
    let degenerate = rows.iter().all(|r| r.max_deduped <= 1);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.max_deduped.max(1) as f64)).collect();
    let slope = if degenerate { None } else { loglog_slope(&pts) };
    ShatterTable { rows, slope: slope.unwrap_or(0.0), degenerate: degenerate || slope.is_none() }
}

/// Sorted, deduplicated copy of a point list.
pub fn dedup_points(points: &[Point]) -> Vec<Point> {
    points.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Counts how many cells each descriptor template produced.
pub fn template_histogram(cells: &[CellInstance]) -> HashMap<String, usize> {
    let mut h = HashMap::new();
    for c in cells {
        *h.entry(c.descriptor.template.clone()).or_insert(0) += 1;
    }
    h
}
