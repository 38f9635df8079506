//! Cylindrical decompositions in dimension `d ≥ 2` for semilinear families over
//! the rationals, built by induction on the dimension.
//!
//! A cell is a fiber template `ψ` over the first coordinate `x1`, read at
//! parameters `(x′, b1), (x′, b2)`, stacked over a base cell in `x′`. The base
//! decomposes a derived family in `x′` whose predicates say when `ψ` is excluded
//! and when `ψ` lies inside or outside each `φ(·, x′; b)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::arrangement::{cylindrical_probes, line_representatives, project_forms, Affine, Interval};
use crate::decomp::{
    check_distinct, par_map, CellInstance, CellShape, DecompError, Decomposition, Descriptor, Instantiation, Locator,
};
use crate::families::{Domain, FamilyKind, ParamFamily, Point};
use crate::omin1d::{components_by_sampling, runs_of, ChainCell, LineFamily, Omin1d};
use crate::scalars::{fmt_point, rat, Rat};

/// A family whose instances `φ(·;y)` are constant on the faces of a finite
/// arrangement of affine forms in point space.
pub trait SignFamily: Send + Sync {
    fn point_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn predicate_count(&self) -> usize;
    fn holds(&self, phi: usize, x: &[Rat], y: &[Rat]) -> bool;
    /// Forms whose sign vector determines `φ(·;y)`.
    fn forms(&self, phi: usize, y: &[Rat]) -> Vec<Affine>;
    fn label(&self, phi: usize) -> String {
        format!("φ{phi}")
    }
    /// Forms of every predicate at once; a superset of each `forms(phi, y)`.
    fn joint_forms(&self, y: &[Rat]) -> Vec<Affine> {
        (0..self.predicate_count()).flat_map(|phi| self.forms(phi, y)).collect()
    }
    /// Truth of every predicate at `x`.
    fn truths(&self, x: &[Rat], y: &[Rat]) -> Vec<bool> {
        (0..self.predicate_count()).map(|phi| self.holds(phi, x, y)).collect()
    }
    /// Number of forms `forms(phi, ·)` returns; independent of the parameter.
    fn form_count(&self, phi: usize) -> usize {
        self.forms(phi, &vec![Rat::default(); self.param_dim()]).len()
    }
}

/// Sign view of a semilinear family over the rationals.
pub struct Semilinear {
    family: ParamFamily,
}

impl Semilinear {
    pub fn new(family: &ParamFamily) -> Result<Semilinear, DecompError> {
        if family.domain != Domain::Rationals
            || !matches!(family.kind, FamilyKind::Semilinear | FamilyKind::VectorLinear | FamilyKind::Interval)
        {
            return Err(DecompError::Unsupported(format!(
                "dimension induction needs a semilinear family over Q, got {:?} over {:?}",
                family.kind, family.domain
            )));
        }
        Ok(Semilinear { family: family.clone() })
    }
}

impl SignFamily for Semilinear {
    fn point_dim(&self) -> usize {
        self.family.point_dim
    }
    fn param_dim(&self) -> usize {
        self.family.param_dim
    }
    fn predicate_count(&self) -> usize {
        self.family.predicates.len()
    }
    fn holds(&self, phi: usize, x: &[Rat], y: &[Rat]) -> bool {
        self.family.predicates[phi].holds(x, y, self.family.domain)
    }
    fn forms(&self, phi: usize, y: &[Rat]) -> Vec<Affine> {
        self.family.predicates[phi].critical_forms(y, self.family.point_dim)
    }
}

/// A one-dimensional sign family seen as a line family, components by sampling.
pub struct LineView(pub Arc<dyn SignFamily>);

impl LineFamily for LineView {
    fn predicate_count(&self) -> usize {
        self.0.predicate_count()
    }
    fn bound(&self, phi: usize) -> usize {
        self.0.form_count(phi) + 1
    }
    fn param_dim(&self) -> usize {
        self.0.param_dim()
    }
    fn components(&self, phi: usize, b: &[Rat]) -> Result<Vec<Interval>, DecompError> {
        let zeros = self.0.forms(phi, b).into_iter().filter_map(|f| f.root_in_first()).map(|r| r.constant);
        Ok(components_by_sampling(zeros, |t| self.0.holds(phi, std::slice::from_ref(t), b)))
    }
    fn label(&self, phi: usize) -> String {
        self.0.label(phi)
    }
    fn all_components(&self, b: &[Rat]) -> Result<Vec<Vec<Interval>>, DecompError> {
        let zeros: BTreeSet<Rat> =
            self.0.joint_forms(b).into_iter().filter_map(|f| f.root_in_first()).map(|r| r.constant).collect();
        let z: Vec<Rat> = zeros.into_iter().collect();
        let rows: Vec<Vec<bool>> =
            line_representatives(z.iter().cloned()).iter().map(|t| self.0.truths(std::slice::from_ref(t), b)).collect();
        Ok((0..self.0.predicate_count())
            .map(|phi| runs_of(&z, &rows.iter().map(|r| r[phi]).collect::<Vec<_>>()))
            .collect())
    }
}

/// `φ(x1, x′; y)` as a family in `x1` with parameter `(x′, y)`.
pub struct Fiber {
    inner: Arc<dyn SignFamily>,
}

impl Fiber {
    pub fn new(inner: Arc<dyn SignFamily>) -> Fiber {
        Fiber { inner }
    }

    fn split<'a>(&self, z: &'a [Rat]) -> (&'a [Rat], &'a [Rat]) {
        z.split_at(self.inner.point_dim() - 1)
    }
}

/// Restricts a form in `(x1, x′)` to the line over `x′`.
fn restrict(f: &Affine, rest: &[Rat]) -> Affine {
    let mut constant = f.constant.clone();
    for (c, v) in f.coeffs[1..].iter().zip(rest) {
        constant += c * v;
    }
    Affine::new(vec![f.coeffs[0].clone()], constant)
}

fn concat(a: &[Rat], b: &[Rat]) -> Point {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

impl SignFamily for Fiber {
    fn point_dim(&self) -> usize {
        1
    }
    fn param_dim(&self) -> usize {
        self.inner.point_dim() - 1 + self.inner.param_dim()
    }
    fn predicate_count(&self) -> usize {
        self.inner.predicate_count()
    }
    fn holds(&self, phi: usize, x: &[Rat], z: &[Rat]) -> bool {
        let (rest, y) = self.split(z);
        self.inner.holds(phi, &concat(x, rest), y)
    }
    fn forms(&self, phi: usize, z: &[Rat]) -> Vec<Affine> {
        let (rest, y) = self.split(z);
        self.inner.forms(phi, y).iter().map(|f| restrict(f, rest)).collect()
    }
    fn label(&self, phi: usize) -> String {
        self.inner.label(phi)
    }
    fn form_count(&self, phi: usize) -> usize {
        self.inner.form_count(phi)
    }
}

/// Which parameter block a fiber template's `param_index` reads.
fn slot_of(slots: &[usize], j: usize) -> usize {
    slots.iter().position(|&s| s == j).expect("template parameter has a slot")
}

/// The derived family of a fiber template `ψ` over `x′`, with parameter
/// `(y_1, …, y_k, y)`: predicate 0 says `(x′, y)` excludes `ψ(·; (x′,y_1), …)`;
/// predicates `1 + 2i` and `2 + 2i` say `ψ ⊆ φ_i(·, x′; y)` and `ψ ∩ φ_i = ∅`.
pub struct ProjectedFamily {
    inner: Arc<dyn SignFamily>,
    fiber: ChainCell,
    slots: Vec<usize>,
}

impl ProjectedFamily {
    /// `fiber` is a template of the fiber decomposition whose parameter
    /// indices are listed (sorted, distinct) in `slots`.
    pub fn new(inner: Arc<dyn SignFamily>, fiber: ChainCell, slots: Vec<usize>) -> ProjectedFamily {
        ProjectedFamily { inner, fiber, slots }
    }

    fn block<'a>(&self, y: &'a [Rat], s: usize) -> &'a [Rat] {
        let m = self.inner.param_dim();
        &y[s * m..(s + 1) * m]
    }

    fn last<'a>(&self, y: &'a [Rat]) -> &'a [Rat] {
        self.block(y, self.slots.len())
    }

    /// `ψ` read at `x′` with the template parameters taken from `y`.
    pub fn fiber_at(&self, rest: &[Rat], y: &[Rat]) -> Option<ChainCell> {
        self.fiber.rebind(|j| concat(rest, self.block(y, slot_of(&self.slots, j)))).ok()
    }

    /// `∀x1 (ψ → φ_i)` when `positive`, `∀x1 (ψ → ¬φ_i)` otherwise.
    fn all_in(&self, cell: &ChainCell, i: usize, positive: bool, rest: &[Rat], y: &[Rat]) -> bool {
        let ext = cell.extent();
        if ext.is_empty() {
            return true;
        }
        let mut zeros: Vec<Rat> = self
            .inner
            .forms(i, y)
            .iter()
            .filter_map(|f| restrict(f, rest).root_in_first())
            .map(|r| r.constant)
            .collect();
        zeros.extend(ext.endpoints());
        line_representatives(zeros)
            .into_iter()
            .filter(|t| ext.contains(t))
            .all(|t| self.inner.holds(i, &concat(&[t], rest), y) == positive)
    }
}

impl SignFamily for ProjectedFamily {
    fn point_dim(&self) -> usize {
        self.inner.point_dim() - 1
    }
    fn param_dim(&self) -> usize {
        (self.slots.len() + 1) * self.inner.param_dim()
    }
    fn predicate_count(&self) -> usize {
        1 + 2 * self.inner.predicate_count()
    }
    fn holds(&self, phi: usize, rest: &[Rat], y: &[Rat]) -> bool {
        let Some(cell) = self.fiber_at(rest, y) else {
            return true;
        };
        if phi == 0 {
            return cell.excluded_by(&concat(rest, self.last(y)));
        }
        self.all_in(&cell, (phi - 1) / 2, phi % 2 == 1, rest, self.last(y))
    }
    fn truths(&self, rest: &[Rat], y: &[Rat]) -> Vec<bool> {
        let Some(cell) = self.fiber_at(rest, y) else {
            return vec![true; self.predicate_count()];
        };
        let last = self.last(y);
        let mut out = vec![cell.excluded_by(&concat(rest, last))];
        for i in 0..self.inner.predicate_count() {
            out.push(self.all_in(&cell, i, true, rest, last));
            out.push(self.all_in(&cell, i, false, rest, last));
        }
        out
    }
    fn joint_forms(&self, y: &[Rat]) -> Vec<Affine> {
        self.forms(0, y)
    }
    /// Eliminates `x1` from every form of every block: truth of each derived
    /// predicate only depends on the order of the roots in `x1`.
    fn forms(&self, _phi: usize, y: &[Rat]) -> Vec<Affine> {
        let mut roots = Vec::new();
        let mut out = Vec::new();
        for s in 0..=self.slots.len() {
            for i in 0..self.inner.predicate_count() {
                for f in self.inner.forms(i, self.block(y, s)) {
                    match f.root_in_first() {
                        Some(r) => roots.push(r),
                        None => out.push(f.drop_first()),
                    }
                }
            }
        }
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                out.push(roots[i].sub(&roots[j]));
            }
        }
        out
    }
    fn label(&self, phi: usize) -> String {
        match phi {
            0 => "excluded".into(),
            _ if phi % 2 == 1 => format!("inside({})", self.inner.label((phi - 1) / 2)),
            _ => format!("outside({})", self.inner.label((phi - 1) / 2)),
        }
    }
}

/// A fiber template over a base cell.
pub struct CylinderCell {
    fiber: ChainCell,
    slots: Vec<usize>,
    tuple: Vec<Point>,
    base: CellInstance,
    /// Fiber extent at the last `x′` probed; probes usually come grouped by `x′`.
    last: Mutex<Option<(Point, Interval)>>,
}

impl fmt::Debug for CylinderCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CylinderCell({})", self.describe())
    }
}

impl CylinderCell {
    fn new(fiber: ChainCell, slots: Vec<usize>, tuple: Vec<Point>, base: CellInstance) -> CylinderCell {
        CylinderCell { fiber, slots, tuple, base, last: Mutex::new(None) }
    }

    fn fiber_extent(&self, rest: &[Rat]) -> Interval {
        let mut last = self.last.lock().expect("fiber cache");
        if let Some((at, ext)) = last.as_ref() {
            if at.as_slice() == rest {
                return ext.clone();
            }
        }
        let ext = self.fiber_at(rest).map_or_else(Interval::empty, |c| c.extent().clone());
        *last = Some((rest.to_vec(), ext.clone()));
        ext
    }

    pub fn base(&self) -> &CellInstance {
        &self.base
    }

    /// The fiber over `x′`; meaningful when `x′` lies in the base.
    pub fn fiber_at(&self, rest: &[Rat]) -> Option<ChainCell> {
        self.fiber.rebind(|j| concat(rest, &self.tuple[slot_of(&self.slots, j)])).ok()
    }

    pub fn descriptor(&self) -> Descriptor {
        let f = self.fiber.descriptor();
        let mut params = f.params.clone();
        params.extend(&self.base.descriptor.params);
        Descriptor::new(format!("cyl[{}]({})", f.template, self.base.descriptor.template), params)
    }

    /// Whether `(x′, b)` excludes the fiber at the base witness. Validity is
    /// constant over the base, which is not crossed by the derived predicate.
    fn fiber_excluded(&self, b: &[Rat]) -> bool {
        let Some(w) = self.base.shape.witness() else {
            return true;
        };
        self.fiber_at(&w).is_none_or(|c| c.excluded_by(&concat(&w, b)))
    }

    fn tuple_values(&self) -> String {
        self.fiber
            .descriptor()
            .params
            .iter()
            .map(|&j| fmt_point(&self.tuple[slot_of(&self.slots, j)]))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn instance(self) -> CellInstance {
        CellInstance::new(self.descriptor(), Arc::new(self))
    }
}

impl CellShape for CylinderCell {
    fn contains(&self, x: &[Rat]) -> bool {
        let rest = &x[1..];
        self.base.contains(rest) && self.fiber_extent(rest).contains(&x[0])
    }

    /// Union of the base exclusion at `(b_1, …, b_k, b)` and the fiber
    /// exclusion by `(x′, b)` over the base.
    fn excluded_by(&self, b: &[Rat]) -> bool {
        let mut p: Point = self.tuple.concat();
        p.extend_from_slice(b);
        self.base.excluded_by(&p) || self.fiber_excluded(b)
    }

    fn witness(&self) -> Option<Point> {
        let w = self.base.shape.witness()?;
        let t = self.fiber_at(&w)?.extent().witness()?;
        Some(concat(&[t], &w))
    }

    fn hull(&self) -> Option<Interval> {
        self.base.shape.interval()
    }

    fn describe(&self) -> String {
        format!("{}[{}] over {}", self.fiber.descriptor().template, self.tuple_values(), self.base.shape.describe())
    }

    fn canonical(&self) -> String {
        format!("{}[{}]|{}", self.fiber.descriptor().template, self.tuple_values(), self.base.shape.canonical())
    }
}

/// Locator over cells stacked on intervals of one coordinate: every slab
/// between consecutive interval ends lists the cells whose hull covers it.
pub struct SlabLocator {
    axis: usize,
    cuts: Vec<Rat>,
    slabs: Vec<Vec<usize>>,
    always: Vec<usize>,
}

impl SlabLocator {
    pub fn build(cells: &[CellInstance], axis: usize) -> SlabLocator {
        let hulls: Vec<Option<Interval>> = cells.iter().map(|c| c.shape.hull()).collect();
        let mut cuts: Vec<Rat> = hulls.iter().flatten().flat_map(Interval::endpoints).collect();
        cuts.sort();
        cuts.dedup();
        let mut slabs = vec![Vec::new(); 2 * cuts.len() + 1];
        let mut always = Vec::new();
        let at = |v: &Rat| cuts.binary_search(v).expect("endpoint is a cut");
        for (i, h) in hulls.iter().enumerate() {
            let Some(h) = h else {
                always.push(i);
                continue;
            };
            let lo = h.lower.as_ref().map_or(0, |c| 2 * at(&c.at) + if c.closed { 1 } else { 2 });
            let hi = h.upper.as_ref().map_or(2 * cuts.len(), |c| 2 * at(&c.at) + usize::from(c.closed));
            for s in slabs.iter_mut().take(hi + 1).skip(lo) {
                s.push(i);
            }
        }
        SlabLocator { axis, cuts, slabs, always }
    }
}

impl Locator for SlabLocator {
    fn candidates(&self, x: &[Rat]) -> Vec<usize> {
        let slab = match self.cuts.binary_search(&x[self.axis]) {
            Ok(i) => 2 * i + 1,
            Err(i) => 2 * i,
        };
        let mut out = self.slabs[slab].clone();
        out.extend_from_slice(&self.always);
        out
    }
}

/// The inductive decomposition: fiber templates with two parameters over base
/// cells of the derived family, the base decomposed recursively.
#[derive(Clone)]
pub struct Induction {
    family: Arc<dyn SignFamily>,
    fiber: Arc<dyn LineFamily>,
    threads: usize,
}

impl Induction {
    pub fn new(family: Arc<dyn SignFamily>) -> Result<Induction, DecompError> {
        if family.point_dim() < 2 {
            return Err(DecompError::Dimension("dimension induction needs points of dimension at least 2".into()));
        }
        let fiber = Arc::new(LineView(Arc::new(Fiber::new(family.clone()))));
        Ok(Induction { family, fiber, threads: 1 })
    }

    pub fn for_family(family: &ParamFamily) -> Result<Induction, DecompError> {
        Induction::new(Arc::new(Semilinear::new(family)?))
    }

    /// Worker threads for the enumeration over template tuples.
    pub fn with_threads(mut self, threads: usize) -> Induction {
        self.threads = threads.max(1);
        self
    }

    fn fiber_params(&self, rest: &[Rat], params: &[Point]) -> Vec<Point> {
        params.iter().map(|b| concat(rest, b)).collect()
    }

    /// The fiber decomposition over `x′`: canonical chain atoms in `x1`.
    pub fn fiber_cells(&self, rest: &[Rat], params: &[Point]) -> Result<Vec<ChainCell>, DecompError> {
        Omin1d::new(self.fiber.clone()).cells(&self.fiber_params(rest, params))
    }

    /// The base decomposition for a fiber template with the given slots.
    pub fn base_for(&self, fiber: &ChainCell, slots: &[usize]) -> Result<Arc<dyn Decomposition>, DecompError> {
        let derived: Arc<dyn SignFamily> =
            Arc::new(ProjectedFamily::new(self.family.clone(), fiber.clone(), slots.to_vec()));
        Ok(if derived.point_dim() == 1 {
            Arc::new(Omin1d::new(Arc::new(LineView(derived))))
        } else {
            Arc::new(Induction::new(derived)?)
        })
    }

    /// Cylinders over the base cells of one fiber template, unfiltered.
    fn stack(&self, fiber: &ChainCell, params: &[Point]) -> Result<Vec<CylinderCell>, DecompError> {
        let mut slots = fiber.descriptor().params;
        slots.sort_unstable();
        slots.dedup();
        let tuple: Vec<Point> = slots.iter().map(|&j| params[j].clone()).collect();
        let prefix: Point = tuple.concat();
        let base_params: Vec<Point> = params.iter().map(|b| concat(&prefix, b)).collect();
        let base = self.base_for(fiber, &slots)?;
        Ok(base
            .instantiate(&base_params)?
            .into_iter()
            .map(|cell| CylinderCell::new(fiber.clone(), slots.clone(), tuple.clone(), cell))
            .collect())
    }

    /// `T(B)`. Fiber templates valid somewhere are collected by sweeping one
    /// point of every face of the projected arrangement; each is stacked over
    /// its base decomposition and kept where it stays valid.
    pub fn cells(&self, params: &[Point]) -> Result<Vec<CylinderCell>, DecompError> {
        check_distinct(params, self.family.param_dim())?;
        let mut forms = Vec::new();
        for b in params {
            for phi in 0..self.family.predicate_count() {
                forms.extend(self.family.forms(phi, b));
            }
        }
        let sweep = cylindrical_probes(&project_forms(&forms), self.family.point_dim() - 1);
        let found = par_map(&sweep, self.threads, |rest| self.fiber_cells(rest, params));
        let mut combos: BTreeMap<Descriptor, ChainCell> = BTreeMap::new();
        for cells in found {
            for c in cells? {
                combos.entry(c.descriptor()).or_insert(c);
            }
        }
        let combos: Vec<ChainCell> = combos.into_values().collect();
        // base cells are already in the base's T; only the fiber part of the
        // exclusion remains to be checked
        let stacked = par_map(&combos, self.threads, |fiber| {
            self.stack(fiber, params)
                .map(|cells| cells.into_iter().filter(|c| !params.iter().any(|b| c.fiber_excluded(b))).collect::<Vec<_>>())
        });
        let mut out = Vec::new();
        for s in stacked {
            out.extend(s?);
        }
        Ok(out)
    }
}

impl Decomposition for Induction {
    fn name(&self) -> String {
        "dim-induction".into()
    }

    fn point_dim(&self) -> usize {
        self.family.point_dim()
    }

    fn param_dim(&self) -> usize {
        self.family.param_dim()
    }

    /// Two for the fiber template plus what the base uses, per level.
    fn parameter_count(&self) -> usize {
        2 * self.family.point_dim()
    }

    /// Every fiber template over `B` stacked on the base's `T`. A cylinder over
    /// a base cell outside the base's `T` is excluded by some `b` through the
    /// base part of its exclusion, so filtering this set yields the same `T(B)`.
    fn potential_cells(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        check_distinct(params, self.family.param_dim())?;
        let origin = vec![rat(0); self.family.point_dim() - 1];
        let patterns = Omin1d::new(self.fiber.clone()).potential_chain_cells(&self.fiber_params(&origin, params))?;
        let mut out = Vec::new();
        for s in par_map(&patterns, self.threads, |fiber| self.stack(fiber, params)) {
            out.extend(s?.into_iter().map(CylinderCell::instance));
        }
        Ok(out)
    }

    fn instantiate_with_locator(&self, params: &[Point]) -> Result<Instantiation, DecompError> {
        let cells: Vec<CellInstance> = self.cells(params)?.into_iter().map(CylinderCell::instance).collect();
        let locator = SlabLocator::build(&cells, 1);
        Ok(Instantiation { cells, locator: Some(Arc::new(locator)) })
    }
}

/// One point in every face of the cylindrical refinement of all the critical
/// hyperplanes of `Φ(·;B)`.
pub fn intersection_probes(family: &ParamFamily, params: &[Point]) -> Vec<Point> {
    cylindrical_probes(&family.all_forms(params), family.point_dim)
}

/// The `side × side` grid of integer points centered on the origin, plane
/// only, grouped by the second coordinate.
pub fn grid_probes(side: usize) -> Vec<Point> {
    let half = (side / 2) as i64;
    let mut out = Vec::with_capacity(side * side);
    for j in 0..side as i64 {
        for i in 0..side as i64 {
            out.push(vec![rat(i - half), rat(j - half)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{filter_by_exclusion, verify};
    use crate::families::{build, type_census_probe, LinearAtom, Predicate, Rel};

    fn pts(v: &[(i64, i64)]) -> Vec<Point> {
        v.iter().map(|&(a, b)| vec![rat(a), rat(b)]).collect()
    }

    fn probes(f: &ParamFamily, b: &[Point], side: usize) -> Vec<Point> {
        let mut p = grid_probes(side);
        p.extend(intersection_probes(f, b));
        p
    }

    #[test]
    fn quadrant_example() {
        let f = build::coordinatewise_less(2);
        let b = pts(&[(0, 0), (1, 1)]);
        let d = Induction::for_family(&f).unwrap();
        let r = verify(&d, &f, &b, &probes(&f, &b, 21)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.cell_count_deduped >= 9);
        let grid = type_census_probe(&f, &b, &grid_probes(21));
        assert_eq!(grid.count, 9);
    }

    #[test]
    fn singleton_gives_four() {
        let f = build::coordinatewise_less(2);
        let b = pts(&[(3, -2)]);
        let d = Induction::for_family(&f).unwrap();
        let r = verify(&d, &f, &b, &probes(&f, &b, 21)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.cell_count_deduped >= 4);
    }

    #[test]
    fn empty_parameter_set_is_one_cell() {
        let f = build::coordinatewise_less(2);
        let d = Induction::for_family(&f).unwrap();
        assert_eq!(d.instantiate(&[]).unwrap().len(), 1);
    }

    fn tilted() -> ParamFamily {
        // x1 + x2 < y1 and x1 − x2 ≥ y2
        let preds = vec![
            Predicate::Linear { atom: LinearAtom::new(vec![rat(1), rat(1)], vec![rat(-1), rat(0)], rat(0), Rel::Lt) },
            Predicate::Linear { atom: LinearAtom::new(vec![rat(1), rat(-1)], vec![rat(0), rat(-1)], rat(0), Rel::Ge) },
        ];
        ParamFamily::new(FamilyKind::Semilinear, Domain::Rationals, 2, 2, preds).unwrap()
    }

    fn extents(cells: &[CellInstance]) -> BTreeSet<Descriptor> {
        cells.iter().map(|c| c.descriptor.clone()).collect()
    }

    #[test]
    fn fast_path_matches_filter() {
        for (f, b) in [
            (build::coordinatewise_less(2), pts(&[(0, 0)])),
            (tilted(), pts(&[(1, 0)])),
            (tilted(), pts(&[(0, 0), (2, 1)])),
        ] {
            let d = Induction::for_family(&f).unwrap();
            let fast = d.instantiate(&b).unwrap();
            let slow = filter_by_exclusion(d.potential_cells(&b).unwrap(), &b);
            assert_eq!(extents(&fast), extents(&slow));
            assert_eq!(fast.len(), slow.len());
        }
    }

    #[test]
    fn tilted_lines_verify() {
        let f = tilted();
        let b = pts(&[(0, 0), (2, 1), (-1, 3), (4, -2)]);
        let d = Induction::for_family(&f).unwrap();
        let r = verify(&d, &f, &b, &probes(&f, &b, 41)).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn dropping_a_cell_breaks_coverage() {
        let f = tilted();
        let b = pts(&[(0, 0), (2, 1)]);
        let d = Induction::for_family(&f).unwrap();
        let mut inst = d.instantiate_with_locator(&b).unwrap();
        inst.cells.pop();
        let inst = Instantiation { locator: Some(Arc::new(SlabLocator::build(&inst.cells, 1))), cells: inst.cells };
        let r = crate::decomp::verify_instantiation(&inst, &f, &b, &probes(&f, &b, 11)).unwrap();
        assert!(!r.covered);
    }

    /// `∀x1 (ψ → φ)` for a fiber `ψ = (−∞, c)` read off `x1 < y1`.
    fn lower_ray_family() -> (Arc<dyn SignFamily>, ProjectedFamily) {
        let f = build::coordinatewise_less(2);
        let inner: Arc<dyn SignFamily> = Arc::new(Semilinear::new(&f).unwrap());
        let d = Induction::new(inner.clone()).unwrap();
        let cells = d.fiber_cells(&[rat(0)], &pts(&[(5, 0)])).unwrap();
        let ray = cells.into_iter().find(|c| c.extent().upper.is_some()).unwrap();
        (inner.clone(), ProjectedFamily::new(inner, ray, vec![0]))
    }

    #[test]
    fn derived_inclusion_is_an_order_condition() {
        let (_, derived) = lower_ray_family();
        // parameters (c, _, y1, y2): ψ = (−∞, c), φ0 = x1 < y1
        for (c, y1) in [(0, 1), (1, 1), (2, 1), (-3, 5)] {
            let y = vec![rat(c), rat(0), rat(y1), rat(7)];
            assert_eq!(derived.holds(1, &[rat(0)], &y), c <= y1, "c={c} y1={y1}");
        }
    }

    #[test]
    fn derived_ignores_x1_free_predicates() {
        let (_, derived) = lower_ray_family();
        // φ1 = x2 < y2 does not involve x1
        for x2 in [-2, 3, 7, 9] {
            let y = vec![rat(0), rat(0), rat(0), rat(7)];
            assert_eq!(derived.holds(3, &[rat(x2)], &y), x2 < 7);
            assert_eq!(derived.holds(4, &[rat(x2)], &y), x2 >= 7);
        }
    }

    #[test]
    fn empty_fiber_is_vacuous() {
        let f = build::coordinatewise_less(2);
        let inner: Arc<dyn SignFamily> = Arc::new(Semilinear::new(&f).unwrap());
        let d = Induction::new(inner.clone()).unwrap();
        let b = pts(&[(0, 0), (4, 0)]);
        // [0, 4) at x2 = 0, read with the two parameters swapped it is empty
        let cells = d.fiber_cells(&[rat(0)], &b).unwrap();
        let mid = cells.into_iter().find(|c| c.extent().lower.is_some() && c.extent().upper.is_some()).unwrap();
        let derived = ProjectedFamily::new(inner, mid, vec![0, 1]);
        let y = vec![rat(4), rat(0), rat(0), rat(0), rat(1), rat(1)];
        assert!(derived.fiber_at(&[rat(0)], &y).unwrap().extent().is_empty());
        for phi in 1..5 {
            assert!(derived.holds(phi, &[rat(0)], &y));
        }
        assert!(derived.holds(0, &[rat(0)], &y));
    }

    #[test]
    fn fibers_match_the_fiber_decomposition() {
        let f = tilted();
        let b = pts(&[(0, 0), (2, 1), (-1, 3)]);
        let d = Induction::for_family(&f).unwrap();
        let inst = d.instantiate_with_locator(&b).unwrap();
        let loc = inst.locator.clone().unwrap();
        for x in grid_probes(15) {
            let hits: Vec<usize> = loc.candidates(&x).into_iter().filter(|&i| inst.cells[i].contains(&x)).collect();
            assert_eq!(hits.len(), 1, "{}", fmt_point(&x));
            let fiber = d.fiber_cells(&x[1..], &b).unwrap();
            let own = fiber.iter().find(|c| c.extent().contains(&x[0])).unwrap();
            let t = inst.cells[hits[0]].descriptor.template.clone();
            assert!(t.starts_with(&format!("cyl[{}]", own.descriptor().template)), "{t}");
        }
    }

    #[test]
    fn three_dimensions() {
        let f = build::coordinatewise_less(3);
        let b = vec![vec![rat(0), rat(0), rat(0)], vec![rat(1), rat(2), rat(-1)]];
        let d = Induction::for_family(&f).unwrap();
        let r = verify(&d, &f, &b, &intersection_probes(&f, &b)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.cell_count_deduped >= 27);
    }
}
