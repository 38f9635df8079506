//! One-dimensional decomposition for families whose instances are finite
//! unions of convex sets: downward closures of convex components and the
//! atoms of the chain they form.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::arrangement::{line_representatives, Cut, Interval};
use crate::decomp::{
    check_distinct, CellInstance, CellShape, DecompError, Decomposition, Descriptor, Instantiation, IntervalLocator,
    Locator,
};
use crate::families::{FamilyError, FamilyKind, Landmarks, ParamFamily, Point, Predicate};
use crate::scalars::{fmt_point, Rat};

/// A parametrized family of subsets of the line, each a union of boundedly
/// many convex components.
pub trait LineFamily: Send + Sync {
    fn predicate_count(&self) -> usize;
    /// Upper bound on the number of convex components of `φ(M;b)`.
    fn bound(&self, phi: usize) -> usize;
    fn param_dim(&self) -> usize;
    /// Ordered convex components of `φ(M;b)`.
    fn components(&self, phi: usize, b: &[Rat]) -> Result<Vec<Interval>, DecompError>;
    fn label(&self, phi: usize) -> String {
        format!("φ{phi}")
    }
    /// Components of every predicate at `b`, in predicate order.
    fn all_components(&self, b: &[Rat]) -> Result<Vec<Vec<Interval>>, DecompError> {
        (0..self.predicate_count()).map(|phi| self.components(phi, b)).collect()
    }
}

/// Maximal runs of a predicate on the line, from its truth at every zero of
/// its critical forms and at one point of every gap between them.
pub fn components_by_sampling(zeros: impl IntoIterator<Item = Rat>, holds: impl Fn(&Rat) -> bool) -> Vec<Interval> {
    let z: Vec<Rat> = zeros.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let truth: Vec<bool> = line_representatives(z.iter().cloned()).iter().map(&holds).collect();
    runs_of(&z, &truth)
}

/// Maximal runs given sorted distinct zeros `z` and the truth at each of
/// `line_representatives(z)`, which alternate gap, zero, gap, …, zero, gap.
pub fn runs_of(z: &[Rat], truth: &[bool]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut start: Option<Option<Cut>> = None;
    for (e, t) in truth.iter().enumerate() {
        let is_zero = e % 2 == 1;
        let lower_here = || -> Option<Cut> {
            if is_zero {
                Some(Cut::new(z[e / 2].clone(), true))
            } else if e == 0 {
                None
            } else {
                Some(Cut::new(z[e / 2 - 1].clone(), false))
            }
        };
        match (start.is_some(), *t) {
            (false, true) => start = Some(lower_here()),
            (true, false) => {
                // the run ended just before element e
                let upper = if is_zero {
                    Some(Cut::new(z[e / 2].clone(), false))
                } else {
                    Some(Cut::new(z[e / 2 - 1].clone(), true))
                };
                out.push(Interval::new(start.take().unwrap(), upper));
            }
            _ => {}
        }
    }
    if let Some(lower) = start {
        out.push(Interval::new(lower, None));
    }
    out
}

/// Ordered convex components of an interval-kind predicate at `b`: nonempty
/// pieces merged where they overlap or touch.
pub fn convex_components(family: &ParamFamily, phi: usize, b: &[Rat]) -> Result<Vec<Interval>, DecompError> {
    let pred = family.predicates.get(phi).ok_or(FamilyError::Index(phi))?;
    match pred {
        Predicate::Interval { pieces, bound } => {
            let mut parts: Vec<Interval> = pieces.iter().map(|p| p.at_param(b)).filter(|i| !i.is_empty()).collect();
            parts.sort_by(lower_cmp);
            let mut merged: Vec<Interval> = Vec::new();
            for p in parts {
                match merged.last_mut() {
                    Some(cur) if touches(cur, &p) => cur.upper = max_upper(&cur.upper, &p.upper),
                    _ => merged.push(p),
                }
            }
            if merged.len() > *bound {
                return Err(FamilyError::TooManyComponents { index: phi, count: merged.len(), bound: *bound }.into());
            }
            Ok(merged)
        }
        _ if family.point_dim == 1 && matches!(family.kind, FamilyKind::Semilinear | FamilyKind::VectorLinear) => {
            let zeros = pred.critical_forms(b, 1).into_iter().filter_map(|f| f.root_in_first()).map(|r| r.constant);
            Ok(components_by_sampling(zeros, |x| pred.holds(std::slice::from_ref(x), b, family.domain)))
        }
        _ => Err(DecompError::Unsupported(format!("{:?} predicates have no finite convex decomposition", family.kind))),
    }
}

fn lower_cmp(a: &Interval, b: &Interval) -> Ordering {
    match (&a.lower, &b.lower) {
        (None, None) => Ordering::Equal,
        (None, _) => Ordering::Less,
        (_, None) => Ordering::Greater,
        (Some(x), Some(y)) => x.at.cmp(&y.at).then_with(|| y.closed.cmp(&x.closed)),
    }
}

fn touches(cur: &Interval, next: &Interval) -> bool {
    match (&cur.upper, &next.lower) {
        (None, _) | (_, None) => true,
        (Some(u), Some(l)) => u.at > l.at || (u.at == l.at && (u.closed || l.closed)),
    }
}

fn max_upper(a: &Option<Cut>, b: &Option<Cut>) -> Option<Cut> {
    match (a, b) {
        (None, _) | (_, None) => None,
        (Some(x), Some(y)) => Some(match x.at.cmp(&y.at) {
            Ordering::Greater => x.clone(),
            Ordering::Less => y.clone(),
            Ordering::Equal => Cut::new(x.at.clone(), x.closed || y.closed),
        }),
    }
}

fn bound_of(family: &ParamFamily, phi: usize) -> usize {
    match &family.predicates[phi] {
        Predicate::Interval { bound, .. } => *bound,
        p => p.critical_forms(&vec![Rat::default(); family.param_dim], family.point_dim).len() + 1,
    }
}

impl LineFamily for ParamFamily {
    fn predicate_count(&self) -> usize {
        self.predicates.len()
    }
    fn bound(&self, phi: usize) -> usize {
        bound_of(self, phi)
    }
    fn param_dim(&self) -> usize {
        self.param_dim
    }
    fn components(&self, phi: usize, b: &[Rat]) -> Result<Vec<Interval>, DecompError> {
        convex_components(self, phi, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flavor {
    /// Points at or below some point of the component.
    Le,
    /// Points strictly below the whole component.
    Lt,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", match self {
            Flavor::Le => "le",
            Flavor::Lt => "lt",
        })
    }
}

/// Downward-closed subset of the line: empty, a ray below a cut, or everything.
/// The derived order is inclusion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Extent {
    Empty,
    Below(Cut),
    Full,
}

impl Ord for Extent {
    fn cmp(&self, other: &Extent) -> Ordering {
        use Extent::*;
        match (self, other) {
            (Empty, Empty) | (Full, Full) => Ordering::Equal,
            (Empty, _) | (_, Full) => Ordering::Less,
            (_, Empty) | (Full, _) => Ordering::Greater,
            (Below(a), Below(b)) => a.at.cmp(&b.at).then(a.closed.cmp(&b.closed)),
        }
    }
}

impl PartialOrd for Extent {
    fn partial_cmp(&self, other: &Extent) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Extent {
    pub fn as_interval(&self) -> Interval {
        match self {
            Extent::Empty => Interval::empty(),
            Extent::Below(c) => Interval::new(None, Some(c.clone())),
            Extent::Full => Interval::full(),
        }
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_interval())
    }
}

/// `X ∖ Y` for downward sets.
pub fn difference(x: &Extent, y: &Extent) -> Interval {
    let lower = match y {
        Extent::Empty => None,
        Extent::Below(c) => Some(Cut::new(c.at.clone(), !c.closed)),
        Extent::Full => return Interval::empty(),
    };
    let upper = match x {
        Extent::Empty => return Interval::empty(),
        Extent::Below(c) => Some(c.clone()),
        Extent::Full => None,
    };
    Interval::new(lower, upper)
}

/// Downward closure (`Le`) or strict lower set (`Lt`) of the `i`-th component.
pub fn downward_extent(components: &[Interval], i: usize, flavor: Flavor) -> Extent {
    let Some(comp) = components.get(i) else {
        return match flavor {
            Flavor::Le => Extent::Empty,
            Flavor::Lt => Extent::Full,
        };
    };
    match flavor {
        Flavor::Le => match &comp.upper {
            None => Extent::Full,
            Some(u) => Extent::Below(u.clone()),
        },
        Flavor::Lt => match &comp.lower {
            None => Extent::Empty,
            Some(l) => Extent::Below(Cut::new(l.at.clone(), !l.closed)),
        },
    }
}

/// Where a downward set comes from: `φ^i_□(M; b)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Source {
    pub predicate: usize,
    pub component: usize,
    pub flavor: Flavor,
    pub param: Point,
    pub param_index: usize,
}

impl Source {
    /// Canonical order among sources with equal extents; parameters compare by value.
    pub fn key_cmp(&self, other: &Source) -> Ordering {
        (self.predicate, self.component, self.flavor)
            .cmp(&(other.predicate, other.component, other.flavor))
            .then_with(|| self.param.cmp(&other.param))
    }

    fn tag(&self) -> String {
        format!("φ{}.c{}.{}", self.predicate, self.component + 1, self.flavor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownwardSet {
    pub source: Source,
    pub extent: Extent,
}

fn sources_at(family: &dyn LineFamily, b: &[Rat], j: usize) -> Result<Vec<DownwardSet>, DecompError> {
    Ok(sources_from(family, &family.all_components(b)?, b, j))
}

fn sources_from(family: &dyn LineFamily, all: &[Vec<Interval>], b: &[Rat], j: usize) -> Vec<DownwardSet> {
    let mut out = Vec::new();
    for (phi, comps) in all.iter().enumerate() {
        for i in 0..family.bound(phi) {
            for flavor in [Flavor::Le, Flavor::Lt] {
                out.push(DownwardSet {
                    source: Source { predicate: phi, component: i, flavor, param: b.to_vec(), param_index: j },
                    extent: downward_extent(comps, i, flavor),
                });
            }
        }
    }
    out
}

/// `F(B)` sorted by inclusion, ties in canonical source order.
pub fn downward_family(family: &dyn LineFamily, params: &[Point]) -> Result<Vec<DownwardSet>, DecompError> {
    let mut out = Vec::new();
    for (j, b) in params.iter().enumerate() {
        out.extend(sources_at(family, b, j)?);
    }
    out.sort_by(|a, b| a.extent.cmp(&b.extent).then_with(|| a.source.key_cmp(&b.source)));
    Ok(out)
}

#[derive(Debug, Clone)]
enum Template {
    Pair { x: DownwardSet, y: DownwardSet },
    Bottom { x: DownwardSet },
    Top { y: DownwardSet },
    Full,
}

/// A chain atom `X ∖ Y` (or its bottom/top/full degenerations).
#[derive(Clone)]
pub struct ChainCell {
    family: Arc<dyn LineFamily>,
    template: Template,
    extent: Interval,
}

impl fmt::Debug for ChainCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChainCell({})", self.extent)
    }
}

impl ChainCell {
    fn new(family: Arc<dyn LineFamily>, template: Template) -> ChainCell {
        let extent = match &template {
            Template::Pair { x, y } => difference(&x.extent, &y.extent),
            Template::Bottom { x } => x.extent.as_interval(),
            Template::Top { y } => difference(&Extent::Full, &y.extent),
            Template::Full => Interval::full(),
        };
        ChainCell { family, template, extent }
    }

    pub fn extent(&self) -> &Interval {
        &self.extent
    }

    pub fn descriptor(&self) -> Descriptor {
        match &self.template {
            Template::Pair { x, y } => Descriptor::new(
                format!("pair({},{})", x.source.tag(), y.source.tag()),
                vec![x.source.param_index, y.source.param_index],
            ),
            Template::Bottom { x } => Descriptor::new(format!("bottom({})", x.source.tag()), vec![x.source.param_index]),
            Template::Top { y } => Descriptor::new(format!("top({})", y.source.tag()), vec![y.source.param_index]),
            Template::Full => Descriptor::new("full", vec![]),
        }
    }

    /// Same template with every source re-read at `param(param_index)`.
    pub fn rebind(&self, param: impl Fn(usize) -> Point) -> Result<ChainCell, DecompError> {
        let fam = self.family.clone();
        let reread = |d: &DownwardSet| -> Result<DownwardSet, DecompError> {
            let b = param(d.source.param_index);
            let comps = fam.components(d.source.predicate, &b)?;
            Ok(DownwardSet {
                extent: downward_extent(&comps, d.source.component, d.source.flavor),
                source: Source { param: b, ..d.source.clone() },
            })
        };
        let template = match &self.template {
            Template::Pair { x, y } => Template::Pair { x: reread(x)?, y: reread(y)? },
            Template::Bottom { x } => Template::Bottom { x: reread(x)? },
            Template::Top { y } => Template::Top { y: reread(y)? },
            Template::Full => Template::Full,
        };
        Ok(ChainCell::new(fam, template))
    }

    pub fn instance(self) -> CellInstance {
        CellInstance::new(self.descriptor(), Arc::new(self))
    }

    /// Whether some downward set at `b` ties with `s` and precedes it canonically.
    fn dominated(s: &DownwardSet, at_b: &[DownwardSet]) -> bool {
        at_b.iter().any(|t| t.extent == s.extent && t.source.key_cmp(&s.source) == Ordering::Less)
    }
}

impl CellShape for ChainCell {
    fn contains(&self, x: &[Rat]) -> bool {
        self.extent.contains(&x[0])
    }

    /// Crossing by some `φ(·;b)`, plus emptiness and canonical tie-breaking so
    /// that each extent is produced by exactly one descriptor.
    fn excluded_by(&self, b: &[Rat]) -> bool {
        if self.extent.is_empty() {
            return true;
        }
        let Ok(all) = self.family.all_components(b) else {
            return true;
        };
        if all.iter().any(|comps| self.extent.crossed_by(comps)) {
            return true;
        }
        let at_b = sources_from(self.family.as_ref(), &all, b, usize::MAX);
        match &self.template {
            Template::Pair { x, y } => Self::dominated(x, &at_b) || Self::dominated(y, &at_b),
            Template::Bottom { x } => Self::dominated(x, &at_b) || at_b.iter().any(|t| t.extent < x.extent),
            Template::Top { y } => Self::dominated(y, &at_b) || at_b.iter().any(|t| t.extent > y.extent),
            Template::Full => !at_b.is_empty(),
        }
    }

    fn witness(&self) -> Option<Point> {
        self.extent.witness().map(|w| vec![w])
    }

    fn landmarks(&self) -> Landmarks {
        Landmarks { points: self.extent.endpoints(), ..Landmarks::default() }
    }

    fn interval(&self) -> Option<Interval> {
        Some(self.extent.clone())
    }

    fn describe(&self) -> String {
        self.extent.to_string()
    }
}

/// Atoms of the chain `F`: the bottom element, successive differences, and the
/// complement of the top. Returns `|F| + 1` cells, some possibly empty. Tied
/// elements subtract the canonical representative of their group.
pub fn chain_atoms(family: Arc<dyn LineFamily>, sets: &[DownwardSet]) -> Result<Vec<CellInstance>, DecompError> {
    for w in sets.windows(2) {
        if w[0].extent > w[1].extent {
            return Err(DecompError::NotAChain(format!("{} listed before {}", w[0].extent, w[1].extent)));
        }
    }
    let Some(first) = sets.first() else {
        return Ok(vec![ChainCell::new(family, Template::Full).instance()]);
    };
    let mut out = Vec::with_capacity(sets.len() + 1);
    out.push(ChainCell::new(family.clone(), Template::Bottom { x: first.clone() }).instance());
    let mut rep = 0;
    for k in 1..sets.len() {
        if sets[k].extent != sets[k - 1].extent {
            rep = k - 1;
            while rep > 0 && sets[rep - 1].extent == sets[k - 1].extent {
                rep -= 1;
            }
        }
        let y = if sets[k].extent == sets[k - 1].extent { &sets[k - 1] } else { &sets[rep] };
        out.push(ChainCell::new(family.clone(), Template::Pair { x: sets[k].clone(), y: y.clone() }).instance());
    }
    let last = sets.len() - 1;
    let mut top_rep = last;
    while top_rep > 0 && sets[top_rep - 1].extent == sets[last].extent {
        top_rep -= 1;
    }
    out.push(ChainCell::new(family, Template::Top { y: sets[top_rep].clone() }).instance());
    Ok(out)
}

/// The one-dimensional decomposition with two parameters per cell.
#[derive(Clone)]
pub struct Omin1d {
    pub family: Arc<dyn LineFamily>,
}

impl Omin1d {
    pub fn new(family: Arc<dyn LineFamily>) -> Omin1d {
        Omin1d { family }
    }

    pub fn for_family(family: &ParamFamily) -> Result<Omin1d, DecompError> {
        if family.point_dim != 1 {
            return Err(DecompError::Dimension("omin1d needs points of dimension 1".into()));
        }
        if !matches!(family.kind, FamilyKind::Interval | FamilyKind::Semilinear | FamilyKind::VectorLinear) {
            return Err(DecompError::Unsupported(format!("omin1d over a {:?} family", family.kind)));
        }
        Ok(Omin1d { family: Arc::new(family.clone()) })
    }

    /// Canonical nonempty atoms, in increasing order along the line.
    pub fn cells(&self, params: &[Point]) -> Result<Vec<ChainCell>, DecompError> {
        let sets = downward_family(self.family.as_ref(), params)?;
        let mut groups: Vec<&DownwardSet> = Vec::new();
        for s in &sets {
            if groups.last().is_none_or(|g| g.extent != s.extent) {
                groups.push(s);
            }
        }
        let fam = &self.family;
        let mut out = Vec::with_capacity(groups.len() + 1);
        match groups.first() {
            None => out.push(ChainCell::new(fam.clone(), Template::Full)),
            Some(g) if g.extent != Extent::Empty => {
                out.push(ChainCell::new(fam.clone(), Template::Bottom { x: (*g).clone() }))
            }
            _ => {}
        }
        for w in groups.windows(2) {
            out.push(ChainCell::new(fam.clone(), Template::Pair { x: w[1].clone(), y: w[0].clone() }));
        }
        if let Some(g) = groups.last() {
            if g.extent != Extent::Full {
                out.push(ChainCell::new(fam.clone(), Template::Top { y: (*g).clone() }));
            }
        }
        Ok(out)
    }
}

impl Decomposition for Omin1d {
    fn name(&self) -> String {
        "omin1d".into()
    }

    fn point_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        self.family.param_dim()
    }

    fn parameter_count(&self) -> usize {
        2
    }

    fn potential_cells(&self, params: &[Point]) -> Result<Vec<CellInstance>, DecompError> {
        Ok(self.potential_chain_cells(params)?.into_iter().map(ChainCell::instance).collect())
    }

    fn instantiate_with_locator(&self, params: &[Point]) -> Result<Instantiation, DecompError> {
        check_distinct(params, self.param_dim())?;
        let cells: Vec<CellInstance> = self.cells(params)?.into_iter().map(ChainCell::instance).collect();
        let locator = IntervalLocator::build(&cells).map(|l| Arc::new(l) as Arc<dyn Locator>);
        Ok(Instantiation { cells, locator })
    }
}

impl Omin1d {
    /// Every template over `params`, before exclusion.
    pub fn potential_chain_cells(&self, params: &[Point]) -> Result<Vec<ChainCell>, DecompError> {
        let mut sets = Vec::new();
        for (j, b) in params.iter().enumerate() {
            sets.extend(sources_at(self.family.as_ref(), b, j)?);
        }
        let fam = &self.family;
        let mut out = vec![ChainCell::new(fam.clone(), Template::Full)];
        for s in &sets {
            out.push(ChainCell::new(fam.clone(), Template::Bottom { x: s.clone() }));
            out.push(ChainCell::new(fam.clone(), Template::Top { y: s.clone() }));
            for t in &sets {
                out.push(ChainCell::new(fam.clone(), Template::Pair { x: s.clone(), y: t.clone() }));
            }
        }
        Ok(out)
    }
}

/// Renders a parameter list for diagnostics.
pub fn describe_params(params: &[Point]) -> String {
    params.iter().map(|b| fmt_point(b)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{filter_by_exclusion, verify, DropCell};
    use crate::families::build;
    use crate::scalars::rat;

    fn pts(v: &[i64]) -> Vec<Point> {
        v.iter().map(|x| vec![rat(*x)]).collect()
    }

    #[test]
    fn components_examples() {
        let f = build::x_less_than_y();
        assert_eq!(
            convex_components(&f, 0, &[rat(2)]).unwrap(),
            vec![Interval::new(None, Some(Cut::new(rat(2), false)))]
        );
        let two = build::interval(vec![(2, vec![(Some((1, 0, false)), Some((1, 1, false))), (Some((1, 2, false)), Some((1, 3, false)))])]);
        let c = convex_components(&two, 0, &[rat(0)]).unwrap();
        assert_eq!(c, vec![Interval::open(rat(0), rat(1)), Interval::open(rat(2), rat(3))]);
        // (b, b-1) is empty
        let empty = build::interval(vec![(1, vec![(Some((1, 0, false)), Some((1, -1, false)))])]);
        assert!(convex_components(&empty, 0, &[rat(0)]).unwrap().is_empty());
        // touching pieces merge; a doubled hole does not
        let touching = build::interval(vec![(1, vec![(Some((1, 0, false)), Some((1, 1, true))), (Some((1, 1, false)), Some((1, 2, false)))])]);
        assert_eq!(convex_components(&touching, 0, &[rat(0)]).unwrap().len(), 1);
        let holed = build::interval(vec![(1, vec![(Some((1, 0, false)), Some((1, 1, false))), (Some((1, 1, false)), Some((1, 2, false)))])]);
        assert!(matches!(convex_components(&holed, 0, &[rat(0)]), Err(DecompError::Family(FamilyError::TooManyComponents { .. }))));
    }

    #[test]
    fn downward_examples() {
        let f = build::x_less_than_y();
        let fam = downward_family(&f, &pts(&[0, 2])).unwrap();
        let distinct: Vec<Extent> = fam.iter().map(|d| d.extent.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        assert_eq!(
            distinct,
            vec![
                Extent::Empty,
                Extent::Below(Cut::new(rat(0), false)),
                Extent::Below(Cut::new(rat(2), false)),
            ]
        );
        assert!(downward_family(&f, &[]).unwrap().is_empty());
        // upward set (0, ∞): closure is the whole line, strict lower set (−∞, 0]
        let up = build::interval(vec![(1, vec![(Some((1, 0, false)), None)])]);
        let fam = downward_family(&up, &pts(&[0])).unwrap();
        assert_eq!(fam[0].extent, Extent::Below(Cut::new(rat(0), true)));
        assert_eq!(fam[1].extent, Extent::Full);
    }

    fn ray(v: i64) -> DownwardSet {
        DownwardSet {
            source: Source { predicate: 0, component: 0, flavor: Flavor::Le, param: vec![rat(v)], param_index: v as usize },
            extent: Extent::Below(Cut::new(rat(v), false)),
        }
    }

    #[test]
    fn chain_atom_examples() {
        let f: Arc<dyn LineFamily> = Arc::new(build::x_less_than_y());
        let atoms = chain_atoms(f.clone(), &[ray(1), ray(3), ray(5)]).unwrap();
        let ext: Vec<String> = atoms.iter().map(|a| a.shape.describe()).collect();
        assert_eq!(ext, vec!["(-inf, 1)", "[1, 3)", "[3, 5)", "[5, +inf)"]);
        let full = chain_atoms(f.clone(), &[]).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].shape.describe(), "(-inf, +inf)");
        assert!(matches!(chain_atoms(f.clone(), &[ray(3), ray(1)]), Err(DecompError::NotAChain(_))));
        let sets = downward_family(f.as_ref(), &pts(&[0, 2])).unwrap();
        let atoms = chain_atoms(f, &sets).unwrap();
        assert_eq!(atoms.len(), sets.len() + 1);
        let nonempty = atoms.iter().filter(|a| a.shape.interval().is_some_and(|i| !i.is_empty())).count();
        assert_eq!(nonempty, 3);
    }

    #[test]
    fn instantiate_x_less_than_y() {
        let f = build::x_less_than_y();
        let d = Omin1d::for_family(&f).unwrap();
        let cells = d.instantiate(&pts(&[0, 2])).unwrap();
        let ext: Vec<String> = cells.iter().map(|c| c.shape.describe()).collect();
        assert_eq!(ext, vec!["(-inf, 0)", "[0, 2)", "[2, +inf)"]);
        let r = verify(&d, &f, &pts(&[0, 2]), &[]).unwrap();
        assert!(r.covered && r.uncrossed && r.exact);
        assert_eq!((r.cell_count_raw, r.cell_count_deduped, r.census_lower_bound), (3, 3, 3));
        let empty = d.instantiate(&[]).unwrap();
        assert_eq!(empty.len(), 1);
        assert_eq!(empty[0].shape.describe(), "(-inf, +inf)");
    }

    #[test]
    fn fast_path_matches_definition() {
        let f = build::interval(vec![
            (2, vec![(Some((1, 0, true)), Some((1, 1, false))), (Some((1, 3, false)), None)]),
            (1, vec![(None, Some((2, -1, true)))]),
        ]);
        let d = Omin1d::for_family(&f).unwrap();
        for params in [pts(&[0]), pts(&[0, 1]), pts(&[2, -1, 1]), pts(&[0, 3, 1])] {
            let fast: BTreeSet<Descriptor> = d.instantiate(&params).unwrap().into_iter().map(|c| c.descriptor).collect();
            let slow: BTreeSet<Descriptor> = filter_by_exclusion(d.potential_cells(&params).unwrap(), &params)
                .into_iter()
                .map(|c| c.descriptor)
                .collect();
            assert_eq!(fast, slow, "B = {}", describe_params(&params));
        }
    }

    #[test]
    fn dropping_a_cell_breaks_coverage() {
        let f = build::x_less_than_y();
        let d = DropCell { inner: Arc::new(Omin1d::for_family(&f).unwrap()), index: 1 };
        let r = verify(&d, &f, &pts(&[0, 2]), &[]).unwrap();
        assert!(!r.covered);
        assert!(r.uncovered_probe.is_some());
    }
}
