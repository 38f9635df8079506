//! Affine forms, rational intervals on the line, and a cylindrical sweep that
//! yields one representative point per face of an affine arrangement.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::scalars::{fmt_rat, rat, rat_serde, Rat};

/// `coeffs·z + constant`. Used both for functions of a parameter and for
/// hyperplanes in point space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Affine {
    #[serde(with = "rat_serde::vec")]
    pub coeffs: Vec<Rat>,
    #[serde(with = "rat_serde", default = "Rat::zero")]
    pub constant: Rat,
}

impl Affine {
    pub fn new(coeffs: Vec<Rat>, constant: Rat) -> Affine {
        Affine { coeffs, constant }
    }

    pub fn constant(dim: usize, c: Rat) -> Affine {
        Affine { coeffs: vec![Rat::zero(); dim], constant: c }
    }

    /// The coordinate function `z_i` in dimension `dim`.
    pub fn coordinate(dim: usize, i: usize) -> Affine {
        let mut coeffs = vec![Rat::zero(); dim];
        coeffs[i] = rat(1);
        Affine { coeffs, constant: Rat::zero() }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, z: &[Rat]) -> Rat {
        debug_assert_eq!(z.len(), self.coeffs.len());
        let mut acc = self.constant.clone();
        for (c, v) in self.coeffs.iter().zip(z) {
            if !c.is_zero() {
                acc += c * v;
            }
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        Affine {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            constant: &self.constant - &other.constant,
        }
    }

    pub fn scale(&self, k: &Rat) -> Affine {
        Affine {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            constant: &self.constant * k,
        }
    }

    /// Same zero set, scaled so the first nonzero coefficient is 1.
    pub fn normalized(&self) -> Affine {
        match self.coeffs.iter().find(|c| !c.is_zero()) {
            Some(lead) => {
                let inv = lead.recip();
                self.scale(&inv)
            }
            None => self.clone(),
        }
    }

    /// Drops coordinate 0, which must have a zero coefficient.
    pub fn drop_first(&self) -> Affine {
        Affine { coeffs: self.coeffs[1..].to_vec(), constant: self.constant.clone() }
    }

    /// Value on the hyperplane `z_0 = t(rest)` written as a function of the
    /// remaining coordinates: returns the root of `self` in `z_0` as an affine
    /// map of `z[1..]`, when coefficient 0 is nonzero.
    pub fn root_in_first(&self) -> Option<Affine> {
        let a = &self.coeffs[0];
        if a.is_zero() {
            return None;
        }
        let k = -a.recip();
        Some(Affine {
            coeffs: self.coeffs[1..].iter().map(|c| c * &k).collect(),
            constant: &self.constant * &k,
        })
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("{}*z{}", fmt_rat(c), i + 1));
            }
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(fmt_rat(&self.constant));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// One end of a rational interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cut {
    #[serde(with = "rat_serde")]
    pub at: Rat,
    pub closed: bool,
}

impl Cut {
    pub fn new(at: Rat, closed: bool) -> Cut {
        Cut { at, closed }
    }
}

/// Convex subset of the rational line; `None` ends are infinite.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Option<Cut>,
    pub upper: Option<Cut>,
}

impl Interval {
    pub fn full() -> Interval {
        Interval { lower: None, upper: None }
    }

    pub fn empty() -> Interval {
        Interval { lower: Some(Cut::new(rat(1), false)), upper: Some(Cut::new(rat(0), false)) }
    }

    pub fn new(lower: Option<Cut>, upper: Option<Cut>) -> Interval {
        Interval { lower, upper }
    }

    pub fn point(x: Rat) -> Interval {
        Interval { lower: Some(Cut::new(x.clone(), true)), upper: Some(Cut::new(x, true)) }
    }

    pub fn open(lo: Rat, hi: Rat) -> Interval {
        Interval { lower: Some(Cut::new(lo, false)), upper: Some(Cut::new(hi, false)) }
    }

    pub fn is_empty(&self) -> bool {
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) => l.at > u.at || (l.at == u.at && !(l.closed && u.closed)),
            _ => false,
        }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let above = match &self.lower {
            None => true,
            Some(l) => x > &l.at || (l.closed && x == &l.at),
        };
        let below = match &self.upper {
            None => true,
            Some(u) => x < &u.at || (u.closed && x == &u.at),
        };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lower = match (&self.lower, &other.lower) {
            (None, b) => b.clone(),
            (a, None) => a.clone(),
            (Some(a), Some(b)) => Some(if a.at > b.at {
                a.clone()
            } else if b.at > a.at {
                b.clone()
            } else {
                Cut::new(a.at.clone(), a.closed && b.closed)
            }),
        };
        let upper = match (&self.upper, &other.upper) {
            (None, b) => b.clone(),
            (a, None) => a.clone(),
            (Some(a), Some(b)) => Some(if a.at < b.at {
                a.clone()
            } else if b.at < a.at {
                b.clone()
            } else {
                Cut::new(a.at.clone(), a.closed && b.closed)
            }),
        };
        Interval { lower, upper }
    }

    /// `self ⊇ other`.
    pub fn includes(&self, other: &Interval) -> bool {
        if other.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        let lower_ok = match (&self.lower, &other.lower) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a.at < b.at || (a.at == b.at && (a.closed || !b.closed)),
        };
        let upper_ok = match (&self.upper, &other.upper) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a.at > b.at || (a.at == b.at && (a.closed || !b.closed)),
        };
        lower_ok && upper_ok
    }

    /// A point of the interval, if any.
    pub fn witness(&self) -> Option<Rat> {
        if self.is_empty() {
            return None;
        }
        Some(match (&self.lower, &self.upper) {
            (None, None) => rat(0),
            (Some(l), None) => {
                if l.closed {
                    l.at.clone()
                } else {
                    &l.at + rat(1)
                }
            }
            (None, Some(u)) => {
                if u.closed {
                    u.at.clone()
                } else {
                    &u.at - rat(1)
                }
            }
            (Some(l), Some(u)) => {
                if l.at == u.at {
                    l.at.clone()
                } else {
                    (&l.at + &u.at) / rat(2)
                }
            }
        })
    }

    pub fn endpoints(&self) -> Vec<Rat> {
        self.lower.iter().chain(self.upper.iter()).map(|c| c.at.clone()).collect()
    }

    /// Whether the union of disjoint intervals `parts` crosses this interval.
    pub fn crossed_by(&self, parts: &[Interval]) -> bool {
        if self.is_empty() {
            return false;
        }
        let meets = parts.iter().any(|p| !p.intersect(self).is_empty());
        // The parts are pairwise separated, so a convex subset of their union
        // lies inside a single part.
        let inside = parts.iter().any(|p| p.includes(self));
        meets && !inside
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        let lo = match &self.lower {
            None => "(-inf".to_string(),
            Some(c) => format!("{}{}", if c.closed { "[" } else { "(" }, fmt_rat(&c.at)),
        };
        let hi = match &self.upper {
            None => "+inf)".to_string(),
            Some(c) => format!("{}{}", fmt_rat(&c.at), if c.closed { "]" } else { ")" }),
        };
        write!(f, "{lo}, {hi}")
    }
}

/// Sorted distinct values, with every gap midpoint and one point beyond each
/// end: a representative of every face of the induced partition of the line.
pub fn line_representatives(values: impl IntoIterator<Item = Rat>) -> Vec<Rat> {
    let sorted: Vec<Rat> = values.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    if sorted.is_empty() {
        return vec![rat(0)];
    }
    let mut out = Vec::with_capacity(2 * sorted.len() + 1);
    out.push(&sorted[0] - rat(1));
    for (i, v) in sorted.iter().enumerate() {
        if i > 0 {
            out.push((&sorted[i - 1] + v) / rat(2));
        }
        out.push(v.clone());
    }
    out.push(sorted.last().unwrap() + rat(1));
    out
}

/// Normalizes and dedupes forms, dropping constant ones.
pub fn distinct_forms(forms: &[Affine]) -> Vec<Affine> {
    forms
        .iter()
        .filter(|f| !f.is_constant())
        .map(Affine::normalized)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Eliminates coordinate 0: forms not involving it, plus pairwise differences
/// of the roots of those that do. Faces of the projected arrangement are
/// exactly the regions over which the order of the roots is constant.
pub fn project_forms(forms: &[Affine]) -> Vec<Affine> {
    let mut out = Vec::new();
    let mut roots = Vec::new();
    for f in forms {
        match f.root_in_first() {
            Some(r) => roots.push(r),
            None => out.push(f.drop_first()),
        }
    }
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            out.push(roots[i].sub(&roots[j]));
        }
    }
    distinct_forms(&out)
}

/// One point in every face of the cylindrical refinement of the arrangement,
/// coordinates ordered `(z_1, …, z_d)` with `z_1` swept innermost.
pub fn cylindrical_probes(forms: &[Affine], dim: usize) -> Vec<Vec<Rat>> {
    let forms = distinct_forms(forms);
    if dim == 0 {
        return vec![vec![]];
    }
    if dim == 1 {
        let zeros = forms.iter().filter_map(|f| f.root_in_first()).map(|r| r.constant);
        return line_representatives(zeros).into_iter().map(|x| vec![x]).collect();
    }
    let projected = project_forms(&forms);
    let bases = cylindrical_probes(&projected, dim - 1);
    let roots: Vec<Affine> = forms.iter().filter_map(|f| f.root_in_first()).collect();
    let mut out = Vec::new();
    for base in bases {
        let zeros = roots.iter().map(|r| r.eval(&base));
        for x in line_representatives(zeros) {
            let mut p = Vec::with_capacity(dim);
            p.push(x);
            p.extend(base.iter().cloned());
            out.push(p);
        }
    }
    out
}

/// Sign (−1, 0, 1) of a form at a point.
pub fn sign_at(form: &Affine, z: &[Rat]) -> i8 {
    let v = form.eval(z);
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::ratio;

    #[test]
    fn interval_basics() {
        let a = Interval::new(None, Some(Cut::new(rat(2), false)));
        assert!(a.contains(&rat(1)));
        assert!(!a.contains(&rat(2)));
        assert!(Interval::empty().is_empty());
        assert!(!Interval::point(rat(3)).is_empty());
        assert!(Interval::new(Some(Cut::new(rat(3), true)), Some(Cut::new(rat(3), false))).is_empty());
        let b = Interval::open(rat(0), rat(5));
        assert_eq!(a.intersect(&b), Interval::open(rat(0), rat(2)));
        assert!(b.includes(&Interval::point(rat(1))));
        assert!(!b.includes(&Interval::point(rat(5))));
        assert_eq!(Interval::open(rat(0), rat(1)).witness(), Some(ratio(1, 2)));
    }

    #[test]
    fn crossing_of_intervals() {
        let cell = Interval::open(rat(0), rat(2));
        let parts = vec![Interval::new(None, Some(Cut::new(rat(1), false)))];
        assert!(cell.crossed_by(&parts));
        let parts = vec![Interval::new(None, Some(Cut::new(rat(2), true)))];
        assert!(!cell.crossed_by(&parts));
        assert!(!cell.crossed_by(&[]));
        // a hole at 1 separating two touching parts still crosses
        let parts = vec![Interval::open(rat(-5), rat(1)), Interval::open(rat(1), rat(5))];
        assert!(cell.crossed_by(&parts));
    }

    #[test]
    fn line_reps() {
        let reps = line_representatives(vec![rat(2), rat(0), rat(2)]);
        assert_eq!(reps, vec![rat(-1), rat(0), rat(1), rat(2), rat(3)]);
        assert_eq!(line_representatives(Vec::new()), vec![rat(0)]);
    }

    #[test]
    fn cylindrical_grid_of_two_lines() {
        // z1 = 0 and z2 = 0 split the plane into 9 faces
        let forms = vec![Affine::coordinate(2, 0), Affine::coordinate(2, 1)];
        let probes = cylindrical_probes(&forms, 2);
        let mut signs: BTreeSet<(i8, i8)> = BTreeSet::new();
        for p in &probes {
            signs.insert((sign_at(&forms[0], p), sign_at(&forms[1], p)));
        }
        assert_eq!(signs.len(), 9);
    }

    #[test]
    fn cylindrical_finds_every_face_of_three_lines() {
        // three lines in general position: 7 regions, 9 edges, 3 vertices
        let forms = vec![
            Affine::new(vec![rat(1), rat(0)], rat(0)),
            Affine::new(vec![rat(0), rat(1)], rat(0)),
            Affine::new(vec![rat(1), rat(1)], rat(-1)),
        ];
        let probes = cylindrical_probes(&forms, 2);
        let faces: BTreeSet<Vec<i8>> =
            probes.iter().map(|p| forms.iter().map(|f| sign_at(f, p)).collect()).collect();
        assert_eq!(faces.len(), 19);
    }
}
