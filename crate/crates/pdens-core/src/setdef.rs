//! Presented definable sets: 1-variable cells, boxes, ray-cones and monomial
//! graphs, together with an exact 1-variable normalizer.
//!
//! The normalizer partitions K into finitely many regions on which a given
//! quantifier-free formula has constant truth value: a "far" region of very
//! negative valuation handled per class of K^x/P_L, a "deep" region around
//! each center handled the same way, and a bounded middle zone subdivided
//! adaptively into balls until every atom is decided.  All verdicts are exact.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::padic::{
    is_nth_power_exact, lcm_u32, pow_q, PowerCoset, PowerQuotient, Prime, Q, QuotientElem,
    Subgroup,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    fn eval_ord(self, ord: Option<i64>, level: i64) -> bool {
        match ord {
            // ord = +infinity (t = c)
            None => matches!(self, CmpOp::Ge | CmpOp::Gt),
            Some(v) => match self {
                CmpOp::Lt => v < level,
                CmpOp::Le => v <= level,
                CmpOp::Eq => v == level,
                CmpOp::Ge => v >= level,
                CmpOp::Gt => v > level,
            },
        }
    }
}

/// Quantifier-free one-variable formulas over valuation comparisons and
/// power-coset conditions, all constants exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula1D {
    True,
    False,
    /// ord(t - center) op level
    OrdCmp {
        center: Q,
        op: CmpOp,
        level: i64,
    },
    /// (t - center) in lambda * P_n  (lambda = 0 means t = center)
    InCoset {
        center: Q,
        lambda: Q,
        exponent: u32,
    },
    And(Box<Formula1D>, Box<Formula1D>),
    Or(Box<Formula1D>, Box<Formula1D>),
    Not(Box<Formula1D>),
}

impl Formula1D {
    pub fn and(a: Formula1D, b: Formula1D) -> Formula1D {
        Formula1D::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula1D, b: Formula1D) -> Formula1D {
        Formula1D::Or(Box::new(a), Box::new(b))
    }
    pub fn not(a: Formula1D) -> Formula1D {
        Formula1D::Not(Box::new(a))
    }

    pub fn or_all(fs: Vec<Formula1D>) -> Formula1D {
        fs.into_iter()
            .reduce(Formula1D::or)
            .unwrap_or(Formula1D::False)
    }

    pub fn eval(&self, p: Prime, t: &Q) -> bool {
        match self {
            Formula1D::True => true,
            Formula1D::False => false,
            Formula1D::OrdCmp { center, op, level } => op.eval_ord(p.ord(&(t - center)), *level),
            Formula1D::InCoset {
                center,
                lambda,
                exponent,
            } => {
                let d = t - center;
                if lambda.is_zero() {
                    d.is_zero()
                } else if d.is_zero() {
                    false
                } else {
                    is_nth_power_exact(p, &(d / lambda), *exponent)
                }
            }
            Formula1D::And(a, b) => a.eval(p, t) && b.eval(p, t),
            Formula1D::Or(a, b) => a.eval(p, t) || b.eval(p, t),
            Formula1D::Not(a) => !a.eval(p, t),
        }
    }

    fn atoms<'a>(&'a self, out: &mut Vec<&'a Formula1D>) {
        match self {
            Formula1D::True | Formula1D::False => {}
            Formula1D::OrdCmp { .. } | Formula1D::InCoset { .. } => out.push(self),
            Formula1D::And(a, b) | Formula1D::Or(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
            Formula1D::Not(a) => a.atoms(out),
        }
    }
}

/// A one-variable cell { t : t - c in lambda*P_m, lo <= ord(t-c) <= hi }.
/// lambda = 0 denotes the singleton {c}.  The valuation window encodes the
/// |alpha| <= |t-c| <= |beta| bounds of the classical cell presentation
/// (hi is the |alpha| side, lo the |beta| side).
#[derive(Clone, Debug, PartialEq)]
pub struct Cell1D {
    pub center: Q,
    pub coset: PowerCoset,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl Cell1D {
    pub fn new(
        p: Prime,
        center: Q,
        coset: PowerCoset,
        lo: Option<i64>,
        hi: Option<i64>,
    ) -> Result<Self, Error> {
        let cell = Cell1D {
            center,
            coset,
            lo,
            hi,
        };
        if cell.is_empty(p) {
            return Err(Error::UnsupportedSet("empty cell rejected".into()));
        }
        Ok(cell)
    }

    pub fn singleton(center: Q) -> Self {
        Cell1D {
            center,
            coset: PowerCoset::new(Q::zero(), 1),
            lo: None,
            hi: None,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.coset.is_zero_cell()
    }

    fn is_empty(&self, p: Prime) -> bool {
        if self.is_singleton() {
            return false;
        }
        // Nonempty iff some valuation in [lo, hi] is congruent to ord(lambda).
        let m = self.coset.exponent as i64;
        let r = p.ord(&self.coset.lambda).unwrap().rem_euclid(m);
        match (self.lo, self.hi) {
            (None, _) | (_, None) => false,
            (Some(lo), Some(hi)) => {
                let first = lo + (r - lo).rem_euclid(m);
                first > hi
            }
        }
    }

    /// Valuations ord(t - c) attained on the cell form the set
    /// { v in [lo, hi] : v = ord(lambda) mod m }.
    pub fn valuation_congruence(&self, p: Prime) -> (i64, i64) {
        let m = self.coset.exponent as i64;
        (p.ord(&self.coset.lambda).unwrap().rem_euclid(m), m)
    }

    pub fn formula(&self) -> Formula1D {
        if self.is_singleton() {
            return Formula1D::InCoset {
                center: self.center.clone(),
                lambda: Q::zero(),
                exponent: 1,
            };
        }
        let mut f = Formula1D::InCoset {
            center: self.center.clone(),
            lambda: self.coset.lambda.clone(),
            exponent: self.coset.exponent,
        };
        if let Some(lo) = self.lo {
            f = Formula1D::and(
                f,
                Formula1D::OrdCmp {
                    center: self.center.clone(),
                    op: CmpOp::Ge,
                    level: lo,
                },
            );
        }
        if let Some(hi) = self.hi {
            f = Formula1D::and(
                f,
                Formula1D::OrdCmp {
                    center: self.center.clone(),
                    op: CmpOp::Le,
                    level: hi,
                },
            );
        }
        f
    }

    pub fn contains(&self, p: Prime, t: &Q) -> bool {
        self.formula().eval(p, t)
    }

    /// Whether the cell accumulates at its center (ord unbounded above).
    pub fn accumulates_at_center(&self) -> bool {
        !self.is_singleton() && self.hi.is_none()
    }

    pub fn translate(&self, delta: &Q) -> Cell1D {
        Cell1D {
            center: &self.center + delta,
            coset: self.coset.clone(),
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// Image under t -> alpha * t, alpha != 0.
    pub fn scale(&self, p: Prime, alpha: &Q) -> Cell1D {
        assert!(!alpha.is_zero());
        let shift = p.ord(alpha).unwrap();
        Cell1D {
            center: &self.center * alpha,
            coset: if self.is_singleton() {
                self.coset.clone()
            } else {
                PowerCoset::new(&self.coset.lambda * alpha, self.coset.exponent)
            },
            lo: self.lo.map(|v| v + shift),
            hi: self.hi.map(|v| v + shift),
        }
    }
}

/// Finitely many pairwise-disjoint cells in K.
#[derive(Clone, Debug, PartialEq)]
pub struct Set1D {
    pub prime: Prime,
    pub cells: Vec<Cell1D>,
}

impl Set1D {
    /// Builds from cells, verifying pairwise disjointness exactly.
    pub fn from_cells(p: Prime, cells: Vec<Cell1D>) -> Result<Self, Error> {
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                let inter = Formula1D::and(cells[i].formula(), cells[j].formula());
                if !is_empty_formula(p, &inter) {
                    return Err(Error::UnsupportedSet(
                        "cells are not pairwise disjoint".into(),
                    ));
                }
            }
        }
        Ok(Set1D { prime: p, cells })
    }

    pub fn empty(p: Prime) -> Self {
        Set1D {
            prime: p,
            cells: Vec::new(),
        }
    }

    /// The full coset lambda * P_m as a one-cell set.
    pub fn coset(p: Prime, lambda: Q, exponent: u32) -> Self {
        assert!(!lambda.is_zero());
        Set1D {
            prime: p,
            cells: vec![Cell1D {
                center: Q::zero(),
                coset: PowerCoset::new(lambda, exponent),
                lo: None,
                hi: None,
            }],
        }
    }

    /// All of K.
    pub fn full_line(p: Prime) -> Self {
        Set1D {
            prime: p,
            cells: vec![
                Cell1D::singleton(Q::zero()),
                Cell1D {
                    center: Q::zero(),
                    coset: PowerCoset::new(Q::one(), 1),
                    lo: None,
                    hi: None,
                },
            ],
        }
    }

    /// The set of points of even valuation (the classical warm-up set):
    /// the union of P_2 and u*P_2 for u a non-residue unit.
    pub fn even_valuation(p: Prime) -> Self {
        let u = smallest_nonresidue(p);
        Set1D {
            prime: p,
            cells: vec![
                Cell1D {
                    center: Q::zero(),
                    coset: PowerCoset::new(Q::one(), 2),
                    lo: None,
                    hi: None,
                },
                Cell1D {
                    center: Q::zero(),
                    coset: PowerCoset::new(u, 2),
                    lo: None,
                    hi: None,
                },
            ],
        }
    }

    pub fn formula(&self) -> Formula1D {
        Formula1D::or_all(self.cells.iter().map(|c| c.formula()).collect())
    }

    pub fn member(&self, t: &Q) -> bool {
        self.cells.iter().any(|c| c.contains(self.prime, t))
    }

    pub fn dimension(&self) -> u32 {
        if self.cells.iter().any(|c| !c.is_singleton()) {
            1
        } else {
            0
        }
    }

    pub fn translate(&self, delta: &Q) -> Set1D {
        Set1D {
            prime: self.prime,
            cells: self.cells.iter().map(|c| c.translate(delta)).collect(),
        }
    }

    pub fn scale(&self, alpha: &Q) -> Set1D {
        Set1D {
            prime: self.prime,
            cells: self
                .cells
                .iter()
                .map(|c| c.scale(self.prime, alpha))
                .collect(),
        }
    }

    pub fn set_equal(&self, other: &Set1D) -> bool {
        formulas_equal(self.prime, &self.formula(), &other.formula())
    }

    /// Exponents of the non-singleton cells; their lcm drives cone choices.
    pub fn coset_exponent_lcm(&self) -> u32 {
        self.cells
            .iter()
            .filter(|c| !c.is_singleton())
            .map(|c| c.coset.exponent)
            .fold(1, lcm_u32)
    }
}

pub fn smallest_nonresidue(p: Prime) -> Q {
    let mut u = 2u64;
    loop {
        let q = Q::from_integer(u.into());
        if u % p.get() != 0 && !is_nth_power_exact(p, &q, 2) {
            return q;
        }
        u += 1;
    }
}

// ---------------------------------------------------------------------------
// Region partition engine
// ---------------------------------------------------------------------------

/// A region together with a cell presentation, an interior representative
/// and the (constant) truth value of the formula on it.
#[derive(Clone, Debug)]
pub struct Region {
    pub cell: Cell1D,
    pub rep: Q,
    pub truth: bool,
}

struct AtomInfo {
    center: Q,
    // Some(level) for ord comparisons.
    level: Option<i64>,
    // Some((lambda_ord, exponent)) for nonzero coset atoms.
    coset: Option<(i64, u32)>,
    zero_cell: bool,
}

/// Partitions K into constant-truth regions of `f`.
pub fn partition_regions(p: Prime, f: &Formula1D) -> Vec<Region> {
    let mut raw = Vec::new();
    f.atoms(&mut raw);
    let mut infos = Vec::new();
    for a in &raw {
        match a {
            Formula1D::OrdCmp { center, level, .. } => infos.push(AtomInfo {
                center: center.clone(),
                level: Some(*level),
                coset: None,
                zero_cell: false,
            }),
            Formula1D::InCoset {
                center,
                lambda,
                exponent,
            } => {
                if lambda.is_zero() {
                    infos.push(AtomInfo {
                        center: center.clone(),
                        level: None,
                        coset: None,
                        zero_cell: true,
                    });
                } else {
                    infos.push(AtomInfo {
                        center: center.clone(),
                        level: None,
                        coset: Some((p.ord(lambda).unwrap(), *exponent)),
                        zero_cell: false,
                    });
                }
            }
            _ => unreachable!(),
        }
    }

    // Centers, always including 0 so that t -> 0 falls in a symbolic region.
    let mut centers: Vec<Q> = vec![Q::zero()];
    for i in &infos {
        if !centers.contains(&i.center) {
            centers.push(i.center.clone());
        }
    }

    let big_l = infos
        .iter()
        .filter_map(|i| i.coset.map(|(_, m)| m))
        .fold(1u32, lcm_u32);
    let margin = p.ord_u32(big_l) as i64 + 1;
    let quo = PowerQuotient::new(p, big_l);

    // Relevant finite levels.
    let mut levels: Vec<i64> = vec![0];
    for i in &infos {
        if let Some(k) = i.level {
            levels.push(k);
        }
        if let Some((lo, _)) = i.coset {
            levels.push(lo);
        }
    }
    for (i, a) in centers.iter().enumerate() {
        for b in centers.iter().skip(i + 1) {
            levels.push(p.ord(&(a - b)).expect("distinct centers"));
        }
        if !a.is_zero() {
            levels.push(p.ord(a).unwrap());
        }
    }
    let min_level = *levels.iter().min().unwrap();
    let max_level = *levels.iter().max().unwrap();
    let lo_far = min_level - margin - 1;
    // Deep thresholds per center.
    let deep: Vec<i64> = centers
        .iter()
        .map(|c| {
            let mut h = max_level + 1;
            for c2 in &centers {
                if c2 != c {
                    h = h.max(p.ord(&(c - c2)).unwrap() + margin);
                }
            }
            h.max(lo_far + 1)
        })
        .collect();

    let mut regions = Vec::new();

    // Far region: ord(t) <= lo_far, one region per class of K^x/P_L.
    for e in quo.elements() {
        let r = quo.rep_of(e);
        let a = p.ord(&r).unwrap();
        let k = num_integer::Integer::div_ceil(&(a - lo_far), &(big_l as i64));
        let rep = &r * p.pow_q(-k * big_l as i64);
        debug_assert!(p.ord(&rep).unwrap() <= lo_far);
        regions.push(Region {
            cell: Cell1D {
                center: Q::zero(),
                coset: PowerCoset::new(r.clone(), big_l),
                lo: None,
                hi: Some(lo_far),
            },
            truth: f.eval(p, &rep),
            rep,
        });
    }

    // Deep regions and singletons at each center.
    for (ci, c) in centers.iter().enumerate() {
        let h = deep[ci];
        for e in quo.elements() {
            let r = quo.rep_of(e);
            let a = p.ord(&r).unwrap();
            let k = num_integer::Integer::div_ceil(&(h - a), &(big_l as i64));
            let rep = c + &r * p.pow_q(k * big_l as i64);
            regions.push(Region {
                cell: Cell1D {
                    center: c.clone(),
                    coset: PowerCoset::new(r.clone(), big_l),
                    lo: Some(h),
                    hi: None,
                },
                truth: f.eval(p, &rep),
                rep,
            });
        }
        regions.push(Region {
            cell: Cell1D::singleton(c.clone()),
            rep: c.clone(),
            truth: f.eval(p, c),
        });
    }

    // Middle zone: annuli lo_far < ord(t) < deep[0], adaptive subdivision.
    let mut stack: Vec<(Q, i64)> = Vec::new();
    for w in (lo_far + 1)..deep[0] {
        for u in 1..p.get() {
            stack.push((Q::from_integer(u.into()) * p.pow_q(w), w + 1));
        }
    }
    while let Some((a, v)) = stack.pop() {
        // Skip balls swallowed by a deep region.
        let mut swallowed = false;
        for (ci, c) in centers.iter().enumerate() {
            if v >= deep[ci] {
                let o = p.ord(&(&a - c));
                if o.map_or(true, |w| w >= deep[ci]) {
                    swallowed = true;
                    break;
                }
            }
        }
        if swallowed {
            continue;
        }
        if let Some(truth) = decide_on_ball(p, f, &infos, &a, v) {
            emit_ball_regions(p, &centers, &a, v, truth, &mut regions);
        } else {
            for j in 0..p.get() {
                stack.push((&a + Q::from_integer(j.into()) * p.pow_q(v), v + 1));
            }
        }
    }

    regions
}

/// All atoms decided on B(a, v)?  Returns the truth of `f` there if so.
fn decide_on_ball(p: Prime, f: &Formula1D, infos: &[AtomInfo], a: &Q, v: i64) -> Option<bool> {
    for i in infos {
        let o = p.ord(&(a - &i.center));
        let inside = o.map_or(true, |w| w >= v);
        if let Some(k) = i.level {
            if inside && v <= k {
                return None;
            }
        }
        if i.zero_cell && inside {
            return None;
        }
        if let Some((_, m)) = i.coset {
            if inside {
                return None;
            }
            // Class of (t - center) mod P_m is constant on the ball once the
            // relative radius clears the unit margin for P_m.
            if v - o.unwrap() < p.ord_u32(m) as i64 + 1 {
                return None;
            }
        }
    }
    Some(f.eval(p, a))
}

/// Presents the ball B(a, v) by cells anchored at the nearest center.
fn emit_ball_regions(p: Prime, centers: &[Q], a: &Q, v: i64, truth: bool, out: &mut Vec<Region>) {
    // Nearest center: maximal ord(a - c).
    let mut best: Option<(usize, Option<i64>)> = None;
    for (ci, c) in centers.iter().enumerate() {
        let o = p.ord(&(a - c));
        let better = match (&best, o) {
            (None, _) => true,
            (Some((_, None)), _) => false,
            (Some((_, Some(b))), Some(w)) => w > *b,
            (Some((_, Some(_))), None) => true,
        };
        if better {
            best = Some((ci, o));
        }
    }
    let (ci, o) = best.unwrap();
    let c = &centers[ci];
    if o.map_or(true, |w| w >= v) {
        // Ball contains the center: { t : ord(t-c) >= v } plus the center.
        out.push(Region {
            cell: Cell1D {
                center: c.clone(),
                coset: PowerCoset::new(Q::one(), 1),
                lo: Some(v),
                hi: None,
            },
            rep: c + p.pow_q(v),
            truth,
        });
        out.push(Region {
            cell: Cell1D::singleton(c.clone()),
            rep: c.clone(),
            truth,
        });
    } else {
        // B(a, v) = c + (a-c)(1 + p^(v-w) Z_p) = a coset slice of
        // exponent (p-1) p^(v-w-1) at a single valuation.
        let w = o.unwrap();
        let s = (v - w) as u32;
        debug_assert!(s >= 1);
        let m = (p.get() as u32 - 1) * (p.get() as u32).pow(s - 1);
        out.push(Region {
            cell: Cell1D {
                center: c.clone(),
                coset: PowerCoset::new(a - c, m),
                lo: Some(w),
                hi: Some(w),
            },
            rep: a.clone(),
            truth,
        });
    }
}

pub fn is_empty_formula(p: Prime, f: &Formula1D) -> bool {
    partition_regions(p, f).iter().all(|r| !r.truth)
}

pub fn formulas_equal(p: Prime, f: &Formula1D, g: &Formula1D) -> bool {
    is_empty_formula(p, &Formula1D::and(f.clone(), Formula1D::not(g.clone())))
        && is_empty_formula(p, &Formula1D::and(g.clone(), Formula1D::not(f.clone())))
}

/// The restricted 1-variable cell normalizer: a pairwise-disjoint cell
/// presentation of the set defined by `f`, centers drawn from the atom
/// centers (plus 0 for the unbounded part).
pub fn normalize_1d(p: Prime, f: &Formula1D) -> Set1D {
    let cells = partition_regions(p, f)
        .into_iter()
        .filter(|r| r.truth)
        .map(|r| r.cell)
        .collect();
    Set1D { prime: p, cells }
}

// ---------------------------------------------------------------------------
// Higher-dimensional presented sets
// ---------------------------------------------------------------------------

/// A product of 1-variable sets; denotes the full-dimensional case d = n.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    pub factors: Vec<Set1D>,
}

impl BoxSet {
    pub fn ambient(&self) -> usize {
        self.factors.len()
    }

    pub fn member(&self, z: &[Q]) -> bool {
        assert_eq!(z.len(), self.factors.len());
        self.factors.iter().zip(z).all(|(f, zi)| f.member(zi))
    }
}

/// A single coset-ray (mu * P_N) * u based at the cone origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    /// Canonical direction: the first coordinate of maximal norm is 1.
    pub direction: Vec<Q>,
    pub coset: PowerCoset,
}

impl Ray {
    /// Index of the canonical pivot coordinate (first of maximal norm).
    pub fn pivot(&self, p: Prime) -> usize {
        let mut best = 0usize;
        let mut best_ord = i64::MAX;
        for (i, u) in self.direction.iter().enumerate() {
            if let Some(o) = p.ord(u) {
                if o < best_ord {
                    best_ord = o;
                    best = i;
                }
            }
        }
        best
    }

    /// min_j ord(u_j): the valuation shift of the sup-norm along the ray.
    pub fn direction_valuation(&self, p: Prime) -> i64 {
        self.direction
            .iter()
            .filter_map(|u| p.ord(u))
            .min()
            .expect("direction is nonzero")
    }
}

/// x0 + a finite disjoint union of coset-rays; optionally includes the apex.
#[derive(Clone, Debug, PartialEq)]
pub struct RayCone {
    pub prime: Prime,
    pub ambient: usize,
    pub origin: Vec<Q>,
    pub rays: Vec<Ray>,
    pub include_apex: bool,
}

impl RayCone {
    pub fn new(
        p: Prime,
        origin: Vec<Q>,
        rays: Vec<(Vec<Q>, PowerCoset)>,
        include_apex: bool,
    ) -> Result<Self, Error> {
        let ambient = origin.len();
        let mut canonical: Vec<Ray> = Vec::new();
        for (dir, coset) in rays {
            if dir.len() != ambient || dir.iter().all(|d| d.is_zero()) {
                return Err(Error::UnsupportedSet("invalid ray direction".into()));
            }
            if coset.is_zero_cell() {
                return Err(Error::UnsupportedSet("ray coset must be nonzero".into()));
            }
            // Scale so the first maximal-norm coordinate is 1; the scale
            // factor moves into the coset.
            let mut pivot = 0usize;
            let mut best = i64::MAX;
            for (i, u) in dir.iter().enumerate() {
                if let Some(o) = p.ord(u) {
                    if o < best {
                        best = o;
                        pivot = i;
                    }
                }
            }
            let scale = dir[pivot].clone();
            let direction: Vec<Q> = dir.iter().map(|u| u / &scale).collect();
            canonical.push(Ray {
                direction,
                coset: PowerCoset::new(&coset.lambda * &scale, coset.exponent),
            });
        }
        let rays = merge_rays(p, canonical)?;
        Ok(RayCone {
            prime: p,
            ambient,
            origin,
            rays,
            include_apex,
        })
    }

    pub fn empty(p: Prime, origin: Vec<Q>, include_apex: bool) -> Self {
        let ambient = origin.len();
        RayCone {
            prime: p,
            ambient,
            origin,
            rays: Vec::new(),
            include_apex,
        }
    }

    pub fn member(&self, z: &[Q]) -> bool {
        assert_eq!(z.len(), self.ambient);
        let d: Vec<Q> = z.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        if d.iter().all(|x| x.is_zero()) {
            return self.include_apex;
        }
        for ray in &self.rays {
            let piv = ray.pivot(self.prime);
            let s = d[piv].clone();
            if s.is_zero() {
                continue;
            }
            let on_line = ray
                .direction
                .iter()
                .zip(&d)
                .all(|(u, di)| di == &(&s * u));
            if on_line && ray.coset.contains_exact(self.prime, &s) {
                return true;
            }
        }
        false
    }

    pub fn exponent_lcm(&self) -> u32 {
        self.rays.iter().map(|r| r.coset.exponent).fold(1, lcm_u32)
    }

    pub fn translate(&self, delta: &[Q]) -> RayCone {
        let origin = self
            .origin
            .iter()
            .zip(delta)
            .map(|(a, b)| a + b)
            .collect();
        RayCone {
            origin,
            ..self.clone()
        }
    }

    /// Image under z -> M z for an integer matrix with unit determinant,
    /// applied to origin and directions.
    pub fn apply_matrix(&self, m: &[Vec<Q>]) -> Result<RayCone, Error> {
        let apply = |v: &[Q]| -> Vec<Q> {
            m.iter()
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect()
        };
        RayCone::new(
            self.prime,
            apply(&self.origin),
            self.rays
                .iter()
                .map(|r| (apply(&r.direction), r.coset.clone()))
                .collect(),
            self.include_apex,
        )
    }

    /// Image under z -> alpha z (for origin 0 this is coset scaling).
    pub fn scale(&self, alpha: &Q) -> RayCone {
        assert!(!alpha.is_zero());
        RayCone {
            origin: self.origin.iter().map(|x| x * alpha).collect(),
            rays: self
                .rays
                .iter()
                .map(|r| Ray {
                    direction: r.direction.clone(),
                    coset: PowerCoset::new(&r.coset.lambda * alpha, r.coset.exponent),
                })
                .collect(),
            ..self.clone()
        }
    }

    /// Set equality of two cones via canonical class presentations.
    pub fn set_equal(&self, other: &RayCone) -> bool {
        if self.origin != other.origin {
            // Different apexes can still denote equal sets only when both
            // are empty or full overlap; compare conservatively by canonical data.
            return self.rays.is_empty()
                && other.rays.is_empty()
                && self.include_apex == other.include_apex
                && self.origin == other.origin;
        }
        if self.include_apex != other.include_apex {
            return false;
        }
        let l = lcm_u32(self.exponent_lcm(), other.exponent_lcm());
        canonical_class_set(self, l) == canonical_class_set(other, l)
    }
}

/// Canonical (direction, class mod P_L) presentation for cone comparison.
pub fn canonical_class_set(cone: &RayCone, l: u32) -> BTreeSet<(Vec<String>, QuotientElem)> {
    let quo = PowerQuotient::new(cone.prime, l);
    let mut out = BTreeSet::new();
    for ray in &cone.rays {
        // Expand the ray coset into classes mod P_L.
        for e in quo.elements() {
            let rep = quo.rep_of(e);
            if ray.coset.contains_exact(cone.prime, &rep) {
                let dir_key: Vec<String> = ray.direction.iter().map(|q| q.to_string()).collect();
                out.insert((dir_key, e));
            }
        }
    }
    out
}

/// Merges rays with the same projective direction whose cosets intersect,
/// refining to the common exponent; output rays are pairwise disjoint.
fn merge_rays(p: Prime, rays: Vec<Ray>) -> Result<Vec<Ray>, Error> {
    let mut groups: Vec<(Vec<Q>, Vec<Ray>)> = Vec::new();
    for ray in rays {
        if let Some((_, g)) = groups.iter_mut().find(|(d, _)| *d == ray.direction) {
            g.push(ray);
        } else {
            groups.push((ray.direction.clone(), vec![ray]));
        }
    }
    let mut out = Vec::new();
    for (dir, group) in groups {
        if group.len() == 1 {
            out.extend(group);
            continue;
        }
        let l = group.iter().map(|r| r.coset.exponent).fold(1, lcm_u32);
        let quo = PowerQuotient::new(p, l);
        // Disjoint if the class sets mod P_L are disjoint.
        let class_sets: Vec<BTreeSet<QuotientElem>> = group
            .iter()
            .map(|r| {
                quo.elements()
                    .into_iter()
                    .filter(|e| r.coset.contains_exact(p, &quo.rep_of(*e)))
                    .collect()
            })
            .collect();
        let mut overlap = false;
        for i in 0..class_sets.len() {
            for j in i + 1..class_sets.len() {
                if class_sets[i].intersection(&class_sets[j]).next().is_some() {
                    overlap = true;
                }
            }
        }
        if !overlap {
            out.extend(group);
        } else {
            // Canonical refinement: one ray per class in the union.
            let mut union: BTreeSet<QuotientElem> = BTreeSet::new();
            for s in class_sets {
                union.extend(s);
            }
            for e in union {
                out.push(Ray {
                    direction: dir.clone(),
                    coset: PowerCoset::new(quo.rep_of(e), l),
                });
            }
        }
    }
    Ok(out)
}

/// The germ of a monomial graph {(t, c t^k) : t in A, ord(t) >= m0} with
/// ord(c t^k) > ord(t) on the whole set, so the first-coordinate projection
/// is an isometry for the canonical 1-dimensional measure.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialGraph {
    pub prime: Prime,
    pub base: Set1D,
    pub coef: Q,
    pub exponent: u32,
    pub germ_level: i64,
}

impl MonomialGraph {
    pub fn new(p: Prime, base: Set1D, coef: Q, exponent: u32, m0: i64) -> Result<Self, Error> {
        if coef.is_zero() || exponent < 2 {
            return Err(Error::UnsupportedSet(
                "monomial graph needs nonzero coefficient and exponent >= 2".into(),
            ));
        }
        // Least germ level with ord(c) + (k-1) m0 >= 1.
        let oc = p.ord(&coef).unwrap();
        let k = exponent as i64;
        let needed = num_integer::Integer::div_ceil(&(1 - oc), &(k - 1));
        let germ_level = m0.max(needed);
        Ok(MonomialGraph {
            prime: p,
            base,
            coef,
            exponent,
            germ_level,
        })
    }

    /// The base restricted to the germ region ord(t) >= m0.
    pub fn effective_base(&self) -> Set1D {
        let f = Formula1D::and(
            self.base.formula(),
            Formula1D::OrdCmp {
                center: Q::zero(),
                op: CmpOp::Ge,
                level: self.germ_level,
            },
        );
        normalize_1d(self.prime, &f)
    }

    pub fn member(&self, z: &[Q]) -> bool {
        assert_eq!(z.len(), 2);
        let t = &z[0];
        match self.prime.ord(t) {
            None => false,
            Some(v) if v < self.germ_level => false,
            Some(_) => self.base.member(t) && z[1] == &self.coef * pow_q(t, self.exponent),
        }
    }

    /// Image under z -> alpha z; monomial graphs are stable under scaling.
    pub fn scale(&self, alpha: &Q) -> MonomialGraph {
        assert!(!alpha.is_zero());
        let sh = self.prime.ord(alpha).unwrap();
        MonomialGraph {
            prime: self.prime,
            base: self.base.scale(alpha),
            coef: &self.coef * pow_q(&alpha.recip(), self.exponent - 1),
            exponent: self.exponent,
            germ_level: self.germ_level + sh,
        }
    }
}

/// The supported class S of presented definable sets.
#[derive(Clone, Debug, PartialEq)]
pub enum DefinableSet {
    OneDim(Set1D),
    Product(BoxSet),
    Cone(RayCone),
    Graph(MonomialGraph),
    Union(Vec<DefinableSet>),
}

impl DefinableSet {
    pub fn ambient(&self) -> usize {
        match self {
            DefinableSet::OneDim(_) => 1,
            DefinableSet::Product(b) => b.ambient(),
            DefinableSet::Cone(c) => c.ambient,
            DefinableSet::Graph(_) => 2,
            DefinableSet::Union(parts) => parts.first().map_or(0, |s| s.ambient()),
        }
    }

    pub fn dimension(&self) -> u32 {
        match self {
            DefinableSet::OneDim(s) => s.dimension(),
            DefinableSet::Product(b) => b.ambient() as u32,
            DefinableSet::Cone(c) => {
                if c.rays.is_empty() {
                    0
                } else {
                    1
                }
            }
            DefinableSet::Graph(_) => 1,
            DefinableSet::Union(parts) => parts.iter().map(|s| s.dimension()).max().unwrap_or(0),
        }
    }

    /// The lcm of all coset exponents appearing in the presentation.
    pub fn presentation_exponent(&self) -> u32 {
        match self {
            DefinableSet::OneDim(s) => s.coset_exponent_lcm(),
            DefinableSet::Product(b) => b
                .factors
                .iter()
                .map(|f| f.coset_exponent_lcm())
                .fold(1, lcm_u32),
            DefinableSet::Cone(c) => c.exponent_lcm(),
            DefinableSet::Graph(g) => g.base.coset_exponent_lcm(),
            DefinableSet::Union(parts) => parts
                .iter()
                .map(|s| s.presentation_exponent())
                .fold(1, lcm_u32),
        }
    }

    pub fn member(&self, z: &[Q]) -> bool {
        match self {
            DefinableSet::OneDim(s) => s.member(&z[0]),
            DefinableSet::Product(b) => b.member(z),
            DefinableSet::Cone(c) => c.member(z),
            DefinableSet::Graph(g) => g.member(z),
            DefinableSet::Union(parts) => parts.iter().any(|s| s.member(z)),
        }
    }

    /// Image under z -> z + delta.  Monomial graphs only support the zero
    /// shift (a shifted graph leaves the presented class).
    pub fn translate(&self, delta: &[Q]) -> Result<DefinableSet, Error> {
        Ok(match self {
            DefinableSet::OneDim(s) => DefinableSet::OneDim(s.translate(&delta[0])),
            DefinableSet::Product(b) => DefinableSet::Product(BoxSet {
                factors: b
                    .factors
                    .iter()
                    .zip(delta)
                    .map(|(f, d)| f.translate(d))
                    .collect(),
            }),
            DefinableSet::Cone(c) => DefinableSet::Cone(c.translate(delta)),
            DefinableSet::Graph(g) => {
                if delta.iter().all(|d| d.is_zero()) {
                    DefinableSet::Graph(g.clone())
                } else {
                    return Err(Error::UnsupportedSet(
                        "monomial graphs cannot be translated".into(),
                    ));
                }
            }
            DefinableSet::Union(parts) => DefinableSet::Union(
                parts
                    .iter()
                    .map(|s| s.translate(delta))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    /// Image under z -> alpha z; the class is stable under scaling.
    pub fn scale(&self, alpha: &Q) -> DefinableSet {
        assert!(!alpha.is_zero());
        match self {
            DefinableSet::OneDim(s) => DefinableSet::OneDim(s.scale(alpha)),
            DefinableSet::Product(b) => DefinableSet::Product(BoxSet {
                factors: b.factors.iter().map(|f| f.scale(alpha)).collect(),
            }),
            DefinableSet::Cone(c) => DefinableSet::Cone(c.scale(alpha)),
            DefinableSet::Graph(g) => DefinableSet::Graph(g.scale(alpha)),
            DefinableSet::Union(parts) => {
                DefinableSet::Union(parts.iter().map(|s| s.scale(alpha)).collect())
            }
        }
    }

    /// Builds a union after verifying pairwise disjointness on the supported
    /// combinations (needed so volumes add).
    pub fn union(parts: Vec<DefinableSet>) -> Result<DefinableSet, Error> {
        if parts.is_empty() {
            return Err(Error::UnsupportedSet("empty union".into()));
        }
        let amb = parts[0].ambient();
        if parts.iter().any(|s| s.ambient() != amb) {
            return Err(Error::UnsupportedSet("mixed ambient dimensions".into()));
        }
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if !disjoint(&parts[i], &parts[j])? {
                    return Err(Error::UnsupportedSet("union parts overlap".into()));
                }
            }
        }
        Ok(DefinableSet::Union(parts))
    }
}

fn disjoint(a: &DefinableSet, b: &DefinableSet) -> Result<bool, Error> {
    match (a, b) {
        (DefinableSet::OneDim(x), DefinableSet::OneDim(y)) => Ok(is_empty_formula(
            x.prime,
            &Formula1D::and(x.formula(), y.formula()),
        )),
        (DefinableSet::Graph(x), DefinableSet::Graph(y)) => {
            // Same t gives equal points iff c1 t^k1 = c2 t^k2; for k1 = k2 and
            // c1 != c2 only t = 0, which is excluded by the germ cosets.
            if x.exponent == y.exponent && x.coef != y.coef {
                return Ok(true);
            }
            if x.exponent != y.exponent {
                // Overlap only at finitely many t with c1 t^(k1-k2) = c2;
                // check the candidate valuation exactly.
                let p = x.prime;
                let dk = x.exponent as i64 - y.exponent as i64;
                let ratio = &y.coef / &x.coef;
                let ov = p.ord(&ratio).unwrap();
                if ov % dk != 0 {
                    return Ok(true);
                }
                // Conservative: candidates exist; membership would need root
                // extraction, which is outside the supported check.
                return Err(Error::UnsupportedSet(
                    "cannot certify disjointness of these graphs".into(),
                ));
            }
            // Same k, same c: disjoint iff bases are (as germs); check bases.
            Ok(is_empty_formula(
                x.prime,
                &Formula1D::and(x.effective_base().formula(), y.effective_base().formula()),
            ))
        }
        (DefinableSet::Cone(x), DefinableSet::Cone(y)) => {
            // Disjoint off apexes iff no common (line, class) pair.
            let l = lcm_u32(x.exponent_lcm(), y.exponent_lcm());
            let cx = canonical_class_set(x, l);
            let cy = canonical_class_set(y, l);
            Ok(x.origin != y.origin || cx.intersection(&cy).next().is_none())
        }
        (DefinableSet::Graph(_), DefinableSet::Cone(_))
        | (DefinableSet::Cone(_), DefinableSet::Graph(_)) => {
            // A cone ray meets a graph germ in at most finitely many points of
            // fixed valuation; as germs at the origin they are disjoint when
            // the cone has no horizontal ray matching the graph.  Conservative
            // exact check: accept (volumes of finite sets vanish).
            Ok(true)
        }
        _ => Err(Error::UnsupportedSet(
            "unsupported union combination".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Lambda-cone predicates
// ---------------------------------------------------------------------------

/// Decides whether Lambda * (X - x0) = X - x0 for a 1-variable set.
///
/// A Lambda-cone with bounded presentation granularity is a finite union of
/// P_L* cosets, so the candidate is read off from the deep-negative-valuation
/// behavior and verified by exact set comparison.
pub fn is_lambda_cone_1d(x: &Set1D, lambda: &Subgroup, x0: &Q) -> bool {
    let p = x.prime;
    let shifted = x.translate(&-x0.clone());
    let f = shifted.formula();
    let l_star = lcm_u32(shifted.coset_exponent_lcm().max(1), lambda.exponent);
    // Granularity of middle-region ball cells also contributes.
    let l_star = shifted
        .cells
        .iter()
        .filter(|c| !c.is_singleton())
        .map(|c| c.coset.exponent)
        .fold(l_star, lcm_u32);
    let quo = PowerQuotient::new(p, l_star);

    // Far threshold: below every relevant level of the presentation.
    let mut min_level = 0i64;
    for c in &shifted.cells {
        if !c.is_singleton() {
            min_level = min_level.min(p.ord(&c.coset.lambda).unwrap());
            if let Some(lo) = c.lo {
                min_level = min_level.min(lo);
            }
        }
        if let Some(o) = p.ord(&c.center) {
            min_level = min_level.min(o);
        }
    }
    let margin = p.ord_u32(l_star) as i64 + 1;
    let lo_far = min_level - margin - 1;

    let mut classes: BTreeSet<QuotientElem> = BTreeSet::new();
    let mut candidate_cells: Vec<Cell1D> = Vec::new();
    for e in quo.elements() {
        let r = quo.rep_of(e);
        let a = p.ord(&r).unwrap();
        let k = num_integer::Integer::div_ceil(&(a - lo_far), &(l_star as i64));
        let deep_rep = &r * p.pow_q(-k * l_star as i64);
        if f.eval(p, &deep_rep) {
            classes.insert(e);
            candidate_cells.push(Cell1D {
                center: Q::zero(),
                coset: PowerCoset::new(r, l_star),
                lo: None,
                hi: None,
            });
        }
    }
    if f.eval(p, &Q::zero()) {
        candidate_cells.push(Cell1D::singleton(Q::zero()));
    }
    let candidate = Set1D {
        prime: p,
        cells: candidate_cells,
    };
    if !formulas_equal(p, &f, &candidate.formula()) {
        return false;
    }
    // Closure of the class set under the image of Lambda.
    let mut lambda_classes: BTreeSet<QuotientElem> = BTreeSet::new();
    let pn_image = quo.image_of_power_group(lambda.exponent);
    for rep in &lambda.coset_reps {
        let rc = quo.class_of(rep);
        for g in &pn_image {
            lambda_classes.insert(quo.mul(rc, *g));
        }
    }
    for lc in &lambda_classes {
        for g in &classes {
            if !classes.contains(&quo.mul(*lc, *g)) {
                return false;
            }
        }
    }
    true
}

/// Lambda-cone test for a ray cone: exact at its own origin, structural.
pub fn is_lambda_cone_raycone(x: &RayCone, lambda: &Subgroup, x0: &[Q]) -> bool {
    if x.origin != x0 {
        return x.rays.is_empty();
    }
    let p = x.prime;
    let l = lcm_u32(x.exponent_lcm(), lambda.exponent);
    let quo = PowerQuotient::new(p, l);
    let lambda_classes: BTreeSet<QuotientElem> = {
        let pn_image = quo.image_of_power_group(lambda.exponent);
        let mut out = BTreeSet::new();
        for rep in &lambda.coset_reps {
            let rc = quo.class_of(rep);
            for g in &pn_image {
                out.insert(quo.mul(rc, *g));
            }
        }
        out
    };
    // For each line, collect the classes present and require closure.
    let mut lines: Vec<(Vec<Q>, BTreeSet<QuotientElem>)> = Vec::new();
    for ray in &x.rays {
        let classes: BTreeSet<QuotientElem> = quo
            .elements()
            .into_iter()
            .filter(|e| ray.coset.contains_exact(p, &quo.rep_of(*e)))
            .collect();
        if let Some((_, s)) = lines.iter_mut().find(|(d, _)| *d == ray.direction) {
            s.extend(classes);
        } else {
            lines.push((ray.direction.clone(), classes));
        }
    }
    lines.iter().all(|(_, s)| {
        lambda_classes
            .iter()
            .all(|lc| s.iter().all(|g| s.contains(&quo.mul(*lc, *g))))
    })
}

/// Smallest level gamma (scanning upward from a computed start) such that
/// X ∩ B(x0, gamma) is a local Lambda-cone with origin x0.
pub fn local_cone_radius(x: &Set1D, x0: &Q, lambda: &Subgroup) -> Result<i64, Error> {
    let p = x.prime;
    let n = x.coset_exponent_lcm();
    if !lambda.is_subgroup_of_power(n) {
        return Err(Error::InvalidSubgroup);
    }
    let shifted = x.translate(&-x0.clone());
    let f = shifted.formula();
    let l_star = lcm_u32(n.max(1), lambda.exponent);
    let quo = PowerQuotient::new(p, l_star);

    // Deep-positive threshold at 0: beyond every relevant presentation level.
    let mut max_level = 0i64;
    let mut min_level = 0i64;
    for c in &shifted.cells {
        if let Some(o) = p.ord(&c.center) {
            max_level = max_level.max(o);
            min_level = min_level.min(o);
        }
        if !c.is_singleton() {
            let lv = p.ord(&c.coset.lambda).unwrap();
            max_level = max_level.max(lv);
            min_level = min_level.min(lv);
            if let Some(lo) = c.lo {
                max_level = max_level.max(lo);
                min_level = min_level.min(lo);
            }
            if let Some(hi) = c.hi {
                max_level = max_level.max(hi);
            }
        }
    }
    let margin = p.ord_u32(l_star) as i64 + 1;
    let deep = max_level + margin + 1;

    // Candidate cone classes from deep membership near 0.
    let mut candidate_cells: Vec<Cell1D> = Vec::new();
    for e in quo.elements() {
        let r = quo.rep_of(e);
        let a = p.ord(&r).unwrap();
        let k = num_integer::Integer::div_ceil(&(deep - a), &(l_star as i64));
        let deep_rep = &r * p.pow_q(k * l_star as i64);
        if f.eval(p, &deep_rep) {
            candidate_cells.push(Cell1D {
                center: Q::zero(),
                coset: PowerCoset::new(r, l_star),
                lo: None,
                hi: None,
            });
        }
    }
    if f.eval(p, &Q::zero()) {
        candidate_cells.push(Cell1D::singleton(Q::zero()));
    }
    let candidate = Set1D {
        prime: p,
        cells: candidate_cells,
    };

    let start = min_level.min(0);
    for gamma in start..=deep {
        let ball = Formula1D::OrdCmp {
            center: Q::zero(),
            op: CmpOp::Ge,
            level: gamma,
        };
        let lhs = Formula1D::and(f.clone(), ball.clone());
        let rhs = Formula1D::and(candidate.formula(), ball);
        if formulas_equal(p, &lhs, &rhs) {
            return Ok(gamma);
        }
    }
    Err(Error::InternalInconsistency(
        "local conic structure did not stabilize below the deep threshold".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{q_from, q_ratio};

    fn p5() -> Prime {
        Prime::new(5).unwrap()
    }

    fn sample_points(p: Prime) -> Vec<Q> {
        let mut pts = Vec::new();
        for v in -4i64..=4 {
            for u in 1..=(p.get() * p.get()) {
                if u % p.get() == 0 {
                    continue;
                }
                pts.push(Q::from_integer(u.into()) * p.pow_q(v));
            }
        }
        pts.push(Q::zero());
        pts.push(q_from(-1));
        pts.push(q_ratio(7, 3));
        pts
    }

    #[test]
    fn normalize_unit_ball() {
        let p = p5();
        let f = Formula1D::OrdCmp {
            center: Q::zero(),
            op: CmpOp::Ge,
            level: 0,
        };
        let s = normalize_1d(p, &f);
        for t in sample_points(p) {
            assert_eq!(s.member(&t), f.eval(p, &t), "t = {t}");
        }
    }

    #[test]
    fn normalize_square_class_with_ball() {
        let p = p5();
        let f = Formula1D::and(
            Formula1D::InCoset {
                center: Q::zero(),
                lambda: Q::one(),
                exponent: 2,
            },
            Formula1D::OrdCmp {
                center: Q::zero(),
                op: CmpOp::Ge,
                level: 2,
            },
        );
        let s = normalize_1d(p, &f);
        assert!(s.member(&q_from(25)));
        assert!(!s.member(&q_from(5)));
        for t in sample_points(p) {
            assert_eq!(s.member(&t), f.eval(p, &t), "t = {t}");
        }
    }

    #[test]
    fn normalize_complement_of_squares() {
        let p = p5();
        let f = Formula1D::not(Formula1D::InCoset {
            center: Q::zero(),
            lambda: Q::one(),
            exponent: 2,
        });
        let s = normalize_1d(p, &f);
        for t in sample_points(p) {
            assert_eq!(s.member(&t), f.eval(p, &t), "t = {t}");
        }
        // The complement contains 0, so the union with P_2 is all of K.
        let p2 = Formula1D::InCoset {
            center: Q::zero(),
            lambda: Q::one(),
            exponent: 2,
        };
        let union = Formula1D::or(s.formula(), p2);
        assert!(formulas_equal(p, &union, &Formula1D::True));
    }

    #[test]
    fn normalize_multi_center() {
        let p = p5();
        // ord(t) >= 0 and not ord(t - 1) >= 2: two centers interact.
        let f = Formula1D::and(
            Formula1D::OrdCmp {
                center: Q::zero(),
                op: CmpOp::Ge,
                level: 0,
            },
            Formula1D::not(Formula1D::OrdCmp {
                center: Q::one(),
                op: CmpOp::Ge,
                level: 2,
            }),
        );
        let s = normalize_1d(p, &f);
        for t in sample_points(p) {
            assert_eq!(s.member(&t), f.eval(p, &t), "t = {t}");
        }
        for extra in [Q::one(), q_from(26), q_from(51), q_ratio(6, 5)] {
            assert_eq!(s.member(&extra), f.eval(p, &extra), "t = {extra}");
        }
    }

    #[test]
    fn normalize_idempotent() {
        let p = p5();
        let f = Formula1D::or(
            Formula1D::InCoset {
                center: Q::zero(),
                lambda: q_from(2),
                exponent: 2,
            },
            Formula1D::OrdCmp {
                center: q_from(1),
                op: CmpOp::Eq,
                level: 1,
            },
        );
        let s = normalize_1d(p, &f);
        let s2 = normalize_1d(p, &s.formula());
        assert!(s.set_equal(&s2));
    }

    #[test]
    fn cells_pairwise_disjoint() {
        let p = p5();
        let f = Formula1D::or(
            Formula1D::InCoset {
                center: Q::zero(),
                lambda: Q::one(),
                exponent: 2,
            },
            Formula1D::OrdCmp {
                center: q_from(3),
                op: CmpOp::Ge,
                level: 1,
            },
        );
        let s = normalize_1d(p, &f);
        for i in 0..s.cells.len() {
            for j in i + 1..s.cells.len() {
                let inter = Formula1D::and(s.cells[i].formula(), s.cells[j].formula());
                assert!(is_empty_formula(p, &inter));
            }
        }
        // Exhaustive sampling check over valuations [-6, 6] x unit classes.
        for v in -6i64..=6 {
            for u in 1..p.get().pow(3) {
                if u % p.get() == 0 {
                    continue;
                }
                let t = Q::from_integer(u.into()) * p.pow_q(v);
                let hits = s.cells.iter().filter(|c| c.contains(p, &t)).count();
                assert!(hits <= 1);
            }
        }
    }

    #[test]
    fn lambda_cone_examples() {
        let p = p5();
        let p2 = Subgroup::power_group(p, 2);
        let x = Set1D::coset(p, Q::one(), 2);
        assert!(is_lambda_cone_1d(&x, &p2, &Q::zero()));

        // P_2 truncated to a ball is only a local cone.
        let trunc = normalize_1d(
            p,
            &Formula1D::and(
                x.formula(),
                Formula1D::OrdCmp {
                    center: Q::zero(),
                    op: CmpOp::Ge,
                    level: 2,
                },
            ),
        );
        assert!(!is_lambda_cone_1d(&trunc, &p2, &Q::zero()));

        // 2 P_2 ∪ 5 P_2 is a P_4-cone.
        let p4 = Subgroup::power_group(p, 4);
        let u = Set1D::from_cells(
            p,
            vec![
                Cell1D {
                    center: Q::zero(),
                    coset: PowerCoset::new(q_from(2), 2),
                    lo: None,
                    hi: None,
                },
                Cell1D {
                    center: Q::zero(),
                    coset: PowerCoset::new(q_from(5), 2),
                    lo: None,
                    hi: None,
                },
            ],
        )
        .unwrap();
        assert!(is_lambda_cone_1d(&u, &p4, &Q::zero()));
    }

    #[test]
    fn local_cone_radius_examples() {
        let p = p5();
        let p2 = Subgroup::power_group(p, 2);
        let x = Set1D::coset(p, Q::one(), 2);
        assert_eq!(local_cone_radius(&x, &Q::zero(), &p2), Ok(0));

        // 5 P_2 polluted by an annulus piece at ord = -2: conic only inside
        // the ball of level -1, where it agrees with the cone 5 P_2.
        let polluted = Set1D {
            prime: p,
            cells: vec![
                Cell1D {
                    center: Q::zero(),
                    coset: PowerCoset::new(q_from(5), 2),
                    lo: Some(-1),
                    hi: None,
                },
                Cell1D {
                    center: Q::zero(),
                    coset: PowerCoset::new(q_ratio(1, 25), 2),
                    lo: Some(-2),
                    hi: Some(-2),
                },
            ],
        };
        let gamma = local_cone_radius(&polluted, &Q::zero(), &p2).unwrap();
        assert_eq!(gamma, -1);
        let cone = Set1D::coset(p, q_from(5), 2);
        assert!(is_lambda_cone_1d(&cone, &p2, &Q::zero()));
        let ball = Formula1D::OrdCmp {
            center: Q::zero(),
            op: CmpOp::Ge,
            level: gamma,
        };
        assert!(formulas_equal(
            p,
            &Formula1D::and(polluted.formula(), ball.clone()),
            &Formula1D::and(cone.formula(), ball),
        ));

        // x0 outside the closure: some radius empties the intersection.
        let g2 = local_cone_radius(&x, &q_from(3), &p2).unwrap();
        let moved = x.translate(&q_from(-3));
        let ball2 = Formula1D::OrdCmp {
            center: Q::zero(),
            op: CmpOp::Ge,
            level: g2,
        };
        assert!(is_empty_formula(
            p,
            &Formula1D::and(moved.formula(), ball2)
        ));
    }

    #[test]
    fn raycone_membership() {
        let p = p5();
        let cone = RayCone::new(
            p,
            vec![Q::zero(), Q::zero()],
            vec![(
                vec![Q::one(), Q::one()],
                PowerCoset::new(Q::one(), 2),
            )],
            false,
        )
        .unwrap();
        assert!(cone.member(&[q_from(4), q_from(4)]));
        assert!(!cone.member(&[q_from(4), Q::one()]));
        assert!(!cone.member(&[q_from(2), q_from(2)]));
    }

    #[test]
    fn monomial_graph_membership() {
        let p = p5();
        let base = Set1D::coset(p, Q::one(), 1);
        let g = MonomialGraph::new(p, base, Q::one(), 2, 1).unwrap();
        assert!(g.member(&[q_from(5), q_from(25)]));
        assert!(!g.member(&[q_from(5), q_from(26)]));
        assert!(!g.member(&[Q::one(), Q::one()])); // below germ level
    }

    #[test]
    fn union_disjointness() {
        let p = p5();
        let a = DefinableSet::OneDim(Set1D::coset(p, Q::one(), 2));
        let b = DefinableSet::OneDim(Set1D::coset(p, q_from(2), 2));
        assert!(DefinableSet::union(vec![a.clone(), b]).is_ok());
        let overlap = DefinableSet::OneDim(Set1D::coset(p, q_from(4), 2));
        assert!(DefinableSet::union(vec![a, overlap]).is_err());
    }

    #[test]
    fn set1d_scaling_translation() {
        let p = p5();
        let s = Set1D::even_valuation(p);
        let scaled = s.scale(&q_from(5));
        for t in sample_points(p) {
            if t.is_zero() {
                continue;
            }
            assert_eq!(scaled.member(&(&t * q_from(5))), s.member(&t));
        }
        let tr = s.translate(&q_from(7));
        for t in sample_points(p) {
            assert_eq!(tr.member(&(&t + q_from(7))), s.member(&t));
        }
    }
}
