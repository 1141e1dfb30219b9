//! Tangent Λ-cones, specialization multiplicities via branch counting, and
//! the deformation-set cross-check.
//!
//! A germ in the supported class accumulates at a point along finitely many
//! lines, and along each line the deep behavior is a finite set of coset
//! classes.  The tangent cone is the Λ-saturation of those classes; the
//! multiplicity of a cone ray counts the branches folding onto it, weighted
//! by the branch/cone density ratio (1 whenever Λ is small enough).

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::density::{local_density, volume_in_ball, StepFunction};
use crate::error::Error;
use crate::padic::{lcm_u32, pow_q, PowerCoset, PowerQuotient, Prime, Q, QuotientElem, Subgroup};
use crate::setdef::{DefinableSet, Ray, RayCone, Set1D};

/// A Λ-cone with a rational multiplicity on each (pairwise disjoint) ray.
#[derive(Clone, Debug)]
pub struct ConeWithMultiplicity {
    /// Directions space: the cone apex is 0, the germ base point is kept
    /// separately.
    pub cone: RayCone,
    pub base_point: Vec<Q>,
    /// Parallel to cone.rays.
    pub multiplicities: Vec<Q>,
}

impl ConeWithMultiplicity {
    /// Σ mult_i · 1_{ray_i} as a step function for the density pipeline.
    pub fn to_step_function(&self) -> StepFunction {
        let terms = self
            .cone
            .rays
            .iter()
            .zip(&self.multiplicities)
            .map(|(ray, w)| {
                let single = RayCone {
                    prime: self.cone.prime,
                    ambient: self.cone.ambient,
                    origin: self.cone.origin.clone(),
                    rays: vec![ray.clone()],
                    include_apex: false,
                };
                (w.clone(), DefinableSet::Cone(single))
            })
            .collect();
        StepFunction {
            prime: self.cone.prime,
            terms,
        }
    }
}

fn prime_of(x: &DefinableSet) -> Result<Prime, Error> {
    match x {
        DefinableSet::OneDim(s) => Ok(s.prime),
        DefinableSet::Product(b) => Ok(b.factors[0].prime),
        DefinableSet::Cone(c) => Ok(c.prime),
        DefinableSet::Graph(g) => Ok(g.prime),
        DefinableSet::Union(parts) => prime_of(parts.first().ok_or_else(|| {
            Error::UnsupportedSet("empty union".into())
        })?),
    }
}

fn presentation_exponent(x: &DefinableSet) -> u32 {
    match x {
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
            .map(presentation_exponent)
            .fold(1, lcm_u32),
    }
}

/// Accumulation data of the germ (X, x): canonical line directions with the
/// multiset of deep coset classes (mod P_l) along each, plus whether x lies
/// in the closure of X.
struct GermLines {
    lines: Vec<(Vec<Q>, Vec<QuotientElem>)>,
    in_closure: bool,
}

fn deep_classes_1d(s: &Set1D, x: &Q, quo: &PowerQuotient) -> Vec<QuotientElem> {
    let p = s.prime;
    let shifted = s.translate(&-x.clone());
    let f = shifted.formula();
    let l_star = quo.modulus as i64;
    // Deep threshold: beyond every finite level of the presentation.
    let mut max_level = 0i64;
    for c in &shifted.cells {
        if let Some(o) = p.ord(&c.center) {
            max_level = max_level.max(o);
        }
        if !c.is_singleton() {
            max_level = max_level.max(p.ord(&c.coset.lambda).unwrap());
            if let Some(lo) = c.lo {
                max_level = max_level.max(lo);
            }
            if let Some(hi) = c.hi {
                max_level = max_level.max(hi);
            }
        }
    }
    let margin = p.ord_u32(quo.modulus) as i64 + 1;
    let deep = max_level + margin + 1;
    let mut out = Vec::new();
    for e in quo.elements() {
        let r = quo.rep_of(e);
        let a = p.ord(&r).unwrap();
        let k = num_integer::Integer::div_ceil(&(deep - a), &l_star);
        let rep = &r * p.pow_q(k * l_star);
        if f.eval(p, &rep) {
            out.push(e);
        }
    }
    out
}

fn germ_lines(
    x: &DefinableSet,
    at: &[Q],
    quo: &PowerQuotient,
) -> Result<GermLines, Error> {
    let p = prime_of(x)?;
    match x {
        DefinableSet::OneDim(s) => {
            let classes = deep_classes_1d(s, &at[0], quo);
            let in_closure = !classes.is_empty() || s.member(&at[0]);
            let lines = if classes.is_empty() {
                Vec::new()
            } else {
                vec![(vec![Q::one()], classes)]
            };
            Ok(GermLines { lines, in_closure })
        }
        DefinableSet::Cone(c) => {
            if at == c.origin.as_slice() {
                let mut lines: Vec<(Vec<Q>, Vec<QuotientElem>)> = Vec::new();
                for ray in &c.rays {
                    let classes: Vec<QuotientElem> = quo
                        .elements()
                        .into_iter()
                        .filter(|e| ray.coset.contains_exact(p, &quo.rep_of(*e)))
                        .collect();
                    if let Some((_, cs)) =
                        lines.iter_mut().find(|(d, _)| *d == ray.direction)
                    {
                        cs.extend(classes);
                    } else {
                        lines.push((ray.direction.clone(), classes));
                    }
                }
                let in_closure = c.include_apex || !c.rays.is_empty();
                return Ok(GermLines { lines, in_closure });
            }
            // Off the origin: accumulation only when x sits on a ray, and
            // there the germ is a 1-dim interior point: the full line.
            let d: Vec<Q> = at.iter().zip(&c.origin).map(|(a, b)| a - b).collect();
            if !d.iter().all(|v| v.is_zero()) {
                for ray in &c.rays {
                    let piv = ray.pivot(p);
                    let s0 = d[piv].clone();
                    if s0.is_zero() {
                        continue;
                    }
                    let on_line = ray
                        .direction
                        .iter()
                        .zip(&d)
                        .all(|(u, di)| di == &(&s0 * u));
                    if on_line && ray.coset.contains_exact(p, &s0) {
                        return Ok(GermLines {
                            lines: vec![(ray.direction.clone(), quo.elements())],
                            in_closure: true,
                        });
                    }
                }
            }
            Ok(GermLines {
                lines: Vec::new(),
                in_closure: c.member(at),
            })
        }
        DefinableSet::Graph(g) => {
            if at.iter().all(|v| v.is_zero()) {
                let base = g.effective_base();
                let classes = deep_classes_1d(&base, &Q::zero(), quo);
                let in_closure = !classes.is_empty() || g.member(at);
                let lines = if classes.is_empty() {
                    Vec::new()
                } else {
                    // Second coordinate collapses: |c t^k| <= q^{-1} |t|.
                    vec![(vec![Q::one(), Q::zero()], classes)]
                };
                return Ok(GermLines { lines, in_closure });
            }
            if g.member(at) {
                // Smooth point: the full tangent line t -> (1, k c t0^(k-1)).
                let t0 = &at[0];
                let slope = &g.coef
                    * Q::from_integer(u64::from(g.exponent).into())
                    * pow_q(t0, g.exponent - 1);
                return Ok(GermLines {
                    lines: vec![(vec![Q::one(), slope], quo.elements())],
                    in_closure: true,
                });
            }
            Ok(GermLines {
                lines: Vec::new(),
                in_closure: false,
            })
        }
        DefinableSet::Union(parts) => {
            let mut lines: Vec<(Vec<Q>, Vec<QuotientElem>)> = Vec::new();
            let mut in_closure = false;
            for part in parts {
                let gl = germ_lines(part, at, quo)?;
                in_closure |= gl.in_closure;
                for (d, cs) in gl.lines {
                    if let Some((_, acc)) = lines.iter_mut().find(|(d2, _)| *d2 == d) {
                        acc.extend(cs);
                    } else {
                        lines.push((d, cs));
                    }
                }
            }
            Ok(GermLines { lines, in_closure })
        }
        DefinableSet::Product(_) => Err(Error::UnsupportedSet(
            "tangent cones of product sets are not supported".into(),
        )),
    }
}

fn lambda_image(quo: &PowerQuotient, lambda: &Subgroup) -> BTreeSet<QuotientElem> {
    let pn = quo.image_of_power_group(lambda.exponent);
    let mut out = BTreeSet::new();
    for rep in &lambda.coset_reps {
        let rc = quo.class_of(rep);
        for g in &pn {
            out.insert(quo.mul(rc, *g));
        }
    }
    out
}

fn common_quotient(x: &DefinableSet, lambda: &Subgroup) -> Result<PowerQuotient, Error> {
    let p = prime_of(x)?;
    let l_star = lcm_u32(presentation_exponent(x).max(1), lambda.exponent);
    Ok(PowerQuotient::new(p, l_star))
}

/// The closed tangent cone C_x^Λ(X) in directions space (apex at 0).
pub fn tangent_cone(
    x: &DefinableSet,
    at: &[Q],
    lambda: &Subgroup,
) -> Result<RayCone, Error> {
    Ok(sc_multiplicity_inner(x, at, lambda, true)?.cone)
}

/// SC_x^Λ(X) computed by branch counting.
pub fn sc_multiplicity(
    x: &DefinableSet,
    at: &[Q],
    lambda: &Subgroup,
) -> Result<ConeWithMultiplicity, Error> {
    sc_multiplicity_inner(x, at, lambda, false)
}

fn sc_multiplicity_inner(
    x: &DefinableSet,
    at: &[Q],
    lambda: &Subgroup,
    apex_on_closure: bool,
) -> Result<ConeWithMultiplicity, Error> {
    let p = prime_of(x)?;
    let quo = common_quotient(x, lambda)?;
    let l_star = quo.modulus;
    let germ = germ_lines(x, at, &quo)?;
    let lam = lambda_image(&quo, lambda);
    let lam_size = Q::from_integer((lam.len() as u64).into());

    let _ = apex_on_closure;
    let mut rays: Vec<Ray> = Vec::new();
    let mut mults: Vec<Q> = Vec::new();
    for (direction, classes) in &germ.lines {
        // Saturated class set on this line.
        let mut saturated: BTreeSet<QuotientElem> = BTreeSet::new();
        for g in classes {
            for l in &lam {
                saturated.insert(quo.mul(*l, *g));
            }
        }
        for h in saturated {
            // Count branches g whose Λ-orbit contains h (g ∈ Λ·h, as Λ-image
            // is a group); each contributes its density ratio 1/|Λ-image|.
            let orbit_of_h: BTreeSet<QuotientElem> =
                lam.iter().map(|l| quo.mul(*l, h)).collect();
            let count = classes.iter().filter(|g| orbit_of_h.contains(g)).count();
            rays.push(Ray {
                direction: direction.clone(),
                coset: PowerCoset::new(quo.rep_of(h), l_star),
            });
            mults.push(Q::from_integer((count as u64).into()) / &lam_size);
        }
    }

    let include_apex = germ.in_closure;
    let ambient = at.len();
    let cone = RayCone {
        prime: p,
        ambient,
        origin: vec![Q::zero(); ambient],
        rays,
        include_apex,
    };
    Ok(ConeWithMultiplicity {
        cone,
        base_point: at.to_vec(),
        multiplicities: mults,
    })
}

/// ν_x^Λ(φ): linear extension of SC over the terms of a step function.
pub fn nu_specialization(
    phi: &StepFunction,
    at: &[Q],
    lambda: &Subgroup,
) -> Result<ConeWithMultiplicity, Error> {
    if phi.terms.is_empty() {
        return Ok(ConeWithMultiplicity {
            cone: RayCone::empty(phi.prime, vec![Q::zero(); at.len()], false),
            base_point: at.to_vec(),
            multiplicities: Vec::new(),
        });
    }
    // Common granularity across all terms.
    let l_all = phi
        .terms
        .iter()
        .map(|(_, s)| presentation_exponent(s))
        .fold(lambda.exponent, lcm_u32);
    let p = phi.prime;
    let quo = PowerQuotient::new(p, l_all);
    let mut acc: Vec<(Vec<Q>, QuotientElem, Q)> = Vec::new();
    let mut apex = false;
    for (w, s) in &phi.terms {
        let germ = germ_lines(s, at, &quo)?;
        apex |= germ.in_closure;
        let lam = lambda_image(&quo, lambda);
        let lam_size = Q::from_integer((lam.len() as u64).into());
        for (direction, classes) in &germ.lines {
            let mut saturated: BTreeSet<QuotientElem> = BTreeSet::new();
            for g in classes {
                for l in &lam {
                    saturated.insert(quo.mul(*l, *g));
                }
            }
            for h in saturated {
                let orbit: BTreeSet<QuotientElem> =
                    lam.iter().map(|l| quo.mul(*l, h)).collect();
                let count = classes.iter().filter(|g| orbit.contains(g)).count();
                let weight = w * Q::from_integer((count as u64).into()) / &lam_size;
                if let Some(entry) = acc
                    .iter_mut()
                    .find(|(d, e, _)| *d == *direction && *e == h)
                {
                    entry.2 += weight;
                } else {
                    acc.push((direction.clone(), h, weight));
                }
            }
        }
    }
    acc.retain(|(_, _, w)| !w.is_zero());
    let ambient = at.len();
    let rays = acc
        .iter()
        .map(|(d, h, _)| Ray {
            direction: d.clone(),
            coset: PowerCoset::new(quo.rep_of(*h), l_all),
        })
        .collect();
    let multiplicities = acc.into_iter().map(|(_, _, w)| w).collect();
    Ok(ConeWithMultiplicity {
        cone: RayCone {
            prime: p,
            ambient,
            origin: vec![Q::zero(); ambient],
            rays,
            include_apex: apex,
        },
        base_point: at.to_vec(),
        multiplicities,
    })
}

/// Whether every refinement Λ′ ⊆ Λ yields the same tangent cone.
pub fn distinguished_check(
    x: &DefinableSet,
    at: &[Q],
    lambda: &Subgroup,
    refinements: &[Subgroup],
) -> Result<bool, Error> {
    let base = tangent_cone(x, at, lambda)?;
    for lp in refinements {
        if !lp.is_subgroup_of(lambda) {
            return Err(Error::InvalidSubgroup);
        }
        let refined = tangent_cone(x, at, lp)?;
        if !refined.set_equal(&base) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Theorem check: Θ_d(X)(x) against Θ_d of the weighted tangent cone at 0,
/// refining Λ up to `refine_bound` times before giving up.
pub fn theorem_mt_check(
    x: &DefinableSet,
    at: &[Q],
    lambda: &Subgroup,
    refine_bound: u32,
) -> Result<(Q, Q, bool), Error> {
    let d = x.dimension();
    if d == 0 {
        return Err(Error::UnsupportedSet(
            "dimension-0 sets are outside the density pipeline".into(),
        ));
    }
    let p = prime_of(x)?;
    let lhs = local_density(&StepFunction::indicator(p, x.clone()), at, d)?.density;
    let n = presentation_exponent(x).max(1);
    let origin = vec![Q::zero(); at.len()];
    let mut last_rhs = Q::zero();
    for k in 1..=refine_bound.max(1) {
        let refined = if k == 1 && lambda.is_subgroup_of_power(n) {
            lambda.clone()
        } else {
            lambda.intersect_power(k * n)?
        };
        let cm = sc_multiplicity(x, at, &refined)?;
        let rhs = local_density(&cm.to_step_function(), &origin, d)?.density;
        if rhs == lhs {
            return Ok((lhs, rhs, true));
        }
        last_rhs = rhs;
    }
    let _ = last_rhs;
    Err(Error::NoStabilization)
}

/// Oracle for SC: a rational interval around the truncated-Fubini estimate
/// of [K^×:Λ]·Θ_{d+1}(1_{D(X,x,Λ)})(z, 0), which must contain the branch
/// count.  The λ-integral is sampled one representative per coset class of
/// P_{L*} at each valuation level down to depth T; slice volumes are exact.
pub fn sc_cross_check(
    x: &DefinableSet,
    at: &[Q],
    lambda: &Subgroup,
    z: &[Q],
    depth: u32,
) -> Result<(Q, Q), Error> {
    let p = prime_of(x)?;
    let d = x.dimension();
    if d == 0 {
        return Err(Error::UnsupportedSet("dimension-0 germ".into()));
    }
    let quo = common_quotient(x, lambda)?;
    let l_star = quo.modulus;
    let e0 = l_star;
    let t = depth.max(4 * e0.max(1)) as i64;
    let shifted = x.translate(&at.iter().map(|v| -v.clone()).collect::<Vec<_>>())?;

    // W(n) = vol(D ∩ B((z,0), n)), truncated over λ-levels l ∈ [n, n+T].
    let reps = crate::padic::unit_class_reps(p, l_star);
    let iu = Q::from_integer((reps.len() as u64).into());
    let level_weight = (Q::one() - p.pow_q(-1)) / &iu;
    let w_at = |n: i64| -> Result<Q, Error> {
        let mut acc = Q::zero();
        for l in n..=(n + t) {
            for r in &reps {
                let lam_rep = r * p.pow_q(l);
                if !lambda.contains(&lam_rep) {
                    continue;
                }
                let slice = shifted.scale(&lam_rep.recip());
                acc += p.pow_q(-l) * &level_weight * volume_in_ball(&slice, z, n);
            }
        }
        Ok(acc)
    };

    let dd = d as i64 + 1;
    let norm = Q::one() - p.pow_q(-dd);
    let mut theta = Vec::new();
    let mut w_prev = w_at(0)?;
    for n in 0..=t {
        let w_next = w_at(n + 1)?;
        theta.push((&w_prev - &w_next) * p.pow_q(n * dd) / &norm);
        w_prev = w_next;
    }

    // The tail must repeat with period e0 (within the truncation error).
    let e = e0.max(1) as usize;
    let tol = p.pow_q(-(t - 2 * e0.max(1) as i64)) * Q::from_integer(4.into());
    let tail_start = theta.len() - 2 * e;
    for i in tail_start..theta.len() - e {
        let diff = &theta[i] - &theta[i + e];
        if abs_q(&diff) > tol {
            return Err(Error::DepthTooSmall);
        }
    }
    let mv: Q = theta[theta.len() - e..]
        .iter()
        .sum::<Q>()
        / Q::from_integer((e as u64).into());
    let idx = Q::from_integer(crate::padic::subgroup_index(lambda).into());
    let est = &mv * &idx;
    let half = &idx * p.pow_q(-(depth as i64)) * Q::from_integer(4.into());
    Ok((&est - &half, est + half))
}

fn abs_q(v: &Q) -> Q {
    if v < &Q::zero() {
        -v.clone()
    } else {
        v.clone()
    }
}
