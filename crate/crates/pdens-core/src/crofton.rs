//! Exact local Crofton integration over G(2,1) = P¹(Q_p) for dimension-1
//! sets in K².
//!
//! The Grassmannian carries a unique GL_2(R)-invariant probability measure;
//! its residue-disc cells at depth k have measure 1/((q+1)q^(k-1)).  The
//! projection along a line V is identified with K through a unimodular
//! completion, so direct images of coset-rays are coset sets in K and the
//! integrand is an exact local density.  Rays parallel to V form the finite
//! bad set; their cells are evaluated at punctured representatives (a point
//! has measure zero).

use num_traits::{One, Zero};

use crate::density::{local_density, StepFunction};
use crate::error::Error;
use crate::padic::{PowerCoset, Prime, Q, Subgroup};
use crate::setdef::{Cell1D, DefinableSet, RayCone, Set1D};

/// A line in K², canonicalized: [1 : t] with t ∈ R, or [s : 1] with ord(s) ≥ 1.
#[derive(Clone, Debug, PartialEq)]
pub enum ProjectiveLine {
    Affine { t: Q },
    Infinite { s: Q },
}

impl ProjectiveLine {
    pub fn from_direction(p: Prime, u: &[Q]) -> Result<Self, Error> {
        assert_eq!(u.len(), 2);
        if u.iter().all(|x| x.is_zero()) {
            return Err(Error::UnsupportedSet("zero direction".into()));
        }
        let o1 = p.ord(&u[0]);
        let o2 = p.ord(&u[1]);
        let affine = match (o1, o2) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(a), Some(b)) => a <= b,
        };
        if affine {
            Ok(ProjectiveLine::Affine {
                t: &u[1] / &u[0],
            })
        } else {
            Ok(ProjectiveLine::Infinite {
                s: &u[0] / &u[1],
            })
        }
    }

    /// A primitive spanning vector.
    pub fn direction(&self) -> Vec<Q> {
        match self {
            ProjectiveLine::Affine { t } => vec![Q::one(), t.clone()],
            ProjectiveLine::Infinite { s } => vec![s.clone(), Q::one()],
        }
    }

    /// The unimodular completion vector w with det(v, w) a unit.
    pub fn completion(&self) -> Vec<Q> {
        match self {
            ProjectiveLine::Affine { .. } => vec![Q::zero(), Q::one()],
            ProjectiveLine::Infinite { .. } => vec![Q::one(), Q::zero()],
        }
    }

    /// The coordinate of z on K²/V: f(z) = det(v, z) / det(v, w).
    pub fn functional(&self, z: &[Q]) -> Q {
        match self {
            // v = (1, t), w = (0, 1): det(v, w) = 1.
            ProjectiveLine::Affine { t } => &z[1] - t * &z[0],
            // v = (s, 1), w = (1, 0): det(v, w) = -1.
            ProjectiveLine::Infinite { s } => &z[0] - s * &z[1],
        }
    }

    /// Equality as lines (representations are canonical).
    pub fn same_line(&self, other: &ProjectiveLine) -> bool {
        self == other
    }
}

/// A residue-disc cell of P¹ at a given depth.
#[derive(Clone, Debug)]
pub struct PartitionCell {
    pub anchor: ProjectiveLine,
    pub depth: u32,
}

impl PartitionCell {
    pub fn measure(&self, p: Prime) -> Q {
        let q = p.get();
        Q::from_integer(((q + 1) * q.pow(self.depth - 1)).into()).recip()
    }

    pub fn contains(&self, p: Prime, line: &ProjectiveLine) -> bool {
        let k = self.depth as i64;
        match (&self.anchor, line) {
            (ProjectiveLine::Affine { t: a }, ProjectiveLine::Affine { t }) => {
                p.ord(&(a - t)).map_or(true, |o| o >= k)
            }
            (ProjectiveLine::Infinite { s: a }, ProjectiveLine::Infinite { s }) => {
                p.ord(&(a - s)).map_or(true, |o| o >= k)
            }
            _ => false,
        }
    }

    /// A representative line inside the cell distinct from all of `avoid`.
    pub fn representative(&self, p: Prime, avoid: &[ProjectiveLine], offset: u32) -> ProjectiveLine {
        let k = self.depth as i64;
        let mut i: i64 = offset as i64;
        loop {
            let cand = match &self.anchor {
                ProjectiveLine::Affine { t } => ProjectiveLine::Affine {
                    t: t + Q::from_integer(i.into()) * p.pow_q(k),
                },
                ProjectiveLine::Infinite { s } => ProjectiveLine::Infinite {
                    s: s + Q::from_integer(i.into()) * p.pow_q(k),
                },
            };
            if !avoid.iter().any(|b| b.same_line(&cand)) {
                return cand;
            }
            i += 1;
        }
    }
}

/// The full residue-disc partition of P¹ at depth k:
/// (q+1)·q^(k-1) cells of equal measure.
#[derive(Clone, Debug)]
pub struct InvariantMeasurePartition {
    pub prime: Prime,
    pub depth: u32,
    pub cells: Vec<PartitionCell>,
}

pub fn invariant_cell_measure(p: Prime, depth: u32) -> InvariantMeasurePartition {
    assert!(depth >= 1);
    let q = p.get();
    let mut cells = Vec::new();
    for j in 0..q.pow(depth) {
        cells.push(PartitionCell {
            anchor: ProjectiveLine::Affine {
                t: Q::from_integer(j.into()),
            },
            depth,
        });
    }
    for j in 0..q.pow(depth - 1) {
        cells.push(PartitionCell {
            anchor: ProjectiveLine::Infinite {
                s: Q::from_integer((j * q).into()),
            },
            depth,
        });
    }
    InvariantMeasurePartition {
        prime: p,
        depth,
        cells,
    }
}

/// Lines spanned by rays of the germ through x: the condition-(✳) bad set.
fn germ_lines_through(
    x: &DefinableSet,
    at: &[Q],
) -> Result<Vec<ProjectiveLine>, Error> {
    let p = match x {
        DefinableSet::Cone(c) => c.prime,
        DefinableSet::Graph(g) => g.prime,
        DefinableSet::Union(_) => match x {
            DefinableSet::Union(parts) => match parts.first() {
                Some(DefinableSet::Cone(c)) => c.prime,
                Some(DefinableSet::Graph(g)) => g.prime,
                _ => {
                    return Err(Error::UnsupportedSet(
                        "condition (✳) needs a dimension-1 set in the plane".into(),
                    ))
                }
            },
            _ => unreachable!(),
        },
        _ => {
            return Err(Error::UnsupportedSet(
                "condition (✳) needs a dimension-1 set in the plane".into(),
            ))
        }
    };
    match x {
        DefinableSet::Cone(c) => {
            if at == c.origin.as_slice() {
                let mut out = Vec::new();
                for ray in &c.rays {
                    let line = ProjectiveLine::from_direction(p, &ray.direction)?;
                    if !out.contains(&line) {
                        out.push(line);
                    }
                }
                Ok(out)
            } else {
                // Off the origin the germ is either empty or a single full
                // line along the carrying ray.
                let d: Vec<Q> = at.iter().zip(&c.origin).map(|(a, b)| a - b).collect();
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
                        return Ok(vec![ProjectiveLine::from_direction(p, &ray.direction)?]);
                    }
                }
                Ok(Vec::new())
            }
        }
        // A monomial graph germ is curved: every fiber through the base
        // point meets it in at most finitely many points, excluded by a
        // small enough ball, so no line is bad.
        DefinableSet::Graph(_) => Ok(Vec::new()),
        DefinableSet::Union(parts) => {
            let mut out = Vec::new();
            for part in parts {
                for line in germ_lines_through(part, at)? {
                    if !out.contains(&line) {
                        out.push(line);
                    }
                }
            }
            Ok(out)
        }
        _ => unreachable!(),
    }
}

/// Condition (✳): the fiber of p_V through x meets the germ closure of X
/// only at x.
pub fn check_condition_star(
    x: &DefinableSet,
    at: &[Q],
    v: &ProjectiveLine,
) -> Result<bool, Error> {
    Ok(!germ_lines_through(x, at)?
        .iter()
        .any(|line| line.same_line(v)))
}

/// Germ direct image p_{V!,x}(φ) as a step function on K.  The image of the
/// ray μP_N·u based at x is f(x) + (μ·f(u))·P_N; coinciding images merge
/// additively.
pub fn direct_image(
    phi: &StepFunction,
    at: &[Q],
    v: &ProjectiveLine,
) -> Result<StepFunction, Error> {
    let p = phi.prime;
    let mut terms: Vec<(Q, Q, PowerCoset)> = Vec::new(); // weight, center, coset
    for (w, set) in &phi.terms {
        let cone = match set {
            DefinableSet::Cone(c) => c,
            _ => {
                return Err(Error::UnsupportedSet(
                    "direct image is defined on coset-ray germs".into(),
                ))
            }
        };
        if !check_condition_star(set, at, v)? {
            return Err(Error::ConditionStarViolated);
        }
        let base = v.functional(&cone.origin);
        for ray in &cone.rays {
            let fu = v.functional(&ray.direction);
            debug_assert!(!fu.is_zero());
            let lambda = &ray.coset.lambda * &fu;
            let n = ray.coset.exponent;
            // Merge exactly coinciding image cosets.
            if let Some(entry) = terms.iter_mut().find(|(_, c, coset)| {
                *c == base
                    && coset.exponent == n
                    && coset.contains_exact(p, &lambda)
            }) {
                entry.0 += w;
            } else {
                terms.push((w.clone(), base.clone(), PowerCoset::new(lambda, n)));
            }
        }
    }
    Ok(StepFunction {
        prime: p,
        terms: terms
            .into_iter()
            .map(|(w, center, coset)| {
                (
                    w,
                    DefinableSet::OneDim(Set1D {
                        prime: p,
                        cells: vec![Cell1D {
                            center,
                            coset,
                            lo: None,
                            hi: None,
                        }],
                    }),
                )
            })
            .collect(),
    })
}

#[derive(Clone, Debug)]
pub struct CroftonReport {
    pub value: Q,
    pub depth_used: u32,
    pub cells_evaluated: usize,
    pub bad_directions: Vec<ProjectiveLine>,
}

/// Exact Crofton integral of a coset-ray step function based at x:
/// ∫ Θ_1(p_{V!,x} φ)(p_V(x)) dμ(V) over the good part of P¹.
pub fn crofton_integral(phi: &StepFunction, at: &[Q]) -> Result<CroftonReport, Error> {
    let p = phi.prime;
    for (_, set) in &phi.terms {
        match set {
            DefinableSet::Cone(c) if c.origin.as_slice() == at => {}
            _ => {
                return Err(Error::UnsupportedSet(
                    "Crofton integration expects coset-ray germs based at x".into(),
                ))
            }
        }
    }
    let mut bad: Vec<ProjectiveLine> = Vec::new();
    for (_, set) in &phi.terms {
        for line in germ_lines_through(set, at)? {
            if !bad.contains(&line) {
                bad.push(line);
            }
        }
    }
    // Refine until each cell isolates at most one bad direction.
    let mut depth = 1u32;
    loop {
        let partition = invariant_cell_measure(p, depth);
        let separated = partition.cells.iter().all(|cell| {
            bad.iter().filter(|b| cell.contains(p, b)).count() <= 1
        });
        if separated {
            let mut total = Q::zero();
            for cell in &partition.cells {
                let rep = cell.representative(p, &bad, 0);
                let rep2 = cell.representative(p, &bad, 1);
                let v1 = integrand(phi, at, &rep)?;
                let v2 = integrand(phi, at, &rep2)?;
                if v1 != v2 {
                    // Combinatorial type not yet constant: refine further.
                    return Err(Error::InternalInconsistency(
                        "Crofton integrand not constant on a partition cell".into(),
                    ));
                }
                total += v1 * cell.measure(p);
            }
            return Ok(CroftonReport {
                value: total,
                depth_used: depth,
                cells_evaluated: partition.cells.len(),
                bad_directions: bad,
            });
        }
        depth += 1;
        if depth > 64 {
            return Err(Error::InternalInconsistency(
                "bad directions could not be separated".into(),
            ));
        }
    }
}

fn integrand(phi: &StepFunction, at: &[Q], v: &ProjectiveLine) -> Result<Q, Error> {
    let image = direct_image(phi, at, v)?;
    let y = v.functional(at);
    Ok(local_density(&image, &[y], 1)?.density)
}

/// Theorem check: Θ_1(X)(x) against the Crofton integral of the
/// multiplicity-weighted tangent cone.
pub fn verify_crofton(x: &DefinableSet, at: &[Q]) -> Result<(Q, Q, bool), Error> {
    if x.ambient() != 2 || x.dimension() != 1 {
        return Err(Error::UnsupportedSet(
            "Crofton verification needs a dimension-1 set in the plane".into(),
        ));
    }
    let p = match x {
        DefinableSet::Cone(c) => c.prime,
        DefinableSet::Graph(g) => g.prime,
        DefinableSet::Union(parts) => match parts.first() {
            Some(DefinableSet::Cone(c)) => c.prime,
            Some(DefinableSet::Graph(g)) => g.prime,
            _ => return Err(Error::UnsupportedSet("unsupported union".into())),
        },
        _ => return Err(Error::UnsupportedSet("unsupported plane set".into())),
    };
    let lhs = local_density(&StepFunction::indicator(p, x.clone()), at, 1)?.density;
    let n = x.presentation_exponent().max(1);
    let lambda = Subgroup::power_group(p, n);
    let cm = crate::cone::sc_multiplicity(x, at, &lambda)?;
    let origin = vec![Q::zero(), Q::zero()];
    let report = crofton_integral(&cm.to_step_function(), &origin)?;
    Ok((lhs.clone(), report.value.clone(), lhs == report.value))
}

/// A full line through the origin as a one-ray cone (coset P_1 = K^×).
pub fn full_line(p: Prime, direction: Vec<Q>) -> Result<RayCone, Error> {
    RayCone::new(
        p,
        vec![Q::zero(), Q::zero()],
        vec![(direction, PowerCoset::new(Q::one(), 1))],
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{q_from, q_ratio, subgroup_index};
    use crate::setdef::MonomialGraph;
    use rand::{Rng, SeedableRng};

    fn p5() -> Prime {
        Prime::new(5).unwrap()
    }

    fn indicator_cone(c: RayCone) -> StepFunction {
        StepFunction::indicator(c.prime, DefinableSet::Cone(c))
    }

    #[test]
    fn partition_measures() {
        let p = p5();
        let part = invariant_cell_measure(p, 1);
        assert_eq!(part.cells.len(), 6);
        let total: Q = part.cells.iter().map(|c| c.measure(p)).sum();
        assert_eq!(total, Q::one());
        // Affine chart at depth 1: 5 of 6 cells.
        let affine: Q = part
            .cells
            .iter()
            .filter(|c| matches!(c.anchor, ProjectiveLine::Affine { .. }))
            .map(|c| c.measure(p))
            .sum();
        assert_eq!(affine, q_ratio(5, 6));

        let p3 = Prime::new(3).unwrap();
        let part2 = invariant_cell_measure(p3, 2);
        assert_eq!(part2.cells.len(), 12);
        assert!(part2.cells.iter().all(|c| c.measure(p3) == q_ratio(1, 12)));
    }

    #[test]
    fn condition_star_examples() {
        let p = p5();
        let ray = RayCone::new(
            p,
            vec![Q::zero(), Q::zero()],
            vec![(vec![Q::one(), Q::one()], PowerCoset::new(Q::one(), 2))],
            false,
        )
        .unwrap();
        let x = DefinableSet::Cone(ray);
        let diag = ProjectiveLine::from_direction(p, &[Q::one(), Q::one()]).unwrap();
        let horiz = ProjectiveLine::from_direction(p, &[Q::one(), Q::zero()]).unwrap();
        let zero = [Q::zero(), Q::zero()];
        assert!(!check_condition_star(&x, &zero, &diag).unwrap());
        assert!(check_condition_star(&x, &zero, &horiz).unwrap());

        let g = MonomialGraph::new(p, Set1D::coset(p, Q::one(), 1), Q::one(), 2, 1).unwrap();
        let vert = ProjectiveLine::from_direction(p, &[Q::zero(), Q::one()]).unwrap();
        assert!(check_condition_star(&DefinableSet::Graph(g), &zero, &vert).unwrap());
    }

    #[test]
    fn direct_image_of_ray() {
        let p = p5();
        let ray = RayCone::new(
            p,
            vec![Q::zero(), Q::zero()],
            vec![(vec![Q::one(), Q::one()], PowerCoset::new(Q::one(), 2))],
            false,
        )
        .unwrap();
        let phi = indicator_cone(ray);
        let horiz = ProjectiveLine::from_direction(p, &[Q::one(), Q::zero()]).unwrap();
        let img = direct_image(&phi, &[Q::zero(), Q::zero()], &horiz).unwrap();
        assert_eq!(img.terms.len(), 1);
        // f(z) = z2 - 0·z1 = z2: image of s(1,1) is s: the coset P_2.
        let (w, set) = &img.terms[0];
        assert_eq!(w, &Q::one());
        assert!(set.member(&[q_from(4)]));
        assert!(!set.member(&[q_from(2)]));
        // Parallel direction violates (✳).
        let diag = ProjectiveLine::from_direction(p, &[Q::one(), Q::one()]).unwrap();
        assert!(matches!(
            direct_image(&phi, &[Q::zero(), Q::zero()], &diag),
            Err(Error::ConditionStarViolated)
        ));
    }

    #[test]
    fn direct_image_merges_coincident_cosets() {
        let p = p5();
        // Rays (1,1) and (1,-1) with coset P_2 project along V = span(1,0)
        // to z2-images P_2 and -P_2; these coincide iff -1 ∈ P_2 (true at
        // p = 5), so the image is one coset with weight 2.
        let two = RayCone::new(
            p,
            vec![Q::zero(), Q::zero()],
            vec![
                (vec![Q::one(), Q::one()], PowerCoset::new(Q::one(), 2)),
                (vec![Q::one(), q_from(-1)], PowerCoset::new(Q::one(), 2)),
            ],
            false,
        )
        .unwrap();
        let phi = indicator_cone(two);
        let horiz = ProjectiveLine::from_direction(p, &[Q::one(), Q::zero()]).unwrap();
        let img = direct_image(&phi, &[Q::zero(), Q::zero()], &horiz).unwrap();
        assert_eq!(img.terms.len(), 1);
        assert_eq!(img.terms[0].0, q_from(2));
    }

    #[test]
    fn kappa_calibration_full_line() {
        let p = p5();
        for dir in [
            vec![Q::one(), Q::zero()],
            vec![Q::zero(), Q::one()],
            vec![Q::one(), Q::one()],
            vec![Q::one(), q_from(3)],
            vec![q_from(5), Q::one()],
            vec![Q::one(), q_ratio(1, 5)],
            vec![q_from(2), q_from(7)],
            vec![Q::one(), q_from(-2)],
            vec![q_from(3), q_from(4)],
            vec![Q::one(), q_from(24)],
        ] {
            let line = full_line(p, dir).unwrap();
            let phi = indicator_cone(line);
            let rep = crofton_integral(&phi, &[Q::zero(), Q::zero()]).unwrap();
            assert_eq!(rep.value, Q::one());
        }
    }

    #[test]
    fn crofton_two_coordinate_rays() {
        let p = p5();
        let x = RayCone::new(
            p,
            vec![Q::zero(), Q::zero()],
            vec![
                (vec![Q::one(), Q::zero()], PowerCoset::new(Q::one(), 2)),
                (vec![Q::zero(), Q::one()], PowerCoset::new(Q::one(), 2)),
            ],
            false,
        )
        .unwrap();
        let phi = indicator_cone(x);
        let rep = crofton_integral(&phi, &[Q::zero(), Q::zero()]).unwrap();
        assert_eq!(rep.value, q_ratio(1, 2));
        assert_eq!(rep.bad_directions.len(), 2);
    }

    #[test]
    fn crofton_linearity() {
        let p = p5();
        let line = full_line(p, vec![Q::one(), Q::one()]).unwrap();
        let phi = StepFunction {
            prime: p,
            terms: vec![(q_from(2), DefinableSet::Cone(line))],
        };
        let rep = crofton_integral(&phi, &[Q::zero(), Q::zero()]).unwrap();
        assert_eq!(rep.value, q_from(2));
    }

    #[test]
    fn verify_crofton_examples() {
        let p = p5();
        // Single ray.
        let ray = RayCone::new(
            p,
            vec![Q::zero(), Q::zero()],
            vec![(vec![Q::one(), Q::one()], PowerCoset::new(Q::one(), 2))],
            false,
        )
        .unwrap();
        let (lhs, rhs, eq) =
            verify_crofton(&DefinableSet::Cone(ray), &[Q::zero(), Q::zero()]).unwrap();
        assert_eq!(lhs, q_ratio(1, 4));
        assert_eq!(rhs, q_ratio(1, 4));
        assert!(eq);

        // Full line: the κ = 1 calibration.
        let line = full_line(p, vec![Q::one(), q_from(2)]).unwrap();
        let (l2, r2, eq2) =
            verify_crofton(&DefinableSet::Cone(line), &[Q::zero(), Q::zero()]).unwrap();
        assert_eq!(l2, Q::one());
        assert_eq!(r2, Q::one());
        assert!(eq2);

        // Two-branch monomial germ: multiplicity 2 on the collapsed cone.
        let base = Set1D::coset(p, Q::one(), 2);
        let g1 = MonomialGraph::new(p, base.clone(), Q::one(), 2, 1).unwrap();
        let g2 = MonomialGraph::new(p, base, q_from(2), 2, 1).unwrap();
        let x = DefinableSet::union(vec![
            DefinableSet::Graph(g1),
            DefinableSet::Graph(g2),
        ])
        .unwrap();
        let (l3, r3, eq3) = verify_crofton(&x, &[Q::zero(), Q::zero()]).unwrap();
        assert_eq!(l3, q_ratio(1, 2));
        assert_eq!(r3, q_ratio(1, 2));
        assert!(eq3);
    }

    #[test]
    fn gl2_invariance() {
        let p = p5();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            // Random class-S cone: 1-2 rays with random directions/cosets.
            let nrays = rng.gen_range(1..=2);
            let mut rays = Vec::new();
            for _ in 0..nrays {
                let d = vec![
                    q_from(rng.gen_range(-6..7)),
                    q_from(rng.gen_range(-6..7)),
                ];
                if d.iter().all(|v| v.is_zero()) {
                    continue;
                }
                let lam = q_from(*[1i64, 2, 5, 10].get(rng.gen_range(0..4)).unwrap());
                let n = *[1u32, 2].get(rng.gen_range(0..2)).unwrap();
                rays.push((d, PowerCoset::new(lam, n)));
            }
            if rays.is_empty() {
                continue;
            }
            let cone = RayCone::new(p, vec![Q::zero(), Q::zero()], rays, false).unwrap();
            // Random unimodular integer matrix: product of elementary ops.
            let a = rng.gen_range(-3..4i64);
            let b = rng.gen_range(-3..4i64);
            let m = vec![
                vec![Q::one(), q_from(a)],
                vec![q_from(b), Q::one() + q_from(a) * q_from(b)],
            ];
            let moved = cone.apply_matrix(&m).unwrap();
            let v1 = crofton_integral(&indicator_cone(cone), &[Q::zero(), Q::zero()])
                .unwrap()
                .value;
            let v2 = crofton_integral(&indicator_cone(moved), &[Q::zero(), Q::zero()])
                .unwrap()
                .value;
            assert_eq!(v1, v2);
        }
    }

    #[test]
    fn density_drop_under_index() {
        // Θ_1 of a single ray with coset P_n is 1/[K^x : P_n]; the Crofton
        // route reproduces it for several n.
        let p = p5();
        for n in [1u32, 2, 4] {
            let ray = RayCone::new(
                p,
                vec![Q::zero(), Q::zero()],
                vec![(vec![Q::one(), q_from(2)], PowerCoset::new(Q::one(), n))],
                false,
            )
            .unwrap();
            let rep = crofton_integral(&indicator_cone(ray), &[Q::zero(), Q::zero()])
                .unwrap();
            let idx = subgroup_index(&Subgroup::power_group(p, n));
            assert_eq!(rep.value, Q::from_integer(idx.into()).recip());
        }
    }
}
