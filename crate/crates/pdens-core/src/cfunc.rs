//! Eventually-periodic exponential-polynomial sequences over the rationals
//! and their mean value at infinity.
//!
//! A sequence is given by finitely many explicit head values and, per residue
//! class c mod e, a finite sum of terms coef * n^deg * q^(rate * n).  This is
//! the fragment of constructible functions on N that the density pipeline
//! produces at a fixed point.

use num_traits::{One, Signed, Zero};


use crate::error::Error;
use crate::padic::{pow_q, Prime, Q, Z};

/// One summand coef * n^deg * q^(rate * n); coef != 0.
#[derive(Clone, Debug, PartialEq)]
pub struct EPTerm {
    pub coef: Q,
    pub deg: u32,
    pub rate: i64,
}

/// Per-residue-class data: constant part stored apart for O(1) mean-value
/// extraction, plus the non-constant terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Branch {
    pub constant: Q,
    pub terms: Vec<EPTerm>,
}

impl Branch {
    fn push(&mut self, t: EPTerm) {
        if t.coef.is_zero() {
            return;
        }
        if t.deg == 0 && t.rate == 0 {
            self.constant += t.coef;
            return;
        }
        if let Some(existing) = self
            .terms
            .iter_mut()
            .find(|e| e.deg == t.deg && e.rate == t.rate)
        {
            existing.coef += t.coef;
        } else {
            self.terms.push(t);
        }
        self.terms.retain(|e| !e.coef.is_zero());
    }

    fn normalize(&mut self) {
        self.terms.sort_by_key(|t| (t.rate, t.deg));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EPSequence {
    pub q: Prime,
    pub modulus: u32,
    pub onset: u32,
    /// Explicit values for n < onset.
    pub head: Vec<Q>,
    /// branches[c] describes n ≡ c (mod modulus), n >= onset.
    pub branches: Vec<Branch>,
}

impl EPSequence {
    pub fn constant(q: Prime, v: Q) -> Self {
        EPSequence {
            q,
            modulus: 1,
            onset: 0,
            head: Vec::new(),
            branches: vec![Branch {
                constant: v,
                terms: Vec::new(),
            }],
        }
    }

    pub fn zero(q: Prime) -> Self {
        EPSequence::constant(q, Q::zero())
    }

    pub fn new(q: Prime, modulus: u32, onset: u32, head: Vec<Q>, branches: Vec<Branch>) -> Self {
        assert!(modulus >= 1);
        assert_eq!(branches.len(), modulus as usize);
        assert_eq!(head.len(), onset as usize);
        let mut branches = branches;
        for b in &mut branches {
            b.normalize();
        }
        EPSequence {
            q,
            modulus,
            onset,
            head,
            branches,
        }
    }

    /// Periodic sequence from per-class constants, onset 0.
    pub fn periodic_constants(q: Prime, values: Vec<Q>) -> Self {
        let branches = values
            .into_iter()
            .map(|v| Branch {
                constant: v,
                terms: Vec::new(),
            })
            .collect::<Vec<_>>();
        let m = branches.len() as u32;
        EPSequence::new(q, m, 0, Vec::new(), branches)
    }

    pub fn eval(&self, n: u64) -> Q {
        if (n as usize) < self.head.len() {
            return self.head[n as usize].clone();
        }
        let b = &self.branches[(n % self.modulus as u64) as usize];
        let mut acc = b.constant.clone();
        let nq = Q::from_integer(Z::from(n));
        for t in &b.terms {
            acc += &t.coef * pow_q(&nq, t.deg) * self.q_power_n(t.rate, n);
        }
        acc
    }

    fn q_power_n(&self, rate: i64, n: u64) -> Q {
        // q^(rate * n); rate*n fits easily for the ranges in use.
        let e = rate * n as i64;
        self.q.pow_q(e)
    }

    /// Bounded iff every non-constant term decays: rate < 0, or rate = 0 with
    /// deg = 0 (the latter is folded into the constant).
    pub fn is_bounded(&self) -> bool {
        self.branches
            .iter()
            .all(|b| b.terms.iter().all(|t| t.rate < 0))
    }

    /// MV_inf: the average over residue classes of the per-class limits.
    pub fn mean_value_at_infinity(&self) -> Result<Q, Error> {
        if !self.is_bounded() {
            return Err(Error::Unbounded);
        }
        let sum: Q = self.branches.iter().map(|b| b.constant.clone()).sum();
        Ok(sum / Q::from_integer(Z::from(self.modulus)))
    }

    /// Per-class limits along n ≡ c (mod modulus).
    pub fn branch_limits(&self) -> Result<Vec<Q>, Error> {
        if !self.is_bounded() {
            return Err(Error::Unbounded);
        }
        Ok(self.branches.iter().map(|b| b.constant.clone()).collect())
    }

    /// Re-express with modulus k*e; values unchanged.
    pub fn rebase_modulus(&self, new_modulus: u32) -> EPSequence {
        assert!(new_modulus % self.modulus == 0);
        let branches = (0..new_modulus)
            .map(|c| self.branches[(c % self.modulus) as usize].clone())
            .collect();
        EPSequence::new(
            self.q,
            new_modulus,
            self.onset,
            self.head.clone(),
            branches,
        )
    }

    pub fn add(&self, other: &EPSequence) -> EPSequence {
        assert_eq!(self.q, other.q);
        let m = crate::padic::lcm_u32(self.modulus, other.modulus);
        let a = self.rebase_modulus(m);
        let b = other.rebase_modulus(m);
        let onset = a.onset.max(b.onset);
        let head = (0..onset as u64)
            .map(|n| a.eval(n) + b.eval(n))
            .collect::<Vec<_>>();
        let branches = (0..m as usize)
            .map(|c| {
                let mut br = Branch {
                    constant: &a.branches[c].constant + &b.branches[c].constant,
                    terms: Vec::new(),
                };
                for t in a.branches[c].terms.iter().chain(&b.branches[c].terms) {
                    br.push(t.clone());
                }
                br
            })
            .collect();
        EPSequence::new(self.q, m, onset, head, branches)
    }

    pub fn scale(&self, w: &Q) -> EPSequence {
        if w.is_zero() {
            return EPSequence::zero(self.q);
        }
        let head = self.head.iter().map(|h| h * w).collect();
        let branches = self
            .branches
            .iter()
            .map(|b| {
                let mut br = Branch {
                    constant: &b.constant * w,
                    terms: Vec::new(),
                };
                for t in &b.terms {
                    br.push(EPTerm {
                        coef: &t.coef * w,
                        deg: t.deg,
                        rate: t.rate,
                    });
                }
                br
            })
            .collect();
        EPSequence::new(self.q, self.modulus, self.onset, head, branches)
    }

    pub fn neg(&self) -> EPSequence {
        self.scale(&-Q::one())
    }

    /// shift(s, k)(n) = s(n + k).
    pub fn shift(&self, k: u32) -> EPSequence {
        let e = self.modulus;
        let onset = self.onset.saturating_sub(k);
        let head = (0..onset as u64)
            .map(|n| self.eval(n + k as u64))
            .collect::<Vec<_>>();
        let kq = Q::from_integer(Z::from(k));
        let branches = (0..e)
            .map(|c| {
                let src = &self.branches[((c + k) % e) as usize];
                let mut br = Branch {
                    constant: src.constant.clone(),
                    terms: Vec::new(),
                };
                for t in &src.terms {
                    // c (n+k)^deg q^(rate (n+k)) expanded binomially in n.
                    let qk = self.q.pow_q(t.rate * k as i64);
                    for j in 0..=t.deg {
                        let binom = binomial(t.deg, j);
                        let coef = &t.coef * &qk * binom * pow_q(&kq, t.deg - j);
                        br.push(EPTerm {
                            coef,
                            deg: j,
                            rate: t.rate,
                        });
                    }
                }
                br
            })
            .collect();
        EPSequence::new(self.q, e, onset, head, branches)
    }

    /// The sphere-from-ball recombination
    /// s'(n) = (s(n) - q^(-d) s(n+1)) / (1 - q^(-d)).
    pub fn ball_to_sphere(&self, d: u32) -> EPSequence {
        let b = self.q.pow_q(-(d as i64));
        let factor = (Q::one() - &b).recip();
        self.add(&self.shift(1).scale(&-b)).scale(&factor)
    }
}

fn binomial(n: u32, k: u32) -> Q {
    let mut acc = Q::one();
    for i in 0..k {
        acc *= Q::new(Z::from(n - i), Z::from(i + 1));
    }
    acc
}

/// Conservative pointwise-nonnegativity check: head values nonnegative and
/// every branch provably nonnegative from the onset on.  Used by the
/// positivity property tests; `false` means "not established".
pub fn is_pointwise_nonnegative(s: &EPSequence, probe: u64) -> bool {
    if s.head.iter().any(|h| h.is_negative()) {
        return false;
    }
    (s.onset as u64..s.onset as u64 + probe).all(|n| !s.eval(n).is_negative())
        && s.branches
            .iter()
            .all(|b| !b.constant.is_negative() && b.terms.iter().all(|t| !t.coef.is_negative()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{q_from, q_ratio};

    fn p5() -> Prime {
        Prime::new(5).unwrap()
    }

    fn even_odd(q: Prime, even: Q, odd: Q) -> EPSequence {
        EPSequence::periodic_constants(q, vec![even, odd])
    }

    #[test]
    fn eval_examples() {
        let q = p5();
        assert_eq!(EPSequence::constant(q, Q::one()).eval(7), Q::one());
        let s = even_odd(q, q_ratio(1, 2), Q::zero());
        assert_eq!(s.eval(4), q_ratio(1, 2));
        // n * q^(-n) at n = 2 is 2/25.
        let s = EPSequence::new(
            q,
            1,
            0,
            vec![],
            vec![Branch {
                constant: Q::zero(),
                terms: vec![EPTerm {
                    coef: Q::one(),
                    deg: 1,
                    rate: -1,
                }],
            }],
        );
        assert_eq!(s.eval(2), q_ratio(2, 25));
    }

    #[test]
    fn boundedness() {
        let q = p5();
        let grow = EPSequence::new(
            q,
            1,
            0,
            vec![],
            vec![Branch {
                constant: Q::zero(),
                terms: vec![EPTerm {
                    coef: Q::one(),
                    deg: 0,
                    rate: 1,
                }],
            }],
        );
        assert!(!grow.is_bounded());
        assert_eq!(grow.mean_value_at_infinity(), Err(Error::Unbounded));

        let decay_plus_3 = EPSequence::new(
            q,
            1,
            0,
            vec![],
            vec![Branch {
                constant: q_from(3),
                terms: vec![EPTerm {
                    coef: Q::one(),
                    deg: 1,
                    rate: -1,
                }],
            }],
        );
        assert!(decay_plus_3.is_bounded());
        assert_eq!(decay_plus_3.mean_value_at_infinity(), Ok(q_from(3)));

        let linear = EPSequence::new(
            q,
            1,
            0,
            vec![],
            vec![Branch {
                constant: Q::zero(),
                terms: vec![EPTerm {
                    coef: Q::one(),
                    deg: 1,
                    rate: 0,
                }],
            }],
        );
        assert!(!linear.is_bounded());
    }

    #[test]
    fn mean_value_examples() {
        let q = p5();
        let s = even_odd(q, Q::one(), Q::zero());
        assert_eq!(s.mean_value_at_infinity(), Ok(q_ratio(1, 2)));

        // n^2 q^(-n) decays to 0.
        let s = EPSequence::new(
            q,
            1,
            0,
            vec![],
            vec![Branch {
                constant: Q::zero(),
                terms: vec![EPTerm {
                    coef: Q::one(),
                    deg: 2,
                    rate: -1,
                }],
            }],
        );
        assert_eq!(s.mean_value_at_infinity(), Ok(Q::zero()));

        // Refining e = 2 to e = 4 leaves MV unchanged.
        let s = EPSequence::periodic_constants(
            q,
            vec![Q::one(), Q::zero(), Q::one(), Q::zero()],
        );
        assert_eq!(s.mean_value_at_infinity(), Ok(q_ratio(1, 2)));
    }

    #[test]
    fn algebra_examples() {
        let q = p5();
        let s = even_odd(q, Q::one(), Q::zero());
        let r = s.rebase_modulus(4);
        for n in 0..20 {
            assert_eq!(s.eval(n), r.eval(n));
        }
        assert_eq!(
            r.mean_value_at_infinity(),
            s.mean_value_at_infinity()
        );

        let shifted = s.shift(3);
        for n in 0..20 {
            assert_eq!(shifted.eval(n), s.eval(n + 3));
        }
        assert_eq!(
            shifted.mean_value_at_infinity(),
            s.mean_value_at_infinity()
        );

        let z = s.add(&s.neg());
        for n in 0..10 {
            assert_eq!(z.eval(n), Q::zero());
        }
    }

    #[test]
    fn shift_expands_polynomials() {
        let q = p5();
        // s(n) = n^2 q^(-n), shift by 2 must still match pointwise.
        let s = EPSequence::new(
            q,
            1,
            0,
            vec![],
            vec![Branch {
                constant: Q::zero(),
                terms: vec![EPTerm {
                    coef: Q::one(),
                    deg: 2,
                    rate: -1,
                }],
            }],
        );
        let sh = s.shift(2);
        for n in 0..12 {
            assert_eq!(sh.eval(n), s.eval(n + 2));
        }
    }

    #[test]
    fn ball_to_sphere_examples() {
        let q = p5();
        let c = EPSequence::constant(q, q_ratio(7, 3));
        let t = c.ball_to_sphere(1);
        for n in 0..10 {
            assert_eq!(t.eval(n), q_ratio(7, 3));
        }
        let z = EPSequence::zero(q).ball_to_sphere(2);
        assert_eq!(z.eval(5), Q::zero());

        // The worked even-valuation ball pattern maps to the sphere pattern.
        let ball = even_odd(q, q_ratio(5, 6), q_ratio(1, 6));
        let sphere = ball.ball_to_sphere(1);
        assert_eq!(sphere.eval(4), Q::one());
        assert_eq!(sphere.eval(5), Q::zero());
        assert_eq!(
            sphere.mean_value_at_infinity(),
            ball.mean_value_at_infinity()
        );
    }

    #[test]
    fn mv_bridging_identity() {
        // MV((s(n) - b s(n+1))/(1-b)) = MV(s) for b = q^(-d).
        let q = p5();
        let s = EPSequence::new(
            q,
            3,
            2,
            vec![q_from(9), q_from(-4)],
            vec![
                Branch {
                    constant: q_ratio(1, 3),
                    terms: vec![EPTerm {
                        coef: q_from(2),
                        deg: 1,
                        rate: -1,
                    }],
                },
                Branch {
                    constant: q_from(2),
                    terms: vec![],
                },
                Branch {
                    constant: q_ratio(-1, 2),
                    terms: vec![EPTerm {
                        coef: Q::one(),
                        deg: 0,
                        rate: -2,
                    }],
                },
            ],
        );
        for d in 1..3 {
            assert_eq!(
                s.ball_to_sphere(d).mean_value_at_infinity(),
                s.mean_value_at_infinity()
            );
        }
    }
}
