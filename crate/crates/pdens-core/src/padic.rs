//! Exact arithmetic in Q_p: valuations, digit expansions, power-coset
//! membership, balls and spheres, and the finite quotients K^x / P_m.
//!
//! All set-level computations elsewhere in the crate work on exact rationals
//! (a rational embeds exactly in Q_p); the digit-based [`PadicNumber`] is the
//! finite-precision view used by the membership predicates, which raise
//! [`Error::PrecisionExhausted`] rather than guessing.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

pub type Q = BigRational;
pub type Z = BigInt;

pub fn q_from(n: i64) -> Q {
    Q::from_integer(Z::from(n))
}

pub fn q_ratio(num: i64, den: i64) -> Q {
    Q::new(Z::from(num), Z::from(den))
}

/// An odd prime, the residue characteristic of the session.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self, Error> {
        if p < 3 || p % 2 == 0 {
            return Err(Error::InvalidPrime(p));
        }
        let mut d = 3;
        while d * d <= p {
            if p % d == 0 {
                return Err(Error::InvalidPrime(p));
            }
            d += 2;
        }
        Ok(Prime(p))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn big(self) -> Z {
        Z::from(self.0)
    }

    /// p^k as a rational, k may be negative.
    pub fn pow_q(self, k: i64) -> Q {
        let abs = self.big().pow(k.unsigned_abs() as u32);
        if k >= 0 {
            Q::from_integer(abs)
        } else {
            Q::new(Z::one(), abs)
        }
    }

    pub fn pow_z(self, k: u32) -> Z {
        self.big().pow(k)
    }

    /// p-adic valuation of a nonzero integer.
    fn ord_int(self, n: &Z) -> i64 {
        debug_assert!(!n.is_zero());
        let p = self.big();
        let mut v = 0;
        let mut m = n.abs();
        loop {
            let (q, r) = m.div_rem(&p);
            if !r.is_zero() {
                return v;
            }
            v += 1;
            m = q;
        }
    }

    /// ord_p of a rational; `None` encodes +infinity (the valuation of 0).
    pub fn ord(self, r: &Q) -> Option<i64> {
        if r.is_zero() {
            return None;
        }
        Some(self.ord_int(r.numer()) - self.ord_int(r.denom()))
    }

    /// The unit part u of r = p^ord(r) * u; requires r != 0.
    pub fn unit_part(self, r: &Q) -> Q {
        let v = self.ord(r).expect("unit_part of zero");
        r * self.pow_q(-v)
    }

    /// Residue of a p-integral rational modulo p^k (k >= 1).
    pub fn residue(self, r: &Q, k: u32) -> Z {
        let m = self.pow_z(k);
        let num = r.numer().mod_floor(&m);
        let den = r.denom().mod_floor(&m);
        let den_inv = mod_inverse(&den, &m).expect("denominator not coprime to p");
        (num * den_inv).mod_floor(&m)
    }

    /// ord_p of a small integer.
    pub fn ord_u32(self, n: u32) -> u32 {
        let mut v = 0;
        let mut m = n as u64;
        while m % self.0 == 0 {
            v += 1;
            m /= self.0;
        }
        v
    }
}

impl fmt::Debug for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prime({})", self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn mod_inverse(a: &Z, m: &Z) -> Option<Z> {
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

fn mod_pow(base: &Z, exp: &Z, m: &Z) -> Z {
    base.modpow(exp, m)
}

/// Decides whether a p-adic unit u lies in U^m, the m-th powers of Z_p^x.
///
/// With m = m1 * p^e (p coprime to m1) and g = gcd(m, p-1):
/// u in U^m  iff  its residue is a g-th power in F_p^x  and
/// u is congruent to its Teichmueller lift modulo p^(e+1).
pub fn unit_is_mth_power(p: Prime, u: &Q, m: u32) -> bool {
    debug_assert_eq!(p.ord(u), Some(0));
    let pm1 = Z::from(p.get() - 1);
    let g = Z::from(m).gcd(&pm1);
    let r = p.residue(u, 1);
    let exp = &pm1 / &g;
    if !mod_pow(&r, &exp, &p.big()).is_one() {
        return false;
    }
    let e = p.ord_u32(m);
    if e == 0 {
        return true;
    }
    // Teichmueller lift mod p^(e+1): omega(u) = u^E with E = 0 mod p^e, 1 mod p-1.
    let modulus = p.pow_z(e + 1);
    let pe = p.pow_z(e);
    let t = mod_inverse(&pe.mod_floor(&pm1), &pm1).expect("p^e invertible mod p-1");
    let big_e = pe * t;
    let u_res = p.residue(u, e + 1);
    let omega = mod_pow(&u_res, &big_e, &modulus);
    u_res == omega
}

/// Number of unit classes [U : U^m] = gcd(m, p-1) * p^(v_p(m)).
pub fn unit_class_count(p: Prime, m: u32) -> u64 {
    let g = (m as u64).gcd(&(p.get() - 1));
    g * p.get().pow(p.ord_u32(m))
}

/// The index [K^x : P_m] = m * [U : U^m].
pub fn power_group_index(p: Prime, m: u32) -> u64 {
    m as u64 * unit_class_count(p, m)
}

/// Exact n-th power test for a nonzero rational viewed in Q_p.
pub fn is_nth_power_exact(p: Prime, x: &Q, n: u32) -> bool {
    assert!(n >= 1);
    assert!(!x.is_zero());
    let v = p.ord(x).unwrap();
    if v.rem_euclid(n as i64) != 0 {
        return false;
    }
    unit_is_mth_power(p, &p.unit_part(x), n)
}

/// Representatives of the unit classes U / U^m, found by enumeration.
pub fn unit_class_reps(p: Prime, m: u32) -> Vec<Q> {
    let target = unit_class_count(p, m) as usize;
    let mut reps: Vec<Q> = Vec::with_capacity(target);
    let mut u: u64 = 1;
    while reps.len() < target {
        if u % p.get() != 0 {
            let cand = Q::from_integer(Z::from(u));
            if !reps
                .iter()
                .any(|r| unit_is_mth_power(p, &(cand.clone() / r), m))
            {
                reps.push(cand);
            }
        }
        u += 1;
    }
    reps
}

/// The finite group K^x / P_m, with elements coded as
/// (valuation residue mod m, unit class id).
#[derive(Clone, Debug)]
pub struct PowerQuotient {
    pub prime: Prime,
    pub modulus: u32,
    unit_reps: Vec<Q>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct QuotientElem {
    pub val: u32,
    pub unit_class: u32,
}

impl PowerQuotient {
    pub fn new(prime: Prime, modulus: u32) -> Self {
        assert!(modulus >= 1);
        let unit_reps = unit_class_reps(prime, modulus);
        PowerQuotient {
            prime,
            modulus,
            unit_reps,
        }
    }

    pub fn order(&self) -> u64 {
        self.modulus as u64 * self.unit_reps.len() as u64
    }

    pub fn unit_class_of(&self, u: &Q) -> u32 {
        for (i, r) in self.unit_reps.iter().enumerate() {
            if unit_is_mth_power(self.prime, &(u / r), self.modulus) {
                return i as u32;
            }
        }
        unreachable!("unit class representatives are exhaustive")
    }

    pub fn class_of(&self, x: &Q) -> QuotientElem {
        assert!(!x.is_zero());
        let v = self.prime.ord(x).unwrap();
        QuotientElem {
            val: v.rem_euclid(self.modulus as i64) as u32,
            unit_class: self.unit_class_of(&self.prime.unit_part(x)),
        }
    }

    /// A rational representative of a class.
    pub fn rep_of(&self, e: QuotientElem) -> Q {
        self.prime.pow_q(e.val as i64) * &self.unit_reps[e.unit_class as usize]
    }

    pub fn mul(&self, a: QuotientElem, b: QuotientElem) -> QuotientElem {
        let u = &self.unit_reps[a.unit_class as usize] * &self.unit_reps[b.unit_class as usize];
        QuotientElem {
            val: (a.val + b.val) % self.modulus,
            unit_class: self.unit_class_of(&u),
        }
    }

    pub fn elements(&self) -> Vec<QuotientElem> {
        let mut out = Vec::new();
        for val in 0..self.modulus {
            for uc in 0..self.unit_reps.len() as u32 {
                out.push(QuotientElem {
                    val,
                    unit_class: uc,
                });
            }
        }
        out
    }

    /// Image of P_n in this quotient (n need not divide the modulus).
    pub fn image_of_power_group(&self, n: u32) -> BTreeSet<QuotientElem> {
        let mut set = BTreeSet::new();
        // Classes of z^n as z runs over quotient representatives at a finer level.
        let fine = PowerQuotient::new(self.prime, lcm_u32(self.modulus, n));
        for e in fine.elements() {
            let rep = fine.rep_of(e);
            let pw = pow_q(&rep, n);
            set.insert(self.class_of(&pw));
        }
        set
    }
}

pub fn pow_q(x: &Q, n: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

pub fn lcm_u32(a: u32, b: u32) -> u32 {
    a / a.gcd(&b) * b
}

/// The coset lambda * P_n; lambda = 0 denotes the singleton {0}.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerCoset {
    pub lambda: Q,
    pub exponent: u32,
}

impl PowerCoset {
    pub fn new(lambda: Q, exponent: u32) -> Self {
        assert!(exponent >= 1);
        PowerCoset { lambda, exponent }
    }

    pub fn is_zero_cell(&self) -> bool {
        self.lambda.is_zero()
    }

    /// Exact membership for a rational point.
    pub fn contains_exact(&self, p: Prime, x: &Q) -> bool {
        if self.is_zero_cell() {
            return x.is_zero();
        }
        if x.is_zero() {
            return false;
        }
        is_nth_power_exact(p, &(x / &self.lambda), self.exponent)
    }
}

/// An open finite-index subgroup of K^x, presented as cosets of P_N.
#[derive(Clone, Debug)]
pub struct Subgroup {
    pub exponent: u32,
    pub coset_reps: Vec<Q>,
    quotient: PowerQuotient,
    classes: BTreeSet<QuotientElem>,
}

impl Subgroup {
    pub fn new(p: Prime, exponent: u32, coset_reps: Vec<Q>) -> Result<Self, Error> {
        if exponent < 1 || coset_reps.is_empty() || coset_reps.iter().any(|r| r.is_zero()) {
            return Err(Error::InvalidSubgroup);
        }
        let quotient = PowerQuotient::new(p, exponent);
        let classes: BTreeSet<QuotientElem> =
            coset_reps.iter().map(|r| quotient.class_of(r)).collect();
        let one = quotient.class_of(&Q::one());
        if !classes.contains(&one) {
            return Err(Error::InvalidSubgroup);
        }
        for a in &classes {
            for b in &classes {
                if !classes.contains(&quotient.mul(*a, *b)) {
                    return Err(Error::InvalidSubgroup);
                }
            }
        }
        Ok(Subgroup {
            exponent,
            coset_reps,
            quotient,
            classes,
        })
    }

    /// The subgroup P_N itself.
    pub fn power_group(p: Prime, n: u32) -> Self {
        Subgroup::new(p, n, vec![Q::one()]).expect("P_n is a subgroup")
    }

    pub fn prime(&self) -> Prime {
        self.quotient.prime
    }

    pub fn classes(&self) -> &BTreeSet<QuotientElem> {
        &self.classes
    }

    pub fn quotient(&self) -> &PowerQuotient {
        &self.quotient
    }

    /// [K^x : Lambda], via the enumerated quotient of P_N.
    pub fn index(&self) -> u64 {
        self.quotient.order() / self.classes.len() as u64
    }

    pub fn contains(&self, x: &Q) -> bool {
        if x.is_zero() {
            return false;
        }
        self.classes.contains(&self.quotient.class_of(x))
    }

    /// Whether Lambda is contained in P_m.
    /// The subgroup Λ ∩ P_m, presented at exponent lcm(N, m).
    pub fn intersect_power(&self, m: u32) -> Result<Subgroup, Error> {
        let p = self.prime();
        let l = lcm_u32(self.exponent, m);
        let quo = PowerQuotient::new(p, l);
        let reps: Vec<Q> = quo
            .elements()
            .into_iter()
            .map(|e| quo.rep_of(e))
            .filter(|r| self.contains(r) && is_nth_power_exact(p, r, m))
            .collect();
        Subgroup::new(p, l, reps)
    }

    pub fn is_subgroup_of_power(&self, m: u32) -> bool {
        if self.exponent % m != 0 {
            return false;
        }
        self.coset_reps
            .iter()
            .all(|r| is_nth_power_exact(self.prime(), r, m))
    }

    /// Whether Lambda is contained in `other`.
    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        if self.exponent % other.exponent != 0 {
            return false;
        }
        self.coset_reps.iter().all(|r| other.contains(r))
    }
}

pub fn subgroup_index(lambda: &Subgroup) -> u64 {
    lambda.index()
}

/// A ball B(x, n) = { z : ord(z_i - x_i) >= n for all i } in K^m.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<Q>,
    pub level: i64,
}

impl Ball {
    pub fn contains(&self, p: Prime, z: &[Q]) -> bool {
        assert_eq!(z.len(), self.center.len());
        self.center
            .iter()
            .zip(z)
            .all(|(c, zi)| match p.ord(&(zi - c)) {
                None => true,
                Some(v) => v >= self.level,
            })
    }
}

/// A sphere S(x, n) = { z : |x - z| = q^(-n) } for the sup-norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vec<Q>,
    pub level: i64,
}

impl Sphere {
    pub fn contains(&self, p: Prime, z: &[Q]) -> bool {
        let mut min: Option<i64> = None;
        for (c, zi) in self.center.iter().zip(z) {
            if let Some(v) = p.ord(&(zi - c)) {
                min = Some(min.map_or(v, |m| m.min(v)));
            }
        }
        min == Some(self.level)
    }
}

/// A p-adic number with exact valuation and finitely many unit digits.
///
/// `val = None` encodes +infinity, i.e. exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PadicNumber {
    pub prime: Prime,
    pub val: Option<i64>,
    /// Base-p digits of the unit part, d_0 != 0; length = precision.
    pub digits: Vec<u32>,
}

impl PadicNumber {
    pub fn zero(prime: Prime) -> Self {
        PadicNumber {
            prime,
            val: None,
            digits: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    pub fn precision(&self) -> usize {
        self.digits.len()
    }

    /// The unit part as an integer mod p^precision.
    fn unit_residue(&self) -> Z {
        let p = self.prime.big();
        let mut acc = Z::zero();
        for d in self.digits.iter().rev() {
            acc = acc * &p + Z::from(*d);
        }
        acc
    }

    fn from_unit_residue(prime: Prime, val: i64, mut u: Z, k: usize) -> Result<Self, Error> {
        // Normalizes: strips p-factors from u into the valuation, keeping k digits
        // only as far as the input residue supports.
        if u.is_zero() {
            return Err(Error::PrecisionExhausted);
        }
        let shift = prime.ord_int(&u);
        let p = prime.big();
        for _ in 0..shift {
            u /= &p;
        }
        let avail = k as i64 - shift;
        if avail <= 0 {
            return Err(Error::PrecisionExhausted);
        }
        let mut digits = Vec::with_capacity(avail as usize);
        let mut m = u.mod_floor(&prime.pow_z(avail as u32));
        for _ in 0..avail {
            let (q, r) = m.div_rem(&p);
            digits.push(u32::try_from(&r).unwrap());
            m = q;
        }
        Ok(PadicNumber {
            prime,
            val: Some(val + shift),
            digits,
        })
    }

    /// p-adic expansion of a rational with exact valuation and k unit digits.
    pub fn from_rational(prime: Prime, r: &Q, k: usize) -> Self {
        assert!(k >= 1);
        match prime.ord(r) {
            None => PadicNumber::zero(prime),
            Some(v) => {
                let unit = prime.unit_part(r);
                let res = prime.residue(&unit, k as u32);
                PadicNumber::from_unit_residue(prime, v, res, k)
                    .expect("unit residue of a nonzero rational is nonzero")
            }
        }
    }

    pub fn add(&self, other: &PadicNumber) -> Result<PadicNumber, Error> {
        assert_eq!(self.prime, other.prime);
        match (self.val, other.val) {
            (None, _) => Ok(other.clone()),
            (_, None) => Ok(self.clone()),
            (Some(va), Some(vb)) => {
                let v = va.min(vb);
                // Absolute precision of each operand is val + digits.
                let abs = (va + self.digits.len() as i64).min(vb + other.digits.len() as i64);
                let k = abs - v;
                if k <= 0 {
                    return Err(Error::PrecisionExhausted);
                }
                let p = self.prime;
                let m = p.pow_z(k as u32);
                let sa = self.unit_residue() * p.pow_z((va - v) as u32);
                let sb = other.unit_residue() * p.pow_z((vb - v) as u32);
                let s = (sa + sb).mod_floor(&m);
                if s.is_zero() {
                    // Total cancellation within precision: the valuation of the
                    // sum is not determined by the available digits.
                    return Err(Error::PrecisionExhausted);
                }
                PadicNumber::from_unit_residue(p, v, s, k as usize)
            }
        }
    }

    pub fn neg(&self) -> PadicNumber {
        match self.val {
            None => self.clone(),
            Some(v) => {
                let k = self.digits.len();
                let m = self.prime.pow_z(k as u32);
                let u = (&m - self.unit_residue()).mod_floor(&m);
                PadicNumber::from_unit_residue(self.prime, v, u, k)
                    .expect("negation preserves the unit")
            }
        }
    }

    pub fn mul(&self, other: &PadicNumber) -> PadicNumber {
        assert_eq!(self.prime, other.prime);
        match (self.val, other.val) {
            (None, _) | (_, None) => PadicNumber::zero(self.prime),
            (Some(va), Some(vb)) => {
                let k = self.digits.len().min(other.digits.len());
                let u = self.unit_residue() * other.unit_residue();
                PadicNumber::from_unit_residue(self.prime, va + vb, u, k)
                    .expect("product of units is a unit")
            }
        }
    }

    pub fn inv(&self) -> Result<PadicNumber, Error> {
        match self.val {
            None => Err(Error::DivisionByZero),
            Some(v) => {
                let k = self.digits.len();
                let m = self.prime.pow_z(k as u32);
                let u = mod_inverse(&self.unit_residue(), &m).expect("unit is invertible");
                PadicNumber::from_unit_residue(self.prime, -v, u, k)
            }
        }
    }

    /// The exactly-known truncation as a rational: p^val * (digits mod p^k).
    pub fn truncation(&self) -> Q {
        match self.val {
            None => Q::zero(),
            Some(v) => self.prime.pow_q(v) * Q::from_integer(self.unit_residue()),
        }
    }
}

/// Is x an n-th power in K^x?  Requires enough digits for the Hensel margin.
pub fn is_nth_power(x: &PadicNumber, n: u32) -> Result<bool, Error> {
    assert!(n >= 1);
    let v = match x.val {
        None => panic!("is_nth_power requires x != 0"),
        Some(v) => v,
    };
    let e = x.prime.ord_u32(n);
    if x.digits.len() < (2 * e + 1) as usize {
        return Err(Error::PrecisionExhausted);
    }
    if v.rem_euclid(n as i64) != 0 {
        return Ok(false);
    }
    // The answer depends on the unit only through its residue mod p^(e+1).
    let u = Q::from_integer(x.unit_residue());
    Ok(unit_is_mth_power(x.prime, &u, n))
}

/// Membership of a finite-precision x in lambda * P_n.
pub fn coset_membership(x: &PadicNumber, c: &PowerCoset) -> Result<bool, Error> {
    if c.is_zero_cell() {
        // Zero is represented exactly, so the verdict is exact.
        return Ok(x.is_zero());
    }
    if x.is_zero() {
        return Ok(false);
    }
    let lam = PadicNumber::from_rational(x.prime, &c.lambda, x.precision().max(1));
    let ratio = x.mul(&lam.inv()?);
    is_nth_power(&ratio, c.exponent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> Prime {
        Prime::new(5).unwrap()
    }

    #[test]
    fn prime_validation() {
        assert!(Prime::new(2).is_err());
        assert!(Prime::new(9).is_err());
        assert!(Prime::new(1).is_err());
        assert!(Prime::new(3).is_ok());
        assert!(Prime::new(7).is_ok());
    }

    #[test]
    fn from_rational_examples() {
        let p = p5();
        let z = PadicNumber::from_rational(p, &Q::zero(), 3);
        assert!(z.is_zero());

        let fifty = PadicNumber::from_rational(p, &q_from(50), 3);
        assert_eq!(fifty.val, Some(2));
        assert_eq!(fifty.digits, vec![2, 0, 0]);

        let fifth = PadicNumber::from_rational(p, &q_ratio(1, 5), 2);
        assert_eq!(fifth.val, Some(-1));
        assert_eq!(fifth.digits, vec![1, 0]);
    }

    #[test]
    fn add_examples() {
        let p = p5();
        let two = PadicNumber::from_rational(p, &q_from(2), 4);
        let three = PadicNumber::from_rational(p, &q_from(3), 4);
        let s = two.add(&three).unwrap();
        assert_eq!(s.val, Some(1));
        assert_eq!(s.digits[0], 1);

        let x = PadicNumber::from_rational(p, &q_from(7), 4);
        assert_eq!(x.add(&x.neg()), Err(Error::PrecisionExhausted));
    }

    #[test]
    fn inv_examples() {
        let p = p5();
        let five = PadicNumber::from_rational(p, &q_from(5), 4);
        assert_eq!(five.inv().unwrap().val, Some(-1));
        assert_eq!(PadicNumber::zero(p).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn nth_power_examples() {
        let p = p5();
        let four = PadicNumber::from_rational(p, &q_from(4), 4);
        assert_eq!(is_nth_power(&four, 2), Ok(true));
        let two = PadicNumber::from_rational(p, &q_from(2), 4);
        assert_eq!(is_nth_power(&two, 2), Ok(false));
        let five = PadicNumber::from_rational(p, &q_from(5), 4);
        assert_eq!(is_nth_power(&five, 2), Ok(false));
    }

    #[test]
    fn nth_power_precision_gate() {
        let p = p5();
        // n = 5 has e = 1, so fewer than 3 digits must refuse to answer.
        let x = PadicNumber::from_rational(p, &q_from(6), 2);
        assert_eq!(is_nth_power(&x, 5), Err(Error::PrecisionExhausted));
    }

    #[test]
    fn subgroup_index_examples() {
        let p = p5();
        assert_eq!(Subgroup::power_group(p, 2).index(), 4);
        assert_eq!(Subgroup::power_group(p, 1).index(), 1);
        let p3 = Prime::new(3).unwrap();
        assert_eq!(Subgroup::power_group(p3, 2).index(), 4);
    }

    #[test]
    fn subgroup_validation() {
        let p = p5();
        // {1, 2} mod P_2 is not closed (2*2 = 4 is a square, but 2 alone is not
        // a group with 1): closure demands 2*2's class and 1's class only.
        // Even-valuation subgroup of K^x/P_2: classes of 1 and 2 (2 a nonresidue).
        let ev = Subgroup::new(p, 2, vec![Q::one(), q_from(2)]);
        assert!(ev.is_ok());
        assert_eq!(ev.unwrap().index(), 2);
        // {1, 5} mod P_2: 5*5 = 25 is in P_2, closed; index 2.
        let g = Subgroup::new(p, 2, vec![Q::one(), q_from(5)]).unwrap();
        assert_eq!(g.index(), 2);
        // Missing identity.
        assert!(Subgroup::new(p, 2, vec![q_from(2)]).is_err());
    }

    #[test]
    fn coset_membership_examples() {
        let p = p5();
        let c = PowerCoset::new(q_from(2), 2);
        let x8 = PadicNumber::from_rational(p, &q_from(8), 4);
        assert_eq!(coset_membership(&x8, &c), Ok(true));
        let x10 = PadicNumber::from_rational(p, &q_from(10), 4);
        assert_eq!(coset_membership(&x10, &c), Ok(false));
        let zero_cell = PowerCoset::new(Q::zero(), 1);
        assert_eq!(coset_membership(&PadicNumber::zero(p), &zero_cell), Ok(true));
    }

    #[test]
    fn exact_membership_scaling_invariance() {
        let p = p5();
        let c = PowerCoset::new(q_from(2), 2);
        for x in [q_from(8), q_from(3), q_ratio(2, 25), q_from(50)] {
            let base = c.contains_exact(p, &x);
            for y in [q_from(7), q_ratio(1, 5), q_from(30)] {
                let scaled_c = PowerCoset::new(&c.lambda * &y, 2);
                assert_eq!(scaled_c.contains_exact(p, &(&x * &y)), base);
            }
        }
    }

    #[test]
    fn power_quotient_structure() {
        let p = p5();
        let quo = PowerQuotient::new(p, 2);
        assert_eq!(quo.order(), 4);
        let elems = quo.elements();
        // Group table closes.
        for a in &elems {
            for b in &elems {
                let c = quo.mul(*a, *b);
                assert!(elems.contains(&c));
            }
        }
        // class_of respects representatives.
        for e in elems {
            assert_eq!(quo.class_of(&quo.rep_of(e)), e);
        }
    }

    #[test]
    fn ball_and_sphere_membership() {
        let p = p5();
        let b = Ball {
            center: vec![Q::zero()],
            level: 2,
        };
        assert!(b.contains(p, &[q_from(25)]));
        assert!(!b.contains(p, &[q_from(5)]));
        let s = Sphere {
            center: vec![Q::zero()],
            level: 2,
        };
        assert!(s.contains(p, &[q_from(25)]));
        assert!(!s.contains(p, &[q_from(125)]));
    }
}
