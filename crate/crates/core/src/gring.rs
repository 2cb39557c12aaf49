//! Exact arithmetic in `Z[L, L^-1]` and its localization at the family
//! `{1 - L^i : i >= 1}`, with numeric specialization `L -> q`.
//!
//! Every value here is immutable after construction and normalized on the
//! way in, so structural equality on [`LaurentPoly`] is mathematical
//! equality. [`LocalizedMotive`] equality is decided by cross-multiplication
//! because a fraction may have more than one reduced representative.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Finite sum `sum_e c_e L^e` with integer coefficients. No zero coefficient
/// is ever stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, BigInt>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::monomial(0, c)
    }

    /// `c * L^e`.
    pub fn monomial(e: i64, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        Self { terms }
    }

    /// `L^e`.
    pub fn l_pow(e: i64) -> Self {
        Self::monomial(e, 1)
    }

    /// `1 - L^i`.
    pub fn one_minus_l_pow(i: i64) -> Self {
        Self::one() - Self::l_pow(i)
    }

    pub fn from_terms<I, C>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, C)>,
        C: Into<BigInt>,
    {
        let mut out = BTreeMap::new();
        for (e, c) in terms {
            let c: BigInt = c.into();
            *out.entry(e).or_insert_with(BigInt::zero) += c;
        }
        out.retain(|_, c| !c.is_zero());
        Self { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|c| c.is_one())
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (i64, &BigInt)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, e: i64) -> BigInt {
        self.terms.get(&e).cloned().unwrap_or_default()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    /// Returns the integer value if the polynomial is a constant.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    /// Multiply by `L^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Exact division in `Z[L, L^-1]`; `None` when the quotient does not exist.
    pub fn div_exact(&self, divisor: &LaurentPoly) -> Option<LaurentPoly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        let d_lo = divisor.min_exp().unwrap();
        let d_hi = divisor.max_exp().unwrap();
        let d_lead = divisor.terms[&d_hi].clone();
        let mut rem = self.clone();
        let mut quot = BTreeMap::new();
        while let Some(r_hi) = rem.max_exp() {
            let r_lo = rem.min_exp().unwrap();
            // The remainder must keep the divisor's exponent span.
            if r_hi - r_lo < d_hi - d_lo {
                return None;
            }
            let (q, r) = rem.terms[&r_hi].div_rem(&d_lead);
            if !r.is_zero() {
                return None;
            }
            let shift = r_hi - d_hi;
            rem = &rem - &divisor.scale(&q).shift(shift);
            quot.insert(shift, q);
        }
        Some(LaurentPoly { terms: quot })
    }

    /// Evaluate at `L = q`. Fails when `q = 0` and a negative power occurs.
    pub fn eval(&self, q: &BigRational) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for (e, c) in self.terms() {
            if e < 0 && q.is_zero() {
                return Err(Error::PoleAtQ(q.to_string()));
            }
            acc += rat_pow(q, e) * BigRational::from_integer(c.clone());
        }
        Ok(acc)
    }
}

pub(crate) fn rat_pow(q: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(q.clone(), e as usize)
    } else {
        num_traits::pow(q.recip(), (-e) as usize)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            let slot = terms.entry(*e).or_insert_with(BigInt::zero);
            *slot += c;
            if slot.is_zero() {
                terms.remove(e);
            }
        }
        LaurentPoly { terms }
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut terms: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                *terms.entry(ea + eb).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        LaurentPoly { terms }
    }
}

macro_rules! forward_owned {
    ($ty:ty, $tr:ident, $m:ident) => {
        impl $tr for $ty {
            type Output = $ty;
            fn $m(self, rhs: $ty) -> $ty {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(LaurentPoly, Add, add);
forward_owned!(LaurentPoly, Sub, sub);
forward_owned!(LaurentPoly, Mul, mul);
pub(crate) use forward_owned;

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}

impl From<i64> for LaurentPoly {
    fn from(c: i64) -> Self {
        Self::constant(c)
    }
}

impl fmt::Display for LaurentPoly {
    /// Descending powers: `L^2 - L + 3 - 2*L^-1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (idx, (e, c)) in self.terms().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            write_monomial(f, e, &abs)?;
        }
        Ok(())
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, e: i64, abs: &BigInt) -> fmt::Result {
    let power = match e {
        0 => None,
        1 => Some("L".to_string()),
        _ => Some(format!("L^{e}")),
    };
    match (power, abs.is_one()) {
        (None, _) => write!(f, "{abs}"),
        (Some(p), true) => f.write_str(&p),
        (Some(p), false) => write!(f, "{abs}*{p}"),
    }
}

/// `numerator / prod_k (1 - L^{i_k})`, an element of the localized ring.
///
/// The denominator is a sorted multiset of positive exponents. Construction
/// always normalizes: factors dividing the numerator are cancelled and a
/// factor `1 - L^i` is lowered to `1 - L^j` (`j | i`) whenever the
/// numerator absorbs the cofactor.
#[derive(Clone, Debug, Default)]
pub struct LocalizedMotive {
    num: LaurentPoly,
    den: Vec<u32>,
}

impl LocalizedMotive {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_poly(LaurentPoly::one())
    }

    pub fn from_int(c: impl Into<BigInt>) -> Self {
        Self::from_poly(LaurentPoly::constant(c))
    }

    /// `L^e`.
    pub fn l_pow(e: i64) -> Self {
        Self::from_poly(LaurentPoly::l_pow(e))
    }

    pub fn from_poly(num: LaurentPoly) -> Self {
        Self { num, den: Vec::new() }
    }

    /// Builds and normalizes `num / prod (1 - L^i)`. Exponents must be >= 1.
    pub fn new(num: LaurentPoly, mut den: Vec<u32>) -> Result<Self> {
        if den.contains(&0) {
            return Err(Error::Invalid(
                "denominator exponents must be positive".into(),
            ));
        }
        den.sort_unstable();
        Ok(Self::normalized(num, den))
    }

    fn normalized(mut num: LaurentPoly, mut den: Vec<u32>) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        'outer: loop {
            for idx in 0..den.len() {
                let i = den[idx];
                if let Some(q) = num.div_exact(&LaurentPoly::one_minus_l_pow(i as i64)) {
                    num = q;
                    den.remove(idx);
                    continue 'outer;
                }
                for j in (1..i).filter(|j| i % j == 0) {
                    let cofactor = LaurentPoly::from_terms((0..i / j).map(|k| ((k * j) as i64, 1)));
                    if let Some(q) = num.div_exact(&cofactor) {
                        num = q;
                        den[idx] = j;
                        den.sort_unstable();
                        continue 'outer;
                    }
                }
            }
            break;
        }
        Self { num, den }
    }

    pub fn numerator(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn denominator(&self) -> &[u32] {
        &self.den
    }

    /// The denominator expanded as a polynomial.
    pub fn denominator_poly(&self) -> LaurentPoly {
        den_poly(&self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The Laurent polynomial this motive equals, if its denominator is trivial.
    pub fn as_poly(&self) -> Option<&LaurentPoly> {
        self.den.is_empty().then_some(&self.num)
    }

    /// Inverse of a unit of the localized ring: `+-L^k * prod (1 - L^i)`
    /// over any denominator. Returns `None` for non-units.
    pub fn inverse(&self) -> Option<Self> {
        let factors = unit_factors(&self.num)?;
        let (sign, shift, exps) = factors;
        let mut num = den_poly(&self.den).shift(-shift);
        if sign < 0 {
            num = -num;
        }
        Some(Self::normalized(num, {
            let mut d = exps;
            d.sort_unstable();
            d
        }))
    }

    /// Value at `L = q`, exact.
    pub fn specialize(&self, q: &BigRational) -> Result<BigRational> {
        let mut den = BigRational::one();
        for &i in &self.den {
            let f = BigRational::one() - rat_pow(q, i as i64);
            if f.is_zero() {
                return Err(Error::PoleAtQ(q.to_string()));
            }
            den *= f;
        }
        Ok(self.num.eval(q)? / den)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale_poly(&self, p: &LaurentPoly) -> Self {
        Self::normalized(&self.num * p, self.den.clone())
    }
}

fn den_poly(den: &[u32]) -> LaurentPoly {
    den.iter().fold(LaurentPoly::one(), |acc, &i| {
        &acc * &LaurentPoly::one_minus_l_pow(i as i64)
    })
}

/// Factors `p = sign * L^shift * prod (1 - L^i)`, or `None` if `p` is not
/// of that shape.
fn unit_factors(p: &LaurentPoly) -> Option<(i32, i64, Vec<u32>)> {
    let lo = p.min_exp()?;
    let mut rest = p.shift(-lo);
    let c0 = rest.coeff(0);
    let sign = if c0.is_one() {
        1
    } else if (-&c0).is_one() {
        rest = -rest;
        -1
    } else {
        return None;
    };
    let mut exps = Vec::new();
    while !rest.is_one() {
        // The lowest nonconstant term of prod (1 - L^i) sits at the smallest i.
        let i = rest.terms().map(|(e, _)| e).find(|&e| e > 0)?;
        rest = rest.div_exact(&LaurentPoly::one_minus_l_pow(i))?;
        exps.push(i as u32);
    }
    Some((sign, lo, exps))
}

/// Multiset union taking the maximum multiplicity of each exponent.
fn den_lcm(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut counts: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for &i in a {
        counts.entry(i).or_default().0 += 1;
    }
    for &i in b {
        counts.entry(i).or_default().1 += 1;
    }
    counts
        .into_iter()
        .flat_map(|(i, (x, y))| std::iter::repeat(i).take(x.max(y)))
        .collect()
}

/// `full` minus `part` as multisets; `part` must be contained in `full`.
fn den_quotient(full: &[u32], part: &[u32]) -> Vec<u32> {
    let mut rest = full.to_vec();
    for i in part {
        let pos = rest.iter().position(|x| x == i).expect("sub-multiset");
        rest.remove(pos);
    }
    rest
}

impl Add for &LocalizedMotive {
    type Output = LocalizedMotive;
    fn add(self, rhs: &LocalizedMotive) -> LocalizedMotive {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let den = den_lcm(&self.den, &rhs.den);
        let a = &self.num * &den_poly(&den_quotient(&den, &self.den));
        let b = &rhs.num * &den_poly(&den_quotient(&den, &rhs.den));
        LocalizedMotive::normalized(a + b, den)
    }
}

impl Sub for &LocalizedMotive {
    type Output = LocalizedMotive;
    fn sub(self, rhs: &LocalizedMotive) -> LocalizedMotive {
        self + &(-rhs)
    }
}

impl Neg for &LocalizedMotive {
    type Output = LocalizedMotive;
    fn neg(self) -> LocalizedMotive {
        LocalizedMotive {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &LocalizedMotive {
    type Output = LocalizedMotive;
    fn mul(self, rhs: &LocalizedMotive) -> LocalizedMotive {
        if self.is_zero() || rhs.is_zero() {
            return LocalizedMotive::zero();
        }
        let mut den = self.den.clone();
        den.extend_from_slice(&rhs.den);
        den.sort_unstable();
        LocalizedMotive::normalized(&self.num * &rhs.num, den)
    }
}

forward_owned!(LocalizedMotive, Add, add);
forward_owned!(LocalizedMotive, Sub, sub);
forward_owned!(LocalizedMotive, Mul, mul);

impl Neg for LocalizedMotive {
    type Output = LocalizedMotive;
    fn neg(self) -> LocalizedMotive {
        -&self
    }
}

impl PartialEq for LocalizedMotive {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        &self.num * &den_poly(&other.den) == &other.num * &den_poly(&self.den)
    }
}

impl Eq for LocalizedMotive {}

impl From<LaurentPoly> for LocalizedMotive {
    fn from(p: LaurentPoly) -> Self {
        Self::from_poly(p)
    }
}

impl From<i64> for LocalizedMotive {
    fn from(c: i64) -> Self {
        Self::from_int(c)
    }
}

impl fmt::Display for LocalizedMotive {
    /// `(L^2 - L)/((1 - L)*(1 - L^3))`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        if self.num.num_terms() > 1 {
            write!(f, "({})", self.num)?;
        } else {
            write!(f, "{}", self.num)?;
        }
        f.write_str("/")?;
        let factors: Vec<String> = self
            .den
            .iter()
            .map(|&i| {
                if i == 1 {
                    "(1 - L)".to_string()
                } else {
                    format!("(1 - L^{i})")
                }
            })
            .collect();
        if factors.len() == 1 {
            f.write_str(&factors[0])
        } else {
            write!(f, "({})", factors.join("*"))
        }
    }
}

/// Ring operations accepted by [`motive_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotiveOp {
    Add,
    Sub,
    Mul,
    Neg,
}

/// `a op b` (for `Neg`, `b` is ignored).
pub fn motive_arith(a: &LocalizedMotive, b: &LocalizedMotive, op: MotiveOp) -> LocalizedMotive {
    match op {
        MotiveOp::Add => a + b,
        MotiveOp::Sub => a - b,
        MotiveOp::Mul => a * b,
        MotiveOp::Neg => -a,
    }
}

/// Normalized `num / prod (1 - L^i)` for the given exponents.
pub fn make_motive(num: LaurentPoly, denom_exponents: &[u32]) -> Result<LocalizedMotive> {
    LocalizedMotive::new(num, denom_exponents.to_vec())
}

pub fn specialize(m: &LocalizedMotive, q: &BigRational) -> Result<BigRational> {
    m.specialize(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(terms: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(terms.iter().copied())
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn additive_inverse_and_unit() {
        let a = LocalizedMotive::from_poly(lp(&[(1, 1), (0, -1)]));
        let b = LocalizedMotive::from_poly(lp(&[(0, 1), (1, -1)]));
        assert!(motive_arith(&a, &b, MotiveOp::Add).is_zero());
        let l = LocalizedMotive::l_pow(1);
        let linv = LocalizedMotive::l_pow(-1);
        assert_eq!(&l * &linv, LocalizedMotive::one());
    }

    #[test]
    fn division_by_one_minus_l() {
        // (1 - L^2)/(1 - L) = 1 + L; oracle: (1 + L)(1 - L) = 1 - L^2.
        let lhs = make_motive(lp(&[(0, 1), (2, -1)]), &[1]).unwrap();
        let one_plus_l = lp(&[(0, 1), (1, 1)]);
        assert_eq!(&one_plus_l * &LaurentPoly::one_minus_l_pow(1), lp(&[(0, 1), (2, -1)]));
        assert_eq!(lhs.as_poly(), Some(&one_plus_l));
        let via_mul = &LocalizedMotive::from_poly(one_plus_l) * &LocalizedMotive::one();
        assert_eq!(lhs, via_mul);
    }

    #[test]
    fn make_motive_examples() {
        let m = make_motive(lp(&[(1, 1), (0, -1)]), &[]).unwrap();
        assert_eq!(m.to_string(), "L - 1");
        let m = make_motive(lp(&[(0, 1), (3, -1)]), &[3]).unwrap();
        assert_eq!(m, LocalizedMotive::one());
        assert!(m.denominator().is_empty());
        // (L - 1) L^2 / (1 - L) = -L^2
        let m = make_motive(lp(&[(3, 1), (2, -1)]), &[1]).unwrap();
        assert_eq!(m.as_poly(), Some(&lp(&[(2, -1)])));
    }

    #[test]
    fn zero_exponent_rejected() {
        assert!(make_motive(LaurentPoly::one(), &[0]).is_err());
    }

    #[test]
    fn specialize_examples() {
        let m = LocalizedMotive::from_poly(lp(&[(1, 1), (0, -1)]));
        assert_eq!(m.specialize(&q(3)).unwrap(), q(2));
        // (L - 1)/(1 - L^2) normalizes to -1/(1 + L)... value at 3 is 2/(-8).
        let m = make_motive(lp(&[(1, 1), (0, -1)]), &[2]).unwrap();
        assert_eq!(
            m.specialize(&q(3)).unwrap(),
            BigRational::new((-1).into(), 4.into())
        );
        let m = make_motive(LaurentPoly::one(), &[1]).unwrap();
        assert!(matches!(m.specialize(&q(1)), Err(Error::PoleAtQ(_))));
        assert!(matches!(
            LocalizedMotive::l_pow(-1).specialize(&q(0)),
            Err(Error::PoleAtQ(_))
        ));
    }

    #[test]
    fn cofactor_lowering() {
        // (1 + L)(1 + L + L^2)/(1 - L^3) = (1 + L)/(1 - L)
        let num = &lp(&[(0, 1), (1, 1)]) * &lp(&[(0, 1), (1, 1), (2, 1)]);
        let a = make_motive(num, &[3]).unwrap();
        assert_eq!(a.denominator(), &[1]);
        assert_eq!(a.numerator(), &lp(&[(0, 1), (1, 1)]));
    }

    #[test]
    fn inverse_of_units() {
        let u = LocalizedMotive::from_poly(&lp(&[(2, -3)]) * &LaurentPoly::one());
        assert!(u.inverse().is_none());
        let u = LocalizedMotive::from_poly(
            &LaurentPoly::one_minus_l_pow(2) * &lp(&[(-1, -1)]),
        );
        let inv = u.inverse().unwrap();
        assert_eq!(&u * &inv, LocalizedMotive::one());
        assert!(LocalizedMotive::from_poly(lp(&[(0, 1), (1, 1)])).inverse().is_none());
    }

    #[test]
    fn rendering() {
        let m = make_motive(lp(&[(2, 1), (1, -1)]), &[3, 1]).unwrap();
        // L^2 - L = -L(1 - L), so the (1 - L) factor cancels.
        assert_eq!(m.to_string(), "-L/(1 - L^3)");
        let m = make_motive(lp(&[(2, 1), (0, 1)]), &[1, 3]).unwrap();
        assert_eq!(m.to_string(), "(L^2 + 1)/((1 - L)*(1 - L^3))");
        assert_eq!(lp(&[(2, 1), (1, -1), (0, 3), (-1, -2)]).to_string(), "L^2 - L + 3 - 2*L^-1");
        assert_eq!(LaurentPoly::zero().to_string(), "0");
    }

    #[test]
    fn div_exact_rejects_remainders() {
        assert!(lp(&[(0, 1), (1, 1)]).div_exact(&lp(&[(0, 2)])).is_none());
        assert_eq!(lp(&[(0, 2), (1, 4)]).div_exact(&lp(&[(0, 2)])), Some(lp(&[(0, 1), (1, 2)])));
        assert_eq!(lp(&[(-3, 1)]).div_exact(&lp(&[(-1, 1)])), Some(lp(&[(-2, 1)])));
    }
}
