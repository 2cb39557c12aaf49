//! The module of sr-rational series: finite combinations of
//! `T^k * prod_j L^{e_j} T^{i_j} / (1 - L^{e_j} T^{i_j})` with coefficients in
//! the localized ring, together with `lim_{T -> oo}`, Hadamard products,
//! coefficient extraction and fitting from finitely many coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gring::{forward_owned, LaurentPoly, LocalizedMotive};
use crate::linalg::{self, Solve};

/// `L^e T^i / (1 - L^e T^i)`. Ordered by `(i, e)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    pub i: u32,
    pub e: i64,
}

impl Generator {
    pub fn new(e: i64, i: u32) -> Result<Self> {
        if i == 0 {
            return Err(Error::Invalid("generator T-exponent must be >= 1".into()));
        }
        Ok(Self { i, e })
    }
}

/// `gen(e, i)`; panics when `i == 0`.
pub fn gen(e: i64, i: u32) -> Generator {
    assert!(i >= 1, "generator T-exponent must be >= 1");
    Generator { i, e }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gen({},{})", self.e, self.i)
    }
}

/// `T^shift * prod gens`. An empty `gens` is a plain power of `T`.
///
/// In canonical form `gens` is sorted and `shift` is smaller than every
/// generator's `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub gens: Vec<Generator>,
    pub shift: u32,
}

impl Term {
    pub fn t_pow(k: u32) -> Self {
        Self { gens: Vec::new(), shift: k }
    }

    pub fn product(mut gens: Vec<Generator>) -> Self {
        gens.sort_unstable();
        Self { gens, shift: 0 }
    }

    /// Coefficient of `T^m` in the expansion, as a Laurent polynomial.
    pub fn coefficient(&self, m: u32) -> LaurentPoly {
        let Some(target) = m.checked_sub(self.shift) else {
            return LaurentPoly::zero();
        };
        let target = target as usize;
        // dp[s] = sum over compositions so far with T-degree s.
        let mut dp: Vec<LaurentPoly> = vec![LaurentPoly::zero(); target + 1];
        dp[0] = LaurentPoly::one();
        for g in &self.gens {
            let mut next = vec![LaurentPoly::zero(); target + 1];
            for (s, acc) in dp.iter().enumerate() {
                if acc.is_zero() {
                    continue;
                }
                let mut k = 1i64;
                while s + (k as usize) * (g.i as usize) <= target {
                    let t = s + (k as usize) * (g.i as usize);
                    next[t] = &next[t] + &acc.shift(k * g.e);
                    k += 1;
                }
            }
            dp = next;
        }
        std::mem::take(&mut dp[target])
    }

}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        match self.shift {
            0 => {}
            1 => parts.push("T".into()),
            k => parts.push(format!("T^{k}")),
        }
        parts.extend(self.gens.iter().map(|g| g.to_string()));
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// Element of the sr-rational module. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RationalSeries {
    terms: BTreeMap<Term, LocalizedMotive>,
}

impl RationalSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: LocalizedMotive) -> Self {
        Self::from_term(Term::t_pow(0), c)
    }

    pub fn generator(g: Generator) -> Self {
        Self::from_term(Term::product(vec![g]), LocalizedMotive::one())
    }

    pub fn from_term(term: Term, c: LocalizedMotive) -> Self {
        let mut s = Self::zero();
        s.add_term(term, c);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, &LocalizedMotive)> {
        self.terms.iter()
    }

    /// The motive if this series is a constant (only a `T^0` term).
    pub fn as_constant(&self) -> Option<LocalizedMotive> {
        match self.terms.len() {
            0 => Some(LocalizedMotive::zero()),
            1 => {
                let (t, c) = self.terms.iter().next().unwrap();
                (t.gens.is_empty() && t.shift == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Adds `c * term`, reducing the term to canonical form first.
    fn add_term(&mut self, term: Term, c: LocalizedMotive) {
        if c.is_zero() {
            return;
        }
        for (t, c) in reduce(term, c) {
            let slot = self.terms.entry(t.clone()).or_default();
            *slot = &*slot + &c;
            if slot.is_zero() {
                self.terms.remove(&t);
            }
        }
    }

    pub fn scale(&self, c: &LocalizedMotive) -> Self {
        let mut out = Self::zero();
        for (t, x) in &self.terms {
            out.add_term(t.clone(), x * c);
        }
        out
    }

    /// Exact coefficient of `T^m`.
    pub fn coefficient(&self, m: u32) -> LocalizedMotive {
        self.terms.iter().fold(LocalizedMotive::zero(), |acc, (t, c)| {
            let k = t.coefficient(m);
            if k.is_zero() {
                acc
            } else {
                &acc + &c.scale_poly(&k)
            }
        })
    }

    /// `lim_{T -> oo}`: a product of `k` generators maps to `(-1)^k`, the
    /// constant term passes through, and positive powers of `T` are rejected.
    pub fn limit(&self) -> Result<LocalizedMotive> {
        let mut acc = LocalizedMotive::zero();
        for (t, c) in &self.terms {
            if t.shift > 0 {
                return Err(Error::NonvanishingPolyPart(t.shift));
            }
            if t.gens.len() % 2 == 0 {
                acc = &acc + c;
            } else {
                acc = &acc - c;
            }
        }
        Ok(acc)
    }

    /// Coefficientwise product. Both sides may only contain powers of `T`
    /// and single unshifted generators.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_hadamard_shape()?;
        other.check_hadamard_shape()?;
        let mut out = Self::zero();
        for (ta, ca) in &self.terms {
            for (tb, cb) in &other.terms {
                match (ta.gens.first(), tb.gens.first()) {
                    (Some(ga), Some(gb)) => {
                        let big = num_integer::lcm(ga.i, gb.i);
                        let e = (big / ga.i) as i64 * ga.e + (big / gb.i) as i64 * gb.e;
                        out.add_term(Term::product(vec![gen(e, big)]), ca * cb);
                    }
                    (None, _) => {
                        let k = tb.coefficient(ta.shift);
                        out.add_term(Term::t_pow(ta.shift), (ca * cb).scale_poly(&k));
                    }
                    (Some(_), None) => {
                        let k = ta.coefficient(tb.shift);
                        out.add_term(Term::t_pow(tb.shift), (ca * cb).scale_poly(&k));
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_hadamard_shape(&self) -> Result<()> {
        for t in self.terms.keys() {
            if t.gens.len() > 1 || (t.gens.len() == 1 && t.shift > 0) {
                return Err(Error::UnsupportedShape(format!(
                    "Hadamard product needs single generators, found {t}"
                )));
            }
        }
        Ok(())
    }

    /// Rewrites every product of two generators with the same `i` and
    /// distinct `e` as a combination of single generators.
    pub fn partial_fractions(&self) -> Self {
        let mut out = Self::zero();
        for (t, c) in &self.terms {
            match t.gens.as_slice() {
                [ga, gb] if t.shift == 0 && ga.i == gb.i && ga.e != gb.e => {
                    // G_a G_b = (b G_a - a G_b) / (a - b), a = L^ea, b = L^eb.
                    let a = LaurentPoly::l_pow(ga.e);
                    let b = LaurentPoly::l_pow(gb.e);
                    let inv = LocalizedMotive::from_poly(&a - &b)
                        .inverse()
                        .expect("L^x - L^y is a unit for x != y");
                    let cb = &(c * &inv);
                    out.add_term(Term::product(vec![*ga]), cb.scale_poly(&b));
                    out.add_term(Term::product(vec![*gb]), -cb.scale_poly(&a));
                }
                _ => out.add_term(t.clone(), c.clone()),
            }
        }
        out
    }
}

/// Brings `c * T^k * prod gens` into canonical form, `k < min i`, via
/// `T^i G = L^-e G - T^i` for `G = gen(e, i)`.
fn reduce(mut term: Term, c: LocalizedMotive) -> Vec<(Term, LocalizedMotive)> {
    term.gens.sort_unstable();
    let Some(pos) = term
        .gens
        .iter()
        .rposition(|g| g.i <= term.shift)
    else {
        return vec![(term, c)];
    };
    let g = term.gens[pos];
    let kept = Term {
        gens: term.gens.clone(),
        shift: term.shift - g.i,
    };
    let mut dropped = term.gens.clone();
    dropped.remove(pos);
    let dropped = Term {
        gens: dropped,
        shift: term.shift,
    };
    let mut out = reduce(kept, &c * &LocalizedMotive::l_pow(-g.e));
    out.extend(reduce(dropped, -c));
    out
}

impl Add for &RationalSeries {
    type Output = RationalSeries;
    fn add(self, rhs: &RationalSeries) -> RationalSeries {
        let mut out = self.clone();
        for (t, c) in &rhs.terms {
            out.add_term(t.clone(), c.clone());
        }
        out
    }
}

impl Sub for &RationalSeries {
    type Output = RationalSeries;
    fn sub(self, rhs: &RationalSeries) -> RationalSeries {
        self + &(-rhs)
    }
}

impl Neg for &RationalSeries {
    type Output = RationalSeries;
    fn neg(self) -> RationalSeries {
        RationalSeries {
            terms: self.terms.iter().map(|(t, c)| (t.clone(), -c)).collect(),
        }
    }
}

impl Mul for &RationalSeries {
    type Output = RationalSeries;
    /// Ring product: generator multisets merge and `T` powers add.
    fn mul(self, rhs: &RationalSeries) -> RationalSeries {
        let mut out = RationalSeries::zero();
        for (ta, ca) in &self.terms {
            for (tb, cb) in &rhs.terms {
                let mut gens = ta.gens.clone();
                gens.extend_from_slice(&tb.gens);
                let term = Term {
                    gens,
                    shift: ta.shift + tb.shift,
                };
                out.add_term(term, ca * cb);
            }
        }
        out
    }
}

forward_owned!(RationalSeries, Add, add);
forward_owned!(RationalSeries, Sub, sub);
forward_owned!(RationalSeries, Mul, mul);

impl Neg for RationalSeries {
    type Output = RationalSeries;
    fn neg(self) -> RationalSeries {
        -&self
    }
}

impl From<Generator> for RationalSeries {
    fn from(g: Generator) -> Self {
        Self::generator(g)
    }
}

impl From<LocalizedMotive> for RationalSeries {
    fn from(c: LocalizedMotive) -> Self {
        Self::constant(c)
    }
}

impl fmt::Display for RationalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (idx, (t, c)) in self.terms.iter().enumerate() {
            let plain = t.gens.is_empty() && t.shift == 0;
            let (neg, coeff) = coefficient_text(c);
            if idx == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            match (coeff, plain) {
                (None, true) => f.write_str("1")?,
                (None, false) => write!(f, "{t}")?,
                (Some(c), true) => f.write_str(&c)?,
                (Some(c), false) => write!(f, "{c}*{t}")?,
            }
        }
        Ok(())
    }
}

/// Sign and magnitude text of a coefficient; `None` magnitude means 1.
fn coefficient_text(c: &LocalizedMotive) -> (bool, Option<String>) {
    if let Some(p) = c.as_poly() {
        if p.num_terms() == 1 {
            let (e, k) = p.terms().next().unwrap();
            let neg = k < &BigInt::zero();
            let abs = if neg { -k } else { k.clone() };
            let mono = LaurentPoly::monomial(e, abs);
            return (neg, (!mono.is_one()).then(|| mono.to_string()));
        }
        return (false, Some(format!("({p})")));
    }
    (false, Some(format!("({c})")))
}

/// Ring operations accepted by [`series_combine`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
}

pub fn series_combine(a: &RationalSeries, b: &RationalSeries, op: SeriesOp) -> RationalSeries {
    match op {
        SeriesOp::Add => a + b,
        SeriesOp::Sub => a - b,
        SeriesOp::Mul => a * b,
    }
}

pub fn coefficient(s: &RationalSeries, m: u32) -> LocalizedMotive {
    s.coefficient(m)
}

pub fn limit_at_infinity(s: &RationalSeries) -> Result<LocalizedMotive> {
    s.limit()
}

pub fn hadamard(a: &RationalSeries, b: &RationalSeries) -> Result<RationalSeries> {
    a.hadamard(b)
}

fn check_basis(coeffs: usize, basis: &[Vec<Generator>]) -> Result<Vec<Term>> {
    let terms: Vec<Term> = basis.iter().map(|g| Term::product(g.clone())).collect();
    for (k, t) in terms.iter().enumerate() {
        if t.gens.is_empty() {
            return Err(Error::Invalid("basis elements must contain a generator".into()));
        }
        if terms[..k].contains(t) {
            return Err(Error::Invalid(format!("basis element {t} repeated")));
        }
    }
    if coeffs < terms.len() + 1 {
        return Err(Error::Underdetermined(format!(
            "{} coefficients cannot certify a fit over {} basis elements",
            coeffs,
            terms.len()
        )));
    }
    Ok(terms)
}

/// Recovers `sum_g c_g * g` (coefficients in `Z[L, L^-1]`) from the given
/// `(m, coefficient of T^m)` pairs. A basis element is a product of one or
/// more generators. The result matches every supplied coefficient.
pub fn fit_series(
    coeffs: &[(u32, LaurentPoly)],
    basis: &[Vec<Generator>],
) -> Result<RationalSeries> {
    let terms = check_basis(coeffs.len(), basis)?;
    let rows: Vec<Vec<LaurentPoly>> = coeffs
        .iter()
        .map(|(m, _)| terms.iter().map(|t| t.coefficient(*m)).collect())
        .collect();
    let rhs: Vec<LaurentPoly> = coeffs.iter().map(|(_, c)| c.clone()).collect();
    match linalg::solve(&rows, &rhs) {
        Solve::Unique(x) => {
            let mut out = RationalSeries::zero();
            for (t, c) in terms.into_iter().zip(x) {
                out.add_term(t, LocalizedMotive::from_poly(c));
            }
            Ok(out)
        }
        Solve::Underdetermined { rank } => Err(Error::Underdetermined(format!(
            "rank {rank} < {} basis elements",
            basis.len()
        ))),
        Solve::Inconsistent => Err(Error::Inconsistent("data outside the basis span".into())),
        Solve::NotInDomain => Err(Error::Inconsistent(
            "the only solution has non-integral Laurent coefficients".into(),
        )),
    }
}

pub fn fit_series_gens(coeffs: &[(u32, LaurentPoly)], basis: &[Generator]) -> Result<RationalSeries> {
    let basis: Vec<Vec<Generator>> = basis.iter().map(|g| vec![*g]).collect();
    fit_series(coeffs, &basis)
}

/// A fit whose data and coefficients were specialized at `L = q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecializedFit {
    pub q: BigRational,
    pub terms: Vec<(Term, BigRational)>,
}

impl SpecializedFit {
    /// `lim_{T -> oo}` of the fitted series, specialized.
    pub fn limit(&self) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |acc, (t, c)| {
            if t.gens.len() % 2 == 0 {
                acc + c
            } else {
                acc - c
            }
        })
    }

    pub fn coefficient(&self, m: u32) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |acc, (t, c)| {
            acc + c * t.coefficient(m).eval(&self.q).expect("q nonzero")
        })
    }
}

impl fmt::Display for SpecializedFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(t, c)| {
                if c.is_one() {
                    t.to_string()
                } else if c.is_integer() {
                    format!("{c}*{t}")
                } else {
                    format!("({c})*{t}")
                }
            })
            .collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// Like [`fit_series`] but over `Q` with every generator evaluated at `L = q`.
pub fn fit_specialized(
    coeffs: &[(u32, BigRational)],
    basis: &[Vec<Generator>],
    q: &BigRational,
) -> Result<SpecializedFit> {
    if q.is_zero() {
        return Err(Error::PoleAtQ("0".into()));
    }
    let terms = check_basis(coeffs.len(), basis)?;
    let rows: Vec<Vec<BigRational>> = coeffs
        .iter()
        .map(|(m, _)| {
            terms
                .iter()
                .map(|t| t.coefficient(*m).eval(q).expect("q nonzero"))
                .collect()
        })
        .collect();
    let rhs: Vec<BigRational> = coeffs.iter().map(|(_, c)| c.clone()).collect();
    match linalg::solve(&rows, &rhs) {
        Solve::Unique(x) => Ok(SpecializedFit {
            q: q.clone(),
            terms: terms.into_iter().zip(x).collect(),
        }),
        Solve::Underdetermined { rank } => Err(Error::Underdetermined(format!(
            "rank {rank} < {} basis elements at L = {q}",
            basis.len()
        ))),
        Solve::Inconsistent | Solve::NotInDomain => Err(Error::Inconsistent(format!(
            "specialized data at L = {q} outside the basis span"
        ))),
    }
}
