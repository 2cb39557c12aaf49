//! Truncated arcs over prime fields `F_p`: counts of the jet sets cut out by
//! `f(φ) ≡ t^m mod t^{m+1}` (and valuation ranges), with block predicates on
//! the coordinates and the normalizations used by the zeta series.
//!
//! Enumeration runs level by level in `t`: the coefficient of `t^k` in
//! `f(φ)` only depends on coefficients of order `<= k`, so a branch is cut
//! as soon as the target congruence fails and completed in closed form as
//! soon as it is decided.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lex::{Cursor, Tok};

/// Default cap on the number of coefficient evaluations.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;
/// Largest field size accepted.
pub const MAX_FIELD: u32 = 7;

/// Polynomial with integer coefficients in named variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl IntPolynomial {
    pub fn zero(vars: &[&str]) -> Self {
        Self {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    fn with_terms(&self, terms: BTreeMap<Vec<u32>, BigInt>) -> Self {
        Self { vars: self.vars.clone(), terms }
    }

    pub fn from_terms<I>(vars: &[&str], terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, i64)>,
    {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            assert_eq!(e.len(), vars.len(), "exponent vector length");
            p.add_term(e, BigInt::from(c));
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigInt) {
        let entry = self.terms.entry(e.clone()).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn constant_of(vars: &[String], c: BigInt) -> Self {
        let mut p = Self { vars: vars.to_vec(), terms: BTreeMap::new() };
        p.add_term(vec![0; vars.len()], c);
        p
    }

    pub fn var_of(vars: &[String], k: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[k] = 1;
        let mut p = Self { vars: vars.to_vec(), terms: BTreeMap::new() };
        p.add_term(e, BigInt::one());
        p
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BigInt> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms
            .get(&vec![0; self.dim()])
            .cloned()
            .unwrap_or_default()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.with_terms(self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.with_terms(BTreeMap::new());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant_of(&self.vars, BigInt::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Sets every variable outside `keep` to zero and drops it.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let vars = keep.iter().map(|&k| self.vars[k].clone()).collect();
        let mut out = Self { vars, terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            let vanishes = e
                .iter()
                .enumerate()
                .any(|(i, &x)| x > 0 && !keep.contains(&i));
            if !vanishes {
                out.add_term(keep.iter().map(|&k| e[k]).collect(), c.clone());
            }
        }
        out
    }

    /// `f(τ^{w_1} x_1, ..., τ^{w_d} x_d)` with coefficients reduced mod `p`.
    pub fn twist(&self, weights: &[i64], tau: u64, p: u64) -> Self {
        let inv = mod_pow(tau, p - 2, p);
        let mut out = self.with_terms(BTreeMap::new());
        for (e, c) in &self.terms {
            let w: i64 = e.iter().zip(weights).map(|(&x, &w)| x as i64 * w).sum();
            let factor = if w >= 0 {
                mod_pow(tau, w as u64, p)
            } else {
                mod_pow(inv, w.unsigned_abs(), p)
            };
            let c = (c.mod_floor(&BigInt::from(p)) * BigInt::from(factor)).mod_floor(&BigInt::from(p));
            out.add_term(e.clone(), c);
        }
        out
    }

    /// Parses `+ - * ^` and parentheses over integers and the given variables.
    pub fn parse(text: &str, vars: &[&str]) -> Result<Self> {
        let names: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        for (i, v) in names.iter().enumerate() {
            if names[..i].contains(v) {
                return Err(Error::Invalid(format!("variable `{v}` listed twice")));
            }
        }
        let mut cur = Cursor::new(text)?;
        let p = poly_expr(&mut cur, &names)?;
        cur.expect_end()?;
        Ok(p)
    }
}

fn poly_expr(cur: &mut Cursor, vars: &[String]) -> Result<IntPolynomial> {
    let mut acc = poly_term(cur, vars)?;
    loop {
        if cur.eat('+') {
            acc = acc.add(&poly_term(cur, vars)?);
        } else if cur.eat('-') {
            acc = acc.add(&poly_term(cur, vars)?.neg());
        } else {
            return Ok(acc);
        }
    }
}

fn poly_term(cur: &mut Cursor, vars: &[String]) -> Result<IntPolynomial> {
    let mut acc = poly_unary(cur, vars)?;
    while cur.eat('*') {
        acc = acc.mul(&poly_unary(cur, vars)?);
    }
    Ok(acc)
}

fn poly_unary(cur: &mut Cursor, vars: &[String]) -> Result<IntPolynomial> {
    if cur.eat('-') {
        return Ok(poly_unary(cur, vars)?.neg());
    }
    let base = poly_atom(cur, vars)?;
    if cur.eat('^') {
        let column = cur.column();
        match cur.next() {
            Tok::Int(n) => {
                let n = n
                    .to_u32()
                    .filter(|&n| n <= 64)
                    .ok_or_else(|| crate::lex::parse_err(column, "exponent too large"))?;
                Ok(base.pow(n))
            }
            _ => Err(crate::lex::parse_err(column, "expected a nonnegative integer exponent")),
        }
    } else {
        Ok(base)
    }
}

fn poly_atom(cur: &mut Cursor, vars: &[String]) -> Result<IntPolynomial> {
    let column = cur.column();
    match cur.next() {
        Tok::Int(n) => Ok(IntPolynomial::constant_of(vars, n)),
        Tok::Ident(name) => match vars.iter().position(|v| *v == name) {
            Some(k) => Ok(IntPolynomial::var_of(vars, k)),
            None => Err(crate::lex::parse_err(column, format!("unknown variable `{name}`"))),
        },
        Tok::Sym('(') => {
            let p = poly_expr(cur, vars)?;
            cur.expect(')')?;
            Ok(p)
        }
        _ => Err(crate::lex::parse_err(column, "expected a number, variable or `(`")),
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().rev().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| {
                    if x == 1 {
                        self.vars[i].clone()
                    } else {
                        format!("{}^{}", self.vars[i], x)
                    }
                })
                .collect();
            let mag = c.abs();
            if n == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
            }
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{mag}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

fn mod_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

pub fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Base {
    /// `val >= 0`
    Free,
    /// `val > 0`
    Positive,
    /// identically zero
    Zero,
}

impl Base {
    pub fn name(self) -> &'static str {
        match self {
            Base::Free => "free",
            Base::Positive => "positive",
            Base::Zero => "zero",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "free" => Some(Base::Free),
            "positive" => Some(Base::Positive),
            "zero" => Some(Base::Zero),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    /// `f(φ) ≡ t^m mod t^{m+1}`
    ExactTm,
    /// `rv f(φ) = rv(t)` after `t^{1/m} -> t`; the same congruence in the
    /// rescaled variable.
    RvT,
    /// `lo <= ord_t f(φ) < hi`, read in the truncation.
    OrdRange { lo: u32, hi: Option<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcTask {
    pub f: IntPolynomial,
    pub m: u32,
    pub trunc: u32,
    pub qf: u32,
    pub base: Vec<Base>,
    /// Prescribed `φ(0)`, overriding `base` at order 0.
    pub origin: Option<Vec<i64>>,
    pub target: Target,
}

impl ArcTask {
    /// Arcs in `f` with `f(φ) ≡ t^m mod t^{m+1}`, all coordinates free.
    pub fn exact(f: IntPolynomial, m: u32, trunc: u32, qf: u32) -> Self {
        let d = f.dim();
        Self {
            f,
            m,
            trunc,
            qf,
            base: vec![Base::Free; d],
            origin: None,
            target: Target::ExactTm,
        }
    }

    pub fn with_base(mut self, base: Vec<Base>) -> Self {
        self.base = base;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Validation {
            task: String::new(),
            field: field.into(),
            message: msg,
        });
        if !is_prime(self.qf) || self.qf > MAX_FIELD {
            return bad("qf", format!("{} is not a prime <= {MAX_FIELD}", self.qf));
        }
        if self.m == 0 {
            return bad("m", "level must be positive".into());
        }
        if self.trunc == 0 {
            return bad("trunc", "truncation must be positive".into());
        }
        if self.base.len() != self.f.dim() {
            return bad("base", format!("{} entries for {} variables", self.base.len(), self.f.dim()));
        }
        if let Some(o) = &self.origin {
            if o.len() != self.f.dim() {
                return bad("origin", format!("{} entries for {} variables", o.len(), self.f.dim()));
            }
        }
        match self.target {
            Target::ExactTm | Target::RvT if self.trunc < self.m + 1 => {
                bad("trunc", format!("needs trunc >= m + 1 = {}", self.m + 1))
            }
            Target::OrdRange { lo, hi } if lo > self.trunc || hi.is_some_and(|h| h <= lo) => {
                bad("target", "empty or out-of-range valuation window".into())
            }
            _ => Ok(()),
        }
    }

    pub fn n_active(&self) -> usize {
        self.base.iter().filter(|b| **b != Base::Zero).count()
    }
}

/// Sizes `(d1, d2, d3)` of the coordinate blocks `x`, `y`, `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Blocks {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Blocks {
    pub fn new(x: usize, y: usize, z: usize) -> Self {
        Self { x, y, z }
    }

    pub fn dim(&self) -> usize {
        self.x + self.y + self.z
    }

    pub fn x_range(&self) -> std::ops::Range<usize> {
        0..self.x
    }

    pub fn y_range(&self) -> std::ops::Range<usize> {
        self.x..self.x + self.y
    }

    pub fn z_range(&self) -> std::ops::Range<usize> {
        self.x + self.y..self.dim()
    }

    /// Weights `(1, -1, 0)` per coordinate.
    pub fn weights(&self) -> Vec<i64> {
        let mut w = vec![1; self.x];
        w.extend(std::iter::repeat(-1).take(self.y));
        w.extend(std::iter::repeat(0).take(self.z));
        w
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    True,
    XZero,
    YZero,
    XNonzero,
    YNonzero,
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
}

impl Predicate {
    /// `x = 0 or y = 0`
    pub fn x0() -> Self {
        Predicate::Or(Box::new(Predicate::XZero), Box::new(Predicate::YZero))
    }

    /// `x != 0 and y != 0`
    pub fn x1() -> Self {
        Predicate::And(Box::new(Predicate::XNonzero), Box::new(Predicate::YNonzero))
    }

    pub fn eval(&self, x_zero: bool, y_zero: bool) -> bool {
        match self {
            Predicate::True => true,
            Predicate::XZero => x_zero,
            Predicate::YZero => y_zero,
            Predicate::XNonzero => !x_zero,
            Predicate::YNonzero => !y_zero,
            Predicate::And(a, b) => a.eval(x_zero, y_zero) && b.eval(x_zero, y_zero),
            Predicate::Or(a, b) => a.eval(x_zero, y_zero) || b.eval(x_zero, y_zero),
        }
    }

    /// `true`, `x=0`, `y!=0`, combined with `and`, `or` and parentheses;
    /// `and` binds tighter.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cur = Cursor::new(text)?;
        let p = pred_or(&mut cur)?;
        cur.expect_end()?;
        Ok(p)
    }
}

fn pred_or(cur: &mut Cursor) -> Result<Predicate> {
    let mut acc = pred_and(cur)?;
    while *cur.peek() == Tok::Ident("or".into()) {
        cur.next();
        acc = Predicate::Or(Box::new(acc), Box::new(pred_and(cur)?));
    }
    Ok(acc)
}

fn pred_and(cur: &mut Cursor) -> Result<Predicate> {
    let mut acc = pred_atom(cur)?;
    while *cur.peek() == Tok::Ident("and".into()) {
        cur.next();
        acc = Predicate::And(Box::new(acc), Box::new(pred_atom(cur)?));
    }
    Ok(acc)
}

fn pred_atom(cur: &mut Cursor) -> Result<Predicate> {
    let column = cur.column();
    match cur.next() {
        Tok::Sym('(') => {
            let p = pred_or(cur)?;
            cur.expect(')')?;
            Ok(p)
        }
        Tok::Ident(s) if s == "true" => Ok(Predicate::True),
        Tok::Ident(s) if s == "x" || s == "y" => {
            let negated = cur.eat('!');
            cur.expect('=')?;
            let zc = cur.column();
            if cur.next() != Tok::Int(BigInt::zero()) {
                return Err(crate::lex::parse_err(zc, "blocks compare against 0 only"));
            }
            Ok(match (s.as_str(), negated) {
                ("x", false) => Predicate::XZero,
                ("x", true) => Predicate::XNonzero,
                ("y", false) => Predicate::YZero,
                _ => Predicate::YNonzero,
            })
        }
        _ => Err(crate::lex::parse_err(column, "expected `true`, `x`, `y` or `(`")),
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |p: &Predicate, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if matches!(p, Predicate::Or(..)) {
                write!(f, "({p})")
            } else {
                write!(f, "{p}")
            }
        };
        match self {
            Predicate::True => write!(f, "true"),
            Predicate::XZero => write!(f, "x=0"),
            Predicate::YZero => write!(f, "y=0"),
            Predicate::XNonzero => write!(f, "x!=0"),
            Predicate::YNonzero => write!(f, "y!=0"),
            Predicate::And(a, b) => {
                wrap(a, f)?;
                write!(f, " and ")?;
                wrap(b, f)
            }
            Predicate::Or(a, b) => write!(f, "{a} or {b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetSpec {
    pub task: ArcTask,
    pub blocks: Blocks,
    pub predicate: Predicate,
}

impl SetSpec {
    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        if self.blocks.dim() != self.task.f.dim() {
            return Err(Error::Validation {
                task: String::new(),
                field: "blocks".into(),
                message: format!(
                    "blocks cover {} coordinates, polynomial has {}",
                    self.blocks.dim(),
                    self.task.f.dim()
                ),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Fail,
    Pass,
    More,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Blk {
    X,
    Y,
    Z,
}

struct Counter<'a> {
    p: u64,
    trunc: usize,
    m: usize,
    target: &'a Target,
    predicate: &'a Predicate,
    /// Monomials as `(variable, exponent)` lists with coefficients mod p.
    monos: Vec<(Vec<(usize, usize)>, u64)>,
    /// `powers[i][e - 1][k]`: coefficient of `t^k` in `φ_i^e`.
    powers: Vec<Vec<Vec<u64>>>,
    coeffs: Vec<Vec<u64>>,
    fcoef: Vec<u64>,
    active: Vec<bool>,
    fixed0: Vec<bool>,
    block: Vec<Blk>,
    evals: u64,
    budget: u64,
    qpow: Vec<BigUint>,
    total: BigUint,
}

impl<'a> Counter<'a> {
    fn new(spec: &'a SetSpec, budget: u64) -> Self {
        let task = &spec.task;
        let p = task.qf as u64;
        let trunc = task.trunc as usize;
        let d = task.f.dim();
        let bp = BigInt::from(p);
        let mut maxdeg = vec![0usize; d];
        let mut monos = Vec::new();
        for (e, c) in task.f.terms() {
            let c = c.mod_floor(&bp).to_u64().expect("reduced");
            if c == 0 {
                continue;
            }
            let factors: Vec<(usize, usize)> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| (i, x as usize))
                .collect();
            for &(i, x) in &factors {
                maxdeg[i] = maxdeg[i].max(x);
            }
            monos.push((factors, c));
        }
        let active: Vec<bool> = task.base.iter().map(|b| *b != Base::Zero).collect();
        let mut coeffs = vec![vec![0u64; trunc]; d];
        let mut fixed0 = vec![false; d];
        for i in 0..d {
            if !active[i] {
                continue;
            }
            if let Some(o) = &task.origin {
                coeffs[i][0] = o[i].rem_euclid(p as i64) as u64;
                fixed0[i] = true;
            } else if task.base[i] == Base::Positive {
                fixed0[i] = true;
            }
        }
        let block = (0..d)
            .map(|i| {
                if spec.blocks.x_range().contains(&i) {
                    Blk::X
                } else if spec.blocks.y_range().contains(&i) {
                    Blk::Y
                } else {
                    Blk::Z
                }
            })
            .collect();
        let qb = BigUint::from(p);
        let qpow = (0..=trunc * d).map(|k| Pow::pow(&qb, k as u32)).collect();
        let m = match task.target {
            Target::ExactTm | Target::RvT => task.m as usize,
            Target::OrdRange { .. } => 0,
        };
        Self {
            p,
            trunc,
            m,
            target: &task.target,
            predicate: &spec.predicate,
            monos,
            powers: maxdeg.iter().map(|&g| vec![vec![0u64; trunc]; g]).collect(),
            coeffs,
            fcoef: vec![0; trunc],
            active,
            fixed0,
            block,
            evals: 0,
            budget,
            qpow,
            total: BigUint::zero(),
        }
    }

    fn free_at(&self, i: usize, k: usize) -> bool {
        self.active[i] && !(k == 0 && self.fixed0[i])
    }

    fn update_powers(&mut self, i: usize, k: usize) {
        let p = self.p;
        let g = self.powers[i].len();
        if g == 0 {
            return;
        }
        self.powers[i][0][k] = self.coeffs[i][k];
        for e in 1..g {
            let mut s = 0u64;
            for a in 0..=k {
                s = (s + self.coeffs[i][a] * self.powers[i][e - 1][k - a]) % p;
            }
            self.powers[i][e][k] = s;
        }
    }

    fn f_coeff(&self, k: usize) -> u64 {
        let p = self.p;
        let mut total = 0u64;
        for (factors, c) in &self.monos {
            let v = match factors.as_slice() {
                [] => u64::from(k == 0),
                [(i, e)] => self.powers[*i][e - 1][k],
                [(i, e), rest @ ..] => {
                    let mut acc: Vec<u64> = self.powers[*i][e - 1][..=k].to_vec();
                    for (j, f) in rest {
                        let s = &self.powers[*j][f - 1];
                        acc = (0..=k)
                            .map(|n| (0..=n).fold(0, |t, a| (t + acc[a] * s[n - a]) % p))
                            .collect();
                    }
                    acc[k]
                }
            };
            total = (total + c * v) % p;
        }
        total
    }

    /// Decision once the coefficients of `f(φ)` up to order `k` are known;
    /// `None` means nothing is known yet.
    fn decide(&self, k: Option<usize>) -> Step {
        match *self.target {
            Target::ExactTm | Target::RvT => match k {
                None => Step::More,
                Some(k) if k < self.m => {
                    if self.fcoef[k] == 0 {
                        Step::More
                    } else {
                        Step::Fail
                    }
                }
                Some(k) => {
                    if k == self.m && self.fcoef[k] == 1 {
                        Step::Pass
                    } else {
                        Step::Fail
                    }
                }
            },
            Target::OrdRange { lo, hi } => {
                let lo = lo as usize;
                let h = hi.map(|h| (h as usize).min(self.trunc));
                match k {
                    None => {
                        if lo == 0 && h.is_none() {
                            Step::Pass
                        } else if h.is_some_and(|h| h <= lo) {
                            Step::Fail
                        } else {
                            Step::More
                        }
                    }
                    Some(k) if k < lo => {
                        if self.fcoef[k] != 0 {
                            Step::Fail
                        } else if h.is_none() && k + 1 == lo {
                            Step::Pass
                        } else {
                            Step::More
                        }
                    }
                    Some(k) => {
                        if self.fcoef[k] != 0 {
                            Step::Pass
                        } else if h.is_some_and(|h| k + 1 >= h) {
                            Step::Fail
                        } else {
                            Step::More
                        }
                    }
                }
            }
        }
    }

    /// Adds the number of completions of the current prefix (orders `<= k`).
    fn complete(&mut self, k: Option<usize>) {
        let d = self.coeffs.len();
        let first = k.map_or(0, |k| k + 1);
        let mut rem = [0usize; 3];
        let mut zero = [true; 3];
        for i in 0..d {
            if !self.active[i] {
                continue;
            }
            let b = self.block[i] as usize;
            rem[b] += (first..self.trunc).filter(|&l| self.free_at(i, l)).count();
            let assigned_end = k.map_or(0, |k| k + 1);
            let assigned_nonzero = self.coeffs[i][..assigned_end].iter().any(|&c| c != 0)
                || (self.fixed0[i] && self.coeffs[i][0] != 0);
            if assigned_nonzero {
                zero[b] = false;
            }
        }
        if *self.predicate == Predicate::True {
            self.total += &self.qpow[rem[0] + rem[1] + rem[2]];
            return;
        }
        let weight = |b: usize, is_zero: bool| -> BigUint {
            let z = BigUint::from(u32::from(zero[b]));
            if is_zero {
                z
            } else {
                &self.qpow[rem[b]] - z
            }
        };
        let mut acc = BigUint::zero();
        for zx in [true, false] {
            for zy in [true, false] {
                if self.predicate.eval(zx, zy) {
                    acc += weight(0, zx) * weight(1, zy);
                }
            }
        }
        self.total += acc * &self.qpow[rem[2]];
    }

    /// For `l >= 1` the coefficient of `t^l` in `f(φ)` is
    /// `grad f(φ(0)) · (a_{i,l})_i` plus terms of lower order, so once `φ(0)`
    /// is a smooth point each of the levels `1..=m` cuts the count by exactly
    /// `q`. Only used when the block predicate is already decided.
    fn smooth_origin(&self) -> bool {
        if !matches!(self.target, Target::ExactTm | Target::RvT) || self.m == 0 {
            return false;
        }
        let d = self.coeffs.len();
        let p = self.p;
        let grad_nonzero = (0..d).filter(|&i| self.active[i]).any(|i| {
            let mut g = 0u64;
            for (factors, c) in &self.monos {
                let Some(&(_, e)) = factors.iter().find(|(j, _)| *j == i) else {
                    continue;
                };
                let mut v = c * (e as u64 % p) % p;
                for &(j, x) in factors {
                    let x = if j == i { x - 1 } else { x };
                    v = v * mod_pow(self.coeffs[j][0], x as u64, p) % p;
                }
                g = (g + v) % p;
            }
            g != 0
        });
        grad_nonzero && self.block_status().is_some()
    }

    /// Final zero/nonzero status of the x and y blocks, if the prefix at
    /// order 0 already fixes it.
    fn block_status(&self) -> Option<(bool, bool)> {
        if *self.predicate == Predicate::True {
            return Some((true, true));
        }
        let d = self.coeffs.len();
        let status = |b: Blk| -> Option<bool> {
            let vars: Vec<usize> = (0..d).filter(|&i| self.block[i] == b && self.active[i]).collect();
            if vars.iter().any(|&i| self.coeffs[i][0] != 0) {
                Some(false)
            } else if self.trunc == 1 && vars.iter().all(|&i| self.fixed0[i]) {
                Some(true)
            } else if vars.is_empty() {
                Some(true)
            } else {
                None
            }
        };
        Some((status(Blk::X)?, status(Blk::Y)?))
    }

    fn complete_smooth(&mut self) {
        let (zx, zy) = self.block_status().expect("checked");
        if !self.predicate.eval(zx, zy) {
            return;
        }
        let d = self.coeffs.len();
        let rem: usize = (0..d)
            .filter(|&i| self.active[i])
            .map(|_| self.trunc - 1)
            .sum();
        self.total += &self.qpow[rem - self.m];
    }

    fn level(&mut self, k: usize) -> Result<()> {
        let d = self.coeffs.len();
        let free: Vec<usize> = (0..d).filter(|&i| self.free_at(i, k)).collect();
        for i in 0..d {
            if self.active[i] && !free.contains(&i) {
                self.update_powers(i, k);
            }
        }
        let mut vals = vec![0u64; free.len()];
        loop {
            for (j, &i) in free.iter().enumerate() {
                self.coeffs[i][k] = vals[j];
                self.update_powers(i, k);
            }
            self.evals += 1;
            if self.evals > self.budget {
                return Err(Error::BudgetExceeded(self.budget));
            }
            self.fcoef[k] = self.f_coeff(k);
            match self.decide(Some(k)) {
                Step::Pass => self.complete(Some(k)),
                Step::Fail => {}
                Step::More if k == 0 && self.smooth_origin() => self.complete_smooth(),
                Step::More if k + 1 < self.trunc => self.level(k + 1)?,
                Step::More => {}
            }
            let mut j = 0;
            loop {
                if j == vals.len() {
                    for &i in &free {
                        self.coeffs[i][k] = 0;
                    }
                    return Ok(());
                }
                vals[j] += 1;
                if vals[j] < self.p {
                    break;
                }
                vals[j] = 0;
                j += 1;
            }
        }
    }

    fn run(mut self) -> Result<BigUint> {
        match self.decide(None) {
            Step::Pass => self.complete(None),
            Step::Fail => {}
            Step::More => self.level(0)?,
        }
        Ok(self.total)
    }
}

/// Number of arcs in `F_qf[t]/(t^trunc)` meeting the task's conditions.
pub fn count_arcs(task: &ArcTask, budget: u64) -> Result<BigUint> {
    let d = task.f.dim();
    count_set(
        &SetSpec {
            task: task.clone(),
            blocks: Blocks::new(0, 0, d),
            predicate: Predicate::True,
        },
        budget,
    )
}

/// As [`count_arcs`], additionally filtered by the block predicate.
pub fn count_set(spec: &SetSpec, budget: u64) -> Result<BigUint> {
    spec.validate()?;
    Counter::new(spec, budget).run()
}

/// `count · q^e` as an exact rational.
pub fn scale_count(count: &BigUint, q: u32, e: i64) -> BigRational {
    let c = BigRational::from_integer(BigInt::from(count.clone()));
    let qq = BigInt::from(q);
    if e >= 0 {
        c * BigRational::from_integer(Pow::pow(&qq, e as u64))
    } else {
        c / BigRational::from_integer(Pow::pow(&qq, e.unsigned_abs()))
    }
}

/// `X̃[m] = [X[m; β]] · q^{-m|β| + n}` with `m|β| = trunc·n` for the active
/// coordinates.
pub fn xtilde(spec: &SetSpec, budget: u64) -> Result<BigRational> {
    let count = count_set(spec, budget)?;
    let n = spec.task.n_active() as i64;
    Ok(scale_count(&count, spec.task.qf, n - spec.task.trunc as i64 * n))
}

/// `f(0) = 0` and every monomial has as much x-degree as y-degree.
pub fn weight_check(f: &IntPolynomial, blocks: Blocks) -> bool {
    if blocks.dim() != f.dim() || !f.constant_term().is_zero() {
        return false;
    }
    let w = blocks.weights();
    f.terms()
        .keys()
        .all(|e| e.iter().zip(&w).map(|(&x, &w)| x as i64 * w).sum::<i64>() == 0)
}
