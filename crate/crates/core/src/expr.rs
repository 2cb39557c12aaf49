//! Parser for the motive and series grammar:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' ['-'] int)?
//! atom  := int | 'L' | 'T' | gen(int, int) | had(expr, expr) | lim(expr) | '(' expr ')'
//! ```
//!
//! Division is only allowed by units of the localized ring. Everything the
//! `Display` impls of [`LocalizedMotive`] and [`RationalSeries`] print parses
//! back to the same value.

use num_traits::ToPrimitive;

use crate::error::Result;
use crate::gring::LocalizedMotive;
use crate::lex::{parse_err, Cursor, Tok};
use crate::series::{Generator, RationalSeries, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Motive(LocalizedMotive),
    Series(RationalSeries),
}

impl Value {
    pub fn into_series(self) -> RationalSeries {
        match self {
            Value::Motive(m) => RationalSeries::constant(m),
            Value::Series(s) => s,
        }
    }

    /// Constant series collapse to motives.
    fn simplify(self) -> Self {
        match self {
            Value::Series(s) => match s.as_constant() {
                Some(c) => Value::Motive(c),
                None => Value::Series(s),
            },
            m => m,
        }
    }
}

pub fn parse_value(text: &str) -> Result<Value> {
    let mut cur = Cursor::new(text)?;
    let v = expr(&mut cur)?;
    cur.expect_end()?;
    Ok(v.simplify())
}

pub fn parse_motive(text: &str) -> Result<LocalizedMotive> {
    match parse_value(text)? {
        Value::Motive(m) => Ok(m),
        Value::Series(_) => Err(parse_err(1, "expected a motive, found a series in T")),
    }
}

pub fn parse_series(text: &str) -> Result<RationalSeries> {
    Ok(parse_value(text)?.into_series())
}

fn add(a: Value, b: Value, negate: bool) -> Value {
    match (a, b) {
        (Value::Motive(x), Value::Motive(y)) => {
            Value::Motive(if negate { &x - &y } else { &x + &y })
        }
        (a, b) => {
            let (x, y) = (a.into_series(), b.into_series());
            Value::Series(if negate { &x - &y } else { &x + &y })
        }
    }
}

fn mul(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Motive(x), Value::Motive(y)) => Value::Motive(&x * &y),
        (Value::Motive(c), Value::Series(s)) | (Value::Series(s), Value::Motive(c)) => {
            Value::Series(s.scale(&c))
        }
        (Value::Series(x), Value::Series(y)) => Value::Series(&x * &y),
    }
}

fn expr(cur: &mut Cursor) -> Result<Value> {
    let mut acc = term(cur)?;
    loop {
        if cur.eat('+') {
            acc = add(acc, term(cur)?, false);
        } else if cur.eat('-') {
            acc = add(acc, term(cur)?, true);
        } else {
            return Ok(acc);
        }
    }
}

fn term(cur: &mut Cursor) -> Result<Value> {
    let mut acc = unary(cur)?;
    loop {
        if cur.eat('*') {
            acc = mul(acc, unary(cur)?);
        } else if *cur.peek() == Tok::Sym('/') {
            let column = cur.column();
            cur.next();
            let inv = match unary(cur)?.simplify() {
                Value::Motive(m) => m
                    .inverse()
                    .ok_or_else(|| parse_err(column, format!("division by {m}, which is not a unit")))?,
                Value::Series(_) => return Err(parse_err(column, "division by a series")),
            };
            acc = mul(acc, Value::Motive(inv));
        } else {
            return Ok(acc);
        }
    }
}

fn unary(cur: &mut Cursor) -> Result<Value> {
    if cur.eat('-') {
        return Ok(match unary(cur)? {
            Value::Motive(m) => Value::Motive(-m),
            Value::Series(s) => Value::Series(-s),
        });
    }
    let base = atom(cur)?;
    if !cur.eat('^') {
        return Ok(base);
    }
    let column = cur.column();
    let n = cur
        .signed_int()?
        .to_i32()
        .filter(|n| n.abs() <= 4096)
        .ok_or_else(|| parse_err(column, "exponent out of range"))?;
    match base.simplify() {
        Value::Motive(m) => {
            let m = if n < 0 {
                m.inverse()
                    .ok_or_else(|| parse_err(column, format!("{m} is not a unit")))?
            } else {
                m
            };
            Ok(Value::Motive(m.pow(n.unsigned_abs())))
        }
        Value::Series(s) => {
            if n < 0 {
                return Err(parse_err(column, "series only take nonnegative powers"));
            }
            let mut acc = RationalSeries::constant(LocalizedMotive::one());
            for _ in 0..n {
                acc = &acc * &s;
            }
            Ok(Value::Series(acc))
        }
    }
}

fn small_int(cur: &mut Cursor) -> Result<i64> {
    let column = cur.column();
    cur.signed_int()?
        .to_i64()
        .ok_or_else(|| parse_err(column, "integer out of range"))
}

fn atom(cur: &mut Cursor) -> Result<Value> {
    let column = cur.column();
    match cur.next() {
        Tok::Int(n) => Ok(Value::Motive(LocalizedMotive::from_int(n))),
        Tok::Sym('(') => {
            let v = expr(cur)?;
            cur.expect(')')?;
            Ok(v)
        }
        Tok::Ident(name) => match name.as_str() {
            "L" => Ok(Value::Motive(LocalizedMotive::l_pow(1))),
            "T" => Ok(Value::Series(RationalSeries::from_term(
                Term::t_pow(1),
                LocalizedMotive::one(),
            ))),
            "gen" => {
                cur.expect('(')?;
                let e = small_int(cur)?;
                cur.expect(',')?;
                let ic = cur.column();
                let i = small_int(cur)?;
                cur.expect(')')?;
                let i = u32::try_from(i)
                    .ok()
                    .filter(|&i| i > 0)
                    .ok_or_else(|| parse_err(ic, "generator degree must be a positive integer"))?;
                let g = Generator::new(e, i).map_err(|e| parse_err(ic, e.to_string()))?;
                Ok(Value::Series(RationalSeries::generator(g)))
            }
            "had" => {
                cur.expect('(')?;
                let a = expr(cur)?.into_series();
                cur.expect(',')?;
                let b = expr(cur)?.into_series();
                cur.expect(')')?;
                let h = a.hadamard(&b)?;
                Ok(Value::Series(h))
            }
            "lim" => {
                cur.expect('(')?;
                let a = expr(cur)?.into_series();
                cur.expect(')')?;
                Ok(Value::Motive(a.limit()?))
            }
            other => Err(parse_err(column, format!("unknown name `{other}`"))),
        },
        Tok::End => Err(parse_err(column, "unexpected end of input")),
        Tok::Sym(c) => Err(parse_err(column, format!("unexpected `{c}`"))),
    }
}
