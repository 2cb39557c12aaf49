//! Line-oriented task files.
//!
//! ```text
//! # comment
//! version = 1
//! seed = 0
//!
//! [task lim]
//! kind = limit
//! series = gen(0,1)
//! expect = -1
//! ```
//!
//! Keys before the first `[task NAME]` header are file settings. Repeated
//! keys (`constraint`, `component`, `stratum`, `basis`, ...) accumulate in
//! order. Values are exact integers, rationals `p/q`, comma lists, or
//! strings in the motive, series and polynomial grammars.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::arcs::{ArcTask, Base, Blocks, IntPolynomial, Predicate, SetSpec, Target, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::expr::{parse_motive, parse_series, parse_value, Value};
use crate::gamma::{Affine, Constraint, Polyhedron, Relation};
use crate::gring::LocalizedMotive;
use crate::identity::{IdentityInstance, RhsRoute};
use crate::nearby::{Component, DomainFactor, ResolutionDatum};
use crate::props::Property;
use crate::series::{Generator, RationalSeries};

pub const VERSION: u32 = 1;
pub const DEFAULT_COEFFICIENT_CAP: u32 = 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskFile {
    pub version: u32,
    pub seed: u64,
    pub budget: u64,
    pub coefficient_cap: u32,
    pub tasks: Vec<Task>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub name: String,
    pub payload: Payload,
    pub expect: Option<Expect>,
}

/// Expected primary value of a task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expect {
    Rational(BigRational),
    Value(Value),
}

impl std::fmt::Display for Expect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expect::Rational(r) => write!(f, "{r}"),
            Expect::Value(Value::Motive(m)) => write!(f, "{m}"),
            Expect::Value(Value::Series(s)) => write!(f, "{s}"),
        }
    }
}

/// Arc-count generating function of `f` at the given levels, optionally
/// fitted to a generator basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaTask {
    pub f: IntPolynomial,
    pub qf: u32,
    pub levels: Vec<u32>,
    pub base: Vec<Base>,
    pub basis: Option<Vec<Vec<Generator>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Zeta(ZetaTask),
    Nearby(ResolutionDatum),
    VolumeSeries { datum: ResolutionDatum, coefficients: u32 },
    AmSum { polyhedron: Polyhedron, m: u32, weight: Option<Affine> },
    Euler(Polyhedron),
    Limit(RationalSeries),
    Hadamard { a: RationalSeries, b: RationalSeries, coefficients: u32 },
    ArcCount(ArcTask),
    CountSet(SetSpec),
    CheckTermwise(IdentityInstance),
    CheckIdentity(IdentityInstance),
    Property { property: Property, cases: usize },
    StandardVolume(Vec<DomainFactor>),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Zeta(_) => "zeta",
            Payload::Nearby(_) => "nearby",
            Payload::VolumeSeries { .. } => "volume_series",
            Payload::AmSum { .. } => "am_sum",
            Payload::Euler(_) => "euler",
            Payload::Limit(_) => "limit",
            Payload::Hadamard { .. } => "hadamard",
            Payload::ArcCount(_) => "arc_count",
            Payload::CountSet(_) => "count_set",
            Payload::CheckTermwise(_) => "check_termwise",
            Payload::CheckIdentity(_) => "check_identity",
            Payload::Property { .. } => "property",
            Payload::StandardVolume(_) => "standard_volume",
        }
    }
}

const KINDS_WITH_EXPECT: [&str; 10] = [
    "nearby",
    "volume_series",
    "am_sum",
    "euler",
    "limit",
    "hadamard",
    "arc_count",
    "count_set",
    "standard_volume",
    "zeta",
];

/// One `key = value` line; `column` is where the value starts.
#[derive(Clone, Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    column: usize,
}

impl Entry {
    /// Moves a position inside the value to the file.
    fn locate(&self, e: Error) -> Error {
        match e {
            Error::Parse { column, message, .. } => Error::Parse {
                line: self.line,
                column: self.column + column - 1,
                message,
            },
            e => e,
        }
    }
}

struct Block {
    name: String,
    entries: Vec<Entry>,
}

fn split_lines(text: &str) -> std::result::Result<(Vec<Entry>, Vec<Block>), Vec<Error>> {
    let mut header = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    let mut errors = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.chars().take_while(|c| c.is_whitespace()).count();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                errors.push(Error::Parse { line, column: indent + 1, message: "unterminated header".into() });
                continue;
            };
            let mut words = inner.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("task"), Some(name), None) if valid_name(name) => {
                    if blocks.iter().any(|b| b.name == name) {
                        errors.push(Error::Parse {
                            line,
                            column: indent + 1,
                            message: format!("task name `{name}` used twice"),
                        });
                    }
                    blocks.push(Block { name: name.into(), entries: Vec::new() });
                }
                _ => errors.push(Error::Parse {
                    line,
                    column: indent + 1,
                    message: "expected `[task NAME]` with NAME made of letters, digits, `_` or `-`".into(),
                }),
            }
            continue;
        }
        let Some(eq) = content.find('=') else {
            errors.push(Error::Parse { line, column: indent + 1, message: "expected `key = value`".into() });
            continue;
        };
        let key = content[..eq].trim();
        if !valid_name(key) {
            errors.push(Error::Parse { line, column: indent + 1, message: format!("bad key `{key}`") });
            continue;
        }
        let after = &content[eq + 1..];
        let lead = after.chars().take_while(|c| c.is_whitespace()).count();
        let column = content[..eq + 1].chars().count() + lead + 1;
        let entry = Entry { key: key.into(), value: after.trim().into(), line, column };
        match blocks.last_mut() {
            Some(b) => b.entries.push(entry),
            None => header.push(entry),
        }
    }
    if errors.is_empty() {
        Ok((header, blocks))
    } else {
        Err(errors)
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Typed access to the entries of one block; every entry must be consumed.
struct Fields<'a> {
    task: &'a str,
    entries: &'a [Entry],
    used: Vec<bool>,
}

impl<'a> Fields<'a> {
    fn new(task: &'a str, entries: &'a [Entry]) -> Self {
        Self { task, entries, used: vec![false; entries.len()] }
    }

    fn invalid(&self, field: &str, message: impl Into<String>) -> Error {
        Error::Validation { task: self.task.into(), field: field.into(), message: message.into() }
    }

    fn all(&mut self, key: &str) -> Vec<&'a Entry> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.key == key {
                self.used[i] = true;
                out.push(e);
            }
        }
        out
    }

    fn opt(&mut self, key: &str) -> Result<Option<&'a Entry>> {
        let found = self.all(key);
        match found.as_slice() {
            [] => Ok(None),
            [e] => Ok(Some(e)),
            [_, e, ..] => Err(Error::Parse {
                line: e.line,
                column: 1,
                message: format!("`{key}` given more than once"),
            }),
        }
    }

    fn req(&mut self, key: &str) -> Result<&'a Entry> {
        self.opt(key)?.ok_or_else(|| self.invalid(key, "missing"))
    }

    fn req_uint<T: TryFrom<u64>>(&mut self, key: &str) -> Result<T> {
        let e = self.req(key)?;
        self.uint(e)
    }

    fn req_uint_list<T: TryFrom<u64>>(&mut self, key: &str) -> Result<Vec<T>> {
        let e = self.req(key)?;
        self.uint_list(e)
    }

    fn req_series(&mut self, key: &str) -> Result<RationalSeries> {
        let e = self.req(key)?;
        self.series(e)
    }

    fn finish(&self) -> Result<()> {
        match self.entries.iter().zip(&self.used).find(|(_, u)| !**u) {
            Some((e, _)) => Err(self.invalid(&e.key, "unknown field for this kind")),
            None => Ok(()),
        }
    }

    fn with<T>(&self, e: &Entry, r: Result<T>) -> Result<T> {
        r.map_err(|err| match err {
            Error::Parse { .. } => e.locate(err),
            Error::Validation { field, message, .. } => Error::Validation {
                task: self.task.into(),
                field: if field.is_empty() { e.key.clone() } else { field },
                message,
            },
            other => self.invalid(&e.key, other.to_string()),
        })
    }

    fn uint<T: TryFrom<u64>>(&self, e: &Entry) -> Result<T> {
        self.with(e, uint_at(&e.value, 1))
    }

    fn uint_list<T: TryFrom<u64>>(&self, e: &Entry) -> Result<Vec<T>> {
        let mut out = Vec::new();
        for (item, col) in items(&e.value) {
            out.push(self.with(e, uint_at(item, col))?);
        }
        if out.is_empty() {
            return Err(self.invalid(&e.key, "empty list"));
        }
        Ok(out)
    }

    fn rational(&self, e: &Entry, text: &str, col: usize) -> Result<BigRational> {
        match rational_at(text, col) {
            Err(RatError::Parse(err)) => Err(e.locate(err)),
            Err(RatError::ZeroDenominator) => Err(self.invalid(&e.key, format!("`{text}` has a zero denominator"))),
            Ok(r) => Ok(r),
        }
    }

    fn vector(&self, e: &Entry, text: &str, col: usize) -> Result<Vec<BigRational>> {
        let t = text.trim_end();
        let lead = text.len() - text.trim_start().len();
        let inner = t
            .trim_start()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| e.locate(Error::Parse { line: 1, column: col + lead, message: "expected `[a, b, ...]`".into() }))?;
        let base = col + lead + 1;
        let mut out = Vec::new();
        if inner.trim().is_empty() {
            return Ok(out);
        }
        for (item, c) in items(inner) {
            out.push(self.rational(e, item, base + c - 1)?);
        }
        Ok(out)
    }

    fn constraint(&self, e: &Entry) -> Result<Constraint> {
        let v = &e.value;
        let close = v.find(']').ok_or_else(|| {
            e.locate(Error::Parse { line: 1, column: 1, message: "expected `[a, b, ...] >= c`".into() })
        })?;
        let coeffs = self.vector(e, &v[..=close], 1)?;
        let rest = &v[close + 1..];
        let lead = rest.len() - rest.trim_start().len();
        let r = rest.trim_start();
        let (rel, len) = if r.starts_with(">=") {
            (Relation::Ge, 2)
        } else if r.starts_with('>') {
            (Relation::Gt, 1)
        } else if r.starts_with('=') {
            (Relation::Eq, 1)
        } else {
            return Err(e.locate(Error::Parse {
                line: 1,
                column: close + 2 + lead,
                message: "expected `>=`, `>` or `=`".into(),
            }));
        };
        let bound_col = close + 2 + lead + len;
        let bound = self.rational(e, &r[len..], bound_col)?;
        Ok(Constraint::new(coeffs, rel, bound))
    }

    fn polyhedron(&mut self) -> Result<Polyhedron> {
        let dim_e = self.req("dim")?;
        let dim: usize = self.uint(dim_e)?;
        let mut cs = Vec::new();
        for e in self.all("constraint") {
            let c = self.constraint(e)?;
            if c.coeffs.len() != dim {
                return Err(self.invalid("constraint", format!("{c} does not have {dim} coefficients")));
            }
            cs.push(c);
        }
        Polyhedron::new(dim, cs).map_err(|err| self.invalid("constraint", err.to_string()))
    }

    fn motive(&self, e: &Entry, text: &str, col: usize) -> Result<LocalizedMotive> {
        parse_motive(text).map_err(|err| shift(e, err, col))
    }

    fn series(&self, e: &Entry) -> Result<RationalSeries> {
        self.with(e, parse_series(&e.value))
    }

    fn gens(&self, e: &Entry) -> Result<Vec<Generator>> {
        let s = self.series(e)?;
        let mut terms = s.terms();
        match (terms.next(), terms.next()) {
            (Some((t, c)), None) if t.shift == 0 && !t.gens.is_empty() && *c == LocalizedMotive::one() => {
                Ok(t.gens.clone())
            }
            _ => Err(self.invalid(&e.key, "expected a product of generators such as gen(-1,1)*gen(-3,2)")),
        }
    }

    fn basis(&mut self, key: &str) -> Result<Option<Vec<Vec<Generator>>>> {
        let es = self.all(key);
        if es.is_empty() {
            return Ok(None);
        }
        es.into_iter().map(|e| self.gens(e)).collect::<Result<Vec<_>>>().map(Some)
    }

    fn polynomial(&mut self) -> Result<IntPolynomial> {
        let ve = self.req("vars")?;
        let vars: Vec<&str> = ve.value.split(',').map(str::trim).collect();
        if let Some(v) = vars.iter().find(|v| !valid_var(v)) {
            return Err(self.invalid("vars", format!("`{v}` is not a variable name")));
        }
        let fe = self.req("f")?;
        self.with(fe, IntPolynomial::parse(&fe.value, &vars))
    }

    fn base(&mut self, dim: usize) -> Result<Vec<Base>> {
        let Some(e) = self.opt("base")? else {
            return Ok(vec![Base::Free; dim]);
        };
        let mut out = Vec::new();
        for (item, col) in items(&e.value) {
            out.push(Base::from_name(item).ok_or_else(|| {
                e.locate(Error::Parse {
                    line: 1,
                    column: col,
                    message: format!("`{item}` is not free, positive or zero"),
                })
            })?);
        }
        if out.len() != dim {
            return Err(self.invalid("base", format!("{} entries for {dim} variables", out.len())));
        }
        Ok(out)
    }

    fn target(&mut self) -> Result<Target> {
        let Some(e) = self.opt("target")? else {
            return Ok(Target::ExactTm);
        };
        let v = e.value.as_str();
        if v == "exact" {
            return Ok(Target::ExactTm);
        }
        if v == "rv" {
            return Ok(Target::RvT);
        }
        let bad = || e.locate(Error::Parse { line: 1, column: 1, message: "expected `exact`, `rv` or `ord LO..HI`".into() });
        let range = v.strip_prefix("ord").ok_or_else(bad)?;
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo = self.with(e, uint_at(lo.trim(), 1))?;
        let hi = if hi.trim().is_empty() { None } else { Some(self.with(e, uint_at(hi.trim(), 1))?) };
        Ok(Target::OrdRange { lo, hi })
    }

    fn arc_task(&mut self) -> Result<ArcTask> {
        let f = self.polynomial()?;
        let dim = f.dim();
        let m = self.req_uint("m")?;
        let trunc = self.req_uint("trunc")?;
        let qf = self.req_uint("qf")?;
        let base = self.base(dim)?;
        let origin = match self.opt("origin")? {
            Some(e) => {
                let mut out = Vec::new();
                for (item, col) in items(&e.value) {
                    out.push(item.parse::<i64>().map_err(|_| {
                        e.locate(Error::Parse { line: 1, column: col, message: format!("`{item}` is not an integer") })
                    })?);
                }
                Some(out)
            }
            None => None,
        };
        let target = self.target()?;
        let task = ArcTask { f, m, trunc, qf, base, origin, target };
        self.validated(task.validate())?;
        Ok(task)
    }

    fn validated(&self, r: Result<()>) -> Result<()> {
        r.map_err(|err| match err {
            Error::Validation { field, message, .. } => Error::Validation { task: self.task.into(), field, message },
            other => self.invalid("", other.to_string()),
        })
    }

    fn blocks(&mut self, dim: usize) -> Result<Blocks> {
        let e = self.req("blocks")?;
        let v: Vec<usize> = self.uint_list(e)?;
        let [x, y, z] = v[..] else {
            return Err(self.invalid("blocks", "expected three sizes d1, d2, d3"));
        };
        let b = Blocks::new(x, y, z);
        if b.dim() != dim {
            return Err(self.invalid("blocks", format!("blocks cover {} coordinates, polynomial has {dim}", b.dim())));
        }
        Ok(b)
    }

    fn datum(&mut self) -> Result<ResolutionDatum> {
        let mut components = Vec::new();
        for e in self.all("component") {
            let v: Vec<u32> = self.uint_list(e)?;
            let [n, alpha] = v[..] else {
                return Err(self.invalid("component", "expected `N, alpha`"));
            };
            components.push(Component { n, alpha });
        }
        if components.is_empty() {
            return Err(self.invalid("component", "missing"));
        }
        let reldim = self.req_uint("reldim")?;
        let mut res = ResolutionDatum::new(components, reldim);
        for e in self.all("stratum") {
            let (set, motive) = e.value.split_once(':').ok_or_else(|| {
                e.locate(Error::Parse { line: 1, column: 1, message: "expected `i, j : motive`".into() })
            })?;
            let mut idx = Vec::new();
            for (item, col) in items(set) {
                let i: usize = self.with(e, uint_at(item, col))?;
                if i == 0 || i > res.components.len() {
                    return Err(self.invalid("stratum", format!("no component {i}")));
                }
                idx.push(i - 1);
            }
            let sorted = {
                let mut s = idx.clone();
                s.sort_unstable();
                s.dedup();
                s
            };
            if sorted.len() != idx.len() || idx.is_empty() {
                return Err(self.invalid("stratum", "index set must be nonempty without repeats"));
            }
            if res.strata.contains_key(&sorted) {
                return Err(self.invalid("stratum", format!("stratum {} given twice", one_based(&sorted))));
            }
            let col = set.chars().count() + 2;
            let text = motive;
            let lead = text.len() - text.trim_start().len();
            let m = self.motive(e, text.trim(), col + lead)?;
            res = res.with_stratum(&sorted, m);
        }
        res.validate().map_err(|err| self.invalid("component", err.to_string()))?;
        Ok(res)
    }

    fn coefficients(&mut self, cap: u32) -> Result<u32> {
        match self.opt("coefficients")? {
            None => Ok(0),
            Some(e) => {
                let n: u32 = self.uint(e)?;
                if n > cap {
                    return Err(self.invalid("coefficients", format!("{n} exceeds the cap {cap}")));
                }
                Ok(n)
            }
        }
    }

    fn instance(&mut self) -> Result<IdentityInstance> {
        let f = self.polynomial()?;
        let blocks = self.blocks(f.dim())?;
        let mut inst = IdentityInstance::new(f, blocks);
        if let Some(e) = self.opt("levels")? {
            inst.levels = self.uint_list(e)?;
        }
        if let Some(e) = self.opt("fields")? {
            inst.fields = self.uint_list(e)?;
        }
        for &q in &inst.fields {
            self.validated(ArcTask::exact(inst.f.clone(), 1, 2, q).validate())?;
        }
        if inst.levels.contains(&0) {
            return Err(self.invalid("levels", "levels must be positive"));
        }
        if !crate::arcs::weight_check(&inst.f, blocks) {
            return Err(self.invalid("f", Error::WeightCheckFailed.to_string()));
        }
        Ok(inst)
    }

    fn identity(&mut self) -> Result<IdentityInstance> {
        let mut inst = self.instance()?;
        if let Some(e) = self.opt("fit_levels")? {
            inst.fit_levels = self.uint_list(e)?;
            if inst.fit_levels.contains(&0) {
                return Err(self.invalid("fit_levels", "levels must be positive"));
            }
        }
        inst.basis_hint = self.basis("basis")?;
        inst.rhs_basis = self.basis("rhs_basis")?;
        inst.x1_basis = self.basis("x1_basis")?;
        let has_datum = self.entries.iter().any(|e| e.key == "component");
        if has_datum {
            inst.rhs_route = RhsRoute::Resolution(self.datum()?);
        }
        Ok(inst)
    }

    fn expect(&mut self, kind: &str) -> Result<Option<Expect>> {
        let Some(e) = self.opt("expect")? else {
            return Ok(None);
        };
        if !KINDS_WITH_EXPECT.contains(&kind) {
            return Err(self.invalid("expect", format!("kind {kind} has no single value to compare")));
        }
        if is_rational_literal(&e.value) {
            return self.rational(e, &e.value, 1).map(|r| Some(Expect::Rational(r)));
        }
        self.with(e, parse_value(&e.value)).map(|v| Some(Expect::Value(v)))
    }
}

fn valid_var(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "L"
        && s != "T"
}

fn shift(e: &Entry, err: Error, col: usize) -> Error {
    match err {
        Error::Parse { column, message, .. } => Error::Parse { line: e.line, column: e.column + col + column - 2, message },
        other => other,
    }
}

/// Comma-separated items with their 1-based columns.
fn items(text: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for part in text.split(',') {
        let lead = part.len() - part.trim_start().len();
        let col = text[..start + lead].chars().count() + 1;
        out.push((part.trim(), col));
        start += part.len() + 1;
    }
    if out.len() == 1 && out[0].0.is_empty() {
        out.clear();
    }
    out
}

fn uint_at<T: TryFrom<u64>>(text: &str, col: usize) -> Result<T> {
    text.parse::<u64>()
        .ok()
        .filter(|_| text.chars().all(|c| c.is_ascii_digit()))
        .and_then(|n| T::try_from(n).ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            column: col,
            message: format!("`{text}` is not a nonnegative integer in range"),
        })
}

enum RatError {
    Parse(Error),
    ZeroDenominator,
}

fn is_rational_literal(text: &str) -> bool {
    let t = text.trim();
    let t = t.strip_prefix('-').unwrap_or(t);
    let (n, d) = t.split_once('/').unwrap_or((t, "1"));
    let digits = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    digits(n.trim()) && digits(d.trim())
}

fn rational_at(text: &str, col: usize) -> std::result::Result<BigRational, RatError> {
    let lead = text.len() - text.trim_start().len();
    if !is_rational_literal(text) {
        return Err(RatError::Parse(Error::Parse {
            line: 1,
            column: col + lead,
            message: format!("`{}` is not a rational `p` or `p/q`", text.trim()),
        }));
    }
    let t = text.trim();
    let (n, d) = t.split_once('/').unwrap_or((t, "1"));
    let n: BigInt = n.trim().parse().expect("checked digits");
    let d: BigInt = d.trim().parse().expect("checked digits");
    if d.is_zero() {
        return Err(RatError::ZeroDenominator);
    }
    Ok(BigRational::new(n, d))
}

fn one_based(set: &[usize]) -> String {
    set.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(", ")
}

fn build(fields: &mut Fields, kind: &str, cap: u32) -> Result<Payload> {
    Ok(match kind {
        "limit" => Payload::Limit(fields.req_series("series")?),
        "hadamard" => {
            let a = fields.req_series("a")?;
            let b = fields.req_series("b")?;
            Payload::Hadamard { a, b, coefficients: fields.coefficients(cap)? }
        }
        "nearby" => Payload::Nearby(fields.datum()?),
        "volume_series" => {
            let datum = fields.datum()?;
            Payload::VolumeSeries { datum, coefficients: fields.coefficients(cap)? }
        }
        "am_sum" => {
            let polyhedron = fields.polyhedron()?;
            let m = fields.req_uint("m")?;
            if m == 0 {
                return Err(fields.invalid("m", "must be positive"));
            }
            let weight = match fields.opt("weight")? {
                Some(e) => {
                    let linear = fields.vector(e, &e.value, 1)?;
                    if linear.len() != polyhedron.dim() {
                        return Err(fields.invalid("weight", "length differs from dim"));
                    }
                    let constant = match fields.opt("weight_constant")? {
                        Some(c) => fields.rational(c, &c.value, 1)?,
                        None => BigRational::zero(),
                    };
                    Some(Affine { linear, constant })
                }
                None => None,
            };
            Payload::AmSum { polyhedron, m, weight }
        }
        "euler" => Payload::Euler(fields.polyhedron()?),
        "arc_count" => Payload::ArcCount(fields.arc_task()?),
        "count_set" => {
            let task = fields.arc_task()?;
            let blocks = fields.blocks(task.f.dim())?;
            let predicate = match fields.opt("predicate")? {
                Some(e) => fields.with(e, Predicate::parse(&e.value))?,
                None => Predicate::True,
            };
            let spec = SetSpec { task, blocks, predicate };
            fields.validated(spec.validate())?;
            Payload::CountSet(spec)
        }
        "zeta" => {
            let f = fields.polynomial()?;
            let qf = fields.req_uint("qf")?;
            let levels: Vec<u32> = fields.req_uint_list("levels")?;
            let base = fields.base(f.dim())?;
            let basis = fields.basis("basis")?;
            for &m in &levels {
                let t = ArcTask { base: base.clone(), ..ArcTask::exact(f.clone(), m, m + 1, qf) };
                fields.validated(t.validate())?;
            }
            Payload::Zeta(ZetaTask { f, qf, levels, base, basis })
        }
        "check_termwise" => Payload::CheckTermwise(fields.instance()?),
        "check_identity" => Payload::CheckIdentity(fields.identity()?),
        "property" => {
            let e = fields.req("property")?;
            let property = Property::from_name(&e.value).ok_or_else(|| {
                fields.invalid("property", format!("unknown property `{}`", e.value))
            })?;
            let cases = match fields.opt("cases")? {
                Some(e) => fields.uint(e)?,
                None => property.default_cases(),
            };
            Payload::Property { property, cases }
        }
        "standard_volume" => {
            let mut out = Vec::new();
            for e in fields.all("factor") {
                out.push(factor(fields, e)?);
            }
            if out.is_empty() {
                return Err(fields.invalid("factor", "missing"));
            }
            Payload::StandardVolume(out)
        }
        other => return Err(fields.invalid("kind", format!("unknown kind `{other}`"))),
    })
}

fn factor(fields: &Fields, e: &Entry) -> Result<DomainFactor> {
    let (word, arg) = e.value.split_once(' ').unwrap_or((e.value.as_str(), ""));
    let col = word.len() + 2;
    let n = |fields: &Fields| fields.with(e, uint_at::<u32>(arg.trim(), col));
    match word {
        "closed" => Ok(DomainFactor::ClosedPolydisc(n(fields)?)),
        "open" => Ok(DomainFactor::OpenPolydisc(n(fields)?)),
        "punctured" => Ok(DomainFactor::PuncturedClosedPolydisc(n(fields)?)),
        "annulus" => {
            let (p, q) = arg.trim().split_once('/').unwrap_or((arg.trim(), "1"));
            let p = fields.with(e, uint_at::<u32>(p.trim(), col))?;
            let q = fields.with(e, uint_at::<u32>(q.trim(), col))?;
            if p == 0 || q == 0 || num_integer::gcd(p, q) != 1 {
                return Err(fields.invalid("factor", "annulus modulus must be p/q > 0 in lowest terms"));
            }
            Ok(DomainFactor::Annulus(p, q))
        }
        _ => Err(e.locate(Error::Parse {
            line: 1,
            column: 1,
            message: "expected `closed N`, `open N`, `punctured N` or `annulus P/Q`".into(),
        })),
    }
}

pub fn parse_taskfile(text: &str) -> std::result::Result<TaskFile, Vec<Error>> {
    let (header, blocks) = split_lines(text)?;
    let mut errors = Vec::new();
    let mut tf = TaskFile {
        version: VERSION,
        seed: 0,
        budget: DEFAULT_BUDGET,
        coefficient_cap: DEFAULT_COEFFICIENT_CAP,
        tasks: Vec::new(),
    };
    let mut settings = Fields::new("", &header);
    let setting = |key: &str, fields: &mut Fields| -> Result<Option<u64>> {
        match fields.opt(key)? {
            Some(e) => fields.uint(e).map(Some),
            None => Ok(None),
        }
    };
    match setting("version", &mut settings) {
        Ok(Some(v)) if v == VERSION as u64 => {}
        Ok(Some(v)) => errors.push(settings.invalid("version", format!("unsupported version {v}"))),
        Ok(None) => errors.push(settings.invalid("version", "missing")),
        Err(e) => errors.push(e),
    }
    match setting("seed", &mut settings) {
        Ok(v) => tf.seed = v.unwrap_or(0),
        Err(e) => errors.push(e),
    }
    match setting("budget", &mut settings) {
        Ok(v) => tf.budget = v.unwrap_or(DEFAULT_BUDGET),
        Err(e) => errors.push(e),
    }
    match setting("coefficient_cap", &mut settings) {
        Ok(v) => tf.coefficient_cap = v.map_or(DEFAULT_COEFFICIENT_CAP, |v| v.min(u32::MAX as u64) as u32),
        Err(e) => errors.push(e),
    }
    if let Err(e) = settings.finish() {
        errors.push(e);
    }
    for block in &blocks {
        let mut fields = Fields::new(&block.name, &block.entries);
        let task = (|| {
            let kind = fields.req("kind")?.value.clone();
            let payload = build(&mut fields, &kind, tf.coefficient_cap)?;
            let expect = fields.expect(&kind)?;
            fields.finish()?;
            Ok(Task { name: block.name.clone(), payload, expect })
        })();
        match task {
            Ok(t) => tf.tasks.push(t),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(tf)
    } else {
        Err(errors)
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub(crate) fn gens_text(g: &[Generator]) -> String {
    g.iter().map(ToString::to_string).collect::<Vec<_>>().join("*")
}

fn target_text(t: &Target) -> String {
    match t {
        Target::ExactTm => "exact".into(),
        Target::RvT => "rv".into(),
        Target::OrdRange { lo, hi } => format!("ord {lo}..{}", hi.map(|h| h.to_string()).unwrap_or_default()),
    }
}

type Lines = Vec<(String, String)>;

fn push(out: &mut Lines, key: &str, value: impl ToString) {
    out.push((key.into(), value.to_string()));
}

fn poly_lines(out: &mut Lines, f: &IntPolynomial) {
    push(out, "vars", f.vars().join(", "));
    push(out, "f", f);
}

fn polyhedron_lines(out: &mut Lines, p: &Polyhedron) {
    push(out, "dim", p.dim());
    for c in p.constraints() {
        push(out, "constraint", c);
    }
}

fn datum_lines(out: &mut Lines, res: &ResolutionDatum) {
    for c in &res.components {
        push(out, "component", format!("{}, {}", c.n, c.alpha));
    }
    push(out, "reldim", res.reldim);
    for (set, s) in &res.strata {
        push(out, "stratum", format!("{} : {}", one_based(set), s.motive));
    }
}

fn arc_lines(out: &mut Lines, t: &ArcTask) {
    poly_lines(out, &t.f);
    push(out, "m", t.m);
    push(out, "trunc", t.trunc);
    push(out, "qf", t.qf);
    push(out, "base", t.base.iter().map(|b| b.name()).collect::<Vec<_>>().join(", "));
    if let Some(o) = &t.origin {
        push(out, "origin", join(o));
    }
    push(out, "target", target_text(&t.target));
}

fn basis_lines(out: &mut Lines, key: &str, basis: &Option<Vec<Vec<Generator>>>) {
    for g in basis.iter().flatten() {
        push(out, key, gens_text(g));
    }
}

fn instance_lines(out: &mut Lines, inst: &IdentityInstance) {
    poly_lines(out, &inst.f);
    let b = inst.blocks;
    push(out, "blocks", format!("{}, {}, {}", b.x, b.y, b.z));
    push(out, "levels", join(&inst.levels));
    push(out, "fields", join(&inst.fields));
}

/// The canonical `key = value` lines of a task, `kind` first.
pub fn task_lines(task: &Task) -> Vec<(String, String)> {
    let mut out = Vec::new();
    push(&mut out, "kind", task.payload.kind());
    match &task.payload {
        Payload::Zeta(z) => {
            poly_lines(&mut out, &z.f);
            push(&mut out, "qf", z.qf);
            push(&mut out, "levels", join(&z.levels));
            push(&mut out, "base", z.base.iter().map(|b| b.name()).collect::<Vec<_>>().join(", "));
            basis_lines(&mut out, "basis", &z.basis);
        }
        Payload::Nearby(res) => datum_lines(&mut out, res),
        Payload::VolumeSeries { datum, coefficients } => {
            datum_lines(&mut out, datum);
            if *coefficients > 0 {
                push(&mut out, "coefficients", coefficients);
            }
        }
        Payload::AmSum { polyhedron, m, weight } => {
            polyhedron_lines(&mut out, polyhedron);
            push(&mut out, "m", m);
            if let Some(w) = weight {
                push(&mut out, "weight", format!("[{}]", join(&w.linear)));
                if !w.constant.is_zero() {
                    push(&mut out, "weight_constant", &w.constant);
                }
            }
        }
        Payload::Euler(p) => polyhedron_lines(&mut out, p),
        Payload::Limit(s) => push(&mut out, "series", s),
        Payload::Hadamard { a, b, coefficients } => {
            push(&mut out, "a", a);
            push(&mut out, "b", b);
            if *coefficients > 0 {
                push(&mut out, "coefficients", coefficients);
            }
        }
        Payload::ArcCount(t) => arc_lines(&mut out, t),
        Payload::CountSet(spec) => {
            arc_lines(&mut out, &spec.task);
            let b = spec.blocks;
            push(&mut out, "blocks", format!("{}, {}, {}", b.x, b.y, b.z));
            push(&mut out, "predicate", &spec.predicate);
        }
        Payload::CheckTermwise(inst) => instance_lines(&mut out, inst),
        Payload::CheckIdentity(inst) => {
            instance_lines(&mut out, inst);
            push(&mut out, "fit_levels", join(&inst.fit_levels));
            basis_lines(&mut out, "basis", &inst.basis_hint);
            basis_lines(&mut out, "rhs_basis", &inst.rhs_basis);
            basis_lines(&mut out, "x1_basis", &inst.x1_basis);
            if let RhsRoute::Resolution(res) = &inst.rhs_route {
                datum_lines(&mut out, res);
            }
        }
        Payload::Property { property, cases } => {
            push(&mut out, "property", property.name());
            push(&mut out, "cases", cases);
        }
        Payload::StandardVolume(fs) => {
            for f in fs {
                let v = match f {
                    DomainFactor::ClosedPolydisc(n) => format!("closed {n}"),
                    DomainFactor::OpenPolydisc(n) => format!("open {n}"),
                    DomainFactor::PuncturedClosedPolydisc(n) => format!("punctured {n}"),
                    DomainFactor::Annulus(p, q) => format!("annulus {p}/{q}"),
                };
                push(&mut out, "factor", v);
            }
        }
    }
    if let Some(e) = &task.expect {
        push(&mut out, "expect", e);
    }
    out
}

impl TaskFile {
    /// Lowers the coefficient cap, reporting tasks that ask for more.
    pub fn set_coefficient_cap(&mut self, cap: u32) -> std::result::Result<(), Vec<Error>> {
        self.coefficient_cap = cap;
        let errors: Vec<Error> = self
            .tasks
            .iter()
            .filter_map(|t| match t.payload {
                Payload::Hadamard { coefficients, .. } | Payload::VolumeSeries { coefficients, .. }
                    if coefficients > cap =>
                {
                    Some(Error::Validation {
                        task: t.name.clone(),
                        field: "coefficients".into(),
                        message: format!("{coefficients} exceeds the cap {cap}"),
                    })
                }
                _ => None,
            })
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

/// Canonical text; `parse_taskfile(&to_text(tf)) == Ok(tf)`.
pub fn to_text(tf: &TaskFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "version = {}", tf.version);
    let _ = writeln!(s, "seed = {}", tf.seed);
    if tf.budget != DEFAULT_BUDGET {
        let _ = writeln!(s, "budget = {}", tf.budget);
    }
    if tf.coefficient_cap != DEFAULT_COEFFICIENT_CAP {
        let _ = writeln!(s, "coefficient_cap = {}", tf.coefficient_cap);
    }
    for task in &tf.tasks {
        let _ = writeln!(s, "\n[task {}]", task.name);
        for (k, v) in task_lines(task) {
            let _ = writeln!(s, "{k} = {v}");
        }
    }
    s
}

/// Canonical keys per kind, in order; used by tests to spot stale docs.
pub fn field_names() -> BTreeMap<&'static str, &'static [&'static str]> {
    BTreeMap::from([
        ("limit", &["series"][..]),
        ("hadamard", &["a", "b", "coefficients"][..]),
        ("nearby", &["component", "reldim", "stratum"][..]),
        ("volume_series", &["component", "reldim", "stratum", "coefficients"][..]),
        ("am_sum", &["dim", "constraint", "m", "weight", "weight_constant"][..]),
        ("euler", &["dim", "constraint"][..]),
        ("arc_count", &["vars", "f", "m", "trunc", "qf", "base", "origin", "target"][..]),
        ("count_set", &["vars", "f", "m", "trunc", "qf", "base", "origin", "target", "blocks", "predicate"][..]),
        ("zeta", &["vars", "f", "qf", "levels", "base", "basis"][..]),
        ("check_termwise", &["vars", "f", "blocks", "levels", "fields"][..]),
        (
            "check_identity",
            &["vars", "f", "blocks", "levels", "fields", "fit_levels", "basis", "rhs_basis", "x1_basis", "component", "reldim", "stratum"][..],
        ),
        ("property", &["property", "cases"][..]),
        ("standard_volume", &["factor"][..]),
    ])
}
