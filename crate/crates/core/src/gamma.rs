//! Definable Γ-sets as rational polyhedra: lattice enumeration, the
//! summation morphisms `a_m` and their graded variant, the o-minimal Euler
//! characteristic and integration against it.
//!
//! Feasibility, projections and implicit equalities are all decided by exact
//! Fourier–Motzkin elimination, which keeps strict and weak inequalities
//! apart. That is plenty for the dimensions handled here (n <= 4).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::gring::{LaurentPoly, LocalizedMotive};

type Q = BigRational;

/// Largest ambient dimension accepted by [`euler_char`].
pub const MAX_EULER_DIM: usize = 3;
/// Largest number of inequality constraints the face enumeration accepts.
const MAX_FACE_CONSTRAINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Ge,
    Gt,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "=",
        }
    }
}

/// `coeffs · γ rel bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub bound: Q,
    pub rel: Relation,
}

impl Constraint {
    pub fn new(coeffs: Vec<Q>, rel: Relation, bound: Q) -> Self {
        Self { coeffs, bound, rel }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}] {} {}", cs.join(", "), self.rel.symbol(), self.bound)
    }
}

/// Conjunction of linear constraints in `Q^dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polyhedron {
    dim: usize,
    constraints: Vec<Constraint>,
}

/// Affine form `a · x + c` with a relation against zero.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Form {
    a: Vec<Q>,
    c: Q,
    rel: Relation,
}

/// Closed or open endpoint of an interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub value: Q,
    pub strict: bool,
}

/// Projection of a polyhedron onto one coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<Endpoint>,
    pub hi: Option<Endpoint>,
}

impl Polyhedron {
    pub fn new(dim: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if let Some(c) = constraints.iter().find(|c| c.coeffs.len() != dim) {
            return Err(Error::Invalid(format!(
                "constraint {c} has {} coefficients, expected {dim}",
                c.coeffs.len()
            )));
        }
        Ok(Self { dim, constraints })
    }

    /// The whole space `Q^dim`.
    pub fn universe(dim: usize) -> Self {
        Self { dim, constraints: Vec::new() }
    }

    /// Single point.
    pub fn point(coords: &[Q]) -> Self {
        let dim = coords.len();
        let constraints = coords
            .iter()
            .enumerate()
            .map(|(k, v)| Constraint::new(unit(dim, k), Relation::Eq, v.clone()))
            .collect();
        Self { dim, constraints }
    }

    /// One-dimensional interval; `None` ends are unbounded.
    pub fn interval(lo: Option<(Q, bool)>, hi: Option<(Q, bool)>) -> Self {
        let mut cs = Vec::new();
        if let Some((v, strict)) = lo {
            cs.push(Constraint::new(
                vec![Q::one()],
                if strict { Relation::Gt } else { Relation::Ge },
                v,
            ));
        }
        if let Some((v, strict)) = hi {
            cs.push(Constraint::new(
                vec![-Q::one()],
                if strict { Relation::Gt } else { Relation::Ge },
                -v,
            ));
        }
        Self { dim: 1, constraints: cs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn intersect(&self, other: &Polyhedron) -> Result<Polyhedron> {
        if self.dim != other.dim {
            return Err(Error::Invalid("intersecting polyhedra of different dimension".into()));
        }
        let mut cs = self.constraints.clone();
        cs.extend(other.constraints.iter().cloned());
        Ok(Polyhedron { dim: self.dim, constraints: cs })
    }

    pub fn with_constraint(&self, c: Constraint) -> Result<Polyhedron> {
        Polyhedron::new(self.dim, {
            let mut cs = self.constraints.clone();
            cs.push(c);
            cs
        })
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &Polyhedron) -> Polyhedron {
        let dim = self.dim + other.dim;
        let mut cs = Vec::new();
        for c in &self.constraints {
            let mut coeffs = c.coeffs.clone();
            coeffs.resize(dim, Q::zero());
            cs.push(Constraint::new(coeffs, c.rel, c.bound.clone()));
        }
        for c in &other.constraints {
            let mut coeffs = vec![Q::zero(); self.dim];
            coeffs.extend(c.coeffs.iter().cloned());
            cs.push(Constraint::new(coeffs, c.rel, c.bound.clone()));
        }
        Polyhedron { dim, constraints: cs }
    }

    fn forms(&self) -> Vec<Form> {
        self.constraints
            .iter()
            .map(|c| Form {
                a: c.coeffs.clone(),
                c: -c.bound.clone(),
                rel: c.rel,
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        !feasible(self.forms(), self.dim)
    }

    /// Range of coordinate `k` over the polyhedron; `None` when empty.
    pub fn coordinate_range(&self, k: usize) -> Option<Interval> {
        coordinate_range(self.forms(), self.dim, k)
    }

    /// True when every coordinate has a finite infimum and supremum.
    pub fn is_bounded(&self) -> bool {
        (0..self.dim).all(|k| match self.coordinate_range(k) {
            None => true,
            Some(iv) => iv.lo.is_some() && iv.hi.is_some(),
        })
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.constraints.iter().all(|c| {
            let v: Q = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            match c.rel {
                Relation::Ge => v >= c.bound,
                Relation::Gt => v > c.bound,
                Relation::Eq => v == c.bound,
            }
        })
    }
}

fn unit(dim: usize, k: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); dim];
    v[k] = Q::one();
    v
}

/// `Some(None)`: trivially true, dropped. `None`: contradiction.
fn normalize(mut f: Form) -> Option<Option<Form>> {
    let Some(lead) = f.a.iter().find(|x| !x.is_zero()).cloned() else {
        let ok = match f.rel {
            Relation::Ge => !f.c.is_negative(),
            Relation::Gt => f.c.is_positive(),
            Relation::Eq => f.c.is_zero(),
        };
        return ok.then_some(None);
    };
    let scale = if f.rel == Relation::Eq {
        lead.recip()
    } else {
        lead.abs().recip()
    };
    for x in f.a.iter_mut() {
        *x = &*x * &scale;
    }
    f.c = &f.c * &scale;
    Some(Some(f))
}

fn tidy(forms: Vec<Form>) -> Option<Vec<Form>> {
    let mut out = Vec::with_capacity(forms.len());
    for f in forms {
        if let Some(f) = normalize(f)? {
            out.push(f);
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}

/// Eliminates variable `k`; `None` if a contradiction surfaces.
fn eliminate(forms: Vec<Form>, k: usize) -> Option<Vec<Form>> {
    if let Some(pos) = forms
        .iter()
        .position(|f| f.rel == Relation::Eq && !f.a[k].is_zero())
    {
        let eq = forms[pos].clone();
        let out = forms
            .into_iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, mut f)| {
                if !f.a[k].is_zero() {
                    let r = &f.a[k] / &eq.a[k];
                    for (x, y) in f.a.iter_mut().zip(&eq.a) {
                        *x = &*x - &(&r * y);
                    }
                    f.c = &f.c - &(&r * &eq.c);
                }
                f
            })
            .collect();
        return tidy(out);
    }
    let (mut pos, mut neg, mut out) = (Vec::new(), Vec::new(), Vec::new());
    for f in forms {
        if f.a[k].is_positive() {
            pos.push(f);
        } else if f.a[k].is_negative() {
            neg.push(f);
        } else {
            out.push(f);
        }
    }
    for p in &pos {
        for n in &neg {
            let (wp, wn) = (-&n.a[k], p.a[k].clone());
            let a = p.a.iter().zip(&n.a).map(|(x, y)| x * &wp + y * &wn).collect();
            let c = &p.c * &wp + &n.c * &wn;
            let rel = if p.rel == Relation::Gt || n.rel == Relation::Gt {
                Relation::Gt
            } else {
                Relation::Ge
            };
            out.push(Form { a, c, rel });
        }
    }
    tidy(out)
}

fn feasible(forms: Vec<Form>, dim: usize) -> bool {
    let Some(mut sys) = tidy(forms) else {
        return false;
    };
    for k in 0..dim {
        match eliminate(sys, k) {
            Some(s) => sys = s,
            None => return false,
        }
    }
    true
}

fn coordinate_range(forms: Vec<Form>, dim: usize, k: usize) -> Option<Interval> {
    let mut sys = tidy(forms)?;
    for j in (0..dim).filter(|&j| j != k) {
        sys = eliminate(sys, j)?;
    }
    let mut lo: Option<Endpoint> = None;
    let mut hi: Option<Endpoint> = None;
    let tighten_lo = |lo: &mut Option<Endpoint>, e: Endpoint| match lo {
        Some(cur) if cur.value > e.value || (cur.value == e.value && cur.strict) => {}
        _ => *lo = Some(e),
    };
    let tighten_hi = |hi: &mut Option<Endpoint>, e: Endpoint| match hi {
        Some(cur) if cur.value < e.value || (cur.value == e.value && cur.strict) => {}
        _ => *hi = Some(e),
    };
    for f in sys {
        // After tidy, a[k] is +-1 (or 1 for equalities).
        let v = -&f.c / &f.a[k];
        let strict = f.rel == Relation::Gt;
        match f.rel {
            Relation::Eq => {
                tighten_lo(&mut lo, Endpoint { value: v.clone(), strict: false });
                tighten_hi(&mut hi, Endpoint { value: v, strict: false });
            }
            _ if f.a[k].is_positive() => tighten_lo(&mut lo, Endpoint { value: v, strict }),
            _ => tighten_hi(&mut hi, Endpoint { value: v, strict }),
        }
    }
    if let (Some(l), Some(h)) = (&lo, &hi) {
        if l.value > h.value || (l.value == h.value && (l.strict || h.strict)) {
            return None;
        }
    }
    Some(Interval { lo, hi })
}

fn substitute(forms: &[Form], k: usize, v: &Q) -> Vec<Form> {
    forms
        .iter()
        .map(|f| {
            let mut f = f.clone();
            f.c = &f.c + &(&f.a[k] * v);
            f.a[k] = Q::zero();
            f
        })
        .collect()
}

/// Integers `j` with `lo <= j/m <= hi` (respecting strictness).
fn lattice_range(iv: &Interval, m: u32) -> Option<(BigInt, BigInt)> {
    let m = Q::from_integer(m.into());
    let lo = iv.lo.as_ref()?;
    let hi = iv.hi.as_ref()?;
    let l = &lo.value * &m;
    let h = &hi.value * &m;
    let mut first = l.ceil().to_integer();
    if lo.strict && l.is_integer() {
        first += 1;
    }
    let mut last = h.floor().to_integer();
    if hi.strict && h.is_integer() {
        last -= 1;
    }
    Some((first, last))
}

/// All points of `p ∩ (1/m Z)^n`, in lexicographic order.
pub fn lattice_points(p: &Polyhedron, m: u32) -> Result<Vec<Vec<Q>>> {
    if m == 0 {
        return Err(Error::Invalid("lattice level m must be positive".into()));
    }
    if p.is_empty() {
        return Ok(Vec::new());
    }
    if !p.is_bounded() {
        return Err(Error::Unbounded("lattice enumeration needs a bounded set".into()));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(p.dim);
    enumerate(&p.forms(), p.dim, 0, m, &mut prefix, &mut out);
    Ok(out)
}

fn enumerate(forms: &[Form], dim: usize, k: usize, m: u32, prefix: &mut Vec<Q>, out: &mut Vec<Vec<Q>>) {
    if k == dim {
        if feasible(forms.to_vec(), dim) {
            out.push(prefix.clone());
        }
        return;
    }
    let Some(iv) = coordinate_range(forms.to_vec(), dim, k) else {
        return;
    };
    let (first, last) = lattice_range(&iv, m).expect("bounded fiber");
    let mq = Q::from_integer(m.into());
    let mut j = first;
    while j <= last {
        let v = Q::from_integer(j.clone()) / &mq;
        let sub = substitute(forms, k, &v);
        prefix.push(v);
        enumerate(&sub, dim, k + 1, m, prefix, out);
        prefix.pop();
        j += 1;
    }
}

/// Affine weight `linear · γ + constant`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Affine {
    pub linear: Vec<Q>,
    pub constant: Q,
}

impl Affine {
    pub fn zero(dim: usize) -> Self {
        Self { linear: vec![Q::zero(); dim], constant: Q::zero() }
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        self.linear.iter().zip(x).map(|(a, b)| a * b).sum::<Q>() + &self.constant
    }
}

/// `base` polytope in the first coordinates times the simplicial cone
/// `apex + {sum λ_i r_i}` in the remaining ones, with `λ_i > 0` for rays
/// flagged open and `λ_i >= 0` otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConePiece {
    pub base: Polyhedron,
    pub apex: Vec<Q>,
    pub rays: Vec<Vec<i64>>,
    pub open: Vec<bool>,
}

/// Internal normal form shared by all summation domains: lattice points of
/// the piece are `F ⊔ (F + N r_1 + ... + N r_k)` for the bounded
/// fundamental domain `F`.
#[derive(Clone, Debug)]
struct Tiled {
    dim: usize,
    fundamental: Polyhedron,
    rays: Vec<Vec<i64>>,
}

impl ConePiece {
    pub fn dim(&self) -> usize {
        self.base.dim + self.apex.len()
    }

    fn validate(&self) -> Result<Vec<Vec<Q>>> {
        let k = self.apex.len();
        if self.rays.len() != k || self.open.len() != k || self.rays.iter().any(|r| r.len() != k) {
            return Err(Error::UnsupportedShape(format!(
                "a simplicial cone in dimension {k} needs {k} rays of length {k}"
            )));
        }
        let mat: Vec<Vec<Q>> = self
            .rays
            .iter()
            .map(|r| r.iter().map(|&x| Q::from_integer(x.into())).collect())
            .collect();
        // Columns of R are the rays; invert R.
        let cols: Vec<Vec<Q>> = (0..k).map(|row| (0..k).map(|j| mat[j][row].clone()).collect()).collect();
        invert(&cols).ok_or_else(|| Error::UnsupportedShape("cone rays are linearly dependent".into()))
    }

    /// The piece as a polyhedron in its full dimension.
    pub fn to_polyhedron(&self) -> Result<Polyhedron> {
        let inv = self.validate()?;
        Ok(self.cone_polyhedron(&inv, false))
    }

    /// With `fundamental`, adds `λ_i < 1` (or `<= 1` for open rays).
    fn cone_polyhedron(&self, inv: &[Vec<Q>], fundamental: bool) -> Polyhedron {
        let nb = self.base.dim;
        let k = self.apex.len();
        let dim = nb + k;
        let mut cs: Vec<Constraint> = Vec::new();
        for c in &self.base.constraints {
            let mut coeffs = c.coeffs.clone();
            coeffs.resize(dim, Q::zero());
            cs.push(Constraint::new(coeffs, c.rel, c.bound.clone()));
        }
        for (i, row) in inv.iter().enumerate() {
            // λ_i = row · (x_C - apex)
            let mut coeffs = vec![Q::zero(); nb];
            coeffs.extend(row.iter().cloned());
            let shift: Q = row.iter().zip(&self.apex).map(|(a, b)| a * b).sum();
            let rel = if self.open[i] { Relation::Gt } else { Relation::Ge };
            cs.push(Constraint::new(coeffs.clone(), rel, shift.clone()));
            if fundamental {
                let neg: Vec<Q> = coeffs.iter().map(|x| -x).collect();
                let rel = if self.open[i] { Relation::Ge } else { Relation::Gt };
                cs.push(Constraint::new(neg, rel, -(shift + Q::one())));
            }
        }
        Polyhedron { dim, constraints: cs }
    }

    fn tiled(&self) -> Result<Tiled> {
        let inv = self.validate()?;
        if !self.base.is_bounded() {
            return Err(Error::Unbounded("cone piece base must be bounded".into()));
        }
        let nb = self.base.dim;
        let rays = self
            .rays
            .iter()
            .map(|r| {
                let mut v = vec![0; nb];
                v.extend_from_slice(r);
                v
            })
            .collect();
        Ok(Tiled {
            dim: self.dim(),
            fundamental: self.cone_polyhedron(&inv, true),
            rays,
        })
    }
}

fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend(unit(n, i));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        let piv = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &piv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &(&f * y);
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn rank(rows: &[Vec<Q>]) -> usize {
    let mut a = rows.to_vec();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..a.len() {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[r][c];
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x = &*x - &(&f * y);
                }
            }
        }
        r += 1;
    }
    r
}

/// Detects `bounded × prod [c_u, oo)` shapes (coordinate-aligned recession)
/// and tiles them; bounded polyhedra tile trivially.
fn tile_polyhedron(p: &Polyhedron) -> Result<Tiled> {
    let ranges: Vec<Interval> = (0..p.dim)
        .map(|k| p.coordinate_range(k).expect("nonempty"))
        .collect();
    if ranges.iter().any(|iv| iv.lo.is_none()) {
        return Err(Error::Unbounded("some coordinate is not bounded below".into()));
    }
    let unbounded: Vec<usize> = (0..p.dim).filter(|&k| ranges[k].hi.is_none()).collect();
    let mut fundamental = p.clone();
    for &u in &unbounded {
        let touches_others = p.constraints.iter().any(|c| {
            !c.coeffs[u].is_zero() && c.coeffs.iter().enumerate().any(|(j, x)| j != u && !x.is_zero())
        });
        if touches_others {
            return Err(Error::UnsupportedShape(format!(
                "coordinate {u} is unbounded but coupled to other coordinates; declare a cone piece"
            )));
        }
        let lo = ranges[u].lo.clone().unwrap();
        let mut coeffs = vec![Q::zero(); p.dim];
        coeffs[u] = -Q::one();
        let rel = if lo.strict { Relation::Ge } else { Relation::Gt };
        fundamental
            .constraints
            .push(Constraint::new(coeffs, rel, -(lo.value + Q::one())));
    }
    let rays = unbounded
        .iter()
        .map(|&u| {
            let mut r = vec![0i64; p.dim];
            r[u] = 1;
            r
        })
        .collect();
    Ok(Tiled { dim: p.dim, fundamental, rays })
}

/// `sum_{γ} [m·l(γ) ∈ N] L^{-m(|γ| + l(γ))} (L - 1)^n` over a tiled piece.
fn tiled_sum(t: &Tiled, m: u32, weight: &Affine) -> Result<LocalizedMotive> {
    let mq = Q::from_integer(m.into());
    let mut den_shift = Vec::new();
    for r in &t.rays {
        let size: i64 = r.iter().sum();
        if size <= 0 {
            return Err(Error::Unbounded(format!(
                "recession direction {r:?} has |r| <= 0; the sum diverges"
            )));
        }
        let along: Q = weight
            .linear
            .iter()
            .zip(r)
            .map(|(a, &x)| a * Q::from_integer(x.into()))
            .sum();
        if !along.is_zero() {
            return Err(Error::InfiniteGrading);
        }
        den_shift.push(size * m as i64);
    }
    let mut num = LaurentPoly::zero();
    for pt in lattice_points(&t.fundamental, m)? {
        let e = weight.eval(&pt);
        let me = &e * &mq;
        if !me.is_integer() || me.is_negative() {
            continue;
        }
        let size: Q = pt.iter().sum::<Q>() * &mq;
        let exp = -(size + me).to_integer();
        num = &num + &LaurentPoly::l_pow(i64::try_from(exp).map_err(|_| {
            Error::Invalid("lattice weight exponent overflows".into())
        })?);
    }
    let lminus1 = LaurentPoly::from_terms([(1, 1), (0, -1)]).pow(t.dim as u32);
    let mut value = LocalizedMotive::from_poly(&num * &lminus1);
    for a in den_shift {
        // 1/(1 - L^-a) = -L^a/(1 - L^a)
        let factor = LocalizedMotive::new(LaurentPoly::monomial(a, -1), vec![a as u32])?;
        value = &value * &factor;
    }
    Ok(value)
}

fn tiled_for(p: &Polyhedron) -> Result<Option<Tiled>> {
    if p.is_empty() {
        return Ok(None);
    }
    tile_polyhedron(p).map(Some)
}

/// `a_m(Δ) = sum_{γ ∈ Δ ∩ (1/m Z)^n} L^{-m|γ|} (L - 1)^n`. Bounded sets are
/// summed directly; sets bounded below whose unbounded coordinates are
/// decoupled (`bounded × prod [c, oo)`) are summed as geometric series.
pub fn a_m_sum(p: &Polyhedron, m: u32) -> Result<LocalizedMotive> {
    graded_a_m_sum(p, &Affine::zero(p.dim), m)
}

/// Graded variant: each point carries the extra weight `l(γ)`; points with
/// `m·l(γ) ∉ N` are dropped.
pub fn graded_a_m_sum(p: &Polyhedron, weight: &Affine, m: u32) -> Result<LocalizedMotive> {
    check_level(m)?;
    check_weight(weight, p.dim)?;
    match tiled_for(p)? {
        None => Ok(LocalizedMotive::zero()),
        Some(t) => tiled_sum(&t, m, weight),
    }
}

/// `a_m` over a disjoint union of explicitly declared cone pieces.
pub fn a_m_sum_pieces(pieces: &[ConePiece], m: u32) -> Result<LocalizedMotive> {
    let dim = pieces.first().map_or(0, |p| p.dim());
    graded_a_m_sum_pieces(pieces, &Affine::zero(dim), m)
}

pub fn graded_a_m_sum_pieces(
    pieces: &[ConePiece],
    weight: &Affine,
    m: u32,
) -> Result<LocalizedMotive> {
    check_level(m)?;
    let polys = pieces
        .iter()
        .map(ConePiece::to_polyhedron)
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = polys.first() {
        check_weight(weight, p.dim)?;
    }
    check_disjoint(&polys)?;
    let mut acc = LocalizedMotive::zero();
    for piece in pieces {
        acc = &acc + &tiled_sum(&piece.tiled()?, m, weight)?;
    }
    Ok(acc)
}

fn check_level(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::Invalid("level m must be positive".into()));
    }
    Ok(())
}

fn check_weight(w: &Affine, dim: usize) -> Result<()> {
    if w.linear.len() != dim {
        return Err(Error::Invalid(format!(
            "weight has {} coefficients, expected {dim}",
            w.linear.len()
        )));
    }
    Ok(())
}

fn check_disjoint(polys: &[Polyhedron]) -> Result<()> {
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            if !polys[i].intersect(&polys[j])?.is_empty() {
                return Err(Error::OverlappingPieces(i, j));
            }
        }
    }
    Ok(())
}

/// o-minimal Euler characteristic: the sum of `(-1)^dim F` over the
/// relatively open faces `F` of the closure that lie in the set.
///
/// Truth table on the line: point 1, open interval -1, closed interval 1,
/// half-open interval 0, open ray -1, closed ray 0, whole line -1.
pub fn euler_char(p: &Polyhedron) -> Result<i64> {
    if p.dim > MAX_EULER_DIM {
        return Err(Error::DimensionTooLarge(p.dim, MAX_EULER_DIM));
    }
    if p.is_empty() {
        return Ok(0);
    }
    let forms = tidy(p.forms()).expect("nonempty");
    let equalities: Vec<&Form> = forms.iter().filter(|f| f.rel == Relation::Eq).collect();
    let ineqs: Vec<&Form> = forms.iter().filter(|f| f.rel != Relation::Eq).collect();
    if ineqs.len() > MAX_FACE_CONSTRAINTS {
        return Err(Error::Invalid(format!(
            "{} inequalities exceed the face enumeration limit {MAX_FACE_CONSTRAINTS}",
            ineqs.len()
        )));
    }
    let closure = |tight: u32| -> Vec<Form> {
        let mut sys: Vec<Form> = equalities.iter().map(|f| (*f).clone()).collect();
        for (i, f) in ineqs.iter().enumerate() {
            let rel = if tight & (1 << i) != 0 { Relation::Eq } else { Relation::Ge };
            sys.push(Form { a: f.a.clone(), c: f.c.clone(), rel });
        }
        sys
    };
    let mut chi = 0i64;
    for tight in 0u32..(1 << ineqs.len()) {
        // Faces touching a strict constraint are outside the set.
        if ineqs
            .iter()
            .enumerate()
            .any(|(i, f)| tight & (1 << i) != 0 && f.rel == Relation::Gt)
        {
            continue;
        }
        let face = closure(tight);
        if !feasible(face.clone(), p.dim) {
            continue;
        }
        // Only count `tight` if it is exactly the face's set of implicit
        // equalities, so each face is visited once.
        let closed = ineqs.iter().enumerate().all(|(i, f)| {
            if tight & (1 << i) != 0 {
                return true;
            }
            let mut probe = face.clone();
            probe.push(Form { a: f.a.clone(), c: f.c.clone(), rel: Relation::Gt });
            feasible(probe, p.dim)
        });
        if !closed {
            continue;
        }
        let mut rows: Vec<Vec<Q>> = equalities.iter().map(|f| f.a.clone()).collect();
        rows.extend(
            ineqs
                .iter()
                .enumerate()
                .filter(|(i, _)| tight & (1 << i) != 0)
                .map(|(_, f)| f.a.clone()),
        );
        let dim = p.dim - rank(&rows);
        chi += if dim % 2 == 0 { 1 } else { -1 };
    }
    Ok(chi)
}

/// `sum_i c_i χ(Γ_i)` for a function constant on pairwise disjoint pieces.
pub fn integrate_dchi(pieces: &[(Polyhedron, LocalizedMotive)]) -> Result<LocalizedMotive> {
    if let Some((first, _)) = pieces.first() {
        if pieces.iter().any(|(p, _)| p.dim != first.dim) {
            return Err(Error::Invalid("pieces live in different dimensions".into()));
        }
    }
    let polys: Vec<Polyhedron> = pieces.iter().map(|(p, _)| p.clone()).collect();
    check_disjoint(&polys)?;
    let mut acc = LocalizedMotive::zero();
    for (p, c) in pieces {
        let chi = euler_char(p)?;
        acc = &acc + &(c * &LocalizedMotive::from_int(chi));
    }
    Ok(acc)
}

/// Exact rational from a pair, rejecting zero denominators.
pub fn rational(num: i64, den: i64) -> Result<Q> {
    if den == 0 {
        return Err(Error::Invalid(format!("{num}/0 has a zero denominator")));
    }
    Ok(Q::new(num.into(), den.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    fn qr(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn c(coeffs: &[i64], rel: Relation, b: i64) -> Constraint {
        Constraint::new(coeffs.iter().map(|&x| q(x)).collect(), rel, q(b))
    }

    fn lp(terms: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(terms.iter().copied())
    }

    fn closed_unit() -> Polyhedron {
        Polyhedron::interval(Some((q(0), false)), Some((q(1), false)))
    }

    #[test]
    fn lattice_examples() {
        let pts = lattice_points(&closed_unit(), 2).unwrap();
        assert_eq!(pts, vec![vec![q(0)], vec![qr(1, 2)], vec![q(1)]]);
        let open = Polyhedron::interval(Some((q(0), true)), Some((q(1), true)));
        assert!(lattice_points(&open, 1).unwrap().is_empty());
        let tri = Polyhedron::new(
            2,
            vec![
                c(&[1, 0], Relation::Ge, 0),
                c(&[0, 1], Relation::Ge, 0),
                c(&[-1, -1], Relation::Ge, -1),
            ],
        )
        .unwrap();
        // Brute force over the box [0,1]^2 at step 1/2.
        let mut brute = 0;
        for a in 0..=2 {
            for b in 0..=2 {
                if a + b <= 2 {
                    brute += 1;
                }
            }
        }
        assert_eq!(brute, 6);
        assert_eq!(lattice_points(&tri, 2).unwrap().len(), 6);
        let ray = Polyhedron::interval(Some((q(0), false)), None);
        assert!(matches!(lattice_points(&ray, 1), Err(Error::Unbounded(_))));
    }

    #[test]
    fn a_m_examples() {
        // Two points 0, 1: (L - 1)(1 + L^-1).
        let expected = &lp(&[(1, 1), (0, -1)]) * &lp(&[(0, 1), (-1, 1)]);
        assert_eq!(a_m_sum(&closed_unit(), 1).unwrap(), LocalizedMotive::from_poly(expected));
        for mm in 1..=4u32 {
            for i in 0..=6i64 {
                let p = Polyhedron::point(&[qr(i, mm as i64)]);
                assert_eq!(
                    a_m_sum(&p, mm).unwrap(),
                    LocalizedMotive::from_poly(lp(&[(1 - i, 1), (-i, -1)])),
                    "i = {i}, m = {mm}"
                );
            }
        }
        let ray = Polyhedron::interval(Some((q(0), false)), None);
        assert_eq!(a_m_sum(&ray, 1).unwrap(), LocalizedMotive::l_pow(1));
    }

    #[test]
    fn ray_sum_against_partial_sums() {
        // Partial sums of (q - 1) q^{-k} for k <= N, compared with the
        // closed form minus the explicit geometric remainder q^{-N}.
        let qq = q(3);
        let closed = a_m_sum(&Polyhedron::interval(Some((q(0), false)), None), 1)
            .unwrap()
            .specialize(&qq)
            .unwrap();
        for n in 0..=20 {
            let trunc = Polyhedron::interval(Some((q(0), false)), Some((q(n), false)));
            let partial = a_m_sum(&trunc, 1).unwrap().specialize(&qq).unwrap();
            let remainder = crate::gring::rat_pow(&qq, -(n + 1)) * &qq;
            assert_eq!(&closed - &partial, remainder, "N = {n}");
        }
    }

    #[test]
    fn open_ray_and_products() {
        // (0, oo) at m = 2: points 1/2, 1, ... => (L - 1) L^-1/(1 - L^-1) = 1.
        let open_ray = Polyhedron::interval(Some((q(0), true)), None);
        assert_eq!(a_m_sum(&open_ray, 2).unwrap(), LocalizedMotive::one());
        let square = closed_unit().product(&Polyhedron::interval(Some((q(2), false)), None));
        let direct = &a_m_sum(&closed_unit(), 1).unwrap()
            * &a_m_sum(&Polyhedron::interval(Some((q(2), false)), None), 1).unwrap();
        assert_eq!(a_m_sum(&square, 1).unwrap(), direct);
        let coupled = Polyhedron::new(
            2,
            vec![c(&[1, 0], Relation::Ge, 0), c(&[-1, 1], Relation::Ge, 0)],
        )
        .unwrap();
        assert!(matches!(a_m_sum(&coupled, 1), Err(Error::UnsupportedShape(_))));
        let line = Polyhedron::universe(1);
        assert!(matches!(a_m_sum(&line, 1), Err(Error::Unbounded(_))));
    }

    #[test]
    fn simplicial_cone_piece() {
        // {0 <= x <= y}: rays (0,1) and (1,1). Compare against a large
        // truncation specialized at q = 2.
        let piece = ConePiece {
            base: Polyhedron::universe(0),
            apex: vec![q(0), q(0)],
            rays: vec![vec![0, 1], vec![1, 1]],
            open: vec![false, false],
        };
        let closed = a_m_sum_pieces(std::slice::from_ref(&piece), 1).unwrap();
        let qq = q(2);
        let n = 40;
        let trunc = Polyhedron::new(
            2,
            vec![
                c(&[1, 0], Relation::Ge, 0),
                c(&[-1, 1], Relation::Ge, 0),
                c(&[0, -1], Relation::Ge, -n),
            ],
        )
        .unwrap();
        let partial = a_m_sum(&trunc, 1).unwrap().specialize(&qq).unwrap();
        let full = closed.specialize(&qq).unwrap();
        let diff = full - partial;
        assert!(diff.is_positive());
        assert!(diff < crate::gring::rat_pow(&qq, -(n - 2)));
        // Closed form: sum_{0<=x<=y} q^{-x-y} = 1/((1 - q^-1)(1 - q^-2)).
        let expect = q(1) / ((q(1) - qr(1, 2)) * (q(1) - qr(1, 4)));
        assert_eq!(closed.specialize(&qq).unwrap(), expect * q(1));
    }

    #[test]
    fn graded_examples() {
        let p = closed_unit();
        let zero = Affine::zero(1);
        assert_eq!(graded_a_m_sum(&p, &zero, 2).unwrap(), a_m_sum(&p, 2).unwrap());
        let half = Affine { linear: vec![q(0)], constant: qr(1, 2) };
        assert!(graded_a_m_sum(&Polyhedron::point(&[q(0)]), &half, 1).unwrap().is_zero());
        let id = Affine { linear: vec![q(1)], constant: q(0) };
        let expected = &lp(&[(1, 1), (0, -1)]) * &lp(&[(0, 1), (-2, 1)]);
        assert_eq!(graded_a_m_sum(&p, &id, 1).unwrap(), LocalizedMotive::from_poly(expected));
        let ray = Polyhedron::interval(Some((q(0), false)), None);
        assert!(matches!(graded_a_m_sum(&ray, &id, 1), Err(Error::InfiniteGrading)));
        let neg = Affine { linear: vec![q(0)], constant: q(-1) };
        assert!(graded_a_m_sum(&p, &neg, 1).unwrap().is_zero());
    }

    #[test]
    fn euler_truth_table() {
        let cases = [
            (Polyhedron::point(&[q(0)]), 1),
            (Polyhedron::interval(Some((q(0), true)), Some((q(1), true))), -1),
            (closed_unit(), 1),
            (Polyhedron::interval(Some((q(0), false)), Some((q(1), true))), 0),
            (Polyhedron::interval(Some((q(0), true)), None), -1),
            (Polyhedron::interval(Some((q(0), false)), None), 0),
            (Polyhedron::universe(1), -1),
            (Polyhedron::interval(Some((q(1), true)), Some((q(0), false))), 0),
        ];
        for (p, chi) in cases {
            assert_eq!(euler_char(&p).unwrap(), chi, "{p:?}");
        }
        let quadrant = Polyhedron::interval(Some((q(0), true)), None)
            .product(&Polyhedron::interval(Some((q(0), true)), None));
        assert_eq!(euler_char(&quadrant).unwrap(), 1);
        assert!(matches!(
            euler_char(&Polyhedron::universe(4)),
            Err(Error::DimensionTooLarge(4, 3))
        ));
    }

    #[test]
    fn euler_with_redundant_constraints() {
        // Closed triangle with a duplicated and a redundant facet.
        let tri = Polyhedron::new(
            2,
            vec![
                c(&[1, 0], Relation::Ge, 0),
                c(&[0, 1], Relation::Ge, 0),
                c(&[-1, -1], Relation::Ge, -1),
                c(&[-2, -2], Relation::Ge, -2),
                c(&[-1, 0], Relation::Ge, -5),
            ],
        )
        .unwrap();
        assert_eq!(euler_char(&tri).unwrap(), 1);
        // Only the open 2-face survives.
        let open = Polyhedron::new(
            2,
            vec![
                c(&[1, 0], Relation::Gt, 0),
                c(&[0, 1], Relation::Gt, 0),
                c(&[-1, -1], Relation::Gt, -1),
            ],
        )
        .unwrap();
        assert_eq!(euler_char(&open).unwrap(), 1);
    }

    #[test]
    fn integrate_examples() {
        let c1 = LocalizedMotive::from_int(3);
        let ray = Polyhedron::interval(Some((q(0), true)), None);
        assert_eq!(integrate_dchi(&[(ray, c1.clone())]).unwrap(), -&c1);
        let c2 = LocalizedMotive::l_pow(2);
        let c3 = LocalizedMotive::from_int(-7);
        let pieces = vec![
            (Polyhedron::point(&[q(0)]), c1.clone()),
            (Polyhedron::interval(Some((q(0), true)), Some((q(1), true))), c2.clone()),
            (Polyhedron::point(&[q(1)]), c3.clone()),
        ];
        assert_eq!(integrate_dchi(&pieces).unwrap(), &(&c1 - &c2) + &c3);
        let zeros = vec![(closed_unit(), LocalizedMotive::zero())];
        assert!(integrate_dchi(&zeros).unwrap().is_zero());
        let overlap = vec![
            (closed_unit(), c1.clone()),
            (Polyhedron::point(&[q(1)]), c1),
        ];
        assert!(matches!(integrate_dchi(&overlap), Err(Error::OverlappingPieces(0, 1))));
    }
}
