//! Seeded randomized property checks: limit axioms, Hadamard products,
//! Denef–Loeser limit consistency and the Euler characteristic.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gamma::{a_m_sum, euler_char, Constraint, Polyhedron, Relation};
use crate::gring::{LaurentPoly, LocalizedMotive};
use crate::nearby::{motivic_volume, nearby_cycles, Component, ResolutionDatum};
use crate::series::{gen, Generator, RationalSeries, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    LimitAxioms,
    Hadamard,
    DlConsistency,
    Euler,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::LimitAxioms,
        Property::Hadamard,
        Property::DlConsistency,
        Property::Euler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::LimitAxioms => "limit_axioms",
            Property::Hadamard => "hadamard",
            Property::DlConsistency => "dl_consistency",
            Property::Euler => "euler",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn default_cases(self) -> usize {
        match self {
            Property::LimitAxioms => 20,
            Property::Hadamard => 50,
            Property::DlConsistency => 100,
            Property::Euler => 50,
        }
    }

    pub fn run(self, seed: u64, cases: usize) -> PropReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = Vec::new();
        for case in 0..cases {
            let outcome = match self {
                Property::LimitAxioms => limit_case(&mut rng),
                Property::Hadamard => hadamard_case(&mut rng),
                Property::DlConsistency => dl_case(&mut rng),
                Property::Euler => euler_case(&mut rng),
            };
            if let Err(msg) = outcome {
                failures.push(format!("case {case}: {msg}"));
            }
        }
        PropReport { property: self, seed, cases, failures }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropReport {
    pub property: Property,
    pub seed: u64,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl PropReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

type Outcome = std::result::Result<(), String>;

fn motive(rng: &mut ChaCha8Rng) -> LocalizedMotive {
    let mut num = LaurentPoly::zero();
    for _ in 0..rng.gen_range(1..=2) {
        num = &num + &LaurentPoly::monomial(rng.gen_range(-2..=2), rng.gen_range(-3..=3));
    }
    if num.is_zero() {
        num = LaurentPoly::one();
    }
    let den = if rng.gen_bool(0.3) { vec![rng.gen_range(1..=3)] } else { Vec::new() };
    LocalizedMotive::new(num, den).expect("nonzero factors")
}

fn generator(rng: &mut ChaCha8Rng, max_i: u32) -> Generator {
    gen(rng.gen_range(-6..=6), rng.gen_range(1..=max_i))
}

/// Constant plus single generators and products of up to three.
fn limit_series(rng: &mut ChaCha8Rng) -> RationalSeries {
    let mut s = RationalSeries::constant(motive(rng));
    for _ in 0..rng.gen_range(1..=3) {
        let k = rng.gen_range(1..=3);
        let gens = (0..k).map(|_| generator(rng, 4)).collect();
        s = &s + &RationalSeries::from_term(Term::product(gens), motive(rng));
    }
    s
}

fn limit_case(rng: &mut ChaCha8Rng) -> Outcome {
    let g = generator(rng, 8);
    let lim = RationalSeries::generator(g).limit().map_err(|e| e.to_string())?;
    if lim != LocalizedMotive::from_int(-1) {
        return Err(format!("lim {g} = {lim}"));
    }
    let (a, b) = (limit_series(rng), limit_series(rng));
    let (ca, cb) = (motive(rng), motive(rng));
    let combo = &a.scale(&ca) + &b.scale(&cb);
    let lhs = combo.limit().map_err(|e| e.to_string())?;
    let la = a.limit().map_err(|e| e.to_string())?;
    let lb = b.limit().map_err(|e| e.to_string())?;
    let rhs = &(&ca * &la) + &(&cb * &lb);
    if lhs != rhs {
        return Err(format!("linearity fails for {a} and {b}"));
    }
    Ok(())
}

fn single_combination(rng: &mut ChaCha8Rng) -> RationalSeries {
    let mut s = RationalSeries::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let t = Term::product(vec![generator(rng, 5)]);
        s = &s + &RationalSeries::from_term(t, motive(rng));
    }
    s
}

fn hadamard_case(rng: &mut ChaCha8Rng) -> Outcome {
    let a = single_combination(rng);
    let b = single_combination(rng);
    let h = a.hadamard(&b).map_err(|e| e.to_string())?;
    for m in 1..=20 {
        if h.coefficient(m) != &a.coefficient(m) * &b.coefficient(m) {
            return Err(format!("coefficient {m} of had({a}, {b})"));
        }
    }
    let lim = |s: &RationalSeries| s.limit().map_err(|e| e.to_string());
    if lim(&h)? != -(&lim(&a)? * &lim(&b)?) {
        return Err(format!("lim had({a}, {b}) != -lim A lim B"));
    }
    Ok(())
}

fn datum(rng: &mut ChaCha8Rng) -> ResolutionDatum {
    let k = rng.gen_range(1..=3usize);
    let components = (0..k)
        .map(|_| Component { n: rng.gen_range(1..=4), alpha: rng.gen_range(1..=3) })
        .collect();
    let mut res = ResolutionDatum::new(components, rng.gen_range(0..=3));
    for mask in 1..(1u32 << k) {
        if rng.gen_bool(0.7) {
            let set: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            res = res.with_stratum(&set, motive(rng));
        }
    }
    res
}

fn dl_case(rng: &mut ChaCha8Rng) -> Outcome {
    let res = datum(rng);
    let lhs = motivic_volume(&res).map_err(|e| e.to_string())?;
    let rhs = &LocalizedMotive::l_pow(-(res.reldim as i64)) * &nearby_cycles(&res);
    if lhs != rhs {
        return Err(format!("-lim volume = {lhs}, L^-d S = {rhs} for {res:?}"));
    }
    Ok(())
}

fn rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(rng.gen_range(-6..=6).into(), rng.gen_range(1..=2).into())
}

fn relation(rng: &mut ChaCha8Rng) -> Relation {
    match rng.gen_range(0..5) {
        0 => Relation::Eq,
        1 | 2 => Relation::Gt,
        _ => Relation::Ge,
    }
}

fn constraint(rng: &mut ChaCha8Rng, dim: usize) -> Constraint {
    let coeffs = (0..dim)
        .map(|_| BigRational::from_integer(rng.gen_range(-2..=2).into()))
        .collect();
    Constraint::new(coeffs, relation(rng), rational(rng))
}

fn polyhedron(rng: &mut ChaCha8Rng, dim: usize) -> Polyhedron {
    let cs = (0..rng.gen_range(0..=4)).map(|_| constraint(rng, dim)).collect();
    Polyhedron::new(dim, cs).expect("matching dimensions")
}

/// A polyhedron inside the box `[-3, 3]^dim`.
fn bounded(rng: &mut ChaCha8Rng, dim: usize) -> Polyhedron {
    let mut p = polyhedron(rng, dim);
    for k in 0..dim {
        let mut up = vec![BigRational::from_integer(0.into()); dim];
        up[k] = BigRational::from_integer((-1).into());
        let down: Vec<BigRational> = up.iter().map(|x| -x).collect();
        let three = BigRational::from_integer(3.into());
        p = p.with_constraint(Constraint::new(up, Relation::Ge, -three.clone())).unwrap();
        p = p.with_constraint(Constraint::new(down, Relation::Ge, -three)).unwrap();
    }
    p
}

/// Splits by a random hyperplane into `h > c`, `h = c`, `h < c`.
fn split(rng: &mut ChaCha8Rng, p: &Polyhedron) -> [Polyhedron; 3] {
    let dim = p.dim();
    let mut h = constraint(rng, dim);
    if h.coeffs.iter().all(|c| *c == BigRational::from_integer(0.into())) {
        h.coeffs[0] = BigRational::from_integer(1.into());
    }
    let neg: Vec<BigRational> = h.coeffs.iter().map(|x| -x).collect();
    let with = |c: Constraint| p.with_constraint(c).unwrap();
    [
        with(Constraint::new(h.coeffs.clone(), Relation::Gt, h.bound.clone())),
        with(Constraint::new(h.coeffs.clone(), Relation::Eq, h.bound.clone())),
        with(Constraint::new(neg, Relation::Gt, -h.bound.clone())),
    ]
}

fn euler_case(rng: &mut ChaCha8Rng) -> Outcome {
    let dim = rng.gen_range(1..=2);
    let p = polyhedron(rng, dim);
    let chi = |p: &Polyhedron| euler_char(p).map_err(|e| e.to_string());
    let parts = split(rng, &p);
    let sum: i64 = parts.iter().map(chi).sum::<std::result::Result<i64, _>>()?;
    if chi(&p)? != sum {
        return Err(format!("additivity fails for {p:?}"));
    }
    let q = polyhedron(rng, 1);
    if chi(&p.product(&q))? != chi(&p)? * chi(&q)? {
        return Err(format!("multiplicativity fails for {p:?} x {q:?}"));
    }
    let b = bounded(rng, dim);
    let m = rng.gen_range(1..=3);
    let am = |p: &Polyhedron| a_m_sum(p, m).map_err(|e| e.to_string());
    let pieces = split(rng, &b);
    let mut total = LocalizedMotive::zero();
    for piece in &pieces {
        total = &total + &am(piece)?;
    }
    if am(&b)? != total {
        return Err(format!("a_{m} additivity fails for {b:?}"));
    }
    Ok(())
}
