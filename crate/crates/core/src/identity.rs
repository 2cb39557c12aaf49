//! Desk-scale checks of the integral identity for `f(x, y, z)` invariant
//! under `(τx, τ^{-1}y, z)`: the decomposition `X = X_0 ⊔ X_1`, the
//! coefficientwise identities for the point counts, and the comparison of
//! the fitted series limits after specializing `L = q`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Pow, Zero};

use crate::arcs::{
    count_arcs, count_set, scale_count, weight_check, ArcTask, Base, Blocks, IntPolynomial,
    Predicate, SetSpec, Target,
};
use crate::error::{Error, Result};
use crate::gring::LocalizedMotive;
use crate::nearby::{motivic_volume, volume_series, ResolutionDatum};
use crate::series::{fit_specialized, gen, Generator, SpecializedFit};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RhsRoute {
    ArcCounts,
    Resolution(ResolutionDatum),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityInstance {
    pub f: IntPolynomial,
    pub blocks: Blocks,
    /// Levels for the termwise checks.
    pub levels: Vec<u32>,
    pub fields: Vec<u32>,
    /// Levels feeding the series fits.
    pub fit_levels: Vec<u32>,
    pub basis_hint: Option<Vec<Vec<Generator>>>,
    pub rhs_basis: Option<Vec<Vec<Generator>>>,
    pub x1_basis: Option<Vec<Vec<Generator>>>,
    pub rhs_route: RhsRoute,
}

impl IdentityInstance {
    pub fn new(f: IntPolynomial, blocks: Blocks) -> Self {
        Self {
            f,
            blocks,
            levels: vec![1, 2],
            fields: vec![3],
            fit_levels: (1..=6).collect(),
            basis_hint: None,
            rhs_basis: None,
            x1_basis: None,
            rhs_route: RhsRoute::ArcCounts,
        }
    }

    fn check(&self) -> Result<()> {
        if !weight_check(&self.f, self.blocks) {
            return Err(Error::WeightCheckFailed);
        }
        Ok(())
    }

    fn d(&self) -> usize {
        self.blocks.dim()
    }

    /// `h = f(0, 0, z)`.
    pub fn h(&self) -> IntPolynomial {
        let keep: Vec<usize> = self.blocks.z_range().collect();
        self.f.restrict(&keep)
    }
}

/// `X`, `X_0 = {x = 0 or y = 0}` and `X_1 = X - X_0` at level `m` over
/// `F_q`, realized as `X[m; 2]` in the rescaled variable.
pub fn decompose(inst: &IdentityInstance, m: u32, q: u32) -> Result<(SetSpec, SetSpec, SetSpec)> {
    inst.check()?;
    let base = origin_in_x_block(inst.blocks);
    let task = ArcTask {
        target: Target::RvT,
        ..ArcTask::exact(inst.f.clone(), m, 2 * m, q).with_base(base)
    };
    let x = SetSpec { task, blocks: inst.blocks, predicate: Predicate::True };
    let x0 = SetSpec { predicate: Predicate::x0(), ..x.clone() };
    let x1 = SetSpec { predicate: Predicate::x1(), ..x.clone() };
    Ok((x, x0, x1))
}

fn origin_in_x_block(b: Blocks) -> Vec<Base> {
    let mut base = vec![Base::Free; b.x];
    base.extend(std::iter::repeat(Base::Positive).take(b.y + b.z));
    base
}

/// `count(X_m(f))` with `φ(0)` in the x-block, truncated at `t^{m+1}`.
fn jet_count(inst: &IdentityInstance, m: u32, q: u32, budget: u64) -> Result<BigUint> {
    let task = ArcTask::exact(inst.f.clone(), m, m + 1, q).with_base(origin_in_x_block(inst.blocks));
    count_arcs(&task, budget)
}

/// `count(X_{0,m}(h))`.
fn h_count(inst: &IdentityInstance, m: u32, q: u32, budget: u64) -> Result<BigUint> {
    let h = inst.h();
    let d3 = h.dim();
    let task = ArcTask::exact(h, m, m + 1, q).with_base(vec![Base::Positive; d3]);
    count_arcs(&task, budget)
}

fn qpow(q: u32, e: usize) -> BigUint {
    Pow::pow(&BigUint::from(q), e)
}

/// `q^{(2m-1)d2} + q^{2m d1} - 1`.
fn y_factor(b: Blocks, m: u32, q: u32) -> BigUint {
    let m = m as usize;
    qpow(q, (2 * m - 1) * b.y) + qpow(q, 2 * m * b.x) - BigUint::from(1u32)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equality {
    pub lhs: BigUint,
    pub rhs: BigUint,
}

impl Equality {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermwiseRow {
    pub m: u32,
    pub q: u32,
    pub x: BigUint,
    pub x0: BigUint,
    pub x1: BigUint,
    /// `count(X) = count(X_0) + count(X_1)`
    pub partition: Equality,
    /// `count(X[m;2]) = count(X_m(f), origin in x) q^{(m-1)d}`
    pub factorization: Equality,
    /// `count(X_0[m;2]) = (q^{(2m-1)d2} + q^{2m d1} - 1) count(X_{0,m}(h)) q^{(m-1)d3}`
    pub product: Equality,
    /// Counts are unchanged after `(x, y, z) -> (τx, τ^{-1}y, z)`.
    pub homogeneity: bool,
    pub tau: u64,
}

impl TermwiseRow {
    pub fn passed(&self) -> bool {
        self.partition.holds() && self.factorization.holds() && self.product.holds() && self.homogeneity
    }
}

pub fn check_termwise(inst: &IdentityInstance, budget: u64) -> Result<Vec<TermwiseRow>> {
    inst.check()?;
    let mut rows = Vec::new();
    for &q in &inst.fields {
        for &m in &inst.levels {
            rows.push(termwise_row(inst, m, q, budget)?);
        }
    }
    Ok(rows)
}

fn termwise_row(inst: &IdentityInstance, m: u32, q: u32, budget: u64) -> Result<TermwiseRow> {
    let (sx, sx0, sx1) = decompose(inst, m, q)?;
    let x = count_set(&sx, budget)?;
    let x0 = count_set(&sx0, budget)?;
    let x1 = count_set(&sx1, budget)?;
    let d = inst.d();
    let b = inst.blocks;
    let mu = m as usize;
    let factorization = Equality {
        lhs: x.clone(),
        rhs: jet_count(inst, m, q, budget)? * qpow(q, (mu - 1) * d),
    };
    let product = Equality {
        lhs: x0.clone(),
        rhs: y_factor(b, m, q) * h_count(inst, m, q, budget)? * qpow(q, (mu - 1) * b.z),
    };
    let tau = if q == 2 { 1 } else { 2 };
    let twisted = inst.f.twist(&b.weights(), tau, q as u64);
    let recount = |s: &SetSpec| -> Result<BigUint> {
        let mut s = s.clone();
        s.task.f = twisted.clone();
        count_set(&s, budget)
    };
    let homogeneity = recount(&sx)? == x && recount(&sx0)? == x0 && recount(&sx1)? == x1;
    Ok(TermwiseRow {
        m,
        q,
        partition: Equality { lhs: x.clone(), rhs: &x0 + &x1 },
        x,
        x0,
        x1,
        factorization,
        product,
        homogeneity,
        tau,
    })
}

/// Fitted series with its data, or the reason the fit failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitOutcome {
    pub data: Vec<(u32, BigRational)>,
    pub basis: Vec<Vec<Generator>>,
    pub fit: std::result::Result<SpecializedFit, Error>,
}

impl FitOutcome {
    fn new(data: Vec<(u32, BigRational)>, basis: Vec<Vec<Generator>>, q: &BigRational) -> Self {
        let fit = fit_specialized(&data, &basis, q);
        Self { data, basis, fit }
    }

    /// `-lim_{T -> oo}` of the fitted series.
    pub fn neg_limit(&self) -> Option<BigRational> {
        self.fit.as_ref().ok().map(|f| -f.limit())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rhs {
    Fitted { fit: FitOutcome, value: Option<BigRational> },
    Resolution { volume: LocalizedMotive, value: BigRational },
    /// `d3 = 0`: no right-hand side is defined.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldReport {
    pub q: u32,
    pub lhs: FitOutcome,
    pub x1: FitOutcome,
    pub rhs: Rhs,
}

impl FieldReport {
    pub fn lhs_value(&self) -> Option<BigRational> {
        self.lhs.neg_limit()
    }

    pub fn x1_limit(&self) -> Option<BigRational> {
        self.x1.fit.as_ref().ok().map(|f| f.limit())
    }

    pub fn rhs_value(&self) -> Option<BigRational> {
        match &self.rhs {
            Rhs::Fitted { value, .. } => value.clone(),
            Rhs::Resolution { value, .. } => Some(value.clone()),
            Rhs::Degenerate => None,
        }
    }

    pub fn sides_agree(&self) -> bool {
        match self.rhs {
            Rhs::Degenerate => true,
            _ => matches!((self.lhs_value(), self.rhs_value()), (Some(a), Some(b)) if a == b),
        }
    }

    pub fn x1_vanishes(&self) -> bool {
        self.x1_limit().is_some_and(|v| v.is_zero())
    }

    pub fn passed(&self) -> bool {
        self.sides_agree() && self.x1_vanishes()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub termwise: Vec<TermwiseRow>,
    pub fields: Vec<FieldReport>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.termwise.iter().all(TermwiseRow::passed) && self.fields.iter().all(FieldReport::passed)
    }
}

/// `{gen(-a, b) : 1 <= b <= n, 0 <= a <= 2dn}`.
pub fn default_basis(max_n: u32, d: usize) -> Vec<Vec<Generator>> {
    let mut out = Vec::new();
    for b in 1..=max_n {
        for a in 0..=(2 * d as i64 * max_n as i64) {
            out.push(vec![gen(-a, b)]);
        }
    }
    out
}

fn guessed_max_n(inst: &IdentityInstance) -> u32 {
    if let RhsRoute::Resolution(res) = &inst.rhs_route {
        return res.components.iter().map(|c| c.n).max().unwrap_or(1);
    }
    inst.f
        .terms()
        .keys()
        .map(|e| e.iter().sum::<u32>())
        .max()
        .unwrap_or(1)
        .max(1)
}

/// Generators of `R ⊙ Y`, where `Y = L^{d1} gen(-2d1, 1) + L^{d1+d2}
/// gen(-2d2, 1) - L^{d1+d2} gen(-2(d1+d2), 1)` turns the `h`-series `R`
/// into the `X_0` series.
fn x0_generators(rhs_basis: &[Vec<Generator>], b: Blocks) -> Result<Vec<Vec<Generator>>> {
    let ys = [2 * b.x as i64, 2 * b.y as i64, 2 * (b.x + b.y) as i64];
    let mut out: Vec<Vec<Generator>> = Vec::new();
    for g in rhs_basis {
        let [g] = g.as_slice() else {
            return Err(Error::UnsupportedShape(
                "X_1 basis needs single generators on the right-hand side; supply x1_basis".into(),
            ));
        };
        for a in ys {
            let h = vec![gen(g.e - a * g.i as i64, g.i)];
            if !out.contains(&h) {
                out.push(h);
            }
        }
    }
    Ok(out)
}

pub fn check_identity(inst: &IdentityInstance, budget: u64) -> Result<IdentityReport> {
    inst.check()?;
    let termwise = check_termwise(inst, budget)?;
    let b = inst.blocks;
    let d = inst.d() as i64;
    let degenerate = b.z == 0;
    let lhs_basis = inst
        .basis_hint
        .clone()
        .unwrap_or_else(|| default_basis(guessed_max_n(inst), inst.d()));
    let rhs_basis = match (&inst.rhs_basis, &inst.rhs_route) {
        (Some(basis), _) => basis.clone(),
        (None, RhsRoute::Resolution(res)) => volume_series(res)
            .terms()
            .filter(|(t, _)| !t.gens.is_empty())
            .map(|(t, _)| t.gens.clone())
            .collect(),
        (None, RhsRoute::ArcCounts) => default_basis(guessed_max_n(inst), b.z),
    };
    let x1_basis = match &inst.x1_basis {
        Some(basis) => basis.clone(),
        None => {
            let mut basis = lhs_basis.clone();
            if !degenerate {
                for g in x0_generators(&rhs_basis, b)? {
                    if !basis.contains(&g) {
                        basis.push(g);
                    }
                }
            }
            basis
        }
    };
    let mut fields = Vec::new();
    for &q in &inst.fields {
        let qq = BigRational::from_integer(q.into());
        let mut lhs_data = Vec::new();
        let mut x1_data = Vec::new();
        let mut rhs_data = Vec::new();
        for &m in &inst.fit_levels {
            let mi = m as i64;
            // X̃[m] = count(X_m(f), origin in x) q^{-md}.
            let x = scale_count(&jet_count(inst, m, q, budget)?, q, -mi * d);
            let z = h_count(inst, m, q, budget)?;
            // X̃_0[m] from the product formula.
            let x0 = scale_count(
                &(y_factor(b, m, q) * &z),
                q,
                (mi - 1) * b.z as i64 + d - 2 * mi * d,
            );
            x1_data.push((m, &x - &x0));
            lhs_data.push((m, x));
            rhs_data.push((m, scale_count(&z, q, -mi * b.z as i64)));
        }
        let lhs = FitOutcome::new(lhs_data, lhs_basis.clone(), &qq);
        let x1 = FitOutcome::new(x1_data, x1_basis.clone(), &qq);
        let qd1 = BigRational::from_integer(Pow::pow(&num_bigint::BigInt::from(q), b.x));
        let rhs = if degenerate {
            Rhs::Degenerate
        } else {
            match &inst.rhs_route {
                RhsRoute::ArcCounts => {
                    let fit = FitOutcome::new(rhs_data, rhs_basis.clone(), &qq);
                    let value = fit.neg_limit().map(|v| v * &qd1);
                    Rhs::Fitted { fit, value }
                }
                RhsRoute::Resolution(res) => {
                    res.validate()?;
                    let volume = motivic_volume(res)?;
                    let s = &volume * &LocalizedMotive::l_pow(res.reldim as i64);
                    Rhs::Resolution { value: s.specialize(&qq)? * &qd1, volume }
                }
            }
        };
        fields.push(FieldReport { q, lhs, x1, rhs });
    }
    Ok(IdentityReport { termwise, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::DEFAULT_BUDGET;
    use crate::nearby::Component;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn xy_z2() -> IdentityInstance {
        let f = IntPolynomial::parse("x*y + z^2", &["x", "y", "z"]).unwrap();
        IdentityInstance::new(f, Blocks::new(1, 1, 1))
    }

    fn xy() -> IdentityInstance {
        let f = IntPolynomial::parse("x*y", &["x", "y"]).unwrap();
        IdentityInstance::new(f, Blocks::new(1, 1, 0))
    }

    #[test]
    fn decompose_examples() {
        let (_, x0, x1) = decompose(&xy_z2(), 1, 3).unwrap();
        assert_eq!(x0.predicate.to_string(), "x=0 or y=0");
        assert_eq!(x1.predicate.to_string(), "x!=0 and y!=0");
        assert!(decompose(&xy(), 1, 5).is_ok());
        let f = IntPolynomial::parse("x^2*y^2 + x*y*z + z^3", &["x", "y", "z"]).unwrap();
        assert!(decompose(&IdentityInstance::new(f, Blocks::new(1, 1, 1)), 1, 3).is_ok());
        let bad = IntPolynomial::parse("x + z", &["x", "y", "z"]).unwrap();
        assert_eq!(
            decompose(&IdentityInstance::new(bad, Blocks::new(1, 1, 1)), 1, 3).unwrap_err(),
            Error::WeightCheckFailed
        );
    }

    #[test]
    fn termwise_examples() {
        let rows = check_termwise(&xy_z2(), DEFAULT_BUDGET).unwrap();
        let r1 = &rows[0];
        assert_eq!((r1.x.clone(), r1.x0.clone(), r1.x1.clone()), (big(18), big(0), big(18)));
        assert!(rows.iter().all(TermwiseRow::passed));
        let r2 = &rows[1];
        assert_eq!(y_factor(Blocks::new(1, 1, 1), 2, 3), big(107));
        assert_eq!(h_count(&xy_z2(), 2, 3, DEFAULT_BUDGET).unwrap(), big(6));
        assert_eq!(r2.product.lhs, big(107 * 6 * 3));
        let mut inst = xy();
        inst.levels = vec![1];
        inst.fields = vec![5];
        let rows = check_termwise(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(rows[0].x, big(20));
        assert!(rows[0].passed());
    }

    #[test]
    fn identity_for_xy_plus_z2() {
        let mut inst = xy_z2();
        inst.basis_hint = Some(vec![
            vec![gen(-1, 1)],
            vec![gen(-3, 2)],
            vec![gen(-1, 1), gen(-3, 2)],
        ]);
        inst.rhs_basis = Some(vec![vec![gen(-1, 2)]]);
        let report = check_identity(&inst, DEFAULT_BUDGET).unwrap();
        let six = BigRational::from_integer(6.into());
        let field = &report.fields[0];
        assert_eq!(field.lhs_value(), Some(six.clone()));
        assert_eq!(field.rhs_value(), Some(six));
        assert_eq!(field.x1_limit(), Some(BigRational::zero()));
        assert!(report.passed());

        let datum = ResolutionDatum::new(vec![Component { n: 2, alpha: 1 }], 1)
            .with_stratum(&[0], LocalizedMotive::from_int(2));
        inst.rhs_basis = None;
        inst.rhs_route = RhsRoute::Resolution(datum);
        let report = check_identity(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(report.fields[0].rhs_value(), Some(BigRational::from_integer(6.into())));
        assert!(report.passed());
    }

    #[test]
    fn degenerate_rhs() {
        let mut inst = xy();
        inst.basis_hint = Some(vec![vec![gen(-1, 1)], vec![gen(-1, 1), gen(-1, 1)]]);
        inst.fit_levels = (1..=4).collect();
        let report = check_identity(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(report.fields[0].rhs, Rhs::Degenerate);
        assert_eq!(report.fields[0].x1_limit(), Some(BigRational::zero()));
        assert!(report.passed());
    }

    #[test]
    fn underdetermined_default_basis_is_reported() {
        let report = check_identity(&xy_z2(), DEFAULT_BUDGET).unwrap();
        assert!(matches!(report.fields[0].lhs.fit, Err(Error::Underdetermined(_))));
        assert!(!report.passed());
    }
}
