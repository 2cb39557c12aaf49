//! Denef–Loeser formulas from simple-normal-crossings resolution data:
//! motivic nearby cycles, the volume Poincaré series and its limit, and the
//! volumes of the standard domains (polydiscs and annuli).

use std::collections::BTreeMap;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::gring::{LaurentPoly, LocalizedMotive};
use crate::series::{gen, RationalSeries, Term};

/// `E_i` with multiplicity `N_i` in the special fiber and weight `α_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Component {
    pub n: u32,
    pub alpha: u32,
}

/// Class of `Ẽ_I°`, optionally tagged with the order of its covering group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub motive: LocalizedMotive,
    pub mu: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionDatum {
    pub components: Vec<Component>,
    /// Keyed by sorted, nonempty index sets `I ⊆ J`; absent sets count as 0.
    pub strata: BTreeMap<Vec<usize>, Stratum>,
    pub reldim: u32,
}

impl ResolutionDatum {
    pub fn new(components: Vec<Component>, reldim: u32) -> Self {
        Self { components, strata: BTreeMap::new(), reldim }
    }

    pub fn with_stratum(mut self, set: &[usize], motive: LocalizedMotive) -> Self {
        let mut key = set.to_vec();
        key.sort_unstable();
        self.strata.insert(key, Stratum { motive, mu: None });
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            if c.n == 0 || c.alpha == 0 {
                return Err(Error::Invalid(format!(
                    "component {i}: multiplicity and weight must be >= 1"
                )));
            }
        }
        for (set, s) in &self.strata {
            if set.is_empty() {
                return Err(Error::Invalid("strata are indexed by nonempty sets".into()));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!("stratum {set:?} is not a sorted set")));
            }
            if let Some(&i) = set.iter().find(|&&i| i >= self.components.len()) {
                return Err(Error::Invalid(format!("stratum {set:?} names missing component {i}")));
            }
            if let Some(mu) = s.mu {
                let g = self.gcd_of(set);
                if mu != g {
                    return Err(Error::Invalid(format!(
                        "stratum {set:?}: covering order {mu} differs from gcd {g}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `gcd(N_i : i ∈ I)`.
    pub fn gcd_of(&self, set: &[usize]) -> u32 {
        set.iter().fold(0, |g, &i| g.gcd(&self.components[i].n))
    }
}

fn one_minus_l() -> LaurentPoly {
    LaurentPoly::from_terms([(0, 1), (1, -1)])
}

/// `S_f = sum_{I ≠ ∅} (1 - L)^{|I| - 1} [Ẽ_I°]`.
pub fn nearby_cycles(res: &ResolutionDatum) -> LocalizedMotive {
    let mut acc = LocalizedMotive::zero();
    for (set, s) in &res.strata {
        acc = &acc + &s.motive.scale_poly(&one_minus_l().pow(set.len() as u32 - 1));
    }
    acc
}

/// `L^{-d} sum_I (L - 1)^{|I| - 1} [Ẽ_I°] prod_{i ∈ I} gen(-α_i, N_i)`.
pub fn volume_series(res: &ResolutionDatum) -> RationalSeries {
    let l_minus_1 = LaurentPoly::from_terms([(1, 1), (0, -1)]);
    let mut acc = RationalSeries::zero();
    for (set, s) in &res.strata {
        let gens = set
            .iter()
            .map(|&i| {
                let c = res.components[i];
                gen(-(c.alpha as i64), c.n)
            })
            .collect();
        let c = s
            .motive
            .scale_poly(&l_minus_1.pow(set.len() as u32 - 1).shift(-(res.reldim as i64)));
        acc = &acc + &RationalSeries::from_term(Term::product(gens), c);
    }
    acc
}

/// `-lim_{T -> oo} volume_series(res)`.
pub fn motivic_volume(res: &ResolutionDatum) -> Result<LocalizedMotive> {
    Ok(-volume_series(res).limit()?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DomainFactor {
    ClosedPolydisc(u32),
    OpenPolydisc(u32),
    PuncturedClosedPolydisc(u32),
    /// `{0 <= val(u) < p/q}` with `p/q` in lowest terms.
    Annulus(u32, u32),
}

/// `Σ_m (L - L^{1 - m r}) T^{mq}` with `r = min(p, 2q)`: the normalized
/// point counts of the annulus `{0 <= val < p/q}` at the levels `mq`.
pub fn annulus_series(p: u32, q: u32) -> RationalSeries {
    let r = p.min(2 * q) as i64;
    let l = LocalizedMotive::l_pow(1);
    &RationalSeries::from_term(Term::product(vec![gen(0, q)]), l.clone())
        - &RationalSeries::from_term(Term::product(vec![gen(-r, q)]), l)
}

/// Multiplicative over the factors; closed polydiscs give 1, open ones
/// `L^{-n}`, punctured closed polydiscs and annuli 0.
pub fn standard_volume(domain: &[DomainFactor]) -> Result<LocalizedMotive> {
    let mut acc = LocalizedMotive::one();
    for f in domain {
        let v = match *f {
            DomainFactor::ClosedPolydisc(n) | DomainFactor::PuncturedClosedPolydisc(n)
                if n == 0 =>
            {
                return Err(Error::Invalid("polydisc dimension must be >= 1".into()));
            }
            DomainFactor::OpenPolydisc(0) => {
                return Err(Error::Invalid("polydisc dimension must be >= 1".into()));
            }
            DomainFactor::ClosedPolydisc(_) => LocalizedMotive::one(),
            DomainFactor::OpenPolydisc(n) => LocalizedMotive::l_pow(-(n as i64)),
            DomainFactor::PuncturedClosedPolydisc(_) => LocalizedMotive::zero(),
            DomainFactor::Annulus(p, q) => {
                if p == 0 || q == 0 || p.gcd(&q) != 1 {
                    return Err(Error::Invalid(format!(
                        "annulus modulus {p}/{q} must be positive and in lowest terms"
                    )));
                }
                -annulus_series(p, q).limit()?
            }
        };
        acc = &acc * &v;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::{count_arcs, scale_count, ArcTask, Base, IntPolynomial, DEFAULT_BUDGET};
    use num_rational::BigRational;

    fn lp(terms: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(terms.iter().copied())
    }

    fn xk_datum(k: u32) -> ResolutionDatum {
        ResolutionDatum::new(vec![Component { n: k, alpha: 1 }], 1)
            .with_stratum(&[0], LocalizedMotive::from_int(k))
    }

    fn xy_datum() -> ResolutionDatum {
        ResolutionDatum::new(
            vec![Component { n: 1, alpha: 1 }, Component { n: 1, alpha: 1 }],
            2,
        )
        .with_stratum(&[0, 1], LocalizedMotive::one())
    }

    #[test]
    fn nearby_examples() {
        let c = LocalizedMotive::from_poly(lp(&[(2, 1), (0, -1)]));
        let smooth = ResolutionDatum::new(vec![Component { n: 1, alpha: 1 }], 2)
            .with_stratum(&[0], c.clone());
        assert_eq!(nearby_cycles(&smooth), c);
        assert_eq!(motivic_volume(&smooth).unwrap(), &c * &LocalizedMotive::l_pow(-2));
        assert_eq!(nearby_cycles(&xk_datum(3)), LocalizedMotive::from_int(3));
        let xy = nearby_cycles(&xy_datum());
        assert_eq!(xy, LocalizedMotive::from_poly(lp(&[(0, 1), (1, -1)])));
        assert!(xy.specialize(&BigRational::from_integer(1.into())).unwrap() == BigRational::from_integer(0.into()));
        assert_eq!(
            motivic_volume(&xy_datum()).unwrap(),
            LocalizedMotive::from_poly(lp(&[(-2, 1), (-1, -1)]))
        );
    }

    #[test]
    fn volume_series_examples() {
        let s = volume_series(&xk_datum(2));
        assert_eq!(s.to_string(), "2*L^-1*gen(-1,2)");
        for j in 1..=3u32 {
            assert_eq!(s.coefficient(2 * j), LocalizedMotive::from_poly(lp(&[(-1 - j as i64, 2)])));
            assert!(s.coefficient(2 * j - 1).is_zero());
        }
        assert_eq!(motivic_volume(&xk_datum(2)).unwrap(), LocalizedMotive::from_poly(lp(&[(-1, 2)])));
        assert!(volume_series(&ResolutionDatum::new(vec![Component { n: 2, alpha: 1 }], 1)).is_zero());
        let a = LocalizedMotive::from_int(5);
        let b = LocalizedMotive::l_pow(1);
        let two = ResolutionDatum::new(
            vec![Component { n: 1, alpha: 1 }, Component { n: 1, alpha: 2 }],
            1,
        )
        .with_stratum(&[0], a.clone())
        .with_stratum(&[1], b.clone());
        let one_a = ResolutionDatum::new(two.components.clone(), 1).with_stratum(&[0], a);
        let one_b = ResolutionDatum::new(two.components.clone(), 1).with_stratum(&[1], b);
        for m in 1..=6 {
            assert_eq!(
                volume_series(&two).coefficient(m),
                &volume_series(&one_a).coefficient(m) + &volume_series(&one_b).coefficient(m)
            );
        }
    }

    #[test]
    fn xk_against_arc_counts() {
        for (k, q) in [(2u32, 5u32), (2, 7), (3, 7)] {
            let s = volume_series(&xk_datum(k));
            let f = IntPolynomial::parse(&format!("x^{k}"), &["x"]).unwrap();
            let qq = BigRational::from_integer(q.into());
            for m in 1..=6u32 {
                let task = ArcTask::exact(f.clone(), m, m + 1, q).with_base(vec![Base::Positive]);
                let count = count_arcs(&task, DEFAULT_BUDGET).unwrap();
                let normalized = scale_count(&count, q, -(m as i64 + 1));
                assert_eq!(s.coefficient(m).specialize(&qq).unwrap(), normalized, "k={k} q={q} m={m}");
            }
        }
    }

    #[test]
    fn xy_against_arc_counts() {
        let s = volume_series(&xy_datum());
        let f = IntPolynomial::parse("x*y", &["x", "y"]).unwrap();
        for q in [3u32, 5] {
            let qq = BigRational::from_integer(q.into());
            for m in 1..=4u32 {
                let task = ArcTask::exact(f.clone(), m, m + 1, q).with_base(vec![Base::Positive; 2]);
                let count = count_arcs(&task, DEFAULT_BUDGET).unwrap();
                let normalized = scale_count(&count, q, -2 * (m as i64 + 1));
                assert_eq!(s.coefficient(m).specialize(&qq).unwrap(), normalized, "q={q} m={m}");
            }
        }
    }

    #[test]
    fn standard_volumes() {
        use DomainFactor::*;
        assert_eq!(standard_volume(&[OpenPolydisc(2)]).unwrap(), LocalizedMotive::l_pow(-2));
        assert!(standard_volume(&[PuncturedClosedPolydisc(1)]).unwrap().is_zero());
        for (p, q) in [(1, 1), (1, 2), (3, 2), (5, 1)] {
            assert!(standard_volume(&[Annulus(p, q)]).unwrap().is_zero());
        }
        assert_eq!(
            standard_volume(&[ClosedPolydisc(3), OpenPolydisc(1), OpenPolydisc(2)]).unwrap(),
            LocalizedMotive::l_pow(-3)
        );
        assert!(standard_volume(&[Annulus(2, 4)]).is_err());
        assert!(standard_volume(&[OpenPolydisc(0)]).is_err());
    }

    #[test]
    fn validation() {
        let mut res = xk_datum(4);
        res.strata.get_mut(&vec![0]).unwrap().mu = Some(4);
        assert!(res.validate().is_ok());
        res.strata.get_mut(&vec![0]).unwrap().mu = Some(2);
        assert!(res.validate().is_err());
        let bad = ResolutionDatum::new(vec![Component { n: 0, alpha: 1 }], 1);
        assert!(bad.validate().is_err());
    }
}
