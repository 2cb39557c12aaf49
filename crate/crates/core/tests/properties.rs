use num_rational::BigRational;
use proptest::prelude::*;

use motzeta::arcs::IntPolynomial;
use motzeta::expr::{parse_motive, parse_series};
use motzeta::gamma::{euler_char, Constraint, Polyhedron, Relation};
use motzeta::gring::{LaurentPoly, LocalizedMotive};
use motzeta::series::{gen, RationalSeries, Term};

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn poly() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-4i64..=4, -5i64..=5), 0..4).prop_map(LaurentPoly::from_terms)
}

fn motive() -> impl Strategy<Value = LocalizedMotive> {
    (poly(), prop::collection::vec(1u32..=3, 0..2))
        .prop_map(|(num, den)| LocalizedMotive::new(num, den).expect("positive exponents"))
}

/// Constants, powers of `T` and products of up to two generators.
fn series(shifts: bool) -> impl Strategy<Value = RationalSeries> {
    let term = (prop::collection::vec((-4i64..=4, 1u32..=3), 0..=2), 0u32..=2).prop_map(move |(gs, k)| {
        if gs.is_empty() {
            Term::t_pow(if shifts { k } else { 0 })
        } else {
            Term::product(gs.into_iter().map(|(e, i)| gen(e, i)).collect())
        }
    });
    prop::collection::vec((term, motive()), 0..4).prop_map(|ts| {
        ts.into_iter()
            .fold(RationalSeries::zero(), |acc, (t, c)| &acc + &RationalSeries::from_term(t, c))
    })
}

fn single_combination() -> impl Strategy<Value = RationalSeries> {
    prop::collection::vec(((-4i64..=4, 1u32..=4), motive()), 1..4).prop_map(|ts| {
        ts.into_iter().fold(RationalSeries::zero(), |acc, ((e, i), c)| {
            &acc + &RationalSeries::from_term(Term::product(vec![gen(e, i)]), c)
        })
    })
}

fn constraint(dim: usize) -> impl Strategy<Value = Constraint> {
    (prop::collection::vec(-2i64..=2, dim), 0..3usize, -4i64..=4, 1i64..=2).prop_map(|(cs, r, n, d)| {
        let rel = [Relation::Ge, Relation::Gt, Relation::Eq][r];
        Constraint::new(cs.into_iter().map(q).collect(), rel, BigRational::new(n.into(), d.into()))
    })
}

fn polyhedron(dim: usize) -> impl Strategy<Value = Polyhedron> {
    prop::collection::vec(constraint(dim), 0..4).prop_map(move |cs| Polyhedron::new(dim, cs).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn motives_form_a_commutative_ring(a in motive(), b in motive(), c in motive()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn specialization_is_a_ring_map(a in motive(), b in motive(), x in 2i64..=7) {
        let x = q(x);
        let (sa, sb) = (a.specialize(&x).unwrap(), b.specialize(&x).unwrap());
        prop_assert_eq!((&a * &b).specialize(&x).unwrap(), &sa * &sb);
        prop_assert_eq!((&a + &b).specialize(&x).unwrap(), sa + sb);
    }

    #[test]
    fn motives_round_trip_through_text(a in motive()) {
        prop_assert_eq!(parse_motive(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn series_round_trip_through_text(s in series(true)) {
        prop_assert_eq!(parse_series(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn product_coefficients_are_convolutions(a in series(true), b in series(true)) {
        let p = &a * &b;
        for m in 0..=30u32 {
            let conv = (0..=m).fold(LocalizedMotive::zero(), |acc, j| {
                &acc + &(&a.coefficient(j) * &b.coefficient(m - j))
            });
            prop_assert_eq!(p.coefficient(m), conv, "m = {}", m);
        }
    }

    #[test]
    fn limit_is_linear(a in series(false), b in series(false), x in motive(), y in motive()) {
        let lhs = (&a.scale(&x) + &b.scale(&y)).limit().unwrap();
        let rhs = &(&x * &a.limit().unwrap()) + &(&y * &b.limit().unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn hadamard_is_coefficientwise(a in single_combination(), b in single_combination()) {
        let h = a.hadamard(&b).unwrap();
        for m in 1..=30u32 {
            prop_assert_eq!(h.coefficient(m), &a.coefficient(m) * &b.coefficient(m));
        }
        prop_assert_eq!(h.limit().unwrap(), -(&a.limit().unwrap() * &b.limit().unwrap()));
    }

    #[test]
    fn partial_fractions_keep_coefficients_and_limit(s in series(false)) {
        let p = s.partial_fractions();
        for m in 0..=30u32 {
            prop_assert_eq!(p.coefficient(m), s.coefficient(m));
        }
        prop_assert_eq!(p.limit().unwrap(), s.limit().unwrap());
    }

    #[test]
    fn euler_characteristic_is_additive(p in polyhedron(2), h in constraint(2)) {
        prop_assume!(h.coeffs.iter().any(|c| *c != q(0)));
        let neg: Vec<BigRational> = h.coeffs.iter().map(|c| -c).collect();
        let parts = [
            Constraint::new(h.coeffs.clone(), Relation::Gt, h.bound.clone()),
            Constraint::new(h.coeffs.clone(), Relation::Eq, h.bound.clone()),
            Constraint::new(neg, Relation::Gt, -h.bound.clone()),
        ];
        let total: i64 = parts.into_iter().map(|c| euler_char(&p.with_constraint(c).unwrap()).unwrap()).sum();
        prop_assert_eq!(euler_char(&p).unwrap(), total);
    }

    #[test]
    fn euler_characteristic_is_multiplicative(a in polyhedron(1), b in polyhedron(2)) {
        prop_assert_eq!(
            euler_char(&a.product(&b)).unwrap(),
            euler_char(&a).unwrap() * euler_char(&b).unwrap()
        );
    }

    #[test]
    fn polynomials_round_trip_through_text(
        terms in prop::collection::vec((prop::collection::vec(0u32..=3, 3), -5i64..=5), 0..5)
    ) {
        let vars = ["x", "y", "z"];
        let f = IntPolynomial::from_terms(&vars, terms.into_iter().map(|(e, c)| (e, c.into())));
        prop_assert_eq!(IntPolynomial::parse(&f.to_string(), &vars).unwrap(), f);
    }
}
