//! Fraction-free elimination over an integral domain with exact division.
//!
//! Used by series fitting: over `Z[L, L^-1]` for symbolic data and over `Q`
//! for data specialized at `L = q`.

use num_rational::BigRational;
use num_traits::Zero;

use crate::gring::LaurentPoly;

pub trait ExactDomain: Clone + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// `self / other` when the quotient lies in the domain.
    fn div_exact(&self, other: &Self) -> Option<Self>;
}

impl ExactDomain for LaurentPoly {
    fn zero() -> Self {
        LaurentPoly::zero()
    }
    fn one() -> Self {
        LaurentPoly::one()
    }
    fn is_zero(&self) -> bool {
        LaurentPoly::is_zero(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div_exact(&self, other: &Self) -> Option<Self> {
        LaurentPoly::div_exact(self, other)
    }
}

impl ExactDomain for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num_traits::One>::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div_exact(&self, other: &Self) -> Option<Self> {
        (!Zero::is_zero(other)).then(|| self / other)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum Solve<R> {
    Unique(Vec<R>),
    /// Rank is below the number of unknowns.
    Underdetermined { rank: usize },
    /// Some equation cannot be met.
    Inconsistent,
    /// A unique solution exists over the fraction field but not in `R`.
    NotInDomain,
}

/// Solves `rows * x = rhs` for `x`, where `rows` has one entry per unknown.
pub fn solve<R: ExactDomain>(rows: &[Vec<R>], rhs: &[R]) -> Solve<R> {
    let n = rows.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<R>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let m = a.len();
    let mut prev = R::one();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..n {
        let Some(p) = (pivot_row..m).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(pivot_row, p);
        for r in pivot_row + 1..m {
            for c in col + 1..=n {
                // Bareiss step: the division is exact by Sylvester's identity.
                let v = a[pivot_row][col]
                    .mul(&a[r][c])
                    .sub(&a[r][col].mul(&a[pivot_row][c]));
                a[r][c] = v.div_exact(&prev).expect("Bareiss division is exact");
            }
            a[r][col] = R::zero();
        }
        prev = a[pivot_row][col].clone();
        pivots.push(col);
        pivot_row += 1;
        if pivot_row == m {
            break;
        }
    }
    if a[pivot_row..].iter().any(|row| !row[n].is_zero()) {
        return Solve::Inconsistent;
    }
    if pivots.len() < n {
        return Solve::Underdetermined { rank: pivots.len() };
    }
    let mut x = vec![R::zero(); n];
    for k in (0..n).rev() {
        let mut acc = a[k][n].clone();
        for j in k + 1..n {
            acc = acc.sub(&a[k][j].mul(&x[j]));
        }
        match acc.div_exact(&a[k][k]) {
            Some(v) => x[k] = v,
            None => return Solve::NotInDomain,
        }
    }
    Solve::Unique(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn rational_unique() {
        let rows = vec![vec![r(2), r(1)], vec![r(1), r(3)], vec![r(3), r(4)]];
        let rhs = vec![r(5), r(10), r(15)];
        assert_eq!(solve(&rows, &rhs), Solve::Unique(vec![r(1), r(3)]));
    }

    #[test]
    fn rational_inconsistent_and_underdetermined() {
        let rows = vec![vec![r(1), r(1)], vec![r(1), r(1)]];
        assert_eq!(solve(&rows, &[r(1), r(2)]), Solve::Inconsistent);
        assert_eq!(solve(&rows, &[r(1), r(1)]), Solve::Underdetermined { rank: 1 });
    }

    #[test]
    fn laurent_not_in_domain() {
        let two = LaurentPoly::constant(2);
        assert_eq!(solve(&[vec![two]], &[LaurentPoly::one()]), Solve::NotInDomain);
    }
}
