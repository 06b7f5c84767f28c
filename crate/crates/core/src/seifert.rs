//! Seifert fibred integral homology spheres over the 2-sphere.
//!
//! Invariants are `(e0; b_1/a_1, ..., b_n/a_n)` with `0 < b_i < a_i`. For a
//! homology sphere the multiplicities are pairwise coprime and
//! `e0 * prod(a) = ±1`, which fixes every `b_i` by a congruence.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeifertError {
    #[error("multiplicities {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("multiplicity {0} is below 2")]
    MultiplicityTooSmall(u64),
    #[error("need at least 3 exceptional fibres, got {0}")]
    TooFewFibres(usize),
    #[error("invalid invariants: {0}")]
    Invalid(String),
    #[error("base orbifold Euler characteristic {0} is not negative")]
    NotNegativeEuler(BigRational),
    #[error("degree must be non-zero")]
    ZeroDegree,
    #[error("bound must be positive")]
    NonPositiveBound,
    #[error("product bound {0} exceeds the search limit {1}")]
    Guard(BigInt, u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeifertInvariants {
    a: Vec<u64>,
    b: Vec<u64>,
    e0: BigRational,
}

fn rational(n: i64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl SeifertInvariants {
    /// Invariants as given, checking only `a_i >= 2`, `0 < b_i < a_i` and
    /// `gcd(a_i, b_i) = 1`. Not necessarily a homology sphere.
    pub fn new(a: Vec<u64>, b: Vec<u64>, e0: BigRational) -> Result<Self, SeifertError> {
        if a.len() != b.len() {
            return Err(SeifertError::Invalid(format!("{} multiplicities but {} twists", a.len(), b.len())));
        }
        for (&ai, &bi) in a.iter().zip(&b) {
            if ai < 2 {
                return Err(SeifertError::MultiplicityTooSmall(ai));
            }
            if bi == 0 || bi >= ai || ai.gcd(&bi) != 1 {
                return Err(SeifertError::Invalid(format!("twist {bi}/{ai}")));
            }
        }
        Ok(SeifertInvariants { a, b, e0 })
    }

    pub fn a(&self) -> &[u64] {
        &self.a
    }

    pub fn b(&self) -> &[u64] {
        &self.b
    }

    pub fn e0(&self) -> &BigRational {
        &self.e0
    }

    /// Sign of `e0`; zero for `e0 = 0`.
    pub fn sign(&self) -> i8 {
        if self.e0.is_positive() {
            1
        } else if self.e0.is_negative() {
            -1
        } else {
            0
        }
    }

    pub fn product(&self) -> BigInt {
        self.a.iter().map(|&x| BigInt::from(x)).product()
    }

    /// `e0 + sum b_i / a_i`, the Euler class of the fibration.
    pub fn euler_class(&self) -> BigRational {
        self.a.iter().zip(&self.b).fold(self.e0.clone(), |acc, (&a, &b)| acc + rational(b as i64, a))
    }

    /// The same manifold with the opposite orientation.
    pub fn reversed(&self) -> SeifertInvariants {
        SeifertInvariants {
            a: self.a.clone(),
            b: self.a.iter().zip(&self.b).map(|(&a, &b)| a - b).collect(),
            e0: -self.e0.clone(),
        }
    }

    pub fn orbifold_euler(&self) -> BigRational {
        orbifold_euler(&self.a)
    }
}

impl fmt::Display for SeifertInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};", self.e0)?;
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            write!(f, "{}{b}/{a}", if i == 0 { " " } else { ", " })?;
        }
        write!(f, ")")
    }
}

fn check_coprime(a: &[u64]) -> Result<(), SeifertError> {
    for &x in a {
        if x < 2 {
            return Err(SeifertError::MultiplicityTooSmall(x));
        }
    }
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if a[i].gcd(&a[j]) != 1 {
                return Err(SeifertError::NotCoprime(a[i], a[j]));
            }
        }
    }
    Ok(())
}

/// Inverse of `x` modulo `m`, for coprime `x` and `m >= 2`.
fn inverse_mod(x: u64, m: u64) -> u64 {
    let e = (x as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

/// The homology sphere with multiplicities `a` and `e0 = sign / prod(a)`.
/// Each twist solves `b_i * prod_{j != i} a_j = -sign (mod a_i)`.
pub fn homology_sphere_invariants(a: &[u64], sign: i8) -> Result<SeifertInvariants, SeifertError> {
    if a.len() < 3 {
        return Err(SeifertError::TooFewFibres(a.len()));
    }
    if sign != 1 && sign != -1 {
        return Err(SeifertError::Invalid(format!("sign {sign}")));
    }
    check_coprime(a)?;
    let mut a = a.to_vec();
    a.sort_unstable();
    let b = (0..a.len())
        .map(|i| {
            let others = a.iter().enumerate().filter(|&(j, _)| j != i).fold(1u64, |acc, (_, &x)| acc * x % a[i]);
            let target = if sign > 0 { a[i] - 1 } else { 1 };
            target * inverse_mod(others, a[i]) % a[i]
        })
        .collect();
    let prod: BigInt = a.iter().map(|&x| BigInt::from(x)).product();
    let e0 = BigRational::new(BigInt::from(sign), prod);
    let inv = SeifertInvariants::new(a, b, e0)?;
    debug_assert!(inv.euler_class().is_integer());
    Ok(inv)
}

/// `2 - sum (1 - 1/a_i)`.
pub fn orbifold_euler(a: &[u64]) -> BigRational {
    a.iter().fold(BigRational::from_integer(BigInt::from(2)), |acc, &x| acc - BigRational::one() + rational(1, x))
}

/// `|e0 * prod(a)|`, the order of the torsion of the first homology.
pub fn torsion_order(inv: &SeifertInvariants) -> BigRational {
    (inv.e0.clone() * BigRational::from_integer(inv.product())).abs()
}

/// `|chi(B)^2 / e0|` for a base of negative Euler characteristic.
pub fn seifert_volume(inv: &SeifertInvariants) -> Result<BigRational, SeifertError> {
    let chi = inv.orbifold_euler();
    if !chi.is_negative() {
        return Err(SeifertError::NotNegativeEuler(chi));
    }
    if inv.e0.is_zero() {
        return Err(SeifertError::Invalid("e0 = 0".into()));
    }
    Ok((chi.clone() * chi / inv.e0.clone()).abs())
}

/// Euler characteristic of a horizontal surface of degree `d` over an
/// orbifold of Euler characteristic `chi`.
pub fn horizontal_euler(chi: &BigRational, d: i64) -> Result<BigRational, SeifertError> {
    if d == 0 {
        return Err(SeifertError::ZeroDegree);
    }
    Ok(chi.clone() * BigRational::from_integer(BigInt::from(d.unsigned_abs())))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusEntry {
    pub invariants: SeifertInvariants,
    pub chi_b: BigRational,
    pub sv: BigRational,
    pub product_a: u64,
}

/// Largest product bound the census will search.
pub const CENSUS_LIMIT: u64 = 50_000_000;

/// Every homology sphere with pairwise coprime multiplicities (at least
/// three), negative base Euler characteristic and `prod(a) <= 42^2 * bound`,
/// in both orientations, sorted by product, multiplicities, then sign.
pub fn census(bound: &BigRational) -> Result<Vec<CensusEntry>, SeifertError> {
    if !bound.is_positive() {
        return Err(SeifertError::NonPositiveBound);
    }
    let cap = (bound * BigRational::from_integer(BigInt::from(42 * 42))).floor().to_integer();
    if cap > BigInt::from(CENSUS_LIMIT) {
        return Err(SeifertError::Guard(cap, CENSUS_LIMIT));
    }
    let cap: u64 = cap.try_into().expect("below the limit");
    let firsts: Vec<u64> = (2..=cap).collect();
    let mut tuples: Vec<Vec<u64>> = firsts
        .par_iter()
        .flat_map_iter(|&a1| {
            let mut out = Vec::new();
            extend(&mut vec![a1], a1, cap, &mut out);
            out
        })
        .collect();
    tuples.retain(|a| a.len() >= 3 && orbifold_euler(a).is_negative());
    let mut entries: Vec<CensusEntry> = tuples
        .into_iter()
        .flat_map(|a| {
            [-1i8, 1].map(|sign| {
                let invariants = homology_sphere_invariants(&a, sign).expect("coprime by construction");
                let sv = seifert_volume(&invariants).expect("negative base");
                CensusEntry { chi_b: invariants.orbifold_euler(), sv, product_a: a.iter().product(), invariants }
            })
        })
        .collect();
    entries.sort_by(|x, y| {
        (x.product_a, x.invariants.a(), x.invariants.sign()).cmp(&(y.product_a, y.invariants.a(), y.invariants.sign()))
    });
    Ok(entries)
}

/// Extend an increasing pairwise coprime tuple with product `prod`.
fn extend(tuple: &mut Vec<u64>, prod: u64, cap: u64, out: &mut Vec<Vec<u64>>) {
    out.push(tuple.clone());
    let last = *tuple.last().expect("non-empty");
    let mut next = last + 1;
    while prod.saturating_mul(next) <= cap {
        if tuple.iter().all(|&x| x.gcd(&next) == 1) {
            tuple.push(next);
            extend(tuple, prod * next, cap, out);
            tuple.pop();
        }
        next += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: u64) -> BigRational {
        rational(n, d)
    }

    #[test]
    fn poincare_and_237_twists() {
        let p = homology_sphere_invariants(&[2, 3, 5], -1).unwrap();
        assert_eq!((p.b(), p.e0()), (&[1, 1, 1][..], &q(-1, 30)));
        let s = homology_sphere_invariants(&[2, 3, 7], 1).unwrap();
        assert_eq!((s.b(), s.e0()), (&[1, 1, 1][..], &q(1, 42)));
        assert_eq!(s.reversed(), homology_sphere_invariants(&[2, 3, 7], -1).unwrap());
    }

    #[test]
    fn rejects_bad_multiplicities() {
        assert_eq!(homology_sphere_invariants(&[2, 4, 5], 1), Err(SeifertError::NotCoprime(2, 4)));
        assert_eq!(homology_sphere_invariants(&[1, 3, 5], 1), Err(SeifertError::MultiplicityTooSmall(1)));
        assert_eq!(homology_sphere_invariants(&[3, 5], 1), Err(SeifertError::TooFewFibres(2)));
    }

    #[test]
    fn euler_and_volume() {
        assert_eq!(orbifold_euler(&[2, 3, 5]), q(1, 30));
        assert_eq!(orbifold_euler(&[2, 3, 7]), q(-1, 42));
        assert_eq!(orbifold_euler(&[2, 3, 6]), q(0, 1));
        let s = homology_sphere_invariants(&[2, 3, 11], 1).unwrap();
        assert_eq!(orbifold_euler(&[2, 3, 11]), q(-5, 66));
        assert_eq!(seifert_volume(&s).unwrap(), q(25, 66));
        let p = homology_sphere_invariants(&[2, 3, 5], -1).unwrap();
        assert!(matches!(seifert_volume(&p), Err(SeifertError::NotNegativeEuler(_))));
    }

    #[test]
    fn torsion_of_a_non_sphere() {
        let lens_like = SeifertInvariants::new(vec![3, 5], vec![1, 1], q(2, 15)).unwrap();
        assert_eq!(torsion_order(&lens_like), q(2, 1));
    }

    #[test]
    fn horizontal_surfaces() {
        assert_eq!(horizontal_euler(&q(-1, 42), 42).unwrap(), q(-1, 1));
        assert_eq!(horizontal_euler(&q(-1, 1), 1).unwrap(), q(-1, 1));
        assert_eq!(horizontal_euler(&q(-1, 6), -12).unwrap(), q(-2, 1));
        assert_eq!(horizontal_euler(&q(-1, 6), 0), Err(SeifertError::ZeroDegree));
    }

    #[test]
    fn small_census() {
        let c = census(&q(1, 42)).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|e| e.invariants.a() == [2, 3, 7] && e.product_a == 42));
        assert!(census(&q(1, 100)).unwrap().is_empty());
    }
}
