//! Positive definite binary quadratic forms `ax^2 + bxy + cy^2` and the
//! group law on their classes.
//!
//! Every group operation returns the unique reduced representative of its
//! class, so two forms are equivalent exactly when their reduced
//! coefficients coincide.

mod characters;
mod random;
mod symbol;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub use characters::{
    assigned_characters, assigned_characters_with_primes, chi_eval, chi_eval_with_bound, Character,
    CharacterVector, DEFAULT_REPRESENTATION_BOUND,
};
pub use random::{random_prime_form, random_prime_form_avoiding, PRIME_FORM_SEARCH_CAP};
pub use symbol::{kronecker, kronecker_i64, mod_inverse, sqrt_mod_prime, sqrt_mod_prime_square};

/// A negative discriminant, `D = 0 or 1 (mod 4)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Discriminant(BigInt);

impl Discriminant {
    pub fn new(value: BigInt) -> Result<Self> {
        if !value.is_negative() {
            return Err(Error::Domain(format!("discriminant {value} is not negative")));
        }
        let r = value.mod_floor(&BigInt::from(4));
        if !(r.is_zero() || r.is_one()) {
            return Err(Error::Domain(format!("{value} is not 0 or 1 mod 4")));
        }
        Ok(Discriminant(value))
    }

    /// The discriminant `-4m`.
    pub fn from_minus_four(m: &BigInt) -> Result<Self> {
        Self::new(-BigInt::from(4) * m)
    }

    pub fn value(&self) -> &BigInt {
        &self.0
    }

    /// `m` with `D = -4m`, when `D = 0 (mod 4)`.
    pub fn quarter(&self) -> Option<BigInt> {
        if (&self.0 % 4u32).is_zero() {
            Some(-&self.0 / 4)
        } else {
            None
        }
    }
}

impl From<i64> for Discriminant {
    /// Panics on values that are not negative discriminants.
    fn from(v: i64) -> Self {
        Discriminant::new(BigInt::from(v)).expect("invalid discriminant literal")
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A binary quadratic form `(a, b, c)` with `a > 0` and negative
/// discriminant. Forms need not be reduced or primitive; lift candidates
/// are allowed to be imprimitive until the caller filters them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

impl QuadForm {
    pub fn new(a: BigInt, b: BigInt, c: BigInt) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::Domain(format!("leading coefficient {a} is not positive")));
        }
        let f = QuadForm { a, b, c };
        if !f.disc_value().is_negative() {
            return Err(Error::Domain(format!("{f} has non-negative discriminant")));
        }
        Ok(f)
    }

    /// Convenience constructor for literals. Panics on invalid coefficients.
    pub fn from_i64(a: i64, b: i64, c: i64) -> Self {
        QuadForm::new(a.into(), b.into(), c.into()).expect("invalid form literal")
    }

    /// The principal form of discriminant `D`: `(1, 0, -D/4)` or `(1, 1, (1 - D)/4)`.
    pub fn identity(d: &Discriminant) -> Result<Self> {
        Ok(match d.quarter() {
            Some(m) => QuadForm { a: BigInt::one(), b: BigInt::zero(), c: m },
            None => QuadForm { a: BigInt::one(), b: BigInt::one(), c: (BigInt::one() - d.value()) / 4 },
        })
    }

    pub(crate) fn from_parts_unchecked(a: BigInt, b: BigInt, c: BigInt) -> Self {
        debug_assert!(a.is_positive());
        QuadForm { a, b, c }
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    fn disc_value(&self) -> BigInt {
        &self.b * &self.b - ((&self.a * &self.c) << 2)
    }

    pub fn discriminant(&self) -> Discriminant {
        Discriminant(self.disc_value())
    }

    /// Value of the form at `(x, y)`.
    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        &self.a * x * x + &self.b * x * y + &self.c * y * y
    }

    pub fn content(&self) -> BigInt {
        self.a.gcd(&self.b).gcd(&self.c)
    }

    pub fn is_primitive(&self) -> bool {
        self.content().is_one()
    }

    /// `|b| <= a <= c`, with `b >= 0` when `|b| = a` or `a = c`.
    pub fn is_reduced(&self) -> bool {
        let abs_b = self.b.abs();
        if abs_b > self.a || self.a > self.c {
            return false;
        }
        if (abs_b == self.a || self.a == self.c) && self.b.is_negative() {
            return false;
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.is_reduced()
    }

    /// `(a, -b, c)`, the inverse class.
    pub fn conjugate(&self) -> QuadForm {
        QuadForm { a: self.a.clone(), b: -&self.b, c: self.c.clone() }
    }

    /// The form `f(px + qy, rx + sy)`.
    pub fn transform(&self, p: &BigInt, q: &BigInt, r: &BigInt, s: &BigInt) -> Result<QuadForm> {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let na = a * p * p + b * p * r + c * r * r;
        let nb = BigInt::from(2) * a * p * q + b * (p * s + q * r) + BigInt::from(2) * c * r * s;
        let nc = a * q * q + b * q * s + c * s * s;
        QuadForm::new(na, nb, nc)
    }

    /// The unique reduced form equivalent to `self`.
    pub fn reduce(&self) -> QuadForm {
        let (mut a, mut b, mut c) = (self.a.clone(), self.b.clone(), self.c.clone());
        reduce_in_place(&mut a, &mut b, &mut c);
        QuadForm { a, b, c }
    }

    /// Class product of two forms of the same discriminant.
    pub fn compose(&self, other: &QuadForm) -> Result<QuadForm> {
        if self.disc_value() != other.disc_value() {
            return Err(Error::Domain(format!(
                "cannot compose {self} and {other}: discriminants differ"
            )));
        }
        Ok(self.compose_unchecked(other))
    }

    /// Composition without the discriminant check; used by the inner loops
    /// where both operands are known to live in the same group.
    pub fn compose_unchecked(&self, other: &QuadForm) -> QuadForm {
        let (f, g) = if self.a <= other.a { (self, other) } else { (other, self) };
        let (a1, b1) = (&f.a, &f.b);
        let (a2, b2, c2) = (&g.a, &g.b, &g.c);
        let s: BigInt = (b1 + b2) >> 1;
        let n = b2 - &s;

        let (y1, d) = if (a2 % a1).is_zero() {
            (BigInt::zero(), a1.clone())
        } else {
            let e = a2.extended_gcd(a1);
            (e.x, e.gcd)
        };
        finish_composition(a1, a2, b2, c2, &s, &n, y1, d)
    }

    /// `self * self`. Same formulas as [`QuadForm::compose`] specialised to
    /// equal operands, so the result is identical.
    pub fn square(&self) -> QuadForm {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        finish_composition(a, a, b, c, b, &BigInt::zero(), BigInt::zero(), a.clone())
    }

    /// Left-to-right binary exponentiation; `pow(0)` is the identity.
    pub fn pow(&self, k: &BigInt) -> QuadForm {
        assert!(!k.is_negative(), "negative exponent");
        let base = self.reduce();
        if k.is_zero() {
            return QuadForm::identity_like(&base);
        }
        let bits = k.bits();
        let mut acc = base.clone();
        for i in (0..bits - 1).rev() {
            acc = acc.square();
            if k.bit(i) {
                acc = acc.compose_unchecked(&base);
            }
        }
        acc
    }

    pub fn pow_u64(&self, k: u64) -> QuadForm {
        self.pow(&BigInt::from(k))
    }

    /// Principal form in the group of `self`. For `D = 1 mod 4` this is
    /// `(1, 1, (1 - D)/4)`.
    pub fn identity_like(f: &QuadForm) -> QuadForm {
        let d = f.disc_value();
        if d.is_even() {
            QuadForm { a: BigInt::one(), b: BigInt::zero(), c: -d / 4 }
        } else {
            QuadForm { a: BigInt::one(), b: BigInt::one(), c: (BigInt::one() - d) / 4 }
        }
    }

    /// Reduced forms of order dividing two have `b = 0`, `b = a` or `a = c`.
    pub fn is_ambiguous(&self) -> bool {
        self.is_reduced() && (self.b.is_zero() || self.b == self.a || self.a == self.c)
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_composition(
    a1: &BigInt,
    a2: &BigInt,
    b2: &BigInt,
    c2: &BigInt,
    s: &BigInt,
    n: &BigInt,
    y1: BigInt,
    d: BigInt,
) -> QuadForm {
    let (x2, y2, d1) = if (s % &d).is_zero() {
        (BigInt::zero(), -BigInt::one(), d)
    } else {
        let e = s.extended_gcd(&d);
        (e.x, -e.y, e.gcd)
    };
    let v1 = a1 / &d1;
    let v2 = a2 / &d1;
    let r = (y1 * y2 * n - x2 * c2).mod_floor(&v1);
    let b3 = b2 + ((&v2 * &r) << 1);
    let c3 = (c2 * &d1 + &r * (b2 + &v2 * &r)) / &v1;
    let mut a3 = v1 * v2;
    let mut b3 = b3;
    let mut c3 = c3;
    reduce_in_place(&mut a3, &mut b3, &mut c3);
    QuadForm { a: a3, b: b3, c: c3 }
}

fn reduce_in_place(a: &mut BigInt, b: &mut BigInt, c: &mut BigInt) {
    // Gauss reduction: normalise b into (-a, a], swap when c < a.
    let cap = 4 * ((&*b * &*b).bits() + (&*a * &*c).bits() + 4);
    let mut steps = 0u64;
    loop {
        let two_a: BigInt = &*a << 1;
        if b.abs() > *a || (-&*a == *b) {
            // b' = b + 2ak in (-a, a],  c' = a k^2 + b k + c
            let k = (&*a - &*b).div_floor(&two_a);
            let new_c = &*a * &k * &k + &*b * &k + &*c;
            *b += &two_a * &k;
            *c = new_c;
        }
        if *c < *a {
            std::mem::swap(a, c);
            *b = -&*b;
        } else {
            if *a == *c && b.is_negative() {
                *b = -&*b;
            }
            return;
        }
        steps += 1;
        if steps > cap {
            panic!("form reduction did not terminate within {cap} steps");
        }
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl FromStr for QuadForm {
    type Err = Error;

    /// Parses the canonical rendering `(a, b, c)`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::Domain(format!("malformed form {s:?}")))?;
        let coeffs: Vec<BigInt> = inner
            .split(',')
            .map(|t| t.trim().parse::<BigInt>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(format!("malformed form {s:?}: {e}")))?;
        match <[BigInt; 3]>::try_from(coeffs) {
            Ok([a, b, c]) => QuadForm::new(a, b, c),
            Err(_) => Err(Error::Domain(format!("form {s:?} needs three coefficients"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm::from_i64(a, b, c)
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(f(1, 0, 5).discriminant(), Discriminant::from(-20));
        assert_eq!(f(125, -42, 304).discriminant(), Discriminant::from(-150236));
        let h1 = "(5981917, 450638, 8731416)".parse::<QuadForm>().unwrap();
        let expected = BigInt::from(-4 * 37559) * BigInt::from(37273) * BigInt::from(37273);
        assert_eq!(h1.discriminant().value(), &expected);
    }

    #[test]
    fn construction_rejects_bad_forms() {
        assert!(QuadForm::new(1.into(), 3.into(), 1.into()).is_err());
        assert!(QuadForm::new(0.into(), 1.into(), 1.into()).is_err());
        assert!(QuadForm::new((-1).into(), 0.into(), (-1).into()).is_err());
        assert!(Discriminant::new(BigInt::from(-6)).is_err());
        assert!(Discriminant::new(BigInt::from(8)).is_err());
        assert_eq!(QuadForm::identity(&Discriminant::from(-23)).unwrap(), QuadForm::from_i64(1, 1, 6));
        assert!("(1, 2)".parse::<QuadForm>().is_err());
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(f(1, 0, 37559).reduce(), f(1, 0, 37559));
        assert_eq!(f(125, -42, 304).reduce(), f(125, -42, 304));
        let moved = f(2, 2, 3).transform(&1.into(), &3.into(), &0.into(), &1.into()).unwrap();
        assert_ne!(moved, f(2, 2, 3));
        assert_eq!(moved.reduce(), f(2, 2, 3));
        // tie-breaks
        assert_eq!(f(2, -2, 3).reduce(), f(2, 2, 3));
        assert_eq!(f(3, -2, 3).reduce(), f(3, 2, 3));
    }

    #[test]
    fn identity_examples() {
        assert_eq!(QuadForm::identity(&Discriminant::from(-20)).unwrap(), f(1, 0, 5));
        assert_eq!(QuadForm::identity(&Discriminant::from(-4 * 37559)).unwrap(), f(1, 0, 37559));
        let m = BigInt::from(71) * BigInt::from(37273) * BigInt::from(37273);
        let d = Discriminant::from_minus_four(&m).unwrap();
        let e = QuadForm::identity(&d).unwrap();
        assert_eq!(e.c(), &m);
    }

    #[test]
    fn compose_examples() {
        let g = f(2, 2, 3);
        let e = f(1, 0, 5);
        assert_eq!(g.compose(&e).unwrap(), g);
        assert_eq!(g.compose(&g).unwrap(), e);
        assert_eq!(g.square(), e);
        let h = f(125, -42, 304);
        assert!(h.compose(&h.conjugate()).unwrap().is_identity());
        assert!(h.compose(&g).is_err());
    }

    #[test]
    fn pow_examples() {
        let g = f(2, 2, 3);
        assert_eq!(g.pow_u64(0), f(1, 0, 5));
        assert_eq!(g.pow_u64(1), g);
        assert_eq!(g.pow_u64(2), f(1, 0, 5));
        let odd = f(2, 1, 3); // D = -23, h = 3
        assert!(odd.pow_u64(3).is_identity());
        assert_eq!(odd.pow_u64(4), odd);
    }

    #[test]
    fn display_round_trip() {
        let g = f(125, -42, 304);
        assert_eq!(g.to_string(), "(125, -42, 304)");
        assert_eq!(g.to_string().parse::<QuadForm>().unwrap(), g);
    }
}
