//! Assigned characters (genus characters) of a negative discriminant.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use super::{kronecker, Discriminant, QuadForm};
use crate::arith::distinct_prime_factors_u64;
use crate::error::{Error, Result};

/// Default search radius for a represented value coprime to `D`.
pub const DEFAULT_REPRESENTATION_BOUND: i64 = 64;

/// Largest `|D|` that [`assigned_characters`] will trial-factor.
const TRIAL_FACTOR_CAP: u64 = 100_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Character {
    /// `a -> (a/p)` for an odd prime `p | D`.
    Odd(BigInt),
    /// `a -> (-1/a)` for odd `a`.
    Delta,
    /// `a -> (2/a)` for odd `a`.
    Epsilon,
    /// Product of the two above.
    DeltaEpsilon,
}

impl Character {
    pub fn eval(&self, a: &BigInt) -> i8 {
        match self {
            Character::Odd(p) => kronecker(a, p),
            Character::Delta => delta(a),
            Character::Epsilon => epsilon(a),
            Character::DeltaEpsilon => delta(a) * epsilon(a),
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Character::Odd(p) => write!(f, "chi_{p}"),
            Character::Delta => write!(f, "delta"),
            Character::Epsilon => write!(f, "epsilon"),
            Character::DeltaEpsilon => write!(f, "delta*epsilon"),
        }
    }
}

fn delta(a: &BigInt) -> i8 {
    if a.mod_floor(&BigInt::from(4)).is_one() {
        1
    } else {
        -1
    }
}

fn epsilon(a: &BigInt) -> i8 {
    match a.mod_floor(&BigInt::from(8)).to_u8() {
        Some(1) | Some(7) => 1,
        _ => -1,
    }
}

/// Values of the assigned characters at one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterVector {
    pub labels: Vec<Character>,
    pub values: Vec<i8>,
}

impl CharacterVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Componentwise product; labels must agree.
    pub fn product(&self, other: &CharacterVector) -> Option<CharacterVector> {
        if self.labels != other.labels {
            return None;
        }
        Some(CharacterVector {
            labels: self.labels.clone(),
            values: self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect(),
        })
    }
}

/// The assigned characters of `D`, trial-factoring `|D|` for its odd primes.
pub fn assigned_characters(d: &Discriminant) -> Result<Vec<Character>> {
    let abs = d
        .value()
        .abs()
        .to_u64()
        .filter(|&v| v <= TRIAL_FACTOR_CAP)
        .ok_or_else(|| Error::Refused(format!("|{d}| too large to trial-factor")))?;
    let odd: Vec<BigInt> = distinct_prime_factors_u64(abs)
        .into_iter()
        .filter(|&p| p != 2)
        .map(BigInt::from)
        .collect();
    Ok(assigned_characters_with_primes(d, &odd))
}

/// The assigned characters of `D` given its distinct odd prime divisors.
pub fn assigned_characters_with_primes(d: &Discriminant, odd_primes: &[BigInt]) -> Vec<Character> {
    let mut chars: Vec<Character> = odd_primes.iter().cloned().map(Character::Odd).collect();
    if let Some(n) = d.quarter() {
        match n.mod_floor(&BigInt::from(8)).to_u8().unwrap() {
            3 | 7 => {}
            1 | 5 => chars.push(Character::Delta),
            2 => chars.push(Character::DeltaEpsilon),
            6 => chars.push(Character::Epsilon),
            4 => chars.push(Character::Delta),
            0 => {
                chars.push(Character::Delta);
                chars.push(Character::Epsilon);
            }
            _ => unreachable!(),
        }
    }
    chars
}

/// Evaluates the assigned characters at a value represented by `f` and
/// coprime to the discriminant.
pub fn chi_eval(f: &QuadForm) -> Result<CharacterVector> {
    let chars = assigned_characters(&f.discriminant())?;
    chi_eval_with_bound(f, &chars, DEFAULT_REPRESENTATION_BOUND)
}

/// [`chi_eval`] with explicit characters and search radius. Scans `(x, y)`
/// by increasing `max(|x|, |y|)`.
pub fn chi_eval_with_bound(f: &QuadForm, chars: &[Character], bound: i64) -> Result<CharacterVector> {
    let d = f.discriminant();
    let value = first_coprime_value(f, d.value(), bound, 0).ok_or_else(|| {
        Error::SearchExhausted(format!("{f} represents no value coprime to {d} within radius {bound}"))
    })?;
    Ok(CharacterVector {
        labels: chars.to_vec(),
        values: chars.iter().map(|c| c.eval(&value)).collect(),
    })
}

/// The `skip`-th value (in scan order) represented by `f` that is coprime
/// to `d`.
pub(crate) fn first_coprime_value(f: &QuadForm, d: &BigInt, bound: i64, mut skip: usize) -> Option<BigInt> {
    for radius in 1..=bound {
        for (x, y) in ring(radius) {
            let v = f.eval(&BigInt::from(x), &BigInt::from(y));
            if v.gcd(d).is_one() {
                if skip == 0 {
                    return Some(v);
                }
                skip -= 1;
            }
        }
    }
    None
}

/// Lattice points with `max(|x|, |y|) = radius`, up to sign (`y >= 0`, and
/// `x > 0` when `y = 0`).
fn ring(radius: i64) -> impl Iterator<Item = (i64, i64)> {
    let top = (-radius..=radius).map(move |x| (x, radius));
    let sides = (1..radius).flat_map(move |y| [(radius, y), (-radius, y)]);
    let axis = std::iter::once((radius, 0));
    axis.chain(sides).chain(top)
}
