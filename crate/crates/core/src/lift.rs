//! Forms of non-fundamental discriminant: lifting from `C(D)` to `C(Dp^2)`,
//! the projection back down, and the index `phi_D(r)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::arith::is_probable_prime;
use crate::error::{Error, Result};
use crate::forms::{kronecker, sqrt_mod_prime_square, Discriminant, QuadForm};
use crate::oracle::enumerate_class_group_capped;

/// Largest `|D|` for which [`project`] enumerates `C(D)`.
pub const PROJECT_CAP: u64 = 1_000_000;

/// The column offset `h` of a lifting matrix: `[[p, h], [0, 1]]` for finite
/// `h`, `[[1, 0], [0, p]]` for infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftH {
    Finite(BigInt),
    Infinity,
}

impl fmt::Display for LiftH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftH::Finite(h) => h.fmt(f),
            LiftH::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftChoice {
    pub p: BigInt,
    pub h: LiftH,
}

impl LiftChoice {
    pub fn new(p: BigInt, h: LiftH) -> Result<Self> {
        check_odd_prime(&p)?;
        if let LiftH::Finite(v) = &h {
            if v.is_negative() || *v >= p {
                return Err(Error::Domain(format!("h = {v} outside [0, {p})")));
            }
        }
        Ok(LiftChoice { p, h })
    }

    pub fn finite(p: i64, h: i64) -> Result<Self> {
        Self::new(p.into(), LiftH::Finite(h.into()))
    }

    pub fn infinity(p: i64) -> Result<Self> {
        Self::new(p.into(), LiftH::Infinity)
    }
}

fn check_odd_prime(p: &BigInt) -> Result<()> {
    if p.is_even() || !is_probable_prime(p) {
        return Err(Error::Domain(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// How to lift into `C(D r^2)`: the factorization of `r` and one choice of
/// `h` per prime occurrence, applied in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftPlan {
    r: BigInt,
    factors: Vec<(BigInt, u32)>,
    choices: Vec<LiftChoice>,
}

impl LiftPlan {
    /// Plan with `h = 0` at every step.
    pub fn new(factors: Vec<(BigInt, u32)>) -> Result<Self> {
        let choices = factors
            .iter()
            .flat_map(|(p, e)| std::iter::repeat(p.clone()).take(*e as usize))
            .map(|p| LiftChoice { p, h: LiftH::Finite(BigInt::zero()) })
            .collect();
        Self::with_choices(factors, choices)
    }

    pub fn prime(r: BigInt) -> Result<Self> {
        Self::new(vec![(r, 1)])
    }

    pub fn prime_power(p: BigInt, e: u32) -> Result<Self> {
        Self::new(vec![(p, e)])
    }

    /// Explicit choices; their primes must list every prime occurrence of
    /// `r` in factor order.
    pub fn with_choices(factors: Vec<(BigInt, u32)>, choices: Vec<LiftChoice>) -> Result<Self> {
        let mut expected = Vec::new();
        for (p, e) in &factors {
            check_odd_prime(p)?;
            if *e == 0 {
                return Err(Error::Domain(format!("zero exponent for {p}")));
            }
            expected.extend(std::iter::repeat(p).take(*e as usize));
        }
        let listed: Vec<&BigInt> = choices.iter().map(|c| &c.p).collect();
        if listed != expected {
            return Err(Error::Domain("lift choices do not match the factorization of r".into()));
        }
        let r = factors.iter().map(|(p, e)| num_traits::pow(p.clone(), *e as usize)).product();
        Ok(LiftPlan { r, factors, choices })
    }

    /// Same factorization, uniformly random `h` (including infinity) per step.
    pub fn random<R: Rng + ?Sized>(factors: Vec<(BigInt, u32)>, rng: &mut R) -> Result<Self> {
        let mut choices = Vec::new();
        for (p, e) in &factors {
            let small = u64::try_from(p).map_err(|_| Error::Domain(format!("{p} too large for random h")))?;
            for _ in 0..*e {
                let pick = rng.gen_range(0..=small);
                let h = if pick == small { LiftH::Infinity } else { LiftH::Finite(pick.into()) };
                choices.push(LiftChoice { p: p.clone(), h });
            }
        }
        Self::with_choices(factors, choices)
    }

    pub fn r(&self) -> &BigInt {
        &self.r
    }

    pub fn factors(&self) -> &[(BigInt, u32)] {
        &self.factors
    }

    pub fn choices(&self) -> &[LiftChoice] {
        &self.choices
    }
}

/// One lifting step: `(a p^2, p(b + 2ah), a h^2 + b h + c)` for finite `h`,
/// `(a, bp, cp^2)` for infinity. The result may be imprimitive and is not
/// reduced.
pub fn lift_one(g: &QuadForm, choice: &LiftChoice) -> Result<QuadForm> {
    let p = &choice.p;
    if !g.a().gcd(p).is_one() {
        return Err(Error::Precondition(format!("gcd({}, {p}) != 1", g.a())));
    }
    let (a, b, c) = (g.a(), g.b(), g.c());
    let f = match &choice.h {
        LiftH::Finite(h) => {
            let two_ah: BigInt = (a * h) << 1;
            QuadForm::from_parts_unchecked(a * p * p, p * (b + two_ah), a * h * h + b * h + c)
        }
        LiftH::Infinity => QuadForm::from_parts_unchecked(a.clone(), b * p, c * p * p),
    };
    Ok(f)
}

/// All primitive lifts of `g` to `C(Dp^2)`, reduced, in the order
/// `h = 0, ..., p - 1, infinity`. There are exactly `p - (D/p)` of them.
pub fn lift_all(g: &QuadForm, p: &BigInt) -> Result<Vec<QuadForm>> {
    check_odd_prime(p)?;
    if g.discriminant().value() >= &BigInt::from(-4) {
        return Err(Error::Precondition(format!("discriminant of {g} is not below -4")));
    }
    let mut out = Vec::new();
    for choice in all_choices(p) {
        let f = lift_one(g, &choice)?;
        if f.is_primitive() {
            out.push(f.reduce());
        }
    }
    Ok(out)
}

fn all_choices(p: &BigInt) -> impl Iterator<Item = LiftChoice> + '_ {
    num_iter(p)
        .map(|h| LiftChoice { p: p.clone(), h: LiftH::Finite(h) })
        .chain(std::iter::once(LiftChoice { p: p.clone(), h: LiftH::Infinity }))
}

fn num_iter(p: &BigInt) -> impl Iterator<Item = BigInt> + '_ {
    let mut h = BigInt::zero();
    std::iter::from_fn(move || {
        if &h < p {
            let out = h.clone();
            h += 1;
            Some(out)
        } else {
            None
        }
    })
}

/// `phi_D(r) = prod p^(e-1) (p - (D/p))` over the factorization of odd `r`.
pub fn phi(d: &Discriminant, factors: &[(BigInt, u32)]) -> Result<BigInt> {
    let mut out = BigInt::one();
    for (p, e) in factors {
        if p.is_even() {
            return Err(Error::Domain("phi is only defined for odd r".into()));
        }
        check_odd_prime(p)?;
        if *e == 0 {
            continue;
        }
        out *= num_traits::pow(p.clone(), (*e - 1) as usize);
        out *= p - BigInt::from(kronecker(d.value(), p));
    }
    Ok(out)
}

/// An equivalent form whose leading coefficient is prime to `p`. For a
/// primitive form either `a` or `c` qualifies.
fn coprime_representative(g: &QuadForm, p: &BigInt) -> Result<QuadForm> {
    if g.a().gcd(p).is_one() {
        return Ok(g.clone());
    }
    if g.c().gcd(p).is_one() {
        return g.transform(&BigInt::zero(), &(-BigInt::one()), &BigInt::one(), &BigInt::zero());
    }
    let h = g.transform(&BigInt::one(), &BigInt::zero(), &BigInt::one(), &BigInt::one())?;
    if h.a().gcd(p).is_one() {
        Ok(h)
    } else {
        Err(Error::LiftFailed(format!("{g} has no small representative prime to {p}")))
    }
}

/// The reduced form of `C(D)` from which `f` in `C(Dp^2)` is derived, found
/// by enumerating `C(D)`. Test-scale only.
pub fn project(f: &QuadForm, p: &BigInt) -> Result<QuadForm> {
    let big = f.discriminant();
    let p2 = p * p;
    if !(big.value() % &p2).is_zero() {
        return Err(Error::Domain(format!("{p}^2 does not divide {big}")));
    }
    let d = Discriminant::new(big.value() / &p2)?;
    let table = enumerate_class_group_capped(&d, PROJECT_CAP)?;
    let target = f.reduce();
    for g in table.forms() {
        let rep = coprime_representative(g, p)?;
        if lift_all(&rep, p)?.contains(&target) {
            return Ok(g.clone());
        }
    }
    Err(Error::Inconsistency(format!("{f} is derived from no class of C({d})")))
}

/// Lifts `g` along `plan` into `C(D r^2)` and returns the reduced result.
///
/// Each step first moves to an equivalent representative with leading
/// coefficient prime to the step's prime. If the planned `h` gives an
/// imprimitive form, the following values of `h` (then infinity, then
/// wrapping around) are tried.
pub fn lift_to(g: &QuadForm, plan: &LiftPlan) -> Result<QuadForm> {
    let mut cur = g.reduce();
    for choice in plan.choices() {
        let rep = coprime_representative(&cur, &choice.p)?;
        let mut next = None;
        for candidate in rotated_choices(choice) {
            let f = lift_one(&rep, &candidate)?;
            if f.is_primitive() {
                next = Some(f.reduce());
                break;
            }
        }
        cur = next.ok_or_else(|| {
            Error::LiftFailed(format!("{rep} has no primitive lift at {}", choice.p))
        })?;
    }
    Ok(cur)
}

/// The choices from `start` onwards in the cyclic order `0, ..., p - 1,
/// infinity`. At most two of them give imprimitive forms, so callers only
/// ever pull a few.
fn rotated_choices(start: &LiftChoice) -> impl Iterator<Item = LiftChoice> + '_ {
    let p = &start.p;
    let mut cur = Some(start.h.clone());
    std::iter::from_fn(move || {
        let h = cur.take()?;
        let next = match &h {
            LiftH::Finite(v) if &(v + 1u32) < p => LiftH::Finite(v + 1u32),
            LiftH::Finite(_) => LiftH::Infinity,
            LiftH::Infinity => LiftH::Finite(BigInt::zero()),
        };
        if next != start.h {
            cur = Some(next);
        }
        Some(LiftChoice { p: p.clone(), h })
    })
}

/// Square roots taken while pairing two forms derived from a common class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductRoot {
    /// A root of `a_1` modulo `r^2`.
    pub x1: BigInt,
    /// A root of `a_2` modulo `r^2`.
    pub x2: BigInt,
    /// `x1 * x2 mod r^2`.
    pub x3: BigInt,
    /// The smaller of `x3` and `r^2 - x3`.
    pub x4: BigInt,
}

/// For reduced `h1, h2` in `C(-4 n r^2)` whose leading coefficients are
/// squares modulo `r^2`, the least non-negative lift of `+-sqrt(a_1 a_2)`.
pub fn represented_product_root(h1: &QuadForm, h2: &QuadForm, r: &BigInt, n: &BigInt) -> Result<ProductRoot> {
    let r2 = r * r;
    let (a1, a2) = (h1.a(), h2.a());
    if !(a1 * a2).gcd(r).is_one() {
        return Err(Error::Precondition(format!("{r} shares a factor with {a1} * {a2}")));
    }
    // r > (4/3) sqrt(n)  <=>  9 r^2 > 16 n
    if BigInt::from(9) * &r2 <= BigInt::from(16) * n {
        return Err(Error::Precondition(format!("r = {r} is not above (4/3) sqrt({n})")));
    }
    let root = |a: &BigInt| -> Result<BigInt> {
        sqrt_mod_prime_square(a, r)?.ok_or_else(|| Error::NotASquare(a.to_string(), r2.to_string()))
    };
    let x1 = root(a1)?;
    let x2 = root(a2)?;
    let x3 = (&x1 * &x2).mod_floor(&r2);
    let other = &r2 - &x3;
    let x4 = if other < x3 { other } else { x3.clone() };
    Ok(ProductRoot { x1, x2, x3, x4 })
}
