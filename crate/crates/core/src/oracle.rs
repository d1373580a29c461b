//! Brute-force ground truth for small instances: class group enumeration,
//! element orders and trial factoring.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{is_probable_prime, perfect_power};
use crate::error::{Error, Result};
use crate::forms::{Discriminant, QuadForm};

/// Default largest `|D|` accepted by [`enumerate_class_group`].
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// Default largest `n` accepted by [`trial_factor`] without further checks.
pub const TRIAL_FACTOR_CAP: u64 = 100_000_000_000_000;

/// Trial division bound used by [`trial_factor`].
pub const TRIAL_DIVISION_BOUND: u64 = 10_000_000;

/// All reduced primitive forms of one discriminant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassGroupTable {
    d: Discriminant,
    forms: Vec<QuadForm>,
}

impl ClassGroupTable {
    pub fn discriminant(&self) -> &Discriminant {
        &self.d
    }

    /// Sorted lexicographically on `(a, b, c)`.
    pub fn forms(&self) -> &[QuadForm] {
        &self.forms
    }

    pub fn h(&self) -> usize {
        self.forms.len()
    }

    pub fn contains(&self, f: &QuadForm) -> bool {
        self.forms.binary_search(&f.reduce()).is_ok()
    }

    pub fn identity(&self) -> &QuadForm {
        &self.forms[0]
    }

    /// Forms `f` with `f^2 = e`, the identity included.
    pub fn order_two_count(&self) -> usize {
        self.forms.iter().filter(|f| f.square().is_identity()).count()
    }

    /// One fixture line: `D,h,(a, b, c),(a, b, c),...`.
    pub fn to_fixture_line(&self) -> String {
        let mut line = format!("{},{}", self.d, self.h());
        for f in &self.forms {
            write!(line, ",{f}").unwrap();
        }
        line
    }

    pub fn parse_fixture_line(line: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("malformed fixture line {line:?}"));
        let mut parts = line.splitn(3, ',');
        let d: BigInt = parts.next().and_then(|t| t.trim().parse().ok()).ok_or_else(bad)?;
        let h: usize = parts.next().and_then(|t| t.trim().parse().ok()).ok_or_else(bad)?;
        let rest = parts.next().unwrap_or("");
        let mut forms = Vec::new();
        let mut depth_start = None;
        for (i, ch) in rest.char_indices() {
            match ch {
                '(' => depth_start = Some(i),
                ')' => {
                    let start = depth_start.take().ok_or_else(bad)?;
                    forms.push(rest[start..=i].parse::<QuadForm>()?);
                }
                _ => {}
            }
        }
        if forms.len() != h {
            return Err(bad());
        }
        let d = Discriminant::new(d)?;
        if forms.iter().any(|f| f.discriminant() != d) {
            return Err(bad());
        }
        Ok(ClassGroupTable { d, forms })
    }
}

/// Every reduced primitive form of discriminant `D`, refusing `|D|` above
/// [`ENUMERATION_CAP`].
pub fn enumerate_class_group(d: &Discriminant) -> Result<ClassGroupTable> {
    enumerate_class_group_capped(d, ENUMERATION_CAP)
}

pub fn enumerate_class_group_capped(d: &Discriminant, cap: u64) -> Result<ClassGroupTable> {
    let abs = d
        .value()
        .abs()
        .to_u64()
        .filter(|&v| v <= cap)
        .ok_or_else(|| Error::Refused(format!("|{d}| exceeds the enumeration cap {cap}")))?;
    let dv = -(abs as i64);
    let parity = dv.rem_euclid(2);
    let mut forms = Vec::new();
    // reduced forms have 3a^2 <= |D|
    let a_max = (abs / 3).sqrt();
    for a in 1..=a_max as i64 {
        let mut b = -a + 1;
        if (b - parity).rem_euclid(2) != 0 {
            b += 1;
        }
        while b <= a {
            let num = b * b - dv;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                let reduced = c > a || (c == a && b >= 0);
                if c >= a && reduced && a.gcd(&b).gcd(&c) == 1 {
                    forms.push(QuadForm::from_i64(a, b, c));
                }
            }
            b += 2;
        }
    }
    forms.sort();
    Ok(ClassGroupTable { d: d.clone(), forms })
}

/// `h(D)` by enumeration.
pub fn class_number(d: &Discriminant) -> Result<usize> {
    Ok(enumerate_class_group(d)?.h())
}

/// Least `k >= 1` with `f^k = e`, by stepping through powers.
pub fn order_of(f: &QuadForm, table: &ClassGroupTable) -> Result<u64> {
    if !table.contains(f) {
        return Err(Error::Domain(format!("{f} is not in C({})", table.discriminant())));
    }
    let base = f.reduce();
    let mut cur = base.clone();
    let mut k = 1u64;
    while !cur.is_identity() {
        cur = cur.compose_unchecked(&base);
        k += 1;
        if k as usize > table.h() {
            return Err(Error::Inconsistency(format!("order of {f} exceeds h")));
        }
    }
    Ok(k)
}

/// The prime factorization of `n` as a sorted multiset.
///
/// Divides out primes below [`TRIAL_DIVISION_BOUND`]; a cofactor left over
/// is accepted when it is below the square of that bound or passes the
/// Miller-Rabin test, which is deterministic in the range reached here.
pub fn trial_factor(n: &BigInt) -> Result<Vec<BigInt>> {
    if !n.is_positive() {
        return Err(Error::Domain(format!("cannot factor {n}")));
    }
    if let Some(v) = n.to_u128() {
        return trial_factor_u128(v).map(|fs| fs.into_iter().map(BigInt::from).collect());
    }
    if let Some((root, k)) = perfect_power(n) {
        let inner = trial_factor(&root)?;
        let mut out: Vec<BigInt> = inner.iter().flat_map(|p| std::iter::repeat(p.clone()).take(k as usize)).collect();
        out.sort();
        return Ok(out);
    }
    let mut m = n.clone();
    let mut out = Vec::new();
    let mut p = 2u64;
    while p <= TRIAL_DIVISION_BOUND {
        let pb = BigInt::from(p);
        if &pb * &pb > m {
            break;
        }
        while (&m % p).is_zero() {
            m /= p;
            out.push(pb.clone());
        }
        p += if p == 2 { 1 } else { 2 };
    }
    finish_cofactor(m, &mut out)?;
    Ok(out)
}

fn finish_cofactor(m: BigInt, out: &mut Vec<BigInt>) -> Result<()> {
    if !m.is_one() {
        let bound_sq = BigInt::from(TRIAL_DIVISION_BOUND) * TRIAL_DIVISION_BOUND;
        if m < bound_sq || is_probable_prime(&m) {
            out.push(m);
        } else if let Some((root, k)) = perfect_power(&m).filter(|(r, _)| is_probable_prime(r)) {
            out.extend(std::iter::repeat(root).take(k as usize));
        } else {
            return Err(Error::Refused(format!("cofactor {m} is composite with no factor below {TRIAL_DIVISION_BOUND}")));
        }
    }
    out.sort();
    Ok(())
}

fn trial_factor_u128(mut n: u128) -> Result<Vec<u128>> {
    let mut out = Vec::new();
    let mut p = 2u128;
    while p <= TRIAL_DIVISION_BOUND as u128 && p * p <= n {
        while n % p == 0 {
            n /= p;
            out.push(p);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        let big = BigInt::from(n);
        let bound_sq = (TRIAL_DIVISION_BOUND as u128) * (TRIAL_DIVISION_BOUND as u128);
        if n < bound_sq || is_probable_prime(&big) {
            out.push(n);
        } else if let Some((root, k)) = perfect_power(&big).filter(|(r, _)| is_probable_prime(r)) {
            out.extend(std::iter::repeat(root.to_u128().unwrap()).take(k as usize));
        } else if n <= TRIAL_FACTOR_CAP as u128 {
            unreachable!("cofactor below the cap survived trial division");
        } else {
            return Err(Error::Refused(format!("cofactor {n} is composite with no factor below {TRIAL_DIVISION_BOUND}")));
        }
    }
    out.sort();
    Ok(out)
}

/// Groups a sorted multiset of primes into `(p, e)` pairs.
pub fn group_factors(primes: &[BigInt]) -> Vec<(BigInt, u32)> {
    let mut out: Vec<(BigInt, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if q == p => *e += 1,
            _ => out.push((p.clone(), 1)),
        }
    }
    out
}

/// True when no prime square divides `n`, decided by trial factoring.
pub fn is_squarefree(n: &BigInt) -> Result<bool> {
    let fs = trial_factor(n)?;
    Ok(fs.windows(2).all(|w| w[0] != w[1]))
}

/// Header comment and one line per discriminant, for `-hi <= D <= -lo`.
pub fn fixture_lines(lo: u64, hi: u64) -> Result<Vec<String>> {
    let mut lines = vec![format!("# reduced forms for discriminants -{hi} <= D <= -{lo}; D,h,forms")];
    for abs in lo.max(3)..=hi {
        if !matches!(abs % 4, 0 | 3) {
            continue;
        }
        let d = Discriminant::new(-BigInt::from(abs))?;
        lines.push(enumerate_class_group(&d)?.to_fixture_line());
    }
    Ok(lines)
}
