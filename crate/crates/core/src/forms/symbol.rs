//! Kronecker symbols and modular square roots.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::is_probable_prime;
use crate::error::{Error, Result};

/// Kronecker symbol `(a/m)` with the usual extensions to `m = 2`, `m = -1`
/// and `m = 0`.
pub fn kronecker(a: &BigInt, m: &BigInt) -> i8 {
    if m.is_zero() {
        return if a.abs().is_one() { 1 } else { 0 };
    }
    let mut a = a.clone();
    let mut m = m.clone();
    if a.is_even() && m.is_even() {
        return 0;
    }

    let mut result: i8 = 1;
    // (a/2) = 0 for a even, +1 for a = +-1 mod 8, -1 for a = +-3 mod 8
    let two_factor = |a: &BigInt| -> i8 {
        match mod8(a) {
            1 | 7 => 1,
            _ => -1,
        }
    };
    let twos = m.trailing_zeros().unwrap_or(0);
    if twos > 0 {
        m >>= twos;
        if twos % 2 == 1 {
            result *= two_factor(&a);
        }
    }
    if m.is_negative() {
        m = -m;
        if a.is_negative() {
            result = -result;
        }
    }
    // m is now odd and positive: Jacobi symbol
    a = a.mod_floor(&m);
    while !a.is_zero() {
        let t = a.trailing_zeros().unwrap_or(0);
        if t > 0 {
            a >>= t;
            if t % 2 == 1 && matches!(mod8(&m), 3 | 5) {
                result = -result;
            }
        }
        if mod4(&a) == 3 && mod4(&m) == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut m);
        a = a.mod_floor(&m);
    }
    if m.is_one() {
        result
    } else {
        0
    }
}

/// Kronecker symbol on machine integers.
pub fn kronecker_i64(a: i64, m: i64) -> i8 {
    kronecker(&BigInt::from(a), &BigInt::from(m))
}

fn mod8(x: &BigInt) -> u8 {
    x.mod_floor(&BigInt::from(8)).to_u8().unwrap()
}

fn mod4(x: &BigInt) -> u8 {
    x.mod_floor(&BigInt::from(4)).to_u8().unwrap()
}

/// Square root of `a` modulo an odd prime `p` by Tonelli-Shanks.
///
/// Returns `Ok(None)` when `a` is a quadratic non-residue. The root returned
/// lies in `[0, p)`; the other root is `p - x`.
pub fn sqrt_mod_prime(a: &BigInt, p: &BigInt) -> Result<Option<BigInt>> {
    if !is_probable_prime(p) {
        return Err(Error::Domain(format!("modulus {p} is not prime")));
    }
    let a = a.mod_floor(p);
    if a.is_zero() {
        return Ok(Some(BigInt::zero()));
    }
    let two = BigInt::from(2);
    if *p == two {
        return Ok(Some(a));
    }
    if kronecker(&a, p) != 1 {
        return Ok(None);
    }
    let p_minus_1: BigInt = p - 1;
    let s = p_minus_1.trailing_zeros().unwrap_or(0);
    let q = &p_minus_1 >> s;
    if s == 1 {
        let e = (p + 1) >> 2;
        return Ok(Some(a.modpow(&e, p)));
    }
    // least quadratic non-residue
    let mut z = two;
    while kronecker(&z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = z.modpow(&q, p);
    let mut t = a.modpow(&q, p);
    let mut r = a.modpow(&((&q + 1) >> 1), p);
    while !t.is_one() {
        let mut i = 0;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = (&t2 * &t2) % p;
            i += 1;
        }
        let b = c.modpow(&(BigInt::one() << (m - i - 1)), p);
        m = i;
        c = (&b * &b) % p;
        t = (&t * &c) % p;
        r = (&r * &b) % p;
    }
    Ok(Some(r))
}

/// Square root of `a` modulo `p^2` for an odd prime `p` not dividing `a`,
/// via one Hensel step from the root modulo `p`.
pub fn sqrt_mod_prime_square(a: &BigInt, p: &BigInt) -> Result<Option<BigInt>> {
    if (a % p).is_zero() {
        return Err(Error::Precondition(format!("{p} divides {a}")));
    }
    let Some(x0) = sqrt_mod_prime(a, p)? else {
        return Ok(None);
    };
    let p2 = p * p;
    // x = x0 + t p with 2 x0 t = (a - x0^2)/p  (mod p)
    let lifted_err = (a - &x0 * &x0).mod_floor(&p2) / p;
    let inv = mod_inverse(&(BigInt::from(2) * &x0), p)
        .ok_or_else(|| Error::Inconsistency("2x not invertible mod p".into()))?;
    let t = (lifted_err * inv).mod_floor(p);
    Ok(Some((x0 + t * p).mod_floor(&p2)))
}

/// Inverse of `a` modulo `m`, when it exists.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::primes_up_to;

    fn euler(a: i64, p: i64) -> i8 {
        let r = BigInt::from(a).mod_floor(&BigInt::from(p));
        if r.is_zero() {
            return 0;
        }
        let v = r.modpow(&BigInt::from((p - 1) / 2), &BigInt::from(p));
        if v.is_one() {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_matches_euler_for_odd_primes() {
        for &p in primes_up_to(200).iter().skip(1) {
            for a in -300..300 {
                assert_eq!(kronecker_i64(a, p as i64), euler(a, p as i64), "({a}/{p})");
            }
        }
    }

    #[test]
    fn kronecker_special_cases() {
        for x in -50..50 {
            assert_eq!(kronecker_i64(x, 1), 1);
        }
        assert_eq!(kronecker_i64(-284, 3), 1);
        assert_eq!(kronecker_i64(-20, 3), 1);
        // (a/2): +1 for a = 1, 7 mod 8, -1 for 3, 5 mod 8, 0 for even
        assert_eq!(kronecker_i64(7, 2), 1);
        assert_eq!(kronecker_i64(-7, 2), 1);
        assert_eq!(kronecker_i64(5, 2), -1);
        assert_eq!(kronecker_i64(4, 2), 0);
        // (a/-1) = sign(a)
        assert_eq!(kronecker_i64(-3, -1), -1);
        assert_eq!(kronecker_i64(3, -1), 1);
        assert_eq!(kronecker_i64(1, 0), 1);
        assert_eq!(kronecker_i64(2, 0), 0);
        // multiplicative in the lower argument
        for a in [-23i64, -20, -7, 5, 12] {
            for m in [3i64, 6, 10, 15, 24] {
                for m2 in [2i64, 5, 9] {
                    assert_eq!(
                        kronecker_i64(a, m * m2),
                        kronecker_i64(a, m) * kronecker_i64(a, m2)
                    );
                }
            }
        }
    }

    #[test]
    fn appendix_symbol_is_a_unit() {
        let d = BigInt::from(-4 * 37559);
        let v = kronecker(&d, &BigInt::from(37273));
        assert_eq!(v, euler(-4 * 37559, 37273));
        assert_eq!(v, -1);
    }

    #[test]
    fn sqrt_mod_small_primes_exhaustive() {
        assert_eq!(sqrt_mod_prime(&BigInt::zero(), &BigInt::from(13)).unwrap(), Some(BigInt::zero()));
        let r = sqrt_mod_prime(&BigInt::from(2), &BigInt::from(7)).unwrap().unwrap();
        assert!(r == BigInt::from(3) || r == BigInt::from(4));
        for &p in primes_up_to(300).iter().skip(1) {
            let pb = BigInt::from(p);
            for a in 0..p {
                let is_residue = (0..p).any(|x| (x * x) % p == a);
                match sqrt_mod_prime(&BigInt::from(a), &pb).unwrap() {
                    Some(x) => assert_eq!((&x * &x) % &pb, BigInt::from(a)),
                    None => assert!(!is_residue, "{a} mod {p}"),
                }
            }
        }
        assert!(sqrt_mod_prime(&BigInt::from(2), &BigInt::from(15)).is_err());
    }

    #[test]
    fn hensel_lift_matches_worked_example() {
        let r = BigInt::from(37273);
        let r2 = &r * &r;
        for (a, expected) in [(5981917i64, 827751348i64), (1138784, 467938638)] {
            let x = sqrt_mod_prime_square(&BigInt::from(a), &r).unwrap().unwrap();
            assert_eq!((&x * &x).mod_floor(&r2), BigInt::from(a));
            let expected = BigInt::from(expected);
            assert!(x == expected || &r2 - &x == expected, "root {x}");
        }
    }
}
