use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use super::{kronecker, sqrt_mod_prime, Discriminant, QuadForm};
use crate::arith::is_prime_u64;
use crate::error::{Error, Result};

/// Largest prime tried as the leading coefficient of a random prime form.
pub const PRIME_FORM_SEARCH_CAP: u64 = 1 << 22;

/// Random primitive prime form `(l, b, c)` of discriminant `D = -4m`,
/// returned unreduced so that `l` is visible.
///
/// Starts at a random odd prime below 1000 and walks successive primes until
/// one splits in the order: `l` odd, `l` not dividing `m`, `(D/l) = 1`.
pub fn random_prime_form<R: Rng + ?Sized>(d: &Discriminant, rng: &mut R) -> Result<QuadForm> {
    random_prime_form_avoiding(d, &BigInt::one(), PRIME_FORM_SEARCH_CAP, rng)
}

/// As [`random_prime_form`], additionally skipping primes dividing `avoid`.
pub fn random_prime_form_avoiding<R: Rng + ?Sized>(
    d: &Discriminant,
    avoid: &BigInt,
    cap: u64,
    rng: &mut R,
) -> Result<QuadForm> {
    let m = d
        .quarter()
        .filter(|m| *m > BigInt::zero())
        .ok_or_else(|| Error::Domain(format!("random prime forms need D = -4m, got {d}")))?;
    let start = rng.gen_range(3..1000u64) | 1;
    let mut l = start;
    while l <= cap {
        if is_prime_u64(l) {
            let lb = BigInt::from(l);
            if !(&m % &lb).is_zero()
                && !(avoid % &lb).is_zero()
                && kronecker(d.value(), &lb) == 1
            {
                // b = 2t with t^2 = -m (mod l), so b^2 = D (mod 4l)
                let t = sqrt_mod_prime(&(-&m), &lb)?.ok_or_else(|| {
                    Error::Inconsistency(format!("-{m} has no root mod {l} despite symbol 1"))
                })?;
                let b: BigInt = t.clone() << 1;
                let c = (&t * &t + &m) / &lb;
                debug_assert!(((&t * &t + &m) % &lb).is_zero());
                return QuadForm::new(lb, b, c);
            }
        }
        l += 2;
    }
    Err(Error::SearchExhausted(format!(
        "no split prime in [{start}, {cap}] for discriminant {d}"
    )))
}
