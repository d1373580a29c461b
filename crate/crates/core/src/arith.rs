//! Integer plumbing shared by the rest of the crate: primality, prime
//! sieving, perfect powers and integer roots.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};

/// Bases for Miller-Rabin. Deterministic below 3.3 * 10^24.
const MR_BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// All primes `<= limit`, by the sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Primes in the half-open interval `(lo, hi]`.
pub fn primes_in_interval(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= lo {
        return Vec::new();
    }
    // segmented over the window, sieving with primes up to sqrt(hi)
    let base = primes_up_to(hi.sqrt());
    let start = lo + 1;
    let len = (hi - lo) as usize;
    let mut composite = vec![false; len];
    for &p in &base {
        let first = (start.div_ceil(p) * p).max(p * p);
        let mut m = first;
        while m <= hi {
            composite[(m - start) as usize] = true;
            m += p;
        }
    }
    (0..len)
        .filter(|&i| !composite[i])
        .map(|i| start + i as u64)
        .filter(|&v| v >= 2)
        .collect()
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality for `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_BASES[..12] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller-Rabin with the first thirteen prime bases. Exact below
/// 3.3 * 10^24, a strong probable-prime test above.
pub fn is_probable_prime(n: &BigInt) -> bool {
    if n.sign() != Sign::Plus {
        return false;
    }
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    let n = n.magnitude();
    for &p in &MR_BASES {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for &a in &MR_BASES {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Least prime `>= n`.
pub fn next_prime(n: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    if *n <= two {
        return two;
    }
    let mut candidate = n.clone();
    if candidate.is_even() {
        candidate += 1;
    }
    while !is_probable_prime(&candidate) {
        candidate += 2;
    }
    candidate
}

/// Floor square root of a non-negative integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(n.sign() != Sign::Minus, "isqrt of a negative number");
    n.sqrt()
}

/// `Some(root)` when `n` is a perfect square.
pub fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.sign() == Sign::Minus {
        return None;
    }
    let root = n.sqrt();
    if &root * &root == *n {
        Some(root)
    } else {
        None
    }
}

/// Writes `n = root^k` with `k >= 2` maximal, if such a representation exists.
pub fn perfect_power(n: &BigInt) -> Option<(BigInt, u32)> {
    if *n <= BigInt::one() {
        return None;
    }
    let bits = n.bits() as u32;
    let mut best = None;
    for k in 2..=bits {
        let root = n.nth_root(k);
        if root <= BigInt::one() {
            break;
        }
        if num_traits::pow(root.clone(), k as usize) == *n {
            best = Some((root, k));
        }
    }
    best
}

/// `ceil(log_base(x))` for `x >= 1`, exact on integers.
pub fn ceil_log(base: u64, x: &BigInt) -> u32 {
    let base = BigInt::from(base);
    let mut power = BigInt::one();
    let mut e = 0;
    while &power < x {
        power *= &base;
        e += 1;
    }
    e
}

/// `ceil(log2(sqrt(x)))`, the bound on the number of squarings.
pub fn ceil_log2_sqrt(x: &BigInt) -> u64 {
    // 2^e >= sqrt(x)  <=>  4^e >= x
    ceil_log(4, x) as u64
}

/// True when no square of a prime divides `n`.
pub fn is_squarefree_u64(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    true
}

/// Distinct prime factors of a machine integer by trial division.
pub fn distinct_prime_factors_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Splits a list of integers into a pairwise coprime base together with the
/// exponent of every base element in the product of the inputs.
pub fn coprime_base(parts: &[BigInt]) -> Vec<(BigInt, u32)> {
    let mut base: Vec<BigInt> = Vec::new();
    let mut pending: Vec<BigInt> = parts.iter().filter(|p| !p.is_one()).cloned().collect();
    while let Some(x) = pending.pop() {
        if x.is_one() {
            continue;
        }
        let mut split = None;
        for (i, y) in base.iter().enumerate() {
            let g = x.gcd(y);
            if !g.is_one() {
                split = Some((i, g));
                break;
            }
        }
        match split {
            None => base.push(x),
            Some((i, g)) => {
                let y = base.swap_remove(i);
                if g == x && g == y {
                    base.push(g);
                    continue;
                }
                pending.push(&x / &g);
                pending.push(&y / &g);
                pending.push(g);
            }
        }
    }
    base.sort();
    base.dedup();
    let product: BigInt = parts.iter().product();
    base.into_iter()
        .map(|b| {
            let mut e = 0;
            let mut m = product.clone();
            while (&m % &b).is_zero() {
                m /= &b;
                e += 1;
            }
            (b, e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_is_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn sieve_matches_trial_division() {
        let sieved = primes_up_to(2000);
        let trial: Vec<u64> = (0..=2000).filter(|&n| trial_is_prime(n)).collect();
        assert_eq!(sieved, trial);
        assert_eq!(primes_in_interval(100, 200), trial.iter().copied().filter(|&p| p > 100 && p <= 200).collect::<Vec<_>>());
        assert_eq!(primes_in_interval(0, 10), vec![2, 3, 5, 7]);
        assert!(primes_in_interval(10, 10).is_empty());
    }

    #[test]
    fn miller_rabin_small_and_big() {
        for n in 0..5000u64 {
            assert_eq!(is_prime_u64(n), trial_is_prime(n), "n = {n}");
            assert_eq!(is_probable_prime(&BigInt::from(n)), trial_is_prime(n));
        }
        // 2^89 - 1 is a Mersenne prime, 2^89 + 1 is divisible by 3
        let m89 = (BigInt::one() << 89) - 1;
        assert!(is_probable_prime(&m89));
        assert!(!is_probable_prime(&(&m89 + 2)));
        // strong pseudoprime to bases 2..37
        let spsp = BigInt::parse_bytes(b"318665857834031151167461", 10).unwrap();
        assert!(!is_probable_prime(&spsp));
    }

    #[test]
    fn roots_and_powers() {
        assert_eq!(exact_sqrt(&BigInt::from(529)), Some(BigInt::from(23)));
        assert_eq!(exact_sqrt(&BigInt::from(530)), None);
        assert_eq!(perfect_power(&BigInt::from(49)), Some((BigInt::from(7), 2)));
        assert_eq!(perfect_power(&BigInt::from(64)), Some((BigInt::from(2), 6)));
        assert_eq!(perfect_power(&BigInt::from(37559)), None);
        assert_eq!(ceil_log(3, &BigInt::from(27)), 3);
        assert_eq!(ceil_log(3, &BigInt::from(28)), 4);
        assert_eq!(ceil_log2_sqrt(&BigInt::from(16)), 2);
        assert_eq!(ceil_log2_sqrt(&BigInt::from(17)), 3);
        assert_eq!(next_prime(&BigInt::from(37260)), BigInt::from(37273));
    }

    #[test]
    fn coprime_base_refines() {
        let parts = [BigInt::from(12), BigInt::from(18)];
        let base = coprime_base(&parts);
        assert_eq!(base, vec![(BigInt::from(2), 3), (BigInt::from(3), 3)]);
        // coprime parts are kept whole
        let parts = [BigInt::from(23 * 23), BigInt::from(71)];
        assert_eq!(coprime_base(&parts), vec![(BigInt::from(71), 1), (BigInt::from(529), 1)]);
        let parts = [BigInt::from(23 * 23 * 71), BigInt::from(23)];
        assert_eq!(coprime_base(&parts), vec![(BigInt::from(23), 3), (BigInt::from(71), 1)]);
    }
}
