use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::params::{build_params, squaring_cap, StageParams};
use super::pipeline::{decompose_inner, Ctx, DecomposeOptions, Partial};
use super::stage1::{extract_ambiguous_factor, squaring_loop_counted, stage1_power_counted, SquaringOutcome};
use super::{check_decomposition, DecompositionResult, RunStats, Stage};
use crate::arith::{coprime_base, is_probable_prime, is_squarefree_u64, perfect_power};
use crate::error::{Error, Result};
use crate::forms::{random_prime_form_avoiding, Discriminant, PRIME_FORM_SEARCH_CAP};
use crate::multipliers::next_squarefree;
use crate::oracle::group_factors;

/// Seed-path tag separating these draws from the decomposition sweep.
const SPLIT_TAG: u64 = 0x5_1a;

/// Full factorization of `n` with its work counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: BigInt,
    /// Prime factors with multiplicity, ascending.
    pub factors: Vec<BigInt>,
    pub stats: RunStats,
}

/// A nontrivial divisor of `n` from the ambiguous forms of `C(-4ns)`,
/// trying square-free `s` upwards from `start_s`.
///
/// `n` must be odd, composite and not a perfect power.
pub fn schnorr_lenstra(n: &BigInt, params: &StageParams, start_s: u64, opts: &DecomposeOptions) -> Result<BigInt> {
    if n.is_even() || *n < BigInt::from(9) || is_probable_prime(n) || perfect_power(n).is_some() {
        return Err(Error::Precondition(format!("{n} is not an odd composite non-power")));
    }
    let mut ctx = Ctx::new(opts)?;
    split(n, params, start_s, &mut ctx)
}

pub(crate) fn split(n: &BigInt, params: &StageParams, start_s: u64, ctx: &mut Ctx) -> Result<BigInt> {
    let mut s = start_s.max(1);
    if !is_squarefree_u64(s) {
        s = next_squarefree(s);
    }
    for index in 0u64.. {
        ctx.check_time()?;
        ctx.remaining()?;
        let g = n.gcd(&BigInt::from(s));
        if !g.is_one() && &g != n {
            return Ok(g);
        }
        let ns = n * s;
        let d = Discriminant::from_minus_four(&ns)?;
        let cap = squaring_cap(&ns);
        let mut rng = ctx.attempt_rng(n, SPLIT_TAG, index);
        let mut ops = 0;
        let mut forms = 0;
        let mut found = None;
        for _ in 0..=ctx.opts.identity_retries {
            let f = random_prime_form_avoiding(&d, &BigInt::one(), PRIME_FORM_SEARCH_CAP, &mut rng)?;
            forms += 1;
            let g = stage1_power_counted(&f, params, &mut ops);
            if g.is_identity() {
                continue;
            }
            match squaring_loop_counted(&g, cap, &mut ops) {
                SquaringOutcome::ReachedIdentity { predecessor, .. } => {
                    if let Some(div) = extract_ambiguous_factor(&predecessor, n)? {
                        found = Some(div);
                        break;
                    }
                }
                SquaringOutcome::Exhausted { .. } => break,
            }
        }
        ctx.stats.groups_tried += 1;
        ctx.stats.forms_tried += forms;
        ctx.stats.compositions += ops;
        if let Some(div) = found {
            return Ok(div);
        }
        s = next_squarefree(s);
    }
    unreachable!()
}

/// Prime factors of `n` with multiplicity, ascending.
pub fn factor_completely(n: &BigInt, opts: &DecomposeOptions) -> Result<Vec<BigInt>> {
    if *n < BigInt::one() {
        return Err(Error::Domain(format!("n = {n} is not positive")));
    }
    let mut ctx = Ctx::new(opts)?;
    factor_inner(n, None, 1, &mut ctx)
}

pub(crate) fn factor_inner(n: &BigInt, params: Option<&StageParams>, s: u64, ctx: &mut Ctx) -> Result<Vec<BigInt>> {
    let mut out = Vec::new();
    let mut m = n.clone();
    while !m.is_zero() && m.is_even() {
        out.push(BigInt::from(2));
        m >>= 1;
    }
    factor_odd(&m, params, s, ctx, &mut out)?;
    out.sort();
    Ok(out)
}

fn factor_odd(n: &BigInt, params: Option<&StageParams>, s: u64, ctx: &mut Ctx, out: &mut Vec<BigInt>) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    if is_probable_prime(n) {
        out.push(n.clone());
        return Ok(());
    }
    if let Some((root, k)) = perfect_power(n) {
        let mut sub = Vec::new();
        factor_odd(&root, params, s, ctx, &mut sub)?;
        for _ in 0..k {
            out.extend(sub.iter().cloned());
        }
        return Ok(());
    }
    let own;
    let params = match params {
        Some(p) => p,
        None => {
            own = build_params(&n.max(&BigInt::from(16)).clone(), &ctx.opts.overrides)?;
            &own
        }
    };
    let d = split(n, params, s, ctx)?;
    for (c, e) in coprime_base(&[n / &d, d]) {
        let mut sub = Vec::new();
        factor_odd(&c, Some(params), s, ctx, &mut sub)?;
        for _ in 0..e {
            out.extend(sub.iter().cloned());
        }
    }
    Ok(())
}

/// Finishes a decomposition once a square divisor `a_2^2` of `n` is known:
/// the cofactor `n / a_2^2` is factored with the same multiplier and
/// stage-1 exponent, and any square it still holds moves into `a`.
pub fn composite_completion(
    n: &BigInt,
    a2: &BigInt,
    s: u64,
    params: &StageParams,
    opts: &DecomposeOptions,
) -> Result<DecompositionResult> {
    let mut ctx = Ctx::new(opts)?;
    let part = completion_inner(n, a2, s, params, &mut ctx)?;
    check_decomposition(n, &part.a, &part.b)?;
    let mut stats = ctx.stats.clone();
    stats.elapsed = ctx.start.elapsed();
    Ok(DecompositionResult {
        n: n.clone(),
        a: part.a,
        b: part.b,
        multiplier_s: s,
        stage: part.stage,
        stats,
        witness: None,
        extra_factors: part.b_factors,
    })
}

pub(crate) fn completion_inner(
    n: &BigInt,
    a2: &BigInt,
    s: u64,
    params: &StageParams,
    ctx: &mut Ctx,
) -> Result<Partial> {
    let sq = a2 * a2;
    if *a2 < BigInt::one() || !(n % &sq).is_zero() {
        return Err(Error::Precondition(format!("{a2}^2 does not divide {n}")));
    }
    let b2 = n / sq;
    let trivial = b2.is_one() || is_probable_prime(&b2);
    let stage = if trivial { Stage::Stage1Readoff } else { Stage::CompositeCompletion };
    let primes = if b2.is_one() {
        vec![]
    } else if trivial {
        vec![b2.clone()]
    } else {
        factor_inner(&b2, Some(params), s, ctx)?
    };
    let mut a = a2.clone();
    let mut b = BigInt::one();
    let mut b_factors = Vec::new();
    for (p, e) in group_factors(&primes) {
        a *= num_traits::pow(p.clone(), (e / 2) as usize);
        if e % 2 == 1 {
            b *= &p;
            b_factors.push(p);
        }
    }
    Ok(Partial { a, b, stage, s, witness: None, b_factors: Some(b_factors) })
}

/// Full factorization: square-free decomposition first, then the square
/// root and the square-free part are factored in turn.
pub fn factorize(n: &BigInt, opts: &DecomposeOptions) -> Result<Factorization> {
    if *n < BigInt::one() {
        return Err(Error::Domain(format!("n = {n} is not positive")));
    }
    let mut ctx = Ctx::new(opts)?;
    let mut factors = Vec::new();
    let mut m = n.clone();
    while m.is_even() {
        factors.push(BigInt::from(2));
        m >>= 1;
    }
    factorize_odd(&m, &mut ctx, &mut factors)?;
    factors.sort();
    let mut stats = ctx.stats.clone();
    stats.elapsed = ctx.start.elapsed();
    Ok(Factorization { n: n.clone(), factors, stats })
}

fn factorize_odd(n: &BigInt, ctx: &mut Ctx, out: &mut Vec<BigInt>) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    let part = decompose_inner(n, ctx)?;
    if !part.a.is_one() {
        let mut sub = Vec::new();
        factorize_odd(&part.a, ctx, &mut sub)?;
        out.extend(sub.iter().cloned());
        out.extend(sub);
    }
    match part.b_factors {
        Some(fs) => out.extend(fs),
        None => out.extend(factor_inner(&part.b, None, 1, ctx)?),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn splits_small_composites() {
        let opts = DecomposeOptions::default();
        for n in [15u64, 21, 35, 77, 1147, 37559 / 23 * 29, 1000003 * 1009] {
            let n = big(n);
            let params = build_params(&n.clone().max(big(16)), &opts.overrides).unwrap();
            let d = schnorr_lenstra(&n, &params, 1, &opts).unwrap();
            assert!(d > BigInt::one() && d < n && (&n % &d).is_zero(), "n = {n}, d = {d}");
        }
        assert!(schnorr_lenstra(&big(13), &build_params(&big(16), &opts.overrides).unwrap(), 1, &opts).is_err());
    }

    #[test]
    fn complete_factorizations() {
        let opts = DecomposeOptions { seed: 9, ..Default::default() };
        assert_eq!(factor_completely(&big(225), &opts).unwrap(), vec![big(3), big(3), big(5), big(5)]);
        assert_eq!(factor_completely(&big(1), &opts).unwrap(), vec![]);
        assert_eq!(factor_completely(&big(2 * 37559), &opts).unwrap(), vec![big(2), big(23), big(23), big(71)]);
        let f = factorize(&big(3 * 5 * 5 * 7 * 7 * 7 * 101), &opts).unwrap();
        assert_eq!(f.factors, [3, 5, 5, 7, 7, 7, 101].map(big).to_vec());
    }

    #[test]
    fn completion_moves_hidden_squares() {
        let opts = DecomposeOptions::default();
        // n = 15^2 * 7 * 11^2 with only 15^2 known
        let n = big(225 * 7 * 121);
        let params = build_params(&big(1000), &opts.overrides).unwrap();
        let r = composite_completion(&n, &big(15), 1, &params, &opts).unwrap();
        assert_eq!((r.a, r.b, r.stage), (big(165), big(7), Stage::CompositeCompletion));
        let r = composite_completion(&big(225 * 7), &big(15), 1, &params, &opts).unwrap();
        assert_eq!((r.a, r.b), (big(15), big(7)));
        assert!(composite_completion(&big(225 * 7), &big(4), 1, &params, &opts).is_err());
    }
}
