use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use crate::arith::{ceil_log2_sqrt, primes_up_to};
use crate::error::{Error, Result};

/// Multiplier on `b2^(1/(2e))` used when no explicit `B` is given.
pub const DEFAULT_SLACK: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamOverrides {
    /// Forces the stage-1 prime bound.
    pub b: Option<u64>,
    /// Forces the stage-2 prime bound.
    pub b2: Option<u64>,
    pub slack: f64,
}

impl Default for ParamOverrides {
    fn default() -> Self {
        ParamOverrides { b: None, b2: None, slack: DEFAULT_SLACK }
    }
}

/// Smoothness bounds and the exponent `k = prod p_i^e_i` of stage 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageParams {
    /// Guessed upper bound for the square-free part.
    pub b2_bound: BigInt,
    /// Stage-1 prime bound.
    pub b: u64,
    /// Stage-2 prime bound.
    pub b2: u64,
    /// `(p_i, e_i)` for the odd primes up to `b`, with `p_i^e_i <= p_t^2`.
    pub exponent_table: Vec<(u64, u32)>,
}

impl StageParams {
    /// The stage-1 exponent `k`.
    pub fn k(&self) -> BigInt {
        self.exponent_table
            .iter()
            .map(|&(p, e)| num_traits::pow(BigInt::from(p), e as usize))
            .product()
    }

    /// Same bounds with stage 2 switched off.
    pub fn without_stage2(&self) -> StageParams {
        StageParams { b2: self.b, ..self.clone() }
    }
}

/// Number of squarings after stage 1: `ceil(log2(sqrt(ns)))`.
pub fn squaring_cap(ns: &BigInt) -> u64 {
    ceil_log2_sqrt(ns).max(1)
}

fn ln_big(x: &BigInt) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v.ln(),
        _ => x.bits() as f64 * std::f64::consts::LN_2,
    }
}

/// Stage-1 exponent table for a given prime bound.
pub fn exponent_table(b: u64) -> Vec<(u64, u32)> {
    let primes = primes_up_to(b);
    let Some(&pt) = primes.last() else {
        return Vec::new();
    };
    let limit = pt as u128 * pt as u128;
    primes
        .into_iter()
        .filter(|&p| p > 2)
        .map(|p| {
            let mut e = 1;
            let mut pow = p as u128;
            while pow * p as u128 <= limit {
                pow *= p as u128;
                e += 1;
            }
            (p, e)
        })
        .collect()
}

/// Bounds for a square-free part of size about `b2_bound`:
/// `B = slack * b2^(1/(2e))` with `e = sqrt(ln b2 / ln ln b2)`, and
/// `B2 = ceil(B ln B)`.
pub fn build_params(b2_bound: &BigInt, overrides: &ParamOverrides) -> Result<StageParams> {
    if *b2_bound < BigInt::from(16) {
        return Err(Error::Domain(format!("b2 bound {b2_bound} is below 16")));
    }
    let b = match overrides.b {
        Some(b) => b,
        None => {
            let ln = ln_big(b2_bound);
            let e = (ln / ln.ln()).sqrt();
            (overrides.slack * (ln / (2.0 * e)).exp()).ceil() as u64
        }
    }
    .max(3);
    let b2 = overrides
        .b2
        .unwrap_or_else(|| (b as f64 * (b as f64).ln()).ceil() as u64)
        .max(b);
    Ok(StageParams { b2_bound: b2_bound.clone(), b, b2, exponent_table: exponent_table(b) })
}

/// Where a group order would be caught, given its factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothnessClass {
    /// Every odd prime power is covered by `k`.
    Stage1,
    /// One extra prime in `(B, B2]`, the rest covered by `k`.
    Stage2,
    /// One extra prime in `(B2, B^2]`, out of reach of the generic stage 2.
    BSquared,
    Beyond,
}

/// Classifies a factored group order against the stage bounds. The 2-part
/// is ignored since the squaring loop removes it.
pub fn classify_order(factors: &[(BigInt, u32)], params: &StageParams) -> SmoothnessClass {
    let table: Vec<(BigInt, u32)> = params.exponent_table.iter().map(|&(p, e)| (BigInt::from(p), e)).collect();
    let b = BigInt::from(params.b);
    let b2 = BigInt::from(params.b2);
    let mut outside: Vec<(&BigInt, u32)> = Vec::new();
    for (p, e) in factors {
        if p == &BigInt::from(2) || p.is_one() {
            continue;
        }
        let covered = table.iter().any(|(q, f)| q == p && f >= e);
        if !covered {
            outside.push((p, *e));
        }
    }
    match outside.as_slice() {
        [] => SmoothnessClass::Stage1,
        [(p, 1)] if **p > b && **p <= b2 => SmoothnessClass::Stage2,
        [(p, 1)] if **p > b2 && **p <= &b * &b => SmoothnessClass::BSquared,
        _ => SmoothnessClass::Beyond,
    }
}
