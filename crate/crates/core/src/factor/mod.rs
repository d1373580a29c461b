//! Class group factoring: stage 1 with ambiguous forms, the lift-and-read
//! square-free decomposition, a generic stage 2 and composite completion.

mod completion;
mod params;
mod pipeline;
mod stage1;
mod stage2;

use std::fmt;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::{ceil_log, isqrt, next_prime};
use crate::error::{Error, Result};
use crate::forms::QuadForm;
use crate::lift::LiftPlan;

pub use completion::{composite_completion, factor_completely, factorize, schnorr_lenstra, Factorization};
pub use params::{
    build_params, classify_order, exponent_table, squaring_cap, ParamOverrides, SmoothnessClass, StageParams,
    DEFAULT_SLACK,
};
pub use pipeline::{
    attempt_multiplier, attempt_with_form, sqfree_decompose, AttemptOutcome, AttemptReport, DecomposeOptions,
};
pub use stage1::{
    extract_ambiguous_factor, squaring_loop, stage1_power, try_read_square, ReadOff, SquaringOutcome,
};
pub use stage2::{stage2, Stage2Hit};

/// Which mechanism produced a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// `n` was 1, prime or a perfect power of something already decomposed.
    Precheck,
    Stage1Ambiguous,
    Stage1Readoff,
    Stage2Readoff,
    CompositeCompletion,
    GcdShortcut,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Precheck => "precheck",
            Stage::Stage1Ambiguous => "stage1_ambiguous",
            Stage::Stage1Readoff => "stage1_readoff",
            Stage::Stage2Readoff => "stage2_readoff",
            Stage::CompositeCompletion => "composite_completion",
            Stage::GcdShortcut => "gcd_shortcut",
        }
    }

    /// True for successes found while walking the stage-2 primes.
    pub fn is_stage2(&self) -> bool {
        matches!(self, Stage::Stage2Readoff)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Work counters for one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Multipliers `s` tried, i.e. class groups visited.
    pub groups_tried: u64,
    /// Random forms drawn.
    pub forms_tried: u64,
    /// Compositions and squarings performed.
    pub compositions: u64,
    pub elapsed: Duration,
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} groups, {} forms, {} compositions",
            self.groups_tried, self.forms_tried, self.compositions
        )
    }
}

/// `n = a^2 b` with `b` square-free, and how it was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionResult {
    pub n: BigInt,
    pub a: BigInt,
    pub b: BigInt,
    /// Multiplier of the class group that produced the success (1 for prechecks).
    pub multiplier_s: u64,
    pub stage: Stage,
    pub stats: RunStats,
    /// The form whose coefficients revealed the divisor.
    pub witness: Option<QuadForm>,
    /// Prime factorization of `b`, when it was obtained along the way.
    pub extra_factors: Option<Vec<BigInt>>,
}

/// How the auxiliary modulus `r` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RMode {
    /// `r = 3^ceil(log_3 sqrt(n))`; needs `3` not dividing `n`.
    PowerOf3,
    /// Least prime above `sqrt(n)`.
    PrimeAboveSqrtN,
    /// Least prime `>= 10 n^(1/6)`, enough when `n = p^2 q` with `p` and
    /// `q` of similar size.
    PrimeScaledSixthRoot,
}

impl RMode {
    /// `PowerOf3` unless `3 | n`, then `PrimeAboveSqrtN`.
    pub fn auto(n: &BigInt) -> RMode {
        if (n % 3u32).is_zero() {
            RMode::PrimeAboveSqrtN
        } else {
            RMode::PowerOf3
        }
    }
}

/// A resolved `r` with its factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RChoice {
    pub mode: RMode,
    pub r: BigInt,
    pub factors: Vec<(BigInt, u32)>,
}

impl RChoice {
    pub fn plan(&self) -> Result<LiftPlan> {
        LiftPlan::new(self.factors.clone())
    }
}

/// Scale of the sixth-root choice of `r`.
pub const SIXTH_ROOT_SCALE: u64 = 10;

/// Resolves `r` for `n`; `None` selects [`RMode::auto`].
pub fn resolve_r(n: &BigInt, mode: Option<RMode>) -> Result<RChoice> {
    let mode = mode.unwrap_or_else(|| RMode::auto(n));
    if *n < BigInt::from(2) {
        return Err(Error::Domain(format!("no r for n = {n}")));
    }
    let (r, factors) = match mode {
        RMode::PowerOf3 => {
            let m = ceil_log(3, &isqrt_ceil(n)).max(1);
            (num_traits::pow(BigInt::from(3), m as usize), vec![(BigInt::from(3), m)])
        }
        RMode::PrimeAboveSqrtN => {
            let p = next_prime(&(isqrt(n) + 1u32)).max(BigInt::from(3));
            (p.clone(), vec![(p, 1)])
        }
        RMode::PrimeScaledSixthRoot => {
            let root = sixth_root_rounded(n, SIXTH_ROOT_SCALE);
            let p = next_prime(&root).max(BigInt::from(3));
            (p.clone(), vec![(p, 1)])
        }
    };
    Ok(RChoice { mode, r, factors })
}

fn isqrt_ceil(n: &BigInt) -> BigInt {
    let s = isqrt(n);
    if &s * &s == *n {
        s
    } else {
        s + 1
    }
}

/// `round(c * n^(1/6))`, computed as the sixth root of `c^6 n` rounded.
fn sixth_root_rounded(n: &BigInt, c: u64) -> BigInt {
    let scaled = n * num_traits::pow(BigInt::from(c), 6);
    let lo = scaled.nth_root(6);
    // round half up: compare with (lo + 1/2)^6 = (2 lo + 1)^6 / 64
    let twice: BigInt = (&lo << 1) + 1u32;
    if num_traits::pow(twice, 6) <= (scaled << 6) {
        lo + 1u32
    } else {
        lo
    }
}

/// Mixes a seed with a path of words into a fresh 64-bit seed (splitmix64).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut state = mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    for &w in path {
        state = mix(state ^ w.wrapping_add(0x9e37_79b9_7f4a_7c15));
    }
    state
}

/// Folds an integer into one word for [`derive_seed`] paths.
pub(crate) fn digest(n: &BigInt) -> u64 {
    let (_, digits) = n.to_u64_digits();
    derive_seed(digits.len() as u64, &digits)
}

/// Checks `n = a^2 b` with `a >= 1`.
pub(crate) fn check_decomposition(n: &BigInt, a: &BigInt, b: &BigInt) -> Result<()> {
    if a * a * b != *n || a < &BigInt::one() {
        return Err(Error::Inconsistency(format!("{a}^2 * {b} != {n}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_choices() {
        let n = BigInt::from(37559);
        let pow3 = resolve_r(&n, None).unwrap();
        assert_eq!(pow3.mode, RMode::PowerOf3);
        // sqrt(37559) = 193.8, 3^5 = 243
        assert_eq!(pow3.r, BigInt::from(243));
        assert_eq!(resolve_r(&BigInt::from(3 * 37559), None).unwrap().mode, RMode::PrimeAboveSqrtN);
        let sq = resolve_r(&n, Some(RMode::PrimeAboveSqrtN)).unwrap();
        assert_eq!(sq.r, BigInt::from(197));
        // 10 * 37559^(1/6) = 57.8, next prime 59
        let six = resolve_r(&n, Some(RMode::PrimeScaledSixthRoot)).unwrap();
        assert_eq!(six.r, BigInt::from(59));
    }

    #[test]
    fn seeds_are_spread() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
        assert_ne!(digest(&BigInt::from(15)), digest(&BigInt::from(16)));
    }
}
