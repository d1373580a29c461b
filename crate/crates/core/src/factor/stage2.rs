use num_bigint::BigInt;

use super::params::StageParams;
use super::stage1::{pow_cost, try_read_square, ReadOff};
use crate::arith::primes_in_interval;
use crate::forms::QuadForm;

/// A stage-2 success: the prime `p` with `l^p` revealing a divisor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage2Hit {
    pub readoff: ReadOff,
    pub prime: u64,
    pub form: QuadForm,
}

/// Walks `l^p` over the primes `p` in `(B, B2]` and returns the first power
/// whose leading coefficient shares a nontrivial divisor with `n`.
///
/// The powers `l^2, l^4, ..., l^m` for the largest gap `m` in the sieved
/// interval are precomputed, so each prime after the first costs one
/// composition.
pub fn stage2(l: &QuadForm, n: &BigInt, params: &StageParams) -> Option<Stage2Hit> {
    stage2_counted(l, n, params, &mut 0)
}

pub(crate) fn stage2_counted(l: &QuadForm, n: &BigInt, params: &StageParams, ops: &mut u64) -> Option<Stage2Hit> {
    if params.b2 <= params.b || l.is_identity() {
        return None;
    }
    let primes = primes_in_interval(params.b, params.b2);
    let (&first, rest) = primes.split_first()?;
    let max_gap = primes.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);

    let l = l.reduce();
    // even[i] = l^(2(i + 1))
    let mut even: Vec<QuadForm> = Vec::with_capacity((max_gap / 2) as usize);
    if max_gap >= 2 {
        let sq = l.square();
        *ops += 1;
        even.push(sq.clone());
        for _ in 1..max_gap / 2 {
            let next = even.last().unwrap().compose_unchecked(&sq);
            *ops += 1;
            even.push(next);
        }
    }

    let mut cur = l.pow_u64(first);
    *ops += pow_cost(&BigInt::from(first));
    if let Some(readoff) = try_read_square(&cur, n) {
        return Some(Stage2Hit { readoff, prime: first, form: cur });
    }
    let mut prev = first;
    for &p in rest {
        let step = p - prev;
        // gaps between odd primes are even
        cur = cur.compose_unchecked(&even[(step / 2 - 1) as usize]);
        *ops += 1;
        if let Some(readoff) = try_read_square(&cur, n) {
            return Some(Stage2Hit { readoff, prime: p, form: cur });
        }
        prev = p;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::params::{build_params, ParamOverrides};

    #[test]
    fn empty_interval_is_absent() {
        let p = build_params(&BigInt::from(1000), &ParamOverrides { b: Some(30), b2: Some(30), ..Default::default() })
            .unwrap();
        let l = QuadForm::from_i64(2, 1, 3);
        assert_eq!(stage2(&l, &BigInt::from(15), &p), None);
    }

    #[test]
    fn stepping_matches_direct_powers() {
        let params = build_params(&BigInt::from(1000), &ParamOverrides { b: Some(20), b2: Some(200), ..Default::default() })
            .unwrap();
        let l = "(125, -42, 304)".parse::<QuadForm>().unwrap();
        // n = 1 never shares a divisor, so the walk runs to the end
        assert_eq!(stage2(&l, &BigInt::from(1), &params), None);
        // pick n from the leading coefficient of a late power; the walk must
        // stop at the first prime whose direct power already reveals it
        let target = l.pow_u64(197);
        let n = target.a() * BigInt::from(1_000_003);
        let hit = stage2(&l, &n, &params).unwrap();
        let expected = primes_in_interval(20, 200)
            .into_iter()
            .find(|&p| try_read_square(&l.pow_u64(p), &n).is_some())
            .unwrap();
        assert_eq!(hit.prime, expected);
        assert_eq!(hit.form, l.pow_u64(expected));
    }
}
