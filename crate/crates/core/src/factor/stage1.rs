use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::params::StageParams;
use crate::arith::exact_sqrt;
use crate::error::{Error, Result};
use crate::forms::QuadForm;

/// Group operations spent by left-to-right exponentiation by `k`.
pub(crate) fn pow_cost(k: &BigInt) -> u64 {
    if k.is_zero() {
        return 0;
    }
    let ones = k.magnitude().count_ones();
    k.bits() - 1 + ones - 1
}

/// `f^k`, one prime power of the exponent table at a time.
pub fn stage1_power(f: &QuadForm, params: &StageParams) -> QuadForm {
    stage1_power_counted(f, params, &mut 0)
}

pub(crate) fn stage1_power_counted(f: &QuadForm, params: &StageParams, ops: &mut u64) -> QuadForm {
    let mut g = f.reduce();
    for &(p, e) in &params.exponent_table {
        let q = num_traits::pow(BigInt::from(p), e as usize);
        *ops += pow_cost(&q);
        g = g.pow(&q);
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SquaringOutcome {
    /// `predecessor^2` is the identity and `predecessor` is not.
    ReachedIdentity { predecessor: QuadForm, squarings: u64 },
    /// The identity was not reached; `form` is `g^(2^cap)`.
    Exhausted { form: QuadForm },
}

/// Squares `g` up to `cap` times, stopping at the identity.
pub fn squaring_loop(g: &QuadForm, cap: u64) -> SquaringOutcome {
    squaring_loop_counted(g, cap, &mut 0)
}

pub(crate) fn squaring_loop_counted(g: &QuadForm, cap: u64, ops: &mut u64) -> SquaringOutcome {
    let mut cur = g.reduce();
    for i in 1..=cap {
        let next = cur.square();
        *ops += 1;
        if next.is_identity() {
            return SquaringOutcome::ReachedIdentity { predecessor: cur, squarings: i };
        }
        cur = next;
    }
    SquaringOutcome::Exhausted { form: cur }
}

fn nontrivial_divisor(x: &BigInt, n: &BigInt) -> Option<BigInt> {
    let d = x.abs().gcd(n);
    if d > BigInt::one() && &d < n {
        Some(d)
    } else {
        None
    }
}

/// A nontrivial divisor of `n` read off a reduced form of order at most two
/// in `C(-4ns)`.
///
/// The three reduced shapes factor the discriminant: `(m, 0, c)` gives
/// `ns = mc`, `(a, a, c)` gives `4ns = a(4c - a)` and `(a, b, a)` gives
/// `4ns = (2a - b)(2a + b)`.
pub fn extract_ambiguous_factor(f: &QuadForm, n: &BigInt) -> Result<Option<BigInt>> {
    if !f.is_ambiguous() {
        return Err(Error::Precondition(format!("{f} is not a reduced ambiguous form")));
    }
    let (a, b, c) = (f.a(), f.b(), f.c());
    let candidates: Vec<BigInt> = if b.is_zero() {
        vec![a.clone(), c.clone()]
    } else if b == a {
        vec![a.clone(), BigInt::from(4) * c - a]
    } else {
        let two_a: BigInt = a << 1;
        vec![&two_a - b, &two_a + b]
    };
    Ok(candidates.iter().find_map(|x| nontrivial_divisor(x, n)))
}

/// Result of inspecting `gcd(a_l, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReadOff {
    /// A square divisor `d = a_2^2` of `n`.
    Square(BigInt),
    /// A nontrivial divisor that is not a square; still splits `n`.
    Divisor(BigInt),
}

impl ReadOff {
    pub fn value(&self) -> &BigInt {
        match self {
            ReadOff::Square(d) | ReadOff::Divisor(d) => d,
        }
    }
}

/// Reads `gcd(a_l, n)` and classifies it.
pub fn try_read_square(l: &QuadForm, n: &BigInt) -> Option<ReadOff> {
    let d = nontrivial_divisor(l.a(), n)?;
    if exact_sqrt(&d).is_some() {
        Some(ReadOff::Square(d))
    } else {
        Some(ReadOff::Divisor(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::params::{build_params, ParamOverrides};
    use crate::forms::Discriminant;
    use crate::oracle::{enumerate_class_group, order_of};

    fn f(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm::from_i64(a, b, c)
    }

    #[test]
    fn pow_cost_counts() {
        assert_eq!(pow_cost(&BigInt::from(1)), 0);
        assert_eq!(pow_cost(&BigInt::from(2)), 1);
        assert_eq!(pow_cost(&BigInt::from(7)), 4);
    }

    #[test]
    fn stage1_on_identity_and_empty_table() {
        let params = build_params(&BigInt::from(1000), &ParamOverrides::default()).unwrap();
        let e = QuadForm::identity(&Discriminant::from(-4 * 71)).unwrap();
        assert!(stage1_power(&e, &params).is_identity());
        let empty = StageParams { exponent_table: vec![], ..params };
        let g = f(125, -42, 304).transform(&1.into(), &1.into(), &0.into(), &1.into()).unwrap();
        assert_eq!(stage1_power(&g, &empty), g.reduce());
    }

    #[test]
    fn stage1_leaves_two_power_order() {
        // h(-4 * 71 * 3) = 12 = 4 * 3, so k = 3^2 * ... kills the odd part
        let d = Discriminant::from(-4 * 71 * 3);
        let t = enumerate_class_group(&d).unwrap();
        let params = build_params(&BigInt::from(1000), &ParamOverrides { b: Some(7), ..Default::default() }).unwrap();
        for g in t.forms() {
            let o = order_of(&stage1_power(g, &params), &t).unwrap();
            assert!(o.is_power_of_two(), "order {o}");
        }
    }

    #[test]
    fn squaring_examples() {
        let g = f(2, 2, 3);
        assert_eq!(
            squaring_loop(&g, 5),
            SquaringOutcome::ReachedIdentity { predecessor: g.clone(), squarings: 1 }
        );
        let odd = f(2, 1, 3);
        assert!(matches!(squaring_loop(&odd, 10), SquaringOutcome::Exhausted { .. }));
    }

    #[test]
    fn squaring_finds_ambiguous_forms_in_c_840() {
        let t = enumerate_class_group(&Discriminant::from(-840)).unwrap();
        let mut found = 0;
        for g in t.forms().iter().filter(|g| !g.is_identity()) {
            if let SquaringOutcome::ReachedIdentity { predecessor, .. } = squaring_loop(g, 10) {
                assert!(predecessor.is_ambiguous());
                assert!(!predecessor.is_identity());
                found += 1;
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn ambiguous_factor_examples() {
        let n = BigInt::from(15);
        assert_eq!(extract_ambiguous_factor(&f(3, 0, 5), &n).unwrap(), Some(BigInt::from(3)));
        let e = QuadForm::identity(&Discriminant::from(-60)).unwrap();
        assert_eq!(extract_ambiguous_factor(&e, &n).unwrap(), None);
        assert!(extract_ambiguous_factor(&f(2, 1, 3), &n).is_err());
        // every order-two form of C(-60 s) for small s either splits 15 or is trivial
        for s in [1i64, 2, 7, 11] {
            let t = enumerate_class_group(&Discriminant::from(-60 * s)).unwrap();
            let mut split = false;
            for g in t.forms().iter().filter(|g| g.is_ambiguous()) {
                if let Some(d) = extract_ambiguous_factor(g, &n).unwrap() {
                    assert!(d == BigInt::from(3) || d == BigInt::from(5));
                    split = true;
                }
            }
            assert!(split, "s = {s}");
        }
    }

    #[test]
    fn read_square_examples() {
        let n = BigInt::from(37559);
        assert_eq!(try_read_square(&QuadForm::identity(&Discriminant::from(-4 * 37559)).unwrap(), &n), None);
        let h1 = "(5981917, 450638, 8731416)".parse::<QuadForm>().unwrap();
        assert_eq!(try_read_square(&h1, &n), None);
        assert_eq!(try_read_square(&f(529, 2, 1000), &n), Some(ReadOff::Square(BigInt::from(529))));
        assert_eq!(try_read_square(&f(71, 2, 1000), &n), Some(ReadOff::Divisor(BigInt::from(71))));
    }
}
