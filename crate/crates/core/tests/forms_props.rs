use num_bigint::BigInt;
use proptest::prelude::*;

use sqfree::forms::{chi_eval, Discriminant, QuadForm};
use sqfree::oracle::{enumerate_class_group, order_of};

/// A discriminant -4m or an odd one, with three of its classes.
fn group_and_forms() -> impl Strategy<Value = (Discriminant, QuadForm, QuadForm, QuadForm)> {
    (5i64..20_000, any::<[prop::sample::Index; 3]>()).prop_filter_map("D must be 0 or 1 mod 4", |(m, idx)| {
        let d = -m;
        if !matches!(d.rem_euclid(4), 0 | 1) {
            return None;
        }
        let disc = Discriminant::from(d);
        let t = enumerate_class_group(&disc).ok()?;
        let pick = |i: &prop::sample::Index| i.get(t.forms()).clone();
        Some((disc.clone(), pick(&idx[0]), pick(&idx[1]), pick(&idx[2])))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_laws((d, f, g, h) in group_and_forms()) {
        let e = QuadForm::identity(&d).unwrap();
        let fg = f.compose(&g).unwrap().reduce();
        prop_assert!(fg.is_reduced());
        prop_assert_eq!(fg.discriminant(), d.clone());
        prop_assert_eq!(&fg, &g.compose(&f).unwrap().reduce());
        let left = fg.compose(&h).unwrap().reduce();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap().reduce();
        prop_assert_eq!(left, right);
        prop_assert_eq!(f.compose(&e).unwrap().reduce(), f.clone());
        prop_assert!(f.compose(&f.conjugate()).unwrap().reduce().is_identity());
        prop_assert_eq!(f.square(), f.compose(&f).unwrap());
    }

    #[test]
    fn reduction_is_idempotent_and_class_preserving(
        (_d, f, _g, _h) in group_and_forms(),
        p in -5i64..5, q in -5i64..5, r in -5i64..5,
    ) {
        // any unimodular matrix (p q; r s) with ps - qr = 1 built from (1 p; 0 1)(1 0; r 1)(1 q; 0 1)
        let one = BigInt::from(1);
        let zero = BigInt::from(0);
        let moved = f
            .transform(&one, &BigInt::from(p), &zero, &one).unwrap()
            .transform(&one, &zero, &BigInt::from(r), &one).unwrap()
            .transform(&one, &BigInt::from(q), &zero, &one).unwrap();
        let red = moved.reduce();
        prop_assert_eq!(&red, &f);
        prop_assert_eq!(red.reduce(), red);
    }

    #[test]
    fn powers_add((d, f, _g, _h) in group_and_forms(), i in 0u64..200, j in 0u64..200) {
        let t = enumerate_class_group(&d).unwrap();
        let lhs = f.pow_u64(i + j);
        let rhs = f.pow_u64(i).compose(&f.pow_u64(j)).unwrap().reduce();
        prop_assert_eq!(&lhs, &rhs);
        let ord = order_of(&f, &t).unwrap();
        prop_assert!(f.pow_u64(ord).is_identity());
        prop_assert_eq!(t.h() as u64 % ord, 0);
    }

    #[test]
    fn characters_are_homomorphic((_d, f, g, _h) in group_and_forms()) {
        let cf = chi_eval(&f).unwrap();
        let cg = chi_eval(&g).unwrap();
        let cfg = chi_eval(&f.compose(&g).unwrap().reduce()).unwrap();
        prop_assert_eq!(cf.product(&cg).unwrap(), cfg);
    }
}
