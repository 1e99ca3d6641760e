//! Randomized invariants for distribution construction, transforms, and
//! tails.

use proptest::prelude::*;
use tailsum::decimal::Decimal;
use tailsum::distribution::{Distribution, NormalizationPolicy};
use tailsum::stats::{lower_tail, upper_tail};

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Up to eight distinct values sharing one decimal scale, with positive
/// normalized weights.
fn arb_pairs() -> impl Strategy<Value = Vec<(Decimal, f64)>> {
    (
        0u32..=4,
        prop::collection::btree_map(-500i64..=500, 1u32..=1000, 1..=8),
    )
        .prop_map(|(scale, entries)| {
            let total: f64 = entries.values().map(|&w| w as f64).sum();
            entries
                .iter()
                .map(|(&u, &w)| {
                    (
                        Decimal::from_units(u as i128, scale).unwrap(),
                        w as f64 / total,
                    )
                })
                .collect()
        })
}

fn build(pairs: &[(Decimal, f64)]) -> Distribution {
    Distribution::from_pairs(pairs, NormalizationPolicy::Strict).unwrap()
}

proptest! {
    #[test]
    fn construction_is_canonical_and_normalized(pairs in arb_pairs()) {
        let d = build(&pairs);

        // stored indexes have no common factor left to fold into the quantum
        let g = d.iter().fold(0i64, |acc, (i, _)| gcd(acc, i));
        prop_assert!(g == 1 || d.support_len() == 1);

        prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        prop_assert_eq!(d.support_len(), pairs.len());
    }

    #[test]
    fn values_round_trip_through_the_lattice(pairs in arb_pairs()) {
        let d = build(&pairs);
        for (value, mass) in &pairs {
            prop_assert_eq!(d.mass_at_value(value), *mass);
        }
        for (i, mass) in d.iter() {
            prop_assert_eq!(d.mass_at_value(&d.value_at(i)), mass);
        }
    }

    #[test]
    fn moments_are_well_formed(pairs in arb_pairs()) {
        let d = build(&pairs);
        let m = d.moments();
        prop_assert!(m.mean.is_finite());
        prop_assert!(m.variance >= 0.0);
        if d.support_len() == 1 {
            prop_assert_eq!(m.variance, 0.0);
            prop_assert!(m.skewness.is_none());
            prop_assert!(m.excess_kurtosis.is_none());
        } else {
            prop_assert!(m.variance > 0.0);
            prop_assert!(m.skewness.is_some());
        }
    }

    #[test]
    fn identity_transform_is_identity(pairs in arb_pairs()) {
        let d = build(&pairs);
        let one: Decimal = "1".parse().unwrap();
        prop_assert_eq!(d.linear_transform(one, Decimal::ZERO).unwrap(), d);
    }

    #[test]
    fn mirroring_twice_is_identity(pairs in arb_pairs()) {
        let d = build(&pairs);
        let minus_one: Decimal = "-1".parse().unwrap();
        let twice = d
            .linear_transform(minus_one, Decimal::ZERO).unwrap()
            .linear_transform(minus_one, Decimal::ZERO).unwrap();
        prop_assert_eq!(twice, d);
    }

    #[test]
    fn affine_transform_relabels_without_touching_masses(
        pairs in arb_pairs(),
        a_units in prop::sample::select(vec![-25i128, -3, -1, 2, 7, 40]),
        a_scale in 0u32..=2,
        b_units in -100i128..=100,
        b_scale in 0u32..=2,
    ) {
        let d = build(&pairs);
        let a = Decimal::from_units(a_units, a_scale).unwrap();
        let b = Decimal::from_units(b_units, b_scale).unwrap();
        let t = d.linear_transform(a, b).unwrap();

        prop_assert_eq!(t.support_len(), d.support_len());
        for (i, mass) in d.iter() {
            let mapped = a
                .checked_mul(&d.value_at(i)).unwrap()
                .checked_add(&b).unwrap();
            prop_assert_eq!(t.mass_at_value(&mapped), mass);
        }
    }

    #[test]
    fn tails_complement_at_every_support_point(pairs in arb_pairs()) {
        let d = build(&pairs);
        let values: Vec<f64> = d.iter().map(|(i, _)| d.value_at(i).to_f64()).collect();
        for (k, &v) in values.iter().enumerate() {
            let upper = upper_tail(&d, v);
            prop_assert!((0.0..=1.0).contains(&upper));
            if k > 0 {
                // everything at or above v, plus everything at or below the
                // previous support point, is the whole distribution
                prop_assert_eq!(upper + lower_tail(&d, values[k - 1]), 1.0);
            }
        }
        prop_assert_eq!(upper_tail(&d, values[0]), 1.0);
        prop_assert_eq!(lower_tail(&d, values[values.len() - 1]), 1.0);
    }
}
