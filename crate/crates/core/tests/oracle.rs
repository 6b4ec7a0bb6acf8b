use proptest::prelude::*;

use smooth_cubes::oracle::{
    hybrid_count, hybrid_count_naive, mean_value_even, mean_value_even_naive, sample_series,
    slope_fit, smooth_set, Moment, RPolicy, SmoothParams,
};

fn params(p: u64, r: u64) -> SmoothParams {
    SmoothParams::new(p, r).unwrap()
}

/// Largest prime factor by trial division.
fn largest_prime_factor(mut n: u64) -> u64 {
    let mut largest = 1;
    let mut d = 2;
    while d * d <= n {
        while n.is_multiple_of(d) {
            largest = d;
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        n
    } else {
        largest
    }
}

#[test]
fn sieve_matches_trial_division() {
    for p in [1u64, 2, 17, 100, 1000] {
        for r in [2u64, 3, 5, 7, 31, 1000] {
            let expected: Vec<u64> = (1..=p).filter(|&n| largest_prime_factor(n) <= r).collect();
            assert_eq!(smooth_set(params(p, r)).unwrap(), expected, "P={p} R={r}");
        }
    }
}

#[test]
fn histogram_equals_naive_for_small_sets() {
    for p in 1..=12u64 {
        for r in [2, 3, p.max(2)] {
            let fast = mean_value_even(params(p, r), 2).unwrap().count;
            assert_eq!(
                fast,
                mean_value_even_naive(params(p, r), 2).unwrap(),
                "P={p} R={r}"
            );
        }
    }
    for k in [1, 3] {
        for p in [5u64, 9] {
            let fast = mean_value_even(params(p, p), k).unwrap().count;
            assert_eq!(
                fast,
                mean_value_even_naive(params(p, p), k).unwrap(),
                "P={p} k={k}"
            );
        }
    }
}

#[test]
fn no_off_diagonal_solutions_below_the_taxicab_number() {
    for p in 1..=11u64 {
        let sample = mean_value_even(params(p, p.max(2)), 2).unwrap();
        // diagonal solutions: ordered pairs equal as multisets
        assert_eq!(sample.count, 2 * p * p - p, "P={p}");
    }
}

#[test]
fn hybrid_matches_brute_force() {
    for (p, r) in [(1, 2), (2, 2), (3, 2), (4, 2), (5, 3), (6, 6)] {
        assert_eq!(
            hybrid_count(params(p, r)).unwrap().count,
            hybrid_count_naive(params(p, r)).unwrap(),
            "P={p} R={r}"
        );
    }
}

#[test]
fn hybrid_dominates_the_fourth_moment() {
    for (p, r) in [(5, 5), (8, 2), (10, 3), (12, 12)] {
        let hybrid = hybrid_count(params(p, r)).unwrap().count;
        let fourth = mean_value_even(params(p, r), 2).unwrap().count;
        assert!(hybrid >= fourth, "P={p} R={r}");
    }
}

#[test]
fn fourth_moment_slope_near_two() {
    let samples = sample_series(Moment::Even { k: 2 }, RPolicy::EqualP, &[50, 100, 200]).unwrap();
    let slope = slope_fit(&samples).unwrap();
    assert!(slope > 2.0 && slope < 2.4, "slope {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_grow_with_r(p in 1u64..40, r1 in 2u64..40, r2 in 2u64..40, k in 1u32..=2) {
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        let a = mean_value_even(params(p, lo), k).unwrap();
        let b = mean_value_even(params(p, hi), k).unwrap();
        prop_assert!(a.count <= b.count);
        prop_assert!(a.smooth_set_size <= b.smooth_set_size);
    }

    #[test]
    fn counts_include_the_diagonal(p in 1u64..30, r in 2u64..30, k in 1u32..=3) {
        let sample = mean_value_even(params(p, r), k).unwrap();
        prop_assert!(sample.count >= sample.smooth_set_size.pow(k));
    }

    #[test]
    fn histogram_matches_naive(p in 1u64..9, r in 2u64..9, k in 1u32..=2) {
        prop_assert_eq!(
            mean_value_even(params(p, r), k).unwrap().count,
            mean_value_even_naive(params(p, r), k).unwrap()
        );
    }
}
