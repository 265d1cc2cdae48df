mod common;

use crowdgate_core::prediction::{
    conservative_worker_count, exact_majority_prob, expected_majority_prob, refined_worker_count,
};
use proptest::prelude::*;

fn odd(max: usize) -> impl Strategy<Value = usize> {
    (0..=max / 2).prop_map(|i| 2 * i + 1)
}

proptest! {
    #[test]
    fn tail_matches_exact_rationals(n in odd(151), mu in 0.01f64..0.99) {
        let got = expected_majority_prob(n, mu).unwrap();
        let exact = common::exact_majority_tail(n, mu);
        prop_assert!((got - exact).abs() <= 1e-12, "n={n} mu={mu}: {got} vs {exact}");
    }

    #[test]
    fn dp_matches_enumeration(acc in prop::collection::vec(0.0f64..=1.0, 1..=11)) {
        prop_assume!(acc.len() % 2 == 1);
        let got = exact_majority_prob(&acc).unwrap();
        let brute = common::enumerate_majority(&acc);
        prop_assert!((got - brute).abs() <= 1e-12, "{got} vs {brute}");
    }

    #[test]
    fn homogeneous_dp_equals_tail(n in odd(99), mu in 0.0f64..=1.0) {
        let dp = exact_majority_prob(&vec![mu; n]).unwrap();
        let tail = expected_majority_prob(n, mu).unwrap();
        prop_assert!((dp - tail).abs() <= 1e-12);
    }

    #[test]
    fn tail_grows_with_n_above_half(n in odd(401), mu in 0.501f64..0.999) {
        let a = expected_majority_prob(n, mu).unwrap();
        let b = expected_majority_prob(n + 2, mu).unwrap();
        prop_assert!(b >= a - 1e-15, "n={n}: {a} then {b}");
    }

    #[test]
    fn tail_grows_with_mu(n in odd(201), mu in 0.0f64..0.99, step in 0.0f64..0.01) {
        let a = expected_majority_prob(n, mu).unwrap();
        let b = expected_majority_prob(n, mu + step).unwrap();
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn refined_is_minimal_and_sound(target in 0.5f64..0.995, mu in 0.55f64..0.99) {
        let p = refined_worker_count(target, mu).unwrap();
        prop_assert_eq!(p.refined_n % 2, 1);
        prop_assert!(p.refined_n <= p.conservative_n);
        prop_assert!(common::exact_majority_tail(p.refined_n, mu) >= target - 1e-12);
        if p.refined_n > 1 {
            prop_assert!(common::exact_majority_tail(p.refined_n - 2, mu) < target + 1e-12);
        }
        // the Chernoff count is itself sufficient
        prop_assert!(expected_majority_prob(p.conservative_n, mu).unwrap() >= target);
    }
}

#[test]
fn conservative_count_edges() {
    assert_eq!(conservative_worker_count(0.9, 0.7).unwrap(), 29);
    assert_eq!(conservative_worker_count(0.5, 0.99).unwrap(), 3);
    assert!(conservative_worker_count(0.9, 0.5).is_err());
    assert!(conservative_worker_count(1.0, 0.7).is_err());
}

#[test]
fn direct_sum_agrees_for_small_n() {
    for n in (1..=41).step_by(2) {
        for mu in [0.51, 0.6, 0.7, 0.8, 0.9] {
            let d = common::direct_majority_tail(n, mu);
            let e = common::exact_majority_tail(n, mu);
            assert!((d - e).abs() < 1e-12);
        }
    }
}
