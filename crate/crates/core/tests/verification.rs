mod common;

use std::collections::BTreeMap;

use crowdgate_core::verification::{
    domain_size_bounds, estimate_domain_size, half_voting, majority_voting, verify,
    VerificationConfig,
};
use crowdgate_core::{AnswerDomain, Observation, Vote};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

const LABELS: [&str; 4] = ["a", "b", "c", "d"];

/// (m, votes as (answer index, accuracy))
fn ballots(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, f64)>)> {
    (2usize..=4).prop_flat_map(move |m| {
        (
            Just(m),
            prop::collection::vec((0..m, 0.02f64..0.98), 1..=max_n),
        )
    })
}

fn build(votes: &[(usize, f64)]) -> (Observation, BTreeMap<String, f64>, Vec<(String, f64)>) {
    let mut profiles = BTreeMap::new();
    let mut list = Vec::new();
    let vs: Vec<Vote> = votes
        .iter()
        .enumerate()
        .map(|(i, &(ans, a))| {
            let w = format!("w{i}");
            profiles.insert(w.clone(), a);
            list.push((LABELS[ans].to_owned(), a));
            Vote::new(w, LABELS[ans])
        })
        .collect();
    let n = vs.len();
    (Observation::from_votes("q", vs, n).unwrap(), profiles, list)
}

fn fixed(m: usize) -> AnswerDomain {
    AnswerDomain::fixed(LABELS[..m].iter().copied()).unwrap()
}

proptest! {
    #[test]
    fn fixed_domain_matches_bayes((m, votes) in ballots(7)) {
        let (obs, profiles, list) = build(&votes);
        let table = verify(&obs, &profiles, &fixed(m), &VerificationConfig::default()).unwrap();
        let labels: Vec<String> = LABELS[..m].iter().map(|s| s.to_string()).collect();
        let oracle = common::bayes_posterior(&list, &labels, m);
        for (label, p) in &oracle {
            prop_assert!((table.confidence(label) - p).abs() < 1e-9, "{label}: {} vs {p}", table.confidence(label));
        }
        let top = oracle.values().copied().fold(0.0, f64::max);
        prop_assert!((table.best_confidence() - top).abs() < 1e-9);
    }

    #[test]
    fn estimated_domain_matches_bayes((_m, votes) in ballots(7)) {
        let (obs, profiles, list) = build(&votes);
        let domain = AnswerDomain::estimated(LABELS).unwrap();
        let cfg = VerificationConfig::default();
        let table = verify(&obs, &profiles, &domain, &cfg).unwrap();
        let k = obs.distinct_answers();
        let m = estimate_domain_size(k, cfg.epsilon);
        prop_assert_eq!(table.effective_m, m);
        let observed: Vec<String> = list.iter().map(|(l, _)| l.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let oracle = common::bayes_posterior(&list, &observed, m);
        for (label, p) in &oracle {
            let got = if label.is_empty() { table.empty_confidence } else { table.confidence(label) };
            prop_assert!((got - p).abs() < 1e-9);
        }
        prop_assert!((table.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn table_is_a_distribution((m, votes) in ballots(9)) {
        let (obs, profiles, _) = build(&votes);
        let table = verify(&obs, &profiles, &fixed(m), &VerificationConfig::default()).unwrap();
        prop_assert!((table.total_mass() - 1.0).abs() < 1e-12);
        for &p in table.entries.values() {
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p <= table.best_confidence());
        }
        prop_assert!(table.runner_up_confidence() <= table.best_confidence());
    }

    #[test]
    fn vote_order_is_irrelevant((m, votes) in ballots(9), seed in any::<u64>()) {
        let (obs, profiles, _) = build(&votes);
        let mut shuffled = obs.votes().to_vec();
        let len = shuffled.len();
        shuffled.rotate_left((seed as usize) % len);
        shuffled.reverse();
        let obs2 = Observation::from_votes("q", shuffled, len).unwrap();
        let cfg = VerificationConfig::default();
        let t1 = verify(&obs, &profiles, &fixed(m), &cfg).unwrap();
        let t2 = verify(&obs2, &profiles, &fixed(m), &cfg).unwrap();
        prop_assert_eq!(&t1.best, &t2.best);
        for (l, p) in &t1.entries {
            prop_assert!((p - t2.entries[l]).abs() < 1e-12);
        }
    }

    #[test]
    fn guessing_worker_changes_nothing((m, votes) in ballots(8), ans in 0usize..4) {
        let ans = ans % m;
        let (obs, mut profiles, _) = build(&votes);
        let cfg = VerificationConfig::default();
        let before = verify(&obs, &profiles, &fixed(m), &cfg).unwrap();
        let mut vs = obs.votes().to_vec();
        vs.push(Vote::new("guesser", LABELS[ans]));
        profiles.insert("guesser".into(), 1.0 / m as f64);
        let n = vs.len();
        let after = verify(&Observation::from_votes("q", vs, n).unwrap(), &profiles, &fixed(m), &cfg).unwrap();
        for (l, p) in &before.entries {
            prop_assert!((p - after.entries[l]).abs() < 1e-12);
        }
    }

    #[test]
    fn half_voting_implies_majority((m, votes) in ballots(9)) {
        let (obs, _, _) = build(&votes);
        let _ = m;
        if let Some(h) = half_voting(&obs).unwrap() {
            prop_assert_eq!(majority_voting(&obs).unwrap(), Some(h));
        }
    }
}

/// Whether `C(m,k)/m^k > eps`, in exact arithmetic.
fn plausible(m: usize, k: usize, eps: f64) -> bool {
    let lhs = BigRational::new(common::binomial(m, k), BigInt::from(m).pow(k as u32));
    lhs > BigRational::from_float(eps).unwrap()
}

#[test]
fn domain_bounds_are_sound_at_default_epsilon() {
    let eps = 0.05;
    for k in 2..=6usize {
        let (a, b) = domain_size_bounds(k, eps);
        let est = estimate_domain_size(k, eps);
        assert!(est >= k);
        for bound in [a, b].into_iter().flatten() {
            assert!(est as f64 > bound);
            for m in (k..=1000).filter(|&m| plausible(m, k, eps)) {
                assert!(m as f64 > bound, "k={k} m={m} bound={bound}");
            }
        }
    }
}

#[test]
fn harmonic_bound_is_sound_for_any_epsilon() {
    for k in 2..=6usize {
        for eps in [0.001, 0.01, 0.05, 0.1, 0.2] {
            if let (Some(bound), _) = domain_size_bounds(k, eps) {
                for m in (k..=1000).filter(|&m| plausible(m, k, eps)) {
                    assert!(m as f64 > bound, "k={k} eps={eps} m={m} bound={bound}");
                }
            }
        }
    }
}

#[test]
fn log_bound_can_exceed_plausible_sizes() {
    // with eps = 0.1 two distinct answers out of m = 2 is common, yet the
    // second bound asks for m > 2.72
    let (_, b) = domain_size_bounds(2, 0.1);
    assert!(plausible(2, 2, 0.1));
    assert!(b.unwrap() > 2.0);
}
