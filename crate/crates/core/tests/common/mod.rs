//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn binomial(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// Majority tail of Binomial(n, mu) in exact rational arithmetic over the
/// binary value of `mu`.
pub fn exact_majority_tail(n: usize, mu: f64) -> f64 {
    let p = BigRational::from_float(mu).expect("finite mu");
    let q = BigRational::one() - &p;
    let mut total = BigRational::zero();
    for k in (n / 2 + 1)..=n {
        let term = BigRational::from_integer(binomial(n, k))
            * num_traits::pow(p.clone(), k)
            * num_traits::pow(q.clone(), n - k);
        total += term;
    }
    total.to_f64().expect("representable")
}

/// Textbook summation of the same tail in floating point.
pub fn direct_majority_tail(n: usize, mu: f64) -> f64 {
    ((n / 2 + 1)..=n)
        .map(|k| {
            binomial(n, k).to_f64().unwrap() * mu.powi(k as i32) * (1.0 - mu).powi((n - k) as i32)
        })
        .sum()
}

/// Probability that more than half of independent voters are right, by
/// enumerating all 2^n outcomes.
pub fn enumerate_majority(accuracies: &[f64]) -> f64 {
    let n = accuracies.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() as usize) * 2 <= n {
            continue;
        }
        let p: f64 = accuracies
            .iter()
            .enumerate()
            .map(|(i, &a)| if mask >> i & 1 == 1 { a } else { 1.0 - a })
            .product();
        total += p;
    }
    total
}

/// Posterior of each of `m` candidate truths given `(answer, accuracy)`
/// votes, by direct application of Bayes' rule with a uniform prior and
/// wrong answers spread evenly. `labels` names the first candidates; the
/// rest are anonymous and share one value, returned under the key "".
pub fn bayes_posterior(
    votes: &[(String, f64)],
    labels: &[String],
    m: usize,
) -> BTreeMap<String, f64> {
    assert!(labels.len() <= m);
    let likelihood = |truth: Option<&str>| -> f64 {
        votes
            .iter()
            .map(|(ans, a)| {
                if Some(ans.as_str()) == truth {
                    *a
                } else {
                    (1.0 - a) / (m - 1) as f64
                }
            })
            .product()
    };
    let named: Vec<f64> = labels.iter().map(|l| likelihood(Some(l))).collect();
    let anon = likelihood(None);
    let z: f64 = named.iter().sum::<f64>() + anon * (m - labels.len()) as f64;
    let mut out: BTreeMap<String, f64> = labels
        .iter()
        .cloned()
        .zip(named.iter().map(|l| l / z))
        .collect();
    if m > labels.len() {
        out.insert(String::new(), anon / z);
    }
    out
}

/// Every sequence of `len` indices below `m`.
pub fn sequences(m: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..m).map(move |i| {
                    let mut t = s.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}
