//! How many redundant workers does a question need?
//!
//! With `n` independent workers of mean accuracy `mu`, the chance that at
//! least `ceil(n/2)` of them are right is the upper binomial tail
//! `sum_{k >= ceil(n/2)} C(n,k) mu^k (1-mu)^(n-k)`. A Chernoff bound gives a
//! closed-form `n` that is always sufficient; a binary search over odd `n`
//! below that bound then finds the smallest sufficient count.

use serde::{Deserialize, Serialize};

use crate::domain::check_mean_accuracy;
use crate::error::{Error, Result};

/// Default upper limit on the worker-count search range.
pub const DEFAULT_WORKER_CAP: usize = 9999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub conservative_n: usize,
    pub refined_n: usize,
    pub expected_accuracy_at_refined: f64,
}

fn check_odd(n: usize) -> Result<()> {
    if n % 2 == 1 {
        Ok(())
    } else {
        Err(Error::EvenWorkerCount(n))
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Mean with compensated summation, so that a constant sequence averages
/// to exactly that constant.
pub(crate) fn compensated_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    let mut n = 0usize;
    for x in xs {
        acc.add(x);
        n += 1;
    }
    acc.total() / n as f64
}

/// Probability that a strict majority of `n` (odd) workers with common
/// accuracy `mu` answers correctly.
///
/// Terms of the binomial distribution are generated outward from its mode
/// with the ratio `C(n,k+1)/C(n,k) = (n-k)/(k+1)`, starting from 1, and
/// the majority tail is divided by the total. The mode's true value never
/// has to be computed, so nothing underflows for thousands of workers and
/// its rounding error cancels in the quotient.
pub fn expected_majority_prob(n: usize, mu: f64) -> Result<f64> {
    check_odd(n)?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::OutOfRange {
            name: "mean accuracy",
            range: "[0, 1]",
            value: mu,
        });
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    if mu == 1.0 {
        return Ok(1.0);
    }

    let lo = n.div_ceil(2);
    let mode = ((((n + 1) as f64) * mu).floor() as usize).min(n);
    let odds = mu / (1.0 - mu);
    let mut upper = CompensatedSum::default();
    let mut lower = CompensatedSum::default();
    let mut add = |k: usize, t: f64| {
        if k >= lo {
            upper.add(t);
        } else {
            lower.add(t);
        }
    };
    add(mode, 1.0);

    let mut term = 1.0;
    for k in (1..=mode).rev() {
        // term_{k-1} = term_k * k / (n - k + 1) * (1 - mu) / mu
        term *= k as f64 / (n - k + 1) as f64 / odds;
        if term == 0.0 {
            break;
        }
        add(k - 1, term);
    }
    term = 1.0;
    for k in mode..n {
        term *= (n - k) as f64 / (k + 1) as f64 * odds;
        if term == 0.0 {
            break;
        }
        add(k + 1, term);
    }
    let (u, l) = (upper.total(), lower.total());
    Ok((u / (u + l)).clamp(0.0, 1.0))
}

/// Majority-correct probability for workers of individual accuracies: the
/// upper tail of a Poisson-binomial distribution, by dynamic programming
/// over the number of correct answers.
pub fn exact_majority_prob(accuracies: &[f64]) -> Result<f64> {
    let n = accuracies.len();
    check_odd(n)?;
    for &a in accuracies {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::OutOfRange {
                name: "accuracy",
                range: "[0, 1]",
                value: a,
            });
        }
    }
    // dist[j] = P(exactly j of the workers seen so far are correct)
    let mut dist = vec![0.0; n + 1];
    dist[0] = 1.0;
    for (i, &a) in accuracies.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            dist[j] = dist[j] * (1.0 - a) + dist[j - 1] * a;
        }
        dist[0] *= 1.0 - a;
    }
    let mut acc = CompensatedSum::default();
    for p in &dist[n.div_ceil(2)..] {
        acc.add(*p);
    }
    Ok(acc.total().clamp(0.0, 1.0))
}

fn check_inputs(target: f64, mu: f64) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidAccuracyTarget(target));
    }
    if mu.is_nan() || mu <= 0.5 {
        return Err(Error::MeanAccuracyNotAboveHalf(mu));
    }
    check_mean_accuracy(mu)
}

/// Smallest odd `n >= -ln(1 - C) / (2 (mu - 1/2)^2)`.
pub fn conservative_worker_count(target: f64, mu: f64) -> Result<usize> {
    check_inputs(target, mu)?;
    let bound = -(1.0 - target).ln() / (2.0 * (mu - 0.5).powi(2));
    if !bound.is_finite() || bound > usize::MAX as f64 / 2.0 {
        return Err(Error::WorkerCapExceeded {
            required: usize::MAX,
            cap: DEFAULT_WORKER_CAP,
        });
    }
    let n = (bound.ceil() as usize).max(1);
    Ok(if n.is_multiple_of(2) { n + 1 } else { n })
}

/// [`refined_worker_count_capped`] with the default cap.
pub fn refined_worker_count(target: f64, mu: f64) -> Result<PredictionResult> {
    refined_worker_count_capped(target, mu, DEFAULT_WORKER_CAP)
}

/// Minimum odd `n` whose expected majority accuracy reaches `target`,
/// found by binary search over `[1, conservative_n]`.
pub fn refined_worker_count_capped(target: f64, mu: f64, cap: usize) -> Result<PredictionResult> {
    let conservative_n = conservative_worker_count(target, mu)?;
    if conservative_n > cap {
        return Err(Error::WorkerCapExceeded {
            required: conservative_n,
            cap,
        });
    }
    // search over index i with n = 2i - 1
    let (mut lo, mut hi) = (1usize, conservative_n.div_ceil(2));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if expected_majority_prob(2 * mid - 1, mu)? >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let refined_n = 2 * lo - 1;
    Ok(PredictionResult {
        conservative_n,
        refined_n,
        expected_accuracy_at_refined: expected_majority_prob(refined_n, mu)?,
    })
}
