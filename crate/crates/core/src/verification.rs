//! Accuracy-weighted answer fusion.
//!
//! Each worker's vote carries a weight `c = ln((m-1) a / (1-a))`, where `a` is
//! the worker's accuracy and `m` the number of possible answers. The
//! posterior that answer `r` is correct, under a uniform prior and errors
//! spread uniformly over the wrong answers, is
//!
//! ```text
//! rho(r) = exp(S(r)) / sum_{r' in R} exp(S(r')),   S(r) = sum of c over voters for r
//! ```
//!
//! Answers nobody voted for have `S = 0` and still take their share of the
//! denominator.

use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::domain::{
    clamp_accuracy, AnswerDomain, DomainMode, Observation, WorkerProfile, ACCURACY_CLAMP,
};
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerificationConfig {
    /// Probability below which an observation counts as too rare when
    /// estimating the answer-domain size.
    pub epsilon: f64,
    pub m_override: Option<usize>,
    pub accuracy_clamp: f64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            m_override: None,
            accuracy_clamp: ACCURACY_CLAMP,
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                range: "(0, 1)",
                value: self.epsilon,
            });
        }
        if !(self.accuracy_clamp >= 0.0 && self.accuracy_clamp < 0.5) {
            return Err(Error::OutOfRange {
                name: "accuracy_clamp",
                range: "[0, 0.5)",
                value: self.accuracy_clamp,
            });
        }
        if let Some(m) = self.m_override {
            if m < 2 {
                return Err(Error::DomainTooSmall(m));
            }
        }
        Ok(())
    }
}

/// Anything that can answer "how accurate is this worker?".
pub trait ProfileSource {
    fn accuracy_of(&self, worker_id: &str) -> Option<f64>;
}

impl ProfileSource for BTreeMap<String, WorkerProfile> {
    fn accuracy_of(&self, worker_id: &str) -> Option<f64> {
        self.get(worker_id).map(WorkerProfile::accuracy)
    }
}

impl ProfileSource for HashMap<String, WorkerProfile> {
    fn accuracy_of(&self, worker_id: &str) -> Option<f64> {
        self.get(worker_id).map(WorkerProfile::accuracy)
    }
}

impl ProfileSource for HashMap<String, f64> {
    fn accuracy_of(&self, worker_id: &str) -> Option<f64> {
        self.get(worker_id).copied()
    }
}

impl ProfileSource for BTreeMap<String, f64> {
    fn accuracy_of(&self, worker_id: &str) -> Option<f64> {
        self.get(worker_id).copied()
    }
}

impl ProfileSource for [WorkerProfile] {
    fn accuracy_of(&self, worker_id: &str) -> Option<f64> {
        self.iter()
            .find(|p| p.worker_id == worker_id)
            .map(WorkerProfile::accuracy)
    }
}

/// Posterior confidence of each answer under one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceTable {
    /// Observed answers, plus the unobserved labels of a fixed domain when
    /// `effective_m` equals the domain size.
    pub entries: BTreeMap<String, f64>,
    pub best: String,
    /// `None` when the runner-up is an answer nobody voted for and that has
    /// no known label.
    pub runner_up: Option<String>,
    pub effective_m: usize,
    pub observed_k: usize,
    /// Confidence of any answer that received no vote.
    pub empty_confidence: f64,
}

impl ConfidenceTable {
    pub fn confidence(&self, label: &str) -> f64 {
        self.entries
            .get(label)
            .copied()
            .unwrap_or(self.empty_confidence)
    }

    /// Unobserved answers that are not listed in `entries`.
    pub fn anonymous_answers(&self) -> usize {
        self.effective_m.saturating_sub(self.entries.len())
    }

    /// Total probability mass, including unlisted answers; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum::<f64>() + self.anonymous_answers() as f64 * self.empty_confidence
    }

    pub fn best_confidence(&self) -> f64 {
        self.confidence(&self.best)
    }

    pub fn runner_up_confidence(&self) -> f64 {
        match &self.runner_up {
            Some(label) => self.confidence(label),
            None => self.empty_confidence,
        }
    }
}

/// `ln((m-1) a / (1-a))`; zero for a worker who guesses uniformly (`a = 1/m`).
pub fn worker_confidence(accuracy: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::DomainTooSmall(m));
    }
    Ok(((m - 1) as f64).ln() + log_odds(clamp_accuracy(accuracy, ACCURACY_CLAMP)))
}

fn log_odds(a: f64) -> f64 {
    (a / (1.0 - a)).ln()
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// The two lower bounds on the domain size `m` implied by seeing `k`
/// distinct answers with probability above `epsilon`. A bound is `None`
/// when its denominator is not positive.
///
/// The first follows from bounding `C(m,k)/m^k` via the AM-GM inequality on
/// `(1/i - 1/m)`; the second from `k ln((1 - (k-1)/m) / k) > ln(epsilon)`,
/// which gives `m > (k-1) / (1 - k epsilon^(1/k))`.
pub fn domain_size_bounds(k: usize, epsilon: f64) -> (Option<f64>, Option<f64>) {
    if k < 2 {
        return (None, None);
    }
    let km1 = (k - 1) as f64;
    let kf = k as f64;
    let harmonic_den = harmonic(k - 1) - km1 * (kf * epsilon).powf(1.0 / km1);
    let log_den = 1.0 - kf * epsilon.powf(1.0 / kf);
    let feasible = |den: f64| (den > 0.0).then(|| km1 / den);
    (feasible(harmonic_den), feasible(log_den))
}

/// Smallest integer strictly above every feasible bound, clamped to at
/// least `max(k, 2)`.
pub fn estimate_domain_size(k: usize, epsilon: f64) -> usize {
    let floor = k.max(2);
    let (a, b) = domain_size_bounds(k, epsilon);
    let bound = match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    match bound {
        Some(b) if b.is_finite() => ((b.floor() as usize) + 1).max(floor),
        _ => floor,
    }
}

/// Resolves the `m` used for one observation with `k` distinct answers.
pub fn effective_domain_size(
    domain: &AnswerDomain,
    k: usize,
    cfg: &VerificationConfig,
) -> Result<usize> {
    let m = match (cfg.m_override, domain.fixed_size()) {
        (Some(m), _) => m,
        (None, Some(m)) => m,
        (None, None) => estimate_domain_size(k, cfg.epsilon),
    };
    if m < k.max(2) {
        return Err(Error::DomainTooSmall(m));
    }
    Ok(m)
}

/// Builds the normalized table from per-answer vote scores.
///
/// `scores` holds `S(r)` for each observed answer, `named_empty` lists
/// unobserved answers with known labels; `m - scores.len()` answers in all
/// are unobserved.
pub(crate) fn table_from_scores(
    scores: &BTreeMap<String, f64>,
    named_empty: &[String],
    m: usize,
) -> ConfidenceTable {
    let k = scores.len();
    debug_assert!(k >= 1 && m >= k);
    let unobserved = (m - k) as f64;
    let mut shift = scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    if m > k {
        shift = shift.max(0.0);
    }
    let empty_weight = (-shift).exp();
    let denom: f64 =
        scores.values().map(|s| (s - shift).exp()).sum::<f64>() + unobserved * empty_weight;

    let empty_confidence = empty_weight / denom;
    let mut entries: BTreeMap<String, f64> = scores
        .iter()
        .map(|(label, s)| (label.clone(), (s - shift).exp() / denom))
        .collect();
    for label in named_empty {
        entries.insert(label.clone(), empty_confidence);
    }

    // BTreeMap order makes strict comparisons pick the lexicographically
    // smallest label among ties.
    let mut best: Option<(&String, f64)> = None;
    let mut second: Option<(&String, f64)> = None;
    for (label, &p) in &entries {
        match best {
            Some((_, bp)) if p <= bp => {
                if second.is_none_or(|(_, sp)| p > sp) {
                    second = Some((label, p));
                }
            }
            _ => {
                second = best;
                best = Some((label, p));
            }
        }
    }
    let (best, _) = best.expect("at least one observed answer");
    let anonymous = m - entries.len();
    let runner_up = match second {
        Some((label, p)) if anonymous == 0 || p >= empty_confidence => Some(label.clone()),
        _ if anonymous > 0 => None,
        other => other.map(|(label, _)| label.clone()),
    };

    ConfidenceTable {
        best: best.clone(),
        runner_up,
        effective_m: m,
        observed_k: k,
        empty_confidence,
        entries,
    }
}

/// Labels of a fixed domain that nobody voted for, when `m` covers exactly
/// that domain.
pub(crate) fn named_unobserved(
    domain: &AnswerDomain,
    m: usize,
    scores: &BTreeMap<String, f64>,
) -> Vec<String> {
    if domain.mode() == DomainMode::Fixed && domain.labels().len() == m {
        domain
            .labels()
            .iter()
            .filter(|l| !scores.contains_key(*l))
            .cloned()
            .collect()
    } else {
        Vec::new()
    }
}

fn verify_with<F>(
    obs: &Observation,
    domain: &AnswerDomain,
    cfg: &VerificationConfig,
    mut log_odds_of: F,
) -> Result<ConfidenceTable>
where
    F: FnMut(&str) -> Result<f64>,
{
    cfg.validate()?;
    if obs.is_empty() {
        return Err(Error::EmptyObservation);
    }
    for v in obs.votes() {
        domain.check_label(&v.answer)?;
    }
    let k = obs.distinct_answers();
    let m = effective_domain_size(domain, k, cfg)?;
    let prior = ((m - 1) as f64).ln();

    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for v in obs.votes() {
        let c = prior + log_odds_of(&v.worker_id)?;
        *scores.entry(v.answer.clone()).or_insert(0.0) += c;
    }
    let named = named_unobserved(domain, m, &scores);
    Ok(table_from_scores(&scores, &named, m))
}

/// Posterior confidence of every answer given a (possibly partial)
/// observation and the voters' accuracies.
pub fn verify<P: ProfileSource + ?Sized>(
    obs: &Observation,
    profiles: &P,
    domain: &AnswerDomain,
    cfg: &VerificationConfig,
) -> Result<ConfidenceTable> {
    verify_with(obs, domain, cfg, |worker| {
        let a = profiles
            .accuracy_of(worker)
            .ok_or_else(|| Error::MissingProfile(worker.to_owned()))?;
        Ok(log_odds(clamp_accuracy(a, cfg.accuracy_clamp)))
    })
}

/// Memo of per-worker log-odds `ln(a/(1-a))`, keyed by worker and the exact
/// accuracy it was computed from. Safe to share between threads; concurrent
/// writers store identical values.
#[derive(Debug, Default)]
pub struct LogOddsCache {
    inner: RwLock<HashMap<String, (u64, f64)>>,
}

impl LogOddsCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log_odds(&self, worker_id: &str, accuracy: f64) -> f64 {
        let bits = accuracy.to_bits();
        if let Some(&(b, v)) = self.inner.read().expect("cache poisoned").get(worker_id) {
            if b == bits {
                return v;
            }
        }
        let v = log_odds(accuracy);
        self.inner
            .write()
            .expect("cache poisoned")
            .insert(worker_id.to_owned(), (bits, v));
        v
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A verification config bundled with a log-odds cache.
#[derive(Debug, Default)]
pub struct Verifier {
    pub cfg: VerificationConfig,
    cache: LogOddsCache,
}

impl Verifier {
    pub fn new(cfg: VerificationConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            cache: LogOddsCache::new(),
        })
    }

    pub fn verify<P: ProfileSource + ?Sized>(
        &self,
        obs: &Observation,
        profiles: &P,
        domain: &AnswerDomain,
    ) -> Result<ConfidenceTable> {
        let clamp = self.cfg.accuracy_clamp;
        verify_with(obs, domain, &self.cfg, |worker| {
            let a = profiles
                .accuracy_of(worker)
                .ok_or_else(|| Error::MissingProfile(worker.to_owned()))?;
            Ok(self.cache.log_odds(worker, clamp_accuracy(a, clamp)))
        })
    }

    pub fn cache(&self) -> &LogOddsCache {
        &self.cache
    }
}

fn vote_counts(obs: &Observation) -> Result<BTreeMap<&str, usize>> {
    if !obs.is_complete() {
        return Err(Error::IncompleteObservation {
            received: obs.len(),
            planned: obs.n_total(),
        });
    }
    let mut counts = BTreeMap::new();
    for v in obs.votes() {
        *counts.entry(v.answer.as_str()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Accepts the answer chosen by at least `ceil(n/2)` workers, if any.
pub fn half_voting(obs: &Observation) -> Result<Option<String>> {
    let counts = vote_counts(obs)?;
    let threshold = obs.n_total().div_ceil(2).max(1);
    let mut winners = counts.iter().filter(|(_, &c)| c >= threshold);
    Ok(match (winners.next(), winners.next()) {
        (Some((label, _)), None) => Some((*label).to_owned()),
        _ => None,
    })
}

/// Accepts the answer with strictly more votes than every other answer.
pub fn majority_voting(obs: &Observation) -> Result<Option<String>> {
    let counts = vote_counts(obs)?;
    let top = counts.values().copied().max().unwrap_or(0);
    let mut leaders = counts.iter().filter(|(_, &c)| c == top);
    Ok(match (leaders.next(), leaders.next()) {
        (Some((label, _)), None) => Some((*label).to_owned()),
        _ => None,
    })
}

/// The fused table together with both voting baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub question_id: String,
    pub table: ConfidenceTable,
    pub verification: String,
    pub half_voting: Option<String>,
    pub majority_voting: Option<String>,
}

/// Runs all three decision rules on a complete observation.
pub fn verify_report<P: ProfileSource + ?Sized>(
    obs: &Observation,
    profiles: &P,
    domain: &AnswerDomain,
    cfg: &VerificationConfig,
) -> Result<VerificationReport> {
    let table = verify(obs, profiles, domain, cfg)?;
    Ok(VerificationReport {
        question_id: obs.question_id.clone(),
        verification: table.best.clone(),
        half_voting: half_voting(obs)?,
        majority_voting: majority_voting(obs)?,
        table,
    })
}
