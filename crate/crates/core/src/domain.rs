//! Value types shared by every stage of the engine.
//!
//! All of these are immutable after construction and validated on the way
//! in, including when they are deserialized from JSON.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Accuracies are kept inside `[ACCURACY_CLAMP, 1 - ACCURACY_CLAMP]` so that
/// log-odds stay finite.
pub const ACCURACY_CLAMP: f64 = 1e-6;

pub fn clamp_accuracy(a: f64, bound: f64) -> f64 {
    a.clamp(bound, 1.0 - bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainMode {
    /// Every possible answer is listed; `m = |labels|`.
    Fixed,
    /// The listed labels are those seen so far; `m` is estimated per question.
    Estimated,
}

/// The set of answers a question admits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct AnswerDomain {
    labels: Vec<String>,
    mode: DomainMode,
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    labels: Vec<String>,
    mode: DomainMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed_size: Option<usize>,
}

impl TryFrom<RawDomain> for AnswerDomain {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        let domain = AnswerDomain::new(raw.labels, raw.mode)?;
        if let Some(m) = raw.fixed_size {
            if domain.mode != DomainMode::Fixed || m != domain.labels.len() {
                return Err(Error::InvalidDomain(format!(
                    "fixed_size {m} does not match {} labels in {:?} mode",
                    domain.labels.len(),
                    domain.mode
                )));
            }
        }
        Ok(domain)
    }
}

impl From<AnswerDomain> for RawDomain {
    fn from(d: AnswerDomain) -> Self {
        let fixed_size = (d.mode == DomainMode::Fixed).then_some(d.labels.len());
        RawDomain {
            labels: d.labels,
            mode: d.mode,
            fixed_size,
        }
    }
}

impl AnswerDomain {
    pub fn new<I, S>(labels: I, mode: DomainMode) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(Error::InvalidDomain("empty label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidDomain(format!("duplicate label {label:?}")));
            }
        }
        if mode == DomainMode::Fixed && labels.len() < 2 {
            return Err(Error::InvalidDomain(format!(
                "a fixed domain needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        Ok(Self { labels, mode })
    }

    pub fn fixed<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(labels, DomainMode::Fixed)
    }

    pub fn estimated<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(labels, DomainMode::Estimated)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mode(&self) -> DomainMode {
        self.mode
    }

    /// `m` for fixed domains.
    pub fn fixed_size(&self) -> Option<usize> {
        (self.mode == DomainMode::Fixed).then_some(self.labels.len())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn check_label(&self, label: &str) -> Result<()> {
        if self.contains(label) {
            Ok(())
        } else {
            Err(Error::UnknownLabel {
                label: label.to_owned(),
            })
        }
    }
}

/// A worker and what is known about their reliability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawProfile")]
pub struct WorkerProfile {
    pub worker_id: String,
    accuracy: f64,
    pub golden_correct: u64,
    pub golden_total: u64,
}

#[derive(Deserialize)]
struct RawProfile {
    worker_id: String,
    accuracy: f64,
    #[serde(default)]
    golden_correct: u64,
    #[serde(default)]
    golden_total: u64,
}

impl From<RawProfile> for WorkerProfile {
    fn from(raw: RawProfile) -> Self {
        let mut p = WorkerProfile::new(raw.worker_id, raw.accuracy);
        p.golden_correct = raw.golden_correct.min(raw.golden_total);
        p.golden_total = raw.golden_total;
        p
    }
}

impl WorkerProfile {
    /// Builds a profile with no golden history. The accuracy is clamped into
    /// `[1e-6, 1 - 1e-6]`; NaN is treated as an uninformed 0.5.
    pub fn new(worker_id: impl Into<String>, accuracy: f64) -> Self {
        let accuracy = if accuracy.is_nan() { 0.5 } else { accuracy };
        Self {
            worker_id: worker_id.into(),
            accuracy: clamp_accuracy(accuracy, ACCURACY_CLAMP),
            golden_correct: 0,
            golden_total: 0,
        }
    }

    pub fn with_tallies(mut self, correct: u64, total: u64) -> Result<Self> {
        if correct > total {
            return Err(Error::InvalidTally { correct, total });
        }
        self.golden_correct = correct;
        self.golden_total = total;
        Ok(self)
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }
}

/// One worker's answer to one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub worker_id: String,
    pub answer: String,
    #[serde(default)]
    pub arrival_index: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keywords: Vec<String>,
}

impl Vote {
    pub fn new(worker_id: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            worker_id: worker_id.into(),
            answer: answer.into(),
            arrival_index: 0,
            keywords: Vec::new(),
        }
    }

    pub fn with_keywords<I, S>(mut self, keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.keywords = keywords.into_iter().map(Into::into).collect();
        self
    }
}

/// The votes received so far for one question out of `n_total` planned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawObservation")]
pub struct Observation {
    pub question_id: String,
    votes: Vec<Vote>,
    n_total: usize,
}

#[derive(Deserialize)]
struct RawObservation {
    question_id: String,
    votes: Vec<Vote>,
    n_total: usize,
}

impl TryFrom<RawObservation> for Observation {
    type Error = Error;

    fn try_from(raw: RawObservation) -> Result<Self> {
        Observation::from_votes(raw.question_id, raw.votes, raw.n_total)
    }
}

impl Observation {
    pub fn new(question_id: impl Into<String>, n_total: usize) -> Self {
        Self {
            question_id: question_id.into(),
            votes: Vec::new(),
            n_total,
        }
    }

    pub fn from_votes(
        question_id: impl Into<String>,
        votes: Vec<Vote>,
        n_total: usize,
    ) -> Result<Self> {
        let mut obs = Self::new(question_id, n_total);
        for vote in votes {
            obs.push(vote)?;
        }
        Ok(obs)
    }

    /// Appends a vote, keeping the caller's `arrival_index`.
    pub fn push(&mut self, vote: Vote) -> Result<()> {
        if self.votes.len() >= self.n_total {
            return Err(Error::InvalidObservation(format!(
                "question {:?} already holds all {} planned votes",
                self.question_id, self.n_total
            )));
        }
        if self.has_voted(&vote.worker_id) {
            return Err(Error::DuplicateWorker(vote.worker_id));
        }
        self.votes.push(vote);
        Ok(())
    }

    pub fn has_voted(&self, worker_id: &str) -> bool {
        self.votes.iter().any(|v| v.worker_id == worker_id)
    }

    pub fn votes(&self) -> &[Vote] {
        &self.votes
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.votes.len() == self.n_total
    }

    /// Distinct answers among the votes, `k`.
    pub fn distinct_answers(&self) -> usize {
        self.votes
            .iter()
            .map(|v| v.answer.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// A question posed to workers. Golden questions carry their known answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawQuestion")]
pub struct Question {
    pub question_id: String,
    pub domain: AnswerDomain,
    pub is_golden: bool,
    pub ground_truth: Option<String>,
}

#[derive(Deserialize)]
struct RawQuestion {
    question_id: String,
    domain: AnswerDomain,
    #[serde(default)]
    is_golden: bool,
    #[serde(default)]
    ground_truth: Option<String>,
}

impl TryFrom<RawQuestion> for Question {
    type Error = Error;

    fn try_from(raw: RawQuestion) -> Result<Self> {
        let q = Question {
            question_id: raw.question_id,
            domain: raw.domain,
            is_golden: raw.is_golden,
            ground_truth: raw.ground_truth,
        };
        q.validate()?;
        Ok(q)
    }
}

impl Question {
    pub fn new(question_id: impl Into<String>, domain: AnswerDomain) -> Self {
        Self {
            question_id: question_id.into(),
            domain,
            is_golden: false,
            ground_truth: None,
        }
    }

    pub fn golden(
        question_id: impl Into<String>,
        domain: AnswerDomain,
        truth: impl Into<String>,
    ) -> Result<Self> {
        let q = Self {
            question_id: question_id.into(),
            domain,
            is_golden: true,
            ground_truth: Some(truth.into()),
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        match (&self.ground_truth, self.is_golden) {
            (None, true) => Err(Error::InvalidQuestion {
                question_id: self.question_id.clone(),
                reason: "golden question without ground truth".into(),
            }),
            (Some(t), _) if !self.domain.contains(t) => Err(Error::InvalidQuestion {
                question_id: self.question_id.clone(),
                reason: format!("ground truth {t:?} is not in the domain"),
            }),
            _ => Ok(()),
        }
    }
}

/// A registered analytics query: keywords, required accuracy, answer
/// domain, start time, window length and item arrival rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub keywords: Vec<String>,
    pub required_accuracy: f64,
    pub domain: AnswerDomain,
    pub timestamp: i64,
    pub window: f64,
    pub items_per_unit: u64,
}

impl QuerySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.required_accuracy > 0.0 && self.required_accuracy < 1.0) {
            return Err(Error::InvalidAccuracyTarget(self.required_accuracy));
        }
        if !(self.window > 0.0) {
            return Err(Error::OutOfRange {
                name: "window",
                range: "(0, inf)",
                value: self.window,
            });
        }
        Ok(())
    }
}

pub(crate) fn check_mean_accuracy(mu: f64) -> Result<()> {
    check_probability("mean accuracy", mu)
}
