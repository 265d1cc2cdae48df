//! Incremental verification while answers trickle in, and the decision of
//! when to stop waiting for the rest.
//!
//! After every vote the partial observation is verified exactly as a
//! complete one would be. To decide whether the remaining workers could
//! still change the outcome, every outstanding worker is assumed to vote for
//! the current runner-up with the expected accuracy of an unseen worker.
//! That adversarial completion gives the smallest reachable confidence for
//! the current leader and the largest for the runner-up.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{
    check_mean_accuracy, clamp_accuracy, AnswerDomain, Observation, Question, Vote, WorkerProfile,
};
use crate::error::{Error, Result};
use crate::verification::{
    effective_domain_size, table_from_scores, verify, worker_confidence, ConfidenceTable,
    ProfileSource, VerificationConfig,
};

/// Lead a stopping rule must exceed, so that ties broken by rounding do
/// not count as wins.
pub const STOP_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Stop when the leader's worst case beats the runner-up's best case.
    MinMax,
    /// Stop when the leader's worst case beats the runner-up's current value.
    MinExp,
    /// Stop when the leader's current value beats the runner-up's best case.
    ExpMax,
    /// Never stop early.
    None,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::None,
        Strategy::MinMax,
        Strategy::MinExp,
        Strategy::ExpMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::MinMax => "minmax",
            Strategy::MinExp => "minexp",
            Strategy::ExpMax => "expmax",
            Strategy::None => "none",
        }
    }

    /// Applies this strategy's stopping rule to a bracket.
    pub fn should_stop(self, e: &TerminationEvaluation) -> bool {
        match self {
            Strategy::MinMax => e.min_p1 > e.max_p2 + STOP_MARGIN,
            Strategy::MinExp => e.min_p1 > e.p2 + STOP_MARGIN,
            Strategy::ExpMax => e.p1 > e.max_p2 + STOP_MARGIN,
            Strategy::None => false,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" => Ok(Strategy::MinMax),
            "minexp" => Ok(Strategy::MinExp),
            "expmax" => Ok(Strategy::ExpMax),
            "none" => Ok(Strategy::None),
            other => Err(Error::InvalidScenario(format!(
                "unknown strategy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Collecting,
    Terminated,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationEvaluation {
    pub r1: String,
    /// `None` stands for an answer nobody has voted for yet.
    pub r2: Option<String>,
    pub min_p1: f64,
    pub max_p2: f64,
    pub p1: f64,
    pub p2: f64,
    pub should_stop: bool,
}

/// Settings shared by every session of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineSettings {
    pub n_total: usize,
    /// Expected accuracy of the workers who have not answered yet.
    pub mu_remaining: f64,
    pub strategy: Strategy,
    #[serde(default)]
    pub cfg: VerificationConfig,
}

/// Verification state for one question whose answers arrive one at a time.
#[derive(Debug, Clone)]
pub struct OnlineSession {
    domain: AnswerDomain,
    obs: Observation,
    accuracies: HashMap<String, f64>,
    mu_remaining: f64,
    strategy: Strategy,
    cfg: VerificationConfig,
    state: SessionState,
    table: Option<ConfidenceTable>,
    last_evaluation: Option<TerminationEvaluation>,
}

impl OnlineSession {
    pub fn new(
        question_id: impl Into<String>,
        domain: AnswerDomain,
        settings: OnlineSettings,
    ) -> Result<Self> {
        settings.cfg.validate()?;
        check_mean_accuracy(settings.mu_remaining)?;
        if settings.n_total == 0 {
            return Err(Error::InvalidObservation("n_total must be positive".into()));
        }
        Ok(Self {
            domain,
            obs: Observation::new(question_id, settings.n_total),
            accuracies: HashMap::new(),
            mu_remaining: settings.mu_remaining,
            strategy: settings.strategy,
            cfg: settings.cfg,
            state: SessionState::Collecting,
            table: None,
            last_evaluation: None,
        })
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn table(&self) -> Option<&ConfidenceTable> {
        self.table.as_ref()
    }

    pub fn last_evaluation(&self) -> Option<&TerminationEvaluation> {
        self.last_evaluation.as_ref()
    }

    pub fn votes_received(&self) -> usize {
        self.obs.len()
    }

    pub fn remaining(&self) -> usize {
        self.obs.n_total() - self.obs.len()
    }

    /// Current confidence of `label`; before any vote every answer holds
    /// `1/m`.
    pub fn confidence(&self, label: &str) -> Result<f64> {
        match &self.table {
            Some(t) => Ok(t.confidence(label)),
            None => {
                let m = effective_domain_size(&self.domain, 0, &self.cfg)?;
                Ok(1.0 / m as f64)
            }
        }
    }

    /// Records one answer, re-verifies, and applies the stopping rule.
    /// The vote's `arrival_index` is overwritten with its receipt order.
    pub fn push_answer(
        &mut self,
        mut vote: Vote,
        profile: &WorkerProfile,
    ) -> Result<ConfidenceTable> {
        if self.state != SessionState::Collecting {
            return Err(Error::SessionClosed);
        }
        if vote.worker_id != profile.worker_id {
            return Err(Error::MissingProfile(vote.worker_id));
        }
        if self.obs.has_voted(&vote.worker_id) {
            return Err(Error::DuplicateWorker(vote.worker_id));
        }
        self.domain.check_label(&vote.answer)?;
        vote.arrival_index = self.obs.len();
        self.accuracies
            .insert(vote.worker_id.clone(), profile.accuracy());
        self.obs.push(vote)?;

        let table = verify(&self.obs, &self.accuracies, &self.domain, &self.cfg)?;
        self.table = Some(table.clone());

        if self.obs.is_complete() {
            self.state = SessionState::Exhausted;
            self.last_evaluation = None;
        } else {
            let eval = self.evaluate_termination()?;
            if eval.should_stop {
                self.state = SessionState::Terminated;
            }
            self.last_evaluation = Some(eval);
        }
        Ok(table)
    }

    /// Confidence bracket under the adversarial completion in which every
    /// outstanding worker votes for the runner-up.
    pub fn evaluate_termination(&self) -> Result<TerminationEvaluation> {
        let table = self.table.as_ref().ok_or(Error::NoVotesYet)?;
        let remaining = self.remaining();
        if remaining == 0 {
            return Err(Error::SessionExhausted);
        }
        let m = table.effective_m;
        let clamp = self.cfg.accuracy_clamp;
        let prior = ((m - 1) as f64).ln();

        let mut scores: BTreeMap<String, f64> = BTreeMap::new();
        for v in self.obs.votes() {
            let a = clamp_accuracy(self.accuracies[&v.worker_id], clamp);
            *scores.entry(v.answer.clone()).or_insert(0.0) += prior + (a / (1.0 - a)).ln();
        }

        let r1 = table.best.clone();
        let r2 = table.runner_up.clone();
        // a fresh answer gets a placeholder key no real label can collide with
        let r2_key = r2.clone().unwrap_or_else(|| "\u{0}fresh".to_owned());
        let extra =
            remaining as f64 * worker_confidence(clamp_accuracy(self.mu_remaining, clamp), m)?;

        let mut hypothetical = scores.clone();
        *hypothetical.entry(r2_key.clone()).or_insert(0.0) += extra;
        let named: Vec<String> = table
            .entries
            .keys()
            .filter(|l| !hypothetical.contains_key(*l))
            .cloned()
            .collect();
        let completed = table_from_scores(&hypothetical, &named, m);

        let p1 = table.confidence(&r1);
        let p2 = table.runner_up_confidence();
        let mut eval = TerminationEvaluation {
            min_p1: completed.confidence(&r1),
            max_p2: completed.confidence(&r2_key),
            r1,
            r2,
            p1,
            p2,
            should_stop: false,
        };
        eval.should_stop = self.strategy.should_stop(&eval);
        Ok(eval)
    }
}

/// Outcome of replaying a vote stream through a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineOutcome {
    pub table: ConfidenceTable,
    pub votes_consumed: usize,
    pub state: SessionState,
}

/// Feeds votes in order until the strategy stops the session or the
/// planned votes run out.
pub fn run_online<I, P>(
    question: &Question,
    votes: I,
    profiles: &P,
    settings: OnlineSettings,
) -> Result<OnlineOutcome>
where
    I: IntoIterator<Item = Vote>,
    P: ProfileSource + ?Sized,
{
    let mut session = OnlineSession::new(
        question.question_id.clone(),
        question.domain.clone(),
        settings,
    )?;
    let mut last = None;
    for vote in votes {
        if session.state() != SessionState::Collecting {
            break;
        }
        let a = profiles
            .accuracy_of(&vote.worker_id)
            .ok_or_else(|| Error::MissingProfile(vote.worker_id.clone()))?;
        let profile = WorkerProfile::new(vote.worker_id.clone(), a);
        last = Some(session.push_answer(vote, &profile)?);
    }
    let table = last.ok_or(Error::NoVotesYet)?;
    Ok(OnlineOutcome {
        table,
        votes_consumed: session.votes_received(),
        state: session.state(),
    })
}

/// One question's contribution to a stream summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDecision {
    pub accepted: Option<String>,
    pub table: ConfidenceTable,
}

/// Share of the stream attributed to each answer: 1 for an accepted
/// answer, 0 for the others, and the answer's confidence when nothing was
/// accepted; averaged over the stream.
pub fn present_results(
    decisions: &[QuestionDecision],
    domain: &AnswerDomain,
) -> Result<BTreeMap<String, f64>> {
    if decisions.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut shares: BTreeMap<String, f64> =
        domain.labels().iter().map(|l| (l.clone(), 0.0)).collect();
    for d in decisions {
        match &d.accepted {
            Some(label) => *shares.entry(label.clone()).or_insert(0.0) += 1.0,
            None => {
                for (label, rho) in &d.table.entries {
                    *shares.entry(label.clone()).or_insert(0.0) += rho;
                }
            }
        }
    }
    let n = decisions.len() as f64;
    shares.values_mut().for_each(|v| *v /= n);
    Ok(shares)
}

/// Most frequent keywords among the given votes; ties keep first-seen order.
pub fn top_reasons<'a, I>(votes: I, limit: usize) -> Vec<String>
where
    I: IntoIterator<Item = &'a Vote>,
{
    let mut counts: Vec<(&'a str, usize)> = Vec::new();
    let mut index: HashMap<&'a str, usize> = HashMap::new();
    for vote in votes {
        for kw in &vote.keywords {
            match index.get(kw.as_str()) {
                Some(&i) => counts[i].1 += 1,
                None => {
                    index.insert(kw.as_str(), counts.len());
                    counts.push((kw.as_str(), 1));
                }
            }
        }
    }
    // stable sort keeps first appearance among equal counts
    counts.sort_by_key(|c| std::cmp::Reverse(c.1));
    counts
        .into_iter()
        .take(limit)
        .map(|(kw, _)| kw.to_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> AnswerDomain {
        AnswerDomain::fixed(["r1", "r2"]).unwrap()
    }

    fn settings(n_total: usize, mu: f64, strategy: Strategy) -> OnlineSettings {
        OnlineSettings {
            n_total,
            mu_remaining: mu,
            strategy,
            cfg: VerificationConfig::default(),
        }
    }

    fn push(s: &mut OnlineSession, worker: &str, answer: &str, a: f64) -> ConfidenceTable {
        s.push_answer(Vote::new(worker, answer), &WorkerProfile::new(worker, a))
            .unwrap()
    }

    #[test]
    fn empty_session_is_uniform() {
        let s = OnlineSession::new("q", binary(), settings(5, 0.6, Strategy::MinMax)).unwrap();
        assert_eq!(s.confidence("r1").unwrap(), 0.5);
        assert!(s.table().is_none());
        assert!(matches!(s.evaluate_termination(), Err(Error::NoVotesYet)));
        let three = AnswerDomain::fixed(["a", "b", "c"]).unwrap();
        let s = OnlineSession::new("q", three, settings(5, 0.6, Strategy::MinMax)).unwrap();
        assert!((s.confidence("a").unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn first_vote_matches_single_voter_case() {
        let mut s = OnlineSession::new("q", binary(), settings(5, 0.6, Strategy::None)).unwrap();
        let t = push(&mut s, "a", "r1", 0.8);
        assert!((t.confidence("r1") - 0.8).abs() < 1e-12);
    }

    #[test]
    fn minmax_closed_form() {
        let mut s = OnlineSession::new("q", binary(), settings(5, 0.6, Strategy::MinMax)).unwrap();
        push(&mut s, "a", "r1", 0.6);
        push(&mut s, "b", "r1", 0.6);
        assert_eq!(s.state(), SessionState::Collecting);
        push(&mut s, "c", "r1", 0.6);
        let e = s.last_evaluation().unwrap();
        assert!((e.min_p1 - 0.6).abs() < 1e-12, "{e:?}");
        assert!((e.max_p2 - 0.4).abs() < 1e-12);
        assert!(e.should_stop);
        assert_eq!(s.state(), SessionState::Terminated);
        assert!(matches!(
            s.push_answer(Vote::new("d", "r1"), &WorkerProfile::new("d", 0.6)),
            Err(Error::SessionClosed)
        ));
    }

    #[test]
    fn split_votes_never_stop() {
        for strategy in Strategy::ALL {
            let mut s = OnlineSession::new("q", binary(), settings(7, 0.7, strategy)).unwrap();
            push(&mut s, "a", "r1", 0.7);
            push(&mut s, "b", "r2", 0.7);
            let e = s.evaluate_termination().unwrap();
            assert!(e.min_p1 < e.max_p2);
            assert!(!e.should_stop);
        }
    }

    #[test]
    fn exhaustion_and_duplicates() {
        let mut s = OnlineSession::new("q", binary(), settings(2, 0.6, Strategy::None)).unwrap();
        push(&mut s, "a", "r1", 0.6);
        assert!(matches!(
            s.push_answer(Vote::new("a", "r2"), &WorkerProfile::new("a", 0.6)),
            Err(Error::DuplicateWorker(_))
        ));
        push(&mut s, "b", "r2", 0.6);
        assert_eq!(s.state(), SessionState::Exhausted);
        assert!(matches!(
            s.evaluate_termination(),
            Err(Error::SessionExhausted)
        ));
    }

    #[test]
    fn fresh_runner_up_in_estimated_domain() {
        let d = AnswerDomain::estimated(["x", "y", "z"]).unwrap();
        let mut s = OnlineSession::new("q", d, settings(9, 0.8, Strategy::MinMax)).unwrap();
        push(&mut s, "a", "x", 0.8);
        let e = s.evaluate_termination().unwrap();
        assert_eq!(e.r2, None);
        assert!(e.min_p1 <= e.p1 && e.p2 <= e.max_p2);
    }

    #[test]
    fn run_online_counts_consumed_votes() {
        let q = Question::new("q", binary());
        let votes: Vec<Vote> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|w| Vote::new(*w, "r1"))
            .collect();
        let profiles: BTreeMap<String, WorkerProfile> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|w| (w.to_string(), WorkerProfile::new(*w, 0.6)))
            .collect();
        let out = run_online(
            &q,
            votes.clone(),
            &profiles,
            settings(5, 0.6, Strategy::MinMax),
        )
        .unwrap();
        assert_eq!(out.votes_consumed, 3);
        assert_eq!(out.state, SessionState::Terminated);
        let out = run_online(&q, votes, &profiles, settings(5, 0.6, Strategy::None)).unwrap();
        assert_eq!(out.votes_consumed, 5);
        assert_eq!(out.state, SessionState::Exhausted);
    }

    fn table(entries: &[(&str, f64)]) -> ConfidenceTable {
        ConfidenceTable {
            entries: entries.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
            best: entries[0].0.to_owned(),
            runner_up: entries.get(1).map(|e| e.0.to_owned()),
            effective_m: entries.len(),
            observed_k: entries.len(),
            empty_confidence: 0.0,
        }
    }

    #[test]
    fn presentation_shares() {
        let d = AnswerDomain::fixed(["Good", "Bad"]).unwrap();
        let mut decisions = Vec::new();
        for i in 0..10 {
            let label = if i < 7 { "Good" } else { "Bad" };
            decisions.push(QuestionDecision {
                accepted: Some(label.into()),
                table: table(&[(label, 1.0)]),
            });
        }
        let shares = present_results(&decisions, &d).unwrap();
        assert!((shares["Good"] - 0.7).abs() < 1e-12);
        assert!((shares["Bad"] - 0.3).abs() < 1e-12);

        let d = AnswerDomain::fixed(["A", "B"]).unwrap();
        let undecided = QuestionDecision {
            accepted: None,
            table: table(&[("A", 0.6), ("B", 0.4)]),
        };
        let shares = present_results(&[undecided], &d).unwrap();
        assert!((shares["A"] - 0.6).abs() < 1e-12 && (shares["B"] - 0.4).abs() < 1e-12);

        let decided = QuestionDecision {
            accepted: Some("A".into()),
            table: table(&[("A", 0.9), ("B", 0.1)]),
        };
        let undecided = QuestionDecision {
            accepted: None,
            table: table(&[("A", 0.5), ("B", 0.5)]),
        };
        let shares = present_results(&[decided, undecided], &d).unwrap();
        assert!((shares["A"] - 0.75).abs() < 1e-12 && (shares["B"] - 0.25).abs() < 1e-12);

        assert!(matches!(present_results(&[], &d), Err(Error::EmptyStream)));
    }

    #[test]
    fn reasons() {
        let votes = vec![
            Vote::new("a", "Best Ever").with_keywords(["Siri", "iOS5"]),
            Vote::new("b", "Best Ever").with_keywords(["Siri"]),
        ];
        assert_eq!(top_reasons(&votes, 2), ["Siri", "iOS5"]);
        assert!(top_reasons(&[], 3).is_empty());
        let votes = vec![Vote::new("a", "x").with_keywords(["one", "two", "three"])];
        assert_eq!(top_reasons(&votes, 1), ["one"]);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("MinMax".parse::<Strategy>().unwrap(), Strategy::MinMax);
        assert_eq!("none".parse::<Strategy>().unwrap(), Strategy::None);
        assert!("fastest".parse::<Strategy>().is_err());
        assert_eq!(
            serde_json::to_string(&Strategy::ExpMax).unwrap(),
            "\"expmax\""
        );
    }
}
