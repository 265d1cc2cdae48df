//! Seeded Monte Carlo model of a worker pool answering replicated
//! questions.
//!
//! Every random decision draws from its own ChaCha8 stream keyed by
//! `(seed, trial, purpose, index)`, so results do not depend on how work is
//! scheduled across threads.

mod distribution;
mod transcript;

pub use distribution::AccuracyDistribution;
pub use transcript::{
    read_transcript, rebuild_profiles, write_transcript, TranscriptRecord, VerifyDocument,
};

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{AnswerDomain, Observation, Question, Vote, WorkerProfile};
use crate::error::{Error, Result};
use crate::hit::{golden_slots, CostModel, HitBatch};
use crate::online::{OnlineSession, OnlineSettings, SessionState, Strategy};
use crate::prediction::refined_worker_count;
use crate::sampling::{tally_goldens, AnswerSheet, ProfileStore, SamplingConfig};
use crate::verification::{half_voting, majority_voting, ProfileSource, VerificationConfig};

/// Purposes that key independent random streams.
pub mod tag {
    pub const POOL: u64 = 1;
    pub const CALIBRATION: u64 = 2;
    pub const CALIBRATION_ORDER: u64 = 3;
    pub const QUESTION: u64 = 4;
}

/// Independent generator for one `(seed, trial, tag, index)` key.
pub fn stream(seed: u64, trial: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, trial, tag, index]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn worker_id(i: usize) -> String {
    format!("w{i:05}")
}

/// `size` workers with accuracies drawn i.i.d. from `dist`.
pub fn draw_pool(
    dist: &AccuracyDistribution,
    size: usize,
    seed: u64,
) -> Result<Vec<WorkerProfile>> {
    draw_pool_with(dist, size, &mut stream(seed, 0, tag::POOL, 0))
}

pub fn draw_pool_with<R: Rng + ?Sized>(
    dist: &AccuracyDistribution,
    size: usize,
    rng: &mut R,
) -> Result<Vec<WorkerProfile>> {
    dist.validate()?;
    if size == 0 {
        return Err(Error::PoolTooSmall {
            required: 1,
            available: 0,
        });
    }
    Ok((0..size)
        .map(|i| WorkerProfile::new(worker_id(i), dist.sample(rng)))
        .collect())
}

/// The ground truth with probability `accuracy`, otherwise a uniformly
/// chosen other label.
pub fn simulate_answer<R: Rng + ?Sized>(
    accuracy: f64,
    truth: &str,
    domain: &AnswerDomain,
    rng: &mut R,
) -> String {
    simulate_answer_skewed(accuracy, truth, domain, 0.0, rng)
}

/// Like [`simulate_answer`], but the `i`-th wrong label in domain order is
/// chosen with weight `exp(-skew * i)`.
pub fn simulate_answer_skewed<R: Rng + ?Sized>(
    accuracy: f64,
    truth: &str,
    domain: &AnswerDomain,
    skew: f64,
    rng: &mut R,
) -> String {
    let wrong: Vec<&String> = domain.labels().iter().filter(|l| *l != truth).collect();
    if wrong.is_empty() || rng.random::<f64>() < accuracy {
        return truth.to_owned();
    }
    let pick = if skew == 0.0 {
        rng.random_range(0..wrong.len())
    } else {
        WeightedIndex::new((0..wrong.len()).map(|i| (-skew * i as f64).exp()))
            .expect("positive finite weights")
            .sample(rng)
    };
    wrong[pick].clone()
}

/// `n` distinct workers drawn uniformly from `pool`, answering in a uniformly
/// random order.
pub fn draw_votes<R: Rng + ?Sized>(
    pool: &[WorkerProfile],
    truth: &str,
    n: usize,
    domain: &AnswerDomain,
    skew: f64,
    rng: &mut R,
) -> Result<Vec<Vote>> {
    if n > pool.len() {
        return Err(Error::PoolTooSmall {
            required: n,
            available: pool.len(),
        });
    }
    let mut picked = index::sample(rng, pool.len(), n).into_vec();
    picked.shuffle(rng);
    Ok(picked
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let worker = &pool[w];
            let answer = simulate_answer_skewed(worker.accuracy(), truth, domain, skew, rng);
            let mut vote = Vote::new(worker.worker_id.clone(), answer);
            vote.arrival_index = i;
            vote
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub seed: u64,
    pub pool_size: usize,
    pub accuracy_dist: AccuracyDistribution,
    pub domain: AnswerDomain,
    pub num_questions: usize,
    pub target_accuracy: f64,
    /// Strategy whose consumption is charged in `total_cost`.
    pub strategy: Strategy,
    pub sampling: SamplingConfig,
    pub cost: CostModel,
    pub trials: usize,
    /// Fixed workers per question instead of the predicted count.
    pub replication: Option<usize>,
    /// Give the engine the workers' true accuracies instead of golden
    /// estimates.
    pub oracle_accuracies: bool,
    /// Calibration HITs each worker answers before the run.
    pub calibration_rounds: usize,
    /// Workers sharing one calibration HIT.
    pub calibration_group: usize,
    /// Non-uniformity of wrong answers; 0 is uniform.
    pub wrong_answer_skew: f64,
    pub verification: VerificationConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            pool_size: 500,
            accuracy_dist: AccuracyDistribution::default(),
            domain: AnswerDomain::fixed(["pos", "neu", "neg"]).expect("valid labels"),
            num_questions: 10_000,
            target_accuracy: 0.9,
            strategy: Strategy::None,
            sampling: SamplingConfig::default(),
            cost: CostModel {
                worker_fee: 0.01,
                platform_fee: 0.005,
            },
            trials: 1,
            replication: None,
            oracle_accuracies: false,
            calibration_rounds: 3,
            calibration_group: 10,
            wrong_answer_skew: 0.0,
            verification: VerificationConfig::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidScenario(msg.to_owned()));
        self.accuracy_dist.validate()?;
        self.sampling.validate()?;
        self.verification.validate()?;
        CostModel::new(self.cost.worker_fee, self.cost.platform_fee)?;
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.pool_size == 0 {
            return bad("pool_size must be at least 1");
        }
        if self.num_questions == 0 {
            return bad("num_questions must be at least 1");
        }
        if !(self.target_accuracy > 0.0 && self.target_accuracy < 1.0) {
            return Err(Error::InvalidAccuracyTarget(self.target_accuracy));
        }
        if self.domain.labels().len() < 2 {
            return bad("the domain needs at least two labels to simulate answers");
        }
        if let Some(n) = self.replication {
            if n % 2 == 0 {
                return Err(Error::EvenWorkerCount(n));
            }
        }
        if !self.oracle_accuracies && self.calibration_rounds == 0 {
            return bad("calibration_rounds must be positive unless oracle_accuracies is set");
        }
        if self.calibration_group == 0 {
            return bad("calibration_group must be at least 1");
        }
        if !(self.wrong_answer_skew >= 0.0 && self.wrong_answer_skew.is_finite()) {
            return bad("wrong_answer_skew must be a finite non-negative number");
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(json)?;
        s.validate()?;
        Ok(s)
    }
}

/// Golden answers collected during calibration, one entry per golden
/// question of one HIT.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRecord {
    pub hit_id: String,
    pub question_id: String,
    pub ground_truth: String,
    pub answers: Vec<Vote>,
}

/// Profiles estimated from golden questions at each sampling rate.
///
/// Every round, workers are split into groups of `group` and each group
/// answers a HIT of `batch_size` questions with known truths. A random
/// priority order over the HIT decides which questions count as golden: at
/// rate `j` the first `ceil(j * batch_size)` of that order are scored, so a
/// lower rate always scores a subset of the answers seen at a higher one.
/// Golden answers at `rates[0]` are appended to `sink` when given.
#[allow(clippy::too_many_arguments)]
pub fn calibrate(
    pool: &[WorkerProfile],
    domain: &AnswerDomain,
    sampling: &SamplingConfig,
    rates: &[f64],
    rounds: usize,
    group: usize,
    skew: f64,
    seed: u64,
    trial: u64,
    mut sink: Option<&mut Vec<GoldenRecord>>,
) -> Result<Vec<ProfileStore>> {
    for &rate in rates {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::OutOfRange {
                name: "sampling rate",
                range: "(0, 1]",
                value: rate,
            });
        }
    }
    let size = sampling.batch_size;
    let base: ProfileStore = pool
        .iter()
        .map(|p| WorkerProfile::new(p.worker_id.clone(), 0.5))
        .collect();
    let mut stores = vec![base; rates.len()];
    let labels = domain.labels();

    for round in 0..rounds {
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.shuffle(&mut stream(
            seed,
            trial,
            tag::CALIBRATION_ORDER,
            round as u64,
        ));
        for (h, members) in order.chunks(group).enumerate() {
            let mut rng = stream(
                seed,
                trial,
                tag::CALIBRATION,
                ((round as u64) << 32) | h as u64,
            );
            let hit_id = format!("cal-r{round}-h{h}");
            let truths: Vec<&String> = (0..size)
                .map(|_| &labels[rng.random_range(0..labels.len())])
                .collect();
            let priority = index::sample(&mut rng, size, size).into_vec();
            let ids: Vec<String> = (0..size).map(|i| format!("{hit_id}-q{i:03}")).collect();

            let mut sheet = AnswerSheet::new();
            for &w in members {
                let worker = &pool[w];
                for (i, truth) in truths.iter().enumerate() {
                    let answer =
                        simulate_answer_skewed(worker.accuracy(), truth, domain, skew, &mut rng);
                    sheet.insert((worker.worker_id.clone(), ids[i].clone()), answer);
                }
            }

            for (r, &rate) in rates.iter().enumerate() {
                let slots = golden_slots(rate, size);
                let mut golden = vec![false; size];
                for &i in &priority[..slots] {
                    golden[i] = true;
                }
                let questions = (0..size)
                    .map(|i| {
                        if golden[i] {
                            Question::golden(ids[i].clone(), domain.clone(), truths[i].clone())
                        } else {
                            Ok(Question::new(ids[i].clone(), domain.clone()))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let hit = HitBatch::from_questions(questions);
                for (worker, t) in tally_goldens(&hit, &sheet)? {
                    stores[r].record(&worker, t.correct, t.total, sampling.smoothing)?;
                }
                if r == 0 {
                    if let Some(sink) = sink.as_deref_mut() {
                        for q in hit.goldens() {
                            let answers = members
                                .iter()
                                .enumerate()
                                .map(|(k, &w)| {
                                    let id = &pool[w].worker_id;
                                    let mut v = Vote::new(
                                        id.clone(),
                                        sheet[&(id.clone(), q.question_id.clone())].clone(),
                                    );
                                    v.arrival_index = k;
                                    v
                                })
                                .collect();
                            sink.push(GoldenRecord {
                                hit_id: hit_id.clone(),
                                question_id: q.question_id.clone(),
                                ground_truth: q.ground_truth.clone().expect("golden"),
                                answers,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(stores)
}

/// Where a termination strategy would have stopped on one vote stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStop {
    pub strategy: Strategy,
    pub votes_consumed: usize,
    pub best: String,
}

/// Replays `votes` once and reports, for every strategy in
/// [`Strategy::ALL`] order, how many votes it would consume and what it
/// would answer. Equivalent to one online run per strategy.
pub fn replay_strategies<P: ProfileSource + ?Sized>(
    question: &Question,
    votes: &[Vote],
    profiles: &P,
    mu_remaining: f64,
    cfg: &VerificationConfig,
) -> Result<Vec<StrategyStop>> {
    let mut session = OnlineSession::new(
        question.question_id.clone(),
        question.domain.clone(),
        OnlineSettings {
            n_total: votes.len(),
            mu_remaining,
            strategy: Strategy::None,
            cfg: *cfg,
        },
    )?;
    let mut stops: Vec<Option<StrategyStop>> = vec![None; Strategy::ALL.len()];
    let mut best = None;
    for vote in votes {
        let a = profiles
            .accuracy_of(&vote.worker_id)
            .ok_or_else(|| Error::MissingProfile(vote.worker_id.clone()))?;
        let table =
            session.push_answer(vote.clone(), &WorkerProfile::new(vote.worker_id.clone(), a))?;
        if let Some(eval) = session.last_evaluation() {
            for (slot, &s) in stops.iter_mut().zip(Strategy::ALL.iter()) {
                if slot.is_none() && s.should_stop(eval) {
                    *slot = Some(StrategyStop {
                        strategy: s,
                        votes_consumed: session.votes_received(),
                        best: table.best.clone(),
                    });
                }
            }
        }
        best = Some(table.best);
    }
    debug_assert!(votes.is_empty() || session.state() == SessionState::Exhausted);
    let best = best.ok_or(Error::NoVotesYet)?;
    Ok(stops
        .into_iter()
        .zip(Strategy::ALL)
        .map(|(stop, s)| {
            stop.unwrap_or_else(|| StrategyStop {
                strategy: s,
                votes_consumed: votes.len(),
                best: best.clone(),
            })
        })
        .collect())
}

/// One simulated question with the decisions of every rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionRun {
    pub question_id: String,
    pub ground_truth: String,
    /// All planned votes in arrival order.
    pub votes: Vec<Vote>,
    pub stops: Vec<StrategyStop>,
    pub half_voting: Option<String>,
    pub majority_voting: Option<String>,
}

impl QuestionRun {
    pub fn stop(&self, strategy: Strategy) -> &StrategyStop {
        self.stops
            .iter()
            .find(|s| s.strategy == strategy)
            .expect("every strategy is replayed")
    }
}

/// Everything fixed for one trial before questions are simulated.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub trial: u64,
    pub pool: Vec<WorkerProfile>,
    /// What the engine believes about the workers.
    pub profiles: ProfileStore,
    pub mu_estimate: f64,
    pub mu_true: f64,
    pub n: usize,
    pub golden_records: Vec<GoldenRecord>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    crate::prediction::compensated_mean(xs)
}

/// Draws the pool, calibrates profiles and plans the worker count.
pub fn prepare_trial(scenario: &Scenario, trial: u64, keep_goldens: bool) -> Result<TrialSetup> {
    let pool = draw_pool_with(
        &scenario.accuracy_dist,
        scenario.pool_size,
        &mut stream(scenario.seed, trial, tag::POOL, 0),
    )?;
    let mu_true = mean(pool.iter().map(WorkerProfile::accuracy));
    let mut golden_records = Vec::new();
    let profiles = if scenario.oracle_accuracies {
        pool.iter().cloned().collect()
    } else if scenario.sampling.alpha == 0.0 {
        pool.iter()
            .map(|p| WorkerProfile::new(p.worker_id.clone(), 0.5))
            .collect()
    } else {
        calibrate(
            &pool,
            &scenario.domain,
            &scenario.sampling,
            &[scenario.sampling.alpha],
            scenario.calibration_rounds,
            scenario.calibration_group,
            scenario.wrong_answer_skew,
            scenario.seed,
            trial,
            keep_goldens.then_some(&mut golden_records),
        )?
        .pop()
        .expect("one rate requested")
    };
    let mu_estimate = profiles.mean_accuracy().expect("pool is non-empty");
    let n = match scenario.replication {
        Some(n) => n,
        None => refined_worker_count(scenario.target_accuracy, mu_estimate)?.refined_n,
    };
    if n > scenario.pool_size {
        return Err(Error::PoolTooSmall {
            required: n,
            available: scenario.pool_size,
        });
    }
    Ok(TrialSetup {
        trial,
        pool,
        profiles,
        mu_estimate,
        mu_true,
        n,
        golden_records,
    })
}

pub fn question_id(trial: u64, q: usize) -> String {
    format!("t{trial}-q{q:06}")
}

/// Simulates question `q` of a trial: truth, votes, and every decision rule.
pub fn simulate_question(scenario: &Scenario, setup: &TrialSetup, q: usize) -> Result<QuestionRun> {
    let mut rng = stream(scenario.seed, setup.trial, tag::QUESTION, q as u64);
    let labels = scenario.domain.labels();
    let truth = labels[rng.random_range(0..labels.len())].clone();
    let votes = draw_votes(
        &setup.pool,
        &truth,
        setup.n,
        &scenario.domain,
        scenario.wrong_answer_skew,
        &mut rng,
    )?;
    let qid = question_id(setup.trial, q);
    let question = Question::new(qid.clone(), scenario.domain.clone());
    let stops = replay_strategies(
        &question,
        &votes,
        &setup.profiles,
        setup.mu_estimate,
        &scenario.verification,
    )?;
    let obs = Observation::from_votes(qid.clone(), votes.clone(), setup.n)?;
    Ok(QuestionRun {
        question_id: qid,
        ground_truth: truth,
        half_voting: half_voting(&obs)?,
        majority_voting: majority_voting(&obs)?,
        votes,
        stops,
    })
}

/// One HIT as charged: every drawn worker, and the fee for the votes
/// consumed under `strategy`.
#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    pub run: QuestionRun,
    pub workers_drawn: Vec<String>,
    pub votes_consumed: usize,
    pub cost: f64,
}

pub fn run_hit(scenario: &Scenario, setup: &TrialSetup, q: usize) -> Result<HitRecord> {
    let run = simulate_question(scenario, setup, q)?;
    let votes_consumed = run.stop(scenario.strategy).votes_consumed;
    Ok(HitRecord {
        workers_drawn: run.votes.iter().map(|v| v.worker_id.clone()).collect(),
        votes_consumed,
        cost: scenario.cost.hit_cost(votes_consumed),
        run,
    })
}

/// Simulates every question of a trial in parallel, returned in question
/// order.
pub fn simulate_trial(scenario: &Scenario, setup: &TrialSetup) -> Result<Vec<QuestionRun>> {
    (0..scenario.num_questions)
        .into_par_iter()
        .map(|q| simulate_question(scenario, setup, q))
        .collect()
}

/// Decision rule a metrics row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Verification,
    HalfVoting,
    MajorityVoting,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Verification => "verification",
            Method::HalfVoting => "half_voting",
            Method::MajorityVoting => "majority_voting",
        }
    }
}

/// Running counts for one metrics row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub questions: u64,
    pub correct: u64,
    pub decided: u64,
    pub consumed: u64,
    pub planned: u64,
}

impl Tally {
    pub fn add(&mut self, answer: Option<&str>, truth: &str, consumed: usize, planned: usize) {
        self.questions += 1;
        if let Some(a) = answer {
            self.decided += 1;
            if a == truth {
                self.correct += 1;
            }
        }
        self.consumed += consumed as u64;
        self.planned += planned as u64;
    }

    pub fn merge(&mut self, other: &Tally) {
        self.questions += other.questions;
        self.correct += other.correct;
        self.decided += other.decided;
        self.consumed += other.consumed;
        self.planned += other.planned;
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.questions as f64
    }

    /// Binomial standard error of [`Tally::accuracy`].
    pub fn accuracy_stderr(&self) -> f64 {
        let p = self.accuracy();
        (p * (1.0 - p) / self.questions as f64).sqrt()
    }

    pub fn no_answer_rate(&self) -> f64 {
        1.0 - self.decided as f64 / self.questions as f64
    }

    pub fn mean_votes(&self) -> f64 {
        self.consumed as f64 / self.questions as f64
    }

    pub fn worker_savings(&self) -> f64 {
        1.0 - self.consumed as f64 / self.planned as f64
    }
}

/// Per-row tallies, keyed by decision rule and termination strategy.
pub type Tallies = BTreeMap<(Method, Strategy), Tally>;

/// Adds one question's outcomes to the tallies.
pub fn tally_question(tallies: &mut Tallies, run: &QuestionRun) {
    let n = run.votes.len();
    let truth = run.ground_truth.as_str();
    for stop in &run.stops {
        tallies
            .entry((Method::Verification, stop.strategy))
            .or_default()
            .add(Some(&stop.best), truth, stop.votes_consumed, n);
    }
    tallies
        .entry((Method::HalfVoting, Strategy::None))
        .or_default()
        .add(run.half_voting.as_deref(), truth, n, n);
    tallies
        .entry((Method::MajorityVoting, Strategy::None))
        .or_default()
        .add(run.majority_voting.as_deref(), truth, n, n);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMetrics {
    pub method: Method,
    pub strategy: Strategy,
    pub accuracy: f64,
    pub accuracy_stderr: f64,
    pub no_answer_rate: f64,
    pub mean_votes: f64,
    pub worker_savings: f64,
    pub total_cost: f64,
}

impl StrategyMetrics {
    pub fn from_tally(method: Method, strategy: Strategy, t: &Tally, cost: &CostModel) -> Self {
        Self {
            method,
            strategy,
            accuracy: t.accuracy(),
            accuracy_stderr: t.accuracy_stderr(),
            no_answer_rate: t.no_answer_rate(),
            mean_votes: t.mean_votes(),
            worker_savings: t.worker_savings(),
            total_cost: cost.per_worker() * t.consumed as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetrics {
    pub seed: u64,
    pub trials: usize,
    pub questions_per_trial: usize,
    pub target_accuracy: f64,
    /// Mean planned workers per question over trials.
    pub planned_workers: f64,
    /// Mean of the engine's accuracy estimates.
    pub mu_estimate: f64,
    /// Mean of the pool's true accuracies.
    pub mu_true: f64,
    pub strategy: Strategy,
    /// Cost of the votes consumed under `strategy`.
    pub total_cost: f64,
    pub rows: Vec<StrategyMetrics>,
}

impl ExperimentMetrics {
    pub fn row(&self, method: Method, strategy: Strategy) -> Option<&StrategyMetrics> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.strategy == strategy)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One CSV row per decision rule and strategy.
    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row {
            seed: u64,
            trials: usize,
            questions_per_trial: usize,
            target_accuracy: f64,
            planned_workers: f64,
            mu_estimate: f64,
            mu_true: f64,
            method: Method,
            strategy: Strategy,
            accuracy: f64,
            accuracy_stderr: f64,
            no_answer_rate: f64,
            mean_votes: f64,
            worker_savings: f64,
            total_cost: f64,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(Row {
                seed: self.seed,
                trials: self.trials,
                questions_per_trial: self.questions_per_trial,
                target_accuracy: self.target_accuracy,
                planned_workers: self.planned_workers,
                mu_estimate: self.mu_estimate,
                mu_true: self.mu_true,
                method: r.method,
                strategy: r.strategy,
                accuracy: r.accuracy,
                accuracy_stderr: r.accuracy_stderr,
                no_answer_rate: r.no_answer_rate,
                mean_votes: r.mean_votes,
                worker_savings: r.worker_savings,
                total_cost: r.total_cost,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Runs every trial of a scenario and aggregates achieved accuracy, no-answer
/// rates, consumption and cost per decision rule.
pub fn run_experiment(scenario: &Scenario) -> Result<ExperimentMetrics> {
    scenario.validate()?;
    let mut tallies = Tallies::new();
    let (mut planned, mut mu_est, mut mu_true) = (0.0, 0.0, 0.0);
    for trial in 0..scenario.trials as u64 {
        let setup = prepare_trial(scenario, trial, false)?;
        for run in simulate_trial(scenario, &setup)? {
            tally_question(&mut tallies, &run);
        }
        planned += setup.n as f64;
        mu_est += setup.mu_estimate;
        mu_true += setup.mu_true;
    }
    let trials = scenario.trials as f64;
    let rows: Vec<StrategyMetrics> = tallies
        .iter()
        .map(|(&(m, s), t)| StrategyMetrics::from_tally(m, s, t, &scenario.cost))
        .collect();
    let total_cost = rows
        .iter()
        .find(|r| r.method == Method::Verification && r.strategy == scenario.strategy)
        .map(|r| r.total_cost)
        .unwrap_or(0.0);
    Ok(ExperimentMetrics {
        seed: scenario.seed,
        trials: scenario.trials,
        questions_per_trial: scenario.num_questions,
        target_accuracy: scenario.target_accuracy,
        planned_workers: planned / trials,
        mu_estimate: mu_est / trials,
        mu_true: mu_true / trials,
        strategy: scenario.strategy,
        total_cost,
        rows,
    })
}
