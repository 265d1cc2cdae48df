//! Answer verification for crowdsourced questions: how many workers to ask,
//! how much to trust what they say, when to stop asking, and how to learn
//! worker accuracy from questions with known answers.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod experiments;
pub mod hit;
pub mod online;
pub mod prediction;
pub mod sampling;
pub mod simulator;
pub mod verification;

pub use domain::{AnswerDomain, DomainMode, Observation, QuerySpec, Question, Vote, WorkerProfile};
pub use error::{Error, Result};
pub use hit::{build_hit_batch, CostModel, HitBatch};
pub use online::{OnlineSession, OnlineSettings, SessionState, Strategy, TerminationEvaluation};
pub use prediction::{
    conservative_worker_count, exact_majority_prob, expected_majority_prob, refined_worker_count,
    PredictionResult,
};
pub use sampling::{ProfileStore, SamplingConfig};
pub use verification::{
    estimate_domain_size, half_voting, majority_voting, verify, worker_confidence, ConfidenceTable,
    ProfileSource, VerificationConfig, Verifier,
};
