//! Worker accuracy estimation from golden questions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::WorkerProfile;
use crate::error::{Error, Result};
use crate::hit::HitBatch;
use crate::prediction::compensated_mean;
use crate::verification::ProfileSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Fraction of each HIT made of golden questions.
    pub alpha: f64,
    /// Questions per HIT.
    pub batch_size: usize,
    /// Pseudo-count added to both correct and incorrect golden tallies.
    pub smoothing: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            batch_size: 100,
            smoothing: 1.0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::OutOfRange {
                name: "alpha",
                range: "[0, 1)",
                value: self.alpha,
            });
        }
        if self.batch_size == 0 {
            return Err(Error::OutOfRange {
                name: "batch_size",
                range: "[1, inf)",
                value: 0.0,
            });
        }
        if !(self.smoothing >= 0.0) {
            return Err(Error::OutOfRange {
                name: "smoothing",
                range: "[0, inf)",
                value: self.smoothing,
            });
        }
        Ok(())
    }
}

/// Answers keyed by `(worker_id, question_id)`.
pub type AnswerSheet = BTreeMap<(String, String), String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoldenTally {
    pub correct: u64,
    pub total: u64,
}

impl GoldenTally {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Correct/total golden counts for every worker who answered in the HIT.
pub fn tally_goldens(
    hit: &HitBatch,
    answers: &AnswerSheet,
) -> Result<BTreeMap<String, GoldenTally>> {
    if hit.golden_count == 0 {
        return Err(Error::NoGoldens);
    }
    let workers: BTreeSet<&str> = answers.keys().map(|(w, _)| w.as_str()).collect();
    let mut tallies: BTreeMap<String, GoldenTally> = workers
        .iter()
        .map(|w| ((*w).to_owned(), GoldenTally::default()))
        .collect();
    for q in hit.goldens() {
        let truth = q
            .ground_truth
            .as_deref()
            .expect("golden questions carry ground truth");
        for (worker, tally) in tallies.iter_mut() {
            let key = (worker.clone(), q.question_id.clone());
            let answer = answers.get(&key).ok_or_else(|| Error::MissingAnswer {
                worker_id: worker.clone(),
                question_id: q.question_id.clone(),
            })?;
            tally.total += 1;
            if answer == truth {
                tally.correct += 1;
            }
        }
    }
    Ok(tallies)
}

/// Fraction of golden questions each worker got right in this HIT.
pub fn score_goldens(hit: &HitBatch, answers: &AnswerSheet) -> Result<BTreeMap<String, f64>> {
    Ok(tally_goldens(hit, answers)?
        .into_iter()
        .map(|(w, t)| (w, t.accuracy()))
        .collect())
}

/// Folds a new golden tally into a profile. The accuracy becomes the
/// smoothed cumulative rate `(correct + s) / (total + 2s)`.
pub fn update_profile(
    profile: &WorkerProfile,
    correct: u64,
    total: u64,
    smoothing: f64,
) -> Result<WorkerProfile> {
    if correct > total {
        return Err(Error::InvalidTally { correct, total });
    }
    let golden_correct = profile.golden_correct + correct;
    let golden_total = profile.golden_total + total;
    let denom = golden_total as f64 + 2.0 * smoothing;
    let accuracy = if denom > 0.0 {
        (golden_correct as f64 + smoothing) / denom
    } else {
        0.5
    };
    WorkerProfile::new(profile.worker_id.clone(), accuracy)
        .with_tallies(golden_correct, golden_total)
}

/// Mean estimated accuracy and mean absolute deviation from a reference
/// estimate over the same workers.
pub fn estimation_error(
    estimates: &BTreeMap<String, f64>,
    reference: &BTreeMap<String, f64>,
) -> Result<(f64, f64)> {
    if estimates.is_empty() || !estimates.keys().eq(reference.keys()) {
        return Err(Error::WorkerSetMismatch);
    }
    let n = estimates.len() as f64;
    let mean = estimates.values().sum::<f64>() / n;
    let err = estimates
        .values()
        .zip(reference.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n;
    Ok((mean, err))
}

#[derive(Clone, Serialize, Deserialize)]
struct ProfileRecord {
    accuracy: f64,
    golden_correct: u64,
    golden_total: u64,
}

/// Cumulative worker profiles, persisted as a JSON object keyed by worker id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "BTreeMap<String, ProfileRecord>",
    try_from = "BTreeMap<String, ProfileRecord>"
)]
pub struct ProfileStore {
    profiles: BTreeMap<String, WorkerProfile>,
}

impl ProfileStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, worker_id: &str) -> Option<&WorkerProfile> {
        self.profiles.get(worker_id)
    }

    pub fn insert(&mut self, profile: WorkerProfile) {
        self.profiles.insert(profile.worker_id.clone(), profile);
    }

    /// Adds a golden tally to a worker, creating an uninformed profile for
    /// workers seen for the first time.
    pub fn record(
        &mut self,
        worker_id: &str,
        correct: u64,
        total: u64,
        smoothing: f64,
    ) -> Result<&WorkerProfile> {
        let current = self
            .profiles
            .get(worker_id)
            .cloned()
            .unwrap_or_else(|| WorkerProfile::new(worker_id, 0.5));
        let updated = update_profile(&current, correct, total, smoothing)?;
        self.profiles.insert(worker_id.to_owned(), updated);
        Ok(&self.profiles[worker_id])
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WorkerProfile> {
        self.profiles.values()
    }

    pub fn accuracies(&self) -> BTreeMap<String, f64> {
        self.profiles
            .iter()
            .map(|(id, p)| (id.clone(), p.accuracy()))
            .collect()
    }

    pub fn mean_accuracy(&self) -> Option<f64> {
        (!self.is_empty())
            .then(|| compensated_mean(self.profiles.values().map(WorkerProfile::accuracy)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

impl From<ProfileStore> for BTreeMap<String, ProfileRecord> {
    fn from(store: ProfileStore) -> Self {
        store
            .profiles
            .into_iter()
            .map(|(id, p)| {
                let record = ProfileRecord {
                    accuracy: p.accuracy(),
                    golden_correct: p.golden_correct,
                    golden_total: p.golden_total,
                };
                (id, record)
            })
            .collect()
    }
}

impl TryFrom<BTreeMap<String, ProfileRecord>> for ProfileStore {
    type Error = Error;

    fn try_from(records: BTreeMap<String, ProfileRecord>) -> Result<Self> {
        let mut store = Self::new();
        for (id, r) in records {
            store.insert(
                WorkerProfile::new(id, r.accuracy)
                    .with_tallies(r.golden_correct, r.golden_total)?,
            );
        }
        Ok(store)
    }
}

impl ProfileSource for ProfileStore {
    fn accuracy_of(&self, worker_id: &str) -> Option<f64> {
        self.get(worker_id).map(WorkerProfile::accuracy)
    }
}

impl FromIterator<WorkerProfile> for ProfileStore {
    fn from_iter<T: IntoIterator<Item = WorkerProfile>>(iter: T) -> Self {
        let mut store = Self::new();
        for p in iter {
            store.insert(p);
        }
        store
    }
}
