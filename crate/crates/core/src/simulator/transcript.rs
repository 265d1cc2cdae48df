use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{AnswerDomain, Observation, Vote};
use crate::error::{Error, Result};
use crate::sampling::ProfileStore;

use super::{GoldenRecord, HitRecord};

/// One line of an NDJSON transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TranscriptRecord {
    /// Answers to one golden question of a calibration HIT.
    Golden {
        hit_id: String,
        question_id: String,
        ground_truth: String,
        answers: Vec<Vote>,
    },
    /// One replicated question: every drawn worker's vote in arrival order
    /// and what was charged.
    Question {
        question_id: String,
        ground_truth: String,
        workers_drawn: Vec<String>,
        votes: Vec<Vote>,
        votes_consumed: usize,
        cost: f64,
    },
}

impl From<&GoldenRecord> for TranscriptRecord {
    fn from(g: &GoldenRecord) -> Self {
        TranscriptRecord::Golden {
            hit_id: g.hit_id.clone(),
            question_id: g.question_id.clone(),
            ground_truth: g.ground_truth.clone(),
            answers: g.answers.clone(),
        }
    }
}

impl From<&HitRecord> for TranscriptRecord {
    fn from(h: &HitRecord) -> Self {
        TranscriptRecord::Question {
            question_id: h.run.question_id.clone(),
            ground_truth: h.run.ground_truth.clone(),
            workers_drawn: h.workers_drawn.clone(),
            votes: h.run.votes.clone(),
            votes_consumed: h.votes_consumed,
            cost: h.cost,
        }
    }
}

/// A self-contained input for verifying one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDocument {
    pub domain: AnswerDomain,
    pub observation: Observation,
    pub profiles: ProfileStore,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
}

impl VerifyDocument {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

pub fn write_transcript(path: &Path, records: &[TranscriptRecord]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an NDJSON transcript, skipping blank lines.
pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok(records)
}

/// Re-scores every golden record in the `*.ndjson` files of `dir`.
pub fn rebuild_profiles(dir: &Path, smoothing: f64) -> Result<ProfileStore> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "ndjson"));
    paths.sort();

    let mut tallies: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for path in &paths {
        for record in read_transcript(path)? {
            if let TranscriptRecord::Golden {
                ground_truth,
                answers,
                ..
            } = record
            {
                for v in answers {
                    let t = tallies.entry(v.worker_id).or_default();
                    t.1 += 1;
                    t.0 += u64::from(v.answer == ground_truth);
                }
            }
        }
    }
    if tallies.is_empty() {
        return Err(Error::NoGoldens);
    }
    let mut store = ProfileStore::new();
    for (worker, (correct, total)) in tallies {
        store.record(&worker, correct, total, smoothing)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{prepare_trial, run_hit, Scenario};

    #[test]
    fn transcript_round_trip_rebuilds_profiles() {
        let scenario = Scenario {
            pool_size: 40,
            num_questions: 5,
            ..Scenario::default()
        };
        let setup = prepare_trial(&scenario, 0, true).unwrap();
        let mut records: Vec<TranscriptRecord> =
            setup.golden_records.iter().map(Into::into).collect();
        for q in 0..5 {
            records.push((&run_hit(&scenario, &setup, q).unwrap()).into());
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ndjson");
        write_transcript(&path, &records).unwrap();
        assert_eq!(read_transcript(&path).unwrap(), records);

        let rebuilt = rebuild_profiles(dir.path(), scenario.sampling.smoothing).unwrap();
        assert_eq!(rebuilt, setup.profiles);
    }

    #[test]
    fn question_arrival_is_a_permutation() {
        let scenario = Scenario {
            pool_size: 40,
            num_questions: 3,
            replication: Some(7),
            ..Scenario::default()
        };
        let setup = prepare_trial(&scenario, 0, false).unwrap();
        let hit = run_hit(&scenario, &setup, 1).unwrap();
        let mut idx: Vec<_> = hit.run.votes.iter().map(|v| v.arrival_index).collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn empty_directory_has_no_goldens() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            rebuild_profiles(dir.path(), 1.0),
            Err(Error::NoGoldens)
        ));
    }
}
