//! HIT assembly and the per-worker payment model.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{QuerySpec, Question};
use crate::error::{Error, Result};

/// Fees charged per worker per HIT: the worker's pay and the platform's cut.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostModel {
    pub worker_fee: f64,
    pub platform_fee: f64,
}

impl CostModel {
    pub fn new(worker_fee: f64, platform_fee: f64) -> Result<Self> {
        for (name, fee) in [("worker_fee", worker_fee), ("platform_fee", platform_fee)] {
            if !(fee >= 0.0) || !fee.is_finite() {
                return Err(Error::OutOfRange {
                    name,
                    range: "[0, inf)",
                    value: fee,
                });
            }
        }
        Ok(Self {
            worker_fee,
            platform_fee,
        })
    }

    pub fn per_worker(&self) -> f64 {
        self.worker_fee + self.platform_fee
    }

    /// `(m_c + m_s) * n`.
    pub fn hit_cost(&self, n: usize) -> f64 {
        self.per_worker() * n as f64
    }

    /// `(m_c + m_s) * w * K * n`: the cost of running a query over its whole
    /// window when every item is replicated to `n` workers.
    pub fn query_cost(&self, spec: &QuerySpec, n: usize) -> f64 {
        self.per_worker() * spec.window * spec.items_per_unit as f64 * n as f64
    }
}

/// An ordered list of questions published as one unit to `replication`
/// workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitBatch {
    pub questions: Vec<Question>,
    pub golden_count: usize,
    pub replication: usize,
    pub per_hit_cost: f64,
}

impl HitBatch {
    /// Wraps an already ordered question list. Replication starts at 1 with
    /// zero cost; use [`HitBatch::assign`] to staff it.
    pub fn from_questions(questions: Vec<Question>) -> Self {
        let golden_count = questions.iter().filter(|q| q.is_golden).count();
        Self {
            questions,
            golden_count,
            replication: 1,
            per_hit_cost: 0.0,
        }
    }

    /// Sets the replication count and prices the HIT accordingly.
    pub fn assign(mut self, replication: usize, cost: &CostModel) -> Result<Self> {
        if replication == 0 || replication.is_multiple_of(2) {
            return Err(Error::EvenWorkerCount(replication));
        }
        self.replication = replication;
        self.per_hit_cost = cost.hit_cost(replication);
        Ok(self)
    }

    pub fn goldens(&self) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(|q| q.is_golden)
    }
}

/// Number of golden slots in a HIT of `size` questions at golden fraction
/// `alpha`, i.e. `ceil(alpha * size)`.
pub fn golden_slots(alpha: f64, size: usize) -> usize {
    // 0.7 * 10 is 7.000000000000001 in binary floating point
    (alpha * size as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Assembles a HIT of exactly `size` questions, `ceil(alpha * size)` of them
/// drawn from `golden_pool` and scattered over uniformly random positions.
/// The remaining slots take the leading `new_questions` in their given order.
pub fn build_hit_batch(
    new_questions: &[Question],
    golden_pool: &[Question],
    alpha: f64,
    size: usize,
    seed: u64,
) -> Result<HitBatch> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            name: "alpha",
            range: "[0, 1)",
            value: alpha,
        });
    }
    if size == 0 {
        return Err(Error::OutOfRange {
            name: "batch size",
            range: "[1, inf)",
            value: 0.0,
        });
    }
    let goldens = golden_slots(alpha, size);
    if golden_pool.len() < goldens {
        return Err(Error::InsufficientGoldens {
            required: goldens,
            available: golden_pool.len(),
        });
    }
    let fresh = size - goldens;
    if new_questions.len() < fresh {
        return Err(Error::InsufficientQuestions {
            required: fresh,
            available: new_questions.len(),
        });
    }
    if let Some(q) = golden_pool.iter().find(|q| !q.is_golden) {
        return Err(Error::InvalidQuestion {
            question_id: q.question_id.clone(),
            reason: "golden pool entry is not marked golden".into(),
        });
    }
    if let Some(q) = new_questions[..fresh].iter().find(|q| q.is_golden) {
        return Err(Error::InvalidQuestion {
            question_id: q.question_id.clone(),
            reason: "new question is marked golden".into(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, golden_pool.len(), goldens);
    let mut positions = index::sample(&mut rng, size, goldens).into_vec();
    positions.sort_unstable();

    let mut slots: Vec<Option<Question>> = vec![None; size];
    for (pos, pool_idx) in positions.iter().zip(picked.iter()) {
        slots[*pos] = Some(golden_pool[pool_idx].clone());
    }
    let mut fresh_iter = new_questions.iter();
    let questions = slots
        .into_iter()
        .map(|slot| match slot {
            Some(q) => q,
            None => fresh_iter
                .next()
                .expect("enough new questions checked above")
                .clone(),
        })
        .collect();
    Ok(HitBatch::from_questions(questions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AnswerDomain;

    fn domain() -> AnswerDomain {
        AnswerDomain::fixed(["pos", "neu", "neg"]).unwrap()
    }

    fn fresh(n: usize) -> Vec<Question> {
        (0..n)
            .map(|i| Question::new(format!("q{i}"), domain()))
            .collect()
    }

    fn goldens(n: usize) -> Vec<Question> {
        (0..n)
            .map(|i| Question::golden(format!("g{i}"), domain(), "pos").unwrap())
            .collect()
    }

    #[test]
    fn default_sampling_layout() {
        let batch = build_hit_batch(&fresh(80), &goldens(20), 0.2, 100, 7).unwrap();
        assert_eq!(batch.questions.len(), 100);
        assert_eq!(batch.golden_count, 20);
    }

    #[test]
    fn no_injection() {
        let batch = build_hit_batch(&fresh(5), &[], 0.0, 5, 1).unwrap();
        assert_eq!(batch.golden_count, 0);
        let ids: Vec<_> = batch
            .questions
            .iter()
            .map(|q| q.question_id.as_str())
            .collect();
        assert_eq!(ids, ["q0", "q1", "q2", "q3", "q4"]);
    }

    #[test]
    fn short_golden_pool() {
        assert!(matches!(
            build_hit_batch(&fresh(4), &goldens(1), 0.5, 4, 1),
            Err(Error::InsufficientGoldens {
                required: 2,
                available: 1
            })
        ));
        assert!(matches!(
            build_hit_batch(&fresh(1), &goldens(2), 0.5, 4, 1),
            Err(Error::InsufficientQuestions {
                required: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn deterministic_and_order_preserving() {
        let a = build_hit_batch(&fresh(40), &goldens(30), 0.3, 30, 99).unwrap();
        let b = build_hit_batch(&fresh(40), &goldens(30), 0.3, 30, 99).unwrap();
        assert_eq!(a, b);
        let fresh_ids: Vec<_> = a
            .questions
            .iter()
            .filter(|q| !q.is_golden)
            .map(|q| q.question_id.clone())
            .collect();
        let expected: Vec<_> = (0..21).map(|i| format!("q{i}")).collect();
        assert_eq!(fresh_ids, expected);
        let c = build_hit_batch(&fresh(40), &goldens(30), 0.3, 30, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn costs() {
        let c = CostModel::new(0.01, 0.005).unwrap();
        assert!((c.hit_cost(9) - 0.135).abs() < 1e-12);
        assert_eq!(CostModel::new(0.0, 0.0).unwrap().hit_cost(31), 0.0);
        assert!((CostModel::new(0.01, 0.01).unwrap().hit_cost(1) - 0.02).abs() < 1e-12);
        assert!(CostModel::new(-0.1, 0.0).is_err());

        let spec = |w: f64, k: u64| QuerySpec {
            keywords: vec![],
            required_accuracy: 0.9,
            domain: domain(),
            timestamp: 0,
            window: w,
            items_per_unit: k,
        };
        assert!((c.query_cost(&spec(10.0, 100), 9) - 135.0).abs() < 1e-9);
        assert_eq!(c.query_cost(&spec(10.0, 0), 9), 0.0);
        let c2 = CostModel::new(0.015, 0.005).unwrap();
        assert!((c2.query_cost(&spec(1.0, 1), 29) - 0.58).abs() < 1e-12);
    }

    #[test]
    fn assign_prices_the_hit() {
        let batch = HitBatch::from_questions(fresh(3))
            .assign(9, &CostModel::new(0.01, 0.005).unwrap())
            .unwrap();
        assert_eq!(batch.replication, 9);
        assert!((batch.per_hit_cost - 0.135).abs() < 1e-12);
        assert!(HitBatch::from_questions(fresh(1))
            .assign(4, &CostModel::default())
            .is_err());
    }
}
