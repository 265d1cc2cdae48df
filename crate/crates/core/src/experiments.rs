//! Named experiment suites that sweep one parameter and emit CSV and JSON
//! tables, plus a gnuplot stub for each.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Observation, WorkerProfile};
use crate::error::{Error, Result};
use crate::online::Strategy;
use crate::prediction::{expected_majority_prob, refined_worker_count};
use crate::sampling::estimation_error;
use crate::simulator::{
    calibrate, draw_pool_with, draw_votes, question_id, run_experiment, stream, tag,
    AccuracyDistribution, Method, Scenario,
};
use crate::verification::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    WorkerCounts,
    AccuracyVsWorkers,
    Termination,
    SamplingRate,
}

impl SuiteName {
    pub const ALL: [SuiteName; 4] = [
        SuiteName::WorkerCounts,
        SuiteName::AccuracyVsWorkers,
        SuiteName::Termination,
        SuiteName::SamplingRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::WorkerCounts => "worker-counts",
            SuiteName::AccuracyVsWorkers => "accuracy-vs-workers",
            SuiteName::Termination => "termination",
            SuiteName::SamplingRate => "sampling-rate",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown suite {s:?}")))
    }
}

/// Required worker counts over a grid of accuracy targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkerCountsSpec {
    pub seed: u64,
    pub mu: f64,
    pub targets: Vec<f64>,
}

impl Default for WorkerCountsSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            mu: 0.7,
            targets: vec![0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99],
        }
    }
}

/// Achieved accuracy and no-answer rate over a grid of worker counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyVsWorkersSpec {
    pub scenario: Scenario,
    pub workers: Vec<usize>,
}

impl Default for AccuracyVsWorkersSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            workers: vec![1, 3, 5, 7, 9, 11, 13, 15],
        }
    }
}

/// Early-termination savings and accuracy over a grid of targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationSpec {
    pub scenario: Scenario,
    pub strategies: Vec<Strategy>,
    pub targets: Vec<f64>,
}

impl Default for TerminationSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario {
                accuracy_dist: AccuracyDistribution::PointMass { mu: 0.7 },
                oracle_accuracies: true,
                ..Scenario::default()
            },
            strategies: Strategy::ALL.to_vec(),
            targets: vec![0.7, 0.8, 0.9, 0.95, 0.99],
        }
    }
}

/// Golden sampling rate against estimation error and downstream accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingRateSpec {
    pub scenario: Scenario,
    pub rates: Vec<f64>,
    /// Independent seeds starting at `scenario.seed`.
    pub seeds: usize,
}

impl Default for SamplingRateSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario {
                num_questions: 2_000,
                ..Scenario::default()
            },
            rates: vec![0.05, 0.1, 0.2, 1.0],
            seeds: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "kebab-case")]
pub enum SuiteSpec {
    WorkerCounts(WorkerCountsSpec),
    AccuracyVsWorkers(AccuracyVsWorkersSpec),
    Termination(TerminationSpec),
    SamplingRate(SamplingRateSpec),
}

impl SuiteSpec {
    pub fn default_for(name: SuiteName) -> Self {
        match name {
            SuiteName::WorkerCounts => SuiteSpec::WorkerCounts(Default::default()),
            SuiteName::AccuracyVsWorkers => SuiteSpec::AccuracyVsWorkers(Default::default()),
            SuiteName::Termination => SuiteSpec::Termination(Default::default()),
            SuiteName::SamplingRate => SuiteSpec::SamplingRate(Default::default()),
        }
    }

    /// Parses the configuration of suite `name`. The `suite` tag may be
    /// omitted; if present it must match.
    pub fn from_json(name: SuiteName, json: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(json)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::InvalidScenario("suite config must be a JSON object".into()))?;
        match obj.get("suite").and_then(|v| v.as_str()) {
            Some(tagged) if tagged != name.as_str() => {
                return Err(Error::InvalidScenario(format!(
                    "config is for suite {tagged:?}, not {:?}",
                    name.as_str()
                )))
            }
            _ => {
                obj.insert("suite".into(), name.as_str().into());
            }
        }
        let spec: SuiteSpec = serde_json::from_value(value)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> SuiteName {
        match self {
            SuiteSpec::WorkerCounts(_) => SuiteName::WorkerCounts,
            SuiteSpec::AccuracyVsWorkers(_) => SuiteName::AccuracyVsWorkers,
            SuiteSpec::Termination(_) => SuiteName::Termination,
            SuiteSpec::SamplingRate(_) => SuiteName::SamplingRate,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            SuiteSpec::WorkerCounts(s) => s.seed = seed,
            SuiteSpec::AccuracyVsWorkers(s) => s.scenario.seed = seed,
            SuiteSpec::Termination(s) => s.scenario.seed = seed,
            SuiteSpec::SamplingRate(s) => s.scenario.seed = seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidScenario(format!("{what} grid is empty")));
        let check_targets = |targets: &[f64]| {
            targets.iter().try_for_each(|&c| {
                if c > 0.0 && c < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidAccuracyTarget(c))
                }
            })
        };
        match self {
            SuiteSpec::WorkerCounts(s) => {
                if s.targets.is_empty() {
                    return empty("target");
                }
                check_targets(&s.targets)?;
                if !(s.mu > 0.5 && s.mu < 1.0) {
                    return Err(Error::MeanAccuracyNotAboveHalf(s.mu));
                }
            }
            SuiteSpec::AccuracyVsWorkers(s) => {
                s.scenario.validate()?;
                if s.workers.is_empty() {
                    return empty("worker");
                }
                if let Some(&n) = s.workers.iter().find(|&&n| n % 2 == 0) {
                    return Err(Error::EvenWorkerCount(n));
                }
            }
            SuiteSpec::Termination(s) => {
                s.scenario.validate()?;
                if s.strategies.is_empty() {
                    return empty("strategy");
                }
                if s.targets.is_empty() {
                    return empty("target");
                }
                check_targets(&s.targets)?;
            }
            SuiteSpec::SamplingRate(s) => {
                s.scenario.validate()?;
                if s.rates.is_empty() {
                    return empty("rate");
                }
                if let Some(&r) = s.rates.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
                    return Err(Error::OutOfRange {
                        name: "sampling rate",
                        range: "(0, 1]",
                        value: r,
                    });
                }
                if s.seeds == 0 {
                    return Err(Error::InvalidScenario("seeds must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<SuiteOutput> {
        self.validate()?;
        match self {
            SuiteSpec::WorkerCounts(s) => worker_counts(s),
            SuiteSpec::AccuracyVsWorkers(s) => accuracy_vs_workers(s),
            SuiteSpec::Termination(s) => termination(s),
            SuiteSpec::SamplingRate(s) => sampling_rate(s),
        }
    }
}

/// Rendered tables of one suite run and the properties it violated.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub name: SuiteName,
    pub csv: String,
    pub json: String,
    pub gnuplot: String,
    pub violations: Vec<String>,
}

impl SuiteOutput {
    fn new<R: Serialize>(
        name: SuiteName,
        spec: &SuiteSpec,
        rows: &[R],
        gnuplot: String,
        violations: Vec<String>,
    ) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        #[derive(Serialize)]
        struct Report<'a, R> {
            spec: &'a SuiteSpec,
            rows: &'a [R],
            violations: &'a [String],
        }
        let json = serde_json::to_string_pretty(&Report {
            spec,
            rows,
            violations: &violations,
        })? + "\n";
        Ok(Self {
            name,
            csv: String::from_utf8(bytes).expect("csv output is UTF-8"),
            json,
            gnuplot,
            violations,
        })
    }

    /// Writes `<name>.csv`, `<name>.json` and `<name>.gp` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let stem = self.name.as_str();
        let files = [
            (format!("{stem}.csv"), &self.csv),
            (format!("{stem}.json"), &self.json),
            (format!("{stem}.gp"), &self.gnuplot),
        ];
        files
            .into_iter()
            .map(|(file, body)| {
                let path = dir.join(file);
                fs::write(&path, body)?;
                Ok(path)
            })
            .collect()
    }
}

fn gnuplot_stub(csv: &str, xlabel: &str, ylabel: &str, plots: &[(&str, &str)]) -> String {
    let mut s = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nplot "
    );
    let lines: Vec<String> = plots
        .iter()
        .map(|(using, title)| format!("'{csv}' using {using} with linespoints title '{title}'"))
        .collect();
    s.push_str(&lines.join(", \\\n     "));
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkerCountRow {
    pub seed: u64,
    pub mu: f64,
    pub target: f64,
    pub conservative_n: usize,
    pub refined_n: usize,
    pub expected_accuracy: f64,
}

fn worker_counts(spec: &WorkerCountsSpec) -> Result<SuiteOutput> {
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &target in &spec.targets {
        let p = refined_worker_count(target, spec.mu)?;
        if 2 * p.refined_n >= p.conservative_n + 2 {
            violations.push(format!(
                "C={target}: refined {} is not below half of conservative {} plus one",
                p.refined_n, p.conservative_n
            ));
        }
        if p.refined_n > 1 && expected_majority_prob(p.refined_n - 2, spec.mu)? >= target {
            violations.push(format!(
                "C={target}: refined {} is not minimal",
                p.refined_n
            ));
        }
        rows.push(WorkerCountRow {
            seed: spec.seed,
            mu: spec.mu,
            target,
            conservative_n: p.conservative_n,
            refined_n: p.refined_n,
            expected_accuracy: p.expected_accuracy_at_refined,
        });
    }
    let gp = gnuplot_stub(
        "worker-counts.csv",
        "required accuracy",
        "workers",
        &[("3:4", "conservative"), ("3:5", "refined")],
    );
    SuiteOutput::new(
        SuiteName::WorkerCounts,
        &SuiteSpec::WorkerCounts(spec.clone()),
        &rows,
        gp,
        violations,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub seed: u64,
    pub mu_true: f64,
    pub mu_estimate: f64,
    pub workers: usize,
    pub method: Method,
    pub accuracy: f64,
    pub accuracy_stderr: f64,
    pub no_answer_rate: f64,
}

fn accuracy_vs_workers(spec: &AccuracyVsWorkersSpec) -> Result<SuiteOutput> {
    let metrics = spec
        .workers
        .par_iter()
        .map(|&n| {
            run_experiment(&Scenario {
                replication: Some(n),
                ..spec.scenario.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let methods = [
        Method::Verification,
        Method::MajorityVoting,
        Method::HalfVoting,
    ];
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut previous: Option<(usize, f64, f64)> = None;
    for (&n, m) in spec.workers.iter().zip(&metrics) {
        let get = |method| {
            m.row(method, Strategy::None)
                .expect("every experiment reports every method")
        };
        for method in methods {
            let r = get(method);
            rows.push(AccuracyRow {
                seed: m.seed,
                mu_true: m.mu_true,
                mu_estimate: m.mu_estimate,
                workers: n,
                method,
                accuracy: r.accuracy,
                accuracy_stderr: r.accuracy_stderr,
                no_answer_rate: r.no_answer_rate,
            });
        }
        let (v, mv, hv) = (
            get(Method::Verification),
            get(Method::MajorityVoting),
            get(Method::HalfVoting),
        );
        if v.accuracy < mv.accuracy || mv.accuracy < hv.accuracy {
            violations.push(format!(
                "n={n}: accuracy ordering broken (verification {}, majority {}, half {})",
                v.accuracy, mv.accuracy, hv.accuracy
            ));
        }
        if hv.no_answer_rate < mv.no_answer_rate {
            violations.push(format!(
                "n={n}: half-voting no-answer rate {} below majority-voting {}",
                hv.no_answer_rate, mv.no_answer_rate
            ));
        }
        if n == 1 && (v.accuracy != mv.accuracy || mv.accuracy != hv.accuracy) {
            violations.push("n=1: the three rules disagree on a single vote".into());
        }
        if let Some((pn, pa, pse)) = previous {
            let slack = 2.0 * (pse * pse + v.accuracy_stderr * v.accuracy_stderr).sqrt();
            if n > pn && v.accuracy < pa - slack {
                violations.push(format!(
                    "verification accuracy drops from {pa} at n={pn} to {} at n={n}",
                    v.accuracy
                ));
            }
        }
        previous = Some((n, v.accuracy, v.accuracy_stderr));
    }
    let gp = gnuplot_stub(
        "accuracy-vs-workers.csv",
        "workers",
        "accuracy",
        &[
            ("4:(strcol(5) eq 'verification' ? $6 : NaN)", "verification"),
            (
                "4:(strcol(5) eq 'majority_voting' ? $6 : NaN)",
                "majority voting",
            ),
            ("4:(strcol(5) eq 'half_voting' ? $6 : NaN)", "half voting"),
        ],
    );
    SuiteOutput::new(
        SuiteName::AccuracyVsWorkers,
        &SuiteSpec::AccuracyVsWorkers(spec.clone()),
        &rows,
        gp,
        violations,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminationRow {
    pub seed: u64,
    pub target: f64,
    pub refined_n: f64,
    pub strategy: Strategy,
    pub mean_votes: f64,
    pub worker_savings: f64,
    pub accuracy: f64,
    pub accuracy_stderr: f64,
}

fn termination(spec: &TerminationSpec) -> Result<SuiteOutput> {
    let metrics = spec
        .targets
        .par_iter()
        .map(|&target| {
            run_experiment(&Scenario {
                target_accuracy: target,
                ..spec.scenario.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (&target, m) in spec.targets.iter().zip(&metrics) {
        let get = |s| {
            m.row(Method::Verification, s)
                .expect("every strategy is replayed")
        };
        for &s in &spec.strategies {
            let r = get(s);
            rows.push(TerminationRow {
                seed: m.seed,
                target,
                refined_n: m.planned_workers,
                strategy: s,
                mean_votes: r.mean_votes,
                worker_savings: r.worker_savings,
                accuracy: r.accuracy,
                accuracy_stderr: r.accuracy_stderr,
            });
        }
        let saving = |s| get(s).worker_savings;
        let ordering = [
            (Strategy::ExpMax, Strategy::MinExp),
            (Strategy::MinExp, Strategy::MinMax),
        ];
        for (hi, lo) in ordering {
            if saving(hi) < saving(lo) {
                violations.push(format!(
                    "C={target}: {hi} saves {} but {lo} saves {}",
                    saving(hi),
                    saving(lo)
                ));
            }
        }
        if saving(Strategy::MinMax) < 0.0 {
            violations.push(format!("C={target}: negative minmax savings"));
        }
        if saving(Strategy::None) != 0.0 {
            violations.push(format!("C={target}: strategy none saved workers"));
        }
        if get(Strategy::MinMax).accuracy != get(Strategy::None).accuracy {
            violations.push(format!(
                "C={target}: minmax accuracy {} differs from full accuracy {}",
                get(Strategy::MinMax).accuracy,
                get(Strategy::None).accuracy
            ));
        }
    }
    let gp = gnuplot_stub(
        "termination.csv",
        "required accuracy",
        "mean votes consumed",
        &[
            ("2:(strcol(4) eq 'none' ? $5 : NaN)", "none"),
            ("2:(strcol(4) eq 'minmax' ? $5 : NaN)", "minmax"),
            ("2:(strcol(4) eq 'minexp' ? $5 : NaN)", "minexp"),
            ("2:(strcol(4) eq 'expmax' ? $5 : NaN)", "expmax"),
        ],
    );
    SuiteOutput::new(
        SuiteName::Termination,
        &SuiteSpec::Termination(spec.clone()),
        &rows,
        gp,
        violations,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingRow {
    pub seed: u64,
    pub seeds: usize,
    pub questions_per_seed: usize,
    pub rate: f64,
    /// Mean estimated accuracy at this rate.
    pub mu_rate: f64,
    /// Mean absolute deviation from the full-rate estimates.
    pub err: f64,
    pub err_stderr: f64,
    pub accuracy: f64,
    pub accuracy_stderr: f64,
}

/// Per-seed outcome of the sampling-rate comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSeed {
    /// Indexed like the requested rates.
    pub mu: Vec<f64>,
    pub err: Vec<f64>,
    pub correct: Vec<u64>,
    pub questions: u64,
}

/// Calibrates one pool at every rate plus the full rate, then verifies the
/// same simulated votes with each rate's profiles. The worker count is
/// planned from the full-rate estimates so every rate sees identical votes.
pub fn sampling_rate_seed(scenario: &Scenario, rates: &[f64]) -> Result<SamplingSeed> {
    let seed = scenario.seed;
    let pool: Vec<WorkerProfile> = draw_pool_with(
        &scenario.accuracy_dist,
        scenario.pool_size,
        &mut stream(seed, 0, tag::POOL, 0),
    )?;
    let mut all_rates = rates.to_vec();
    all_rates.push(1.0);
    let stores = calibrate(
        &pool,
        &scenario.domain,
        &scenario.sampling,
        &all_rates,
        scenario.calibration_rounds,
        scenario.calibration_group,
        scenario.wrong_answer_skew,
        seed,
        0,
        None,
    )?;
    let reference = stores.last().expect("full rate appended");
    let reference_acc = reference.accuracies();
    let mut mu = Vec::new();
    let mut err = Vec::new();
    for store in &stores[..rates.len()] {
        let (m, e) = estimation_error(&store.accuracies(), &reference_acc)?;
        mu.push(m);
        err.push(e);
    }
    let mu_ref = reference.mean_accuracy().expect("non-empty pool");
    let n = match scenario.replication {
        Some(n) => n,
        None => refined_worker_count(scenario.target_accuracy, mu_ref)?.refined_n,
    };
    let labels = scenario.domain.labels();
    let per_question = (0..scenario.num_questions)
        .into_par_iter()
        .map(|q| {
            let mut rng = stream(seed, 0, tag::QUESTION, q as u64);
            let truth = labels[rng.random_range(0..labels.len())].clone();
            let votes = draw_votes(
                &pool,
                &truth,
                n,
                &scenario.domain,
                scenario.wrong_answer_skew,
                &mut rng,
            )?;
            let obs = Observation::from_votes(question_id(0, q), votes, n)?;
            stores[..rates.len()]
                .iter()
                .map(|store| {
                    let table = verify(&obs, store, &scenario.domain, &scenario.verification)?;
                    Ok(table.best == truth)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut correct = vec![0u64; rates.len()];
    for hits in &per_question {
        for (c, &hit) in correct.iter_mut().zip(hits) {
            *c += u64::from(hit);
        }
    }
    Ok(SamplingSeed {
        mu,
        err,
        correct,
        questions: scenario.num_questions as u64,
    })
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sampling_rate(spec: &SamplingRateSpec) -> Result<SuiteOutput> {
    let base = spec.scenario.seed;
    let per_seed = (0..spec.seeds as u64)
        .into_par_iter()
        .map(|i| {
            sampling_rate_seed(
                &Scenario {
                    seed: base.wrapping_add(i),
                    ..spec.scenario.clone()
                },
                &spec.rates,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (j, &rate) in spec.rates.iter().enumerate() {
        let mus: Vec<f64> = per_seed.iter().map(|s| s.mu[j]).collect();
        let errs: Vec<f64> = per_seed.iter().map(|s| s.err[j]).collect();
        let correct: u64 = per_seed.iter().map(|s| s.correct[j]).sum();
        let questions: u64 = per_seed.iter().map(|s| s.questions).sum();
        let accuracy = correct as f64 / questions as f64;
        let (err, err_stderr) = mean_and_stderr(&errs);
        rows.push(SamplingRow {
            seed: base,
            seeds: spec.seeds,
            questions_per_seed: spec.scenario.num_questions,
            rate,
            mu_rate: mean_and_stderr(&mus).0,
            err,
            err_stderr,
            accuracy,
            accuracy_stderr: (accuracy * (1.0 - accuracy) / questions as f64).sqrt(),
        });
    }

    let mut violations = Vec::new();
    let mut by_rate: Vec<&SamplingRow> = rows.iter().collect();
    by_rate.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    for pair in by_rate.windows(2) {
        if pair[1].err > pair[0].err + 0.01 {
            violations.push(format!(
                "error grows from {} at rate {} to {} at rate {}",
                pair[0].err, pair[0].rate, pair[1].err, pair[1].rate
            ));
        }
    }
    let at = |rate: f64| rows.iter().find(|r| r.rate == rate);
    if let Some(full) = at(1.0) {
        if full.err != 0.0 {
            violations.push(format!("full-rate error against itself is {}", full.err));
        }
        if let Some(fifth) = at(0.2) {
            if (fifth.accuracy - full.accuracy).abs() > 0.03 {
                violations.push(format!(
                    "accuracy at rate 0.2 ({}) is more than 0.03 from rate 1.0 ({})",
                    fifth.accuracy, full.accuracy
                ));
            }
        }
    }
    let gp = gnuplot_stub(
        "sampling-rate.csv",
        "sampling rate",
        "estimation error",
        &[("4:6", "error"), ("4:8", "verification accuracy")],
    );
    SuiteOutput::new(
        SuiteName::SamplingRate,
        &SuiteSpec::SamplingRate(spec.clone()),
        &rows,
        gp,
        violations,
    )
}
