use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use crowdgate_core::experiments::{SuiteName, SuiteSpec};
use crowdgate_core::online::{OnlineSession, OnlineSettings, SessionState, Strategy};
use crowdgate_core::prediction::refined_worker_count;
use crowdgate_core::simulator::{
    prepare_trial, rebuild_profiles, run_experiment, run_hit, write_transcript, Scenario,
    TranscriptRecord, VerifyDocument,
};
use crowdgate_core::verification::{verify_report, ProfileSource, VerificationConfig};
use crowdgate_core::{CostModel, Observation, WorkerProfile};

#[derive(Parser)]
#[command(
    name = "crowdgate",
    version,
    about = "Verify crowdsourced answers and plan worker counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Workers needed per question to reach an accuracy target.
    Predict {
        #[arg(long)]
        target_accuracy: f64,
        #[arg(long)]
        mean_accuracy: f64,
        #[arg(long, default_value_t = 0.0)]
        worker_fee: f64,
        #[arg(long, default_value_t = 0.0)]
        platform_fee: f64,
        #[arg(long)]
        json: bool,
    },
    /// Verify one complete question document.
    Verify {
        #[arg(long)]
        transcript: PathBuf,
        /// Answer domain size to assume.
        #[arg(long, conflicts_with = "epsilon")]
        m: Option<usize>,
        /// Rarity threshold for estimating the domain size.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Replay a question document vote by vote, printing one JSON line per
    /// vote until the strategy stops.
    Online {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, default_value = "expmax")]
        strategy: Strategy,
        /// Expected accuracy of workers who have not answered.
        #[arg(long)]
        mu: f64,
    },
    /// Rebuild worker profiles from the golden records of NDJSON transcripts.
    Profiles {
        #[arg(long)]
        from_transcripts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
    },
    /// Run a scenario and write metrics, a transcript and replayable documents.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Question documents to write for `verify` and `online`.
        #[arg(long, default_value_t = 5)]
        documents: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a named experiment suite.
    Suite {
        name: SuiteName,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with status 2 if any checked property is violated.
        #[arg(long)]
        check: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Predict {
            target_accuracy,
            mean_accuracy,
            worker_fee,
            platform_fee,
            json,
        } => {
            let p = refined_worker_count(target_accuracy, mean_accuracy)?;
            let cost = CostModel::new(worker_fee, platform_fee)?;
            if json {
                println!(
                    "{}",
                    json!({
                        "target_accuracy": target_accuracy,
                        "mean_accuracy": mean_accuracy,
                        "conservative_n": p.conservative_n,
                        "refined_n": p.refined_n,
                        "expected_accuracy": p.expected_accuracy_at_refined,
                        "hit_cost": cost.hit_cost(p.refined_n),
                    })
                );
            } else {
                println!("conservative workers: {}", p.conservative_n);
                println!("refined workers:      {}", p.refined_n);
                println!(
                    "expected accuracy:    {:.6}",
                    p.expected_accuracy_at_refined
                );
                println!("cost per question:    {:.4}", cost.hit_cost(p.refined_n));
            }
        }
        Command::Verify {
            transcript,
            m,
            epsilon,
        } => {
            let doc = load_document(&transcript)?;
            let mut cfg = VerificationConfig {
                m_override: m,
                ..VerificationConfig::default()
            };
            if let Some(e) = epsilon {
                cfg.epsilon = e;
            }
            let report = verify_report(&doc.observation, &doc.profiles, &doc.domain, &cfg)?;
            let mut value = serde_json::to_value(&report)?;
            if let Some(truth) = &doc.ground_truth {
                value["ground_truth"] = json!(truth);
            }
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
        Command::Online {
            transcript,
            strategy,
            mu,
        } => {
            let doc = load_document(&transcript)?;
            let obs = &doc.observation;
            let mut session = OnlineSession::new(
                obs.question_id.clone(),
                doc.domain.clone(),
                OnlineSettings {
                    n_total: obs.n_total(),
                    mu_remaining: mu,
                    strategy,
                    cfg: VerificationConfig::default(),
                },
            )?;
            let mut out = BufWriter::new(io::stdout().lock());
            for vote in obs.votes() {
                let a = doc
                    .profiles
                    .accuracy_of(&vote.worker_id)
                    .with_context(|| format!("no profile for worker {}", vote.worker_id))?;
                let table = session
                    .push_answer(vote.clone(), &WorkerProfile::new(vote.worker_id.clone(), a))?;
                let line = json!({
                    "votes": session.votes_received(),
                    "worker_id": vote.worker_id,
                    "answer": vote.answer,
                    "best": table.best,
                    "confidences": table.entries,
                    "evaluation": session.last_evaluation(),
                    "state": session.state(),
                });
                writeln!(out, "{line}")?;
                if session.state() != SessionState::Collecting {
                    break;
                }
            }
            out.flush()?;
        }
        Command::Profiles {
            from_transcripts,
            out,
            smoothing,
        } => {
            let store = rebuild_profiles(&from_transcripts, smoothing)?;
            match out {
                Some(path) => {
                    store.save(&path)?;
                    eprintln!("wrote {} profiles to {}", store.len(), path.display());
                }
                None => println!("{}", store.to_json()?),
            }
        }
        Command::Simulate {
            scenario,
            out,
            documents,
            seed,
        } => {
            let text = fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let mut scenario = Scenario::from_json(&text)?;
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            simulate(&scenario, &out, documents)?;
        }
        Command::Suite {
            name,
            config,
            out,
            seed,
            check,
        } => {
            let mut spec = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    SuiteSpec::from_json(name, &text)?
                }
                None => SuiteSpec::default_for(name),
            };
            if let Some(seed) = seed {
                spec.set_seed(seed);
            }
            let output = spec.run()?;
            for path in output.write(&out)? {
                eprintln!("wrote {}", path.display());
            }
            for v in &output.violations {
                eprintln!("violation: {v}");
            }
            if check && !output.violations.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_document(path: &Path) -> Result<VerifyDocument> {
    VerifyDocument::load(path).with_context(|| format!("loading {}", path.display()))
}

fn simulate(scenario: &Scenario, out: &PathBuf, documents: usize) -> Result<()> {
    if scenario.trials == 0 {
        bail!("scenario needs at least one trial");
    }
    fs::create_dir_all(out)?;
    let metrics = run_experiment(scenario)?;
    fs::write(out.join("metrics.json"), metrics.to_json()? + "\n")?;
    fs::write(out.join("metrics.csv"), metrics.to_csv()?)?;

    // the first trial is written out in full
    let setup = prepare_trial(scenario, 0, true)?;
    let mut records: Vec<TranscriptRecord> = setup.golden_records.iter().map(Into::into).collect();
    let mut docs = Vec::new();
    for q in 0..scenario.num_questions {
        let hit = run_hit(scenario, &setup, q)?;
        if q < documents {
            let observation = Observation::from_votes(
                hit.run.question_id.clone(),
                hit.run.votes.clone(),
                setup.n,
            )?;
            let profiles = hit
                .workers_drawn
                .iter()
                .filter_map(|w| setup.profiles.get(w).cloned())
                .collect();
            docs.push(VerifyDocument {
                domain: scenario.domain.clone(),
                observation,
                profiles,
                ground_truth: Some(hit.run.ground_truth.clone()),
            });
        }
        records.push((&hit).into());
    }
    write_transcript(&out.join("transcript.ndjson"), &records)?;
    setup.profiles.save(&out.join("profiles.json"))?;
    for (i, doc) in docs.iter().enumerate() {
        fs::write(
            out.join(format!("question-{i:04}.json")),
            serde_json::to_string_pretty(doc)? + "\n",
        )?;
    }
    eprintln!(
        "{} questions, {} workers each, estimated mean accuracy {:.4}",
        scenario.num_questions, setup.n, setup.mu_estimate
    );
    for r in &metrics.rows {
        eprintln!(
            "{:16} {:7} accuracy {:.4}  no-answer {:.4}  votes {:.2}  savings {:.3}",
            r.method.name(),
            r.strategy.name(),
            r.accuracy,
            r.no_answer_rate,
            r.mean_votes,
            r.worker_savings
        );
    }
    Ok(())
}
