use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::stats::{blind_commit_acceptance, chi_square_uniform, honest_acceptance, Metric};
use super::{Check, CommandOutput, ExperimentConfig, HarnessError, ProtocolKind, StatsReport};
use crate::adversaries::{
    budget_arithmetic, AttackStrategy, BqsmBob, DelayedMeasurementBob, HonestBob, NonMeasuringCommitter,
    PartialStorageBob,
};
use crate::apps::{
    qid_alice, qid_bob, qid_spec, qot_alice, qot_bob, qot_spec, random_password, random_strings, MacKey, QidBobMode,
};
use crate::commit::gen_hiding;
use crate::compiler::{compile, run_bb84_session, Setup};
use crate::protocol::{derive_seed, ideal_ot, rng_from, session_id, test_size, Output, Transcript};

/// Sub-streams of a trial seed; 1 to 3 belong to the session itself.
const INPUT_STREAM: u64 = 4;
/// Sub-streams of the master seed, clear of the trial indices.
const CRS_STREAM: u64 = u64::MAX;
const MAC_STREAM: u64 = u64::MAX - 1;

pub(super) const ATTACKS: [&str; 5] = ["honest", "delayed", "nonmeasuring", "partial", "bqsm"];

struct Experiment<'a> {
    config: &'a ExperimentConfig,
    setup: Setup,
    attack: String,
    mac: Option<MacKey>,
}

#[derive(Default)]
struct Record {
    completed: bool,
    /// QOT: Bob's string for his choice is right. QID: the decision matches
    /// password equality.
    correct: bool,
    /// QID decision.
    accepted: bool,
    both: bool,
    recovered: bool,
    true_consistent: bool,
    kappa: Option<usize>,
    mac_rejected: bool,
    within_budget: Option<bool>,
    strategy: Value,
    transcript: Option<Transcript>,
    flips: usize,
}

fn make_strategy(exp: &Experiment<'_>) -> Box<dyn AttackStrategy> {
    let adv = exp.config.adversary.clone().unwrap_or_default();
    let compiled = exp.config.compiled;
    match exp.attack.as_str() {
        // Against the compiled protocol the stored qubits are covered by random commitments.
        "delayed" => Box::new(DelayedMeasurementBob::new(compiled)),
        "nonmeasuring" => Box::new(NonMeasuringCommitter::new()),
        "partial" => Box::new(PartialStorageBob::new(adv.fraction.unwrap_or(0.5))),
        "bqsm" => {
            let gamma = adv.gamma.unwrap_or(0.25);
            if compiled {
                Box::new(BqsmBob::new(gamma, NonMeasuringCommitter::new()))
            } else {
                Box::new(BqsmBob::new(gamma, DelayedMeasurementBob::new(false)))
            }
        }
        _ => Box::new(HonestBob::new()),
    }
}

fn budget_state(strategy: &dyn AttackStrategy) -> Option<bool> {
    let budget = strategy.memory_budget()?;
    let held = strategy.report().get("held_at_bound").and_then(Value::as_u64)?;
    Some(held as usize <= budget)
}

fn run_trial(exp: &Experiment<'_>, index: usize) -> Result<Record, HarnessError> {
    let config = exp.config;
    let params = &config.params;
    let seed = config.trial_seed(index);
    let sid = session_id(config.master_seed, index);
    let mut inputs = rng_from(derive_seed(seed, INPUT_STREAM));
    let honest = exp.attack == "honest";
    let keep = index < config.output.max_transcripts;
    let strategy = make_strategy(exp);
    let mut rec = Record::default();
    match config.protocol {
        ProtocolKind::Qot => {
            let (s0, s1) = random_strings(params.ell, &mut inputs);
            let k: u8 = inputs.gen_range(0..2);
            let out = run_bb84_session(
                &exp.setup,
                params,
                qot_alice(s0.clone(), s1.clone())?,
                strategy,
                qot_bob(k, !honest),
                &sid,
                seed,
                None,
            )?;
            rec.completed = out.result.completed();
            let want = ideal_ot(&s0, &s1, k)?;
            rec.correct = rec.completed
                && match &out.result.bob {
                    Output::Bits(b) => *b == want,
                    Output::BothStrings(a, b) => (if k == 0 { a } else { b }) == &want,
                    _ => false,
                };
            rec.both = rec.completed && out.result.bob == Output::BothStrings(s0, s1);
            rec.within_budget = budget_state(&out.strategy);
            rec.strategy = out.strategy.report();
            rec.flips = out.result.channel_flips;
            rec.transcript = keep.then_some(out.result.transcript);
        }
        ProtocolKind::Qid => {
            let code = config.code();
            let w = random_password(&code, &mut inputs);
            let w_bob =
                if config.unequal_passwords { (w + 1 + inputs.gen_range(0..code.size() - 1)) % code.size() } else { w };
            let mode = if honest {
                QidBobMode::Honest { w: w_bob }
            } else {
                QidBobMode::Dictionary { candidates: (0..code.size()).collect() }
            };
            let out = run_bb84_session(
                &exp.setup,
                params,
                qid_alice(w, code, params.ell, exp.mac),
                strategy,
                qid_bob(mode, code, params.ell, exp.mac),
                &sid,
                seed,
                None,
            )?;
            rec.completed = out.result.completed();
            rec.accepted = rec.completed && out.result.bob == Output::Decision(true);
            rec.correct = rec.completed && rec.accepted == (w == w_bob);
            rec.recovered = rec.completed && out.result.bob == Output::PasswordGuess(Some(w));
            rec.true_consistent = rec.completed && out.bob_post.consistent.contains(&w);
            rec.mac_rejected = out.bob_post.mac_rejected;
            let kappa = out.bob_post.kappa();
            if !kappa.is_empty() {
                let bits = kappa_cell_bits(params.n, config.trials);
                rec.kappa = Some(kappa.iter().take(bits).fold(0usize, |acc, b| (acc << 1) | b.bit() as usize));
            }
            rec.within_budget = budget_state(&out.strategy);
            rec.strategy = out.strategy.report();
            rec.flips = out.result.channel_flips;
            rec.transcript = keep.then_some(out.result.transcript);
        }
    }
    Ok(rec)
}

/// Leading announcement positions binned for the uniformity test: at most
/// 10, and few enough that every cell expects at least 5 samples.
fn kappa_cell_bits(n: usize, trials: usize) -> usize {
    let by_count = ((trials as f64 / 5.0).log2().floor().max(1.0)) as usize;
    n.min(10).min(by_count).max(1)
}

fn experiment<'a>(config: &'a ExperimentConfig, attack: &str) -> Result<Experiment<'a>, HarnessError> {
    let spec = match config.protocol {
        ProtocolKind::Qot => qot_spec(),
        ProtocolKind::Qid => qid_spec(config.mac),
    };
    let setup = if config.compiled {
        let key = gen_hiding(&config.key.params(), &mut rng_from(derive_seed(config.master_seed, CRS_STREAM)))?;
        Setup::Compiled { protocol: compile(&spec, config.params.alpha)?, key }
    } else {
        Setup::Plain(spec)
    };
    let mac = if config.mac {
        Some(MacKey::random(64, &mut rng_from(derive_seed(config.master_seed, MAC_STREAM)))?)
    } else {
        None
    };
    Ok(Experiment { config, setup, attack: attack.to_string(), mac })
}

fn run_all(exp: &Experiment<'_>) -> Result<Vec<Record>, HarnessError> {
    (0..exp.config.trials).into_par_iter().map(|i| run_trial(exp, i)).collect()
}

/// Exact acceptance probability of the configured receiver, where known.
fn acceptance_reference(config: &ExperimentConfig, attack: &str) -> Option<f64> {
    let p = &config.params;
    if !config.compiled {
        return Some(1.0);
    }
    let t = test_size(p.m, p.alpha);
    match attack {
        "honest" => Some(honest_acceptance(t, p.phi, p.eps_prime)),
        "delayed" | "nonmeasuring" | "bqsm" if p.phi == 0.0 => Some(blind_commit_acceptance(t)),
        _ => None,
    }
}

fn flags(records: &[Record], f: impl Fn(&Record) -> bool) -> Vec<bool> {
    records.iter().map(f).collect()
}

fn summarize(config: &ExperimentConfig, attack: &str, records: &[Record]) -> StatsReport {
    let mut report = StatsReport::new(config, records.len());
    let completion_ref = acceptance_reference(config, attack);
    let completed = Metric::from_flags(&flags(records, |r| r.completed), completion_ref);
    report.metric("completion", completed.clone());
    let flips: Vec<f64> = records.iter().map(|r| r.flips as f64 / config.params.m.max(1) as f64).collect();
    report.metric("channel_flip_rate", Metric::from_samples(&flips, Some(config.params.phi)));
    let honest = attack == "honest";
    let schema_ok = records.iter().all(|r| r.transcript.as_ref().is_none_or(|t| t.verdict().is_some()));
    report.check(Check::new("every kept transcript carries a verdict", schema_ok, ""));

    match config.protocol {
        ProtocolKind::Qot => {
            report.metric("acceptance", Metric { reference: completion_ref, ..completed.clone() });
            let correct = Metric::from_flags(
                &flags(records, |r| r.correct),
                honest.then_some(1.0).filter(|_| config.params.phi == 0.0),
            );
            report.metric("correctness", correct.clone());
            if !honest {
                let both_ref = (!config.compiled && matches!(attack, "delayed")).then_some(1.0);
                report.metric("both_recovered", Metric::from_flags(&flags(records, |r| r.both), both_ref));
            }
            if honest {
                if config.params.phi == 0.0 {
                    report.check(Check::new(
                        "acceptance",
                        completed.mean == 1.0,
                        format!("{}/{}", completed.count(), completed.trials),
                    ));
                    report.check(Check::new(
                        "correctness",
                        correct.mean == 1.0,
                        format!("{}/{}", correct.count(), correct.trials),
                    ));
                } else if let Some(p) = completion_ref {
                    let se = (p * (1.0 - p) / completed.trials as f64).sqrt();
                    report.check(Check::new(
                        "acceptance",
                        completed.mean + 3.0 * se + 1e-12 >= p,
                        format!("observed {:.6}, exact {:.6}", completed.mean, p),
                    ));
                }
            } else if attack == "delayed" && !config.compiled {
                let both = report.metrics["both_recovered"].clone();
                report.check(Check::new(
                    "both strings recovered",
                    both.mean == 1.0,
                    format!("{}/{}", both.count(), both.trials),
                ));
            }
        }
        ProtocolKind::Qid => {
            let acc_ref = if honest && !config.unequal_passwords && config.params.phi == 0.0 {
                completion_ref
            } else if honest && config.unequal_passwords {
                Some(0.5f64.powi(config.params.ell as i32))
            } else {
                None
            };
            let accepted = Metric::from_flags(&flags(records, |r| r.accepted), acc_ref);
            report.metric("acceptance", accepted.clone());
            if config.mac {
                report.metric("mac_rejected", Metric::from_flags(&flags(records, |r| r.mac_rejected), None));
            }
            if honest {
                report.metric("correctness", Metric::from_flags(&flags(records, |r| r.correct), None));
                if config.unequal_passwords {
                    report.check(Check::new(
                        "unequal passwords rarely accepted",
                        accepted.mean <= 1e-3,
                        format!("{}/{} accepted", accepted.count(), accepted.trials),
                    ));
                } else if config.params.phi == 0.0 {
                    report.check(Check::new(
                        "equal passwords accepted",
                        accepted.mean == 1.0,
                        format!("{}/{} accepted", accepted.count(), accepted.trials),
                    ));
                }
                let bits = kappa_cell_bits(config.params.n, records.len());
                let values: Vec<usize> = records.iter().filter_map(|r| r.kappa).collect();
                let chi = chi_square_uniform(&values, 1 << bits);
                report.check(Check::new("kappa uniformity", chi.p_value > 1e-3, format!("p = {:.4}", chi.p_value)));
                report.detail("kappa_chi_square", &chi);
            } else {
                let recovered_ref = (!config.compiled && attack == "delayed").then_some(1.0);
                report
                    .metric("password_recovered", Metric::from_flags(&flags(records, |r| r.recovered), recovered_ref));
                if attack == "delayed" && !config.compiled {
                    let all = records.iter().all(|r| r.true_consistent);
                    report.check(Check::new("true password consistent with every response", all, ""));
                }
            }
        }
    }

    if !honest && config.compiled {
        if let Some(p) = completion_ref {
            report.check(Check::new(
                "acceptance within 3 standard errors of exact value",
                completed.within_binomial_error(3.0),
                format!("observed {}/{}, exact {:.3e}", completed.count(), completed.trials, p),
            ));
        }
    }
    let budgets: Vec<bool> = records.iter().filter_map(|r| r.within_budget).collect();
    if !budgets.is_empty() {
        report.metric("within_memory_budget", Metric::from_flags(&budgets, Some(1.0)));
        report.check(Check::new(
            "memory bound respected",
            budgets.len() == records.len() && budgets.iter().all(|&b| b),
            format!("{}/{} runs", budgets.iter().filter(|&&b| b).count(), records.len()),
        ));
        if config.compiled {
            let gamma = config.adversary.as_ref().and_then(|a| a.gamma).unwrap_or(0.25);
            let b = budget_arithmetic(gamma, config.params.m, config.params.alpha);
            report.check(Check::new(
                "compiled and inner budgets agree",
                b.equal,
                format!("{} vs {}", b.compiled_budget, b.inner_budget),
            ));
            report.detail("budget_arithmetic", &b);
        }
    }
    report.detail("strategy", records.first().map(|r| r.strategy.clone()).unwrap_or(Value::Null));
    report.detail("attack", json!(attack));
    report
}

fn finish(exp: &Experiment<'_>, records: Vec<Record>, started: Instant) -> CommandOutput {
    let report = summarize(exp.config, &exp.attack, &records);
    let transcripts = records.into_iter().filter_map(|r| r.transcript).collect();
    CommandOutput { report, transcripts, timings: vec![("trials".into(), started.elapsed())] }
}

pub(super) fn cmd_run(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let started = Instant::now();
    let exp = experiment(config, "honest")?;
    let records = run_all(&exp)?;
    Ok(finish(&exp, records, started))
}

pub(super) fn cmd_attack(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let name = config.adversary.as_ref().map(|a| a.name.as_str()).unwrap_or("");
    if !ATTACKS.contains(&name) {
        return Err(HarnessError::Usage(format!("unknown adversary {name:?}; expected one of {}", ATTACKS.join(", "))));
    }
    let started = Instant::now();
    let exp = experiment(config, name)?;
    let records = run_all(&exp)?;
    Ok(finish(&exp, records, started))
}
