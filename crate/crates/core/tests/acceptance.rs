//! End-to-end acceptance suite. Prints one PASS or FAIL line per criterion
//! and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qcompile::adversaries::budget_arithmetic;
use qcompile::compiler::{validate_parameters, Target};
use qcompile::harness::{
    execute, transcript_jsonl, AdversaryConfig, CommandKind, CommandOutput, ExperimentConfig, KeyPreset, ProtocolKind,
};
use qcompile::infotheory::binary_entropy;
use qcompile::protocol::Params;

fn exec(config: &ExperimentConfig) -> (CommandOutput, Duration) {
    let start = Instant::now();
    let out = execute(config).unwrap_or_else(|e| panic!("{e}"));
    (out, start.elapsed())
}

fn failed_checks(out: &CommandOutput) -> String {
    let names: Vec<&str> = out.report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if names.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", names.join(", "))
    }
}

fn check_passes(out: &CommandOutput, name: &str) -> bool {
    out.report.get_check(name).is_some_and(|c| c.pass)
}

fn metric_mean(out: &CommandOutput, name: &str) -> f64 {
    out.report.metrics.get(name).map_or(f64::NAN, |m| m.mean)
}

fn lemma(name: &str) -> ExperimentConfig {
    ExperimentConfig { command: CommandKind::VerifyLemmas, lemma: name.into(), ..Default::default() }
}

fn trials(command: CommandKind, protocol: ProtocolKind, compiled: bool, trials: usize) -> ExperimentConfig {
    ExperimentConfig { command, protocol, compiled, trials, ..Default::default() }
}

fn attack(name: &str, protocol: ProtocolKind, compiled: bool, count: usize) -> ExperimentConfig {
    let mut c = trials(CommandKind::Attack, protocol, compiled, count);
    c.adversary = Some(AdversaryConfig { name: name.into(), ..Default::default() });
    c
}

fn criterion_1() -> (bool, String) {
    let (out, t) = exec(&lemma("superposition"));
    let pass = out.report.pass && t < Duration::from_secs(10);
    (pass, format!("{} in {:.2}s{}", out.report.checks[0].detail, t.as_secs_f64(), failed_checks(&out)))
}

fn criterion_2() -> (bool, String) {
    let c = lemma("sampling");
    assert_eq!((c.lemmas.sampling_m, c.lemmas.sampling_trials), (1024, 100_000));
    let (out, t) = exec(&c);
    let pass = out.report.pass && t < Duration::from_secs(30);
    (pass, format!("violation rate {} in {:.2}s", out.report.checks[0].detail, t.as_secs_f64()))
}

fn criterion_3() -> (bool, String) {
    let (out, t) = exec(&lemma("ball"));
    let pass = out.report.pass && t < Duration::from_secs(5);
    (pass, format!("{} in {:.2}s", out.report.checks[0].detail, t.as_secs_f64()))
}

fn criterion_4() -> (bool, String) {
    let c = trials(CommandKind::Run, ProtocolKind::Qot, true, 1000);
    let (out, _) = exec(&c);
    let acc = metric_mean(&out, "acceptance");
    let correct = metric_mean(&out, "correctness");
    let pass = out.report.pass && acc == 1.0 && correct == 1.0;
    (pass, format!("m = 128, production key: acceptance {acc}, correctness {correct}{}", failed_checks(&out)))
}

fn criterion_5() -> (bool, String) {
    let mut c = trials(CommandKind::Run, ProtocolKind::Qot, true, 1000);
    c.params.m = 1024;
    c.params.phi = 0.05;
    c.params.eps_prime = 0.05;
    c.key = KeyPreset::Fast;
    let (out, _) = exec(&c);
    let acc = metric_mean(&out, "acceptance");
    (out.report.pass && acc >= 0.99, format!("m = 1024, phi = 0.05: acceptance {acc:.4}{}", failed_checks(&out)))
}

fn criterion_6() -> (bool, String) {
    let (out, _) = exec(&attack("delayed", ProtocolKind::Qot, false, 1000));
    let both = metric_mean(&out, "both_recovered");
    (out.report.pass && both == 1.0, format!("both strings recovered in fraction {both} of 1000 trials"))
}

fn criterion_7() -> (bool, String) {
    let mut large = attack("nonmeasuring", ProtocolKind::Qot, true, 10_000);
    large.key = KeyPreset::Fast;
    let (big, _) = exec(&large);
    let accepted = big.report.metrics["completion"].count();
    let mut small = attack("nonmeasuring", ProtocolKind::Qot, true, 10_000);
    small.key = KeyPreset::Fast;
    small.params.m = 8;
    small.ell = Some(1);
    let (out, _) = exec(&small);
    let m = &out.report.metrics["completion"];
    let within = check_passes(&out, "acceptance within 3 standard errors of exact value");
    (
        accepted == 0 && within,
        format!(
            "m = 128: {accepted}/10000 accepted; m = 8: {:.4} against exact {:.4}",
            m.mean,
            m.reference.unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_8() -> (bool, String) {
    let c = ExperimentConfig { command: CommandKind::CommitBench, ..Default::default() };
    assert_eq!((c.bench.roundtrip_trials, c.bench.extraction_trials), (10_000, 10_000));
    let (out, _) = exec(&c);
    let detail: Vec<String> = out.report.checks.iter().map(|c| format!("{} {}", c.name, c.detail)).collect();
    (out.report.pass, detail.join("; "))
}

fn criterion_9() -> (bool, String) {
    let equal = trials(CommandKind::Run, ProtocolKind::Qid, false, 1000);
    let (eq, _) = exec(&equal);
    let mut unequal = trials(CommandKind::Run, ProtocolKind::Qid, false, 100_000);
    unequal.unequal_passwords = true;
    let (ne, _) = exec(&unequal);
    let kappa = ne.report.get_check("kappa uniformity").map(|c| c.detail.clone()).unwrap_or_default();
    (
        eq.report.pass && ne.report.pass && ne.report.config.params.ell == 16,
        format!(
            "equal accepted {}, unequal accepted {}, kappa {kappa}{}{}",
            metric_mean(&eq, "acceptance"),
            metric_mean(&ne, "acceptance"),
            failed_checks(&eq),
            failed_checks(&ne)
        ),
    )
}

/// Each inequality on dyadic grid points just inside and just outside its
/// boundary, and on the boundary itself, which is excluded.
fn criterion_10() -> (bool, String) {
    let step = 1.0 / 1024.0;
    let mut cases = 0;
    let mut wrong = Vec::new();
    let mut probe = |target: Target, name: &str, p: &Params, expect: bool| {
        cases += 1;
        let holds = validate_parameters(target, p).get(name).map(|c| c.holds);
        if holds != Some(expect) {
            wrong.push(format!("{name} at beta {} gamma {} lambda {}", p.beta, p.gamma, p.lambda));
        }
    };
    for k in 0..8 {
        let lambda = k as f64 / 128.0;
        let mut p = Params::plain(64, lambda);
        let edge = 0.125 - lambda / 2.0;
        for (beta, expect) in [(edge - step, true), (edge, false), (edge + step, false)] {
            p.beta = beta;
            probe(Target::Qot, "beta < 1/8 - lambda/2", &p, expect);
        }
        let edge = 0.25 - 2.0 * lambda;
        for (gamma, expect) in [(edge - step, true), (edge, false), (edge + step, false)] {
            p.gamma = gamma;
            probe(Target::Qot, "gamma < 1/4 - 2 lambda", &p, expect);
        }
    }
    for k in 1..8 {
        let mut p = Params::plain(64, 0.0);
        p.delta = k as f64 / 16.0;
        p.nu = k as f64 / 256.0;
        for (beta, expect) in [(p.delta / 4.0 - step, true), (p.delta / 4.0, false), (p.delta / 4.0 + step, false)] {
            p.beta = beta;
            probe(Target::Qid, "beta < delta/4", &p, expect);
        }
        let edge = p.delta / 2.0 - p.nu;
        for (gamma, expect) in [(edge - step, true), (edge, false), (edge + step, false)] {
            p.gamma = gamma;
            probe(Target::Qid, "gamma < delta/2 - nu", &p, expect);
        }
    }
    for phi in [0.01, 0.03, 0.05, 0.11] {
        let mut p = Params::plain(64, 0.0).with_noise(phi, 0.05);
        let h = binary_entropy(phi).unwrap();
        for (beta, expect) in [(h + step, true), (h, false), (h - step, false)] {
            p.beta = beta;
            probe(Target::Qot, "beta > h(phi)", &p, expect);
            probe(Target::Qid, "beta > h(phi)", &p, expect);
        }
    }
    (wrong.is_empty(), format!("{} grid points, {} mismatches {:?}", cases, wrong.len(), wrong))
}

fn criterion_11() -> (bool, String) {
    let mut c = lemma("epr");
    c.lemmas.epr_m = 8;
    let (out, _) = exec(&c);
    let names = ["honest receiver is benign with beta 0", "one retained qubit bounds H0 by 1"];
    let pass = names.iter().all(|n| check_passes(&out, n));
    let detail: Vec<String> =
        names.iter().filter_map(|n| out.report.get_check(n)).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    (pass && out.report.pass, format!("{}{}", detail.join("; "), failed_checks(&out)))
}

fn criterion_12() -> (bool, String) {
    let mut parts = Vec::new();
    let mut pass = true;
    for m in [8, 64, 128] {
        let mut c = attack("bqsm", ProtocolKind::Qot, true, 200);
        c.key = KeyPreset::Fast;
        c.params.m = m;
        c.ell = Some(1);
        c.adversary.as_mut().unwrap().gamma = Some(0.25);
        let (out, _) = exec(&c);
        let b = budget_arithmetic(0.25, m, 0.5);
        let ok = check_passes(&out, "memory bound respected")
            && check_passes(&out, "compiled and inner budgets agree")
            && b.equal;
        pass &= ok;
        parts.push(format!("m = {m}: budgets {} / {}", b.compiled_budget, b.inner_budget));
    }
    let mut plain = attack("bqsm", ProtocolKind::Qot, false, 200);
    plain.adversary.as_mut().unwrap().gamma = Some(0.25);
    let (out, _) = exec(&plain);
    pass &= check_passes(&out, "memory bound respected");
    (pass, parts.join(", "))
}

fn criterion_13() -> (bool, String) {
    let mut qot = trials(CommandKind::Run, ProtocolKind::Qot, true, 50);
    qot.key = KeyPreset::Fast;
    qot.params.phi = 0.05;
    qot.params.eps_prime = 0.05;
    let mut qid = attack("delayed", ProtocolKind::Qid, false, 200);
    qid.master_seed = 99;
    let mut epr = lemma("epr");
    epr.lemmas.epr_trials = 500;
    let mut bench = ExperimentConfig { command: CommandKind::CommitBench, ..Default::default() };
    bench.bench.roundtrip_trials = 200;
    bench.bench.extraction_trials = 200;
    bench.bench.trapdoor_trials = 50;
    let mut same = 0;
    let configs = [qot, qid, epr, bench];
    for c in &configs {
        let (a, _) = exec(c);
        let (b, _) = exec(c);
        let ta: Vec<String> = a.transcripts.iter().map(transcript_jsonl).collect();
        let tb: Vec<String> = b.transcripts.iter().map(transcript_jsonl).collect();
        same += usize::from(a.report.to_json() == b.report.to_json() && ta == tb);
    }
    (same == configs.len(), format!("{same}/{} repeated commands byte-identical", configs.len()))
}

fn main() -> ExitCode {
    let criteria: [fn() -> (bool, String); 13] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
        criterion_13,
    ];
    let mut failed = 0;
    for (i, f) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = f();
        failed += usize::from(!pass);
        println!(
            "{} criterion {}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
