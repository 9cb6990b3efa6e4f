use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcompile::harness::{
    execute, write_outputs, AdversaryConfig, CommandKind, ExperimentConfig, HarnessError, KeyPreset, ProtocolKind,
};

#[derive(Parser)]
#[command(
    name = "qcompile",
    version,
    about = "Commit-and-open compiled BB84 protocols: experiments, attacks and oracle suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Honest trials of a plain or compiled protocol.
    Run(RunArgs),
    /// Trials against a named receiver attack.
    Attack(AttackArgs),
    /// Entropy, sampling and ball-volume oracles.
    VerifyLemmas(LemmaArgs),
    /// Commitment round trips, extraction, hiding distance and trapdoor suites.
    CommitBench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Proto {
    Qot,
    Qid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Key {
    Production,
    Fast,
    Tiny,
}

impl From<Key> for KeyPreset {
    fn from(k: Key) -> Self {
        match k {
            Key::Production => KeyPreset::Production,
            Key::Fast => KeyPreset::Fast,
            Key::Tiny => KeyPreset::Tiny,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for report.json and transcripts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Reject parameters that fail the security inequalities.
    #[arg(long)]
    strict: bool,
    /// Transcripts written per experiment.
    #[arg(long)]
    max_transcripts: Option<usize>,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, value_enum, required_unless_present = "config")]
    protocol: Option<Proto>,
    #[arg(long, conflicts_with = "plain")]
    compiled: bool,
    #[arg(long)]
    plain: bool,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    eps_prime: Option<f64>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    w_bits: Option<usize>,
    /// QID with different passwords on the two sides.
    #[arg(long)]
    unequal: bool,
    /// QID with the extractor MAC.
    #[arg(long)]
    mac: bool,
    /// Commitment parameters for compiled runs.
    #[arg(long, value_enum)]
    key: Option<Key>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Args)]
struct AttackArgs {
    /// honest, delayed, nonmeasuring, partial or bqsm.
    #[arg(long, required_unless_present = "config")]
    name: Option<String>,
    /// Storage rate of the bounded-memory receiver.
    #[arg(long)]
    gamma: Option<f64>,
    /// Stored fraction of the partial-storage receiver.
    #[arg(long)]
    fraction: Option<f64>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Args)]
struct LemmaArgs {
    /// all, superposition, sampling, ball or epr.
    #[arg(long)]
    lemma: Option<String>,
    /// Sampling string length.
    #[arg(long)]
    m: Option<usize>,
    /// Sampling test fraction.
    #[arg(long)]
    alpha: Option<f64>,
    /// Sampling deviation.
    #[arg(long)]
    eps: Option<f64>,
    /// Largest ball length.
    #[arg(long)]
    n: Option<u32>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    key: Option<Key>,
    #[command(flatten)]
    common: Common,
}

fn load(common: &Common, command: CommandKind) -> Result<ExperimentConfig, HarnessError> {
    let mut c = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    c.command = command;
    if let Some(s) = common.seed {
        c.master_seed = s;
    }
    if let Some(t) = common.trials {
        c.trials = t;
    }
    c.strict |= common.strict;
    if let Some(k) = common.max_transcripts {
        c.output.max_transcripts = k;
    }
    if let Some(dir) = &common.out {
        c.output.dir = Some(dir.clone());
    }
    Ok(c)
}

fn apply_protocol(c: &mut ExperimentConfig, a: &ProtocolArgs) {
    if let Some(p) = a.protocol {
        c.protocol = match p {
            Proto::Qot => ProtocolKind::Qot,
            Proto::Qid => ProtocolKind::Qid,
        };
    }
    if a.compiled {
        c.compiled = true;
    }
    if a.plain {
        c.compiled = false;
    }
    let p = &mut c.params;
    if let Some(m) = a.m {
        p.m = m;
    }
    if let Some(n) = a.n {
        p.n = n;
    }
    if let Some(alpha) = a.alpha {
        p.alpha = alpha;
    }
    if let Some(l) = a.lambda {
        p.lambda = l;
    }
    if let Some(phi) = a.phi {
        p.phi = phi;
    }
    if let Some(e) = a.eps_prime {
        p.eps_prime = e;
    }
    if a.ell.is_some() {
        c.ell = a.ell;
    }
    if let Some(w) = a.w_bits {
        c.w_bits = w;
    }
    c.unequal_passwords |= a.unequal;
    c.mac |= a.mac;
    if let Some(k) = a.key {
        c.key = k.into();
    }
}

fn config_from(cli: Cli) -> Result<ExperimentConfig, HarnessError> {
    match cli.command {
        Command::Run(a) => {
            let mut c = load(&a.common, CommandKind::Run)?;
            apply_protocol(&mut c, &a.protocol);
            Ok(c)
        }
        Command::Attack(a) => {
            let mut c = load(&a.common, CommandKind::Attack)?;
            apply_protocol(&mut c, &a.protocol);
            let adv = c.adversary.get_or_insert_with(AdversaryConfig::default);
            if let Some(name) = a.name {
                adv.name = name;
            }
            if a.gamma.is_some() {
                adv.gamma = a.gamma;
            }
            if a.fraction.is_some() {
                adv.fraction = a.fraction;
            }
            Ok(c)
        }
        Command::VerifyLemmas(a) => {
            let mut c = load(&a.common, CommandKind::VerifyLemmas)?;
            if let Some(l) = a.lemma {
                c.lemma = l;
            }
            let s = &mut c.lemmas;
            if let Some(m) = a.m {
                s.sampling_m = m;
            }
            if let Some(alpha) = a.alpha {
                s.sampling_alpha = alpha;
            }
            if let Some(eps) = a.eps {
                s.sampling_eps = eps;
            }
            if let Some(n) = a.n {
                s.ball_n = n;
            }
            if let Some(t) = a.common.trials {
                match c.lemma.as_str() {
                    "superposition" => s.superposition_specs = t,
                    "epr" => s.epr_trials = t,
                    _ => s.sampling_trials = t,
                }
            }
            Ok(c)
        }
        Command::CommitBench(a) => {
            let mut c = load(&a.common, CommandKind::CommitBench)?;
            if let Some(k) = a.key {
                c.key = k.into();
            }
            if let Some(t) = a.common.trials {
                c.bench.roundtrip_trials = t;
                c.bench.extraction_trials = t;
            }
            Ok(c)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config_from(cli).and_then(|config| {
        let output = execute(&config)?;
        if let Some(dir) = &config.output.dir {
            write_outputs(dir, &output)?;
        }
        Ok((config, output))
    });
    match result {
        Ok((config, output)) => {
            for (stage, elapsed) in &output.timings {
                eprintln!("time {stage}: {:.3}s", elapsed.as_secs_f64());
            }
            if config.output.dir.is_none() {
                print!("{}", output.report.to_json());
            }
            for check in &output.report.checks {
                let status = if check.pass { "PASS" } else { "FAIL" };
                println!("{status} {}: {}", check.name, check.detail);
            }
            if output.report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, HarnessError::Usage(_)) {
                eprintln!("see `qcompile --help`");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
