//! Experiment drivers: configuration, trial execution, statistics and
//! output files for the command-line front end.

mod bench;
mod lemmas;
mod runs;
mod stats;

pub use stats::{
    blind_commit_acceptance, chi_square_uniform, honest_acceptance, two_sample_chi_square, ChiSquare, Metric,
};

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::apps::PasswordCode;
use crate::commit::{CommitError, LweParams};
use crate::compiler::{validate_parameters, Target};
use crate::infotheory::InfoError;
use crate::protocol::jsonl::write_transcript;
use crate::protocol::{derive_seed, string_length, test_size, Params, ProtocolError, Transcript};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags or configuration.
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Commit(#[from] CommitError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    #[default]
    Run,
    Attack,
    VerifyLemmas,
    CommitBench,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    #[default]
    Qot,
    Qid,
}

/// Commitment parameter set for the common reference string.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyPreset {
    #[default]
    Production,
    Fast,
    Tiny,
}

impl KeyPreset {
    pub fn params(self) -> LweParams {
        match self {
            KeyPreset::Production => LweParams::PRODUCTION,
            KeyPreset::Fast => LweParams::FAST,
            KeyPreset::Tiny => LweParams::TINY,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversaryConfig {
    pub name: String,
    /// Storage rate for `bqsm`.
    pub gamma: Option<f64>,
    /// Stored fraction for `partial`.
    pub fraction: Option<f64>,
}

/// Sizes for `verify-lemmas`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaSizes {
    pub superposition_specs: usize,
    pub sampling_m: usize,
    pub sampling_alpha: f64,
    pub sampling_eps: f64,
    pub sampling_disagreement: f64,
    pub sampling_trials: usize,
    pub ball_n: u32,
    pub epr_m: usize,
    pub epr_trials: usize,
}

impl Default for LemmaSizes {
    fn default() -> Self {
        Self {
            superposition_specs: 1000,
            sampling_m: 1024,
            sampling_alpha: 0.25,
            sampling_eps: 0.1,
            sampling_disagreement: 0.1,
            sampling_trials: 100_000,
            ball_n: 20,
            epr_m: 8,
            epr_trials: 10000,
        }
    }
}

/// Sizes for `commit-bench`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSizes {
    pub roundtrip_trials: usize,
    pub extraction_trials: usize,
    pub trapdoor_trials: usize,
    pub trapdoor_vertices: usize,
    pub search_vertices: usize,
    pub search_tries: usize,
    pub sweep_keys: usize,
}

impl Default for BenchSizes {
    fn default() -> Self {
        Self {
            roundtrip_trials: 10_000,
            extraction_trials: 10_000,
            trapdoor_trials: 1000,
            trapdoor_vertices: 8,
            search_vertices: 12,
            search_tries: 1000,
            sweep_keys: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// Directory for `report.json` and transcripts; nothing is written without
    /// it. Read from configs but left out of reports, which must not depend
    /// on where they are written.
    #[serde(skip_serializing)]
    pub dir: Option<PathBuf>,
    /// Transcripts kept per experiment, lowest trial indices first.
    pub max_transcripts: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, max_transcripts: 10 }
    }
}

/// Everything that determines an experiment. The JSON form mirrors the
/// command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub protocol: ProtocolKind,
    pub compiled: bool,
    pub params: Params,
    /// Output length override; otherwise `floor(lambda n)` for QOT and 16 for QID.
    pub ell: Option<usize>,
    pub w_bits: usize,
    /// QID runs where the two passwords differ.
    pub unequal_passwords: bool,
    /// QID with the extractor MAC.
    pub mac: bool,
    pub adversary: Option<AdversaryConfig>,
    /// `all`, `superposition`, `sampling`, `ball` or `epr`.
    pub lemma: String,
    pub lemmas: LemmaSizes,
    pub bench: BenchSizes,
    pub key: KeyPreset,
    pub trials: usize,
    pub master_seed: u64,
    pub strict: bool,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::Run,
            protocol: ProtocolKind::Qot,
            compiled: false,
            params: Params { m: 128, alpha: 0.5, lambda: 0.0625, ..Params::default() },
            ell: None,
            w_bits: 2,
            unequal_passwords: false,
            mac: false,
            adversary: None,
            lemma: "all".into(),
            lemmas: LemmaSizes::default(),
            bench: BenchSizes::default(),
            key: KeyPreset::Production,
            trials: 100,
            master_seed: 1,
            strict: false,
            output: OutputConfig::default(),
        }
    }
}

const QID_DEFAULT_ELL: usize = 16;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Usage(format!("bad config: {e}")))
    }

    pub fn code(&self) -> PasswordCode {
        PasswordCode { password_bits: self.w_bits, n: self.params.n }
    }

    /// Fills in derived parameters and rejects inconsistent settings.
    ///
    /// Compiled runs derive `n` from `m` and `alpha`. Plain runs use `n` if
    /// set and `m` otherwise, with `alpha = 0`.
    pub fn resolved(&self) -> Result<Self, HarnessError> {
        let mut c = self.clone();
        let usage = |s: String| Err(HarnessError::Usage(s));
        if matches!(c.command, CommandKind::VerifyLemmas | CommandKind::CommitBench) {
            return Ok(c);
        }
        if c.trials == 0 {
            return usage("trials must be positive".into());
        }
        let p = &mut c.params;
        if c.compiled {
            if !(p.alpha > 0.0 && p.alpha < 1.0) {
                return usage(format!("alpha {} outside (0, 1)", p.alpha));
            }
            let t = test_size(p.m, p.alpha);
            if t >= p.m {
                return usage(format!("no positions survive testing {t} of {}", p.m));
            }
            p.n = p.m - t;
        } else {
            if p.n == 0 {
                p.n = p.m;
            }
            p.m = p.n;
            p.alpha = 0.0;
        }
        if p.n == 0 {
            return usage("no qubits".into());
        }
        p.seed = c.master_seed;
        p.ell = match (c.protocol, c.ell) {
            (_, Some(ell)) => ell,
            (ProtocolKind::Qot, None) => string_length(p.n, p.lambda),
            (ProtocolKind::Qid, None) => QID_DEFAULT_ELL,
        };
        if c.protocol == ProtocolKind::Qid {
            if c.w_bits == 0 || c.w_bits > 16 || !p.n.is_multiple_of(c.w_bits) {
                return usage(format!("{} password bits must divide n = {} (at most 16 bits)", c.w_bits, p.n));
            }
            let code = PasswordCode { password_bits: c.w_bits, n: p.n };
            p.delta = code.delta();
            p.nu = code.nu();
        }
        p.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        if c.strict {
            let target = match c.protocol {
                ProtocolKind::Qot => Target::Qot,
                ProtocolKind::Qid => Target::Qid,
            };
            let report = validate_parameters(target, &c.params);
            if !report.ok {
                let failed: Vec<&str> =
                    report.constraints.iter().filter(|k| !k.holds).map(|k| k.name.as_str()).collect();
                return usage(format!("parameters violate {}", failed.join(", ")));
            }
        }
        Ok(c)
    }

    /// Seed of trial `index`.
    pub fn trial_seed(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// Machine-readable outcome of one command. Contains no timing, so equal
/// configurations give byte-identical reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub trials: usize,
    pub metrics: BTreeMap<String, Metric>,
    pub checks: Vec<Check>,
    pub details: BTreeMap<String, Value>,
    pub pass: bool,
}

impl StatsReport {
    pub fn new(config: &ExperimentConfig, trials: usize) -> Self {
        Self {
            version: version(),
            config: config.clone(),
            trials,
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            details: BTreeMap::new(),
            pass: true,
        }
    }

    pub fn metric(&mut self, name: &str, metric: Metric) {
        self.metrics.insert(name.into(), metric);
    }

    pub fn check(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn detail(&mut self, name: &str, value: impl Serialize) {
        self.details.insert(name.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Crate version, with `QCOMPILE_GIT_DESCRIBE` appended when it was set at
/// build time.
pub fn version() -> String {
    match option_env!("QCOMPILE_GIT_DESCRIBE") {
        Some(d) if !d.is_empty() => format!("qcompile {} ({d})", env!("CARGO_PKG_VERSION")),
        _ => format!("qcompile {}", env!("CARGO_PKG_VERSION")),
    }
}

pub struct CommandOutput {
    pub report: StatsReport,
    pub transcripts: Vec<Transcript>,
    /// Wall-clock time per stage. Kept out of the report.
    pub timings: Vec<(String, Duration)>,
}

/// Thread pool honouring `QCOMPILE_THREADS`.
fn pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QCOMPILE_THREADS") {
        let n: usize = v.parse().map_err(|_| HarnessError::Usage(format!("QCOMPILE_THREADS={v:?} is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| HarnessError::Usage(e.to_string()))
}

/// Runs one command to completion.
pub fn execute(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let config = config.resolved()?;
    let pool = pool()?;
    pool.install(|| match config.command {
        CommandKind::Run => runs::cmd_run(&config),
        CommandKind::Attack => runs::cmd_attack(&config),
        CommandKind::VerifyLemmas => lemmas::cmd_verify_lemmas(&config),
        CommandKind::CommitBench => bench::cmd_commit_bench(&config),
    })
}

pub fn cmd_run(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    execute(&ExperimentConfig { command: CommandKind::Run, ..config.clone() })
}

pub fn cmd_attack(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    execute(&ExperimentConfig { command: CommandKind::Attack, ..config.clone() })
}

pub fn cmd_verify_lemmas(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    execute(&ExperimentConfig { command: CommandKind::VerifyLemmas, ..config.clone() })
}

pub fn cmd_commit_bench(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    execute(&ExperimentConfig { command: CommandKind::CommitBench, ..config.clone() })
}

/// Writes `report.json` and one `<session>.transcript.jsonl` per kept
/// transcript into `dir`. Returns the written paths.
pub fn write_outputs(dir: &Path, output: &CommandOutput) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let report_path = dir.join("report.json");
    fs::write(&report_path, output.report.to_json())?;
    written.push(report_path);
    for t in &output.transcripts {
        let path = dir.join(format!("{}.transcript.jsonl", t.session_id));
        let mut out = BufWriter::new(fs::File::create(&path)?);
        write_transcript(&mut out, t)?;
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Transcript as JSONL text.
pub fn transcript_jsonl(t: &Transcript) -> String {
    let mut buf = Vec::new();
    write_transcript(&mut buf, t).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_derives_sizes() {
        let c = ExperimentConfig { compiled: true, ..Default::default() }.resolved().unwrap();
        assert_eq!((c.params.m, c.params.n, c.params.ell), (128, 64, 4));
        let p = ExperimentConfig::default().resolved().unwrap();
        assert_eq!((p.params.m, p.params.n, p.params.alpha), (128, 128, 0.0));
        let q = ExperimentConfig {
            protocol: ProtocolKind::Qid,
            params: Params { n: 64, ..Params::default() },
            ..Default::default()
        }
        .resolved()
        .unwrap();
        assert_eq!((q.params.n, q.params.ell), (64, 16));
        assert!((q.params.delta - 15.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn usage_errors() {
        let bad = ExperimentConfig { trials: 0, ..Default::default() };
        assert_eq!(bad.resolved().unwrap_err().exit_code(), 2);
        let bad = ExperimentConfig {
            compiled: true,
            params: Params { m: 8, alpha: 1.0, ..Params::default() },
            ..Default::default()
        };
        assert!(matches!(bad.resolved(), Err(HarnessError::Usage(_))));
        let bad = ExperimentConfig {
            protocol: ProtocolKind::Qid,
            w_bits: 3,
            params: Params { n: 64, ..Params::default() },
            ..Default::default()
        };
        assert!(matches!(bad.resolved(), Err(HarnessError::Usage(_))));
        let strict = ExperimentConfig {
            strict: true,
            params: Params { m: 128, lambda: 0.2, ..Params::default() },
            ..Default::default()
        };
        assert!(matches!(strict.resolved(), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn config_json_roundtrip_with_partial_input() {
        let c = ExperimentConfig::from_json(r#"{"protocol":"qid","params":{"n":32},"trials":5}"#).unwrap();
        assert_eq!(c.protocol, ProtocolKind::Qid);
        assert_eq!((c.params.n, c.trials, c.params.epsilon), (32, 5, 0.1));
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(ExperimentConfig::from_json("{\"trials\":\"x\"}").is_err());
    }
}
