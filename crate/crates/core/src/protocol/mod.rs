//! Two-party message passing, transcripts and the session runner.
//!
//! A session alternates turns between Alice and Bob, Alice first. On each turn
//! a party sees the messages sent since its previous turn and answers with a
//! [`Step`]. Quantum traffic travels through the shared [`Link`]; the classical
//! `qubits` message only announces it.

pub mod bb84;
pub mod codec;
mod harness;
mod ideal;
pub mod jsonl;
mod params;
mod seeds;

pub use harness::{correctness_harness, run_sequential, session_id, HarnessReport, SequentialStep, TrialOutcome};
pub use ideal::{ideal_id, ideal_ot};
pub use params::{string_length, test_size, Params};
pub use seeds::{derive_seed, rng_from, splitmix64, SessionRngs};

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commit::CommitError;
use crate::infotheory::InfoError;
use crate::qsim::{BasisString, BitString, QsimError, QuantumState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error(transparent)]
    Quantum(#[from] QsimError),
    #[error(transparent)]
    Commit(#[from] CommitError),
    #[error(transparent)]
    Info(#[from] InfoError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Role::Alice => "A",
            Role::Bob => "B",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Role> {
        match tag {
            "A" => Some(Role::Alice),
            "B" => Some(Role::Bob),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub round: u32,
    pub sender: Role,
    pub kind: String,
    pub payload: Vec<u8>,
}

/// A message before the runner stamps it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outgoing {
    pub kind: &'static str,
    pub payload: Vec<u8>,
}

impl Outgoing {
    pub fn new(kind: &'static str, payload: Vec<u8>) -> Self {
        Self { kind, payload }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Completed,
    AbortedByAlice,
    AbortedByBob,
}

impl Verdict {
    pub fn aborted_by(role: Role) -> Verdict {
        match role {
            Role::Alice => Verdict::AbortedByAlice,
            Role::Bob => Verdict::AbortedByBob,
        }
    }
}

/// What a party walks away with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Output {
    Nothing,
    Bits(BitString),
    /// Both sender strings, recovered by a cheating receiver.
    BothStrings(BitString, BitString),
    Decision(bool),
    /// Index into the dictionary, if a password was identified.
    PasswordGuess(Option<usize>),
}

/// Ordered message log of one session. The verdict can be set once.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub session_id: String,
    pub params: Params,
    messages: Vec<Message>,
    verdict: Option<Verdict>,
    pub abort_reason: Option<String>,
}

impl Transcript {
    pub fn new(session_id: impl Into<String>, params: Params) -> Self {
        Self { session_id: session_id.into(), params, messages: Vec::new(), verdict: None, abort_reason: None }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.verdict
    }

    pub fn push(&mut self, message: Message) -> Result<(), ProtocolError> {
        if self.verdict.is_some() {
            return Err(ProtocolError::Framing("transcript is closed".into()));
        }
        if let Some(last) = self.messages.last() {
            if message.round <= last.round {
                return Err(ProtocolError::Framing(format!(
                    "round {} does not follow round {}",
                    message.round, last.round
                )));
            }
        }
        self.messages.push(message);
        Ok(())
    }

    pub fn set_verdict(&mut self, verdict: Verdict) -> Result<(), ProtocolError> {
        if self.verdict.is_some() {
            return Err(ProtocolError::Framing("verdict already set".into()));
        }
        self.verdict = Some(verdict);
        Ok(())
    }

    pub fn first(&self, kind: &str) -> Option<&Message> {
        self.messages.iter().find(|m| m.kind == kind)
    }

    pub fn count_kind(&self, kind: &str) -> usize {
        self.messages.iter().filter(|m| m.kind == kind).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemaEntry {
    pub kind: &'static str,
    pub sender: Role,
}

/// Message kinds a protocol may emit, in their nominal order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub entries: Vec<SchemaEntry>,
}

impl Schema {
    pub fn new(entries: &[(&'static str, Role)]) -> Self {
        Self { entries: entries.iter().map(|&(kind, sender)| SchemaEntry { kind, sender }).collect() }
    }

    pub fn allows(&self, kind: &str, sender: Role) -> bool {
        self.entries.iter().any(|e| e.kind == kind && e.sender == sender)
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.kind).collect()
    }

    /// Classical interaction rounds, not counting the quantum announcement
    /// and the verdict notice.
    pub fn interaction_rounds(&self) -> usize {
        self.entries.iter().filter(|e| e.kind != "qubits" && e.kind != "verdict").count()
    }

    pub fn is_complete(&self, transcript: &Transcript) -> bool {
        self.entries.iter().all(|e| transcript.messages().iter().any(|m| m.kind == e.kind && m.sender == e.sender))
    }

    pub fn extend(&self, other: &Schema) -> Schema {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().copied());
        Schema { entries }
    }
}

/// Quantum register shared by both parties.
#[derive(Clone, Debug, Default)]
pub struct Link {
    pub state: QuantumState<f64>,
    /// Qubit index of each position held by Bob.
    pub bob_qubits: Vec<usize>,
    /// Qubit index of each position held by Alice (EPR sessions).
    pub alice_qubits: Vec<usize>,
}

/// Bit-flip channel applied to the encoded bit before preparation.
#[derive(Clone, Debug)]
pub struct Channel {
    pub phi: f64,
    rng: ChaCha8Rng,
    pub flips: usize,
}

impl Channel {
    pub fn new(phi: f64, rng: ChaCha8Rng) -> Self {
        Self { phi, rng, flips: 0 }
    }

    /// Sends `|x>_theta` to Bob through the noisy channel.
    pub fn transmit_bb84(&mut self, x: &BitString, theta: &BasisString, link: &mut Link) -> Result<(), ProtocolError> {
        let mut sent = x.clone();
        if self.phi > 0.0 {
            for i in 0..sent.len() {
                if self.rng.gen::<f64>() < self.phi {
                    sent.set(i, sent.get(i) ^ 1);
                    self.flips += 1;
                }
            }
        }
        link.bob_qubits = link.state.append_bb84(&sent, theta)?;
        Ok(())
    }
}

/// Per-turn view of the session handed to a party.
pub struct Ctx<'a> {
    pub link: &'a mut Link,
    pub rng: &'a mut ChaCha8Rng,
    pub channel: &'a mut Channel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Send(Vec<Outgoing>),
    /// Last messages of this party; it takes no further turns.
    Finish(Vec<Outgoing>),
    Abort(String),
    /// Sends a final notice, then aborts.
    Reject(Vec<Outgoing>, String),
}

pub trait Party {
    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError>;
    fn output(&self) -> Output;
}

impl<P: Party + ?Sized> Party for Box<P> {
    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        (**self).act(inbox, ctx)
    }

    fn output(&self) -> Output {
        (**self).output()
    }
}

pub struct SessionResult {
    pub transcript: Transcript,
    pub alice: Output,
    pub bob: Output,
    pub link: Link,
    pub channel_flips: usize,
}

impl SessionResult {
    pub fn verdict(&self) -> Verdict {
        self.transcript.verdict().unwrap_or(Verdict::AbortedByAlice)
    }

    pub fn completed(&self) -> bool {
        self.verdict() == Verdict::Completed
    }
}

pub type Tamper<'a> = &'a mut dyn FnMut(&mut Message);

const MAX_TURNS: usize = 256;

/// Runs one session to a verdict. Party errors, schema violations and
/// stalls all end in an abort.
pub fn run_session(
    alice: &mut dyn Party,
    bob: &mut dyn Party,
    schema: &Schema,
    params: &Params,
    session_id: impl Into<String>,
    session_seed: u64,
    mut tamper: Option<Tamper<'_>>,
) -> SessionResult {
    let rngs = SessionRngs::new(session_seed);
    let (mut rng_a, mut rng_b) = (rngs.alice, rngs.bob);
    let mut channel = Channel::new(params.phi, rngs.channel);
    let mut link = Link::default();
    let mut transcript = Transcript::new(session_id, params.clone());
    let mut inbox: [Vec<Message>; 2] = [Vec::new(), Vec::new()];
    let mut done = [false, false];
    let mut round = 0u32;
    let mut current = Role::Alice;
    let mut idle_turns = 0usize;

    let verdict = 'session: {
        for _ in 0..MAX_TURNS {
            let me = current as usize;
            if done[me] {
                current = current.other();
                continue;
            }
            let pending = std::mem::take(&mut inbox[me]);
            let step = {
                let mut ctx = Ctx {
                    link: &mut link,
                    rng: if current == Role::Alice { &mut rng_a } else { &mut rng_b },
                    channel: &mut channel,
                };
                let party: &mut dyn Party = if current == Role::Alice { &mut *alice } else { &mut *bob };
                party.act(&pending, &mut ctx)
            };
            let (outgoing, finished, rejection) = match step {
                Ok(Step::Send(out)) => (out, false, None),
                Ok(Step::Finish(out)) => (out, true, None),
                Ok(Step::Reject(out, reason)) => (out, false, Some(reason)),
                Ok(Step::Abort(reason)) => {
                    transcript.abort_reason = Some(reason);
                    break 'session Verdict::aborted_by(current);
                }
                Err(e) => {
                    transcript.abort_reason = Some(e.to_string());
                    break 'session Verdict::aborted_by(current);
                }
            };
            for out in &outgoing {
                if !schema.allows(out.kind, current) {
                    transcript.abort_reason =
                        Some(format!("framing error: unexpected {} message from {}", out.kind, current));
                    break 'session Verdict::aborted_by(current.other());
                }
            }
            idle_turns = if outgoing.is_empty() && !finished { idle_turns + 1 } else { 0 };
            for out in outgoing {
                round += 1;
                let mut msg = Message { round, sender: current, kind: out.kind.to_string(), payload: out.payload };
                if let Some(t) = tamper.as_mut() {
                    t(&mut msg);
                }
                transcript.push(msg.clone()).expect("rounds are issued in order");
                inbox[current.other() as usize].push(msg);
            }
            if let Some(reason) = rejection {
                transcript.abort_reason = Some(reason);
                break 'session Verdict::aborted_by(current);
            }
            if finished {
                done[me] = true;
            }
            if done[0] && done[1] {
                break 'session Verdict::Completed;
            }
            if idle_turns >= 2 || (idle_turns >= 1 && done[current.other() as usize]) {
                transcript.abort_reason = Some("deadlock: no party can make progress".into());
                break 'session Verdict::aborted_by(current);
            }
            current = current.other();
        }
        transcript.abort_reason = Some("turn limit exceeded".into());
        Verdict::AbortedByAlice
    };
    transcript.set_verdict(verdict).expect("verdict is set once");
    SessionResult { alice: alice.output(), bob: bob.output(), transcript, link, channel_flips: channel.flips }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sends a fixed list of kinds, one per turn, then finishes.
    struct Scripted {
        script: Vec<&'static str>,
        seen: usize,
    }

    impl Party for Scripted {
        fn act(&mut self, inbox: &[Message], _ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
            self.seen += inbox.len();
            if self.script.is_empty() {
                return Ok(Step::Finish(vec![]));
            }
            let kind = self.script.remove(0);
            if kind == "abort" {
                return Ok(Step::Abort("scripted".into()));
            }
            if kind == "idle" {
                return Ok(Step::Send(vec![]));
            }
            Ok(Step::Send(vec![Outgoing::new(kind, vec![1, 2])]))
        }

        fn output(&self) -> Output {
            Output::Nothing
        }
    }

    fn schema() -> Schema {
        Schema::new(&[("ping", Role::Alice), ("pong", Role::Bob)])
    }

    fn run(a: Vec<&'static str>, b: Vec<&'static str>) -> SessionResult {
        let mut alice = Scripted { script: a, seen: 0 };
        let mut bob = Scripted { script: b, seen: 0 };
        run_session(&mut alice, &mut bob, &schema(), &Params::plain(1, 0.0), "t", 1, None)
    }

    #[test]
    fn completed_exchange() {
        let r = run(vec!["ping", "ping"], vec!["pong"]);
        assert_eq!(r.verdict(), Verdict::Completed);
        let kinds: Vec<_> = r.transcript.messages().iter().map(|m| m.kind.as_str()).collect();
        assert_eq!(kinds, ["ping", "pong", "ping"]);
        let rounds: Vec<_> = r.transcript.messages().iter().map(|m| m.round).collect();
        assert_eq!(rounds, [1, 2, 3]);
        assert!(schema().is_complete(&r.transcript));
    }

    #[test]
    fn aborts_and_framing() {
        assert_eq!(run(vec!["ping"], vec!["abort"]).verdict(), Verdict::AbortedByBob);
        let r = run(vec!["ping"], vec!["ping"]);
        assert_eq!(r.verdict(), Verdict::AbortedByAlice);
        assert!(r.transcript.abort_reason.as_deref().unwrap().contains("framing"));
        assert_eq!(r.transcript.messages().len(), 1);
    }

    #[test]
    fn deadlock_detected() {
        let r = run(vec!["idle", "idle"], vec!["idle", "idle"]);
        assert_eq!(r.verdict(), Verdict::AbortedByBob);
        assert!(r.transcript.abort_reason.unwrap().contains("deadlock"));
    }

    #[test]
    fn transcript_rules() {
        let mut t = Transcript::new("s", Params::plain(1, 0.0));
        let msg = |round| Message { round, sender: Role::Alice, kind: "ping".into(), payload: vec![] };
        t.push(msg(2)).unwrap();
        assert!(t.push(msg(2)).is_err());
        t.set_verdict(Verdict::Completed).unwrap();
        assert!(t.set_verdict(Verdict::AbortedByBob).is_err());
        assert!(t.push(msg(3)).is_err());
    }

    #[test]
    fn channel_flip_rate() {
        let mut ch = Channel::new(0.1, rng_from(5));
        let mut link = Link::default();
        let n = 20_000;
        let x = BitString::zeros(n);
        let theta = BasisString::uniform(crate::qsim::Basis::Plus, n);
        ch.transmit_bb84(&x, &theta, &mut link).unwrap();
        let rate = ch.flips as f64 / n as f64;
        let sigma = (0.1f64 * 0.9 / n as f64).sqrt();
        assert!((rate - 0.1).abs() < 4.0 * sigma, "rate {rate}");
        assert_eq!(link.bob_qubits.len(), n);
    }
}
