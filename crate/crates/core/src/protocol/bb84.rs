//! Shared skeleton of BB84-type protocols.
//!
//! Alice sends `|x>_theta`, Bob measures in bases of his choice, and a
//! classical post-processing phase follows. The post-processing halves are
//! separate state machines so that the same code runs in the plain and in the
//! compiled protocol.

use rand::Rng;

use super::{codec, Ctx, Message, Outgoing, Output, Party, ProtocolError, Schema, Step};
use crate::adversaries::AttackStrategy;
use crate::commit::wire::{put_u32, Reader};
use crate::commit::{commit, CommitKey, Commitment, Randomness};
use crate::qsim::{Basis, BasisString, BitString};

/// What Bob holds for one position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Held {
    Measured {
        basis: Basis,
        bit: u8,
    },
    /// Unmeasured qubit at this register index.
    Stored(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BobKnowledge {
    pub held: Vec<Held>,
}

impl BobKnowledge {
    pub fn measured(theta_hat: &BasisString, x_hat: &BitString) -> Self {
        Self { held: theta_hat.iter().zip(x_hat.iter()).map(|(basis, bit)| Held::Measured { basis, bit }).collect() }
    }

    pub fn stored(qubits: &[usize]) -> Self {
        Self { held: qubits.iter().map(|&q| Held::Stored(q)).collect() }
    }

    pub fn len(&self) -> usize {
        self.held.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty()
    }

    pub fn stored_count(&self) -> usize {
        self.held.iter().filter(|h| matches!(h, Held::Stored(_))).count()
    }
}

/// Measures a qubit Bob claims to hold. A qubit that was already consumed
/// collapsed to its record, so it answers consistently in the recorded basis
/// and uniformly otherwise.
pub fn measure_held(ctx: &mut Ctx<'_>, q: usize, basis: Basis) -> Result<u8, ProtocolError> {
    if let Some(rec) = ctx.link.state.record(q) {
        return Ok(if rec.basis == basis { rec.bit } else { ctx.rng.gen_range(0..2) });
    }
    Ok(ctx.link.state.measure_qubit(q, basis, ctx.rng)?)
}

/// Alice's half of the post-processing.
pub trait AlicePost {
    /// Hands over `x` and `theta` on the positions still in play.
    fn begin(&mut self, x: BitString, theta: BasisString);
    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError>;
    fn output(&self) -> Output;
}

/// Bob's half of the post-processing.
pub trait BobPost {
    fn begin(&mut self, knowledge: BobKnowledge);
    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError>;
    fn output(&self) -> Output;
}

/// Static description of a protocol. Only BB84-type protocols compile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolSpec {
    pub name: &'static str,
    pub bb84_type: bool,
    /// Post-processing messages, after the `qubits` announcement.
    pub post_schema: Schema,
}

impl ProtocolSpec {
    pub fn plain_schema(&self) -> Schema {
        Schema::new(&[("qubits", super::Role::Alice)]).extend(&self.post_schema)
    }
}

enum AliceStage {
    Prepare,
    Post,
}

/// Alice of the uncompiled protocol.
pub struct PlainAlice<P> {
    n: usize,
    post: P,
    stage: AliceStage,
}

impl<P: AlicePost> PlainAlice<P> {
    pub fn new(n: usize, post: P) -> Self {
        Self { n, post, stage: AliceStage::Prepare }
    }

    pub fn post(&self) -> &P {
        &self.post
    }

    pub fn into_post(self) -> P {
        self.post
    }
}

impl<P: AlicePost> Party for PlainAlice<P> {
    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        match self.stage {
            AliceStage::Prepare => {
                let x = BitString::random(self.n, ctx.rng);
                let theta = BasisString::random(self.n, ctx.rng);
                ctx.channel.transmit_bb84(&x, &theta, ctx.link)?;
                self.post.begin(x, theta);
                self.stage = AliceStage::Post;
                Ok(Step::Send(vec![Outgoing::new("qubits", codec::encode_u32(self.n as u32))]))
            }
            AliceStage::Post => self.post.act(inbox, ctx),
        }
    }

    fn output(&self) -> Output {
        self.post.output()
    }
}

/// How Bob's commitment phase is configured.
pub enum BobMode {
    Plain,
    Compiled { key: CommitKey },
}

enum BobStage {
    AwaitQubits,
    AwaitTest,
    AwaitVerdict,
    Post,
}

struct Committed {
    theta_hat: BasisString,
    x_hat: BitString,
    randomness: Vec<[Randomness; 2]>,
}

/// Bob driven by an attack strategy; the honest strategy gives honest Bob.
pub struct BobParty<S, P> {
    pub strategy: S,
    post: P,
    mode: BobMode,
    stage: BobStage,
    committed: Option<Committed>,
    tested: Vec<usize>,
    positions: usize,
}

impl<S: AttackStrategy, P: BobPost> BobParty<S, P> {
    pub fn new(strategy: S, post: P, mode: BobMode) -> Self {
        Self { strategy, post, mode, stage: BobStage::AwaitQubits, committed: None, tested: Vec::new(), positions: 0 }
    }

    pub fn post(&self) -> &P {
        &self.post
    }

    pub fn into_parts(self) -> (S, P) {
        (self.strategy, self.post)
    }

    fn expect<'m>(inbox: &'m [Message], kind: &str) -> Result<(&'m Message, &'m [Message]), ProtocolError> {
        match inbox.split_first() {
            Some((first, rest)) if first.kind == kind => Ok((first, rest)),
            Some((first, _)) => Err(ProtocolError::Framing(format!("expected {kind}, got {}", first.kind))),
            None => Err(ProtocolError::Framing(format!("expected {kind}, got nothing"))),
        }
    }

    fn on_qubits(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        let (msg, rest) = Self::expect(inbox, "qubits")?;
        let count = codec::decode_u32(&msg.payload)? as usize;
        let qubits = if ctx.link.bob_qubits.len() == count {
            ctx.link.bob_qubits.clone()
        } else {
            return Err(ProtocolError::Framing(format!(
                "announced {count} qubits but {} arrived",
                ctx.link.bob_qubits.len()
            )));
        };
        self.positions = count;
        self.strategy.receive_qubits(&qubits, ctx)?;
        let BobMode::Compiled { key } = &self.mode else {
            let all: Vec<usize> = (0..count).collect();
            let knowledge = self.strategy.knowledge(&all, ctx)?;
            self.post.begin(knowledge);
            self.stage = BobStage::Post;
            return self.post.act(rest, ctx);
        };
        let Some((theta_hat, x_hat)) = self.strategy.commit_values(ctx)? else {
            return Ok(Step::Abort("strategy has no commitment policy".into()));
        };
        if theta_hat.len() != count || x_hat.len() != count {
            return Err(ProtocolError::Argument("commitment values do not cover every position".into()));
        }
        let len = key.params.m_lwe;
        let mut payload = Vec::new();
        put_u32(&mut payload, count as u32);
        let mut randomness = Vec::with_capacity(count);
        for i in 0..count {
            let r = [Randomness::random(len, ctx.rng), Randomness::random(len, ctx.rng)];
            commit(key, (theta_hat.get(i), x_hat.get(i)), &r)?.write(&mut payload);
            randomness.push(r);
        }
        self.committed = Some(Committed { theta_hat, x_hat, randomness });
        self.stage = BobStage::AwaitTest;
        Ok(Step::Send(vec![Outgoing::new("commitments", payload)]))
    }

    fn on_test(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        let (msg, _) = Self::expect(inbox, "test_subset")?;
        let tested = decode_test_subset(&msg.payload, self.positions)?;
        let committed = self.committed.as_ref().expect("commitments precede the test");
        let values = self.strategy.open_values(&tested, (&committed.theta_hat, &committed.x_hat), ctx)?;
        if values.len() != tested.len() {
            return Err(ProtocolError::Argument("one opening per tested position is required".into()));
        }
        let openings: Vec<Opening> = tested
            .iter()
            .zip(values)
            .map(|(&i, (basis, bit))| Opening { index: i, basis, bit, randomness: committed.randomness[i].clone() })
            .collect();
        self.tested = tested;
        self.stage = BobStage::AwaitVerdict;
        Ok(Step::Send(vec![Outgoing::new("openings", encode_openings(&openings))]))
    }

    fn on_verdict(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        let (msg, rest) = Self::expect(inbox, "verdict")?;
        if msg.payload != [1] {
            return Ok(Step::Finish(vec![]));
        }
        let survivors: Vec<usize> = (0..self.positions).filter(|i| self.tested.binary_search(i).is_err()).collect();
        let knowledge = self.strategy.knowledge(&survivors, ctx)?;
        self.post.begin(knowledge);
        self.stage = BobStage::Post;
        self.post.act(rest, ctx)
    }
}

impl<S: AttackStrategy, P: BobPost> Party for BobParty<S, P> {
    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        match self.stage {
            BobStage::AwaitQubits => self.on_qubits(inbox, ctx),
            BobStage::AwaitTest => self.on_test(inbox, ctx),
            BobStage::AwaitVerdict => self.on_verdict(inbox, ctx),
            BobStage::Post => self.post.act(inbox, ctx),
        }
    }

    fn output(&self) -> Output {
        self.post.output()
    }
}

/// Opening of the commitment at one tested position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub index: usize,
    pub basis: Basis,
    pub bit: u8,
    pub randomness: [Randomness; 2],
}

pub fn encode_test_subset(tested: &[usize]) -> Vec<u8> {
    let mut out = Vec::new();
    codec::put_indices(&mut out, tested);
    out
}

/// Parses a test subset; it must be strictly increasing and inside `0..m`.
pub fn decode_test_subset(payload: &[u8], m: usize) -> Result<Vec<usize>, ProtocolError> {
    let mut r = Reader::new(payload);
    let tested = codec::read_indices(&mut r)?;
    r.finish()?;
    if tested.windows(2).any(|w| w[0] >= w[1]) || tested.last().is_some_and(|&i| i >= m) {
        return Err(ProtocolError::Decode("test subset is not an increasing subset of the positions".into()));
    }
    Ok(tested)
}

pub fn encode_commitments(commitments: &[Commitment]) -> Vec<u8> {
    let mut out = Vec::new();
    put_u32(&mut out, commitments.len() as u32);
    for c in commitments {
        c.write(&mut out);
    }
    out
}

pub fn decode_commitments(payload: &[u8]) -> Result<Vec<Commitment>, ProtocolError> {
    let mut r = Reader::new(payload);
    let count = r.u32()? as usize;
    let commitments = (0..count).map(|_| Commitment::read(&mut r)).collect::<Result<Vec<_>, _>>()?;
    r.finish()?;
    Ok(commitments)
}

pub fn encode_openings(openings: &[Opening]) -> Vec<u8> {
    let mut out = Vec::new();
    put_u32(&mut out, openings.len() as u32);
    for o in openings {
        put_u32(&mut out, o.index as u32);
        out.push(o.basis.bit());
        out.push(o.bit);
        o.randomness[0].write(&mut out);
        o.randomness[1].write(&mut out);
    }
    out
}

pub fn decode_openings(payload: &[u8]) -> Result<Vec<Opening>, ProtocolError> {
    let mut r = Reader::new(payload);
    let count = r.u32()? as usize;
    let mut openings = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let index = r.u32()? as usize;
        let basis = r.u8()?;
        let bit = r.u8()?;
        if basis > 1 || bit > 1 {
            return Err(ProtocolError::Decode("opened value is not a bit".into()));
        }
        let randomness = [Randomness::read(&mut r)?, Randomness::read(&mut r)?];
        openings.push(Opening { index, basis: Basis::from_bit(basis), bit, randomness });
    }
    r.finish()?;
    Ok(openings)
}
