//! The commit-and-test transform of BB84-type protocols.
//!
//! Bob commits to his basis and outcome for every position, Alice asks him to
//! open a random subset, checks consistency where their bases agree, and both
//! discard the tested positions before the inner post-processing runs.

mod validate;

pub use validate::{validate_parameters, Constraint, ParameterReport, Target};

use rand::seq::index;
use rand::Rng;

use crate::adversaries::AttackStrategy;
use crate::commit::{verify_open, CommitKey, Commitment, SecretKey};
use crate::protocol::bb84::{
    decode_commitments, decode_openings, encode_test_subset, AlicePost, BobMode, BobParty, BobPost, Opening,
    ProtocolSpec,
};
use crate::protocol::{
    codec, run_session, test_size, Ctx, Message, Outgoing, Output, Params, Party, ProtocolError, Role, Schema,
    SessionResult, Step,
};
use crate::qsim::{Basis, BasisString, BitString, QuantumState};

/// A BB84-type protocol together with its test fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledProtocol {
    pub inner: ProtocolSpec,
    pub alpha: f64,
    pub schema: Schema,
}

pub fn compile(inner: &ProtocolSpec, alpha: f64) -> Result<CompiledProtocol, ProtocolError> {
    if !inner.bb84_type {
        return Err(ProtocolError::Config(format!("{} is not a BB84-type protocol", inner.name)));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ProtocolError::Config(format!("alpha = {alpha} must lie strictly between 0 and 1")));
    }
    let outer = Schema::new(&[
        ("qubits", Role::Alice),
        ("commitments", Role::Bob),
        ("test_subset", Role::Alice),
        ("openings", Role::Bob),
        ("verdict", Role::Alice),
    ]);
    Ok(CompiledProtocol { inner: inner.clone(), alpha, schema: outer.extend(&inner.post_schema) })
}

/// Uniformly random `ceil(alpha m)`-subset of `0..m`, sorted.
pub fn choose_test_subset<R: Rng + ?Sized>(m: usize, alpha: f64, rng: &mut R) -> Vec<usize> {
    let k = test_size(m, alpha).min(m);
    let mut t = index::sample(rng, m, k).into_vec();
    t.sort_unstable();
    t
}

/// One opened position as seen by Alice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpenedPosition {
    pub index: usize,
    pub basis: Basis,
    pub bit: u8,
    /// The opening verified against its commitment.
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationOutcome {
    pub accepted: bool,
    pub mismatch_count: usize,
    /// Size of the tested positions where the bases agree.
    pub tested_matching: usize,
    pub invalid_openings: usize,
    pub surviving_indices: Vec<usize>,
}

/// Alice's acceptance rule. Without noise every agreeing position must
/// match; with noise the mismatch fraction may reach `phi + eps_prime`.
/// Any invalid opening rejects.
pub fn check_openings(
    theta: &BasisString,
    x: &BitString,
    opened: &[OpenedPosition],
    noise_phi: f64,
    eps_prime: f64,
) -> VerificationOutcome {
    let m = theta.len();
    let mut tested: Vec<usize> = opened.iter().map(|o| o.index).collect();
    tested.sort_unstable();
    let surviving_indices = (0..m).filter(|i| tested.binary_search(i).is_err()).collect();
    let invalid_openings = opened.iter().filter(|o| !o.valid || o.index >= m).count();
    let agreeing: Vec<&OpenedPosition> =
        opened.iter().filter(|o| o.index < m && theta.get(o.index) == o.basis).collect();
    let mismatch_count = agreeing.iter().filter(|o| x.get(o.index) != o.bit).count();
    let tested_matching = agreeing.len();
    let counts_ok = if noise_phi == 0.0 {
        mismatch_count == 0
    } else {
        tested_matching == 0 || mismatch_count as f64 / tested_matching as f64 <= noise_phi + eps_prime + 1e-12
    };
    VerificationOutcome {
        accepted: counts_ok && invalid_openings == 0,
        mismatch_count,
        tested_matching,
        invalid_openings,
        surviving_indices,
    }
}

/// Joint state right after a successful test in the EPR version, before
/// Alice measures the surviving positions.
#[derive(Clone, Debug)]
pub struct EprSnapshot {
    pub state: QuantumState<f64>,
    /// Alice's register index for each surviving position.
    pub alice_qubits: Vec<usize>,
    /// Bob's register index for each surviving position.
    pub bob_qubits: Vec<usize>,
    pub theta: BasisString,
    /// Values extracted from Bob's commitments at the surviving positions.
    pub extracted: Option<(BasisString, BitString)>,
    pub outcome: VerificationOutcome,
}

impl EprSnapshot {
    /// Mismatch fraction on the agreeing tested positions.
    pub fn error_rate(&self) -> f64 {
        if self.outcome.tested_matching == 0 {
            0.0
        } else {
            self.outcome.mismatch_count as f64 / self.outcome.tested_matching as f64
        }
    }
}

pub enum AliceMode {
    Standard,
    /// EPR version. With a secret key Alice also extracts Bob's committed
    /// values for the analysis snapshot.
    Epr {
        secret: Option<SecretKey>,
    },
}

enum Stage {
    Prepare,
    AwaitCommitments,
    AwaitOpenings,
    Post,
}

pub struct CompiledAlice<P> {
    m: usize,
    alpha: f64,
    phi: f64,
    eps_prime: f64,
    key: CommitKey,
    mode: AliceMode,
    pub post: P,
    stage: Stage,
    x: BitString,
    theta: BasisString,
    commitments: Vec<Commitment>,
    pub tested: Vec<usize>,
    pub outcome: Option<VerificationOutcome>,
    pub snapshot: Option<EprSnapshot>,
}

impl<P: AlicePost> CompiledAlice<P> {
    pub fn new(params: &Params, key: CommitKey, mode: AliceMode, post: P) -> Result<Self, ProtocolError> {
        if matches!(mode, AliceMode::Epr { .. }) && params.phi > 0.0 {
            return Err(ProtocolError::Config("the EPR version is defined for the noise-free channel only".into()));
        }
        Ok(Self {
            m: params.m,
            alpha: params.alpha,
            phi: params.phi,
            eps_prime: params.eps_prime,
            key,
            mode,
            post,
            stage: Stage::Prepare,
            x: BitString::default(),
            theta: BasisString::default(),
            commitments: Vec::new(),
            tested: Vec::new(),
            outcome: None,
            snapshot: None,
        })
    }

    pub fn post(&self) -> &P {
        &self.post
    }

    pub fn tested(&self) -> &[usize] {
        &self.tested
    }

    fn prepare(&mut self, ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        self.theta = BasisString::random(self.m, ctx.rng);
        match self.mode {
            AliceMode::Standard => {
                self.x = BitString::random(self.m, ctx.rng);
                ctx.channel.transmit_bb84(&self.x, &self.theta, ctx.link)?;
            }
            AliceMode::Epr { .. } => {
                ctx.link.state = QuantumState::prepare_epr_pairs(self.m)?;
                ctx.link.alice_qubits = (0..self.m).collect();
                ctx.link.bob_qubits = (self.m..2 * self.m).collect();
            }
        }
        self.stage = Stage::AwaitCommitments;
        Ok(Step::Send(vec![Outgoing::new("qubits", codec::encode_u32(self.m as u32))]))
    }

    fn on_commitments(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        let msg = single(inbox, "commitments")?;
        let commitments = decode_commitments(&msg.payload)?;
        if commitments.len() != self.m || commitments.iter().any(|c| c.ciphertexts.len() != 2) {
            return Ok(Step::Abort(format!("expected {} commitments to bit pairs", self.m)));
        }
        self.commitments = commitments;
        self.tested = choose_test_subset(self.m, self.alpha, ctx.rng);
        self.stage = Stage::AwaitOpenings;
        Ok(Step::Send(vec![Outgoing::new("test_subset", encode_test_subset(&self.tested))]))
    }

    fn on_openings(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        let msg = single(inbox, "openings")?;
        let openings = decode_openings(&msg.payload)?;
        let indices: Vec<usize> = openings.iter().map(|o| o.index).collect();
        if indices != self.tested {
            return Ok(reject("openings do not match the test subset"));
        }
        if let AliceMode::Epr { .. } = self.mode {
            // Alice's half of each tested pair is measured in Bob's basis.
            let mut x = vec![0u8; self.m];
            for o in &openings {
                x[o.index] = ctx.link.state.measure_qubit(ctx.link.alice_qubits[o.index], o.basis, ctx.rng)?;
            }
            self.x = x.into_iter().collect();
        }
        let mut opened: Vec<OpenedPosition> = openings
            .iter()
            .map(|o| OpenedPosition { index: o.index, basis: o.basis, bit: o.bit, valid: true })
            .collect();
        let mut outcome = check_openings(&self.theta, &self.x, &opened, self.phi, self.eps_prime);
        if outcome.accepted {
            for (slot, o) in opened.iter_mut().zip(&openings) {
                slot.valid = self.opening_valid(o);
            }
            outcome = check_openings(&self.theta, &self.x, &opened, self.phi, self.eps_prime);
        }
        self.outcome = Some(outcome.clone());
        if !outcome.accepted {
            let reason = if outcome.invalid_openings > 0 { "invalid opening" } else { "test failed" };
            return Ok(reject(reason));
        }
        let survivors = &outcome.surviving_indices;
        if let AliceMode::Epr { secret } = &self.mode {
            let extracted = match secret {
                Some(sk) => {
                    let mut bases = Vec::with_capacity(survivors.len());
                    let mut bits = Vec::with_capacity(survivors.len());
                    for &i in survivors {
                        let (b, x) = crate::commit::extract(sk, &self.commitments[i])?;
                        bases.push(b);
                        bits.push(x);
                    }
                    Some((BasisString::new(bases), bits.into_iter().collect()))
                }
                None => None,
            };
            self.snapshot = Some(EprSnapshot {
                state: ctx.link.state.clone(),
                alice_qubits: survivors.iter().map(|&i| ctx.link.alice_qubits[i]).collect(),
                bob_qubits: survivors.iter().map(|&i| ctx.link.bob_qubits[i]).collect(),
                theta: self.theta.restrict(survivors),
                extracted,
                outcome: outcome.clone(),
            });
            let mut x = self.x.as_slice().to_vec();
            for &i in survivors {
                x[i] = ctx.link.state.measure_qubit(ctx.link.alice_qubits[i], self.theta.get(i), ctx.rng)?;
            }
            self.x = x.into_iter().collect();
        }
        self.post.begin(self.x.restrict(survivors), self.theta.restrict(survivors));
        self.stage = Stage::Post;
        let verdict = Outgoing::new("verdict", vec![1]);
        Ok(match self.post.act(&[], ctx)? {
            Step::Send(mut out) => {
                out.insert(0, verdict);
                Step::Send(out)
            }
            Step::Finish(mut out) => {
                out.insert(0, verdict);
                Step::Finish(out)
            }
            abort => abort,
        })
    }

    fn opening_valid(&self, o: &Opening) -> bool {
        verify_open(&self.key, &self.commitments[o.index], (o.basis, o.bit), &o.randomness)
    }
}

fn single<'m>(inbox: &'m [Message], kind: &str) -> Result<&'m Message, ProtocolError> {
    match inbox {
        [m] if m.kind == kind => Ok(m),
        _ => Err(ProtocolError::Framing(format!("expected a single {kind} message"))),
    }
}

fn reject(reason: &str) -> Step {
    Step::Reject(vec![Outgoing::new("verdict", vec![0])], reason.to_string())
}

impl<P: AlicePost> Party for CompiledAlice<P> {
    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        match self.stage {
            Stage::Prepare => self.prepare(ctx),
            Stage::AwaitCommitments => self.on_commitments(inbox, ctx),
            Stage::AwaitOpenings => self.on_openings(inbox, ctx),
            Stage::Post => self.post.act(inbox, ctx),
        }
    }

    fn output(&self) -> Output {
        match self.stage {
            Stage::Post => self.post.output(),
            _ => Output::Nothing,
        }
    }
}

impl CompiledProtocol {
    pub fn alice<P: AlicePost>(
        &self,
        params: &Params,
        key: &CommitKey,
        post: P,
    ) -> Result<CompiledAlice<P>, ProtocolError> {
        CompiledAlice::new(params, key.clone(), AliceMode::Standard, post)
    }

    pub fn bob<S: AttackStrategy, P: BobPost>(&self, key: &CommitKey, strategy: S, post: P) -> BobParty<S, P> {
        BobParty::new(strategy, post, BobMode::Compiled { key: key.clone() })
    }
}

/// Session result, post-test snapshot and Bob of an EPR-version run.
pub type EprRun<S, PB> = (SessionResult, Option<EprSnapshot>, BobParty<S, PB>);

/// Runs the EPR version of a compiled session and returns the snapshot
/// taken after a successful test.
#[allow(clippy::too_many_arguments)]
pub fn run_epr_version<PA: AlicePost, S: AttackStrategy, PB: BobPost>(
    protocol: &CompiledProtocol,
    params: &Params,
    key: &CommitKey,
    secret: Option<SecretKey>,
    alice_post: PA,
    strategy: S,
    bob_post: PB,
    session_id: &str,
    seed: u64,
) -> Result<EprRun<S, PB>, ProtocolError> {
    let mut alice = CompiledAlice::new(params, key.clone(), AliceMode::Epr { secret }, alice_post)?;
    let mut bob = protocol.bob(key, strategy, bob_post);
    let result = run_session(&mut alice, &mut bob, &protocol.schema, params, session_id, seed, None);
    Ok((result, alice.snapshot.take(), bob))
}

/// Plain or compiled execution of a BB84-type protocol.
#[derive(Clone, Debug)]
pub enum Setup {
    Plain(ProtocolSpec),
    Compiled { protocol: CompiledProtocol, key: CommitKey },
}

impl Setup {
    pub fn schema(&self) -> Schema {
        match self {
            Setup::Plain(spec) => spec.plain_schema(),
            Setup::Compiled { protocol, .. } => protocol.schema.clone(),
        }
    }
}

/// Everything a finished session leaves behind.
pub struct SessionOutcome<S, PA, PB> {
    pub result: SessionResult,
    pub strategy: S,
    pub alice_post: PA,
    pub bob_post: PB,
    /// Alice's test decision in compiled runs.
    pub verification: Option<VerificationOutcome>,
    /// Positions Alice tested in compiled runs.
    pub tested: Vec<usize>,
}

/// Runs one session of `setup` with the given halves and Bob strategy.
#[allow(clippy::too_many_arguments)]
pub fn run_bb84_session<PA: AlicePost, S: AttackStrategy, PB: BobPost>(
    setup: &Setup,
    params: &Params,
    alice_post: PA,
    strategy: S,
    bob_post: PB,
    session_id: &str,
    seed: u64,
    tamper: Option<crate::protocol::Tamper<'_>>,
) -> Result<SessionOutcome<S, PA, PB>, ProtocolError> {
    let schema = setup.schema();
    match setup {
        Setup::Plain(_) => {
            let mut alice = crate::protocol::bb84::PlainAlice::new(params.n, alice_post);
            let mut bob = BobParty::new(strategy, bob_post, BobMode::Plain);
            let result = run_session(&mut alice, &mut bob, &schema, params, session_id, seed, tamper);
            let (strategy, bob_post) = bob.into_parts();
            Ok(SessionOutcome {
                result,
                strategy,
                alice_post: alice.into_post(),
                bob_post,
                verification: None,
                tested: Vec::new(),
            })
        }
        Setup::Compiled { protocol, key } => {
            let mut alice = protocol.alice(params, key, alice_post)?;
            let mut bob = protocol.bob(key, strategy, bob_post);
            let result = run_session(&mut alice, &mut bob, &schema, params, session_id, seed, tamper);
            let (strategy, bob_post) = bob.into_parts();
            let tested = alice.tested.clone();
            Ok(SessionOutcome {
                result,
                strategy,
                verification: alice.outcome.take(),
                alice_post: alice.post,
                bob_post,
                tested,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::chi_square_uniform;
    use crate::protocol::rng_from;

    fn opened(theta: &BasisString, x: &BitString, idx: &[usize], wrong: &[usize]) -> Vec<OpenedPosition> {
        idx.iter()
            .map(|&i| OpenedPosition {
                index: i,
                basis: theta.get(i),
                bit: x.get(i) ^ u8::from(wrong.contains(&i)),
                valid: true,
            })
            .collect()
    }

    #[test]
    fn test_subset_is_uniform() {
        let mut rng = rng_from(11);
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let draws: Vec<usize> = (0..10_000)
            .map(|_| {
                let t = choose_test_subset(4, 0.5, &mut rng);
                pairs.iter().position(|&(a, b)| t == vec![a, b]).expect("sorted pair")
            })
            .collect();
        assert!(chi_square_uniform(&draws, 6).p_value > 1e-3);
    }

    #[test]
    fn test_subset_sizes_and_seeding() {
        let a = choose_test_subset(100, 0.3, &mut rng_from(5));
        assert_eq!(a, choose_test_subset(100, 0.3, &mut rng_from(5)));
        assert_eq!(a.len(), 30);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        // ceil(alpha m) = m - 1 leaves one position.
        assert_eq!(choose_test_subset(10, 0.85, &mut rng_from(6)).len(), 9);
    }

    #[test]
    fn noise_tolerance() {
        let m = 200;
        let theta = BasisString::uniform(Basis::Plus, m);
        let x = BitString::zeros(m);
        let idx: Vec<usize> = (0..100).collect();
        let out = check_openings(&theta, &x, &opened(&theta, &x, &idx, &[0, 1, 2, 3, 4, 5, 6]), 0.05, 0.05);
        assert!(out.accepted);
        assert_eq!((out.mismatch_count, out.tested_matching), (7, 100));
        assert_eq!(out.surviving_indices, (100..m).collect::<Vec<_>>());
        let wrong: Vec<usize> = (0..11).collect();
        assert!(!check_openings(&theta, &x, &opened(&theta, &x, &idx, &wrong), 0.05, 0.05).accepted);
    }

    #[test]
    fn noiseless_rejects_one_mismatch() {
        let theta = BasisString::parse("+x+x").unwrap();
        let x = BitString::parse("0110").unwrap();
        assert!(check_openings(&theta, &x, &opened(&theta, &x, &[0, 1], &[]), 0.0, 0.0).accepted);
        let out = check_openings(&theta, &x, &opened(&theta, &x, &[0, 1], &[1]), 0.0, 0.0);
        assert!(!out.accepted);
        assert_eq!(out.surviving_indices, vec![2, 3]);
    }

    #[test]
    fn other_basis_is_not_checked() {
        let theta = BasisString::parse("++").unwrap();
        let x = BitString::parse("00").unwrap();
        let o = [OpenedPosition { index: 0, basis: Basis::Times, bit: 1, valid: true }];
        let out = check_openings(&theta, &x, &o, 0.0, 0.0);
        assert!(out.accepted);
        assert_eq!(out.tested_matching, 0);
        let bad = [OpenedPosition { valid: false, ..o[0] }];
        assert!(!check_openings(&theta, &x, &bad, 0.0, 0.0).accepted);
    }

    #[test]
    fn compiled_schema_extends_inner() {
        let spec = crate::apps::qot_spec();
        let c = compile(&spec, 0.5).unwrap();
        assert_eq!(c.schema.entries.len(), spec.plain_schema().entries.len() + 4);
        assert!(compile(&spec, 0.0).is_err());
        assert!(compile(&spec, 1.0).is_err());
    }
}
