//! Password-based identification with a shifted code.

use rand::Rng;

use super::code::PasswordCode;
use super::hash::{toeplitz_hash, Family, HashSeed};
use super::mac::{extractor_mac_tag, verify_tag, MacKey};
use crate::commit::wire::{put_u32, Reader};
use crate::protocol::bb84::{measure_held, AlicePost, BobKnowledge, BobPost, Held, ProtocolSpec};
use crate::protocol::{codec, Ctx, Message, Outgoing, Output, ProtocolError, Role, Schema, Step};
use crate::qsim::{Basis, BasisString, BitString};

pub fn qid_spec(with_mac: bool) -> ProtocolSpec {
    let mut entries = vec![("kappa", Role::Bob), ("theta_and_f", Role::Alice), ("g", Role::Bob), ("z", Role::Alice)];
    if with_mac {
        entries.push(("mac_tag", Role::Alice));
    }
    ProtocolSpec { name: if with_mac { "qid_mac" } else { "qid" }, bb84_type: true, post_schema: Schema::new(&entries) }
}

/// The unshifted variant, where Bob measures directly in the code word of
/// his password. His bases are not uniform, so it is not BB84-type.
pub fn qid_unshifted_spec() -> ProtocolSpec {
    ProtocolSpec {
        name: "qid_unshifted",
        bb84_type: false,
        post_schema: Schema::new(&[("theta_and_f", Role::Alice), ("g", Role::Bob), ("z", Role::Alice)]),
    }
}

/// `I_w = { i : theta_i = c(w)_i xor kappa_i }`.
pub fn index_set(
    theta: &BasisString,
    code: &PasswordCode,
    w: usize,
    kappa: &BasisString,
) -> Result<Vec<usize>, ProtocolError> {
    let shifted = code.encode(w)?.xor(kappa)?;
    Ok(theta.matching_positions(&shifted)?)
}

fn hash_subset(f: &HashSeed, x: &BitString, subset: &[usize]) -> Result<BitString, ProtocolError> {
    toeplitz_hash(f, &x.restrict(subset).padded(f.cols))
}

fn hash_password(g: &HashSeed, code: &PasswordCode, w: usize) -> Result<BitString, ProtocolError> {
    toeplitz_hash(g, &BitString::from_u64(w as u64, code.password_bits))
}

/// Bytes authenticated by the tag: every classical message of the
/// post-processing in order, then `x|_{I_w}`.
pub fn mac_input(log: &[(String, Vec<u8>)], x_iw: &BitString) -> Vec<u8> {
    let mut out = Vec::new();
    for (kind, payload) in log {
        put_u32(&mut out, kind.len() as u32);
        out.extend_from_slice(kind.as_bytes());
        put_u32(&mut out, payload.len() as u32);
        out.extend_from_slice(payload);
    }
    codec::put_bits(&mut out, x_iw);
    out
}

fn encode_tag(key: &MacKey, tag: u64) -> Vec<u8> {
    let mut out = vec![key.t as u8];
    out.extend_from_slice(&tag.to_le_bytes());
    out
}

fn decode_tag(payload: &[u8]) -> Result<(u32, u64), ProtocolError> {
    let mut r = Reader::new(payload);
    let t = r.u8()? as u32;
    let tag = r.u64()?;
    r.finish()?;
    Ok((t, tag))
}

fn find<'m>(inbox: &'m [Message], kind: &str) -> Option<&'m Message> {
    inbox.iter().find(|m| m.kind == kind)
}

enum AliceStage {
    AwaitKappa,
    AwaitG,
    Done,
}

/// The user proving knowledge of `w`.
pub struct QidAlice {
    w: usize,
    code: PasswordCode,
    ell: usize,
    mac: Option<MacKey>,
    x: BitString,
    theta: BasisString,
    f: Option<HashSeed>,
    i_w: Vec<usize>,
    log: Vec<(String, Vec<u8>)>,
    stage: AliceStage,
}

pub fn qid_alice(w: usize, code: PasswordCode, ell: usize, mac: Option<MacKey>) -> QidAlice {
    QidAlice {
        w,
        code,
        ell,
        mac,
        x: BitString::default(),
        theta: BasisString::default(),
        f: None,
        i_w: Vec::new(),
        log: Vec::new(),
        stage: AliceStage::AwaitKappa,
    }
}

impl AlicePost for QidAlice {
    fn begin(&mut self, x: BitString, theta: BasisString) {
        self.x = x;
        self.theta = theta;
    }

    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        match self.stage {
            AliceStage::AwaitKappa => {
                let Some(msg) = find(inbox, "kappa") else {
                    return Ok(Step::Send(vec![]));
                };
                self.log.push((msg.kind.clone(), msg.payload.clone()));
                let mut r = Reader::new(&msg.payload);
                let kappa = codec::read_bases(&mut r)?;
                r.finish()?;
                if kappa.len() != self.x.len() {
                    return Ok(Step::Abort("shift has the wrong length".into()));
                }
                self.i_w = index_set(&self.theta, &self.code, self.w, &kappa)?;
                let f = HashSeed::random(Family::F, self.ell, self.x.len(), ctx.rng);
                let mut payload = Vec::new();
                codec::put_bases(&mut payload, &self.theta);
                f.write(&mut payload);
                self.f = Some(f);
                self.log.push(("theta_and_f".into(), payload.clone()));
                self.stage = AliceStage::AwaitG;
                Ok(Step::Send(vec![Outgoing::new("theta_and_f", payload)]))
            }
            AliceStage::AwaitG => {
                let Some(msg) = find(inbox, "g") else {
                    return Err(ProtocolError::Framing("expected g".into()));
                };
                self.log.push((msg.kind.clone(), msg.payload.clone()));
                let mut r = Reader::new(&msg.payload);
                let g = HashSeed::read(&mut r)?;
                r.finish()?;
                if g.rows != self.ell || g.cols != self.code.password_bits {
                    return Ok(Step::Abort("g has the wrong shape".into()));
                }
                let f = self.f.as_ref().expect("f is sent before g arrives");
                let x_iw = self.x.restrict(&self.i_w);
                let z = hash_subset(f, &self.x, &self.i_w)?.xor(&hash_password(&g, &self.code, self.w)?)?;
                let z_payload = codec::encode_bits(&z);
                self.log.push(("z".into(), z_payload.clone()));
                let mut out = vec![Outgoing::new("z", z_payload)];
                if let Some(key) = &self.mac {
                    let tag = extractor_mac_tag(key, &mac_input(&self.log, &x_iw))?;
                    out.push(Outgoing::new("mac_tag", encode_tag(key, tag)));
                }
                self.stage = AliceStage::Done;
                Ok(Step::Finish(out))
            }
            AliceStage::Done => Ok(Step::Finish(vec![])),
        }
    }

    fn output(&self) -> Output {
        Output::Nothing
    }
}

/// What the server does with its qubits and the final message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QidBobMode {
    /// Checks the response against its own password.
    Honest { w: usize },
    /// Tests every candidate password against the response.
    Dictionary { candidates: Vec<usize> },
}

enum BobStage {
    Start,
    AwaitTheta,
    AwaitZ,
    Done,
}

pub struct QidBob {
    mode: QidBobMode,
    code: PasswordCode,
    ell: usize,
    mac: Option<MacKey>,
    knowledge: BobKnowledge,
    kappa: BasisString,
    theta: BasisString,
    f: Option<HashSeed>,
    g: Option<HashSeed>,
    x_hat: BitString,
    log: Vec<(String, Vec<u8>)>,
    stage: BobStage,
    output: Output,
    /// Set when the tag check rejected.
    pub mac_rejected: bool,
    /// Every candidate consistent with the response, in dictionary mode.
    pub consistent: Vec<usize>,
}

pub fn qid_bob(mode: QidBobMode, code: PasswordCode, ell: usize, mac: Option<MacKey>) -> QidBob {
    QidBob {
        mode,
        code,
        ell,
        mac,
        knowledge: BobKnowledge::default(),
        kappa: BasisString::default(),
        theta: BasisString::default(),
        f: None,
        g: None,
        x_hat: BitString::default(),
        log: Vec::new(),
        stage: BobStage::Start,
        output: Output::Nothing,
        mac_rejected: false,
        consistent: Vec::new(),
    }
}

impl QidBob {
    pub fn kappa(&self) -> &BasisString {
        &self.kappa
    }

    fn decide(&mut self, z: &BitString, tag: Option<u64>) -> Result<Output, ProtocolError> {
        let f = self.f.as_ref().expect("f precedes z");
        let g = self.g.as_ref().expect("g precedes z");
        match &self.mode {
            QidBobMode::Honest { w } => {
                let w = *w;
                let i_w = index_set(&self.theta, &self.code, w, &self.kappa)?;
                if let Some(key) = &self.mac {
                    let input = mac_input(&self.log, &self.x_hat.restrict(&i_w));
                    if !tag.is_some_and(|t| verify_tag(key, &input, t)) {
                        self.mac_rejected = true;
                        return Ok(Output::Decision(false));
                    }
                }
                let expected = hash_subset(f, &self.x_hat, &i_w)?.xor(&hash_password(g, &self.code, w)?)?;
                Ok(Output::Decision(&expected == z))
            }
            QidBobMode::Dictionary { candidates } => {
                let mut consistent = Vec::new();
                for &c in candidates {
                    let i_c = index_set(&self.theta, &self.code, c, &self.kappa)?;
                    let expected = hash_subset(f, &self.x_hat, &i_c)?.xor(&hash_password(g, &self.code, c)?)?;
                    if &expected == z {
                        consistent.push(c);
                    }
                }
                let guess = consistent.first().copied();
                self.consistent = consistent;
                Ok(Output::PasswordGuess(guess))
            }
        }
    }
}

impl BobPost for QidBob {
    fn begin(&mut self, knowledge: BobKnowledge) {
        self.knowledge = knowledge;
    }

    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        match self.stage {
            BobStage::Start => {
                let n = self.knowledge.len();
                self.kappa = match &self.mode {
                    QidBobMode::Honest { w } => {
                        // Stored positions get a fresh uniform basis, as an honest measurement would.
                        let theta_hat: BasisString = self
                            .knowledge
                            .held
                            .iter()
                            .map(|h| match h {
                                Held::Measured { basis, .. } => *basis,
                                Held::Stored(_) => Basis::random(ctx.rng),
                            })
                            .collect();
                        theta_hat.xor(&self.code.encode(*w)?)?
                    }
                    QidBobMode::Dictionary { .. } => BasisString::random(n, ctx.rng),
                };
                let payload = {
                    let mut p = Vec::new();
                    codec::put_bases(&mut p, &self.kappa);
                    p
                };
                self.log.push(("kappa".into(), payload.clone()));
                self.stage = BobStage::AwaitTheta;
                Ok(Step::Send(vec![Outgoing::new("kappa", payload)]))
            }
            BobStage::AwaitTheta => {
                let Some(msg) = find(inbox, "theta_and_f") else {
                    return Err(ProtocolError::Framing("expected theta_and_f".into()));
                };
                self.log.push((msg.kind.clone(), msg.payload.clone()));
                let mut r = Reader::new(&msg.payload);
                self.theta = codec::read_bases(&mut r)?;
                let f = HashSeed::read(&mut r)?;
                r.finish()?;
                let n = self.knowledge.len();
                if self.theta.len() != n || f.cols != n || f.rows != self.ell {
                    return Ok(Step::Abort("theta or f has the wrong shape".into()));
                }
                self.f = Some(f);
                let mut bits = Vec::with_capacity(n);
                for (i, held) in self.knowledge.held.clone().into_iter().enumerate() {
                    bits.push(match held {
                        Held::Measured { bit, .. } => bit,
                        Held::Stored(q) => measure_held(ctx, q, self.theta.get(i))?,
                    });
                }
                self.x_hat = bits.into_iter().collect();
                let g = HashSeed::random(Family::G, self.ell, self.code.password_bits, ctx.rng);
                let mut payload = Vec::new();
                g.write(&mut payload);
                self.g = Some(g);
                self.log.push(("g".into(), payload.clone()));
                self.stage = BobStage::AwaitZ;
                Ok(Step::Send(vec![Outgoing::new("g", payload)]))
            }
            BobStage::AwaitZ => {
                let Some(msg) = find(inbox, "z") else {
                    return Err(ProtocolError::Framing("expected z".into()));
                };
                self.log.push((msg.kind.clone(), msg.payload.clone()));
                let z = codec::decode_bits(&msg.payload)?;
                let tag = match find(inbox, "mac_tag") {
                    Some(m) => Some(decode_tag(&m.payload)?.1),
                    None => None,
                };
                self.output = self.decide(&z, tag)?;
                self.stage = BobStage::Done;
                Ok(Step::Finish(vec![]))
            }
            BobStage::Done => Ok(Step::Finish(vec![])),
        }
    }

    fn output(&self) -> Output {
        self.output.clone()
    }
}

/// Honest QID parties sharing a MAC key.
pub fn qid_with_mac(
    w_alice: usize,
    w_bob: usize,
    code: PasswordCode,
    ell: usize,
    alice_key: MacKey,
    bob_key: MacKey,
) -> (QidAlice, QidBob) {
    (qid_alice(w_alice, code, ell, Some(alice_key)), qid_bob(QidBobMode::Honest { w: w_bob }, code, ell, Some(bob_key)))
}

/// Uniform password from the code's space.
pub fn random_password<R: Rng + ?Sized>(code: &PasswordCode, rng: &mut R) -> usize {
    rng.gen_range(0..code.size())
}
