//! 1-out-of-2 string oblivious transfer from BB84 qubits.

use std::collections::BTreeMap;

use rand::Rng;

use super::hash::{toeplitz_hash, Family, HashSeed};
use crate::commit::wire::Reader;
use crate::protocol::bb84::{measure_held, AlicePost, BobKnowledge, BobPost, Held, ProtocolSpec};
use crate::protocol::{codec, Ctx, Message, Outgoing, Output, ProtocolError, Role, Schema, Step};
use crate::qsim::{Basis, BasisString, BitString};

pub fn qot_spec() -> ProtocolSpec {
    ProtocolSpec {
        name: "qot",
        bb84_type: true,
        post_schema: Schema::new(&[
            ("theta_reveal", Role::Alice),
            ("index_partition", Role::Bob),
            ("hash_and_masks", Role::Alice),
        ]),
    }
}

/// `f(x|_I)` with `x|_I` zero-padded to the full length.
fn hash_subset(f: &HashSeed, x: &BitString, subset: &[usize]) -> Result<BitString, ProtocolError> {
    toeplitz_hash(f, &x.restrict(subset).padded(f.cols))
}

pub fn encode_partition(i0: &[usize], i1: &[usize]) -> Vec<u8> {
    let mut out = Vec::new();
    codec::put_indices(&mut out, i0);
    codec::put_indices(&mut out, i1);
    out
}

pub fn decode_partition(payload: &[u8]) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    let mut r = Reader::new(payload);
    let i0 = codec::read_indices(&mut r)?;
    let i1 = codec::read_indices(&mut r)?;
    r.finish()?;
    Ok((i0, i1))
}

/// Whether `(i0, i1)` is a partition of `0..n`.
pub fn is_partition(i0: &[usize], i1: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    for &i in i0.iter().chain(i1) {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    seen.into_iter().all(|s| s)
}

enum AliceStage {
    Reveal,
    AwaitPartition,
    Done,
}

pub struct QotAlice {
    s0: BitString,
    s1: BitString,
    x: BitString,
    theta: BasisString,
    stage: AliceStage,
}

pub fn qot_alice(s0: BitString, s1: BitString) -> Result<QotAlice, ProtocolError> {
    if s0.len() != s1.len() {
        return Err(ProtocolError::Argument("sender strings differ in length".into()));
    }
    Ok(QotAlice { s0, s1, x: BitString::default(), theta: BasisString::default(), stage: AliceStage::Reveal })
}

impl AlicePost for QotAlice {
    fn begin(&mut self, x: BitString, theta: BasisString) {
        self.x = x;
        self.theta = theta;
    }

    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        match self.stage {
            AliceStage::Reveal => {
                let mut payload = Vec::new();
                codec::put_bases(&mut payload, &self.theta);
                self.stage = AliceStage::AwaitPartition;
                Ok(Step::Send(vec![Outgoing::new("theta_reveal", payload)]))
            }
            AliceStage::AwaitPartition => {
                let Some(msg) = inbox.iter().find(|m| m.kind == "index_partition") else {
                    return Err(ProtocolError::Framing("expected index_partition".into()));
                };
                let (i0, i1) = decode_partition(&msg.payload)?;
                let n = self.x.len();
                if !is_partition(&i0, &i1, n) {
                    return Ok(Step::Abort("announced sets do not partition the positions".into()));
                }
                let ell = self.s0.len();
                let f0 = HashSeed::random(Family::F, ell, n, ctx.rng);
                let f1 = HashSeed::random(Family::F, ell, n, ctx.rng);
                let m0 = self.s0.xor(&hash_subset(&f0, &self.x, &i0)?)?;
                let m1 = self.s1.xor(&hash_subset(&f1, &self.x, &i1)?)?;
                let mut payload = Vec::new();
                f0.write(&mut payload);
                f1.write(&mut payload);
                codec::put_bits(&mut payload, &m0);
                codec::put_bits(&mut payload, &m1);
                self.stage = AliceStage::Done;
                Ok(Step::Finish(vec![Outgoing::new("hash_and_masks", payload)]))
            }
            AliceStage::Done => Ok(Step::Finish(vec![])),
        }
    }

    fn output(&self) -> Output {
        Output::Nothing
    }
}

enum BobStage {
    AwaitTheta,
    AwaitMasks,
    Done,
}

/// Receiver with choice bit `k`. A greedy receiver also unmasks the other
/// string with whatever it knows about those positions.
pub struct QotBob {
    k: u8,
    greedy: bool,
    knowledge: BobKnowledge,
    claimed: BasisString,
    x_hat: BitString,
    partition: (Vec<usize>, Vec<usize>),
    stage: BobStage,
    output: Output,
}

pub fn qot_bob(k: u8, greedy: bool) -> QotBob {
    QotBob {
        k: k & 1,
        greedy,
        knowledge: BobKnowledge::default(),
        claimed: BasisString::default(),
        x_hat: BitString::default(),
        partition: (Vec::new(), Vec::new()),
        stage: BobStage::AwaitTheta,
        output: Output::Nothing,
    }
}

impl QotBob {
    /// Bases Bob reported through his partition.
    pub fn claimed_bases(&self) -> &BasisString {
        &self.claimed
    }

    pub fn partition(&self) -> &(Vec<usize>, Vec<usize>) {
        &self.partition
    }
}

impl BobPost for QotBob {
    fn begin(&mut self, knowledge: BobKnowledge) {
        self.knowledge = knowledge;
    }

    fn act(&mut self, inbox: &[Message], ctx: &mut Ctx<'_>) -> Result<Step, ProtocolError> {
        match self.stage {
            BobStage::AwaitTheta => {
                let Some(msg) = inbox.iter().find(|m| m.kind == "theta_reveal") else {
                    return Ok(Step::Send(vec![]));
                };
                let mut r = Reader::new(&msg.payload);
                let theta = codec::read_bases(&mut r)?;
                r.finish()?;
                let n = self.knowledge.len();
                if theta.len() != n {
                    return Err(ProtocolError::Framing(format!("{} bases for {n} positions", theta.len())));
                }
                let mut claimed = Vec::with_capacity(n);
                let mut bits = Vec::with_capacity(n);
                for (i, held) in self.knowledge.held.clone().into_iter().enumerate() {
                    match held {
                        Held::Measured { basis, bit } => {
                            claimed.push(basis);
                            bits.push(bit);
                        }
                        Held::Stored(q) => {
                            bits.push(measure_held(ctx, q, theta.get(i))?);
                            claimed.push(Basis::random(ctx.rng));
                        }
                    }
                }
                self.claimed = BasisString::new(claimed);
                self.x_hat = bits.into_iter().collect();
                let good: Vec<usize> = (0..n).filter(|&i| self.claimed.get(i) == theta.get(i)).collect();
                let bad: Vec<usize> = (0..n).filter(|&i| self.claimed.get(i) != theta.get(i)).collect();
                self.partition = if self.k == 0 { (good, bad) } else { (bad, good) };
                self.stage = BobStage::AwaitMasks;
                let payload = encode_partition(&self.partition.0, &self.partition.1);
                Ok(Step::Send(vec![Outgoing::new("index_partition", payload)]))
            }
            BobStage::AwaitMasks => {
                let Some(msg) = inbox.iter().find(|m| m.kind == "hash_and_masks") else {
                    return Err(ProtocolError::Framing("expected hash_and_masks".into()));
                };
                let mut r = Reader::new(&msg.payload);
                let f0 = HashSeed::read(&mut r)?;
                let f1 = HashSeed::read(&mut r)?;
                let m0 = codec::read_bits(&mut r)?;
                let m1 = codec::read_bits(&mut r)?;
                r.finish()?;
                let s0 = m0.xor(&hash_subset(&f0, &self.x_hat, &self.partition.0)?)?;
                let s1 = m1.xor(&hash_subset(&f1, &self.x_hat, &self.partition.1)?)?;
                self.output = if self.greedy {
                    Output::BothStrings(s0, s1)
                } else if self.k == 0 {
                    Output::Bits(s0)
                } else {
                    Output::Bits(s1)
                };
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

/// Choice the ideal-world simulator extracts: the half where Bob's bases
/// agree most with Alice's. Ties go to 0.
pub fn simulator_choice(theta: &BasisString, theta_hat: &BasisString, i0: &[usize], i1: &[usize]) -> u8 {
    let d = |set: &[usize]| set.iter().filter(|&&i| theta.get(i) != theta_hat.get(i)).count();
    u8::from(d(i1) < d(i0))
}

/// Exact distribution of the announced partition for choice `k`, over a
/// uniform `theta_hat` and fixed `theta`.
pub fn partition_distribution(theta: &BasisString, k: u8) -> BTreeMap<(Vec<usize>, Vec<usize>), f64> {
    let n = theta.len();
    assert!(n <= 20, "enumeration over 2^{n} bases");
    let weight = 1.0 / (1u64 << n) as f64;
    let mut dist = BTreeMap::new();
    for v in 0..(1u64 << n) {
        let theta_hat = BasisString::from_bits(&BitString::from_u64(v, n));
        let good: Vec<usize> = (0..n).filter(|&i| theta.get(i) == theta_hat.get(i)).collect();
        let bad: Vec<usize> = (0..n).filter(|&i| theta.get(i) != theta_hat.get(i)).collect();
        let key = if k & 1 == 0 { (good, bad) } else { (bad, good) };
        *dist.entry(key).or_insert(0.0) += weight;
    }
    dist
}

/// Random pair of sender strings.
pub fn random_strings<R: Rng + ?Sized>(ell: usize, rng: &mut R) -> (BitString, BitString) {
    (BitString::random(ell, rng), BitString::random(ell, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_check() {
        assert!(is_partition(&[0, 2], &[1], 3));
        assert!(!is_partition(&[0, 1], &[1, 2], 3));
        assert!(!is_partition(&[0], &[1], 3));
        assert!(!is_partition(&[0, 3], &[1, 2], 3));
        let p = encode_partition(&[2, 0], &[1]);
        assert_eq!(decode_partition(&p).unwrap(), (vec![2, 0], vec![1]));
    }

    #[test]
    fn simulator_ties_to_zero() {
        let theta = BasisString::parse("++xx").unwrap();
        let hat = BasisString::parse("+xx+").unwrap();
        assert_eq!(simulator_choice(&theta, &hat, &[0, 1], &[2, 3]), 0);
        assert_eq!(simulator_choice(&theta, &hat, &[0, 1], &[2]), 1);
    }

    #[test]
    fn partition_law_hides_the_choice() {
        for v in 0..256u64 {
            let theta = BasisString::from_bits(&BitString::from_u64(v, 8));
            let d0 = partition_distribution(&theta, 0);
            let d1 = partition_distribution(&theta, 1);
            assert_eq!(d0.len(), d1.len());
            for (key, p) in &d0 {
                assert!((p - d1.get(key).copied().unwrap_or(0.0)).abs() < 1e-15);
            }
        }
    }
}
