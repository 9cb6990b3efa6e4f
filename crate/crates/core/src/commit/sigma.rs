//! Trapdoor commitments built from the graph-isomorphism Sigma-protocol on
//! top of the base scheme.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::lwe::{commit_bits, extract_bits, verify_open_bits, CommitKey, Commitment, Randomness, SecretKey};
use super::CommitError;

/// Undirected simple graph on `0..v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    pub v: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(v: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges = edges.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
        Self { v, edges }
    }

    /// Each edge present independently with probability 1/2.
    pub fn random<R: Rng + ?Sized>(v: usize, rng: &mut R) -> Self {
        let mut edges = BTreeSet::new();
        for a in 0..v {
            for b in a + 1..v {
                if rng.gen::<bool>() {
                    edges.insert((a, b));
                }
            }
        }
        Self { v, edges }
    }

    pub fn path(v: usize) -> Self {
        Self::new(v, (1..v).map(|i| (i - 1, i)))
    }
}

/// Vertex permutation `i -> images[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    pub images: Vec<usize>,
}

fn bits_per_vertex(v: usize) -> usize {
    (usize::BITS - v.saturating_sub(1).leading_zeros()).max(1) as usize
}

impl Permutation {
    pub fn identity(v: usize) -> Self {
        Self { images: (0..v).collect() }
    }

    pub fn random<R: Rng + ?Sized>(v: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (0..v).collect();
        images.shuffle(rng);
        Self { images }
    }

    /// Accepts only bijections of `0..images.len()`.
    pub fn new(images: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return None;
            }
        }
        Some(Self { images })
    }

    pub fn v(&self) -> usize {
        self.images.len()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.v()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    /// `(self . other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn apply(&self, g: &Graph) -> Graph {
        Graph::new(g.v, g.edges.iter().map(|&(a, b)| (self.images[a], self.images[b])))
    }

    /// `ceil(log2 v)` bits per image, least significant first.
    pub fn encode(&self) -> Vec<u8> {
        let k = bits_per_vertex(self.v());
        self.images.iter().flat_map(|&x| (0..k).map(move |i| ((x >> i) & 1) as u8)).collect()
    }

    pub fn decode(bits: &[u8], v: usize) -> Option<Self> {
        let k = bits_per_vertex(v);
        if bits.len() != k * v {
            return None;
        }
        let images = bits
            .chunks(k)
            .map(|c| c.iter().enumerate().fold(0usize, |acc, (i, &b)| acc | ((b as usize & 1) << i)))
            .collect();
        Self::new(images)
    }
}

pub fn encoded_len(v: usize) -> usize {
    bits_per_vertex(v) * v
}

/// Pair of graphs; the witness, when present, satisfies `g1 = w(g0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaInstance {
    pub g0: Graph,
    pub g1: Graph,
    pub witness: Option<Permutation>,
}

impl SigmaInstance {
    pub fn public(&self) -> SigmaInstance {
        SigmaInstance { g0: self.g0.clone(), g1: self.g1.clone(), witness: None }
    }

    pub fn graph(&self, b: u8) -> &Graph {
        if b == 0 {
            &self.g0
        } else {
            &self.g1
        }
    }

    pub fn v(&self) -> usize {
        self.g0.v
    }
}

/// `(u, w)` with a random graph and a random isomorphism.
pub fn trapdoor_gen<R: Rng + ?Sized>(v: usize, rng: &mut R) -> Result<(SigmaInstance, SigmaInstance), CommitError> {
    if v < 4 {
        return Err(CommitError::Argument(format!("need at least 4 vertices, got {v}")));
    }
    let g0 = Graph::random(v, rng);
    let w = Permutation::random(v, rng);
    let g1 = w.apply(&g0);
    let inst = SigmaInstance { g0, g1, witness: Some(w) };
    let public = inst.public();
    Ok((inst, public))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrapCommitment {
    pub a: Graph,
    pub c0: Commitment,
    pub c1: Commitment,
}

impl TrapCommitment {
    pub fn slot(&self, b: u8) -> &Commitment {
        if b == 0 {
            &self.c0
        } else {
            &self.c1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrapOpening {
    pub b: u8,
    pub z: Permutation,
    pub r: Vec<Randomness>,
}

fn fresh_randomness<R: Rng + ?Sized>(pk: &CommitKey, count: usize, rng: &mut R) -> Vec<Randomness> {
    (0..count).map(|_| Randomness::random(pk.params.m_lwe, rng)).collect()
}

/// Commits to bit `b` through a simulated conversation `(a, b, z)`.
pub fn tcommit<R: Rng + ?Sized>(
    pk: &CommitKey,
    instance: &SigmaInstance,
    b: u8,
    rng: &mut R,
) -> Result<(TrapCommitment, TrapOpening), CommitError> {
    let b = b & 1;
    let v = instance.v();
    let z = Permutation::random(v, rng);
    let a = z.apply(instance.graph(b));
    let len = encoded_len(v);
    let r_real = fresh_randomness(pk, len, rng);
    let r_zero = fresh_randomness(pk, len, rng);
    let real = commit_bits(pk, &z.encode(), &r_real)?;
    let zero = commit_bits(pk, &vec![0; len], &r_zero)?;
    let (c0, c1) = if b == 0 { (real, zero) } else { (zero, real) };
    Ok((TrapCommitment { a, c0, c1 }, TrapOpening { b, z, r: r_real }))
}

/// Accepts iff the opened slot holds `z` and `(a, b, z)` is an accepting
/// conversation.
pub fn topen(pk: &CommitKey, instance: &SigmaInstance, com: &TrapCommitment, opening: &TrapOpening) -> bool {
    if opening.z.v() != instance.v() {
        return false;
    }
    verify_open_bits(pk, com.slot(opening.b), &opening.z.encode(), &opening.r)
        && opening.z.apply(instance.graph(opening.b)) == com.a
}

/// With the witness, a commitment that opens to both bits.
pub fn tequivocate<R: Rng + ?Sized>(
    pk: &CommitKey,
    instance: &SigmaInstance,
    rng: &mut R,
) -> Result<(TrapCommitment, TrapOpening, TrapOpening), CommitError> {
    let w = instance.witness.as_ref().ok_or_else(|| CommitError::Argument("equivocation needs the witness".into()))?;
    let v = instance.v();
    let pi = Permutation::random(v, rng);
    let a = pi.apply(&instance.g0);
    let z0 = pi.clone();
    let z1 = pi.compose(&w.inverse());
    let len = encoded_len(v);
    let r0 = fresh_randomness(pk, len, rng);
    let r1 = fresh_randomness(pk, len, rng);
    let c0 = commit_bits(pk, &z0.encode(), &r0)?;
    let c1 = commit_bits(pk, &z1.encode(), &r1)?;
    Ok((TrapCommitment { a, c0, c1 }, TrapOpening { b: 0, z: z0, r: r0 }, TrapOpening { b: 1, z: z1, r: r1 }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extracted {
    Bit(u8),
    /// Both slots hold accepting replies: evidence of a binding break.
    Both,
}

/// Decrypts both slots and reports which of them holds an accepting reply.
pub fn textract(sk: &SecretKey, instance: &SigmaInstance, com: &TrapCommitment) -> Result<Extracted, CommitError> {
    let v = instance.v();
    let valid =
        |b: u8| Permutation::decode(&extract_bits(sk, com.slot(b)), v).filter(|z| z.apply(instance.graph(b)) == com.a);
    match (valid(0), valid(1)) {
        (Some(_), Some(_)) => Ok(Extracted::Both),
        (Some(_), None) => Ok(Extracted::Bit(0)),
        (None, Some(_)) => Ok(Extracted::Bit(1)),
        (None, None) => Err(CommitError::InvalidCommitment("neither slot holds an accepting reply".into())),
    }
}

/// Isomorphism `z1^-1 . z0` from two accepting replies to the same `a`.
pub fn special_soundness(z0: &Permutation, z1: &Permutation) -> Permutation {
    z1.inverse().compose(z0)
}

/// Witness-free attempt at a dual opening: for a random `pi`, look for a
/// random `sigma` with `sigma(G1) = pi(G0)`. Returns whether one was found.
pub fn equivocation_search<R: Rng + ?Sized>(instance: &SigmaInstance, tries: usize, rng: &mut R) -> bool {
    let v = instance.v();
    let target = Permutation::random(v, rng).apply(&instance.g0);
    (0..tries).any(|_| Permutation::random(v, rng).apply(&instance.g1) == target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commit::{gen_binding, gen_hiding, LweParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_shift() {
        let g = Graph::path(4);
        let w = Permutation::new(vec![1, 2, 3, 0]).unwrap();
        assert_eq!(w.apply(&g), Graph::new(4, [(1, 2), (2, 3), (3, 0)]));
    }

    #[test]
    fn witnesses_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (inst, public) = trapdoor_gen(6, &mut rng).unwrap();
            assert_eq!(inst.witness.as_ref().unwrap().apply(&inst.g0), inst.g1);
            assert!(public.witness.is_none());
        }
        assert!(trapdoor_gen(3, &mut rng).is_err());
    }

    #[test]
    fn permutation_encoding_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for v in [4, 5, 8, 9, 12] {
            let p = Permutation::random(v, &mut rng);
            assert_eq!(p.encode().len(), encoded_len(v));
            assert_eq!(Permutation::decode(&p.encode(), v), Some(p));
        }
        assert_eq!(Permutation::decode(&[0; 8], 4), None);
    }

    #[test]
    fn commit_open_extract() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (pk, sk) = gen_binding(&LweParams::FAST, &mut rng).unwrap();
        let (_, public) = trapdoor_gen(6, &mut rng).unwrap();
        for b in [0u8, 1] {
            let (com, op) = tcommit(&pk, &public, b, &mut rng).unwrap();
            assert!(topen(&pk, &public, &com, &op));
            assert_eq!(op.z.apply(public.graph(b)), com.a);
            assert_eq!(com.c0.ciphertexts.len(), com.c1.ciphertexts.len());
            assert_eq!(textract(&sk, &public, &com).unwrap(), Extracted::Bit(b));
            let mut wrong = op.clone();
            wrong.b ^= 1;
            assert!(!topen(&pk, &public, &com, &wrong));
        }
    }

    #[test]
    fn equivocation_opens_both_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (pk, sk) = gen_binding(&LweParams::FAST, &mut rng).unwrap();
        let (inst, public) = trapdoor_gen(6, &mut rng).unwrap();
        let (com, o0, o1) = tequivocate(&pk, &inst, &mut rng).unwrap();
        assert!(topen(&pk, &public, &com, &o0));
        assert!(topen(&pk, &public, &com, &o1));
        assert_eq!(textract(&sk, &public, &com).unwrap(), Extracted::Both);
        let w = special_soundness(&o0.z, &o1.z);
        assert_eq!(w.apply(&public.g0), public.g1);
        assert!(tequivocate(&pk, &public, &mut rng).is_err());
    }

    #[test]
    fn garbage_is_invalid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (pk, sk) = gen_binding(&LweParams::FAST, &mut rng).unwrap();
        let (_, public) = trapdoor_gen(6, &mut rng).unwrap();
        let len = encoded_len(6);
        let rs: Vec<Randomness> = (0..len).map(|_| Randomness::random(pk.params.m_lwe, &mut rng)).collect();
        let junk = commit_bits(&pk, &vec![1; len], &rs).unwrap();
        let com = TrapCommitment { a: public.g0.clone(), c0: junk.clone(), c1: junk };
        assert!(matches!(textract(&sk, &public, &com), Err(CommitError::InvalidCommitment(_))));
        let _ = gen_hiding(&LweParams::FAST, &mut rng).unwrap();
    }

    #[test]
    fn no_dual_openings_without_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut found = 0;
        for _ in 0..5 {
            let (_, public) = trapdoor_gen(12, &mut rng).unwrap();
            if equivocation_search(&public, 1000, &mut rng) {
                found += 1;
            }
        }
        assert_eq!(found, 0);
    }
}
