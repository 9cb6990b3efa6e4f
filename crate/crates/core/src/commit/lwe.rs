use rand::Rng;
use serde::Serialize;

use super::wire::{put_u32, put_u32s, Reader};
use super::CommitError;
use crate::qsim::{unpack_bits, Basis};

/// Regev-style parameters. `stat_sec` is the statistical security slack used
/// by [`LweParams::statistically_hiding`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LweParams {
    pub d: usize,
    pub q: u32,
    pub m_lwe: usize,
    pub noise_bound: u32,
    pub stat_sec: usize,
}

impl LweParams {
    /// Default parameters for protocol runs. Sized so that the hiding
    /// inequality and the decryption bound hold at the same time.
    pub const PRODUCTION: LweParams = LweParams { d: 128, q: 65537, m_lwe: 2176, noise_bound: 4, stat_sec: 40 };
    /// Smaller dimension for Monte Carlo suites where the commitment itself is
    /// not under test. Still satisfies both inequalities.
    pub const FAST: LweParams = LweParams { d: 16, q: 65537, m_lwe: 384, noise_bound: 4, stat_sec: 40 };
    /// Enumerable randomness space for exhaustive checks.
    pub const TINY: LweParams = LweParams { d: 2, q: 13, m_lwe: 20, noise_bound: 0, stat_sec: 40 };

    pub fn half_q(&self) -> u32 {
        self.q / 2
    }

    /// Primality, the decryption bound `B m < q/4`, and shape sanity.
    pub fn validate(&self) -> Result<(), CommitError> {
        if self.d == 0 || self.m_lwe == 0 {
            return Err(CommitError::Argument("dimension and sample count must be positive".into()));
        }
        if !is_prime(self.q) {
            return Err(CommitError::Argument(format!("modulus {} is not prime", self.q)));
        }
        if 4 * self.noise_bound as u64 * self.m_lwe as u64 >= self.q as u64 {
            return Err(CommitError::Argument(format!(
                "noise bound {} times {} samples is not below q/4",
                self.noise_bound, self.m_lwe
            )));
        }
        if self.m_lwe as u64 * self.q as u64 >= u32::MAX as u64 {
            return Err(CommitError::Argument("accumulators would overflow".into()));
        }
        Ok(())
    }

    /// `m_lwe >= (d + 1) log2 q + 2 stat_sec`.
    pub fn statistically_hiding(&self) -> bool {
        self.m_lwe as f64 >= (self.d as f64 + 1.0) * (self.q as f64).log2() + 2.0 * self.stat_sec as f64
    }
}

pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= q as u64 {
        if (q as u64).is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KeyMode {
    Hiding,
    Binding,
}

/// Public commitment key. The mode is bookkeeping for tests and reports; it
/// is never serialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitKey {
    pub mode: Option<KeyMode>,
    pub params: LweParams,
    /// Column-major `d x m_lwe` matrix.
    a: Vec<u32>,
    p: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub s: Vec<u32>,
    pub q: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    pub u: Vec<u32>,
    pub c: u32,
}

/// One ciphertext per committed bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Commitment {
    pub ciphertexts: Vec<Ciphertext>,
}

/// Randomness of one ciphertext: `m_lwe` bits packed LSB-first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Randomness {
    pub len: usize,
    pub bytes: Vec<u8>,
}

impl Randomness {
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; len.div_ceil(8)];
        rng.fill(&mut bytes[..]);
        if !len.is_multiple_of(8) {
            if let Some(last) = bytes.last_mut() {
                *last &= (1u8 << (len % 8)) - 1;
            }
        }
        Self { len, bytes }
    }

    pub fn zeros(len: usize) -> Self {
        Self { len, bytes: vec![0; len.div_ceil(8)] }
    }

    /// The `index`-th element of the lexicographic enumeration of `{0,1}^len`.
    pub fn from_index(index: u64, len: usize) -> Self {
        let mut r = Self::zeros(len);
        for i in 0..len.min(64) {
            if (index >> i) & 1 == 1 {
                r.bytes[i / 8] |= 1 << (i % 8);
            }
        }
        r
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.bytes[i / 8] >> (i % 8)) & 1 == 1
    }

    pub fn bits(&self) -> Vec<u8> {
        unpack_bits(&self.bytes, self.len).expect("sized at construction")
    }
}

impl CommitKey {
    pub fn column(&self, j: usize) -> &[u32] {
        let d = self.params.d;
        &self.a[j * d..(j + 1) * d]
    }

    pub fn p(&self) -> &[u32] {
        &self.p
    }

    /// Serialized form: the four parameters, then `A` and `p` as
    /// length-prefixed little-endian `u32` sequences.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * (self.a.len() + self.p.len() + 8));
        put_u32(&mut out, self.params.d as u32);
        put_u32(&mut out, self.params.q);
        put_u32(&mut out, self.params.m_lwe as u32);
        put_u32(&mut out, self.params.noise_bound);
        put_u32s(&mut out, &self.a);
        put_u32s(&mut out, &self.p);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CommitError> {
        let mut r = Reader::new(bytes);
        let params = LweParams {
            d: r.u32()? as usize,
            q: r.u32()?,
            m_lwe: r.u32()? as usize,
            noise_bound: r.u32()?,
            stat_sec: LweParams::PRODUCTION.stat_sec,
        };
        params.validate()?;
        let a = r.u32s()?;
        let p = r.u32s()?;
        r.finish()?;
        if a.len() != params.d * params.m_lwe || p.len() != params.m_lwe {
            return Err(CommitError::Decode("key shape does not match its parameters".into()));
        }
        if a.iter().chain(&p).any(|&x| x >= params.q) {
            return Err(CommitError::Decode("key entry not reduced mod q".into()));
        }
        Ok(Self { mode: None, params, a, p })
    }
}

fn uniform_vec<R: Rng + ?Sized>(len: usize, q: u32, rng: &mut R) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(0..q)).collect()
}

/// Uniform `(A, p)`.
pub fn gen_hiding<R: Rng + ?Sized>(params: &LweParams, rng: &mut R) -> Result<CommitKey, CommitError> {
    params.validate()?;
    let a = uniform_vec(params.d * params.m_lwe, params.q, rng);
    let p = uniform_vec(params.m_lwe, params.q, rng);
    Ok(CommitKey { mode: Some(KeyMode::Hiding), params: *params, a, p })
}

/// `p = s^T A + e` with `e` uniform on `[-B, B]`.
pub fn gen_binding<R: Rng + ?Sized>(params: &LweParams, rng: &mut R) -> Result<(CommitKey, SecretKey), CommitError> {
    params.validate()?;
    let q = params.q as u64;
    let a = uniform_vec(params.d * params.m_lwe, params.q, rng);
    let s = uniform_vec(params.d, params.q, rng);
    let b = params.noise_bound as i64;
    let p = (0..params.m_lwe)
        .map(|j| {
            let col = &a[j * params.d..(j + 1) * params.d];
            let dot = col.iter().zip(&s).fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % q);
            let e = rng.gen_range(-b..=b);
            ((dot as i64 + e).rem_euclid(q as i64)) as u32
        })
        .collect();
    Ok((CommitKey { mode: Some(KeyMode::Binding), params: *params, a, p }, SecretKey { s, q: params.q }))
}

/// `u = A r`, `c = p.r + bit * floor(q/2)`.
pub fn encrypt_bit(pk: &CommitKey, bit: u8, r: &Randomness) -> Ciphertext {
    let d = pk.params.d;
    let q = pk.params.q;
    let mut u = vec![0u32; d];
    let mut c = 0u32;
    // Sums of at most m_lwe values below q fit in u32, checked by validate().
    for j in 0..pk.params.m_lwe.min(r.len) {
        if r.bit(j) {
            for (acc, &x) in u.iter_mut().zip(pk.column(j)) {
                *acc += x;
            }
            c += pk.p[j];
        }
    }
    for x in &mut u {
        *x %= q;
    }
    let c = ((c % q) as u64 + bit as u64 * pk.params.half_q() as u64) % q as u64;
    Ciphertext { u, c: c as u32 }
}

/// Commits bit-wise; `rs` carries one randomness value per bit.
pub fn commit_bits(pk: &CommitKey, bits: &[u8], rs: &[Randomness]) -> Result<Commitment, CommitError> {
    if bits.len() != rs.len() {
        return Err(CommitError::Argument(format!("{} bits but {} randomness values", bits.len(), rs.len())));
    }
    if let Some(r) = rs.iter().find(|r| r.len != pk.params.m_lwe) {
        return Err(CommitError::Argument(format!("randomness of length {} for m_lwe {}", r.len, pk.params.m_lwe)));
    }
    Ok(Commitment { ciphertexts: bits.iter().zip(rs).map(|(&b, r)| encrypt_bit(pk, b & 1, r)).collect() })
}

/// Bits of a (basis, bit) pair in commitment order.
pub fn pair_bits(msg: (Basis, u8)) -> [u8; 2] {
    [msg.0.bit(), msg.1 & 1]
}

/// Commitment to the pair `(basis, bit)` as two ciphertexts.
pub fn commit(pk: &CommitKey, msg: (Basis, u8), r: &[Randomness]) -> Result<Commitment, CommitError> {
    commit_bits(pk, &pair_bits(msg), r)
}

pub fn verify_open_bits(pk: &CommitKey, com: &Commitment, bits: &[u8], rs: &[Randomness]) -> bool {
    match commit_bits(pk, bits, rs) {
        Ok(c) => c == *com,
        Err(_) => false,
    }
}

pub fn verify_open(pk: &CommitKey, com: &Commitment, msg: (Basis, u8), r: &[Randomness]) -> bool {
    verify_open_bits(pk, com, &pair_bits(msg), r)
}

/// Decodes `c - s.u` to the nearer of 0 and `floor(q/2)`.
pub fn decrypt_bit(sk: &SecretKey, ct: &Ciphertext) -> u8 {
    let q = sk.q as u64;
    let su = ct.u.iter().zip(&sk.s).fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % q);
    let v = (ct.c as u64 + q - su) % q;
    let to_zero = v.min(q - v);
    let half = q / 2;
    let to_half = v.abs_diff(half);
    u8::from(to_half < to_zero)
}

pub fn extract_bits(sk: &SecretKey, com: &Commitment) -> Vec<u8> {
    com.ciphertexts.iter().map(|ct| decrypt_bit(sk, ct)).collect()
}

/// Extracts a committed (basis, bit) pair.
pub fn extract(sk: &SecretKey, com: &Commitment) -> Result<(Basis, u8), CommitError> {
    match extract_bits(sk, com)[..] {
        [b, x] => Ok((Basis::from_bit(b), x)),
        _ => Err(CommitError::Argument(format!("pair commitment needs 2 ciphertexts, got {}", com.ciphertexts.len()))),
    }
}

/// Largest randomness space [`hiding_distance`] enumerates.
pub const MAX_ENUMERATED_SAMPLES: usize = 20;
const MAX_CIPHERTEXT_SPACE: u64 = 1 << 16;

/// Exact distribution of a single-bit ciphertext, indexed by `(u, c)` in
/// base `q`. Randomness is walked in Gray-code order so each step adds or
/// removes one column.
fn ciphertext_histogram(pk: &CommitKey, bit: u8) -> Vec<f64> {
    let d = pk.params.d;
    let q = pk.params.q;
    let m = pk.params.m_lwe;
    let space = (q as u64).pow(d as u32 + 1) as usize;
    let mut hist = vec![0f64; space];
    let mut u = vec![0u32; d];
    let mut c = 0u32;
    let weight = 1.0 / (1u64 << m) as f64;
    let shift = (bit as u32 * pk.params.half_q()) % q;
    let index = |u: &[u32], c: u32| -> usize {
        let mut idx = ((c + shift) % q) as usize;
        for &x in u {
            idx = idx * q as usize + x as usize;
        }
        idx
    };
    hist[index(&u, c)] += weight;
    let mut gray = 0u64;
    for step in 1..(1u64 << m) {
        let j = step.trailing_zeros() as usize;
        let adding = (gray >> j) & 1 == 0;
        gray ^= 1 << j;
        let col = pk.column(j);
        for (acc, &x) in u.iter_mut().zip(col) {
            *acc = if adding { (*acc + x) % q } else { (*acc + q - x) % q };
        }
        c = if adding { (c + pk.p[j]) % q } else { (c + q - pk.p[j]) % q };
        hist[index(&u, c)] += weight;
    }
    hist
}

/// Exact statistical distance between the commitment distributions of two
/// (basis, bit) messages, by full enumeration of the randomness.
pub fn hiding_distance(pk: &CommitKey, msg_a: (Basis, u8), msg_b: (Basis, u8)) -> Result<f64, CommitError> {
    let params = pk.params;
    if params.m_lwe > MAX_ENUMERATED_SAMPLES {
        return Err(CommitError::Resource(format!("2^{} randomness values are too many to enumerate", params.m_lwe)));
    }
    let space = (params.q as u64).checked_pow(params.d as u32 + 1);
    if space.is_none_or(|s| s > MAX_CIPHERTEXT_SPACE) {
        return Err(CommitError::Resource("ciphertext space too large for a dense histogram".into()));
    }
    if msg_a == msg_b {
        return Ok(0.0);
    }
    let h = [ciphertext_histogram(pk, 0), ciphertext_histogram(pk, 1)];
    let [a0, a1] = pair_bits(msg_a);
    let [b0, b1] = pair_bits(msg_b);
    let (pa0, pa1, pb0, pb1) = (&h[a0 as usize], &h[a1 as usize], &h[b0 as usize], &h[b1 as usize]);
    if a0 == b0 {
        return Ok(0.5 * pa1.iter().zip(pb1).map(|(x, y)| (x - y).abs()).sum::<f64>());
    }
    if a1 == b1 {
        return Ok(0.5 * pa0.iter().zip(pb0).map(|(x, y)| (x - y).abs()).sum::<f64>());
    }
    let mut total = 0.0;
    for (&xa, &xb) in pa0.iter().zip(pb0) {
        if xa == 0.0 && xb == 0.0 {
            continue;
        }
        total += pa1.iter().zip(pb1).map(|(ya, yb)| (xa * ya - xb * yb).abs()).sum::<f64>();
    }
    Ok(0.5 * total)
}
