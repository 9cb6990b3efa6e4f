//! Classical strings that label BB84 states: bit strings and basis strings.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::QsimError;

/// Conjugate coding basis. `Plus` is the computational basis, `Times` the diagonal one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Plus,
    Times,
}

impl Basis {
    /// `+` is 0 and `x` is 1, so that bases can be XOR-ed like bits.
    pub fn bit(self) -> u8 {
        match self {
            Basis::Plus => 0,
            Basis::Times => 1,
        }
    }

    pub fn from_bit(b: u8) -> Basis {
        if b & 1 == 0 {
            Basis::Plus
        } else {
            Basis::Times
        }
    }

    pub fn flip(self) -> Basis {
        Basis::from_bit(self.bit() ^ 1)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Basis {
        Basis::from_bit(rng.gen::<u8>() & 1)
    }

    pub fn symbol(self) -> char {
        match self {
            Basis::Plus => '+',
            Basis::Times => 'x',
        }
    }
}

fn length_check(a: usize, b: usize) -> Result<(), QsimError> {
    if a == b {
        Ok(())
    } else {
        Err(QsimError::Argument(format!("length mismatch: {a} vs {b}")))
    }
}

/// Packs 0/1 values LSB-first into bytes.
pub fn pack_bits(bits: impl IntoIterator<Item = u8>) -> Vec<u8> {
    let mut out = Vec::new();
    for (i, b) in bits.into_iter().enumerate() {
        if i % 8 == 0 {
            out.push(0);
        }
        if b & 1 == 1 {
            *out.last_mut().expect("pushed above") |= 1 << (i % 8);
        }
    }
    out
}

/// Inverse of [`pack_bits`]; `None` when `bytes` is too short for `len` bits.
pub fn unpack_bits(bytes: &[u8], len: usize) -> Option<Vec<u8>> {
    if bytes.len() * 8 < len {
        return None;
    }
    Some((0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect())
}

/// String of bits, one `u8` (0 or 1) per position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self, QsimError> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(QsimError::Argument(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.gen::<u8>() & 1).collect())
    }

    /// Low `width` bits of `value`, least significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        Self((0..width).map(|i| if i < 64 { ((value >> i) & 1) as u8 } else { 0 }).collect())
    }

    /// Inverse of [`BitString::from_u64`]; only the first 64 positions count.
    pub fn to_u64(&self) -> u64 {
        self.0.iter().take(64).enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self, QsimError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(QsimError::Argument(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, b: u8) {
        self.0[i] = b & 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// `x|_S` for an index list `S` (order preserved).
    pub fn restrict(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn xor(&self, other: &Self) -> Result<Self, QsimError> {
        length_check(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }

    /// Right-pads with zeros up to `len`; a no-op when already that long.
    pub fn padded(&self, len: usize) -> Self {
        let mut v = self.0.clone();
        if v.len() < len {
            v.resize(len, 0);
        }
        Self(v)
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn pack(&self) -> Vec<u8> {
        pack_bits(self.iter())
    }

    pub fn unpack(bytes: &[u8], len: usize) -> Option<Self> {
        unpack_bits(bytes, len).map(Self)
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BitString {
    type Error = QsimError;
    fn try_from(s: String) -> Result<Self, QsimError> {
        BitString::parse(&s)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromIterator<u8> for BitString {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        Self(iter.into_iter().map(|b| b & 1).collect())
    }
}

/// String of bases, one per qubit position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BasisString(Vec<Basis>);

impl BasisString {
    pub fn new(bases: Vec<Basis>) -> Self {
        Self(bases)
    }

    pub fn uniform(basis: Basis, len: usize) -> Self {
        Self(vec![basis; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| Basis::random(rng)).collect())
    }

    /// Parses `+` and `x` (or `×`) characters.
    pub fn parse(s: &str) -> Result<Self, QsimError> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Basis::Plus),
                'x' | '×' => Ok(Basis::Times),
                other => Err(QsimError::Argument(format!("invalid basis character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn from_bits(bits: &BitString) -> Self {
        Self(bits.iter().map(Basis::from_bit).collect())
    }

    pub fn to_bits(&self) -> BitString {
        self.0.iter().map(|b| b.bit()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Basis {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[Basis] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Basis> + '_ {
        self.0.iter().copied()
    }

    pub fn restrict(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    /// Position-wise XOR under `+ = 0`, `x = 1`.
    pub fn xor(&self, other: &Self) -> Result<Self, QsimError> {
        length_check(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| Basis::from_bit(a.bit() ^ b.bit())).collect()))
    }

    /// Indices where the two strings agree.
    pub fn matching_positions(&self, other: &Self) -> Result<Vec<usize>, QsimError> {
        length_check(self.len(), other.len())?;
        Ok((0..self.len()).filter(|&i| self.0[i] == other.0[i]).collect())
    }

    pub fn pack(&self) -> Vec<u8> {
        pack_bits(self.0.iter().map(|b| b.bit()))
    }

    pub fn unpack(bytes: &[u8], len: usize) -> Option<Self> {
        unpack_bits(bytes, len).map(|v| Self(v.into_iter().map(Basis::from_bit).collect()))
    }
}

impl From<BasisString> for String {
    fn from(b: BasisString) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BasisString {
    type Error = QsimError;
    fn try_from(s: String) -> Result<Self, QsimError> {
        BasisString::parse(&s)
    }
}

impl fmt::Display for BasisString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.symbol())?;
        }
        Ok(())
    }
}

impl FromIterator<Basis> for BasisString {
    fn from_iter<I: IntoIterator<Item = Basis>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basis_xor_follows_bit_convention() {
        let a = BasisString::parse("++xx").unwrap();
        let b = BasisString::parse("+x+x").unwrap();
        assert_eq!(a.xor(&b).unwrap().to_string(), "+xx+");
    }

    #[test]
    fn mismatched_xor_is_an_argument_error() {
        let a = BitString::parse("01").unwrap();
        let b = BitString::parse("011").unwrap();
        assert!(matches!(a.xor(&b), Err(QsimError::Argument(_))));
    }

    #[test]
    fn rejects_non_binary_values() {
        assert!(BitString::new(vec![0, 2]).is_err());
        assert!(BitString::parse("01a").is_err());
    }

    #[test]
    fn u64_encoding_is_lsb_first() {
        let b = BitString::from_u64(0b110, 4);
        assert_eq!(b.to_string(), "0110");
        assert_eq!(b.to_u64(), 6);
    }

    proptest! {
        #[test]
        fn packing_roundtrips(bits in proptest::collection::vec(0u8..2, 0..70)) {
            let b = BitString::new(bits).unwrap();
            prop_assert_eq!(BitString::unpack(&b.pack(), b.len()).unwrap(), b.clone());
            let t = BasisString::from_bits(&b);
            prop_assert_eq!(BasisString::unpack(&t.pack(), t.len()).unwrap(), t);
        }
    }
}
